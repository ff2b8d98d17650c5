"""Regenerate the checked-in mesh files under src/hbforms/data."""
from pathlib import Path

from hbforms.meshes import MeshSpec, corners, diagonal, three_lines, bulge

OUT = Path(__file__).resolve().parents[1] / "src" / "hbforms" / "data"


def goldens() -> dict[str, MeshSpec]:
    g = {}
    g["counterexample"] = diagonal(9, 3, block=4, overlap=2, offset=1, count=2)
    g["counterexample"].description = (
        "Two 4x4 blocks overlapping in 2x2 elements on a 9x9 mesh, p=3; the sequence is not exact.")
    g["two_blocks_exact"] = diagonal(9, 3, block=4, overlap=1, offset=1, count=2)
    g["two_blocks_exact"].description = "Two 4x4 blocks sharing one element on a 9x9 mesh, p=3; exact."
    g["assumptions_a"] = diagonal(8, 3, block=2, overlap=0, offset=2, count=2)
    g["assumptions_a"].description = "Two 2x2 blocks touching at a corner, p=3: fails both local conditions."
    g["assumptions_b"] = diagonal(10, 3, block=3, overlap=0, offset=2, count=2)
    g["assumptions_b"].description = "Two 3x3 blocks touching at a corner, p=3: covering holds, overlap condition fails."
    g["assumptions_c"] = diagonal(10, 3, block=4, overlap=3, offset=1, count=2)
    g["assumptions_c"].description = "Two 4x4 blocks shifted by one element, p=3: both local conditions hold."
    for name, bul in (("maxwell_three_lines", False), ("maxwell_three_lines_bulge", True)):
        g[name] = three_lines(17, 4, thickness=2, bulge=bul)
        g[name].description = (
            "E-shaped refinement of two-element-wide strips on a 17x17 mesh, p=4"
            + (", plus a 4x4 bulge on the middle strip" if bul else "")
            + ". Layout reconstructed from a figure.")
    for k in range(1, 5):
        s = diagonal(17, 4, block=5, overlap=k)
        s.description = f"5x5 blocks along the diagonal with {k}x{k} overlaps on a 17x17 mesh, p=4."
        g[f"maxwell_diag_{k}x{k}"] = s
    for k in range(1, 4):
        s = diagonal(10, 3, block=4, overlap=k)
        s.description = f"4x4 blocks along the diagonal with {k}x{k} overlaps on a 10x10 mesh, p=3."
        g[f"stokes_diag_{k}x{k}"] = s
    g["stokes_bulge"] = bulge(10, 3)
    g["stokes_bulge"].description = (
        "4x4 corner block with a two-element-wide arm to the boundary on a 10x10 mesh, p=3; "
        "exact but fails the covering condition. Layout reconstructed from a figure.")
    g["cavity_corners"] = corners(32, 2, 3)
    g["cavity_corners"].description = "Three nested refinements of 5x5 boxes in each corner, h=1/32, p=2."
    return g


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, mesh in goldens().items():
        mesh.validate()
        (OUT / f"{name}.json").write_text(mesh.to_json() + "\n")
        print(name)


if __name__ == "__main__":
    main()
