"""Reproduce the numerical studies and write one CSV per study.

    python scripts/run_experiments.py maxwell infsup multilevel cavity --out results/

Each study is driven by a small dataclass config; pass ``--quick`` for a
reduced sweep.
"""
import argparse
import csv
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from hbforms.assembly import GeometryMap, assemble, integrate_basis
from hbforms.eigensolve import (
    detect_spurious,
    maxwell_primal,
    maxwell_mixed_grad,
    maxwell_mixed_curl,
    square_spectrum,
    stokes_infsup,
    stokes_solve,
)
from hbforms.exactness import exactness_oracle
from hbforms.hierarchy import HierarchicalComplex
from hbforms.meshes import corners, diagonal, load_golden, uniform


@dataclass
class MaxwellConfig:
    meshes: list = field(default_factory=lambda: ["maxwell_three_lines", "maxwell_three_lines_bulge"]
                         + [f"maxwell_diag_{k}x{k}" for k in range(1, 5)])
    first_n: int = 50
    spurious_tol: float = 0.02


@dataclass
class InfsupConfig:
    uniform_sizes: list = field(default_factory=lambda: [10, 22, 40])
    diagonal_sizes: list = field(default_factory=lambda: [10, 22, 40])
    overlaps: list = field(default_factory=lambda: [1, 2, 3])
    degree: int = 3
    norm: str = "grad"


@dataclass
class MultilevelConfig:
    n0: int = 10
    levels: list = field(default_factory=lambda: [3, 4, 5, 6])
    overlaps: list = field(default_factory=lambda: [1, 2, 3])
    degree: int = 3


@dataclass
class CavityConfig:
    n0: int = 32
    degrees: list = field(default_factory=lambda: [2, 3])
    probe: tuple = (0.0, 0.95)


def maxwell_study(cfg: MaxwellConfig):
    geom = GeometryMap((np.pi, np.pi))
    for name in cfg.meshes:
        hc = HierarchicalComplex(load_golden(name).to_ladder())
        K = assemble("curlcurl", hc, geom).matrix
        M1 = assemble("mass_1", hc, geom).matrix
        s_primal = maxwell_primal(K, M1)
        s_grad = maxwell_mixed_grad(K, M1, assemble("grad_coupling", hc, geom).matrix)
        s_curl = maxwell_mixed_curl(assemble("curl_coupling", hc, geom).matrix, M1, assemble("mass_2", hc, geom).matrix,
                           integrate_basis(hc, 2, geom))
        rep = detect_spurious(s_primal.nonzero, square_spectrum(4 * cfg.first_n + 20), cfg.first_n, cfg.spurious_tol)
        yield {"mesh": name, "cohomology": exactness_oracle(hc), "mixed_grad_zeros": s_grad.n_zeros,
               "mixed_curl_zeros": s_curl.n_zeros, "spurious_ranks": rep.spurious}


def _beta(mesh, norm="grad"):
    return stokes_infsup(HierarchicalComplex(mesh.to_ladder(), "rotated"), norm=norm)


def infsup_study(cfg: InfsupConfig):
    for n in cfg.uniform_sizes:
        yield {"mesh": "uniform", "n0": n, "beta": _beta(uniform(n, cfg.degree), cfg.norm)}
    for n in cfg.diagonal_sizes:
        for k in cfg.overlaps:
            yield {"mesh": f"diagonal {k}x{k}", "n0": n, "beta": _beta(diagonal(n, cfg.degree, 4, k), cfg.norm)}
    yield {"mesh": "bulge", "n0": 10, "beta": _beta(load_golden("stokes_bulge"), cfg.norm)}


def multilevel_study(cfg: MultilevelConfig):
    for k in cfg.overlaps:
        for L in cfg.levels:
            yield {"overlap": k, "levels": L, "beta": _beta(diagonal(cfg.n0, cfg.degree, 4, k, levels=L))}


def cavity_study(cfg: CavityConfig):
    for p in cfg.degrees:
        for name, mesh in (("tensor", uniform(cfg.n0, p)), ("corners", corners(cfg.n0, p, 3))):
            ladder = mesh.to_ladder()
            hc = HierarchicalComplex(ladder, "rotated")
            free = HierarchicalComplex(ladder, "rotated", bc=False)
            sol = stokes_solve(hc)
            yield {"mesh": name, "degree": p,
                   "elements": int(sum(ladder.elements(l).sum() for l in range(ladder.n_levels))),
                   "unknowns": free.dims[1] + free.dims[2],
                   "vorticity": float(sol.vorticity(np.array([cfg.probe]))[0])}


STUDIES = {
    "maxwell": (maxwell_study, MaxwellConfig, MaxwellConfig(meshes=["maxwell_diag_1x1", "maxwell_diag_2x2"])),
    "infsup": (infsup_study, InfsupConfig, InfsupConfig(uniform_sizes=[10], diagonal_sizes=[10])),
    "multilevel": (multilevel_study, MultilevelConfig, MultilevelConfig(levels=[3, 4])),
    "cavity": (cavity_study, CavityConfig, CavityConfig(degrees=[2])),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("studies", nargs="+", choices=sorted(STUDIES))
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--quick", action="store_true", help="reduced sweeps")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.studies:
        fn, Config, quick = STUDIES[name]
        cfg = quick if args.quick else Config()
        print(f"# {name}: {asdict(cfg)}")
        t0 = time.perf_counter()
        rows = []
        for row in fn(cfg):
            print("  " + ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()),
                  flush=True)
            rows.append(row)
        with open(out / f"{name}.csv", "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        print(f"# {name}: {len(rows)} rows in {time.perf_counter() - t0:.1f} s -> {out / (name + '.csv')}")


if __name__ == "__main__":
    main()
