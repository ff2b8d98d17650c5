"""Mesh-hierarchy specifications and generators.

A :class:`MeshSpec` is stored as JSON::

    {
      "degree": [p1, p2],
      "level0": [n1, n2],
      "levels": [[{"i0": .., "i1": .., "j0": .., "j1": ..}, ...], ...],
      "generator": {"name": .., "params": {..}},     (optional, informative)
      "description": ".."                            (optional)
    }

A document holding only ``generator`` (no ``levels``) is expanded by the
named generator on load.

``levels[l - 1]`` lists the boxes whose union is ``Omega_l``. Boxes are
half-open element ranges ``[i0, i1) x [j0, j1)`` in the indexing of level
``l - 1`` (whose mesh has ``n * 2**(l-1)`` elements per direction).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .hierarchy import LevelLadder, upsample


class MeshValidationError(ValueError):
    def __init__(self, msg, level=None, box=None):
        super().__init__(msg if level is None else f"level {level}, box {box}: {msg}")
        self.level = level
        self.box = box


@dataclass(frozen=True)
class Box:
    i0: int
    i1: int
    j0: int
    j1: int

    def as_dict(self):
        return {"i0": self.i0, "i1": self.i1, "j0": self.j0, "j1": self.j1}


@dataclass
class MeshSpec:
    degree: tuple[int, int]
    level0: tuple[int, int]
    levels: list[list[Box]] = field(default_factory=list)
    generator: dict | None = None
    description: str | None = None

    def __post_init__(self):
        self.degree = tuple(int(p) for p in self.degree)
        self.level0 = tuple(int(n) for n in self.level0)
        self.levels = [[b if isinstance(b, Box) else Box(**b) for b in lvl] for lvl in self.levels]

    # serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "degree": list(self.degree),
            "level0": list(self.level0),
            "levels": [[b.as_dict() for b in lvl] for lvl in self.levels],
        }
        if self.generator:
            d["generator"] = self.generator
        if self.description:
            d["description"] = self.description
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def digest(self) -> str:
        """SHA-256 of the canonical geometry (degree, level0, levels)."""
        d = {k: v for k, v in self.to_dict().items() if k in ("degree", "level0", "levels")}
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "MeshSpec":
        if "levels" not in d and "generator" in d:
            g = d["generator"]
            mesh = generate_mesh(g["name"], **g.get("params", {}))
            if "degree" in d:
                mesh.degree = tuple(d["degree"])
            mesh.description = d.get("description")
            return mesh
        try:
            return cls(d["degree"], d["level0"], d.get("levels", []), d.get("generator"), d.get("description"))
        except (KeyError, TypeError, ValueError) as e:
            raise MeshValidationError(f"malformed mesh description: {e}") from e

    @classmethod
    def from_json(cls, text: str) -> "MeshSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "MeshSpec":
        return cls.from_json(Path(path).read_text())

    # conversion -------------------------------------------------------

    def masks(self) -> list[np.ndarray]:
        self.validate()
        out = []
        for l, boxes in enumerate(self.levels, start=1):
            shape = (self.level0[0] * 2 ** (l - 1), self.level0[1] * 2 ** (l - 1))
            m = np.zeros(shape, dtype=bool)
            for b in boxes:
                m[b.i0 : b.i1, b.j0 : b.j1] = True
            out.append(m)
        return out

    def to_ladder(self) -> LevelLadder:
        return LevelLadder(self.degree, self.level0, self.masks())

    def validate(self):
        if len(self.degree) != 2 or min(self.degree) < 1:
            raise MeshValidationError("degree must be two integers >= 1")
        if len(self.level0) != 2 or min(self.level0) < 1:
            raise MeshValidationError("level0 must be two positive integers")
        prev = None
        for l, boxes in enumerate(self.levels, start=1):
            n1, n2 = self.level0[0] * 2 ** (l - 1), self.level0[1] * 2 ** (l - 1)
            m = np.zeros((n1, n2), dtype=bool)
            for b in boxes:
                if not (0 <= b.i0 < b.i1 <= n1 and 0 <= b.j0 < b.j1 <= n2):
                    raise MeshValidationError(f"box outside the {n1}x{n2} mesh or empty", l, b.as_dict())
                if prev is not None and not prev[b.i0 : b.i1, b.j0 : b.j1].all():
                    raise MeshValidationError(f"box not contained in Omega_{l - 1}", l, b.as_dict())
                m[b.i0 : b.i1, b.j0 : b.j1] = True
            prev = upsample(m)


def boxes_from_mask(mask: np.ndarray) -> list[Box]:
    """Greedy row-run decomposition of a mask into boxes (deterministic)."""
    out = []
    m = mask.copy()
    n1, n2 = m.shape
    for i in range(n1):
        j = 0
        while j < n2:
            if not m[i, j]:
                j += 1
                continue
            j1 = j
            while j1 < n2 and m[i, j1]:
                j1 += 1
            i1 = i + 1
            while i1 < n1 and m[i1, j:j1].all():
                i1 += 1
            m[i:i1, j:j1] = False
            out.append(Box(i, i1, j, j1))
            j = j1
    return out


def spec_from_ladder(ladder: LevelLadder, generator: dict | None = None) -> MeshSpec:
    return MeshSpec(ladder.degree, ladder.n0, [boxes_from_mask(d) for d in ladder.domains], generator)


# --- generators -----------------------------------------------------------------

def diagonal(n0: int = 10, degree: int = 3, block: int = 4, overlap: int = 1, levels: int = 2,
             offset: int = 0, count: int | None = None) -> MeshSpec:
    """Square blocks of ``block`` previous-level elements along the main diagonal.

    Consecutive blocks overlap in ``overlap x overlap`` elements (step
    ``block - overlap``). Level 1 starts at ``offset`` and places ``count``
    blocks (all that fit by default); finer levels place blocks from the
    origin while they stay inside the previous subdomain.
    """
    step = block - overlap
    if step <= 0:
        raise MeshValidationError(f"overlap {overlap} leaves no step for block {block}")
    if block > n0:
        raise MeshValidationError("block larger than the mesh")
    lv = []
    prev = None
    for l in range(1, levels):
        n = n0 * 2 ** (l - 1)
        boxes = []
        a = offset if l == 1 else 0
        while a + block <= n and (count is None or l > 1 or len(boxes) < count):
            if prev is None or prev[a : a + block, a : a + block].all():
                boxes.append(Box(a, a + block, a, a + block))
            a += step
        if not boxes:
            break
        lv.append(boxes)
        m = np.zeros((n, n), dtype=bool)
        for b in boxes:
            m[b.i0 : b.i1, b.j0 : b.j1] = True
        prev = upsample(m)
    params = dict(n0=n0, degree=degree, block=block, overlap=overlap, levels=levels, offset=offset, count=count)
    return MeshSpec((degree, degree), (n0, n0), lv, {"name": "diagonal", "params": params})


def corners(n0: int = 32, degree: int = 2, levels: int = 3, size: int | None = None) -> MeshSpec:
    """``levels`` nested refinements of square boxes in the four corners.

    Each box spans ``size`` elements of the previous level (default 5 n0 / 32).
    """
    c = size if size is not None else max(1, (5 * n0) // 32)
    lv = []
    for l in range(1, levels + 1):
        n = n0 * 2 ** (l - 1)
        if 2 * c > n:
            raise MeshValidationError("corner boxes overlap")
        lv.append([Box(0, c, 0, c), Box(n - c, n, 0, c), Box(0, c, n - c, n), Box(n - c, n, n - c, n)])
    params = dict(n0=n0, degree=degree, levels=levels, size=c)
    return MeshSpec((degree, degree), (n0, n0), lv, {"name": "corners", "params": params})


def three_lines(n0: int = 17, degree: int = 4, thickness: int = 2, bulge: bool = False) -> MeshSpec:
    """Three horizontal strips joined by a vertical spine (an E shape), optionally with a square bulge.

    The strips are thinner than a level-0 support for ``thickness < degree``.
    """
    rows = [2, (n0 - thickness) // 2, n0 - 2 - thickness]
    x0, x1 = 2, n0 - 2
    boxes = [Box(x0, x1, r, r + thickness) for r in rows]
    boxes.append(Box(x0, x0 + thickness, rows[0], rows[-1] + thickness))
    if bulge:
        s = degree
        yc = rows[1] + thickness // 2
        boxes.append(Box(x1 - s, x1, yc - s // 2, yc - s // 2 + s))
    name = "three_lines_bulge" if bulge else "three_lines"
    params = dict(n0=n0, degree=degree, thickness=thickness)
    return MeshSpec((degree, degree), (n0, n0), [boxes], {"name": name, "params": params})


def bulge(n0: int = 10, degree: int = 3, block: int = 4, width: int = 2) -> MeshSpec:
    """A corner block with a thin arm running to the opposite boundary.

    The block covers ``[0, block)^2``; the arm covers rows
    ``[block, block + width)`` and columns ``[block // 2, n0)``. An arm thinner
    than a level-0 2-form support breaks the covering condition while the
    sequence stays exact.
    """
    if block + width > n0:
        raise MeshValidationError("block and arm do not fit in the mesh")
    boxes = [Box(0, block, 0, block), Box(block, block + width, block // 2, n0)]
    params = dict(n0=n0, degree=degree, block=block, width=width)
    return MeshSpec((degree, degree), (n0, n0), [boxes], {"name": "bulge", "params": params})


def random_mesh(rng: np.random.Generator, degree=(3, 3), n0=(8, 8), levels: int = 3, boxes: int = 3,
                min_size: int = 1, max_size: int | None = None, attempts: int = 20) -> MeshSpec:
    """Random nested refinement: up to ``boxes`` boxes per level, each inside the previous subdomain."""
    degree, n0 = tuple(degree), tuple(n0)
    lv = []
    prev = None
    for l in range(1, levels):
        n1, n2 = n0[0] * 2 ** (l - 1), n0[1] * 2 ** (l - 1)
        hi = max_size or max(min_size, min(n1, n2) // 2)
        chosen = []
        for _ in range(attempts):
            if len(chosen) == boxes:
                break
            a, b = rng.integers(min_size, hi + 1, size=2)
            if a > n1 or b > n2:
                continue
            i0, j0 = int(rng.integers(0, n1 - a + 1)), int(rng.integers(0, n2 - b + 1))
            if prev is None or prev[i0 : i0 + a, j0 : j0 + b].all():
                chosen.append(Box(i0, i0 + int(a), j0, j0 + int(b)))
        if not chosen:
            break
        lv.append(chosen)
        m = np.zeros((n1, n2), dtype=bool)
        for bx in chosen:
            m[bx.i0 : bx.i1, bx.j0 : bx.j1] = True
        prev = upsample(m)
    return MeshSpec(degree, n0, lv, {"name": "random", "params": dict(degree=list(degree), n0=list(n0), levels=levels)})


def uniform(n0: int = 10, degree: int = 3) -> MeshSpec:
    return MeshSpec((degree, degree), (n0, n0), [], {"name": "uniform", "params": dict(n0=n0, degree=degree)})


GENERATORS = {
    "diagonal": diagonal,
    "corners": corners,
    "three_lines": three_lines,
    "three_lines_bulge": lambda **kw: three_lines(bulge=True, **kw),
    "bulge": bulge,
    "uniform": uniform,
}


def generate_mesh(name: str, **params) -> MeshSpec:
    if name == "custom":
        return MeshSpec.from_dict(params)
    if name not in GENERATORS:
        raise MeshValidationError(f"unknown generator {name!r}")
    try:
        mesh = GENERATORS[name](**params)
    except TypeError as e:
        raise MeshValidationError(f"bad parameters for {name}: {e}") from e
    mesh.validate()
    return mesh


# --- checked-in reconstructions ----------------------------------------------------

def golden_names() -> list[str]:
    d = resources.files("hbforms") / "data"
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def load_golden(name: str) -> MeshSpec:
    d = resources.files("hbforms") / "data" / f"{name}.json"
    return MeshSpec.from_json(d.read_text())
