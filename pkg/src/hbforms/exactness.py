"""Exactness checks for hierarchical spline complexes.

Three independent verdicts are offered:

* the global rank oracle (cohomology of the hierarchical differentials);
* per-level comparison of the Betti numbers of the Greville subgrids
  ``G_{l,l+1}`` and ``G_{l+1,l+1}``;
* the local sufficient conditions on the subdomains (support covering and
  connected, simply connected overlaps).

The rank oracle is the ground truth. Betti mismatch means not exact; the
local conditions imply exact; a Betti match alone is left undecided.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .hierarchy import HierarchicalComplex, boxes_inside
from .topology import analyze, cohomology_dims

EXACT = "exact"
NOT_EXACT = "not-exact"
UNDECIDED = "betti-match-but-unverified-inclusion"


@dataclass
class AssumptionResult:
    passed: bool
    uncovered: list = field(default_factory=list)       # elements (i, j), assumption 1
    offending: tuple | None = None                      # (level, k, component, i, j), assumption 2

    def __bool__(self):
        return self.passed


@dataclass
class LevelReport:
    level: int
    betti_coarse: tuple[int, int]
    betti_fine: tuple[int, int]
    assumption1: bool
    assumption2: bool
    first_failure: tuple | None
    verdict: str


@dataclass
class ExactnessReport:
    dims: tuple[int, int, int]
    cohomology: tuple[int, int, int]
    residual: int
    levels: list[LevelReport]

    @property
    def exact(self) -> bool:
        return tuple(self.cohomology) == (0, 0, 1)

    @property
    def verdict(self) -> str:
        return EXACT if self.exact else NOT_EXACT

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict
        return d

    def to_text(self) -> str:
        lines = [
            f"dims W0/W1/W2: {self.dims[0]} {self.dims[1]} {self.dims[2]}",
            f"dimension residual dim W0 + dim W2 - dim W1 - 1: {self.residual}",
            f"cohomology (h0, h1, h2): {tuple(self.cohomology)}",
            f"global verdict: {self.verdict}",
        ]
        for lr in self.levels:
            lines.append(
                f"level {lr.level}: subgrid Betti {lr.betti_coarse} vs {lr.betti_fine}, "
                f"A1 {'pass' if lr.assumption1 else 'fail'}, A2 {'pass' if lr.assumption2 else 'fail'}, "
                f"{lr.verdict}" + (f", first failure {lr.first_failure}" if lr.first_failure else "")
            )
        return "\n".join(lines)


def _refined(hc: HierarchicalComplex, level: int) -> np.ndarray:
    return hc.ladder.omega(level + 1, level)


def check_assumption1(hc: HierarchicalComplex, level: int) -> AssumptionResult:
    """Every element of Omega_{l+1} lies in the support of a level-l 2-form supported in Omega_{l+1}."""
    dom = _refined(hc, level)
    if not dom.any():
        return AssumptionResult(True)
    sp2 = hc.space(2, level)
    xlo, xhi, ylo, yhi = sp2.supports(0)
    inside = boxes_inside(dom, xlo, xhi, ylo, yhi)
    # paint the covered boxes with a 2D difference array
    n1, n2 = dom.shape
    acc = np.zeros((n1 + 1, n2 + 1), dtype=np.int64)
    for a, b, c, d in zip(xlo[inside], xhi[inside], ylo[inside], yhi[inside]):
        acc[a, c] += 1
        acc[b + 1, c] -= 1
        acc[a, d + 1] -= 1
        acc[b + 1, d + 1] += 1
    covered = np.cumsum(np.cumsum(acc, axis=0), axis=1)[:n1, :n2] > 0
    bad = dom & ~covered
    return AssumptionResult(not bad.any(), [tuple(map(int, e)) for e in np.argwhere(bad)])


def check_assumption2(hc: HierarchicalComplex, level: int) -> AssumptionResult:
    """Overlap of every level-l basis function with the unrefined region is connected and simply connected."""
    dom = _refined(hc, level)
    if not dom.any():
        return AssumptionResult(True)
    S = np.zeros((dom.shape[0] + 1, dom.shape[1] + 1), dtype=np.int64)
    S[1:, 1:] = np.cumsum(np.cumsum(dom, axis=0), axis=1)
    for k in range(3):
        space = hc.space(k, level)
        for c in range(space.n_components):
            keep = space.comp_mask(c)
            xlo, xhi, ylo, yhi = space.supports(c)
            area = (xhi - xlo + 1) * (yhi - ylo + 1)
            refined = S[xhi + 1, yhi + 1] - S[xlo, yhi + 1] - S[xhi + 1, ylo] + S[xlo, ylo]
            # overlaps that are the whole box or empty are trivially fine
            cand = keep & (refined > 0) & (refined < area)
            for i, j in np.argwhere(cand):
                box = ~dom[xlo[i, j] : xhi[i, j] + 1, ylo[i, j] : yhi[i, j] + 1]
                t = analyze(box)
                if t.components > 1 or t.holes > 0:
                    return AssumptionResult(False, offending=(level, k, c, int(i), int(j)))
    return AssumptionResult(True)


def subgrid_betti(hc: HierarchicalComplex, level: int, l_dom: int) -> tuple[int, int]:
    return analyze(hc.subgrid_cells(level, l_dom)).betti


def check_betti_match(hc: HierarchicalComplex, level: int, a1: bool | None = None, a2: bool | None = None):
    """Compare Betti pairs of G_{l,l+1} and G_{l+1,l+1}; returns (coarse, fine, verdict)."""
    coarse = subgrid_betti(hc, level, level + 1)
    fine = subgrid_betti(hc, level + 1, level + 1)
    if coarse != fine:
        return coarse, fine, NOT_EXACT
    if a1 is None:
        a1 = check_assumption1(hc, level).passed
    if a2 is None:
        a2 = check_assumption2(hc, level).passed
    return coarse, fine, EXACT if (a1 and a2) else UNDECIDED


def exactness_oracle(hc: HierarchicalComplex, seed: int | None = 0) -> tuple[int, int, int]:
    return cohomology_dims(hc.hier_diff_matrix(0), hc.hier_diff_matrix(1), seed)


def exactness_report(hc: HierarchicalComplex, seed: int | None = 0) -> ExactnessReport:
    dims = hc.dims
    levels = []
    for l in range(hc.ladder.N):
        r1 = check_assumption1(hc, l)
        r2 = check_assumption2(hc, l)
        coarse, fine, verdict = check_betti_match(hc, l, r1.passed, r2.passed)
        first = None
        if not r1.passed:
            first = ("A1", l, r1.uncovered[0])
        elif not r2.passed:
            first = ("A2",) + r2.offending
        levels.append(LevelReport(l, coarse, fine, r1.passed, r2.passed, first, verdict))
    coh = exactness_oracle(hc, seed)
    return ExactnessReport(dims, coh, dims[0] + dims[2] - dims[1] - 1, levels)
