import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hbforms.exactness import (
    EXACT,
    NOT_EXACT,
    check_assumption1,
    check_assumption2,
    check_betti_match,
    exactness_oracle,
    exactness_report,
)
from hbforms.hierarchy import HierarchicalComplex, LevelLadder

from conftest import golden_complex, random_hier


def test_no_refinement_is_exact():
    hc = HierarchicalComplex(LevelLadder((3, 3), (5, 5), []))
    r = exactness_report(hc)
    assert r.exact and r.residual == 0 and r.levels == []


def test_single_refined_element_fails_assumption1():
    dom = np.zeros((6, 6), bool)
    dom[2, 2] = True
    hc = HierarchicalComplex(LevelLadder((3, 3), (6, 6), [dom]))
    r = check_assumption1(hc, 0)
    assert not r.passed and r.uncovered == [(2, 2)]


def test_large_box_passes_both():
    dom = np.zeros((8, 8), bool)
    dom[2:7, 1:6] = True
    hc = HierarchicalComplex(LevelLadder((2, 2), (8, 8), [dom]))
    assert check_assumption1(hc, 0).passed and check_assumption2(hc, 0).passed
    coarse, fine, verdict = check_betti_match(hc, 0)
    assert coarse == fine and verdict == EXACT
    assert exactness_oracle(hc) == (0, 0, 1)


@pytest.mark.parametrize("name,a1,a2", [
    ("assumptions_a", False, False),
    ("assumptions_b", True, False),
    ("assumptions_c", True, True),
])
def test_assumption_examples(name, a1, a2):
    hc = golden_complex(name)
    assert check_assumption1(hc, 0).passed == a1
    r2 = check_assumption2(hc, 0)
    assert r2.passed == a2
    if not a2:
        level, k, c, i, j = r2.offending
        assert level == 0 and k in (0, 1, 2)


def test_counterexample_not_exact():
    r = exactness_report(golden_complex("counterexample"))
    assert r.dims == (147, 328, 181)
    assert r.residual == -1
    assert r.cohomology == (0, 1, 1)
    assert r.levels[0].verdict == NOT_EXACT
    assert r.levels[0].betti_coarse != r.levels[0].betti_fine


def test_three_lines_betti_and_bulge():
    r = exactness_report(golden_complex("maxwell_three_lines"))
    assert r.cohomology == (0, 0, 2) and r.levels[0].verdict == NOT_EXACT
    rb = exactness_report(golden_complex("maxwell_three_lines_bulge"))
    assert rb.exact


@pytest.mark.parametrize("orientation", ["standard", "rotated"])
def test_orientation_does_not_change_cohomology(orientation):
    assert exactness_oracle(golden_complex("counterexample", orientation)) == (0, 1, 1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15)
def test_verdicts_consistent_with_oracle(seed):
    # Betti mismatch on some level implies a non-exact complex; passing everything implies exact
    hc, _ = random_hier(np.random.default_rng(seed), degree=(2, 2), n0=(6, 6), levels=3, min_size=2)
    r = exactness_report(hc)
    verdicts = {lv.verdict for lv in r.levels}
    if verdicts and verdicts <= {EXACT}:
        assert r.exact
    assert r.cohomology[0] == 0
    # Euler characteristic identity
    assert r.cohomology[0] - r.cohomology[1] + r.cohomology[2] == r.dims[0] - r.dims[1] + r.dims[2]


def test_report_text_and_dict():
    r = exactness_report(golden_complex("assumptions_c"))
    d = r.to_dict()
    assert d["verdict"] == EXACT and d["dims"] == (160, 352, 193)
    assert "global verdict" in r.to_text()
