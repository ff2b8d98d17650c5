import numpy as np
import pytest
from hypothesis import settings, strategies as st

from hbforms.hierarchy import HierarchicalComplex
from hbforms.meshes import load_golden, random_mesh

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")


def uniform_knots(p, n):
    from hbforms.splines1d import make_uniform_open_knots
    return make_uniform_open_knots(p, n)


@st.composite
def knot_vectors(draw, max_degree=5, max_elems=8):
    """Open knot vectors with random dyadic interior knots of bounded multiplicity."""
    from fractions import Fraction
    from hbforms.splines1d import KnotVector
    p = draw(st.integers(1, max_degree))
    n = draw(st.integers(1, max_elems))
    interior = sorted(draw(st.lists(st.integers(1, 15), min_size=n - 1, max_size=n - 1)))
    knots = [0] * (p + 1)
    for v in interior:
        if knots.count(Fraction(v, 16)) < p:
            knots.append(Fraction(v, 16))
    knots += [1] * (p + 1)
    return KnotVector(p, sorted(Fraction(k) for k in knots))


def golden_complex(name, orientation="standard", bc=True):
    return HierarchicalComplex(load_golden(name).to_ladder(), orientation, bc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hier(rng, degree=(3, 3), n0=(6, 6), levels=3, min_size=1, orientation="standard"):
    mesh = random_mesh(rng, degree, n0, levels, boxes=3, min_size=min_size)
    return HierarchicalComplex(mesh.to_ladder(), orientation), mesh


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, passed: bool, detail: str = "") -> bool:
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        passed = passed and prev[0]
        detail = "; ".join(x for x in (prev[1], detail) if x)
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}")
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
