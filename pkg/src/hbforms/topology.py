"""Combinatorial topology of cell sets on Cartesian grids, and exact ranks.

A cell set is a boolean mask over an ``n1 x n2`` grid of cells. Its vertices
are indexed on the ``(n1 + 1) x (n2 + 1)`` grid, x-edges on ``n1 x (n2 + 1)``
and y-edges on ``(n1 + 1) x n2``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.csgraph import connected_components
from sympy import nextprime

from .sparse import SignedSparseMatrix, vstack
from .tpcomplex import incidence_1d

_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class CellSet:
    mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mask", np.asarray(self.mask, dtype=bool))
        if self.mask.ndim != 2:
            raise ValueError("cell set must be 2D")

    @property
    def shape(self):
        return self.mask.shape


@dataclass(frozen=True)
class GridTopology:
    components: int
    holes: int
    euler: int
    manifold: bool
    labels: np.ndarray

    @property
    def betti(self) -> tuple[int, int]:
        return self.components, self.holes


def _mask(cells) -> np.ndarray:
    return cells.mask if isinstance(cells, CellSet) else np.asarray(cells, dtype=bool)


def _corner_patterns(m: np.ndarray):
    """For each grid vertex, the four incident cells (SW, SE, NW, NE) as booleans."""
    P = np.pad(m, 1)
    sw = P[:-1, :-1]
    nw = P[:-1, 1:]
    se = P[1:, :-1]
    ne = P[1:, 1:]
    return sw, se, nw, ne


def pinches(cells) -> np.ndarray:
    """Vertices where exactly two diagonally opposite cells are present."""
    sw, se, nw, ne = _corner_patterns(_mask(cells))
    return (sw & ne & ~se & ~nw) | (se & nw & ~sw & ~ne)


def analyze(cells) -> GridTopology:
    """Components (edge adjacency), holes and manifold flag of a cell set.

    Holes come from the Euler characteristic of the closed region with
    pinched vertices split in two, so that two cells touching at a corner
    count as two components and no hole.
    """
    m = _mask(cells)
    labels, ncomp = ndimage.label(m, structure=_FOUR)
    sw, se, nw, ne = _corner_patterns(m)
    pinch = (sw & ne & ~se & ~nw) | (se & nw & ~sw & ~ne)
    V = int((sw | se | nw | ne).sum() + pinch.sum())
    P = np.pad(m, 1)
    ex = P[1:-1, :-1] | P[1:-1, 1:]   # x-edges: cells below / above
    ey = P[:-1, 1:-1] | P[1:, 1:-1]   # y-edges: cells left / right
    E = int(ex.sum() + ey.sum())
    F = int(m.sum())
    chi = V - E + F
    return GridTopology(int(ncomp), int(ncomp - chi), chi, not bool(pinch.any()), labels)


def boundary_loops(cells) -> int:
    """Number of boundary cycles, traced on the boundary edge graph.

    Only meaningful for manifold sets (every boundary vertex has degree 2).
    """
    m = _mask(cells)
    n1, n2 = m.shape
    P = np.pad(m, 1)
    bx = P[1:-1, :-1] ^ P[1:-1, 1:]   # x-edge (i,j): vertices (i,j)-(i+1,j)
    by = P[:-1, 1:-1] ^ P[1:, 1:-1]   # y-edge (i,j): vertices (i,j)-(i,j+1)
    vid = lambda i, j: i * (n2 + 1) + j
    ix, jx = np.nonzero(bx)
    iy, jy = np.nonzero(by)
    a = np.concatenate([vid(ix, jx), vid(iy, jy)])
    b = np.concatenate([vid(ix + 1, jx), vid(iy, jy + 1)])
    if len(a) == 0:
        return 0
    nv = (n1 + 1) * (n2 + 1)
    G = sp.coo_matrix((np.ones(len(a)), (a, b)), shape=(nv, nv))
    _, lab = connected_components(G, directed=False)
    used = np.unique(np.concatenate([a, b]))
    return len(np.unique(lab[used]))


# --- exact ranks -------------------------------------------------------------

def rank_mod_p(A: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over GF(p), p < 2**31."""
    A = np.array(A, dtype=np.int64) % p
    m, n = A.shape
    if m > n:
        A = A.T.copy()
        m, n = n, m
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.flatnonzero(A[r:, c])
        if len(nz) == 0:
            continue
        i = r + nz[0]
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = pow(int(A[r, c]), p - 2, p)
        A[r, c:] = A[r, c:] * inv % p
        below = r + 1 + np.flatnonzero(A[r + 1 :, c])
        if len(below):
            A[below, c:] = (A[below, c:] - A[below, c : c + 1] * A[r, c:]) % p
        r += 1
    return r


def random_primes(seed: int | None, count: int = 2) -> list[int]:
    rng = random.Random(seed)
    out: list[int] = []
    while len(out) < count:
        q = int(nextprime(rng.randrange(2**31 - 2**28, 2**31 - 2**20)))
        if q < 2**31 and q not in out:
            out.append(q)
    return out


def exact_rank(M: SignedSparseMatrix, seed: int | None = 0, attempts: int = 3) -> int:
    """Rank over the rationals, via two random primes that must agree."""
    if M.shape[0] == 0 or M.shape[1] == 0 or M.nnz == 0:
        return 0
    rng = random.Random(seed)
    for _ in range(attempts):
        ranks = []
        for q in random_primes(rng.randrange(2**32)):
            try:
                ranks.append(rank_mod_p(M.mod_p(q), q))
            except ZeroDivisionError:
                ranks.append(None)
        if ranks[0] is not None and ranks[0] == ranks[1]:
            return ranks[0]
    raise ArithmeticError("modular ranks disagree after retries")


def cohomology_dims(D0: SignedSparseMatrix, D1: SignedSparseMatrix, seed: int | None = 0) -> tuple[int, int, int]:
    """(h0, h1, h2) of the complex 0 -> R^n0 -D0-> R^n1 -D1-> R^n2 -> 0."""
    if D0.shape[0] != D1.shape[1]:
        raise ValueError("D0 and D1 are not composable")
    if not (D1 @ D0).is_zero():
        raise ValueError("D1 @ D0 != 0")
    n0, n1, n2 = D0.shape[1], D0.shape[0], D1.shape[0]
    r0 = exact_rank(D0, seed)
    r1 = exact_rank(D1, None if seed is None else seed + 1)
    return n0 - r0, n1 - r1 - r0, n2 - r1


# --- cell-set finite element complex -----------------------------------------

def grid_incidences(n1: int, n2: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Vertex->edge and edge->cell incidences of an n1 x n2 cell grid (all entities)."""
    Iv1, Iv2 = sp.identity(n1 + 1, dtype=np.int64), sp.identity(n2 + 1, dtype=np.int64)
    Ic1, Ic2 = sp.identity(n1, dtype=np.int64), sp.identity(n2, dtype=np.int64)
    G1, G2 = incidence_1d(n1 + 1), incidence_1d(n2 + 1)
    D0 = sp.vstack([sp.kron(G1, Iv2), sp.kron(Iv1, G2)], format="csr")
    D1 = sp.hstack([-sp.kron(Ic1, G2), sp.kron(G1, Ic2)], format="csr")
    return D0, D1


def interior_entities(cells) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat masks of the vertices, edges and cells of the subgrid complex.

    A vertex (edge) belongs to it iff all its incident cells are in the set,
    which also excludes entities on the grid boundary.
    """
    m = _mask(cells)
    sw, se, nw, ne = _corner_patterns(m)
    verts = sw & se & nw & ne
    P = np.pad(m, 1)
    ex = P[1:-1, :-1] & P[1:-1, 1:]
    ey = P[:-1, 1:-1] & P[1:, 1:-1]
    return verts.ravel(), np.concatenate([ex.ravel(), ey.ravel()]), m.ravel()


def cellset_complex(cells) -> tuple[SignedSparseMatrix, SignedSparseMatrix]:
    m = _mask(cells)
    D0, D1 = grid_incidences(*m.shape)
    v, e, c = interior_entities(m)
    D0s = D0[np.flatnonzero(e)][:, np.flatnonzero(v)]
    D1s = D1[np.flatnonzero(c)][:, np.flatnonzero(e)]
    return SignedSparseMatrix.from_scipy(D0s), SignedSparseMatrix.from_scipy(D1s)


def h1_generators(cells) -> list[np.ndarray]:
    """Integer representatives of H^1 of the subgrid complex, one per hole.

    For each boundary loop other than the outermost one of its component,
    take the indicator of the loop's vertices, apply the vertex-edge
    incidence and keep the interior edges.
    """
    m = _mask(cells)
    n1, n2 = m.shape
    topo = analyze(m)
    if topo.holes == 0:
        return []
    D0, _ = grid_incidences(n1, n2)
    _, e_int, _ = interior_entities(m)
    P = np.pad(m, 1)
    bx = P[1:-1, :-1] ^ P[1:-1, 1:]
    by = P[:-1, 1:-1] ^ P[1:, 1:-1]
    vid = lambda i, j: i * (n2 + 1) + j
    ix, jx = np.nonzero(bx)
    iy, jy = np.nonzero(by)
    a = np.concatenate([vid(ix, jx), vid(iy, jy)])
    b = np.concatenate([vid(ix + 1, jx), vid(iy, jy + 1)])
    nv = (n1 + 1) * (n2 + 1)
    G = sp.coo_matrix((np.ones(len(a)), (a, b)), shape=(nv, nv))
    _, lab = connected_components(G, directed=False)
    used = np.unique(np.concatenate([a, b]))
    loops = {}
    for v in used:
        loops.setdefault(int(lab[v]), []).append(int(v))
    # the outer loop of a component contains its lexicographically smallest vertex
    sw, se, nw, ne = _corner_patterns(m)
    lab_cells = topo.labels
    outer = set()
    for comp in range(1, topo.components + 1):
        i, j = np.argwhere(lab_cells == comp)[0]
        outer.add(int(lab[vid(i, j)]))
    gens = []
    for key, verts in sorted(loops.items()):
        if key in outer:
            continue
        chi = np.zeros(nv, dtype=np.int64)
        chi[verts] = 1
        gens.append(np.asarray(D0 @ chi)[e_int])
    return gens
