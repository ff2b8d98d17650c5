"""Exact sparse matrices with rational entries.

Used for incidence, two-scale and hierarchical differential matrices where
``d o d = 0`` must hold exactly. Conversion to ``scipy.sparse`` (float) and to
integer arrays modulo a prime is provided for the numerical side.
"""
from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp


class SignedSparseMatrix:
    """Row-major dict-of-dicts sparse matrix with Fraction entries.

    Explicit zeros are never stored and (row, col) pairs are unique.
    """

    __slots__ = ("shape", "rows")

    def __init__(self, shape: tuple[int, int], rows: Mapping[int, Mapping[int, Fraction]] | None = None):
        self.shape = (int(shape[0]), int(shape[1]))
        self.rows: dict[int, dict[int, Fraction]] = {}
        if rows:
            for r, row in rows.items():
                clean = {c: Fraction(v) for c, v in row.items() if v != 0}
                if clean:
                    self.rows[r] = clean

    # construction -----------------------------------------------------

    @classmethod
    def identity(cls, n: int) -> "SignedSparseMatrix":
        return cls((n, n), {i: {i: Fraction(1)} for i in range(n)})

    @classmethod
    def from_rows(cls, dense_rows: list[list]) -> "SignedSparseMatrix":
        nr = len(dense_rows)
        nc = len(dense_rows[0]) if nr else 0
        return cls((nr, nc), {i: {j: v for j, v in enumerate(r) if v != 0} for i, r in enumerate(dense_rows)})

    @classmethod
    def from_triplets(cls, shape, triplets: Iterable[tuple[int, int, object]]) -> "SignedSparseMatrix":
        acc: dict[int, dict[int, Fraction]] = defaultdict(dict)
        for r, c, v in triplets:
            if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                raise IndexError(f"entry ({r}, {c}) outside shape {shape}")
            row = acc[r]
            row[c] = row.get(c, Fraction(0)) + Fraction(v)
        return cls(shape, acc)

    @classmethod
    def from_columns(cls, shape, columns: Mapping[int, Mapping[int, Fraction]]) -> "SignedSparseMatrix":
        return cls.from_triplets(shape, ((r, c, v) for c, col in columns.items() for r, v in col.items()))

    @classmethod
    def from_scipy(cls, A) -> "SignedSparseMatrix":
        A = sp.coo_matrix(A)
        return cls.from_triplets(A.shape, zip(A.row.tolist(), A.col.tolist(), A.data.tolist()))

    # basic queries ----------------------------------------------------

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def triplets(self):
        for r in sorted(self.rows):
            row = self.rows[r]
            for c in sorted(row):
                yield r, c, row[c]

    def __getitem__(self, rc):
        r, c = rc
        return self.rows.get(r, {}).get(c, Fraction(0))

    def is_zero(self) -> bool:
        return not self.rows

    def __eq__(self, other):
        if not isinstance(other, SignedSparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def __repr__(self):
        return f"SignedSparseMatrix(shape={self.shape}, nnz={self.nnz})"

    # algebra ----------------------------------------------------------

    @property
    def T(self) -> "SignedSparseMatrix":
        out: dict[int, dict[int, Fraction]] = defaultdict(dict)
        for r, row in self.rows.items():
            for c, v in row.items():
                out[c][r] = v
        return SignedSparseMatrix((self.shape[1], self.shape[0]), out)

    def __matmul__(self, other: "SignedSparseMatrix") -> "SignedSparseMatrix":
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = {}
        orows = other.rows
        for r, row in self.rows.items():
            acc: dict[int, Fraction] = {}
            for k, v in row.items():
                ok = orows.get(k)
                if ok is None:
                    continue
                for c, w in ok.items():
                    acc[c] = acc.get(c, 0) + v * w
            acc = {c: x for c, x in acc.items() if x != 0}
            if acc:
                out[r] = acc
        res = SignedSparseMatrix((self.shape[0], other.shape[1]))
        res.rows = out
        return res

    def __add__(self, other: "SignedSparseMatrix") -> "SignedSparseMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return SignedSparseMatrix.from_triplets(self.shape, list(self.triplets()) + list(other.triplets()))

    def __neg__(self):
        return self.scale(-1)

    def scale(self, a) -> "SignedSparseMatrix":
        a = Fraction(a)
        return SignedSparseMatrix(self.shape, {r: {c: a * v for c, v in row.items()} for r, row in self.rows.items()})

    def scale_rows(self, s) -> "SignedSparseMatrix":
        return SignedSparseMatrix(self.shape, {r: {c: s[r] * v for c, v in row.items()} for r, row in self.rows.items()})

    def scale_cols(self, s) -> "SignedSparseMatrix":
        return SignedSparseMatrix(self.shape, {r: {c: s[c] * v for c, v in row.items()} for r, row in self.rows.items()})

    def submatrix(self, rows=None, cols=None) -> "SignedSparseMatrix":
        """Select rows/cols (lists of indices, in the given order)."""
        rmap = {r: i for i, r in enumerate(rows)} if rows is not None else None
        cmap = {c: j for j, c in enumerate(cols)} if cols is not None else None
        nr = len(rows) if rows is not None else self.shape[0]
        nc = len(cols) if cols is not None else self.shape[1]
        out = {}
        for r, row in self.rows.items():
            if rmap is not None:
                if r not in rmap:
                    continue
                r2 = rmap[r]
            else:
                r2 = r
            new = {}
            for c, v in row.items():
                if cmap is None:
                    new[c] = v
                elif c in cmap:
                    new[cmap[c]] = v
            if new:
                out[r2] = new
        res = SignedSparseMatrix((nr, nc))
        res.rows = out
        return res

    # conversion -------------------------------------------------------

    def to_scipy(self) -> sp.csr_matrix:
        t = list(self.triplets())
        if not t:
            return sp.csr_matrix(self.shape)
        r, c, v = zip(*t)
        return sp.csr_matrix((np.array([float(x) for x in v]), (r, c)), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def to_fraction_rows(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.shape[1] for _ in range(self.shape[0])]
        for r, c, v in self.triplets():
            out[r][c] = v
        return out

    def mod_p(self, prime: int) -> np.ndarray:
        """Dense int64 array of the entries reduced modulo ``prime``.

        Raises ZeroDivisionError if a denominator vanishes modulo ``prime``.
        """
        out = np.zeros(self.shape, dtype=np.int64)
        inv_cache: dict[int, int] = {}
        for r, c, v in self.triplets():
            d = v.denominator
            if d not in inv_cache:
                if d % prime == 0:
                    raise ZeroDivisionError("denominator divisible by prime")
                inv_cache[d] = pow(d, -1, prime)
            out[r, c] = (v.numerator % prime) * inv_cache[d] % prime
        return out


def vstack(blocks: list[SignedSparseMatrix]) -> SignedSparseMatrix:
    nc = blocks[0].shape[1]
    out = {}
    off = 0
    for b in blocks:
        if b.shape[1] != nc:
            raise ValueError("column mismatch")
        for r, row in b.rows.items():
            out[r + off] = dict(row)
        off += b.shape[0]
    res = SignedSparseMatrix((off, nc))
    res.rows = out
    return res


def hstack(blocks: list[SignedSparseMatrix]) -> SignedSparseMatrix:
    return vstack([b.T for b in blocks]).T


def kron(A: SignedSparseMatrix, B: SignedSparseMatrix) -> SignedSparseMatrix:
    """Kronecker product with C-order index ``i * B.shape + j``."""
    m, n = B.shape
    out = {}
    for ra, rowa in A.rows.items():
        for rb, rowb in B.rows.items():
            out[ra * m + rb] = {ca * n + cb: va * vb for ca, va in rowa.items() for cb, vb in rowb.items()}
    res = SignedSparseMatrix((A.shape[0] * m, A.shape[1] * n))
    res.rows = out
    return res
