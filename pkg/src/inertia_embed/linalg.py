"""Matrices over O_K, K and F_q; lattices; invariant bilinear forms.

An `OKMatrix` stores an (rows, cols, m) integer array of power-basis
coefficients reduced mod ell^N, together with the number of ell-adic digits
that are certified correct (`prec`). A `KMatrix` is ell^shift times an
`OKMatrix`. Matrices over F_q are `OKMatrix` objects over the residue ring
(N = 1).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import poly as P
from ._modarith import asmod, dtype_for, matmulmod, mulmod
from .errors import (
    DegenerateAfterScaling,
    NotInvertible,
    NotPerfect,
    OddDimension,
    PrecisionExhausted,
    RingMismatch,
    ShapeMismatch,
)
from .padic import CoeffArith, OKElem, RingSpec


# ---------------------------------------------------------------------------
# array arithmetic with a trailing coefficient axis


class ArrayArith:
    """Elementwise and matrix products of O_K / ell^digits arrays of shape (..., m)."""

    def __init__(self, ring: RingSpec, digits: int | None = None):
        self.ring = ring
        self.m = ring.m
        self.digits = ring.N if digits is None else digits
        self.M = ring.ell ** self.digits
        self.dtype = dtype_for(self.M)
        self.scalar = CoeffArith(ring, self.digits)
        red = np.array([[c % self.M for c in row] for row in ring.reduction], dtype=object)
        self.red = asmod(red, self.M)

    def reduce(self, a) -> np.ndarray:
        return asmod(a, self.M)

    def zeros(self, shape) -> np.ndarray:
        return np.zeros(tuple(shape) + (self.m,), dtype=self.dtype)

    def _fold(self, prods):
        if len(prods) == 1:
            return prods[0][..., None]
        out = []
        for t in range(self.m):
            acc = None
            for s, p in enumerate(prods):
                r = self.red[s, t]
                if r == 0:
                    continue
                term = p if r == 1 else mulmod(p, np.asarray(r, dtype=p.dtype), self.M)
                acc = term if acc is None else (acc + term) % self.M
            out.append(acc if acc is not None else np.zeros_like(prods[0]))
        return np.stack(out, axis=-1)

    def mul(self, a, b) -> np.ndarray:
        m = self.m
        if m == 1:
            return mulmod(a, b, self.M)
        prods = [None] * (2 * m - 1)
        for i in range(m):
            for j in range(m):
                p = mulmod(a[..., i], b[..., j], self.M)
                prods[i + j] = p if prods[i + j] is None else (prods[i + j] + p) % self.M
        return self._fold(prods)

    def matmul(self, A, B) -> np.ndarray:
        m = self.m
        if m == 1:
            return matmulmod(A[..., 0], B[..., 0], self.M)[..., None]
        prods = [None] * (2 * m - 1)
        for i in range(m):
            for j in range(m):
                p = matmulmod(A[..., i], B[..., j], self.M)
                prods[i + j] = p if prods[i + j] is None else (prods[i + j] + p) % self.M
        return self._fold(prods)

    def const(self, c) -> np.ndarray:
        """A scalar ring element as a (m,) array."""
        if isinstance(c, OKElem):
            c = c.coeffs
        if isinstance(c, (int, np.integer)):
            c = self.scalar.scalar(int(c))
        return asmod(np.array(list(c), dtype=object), self.M)

    def unit_mask(self, a) -> np.ndarray:
        return (a % self.ring.ell != 0).any(axis=-1)

    def valuations(self, a, cap: int) -> np.ndarray:
        """Entrywise valuation capped at `cap` (cap means zero to that precision)."""
        ell = self.ring.ell
        v = np.full(a.shape[:-1], cap, dtype=np.int64)
        cur = a.copy()
        alive = cur.any(axis=-1)
        k = 0
        while k < cap and alive.any():
            nz = (cur % ell != 0).any(axis=-1) & alive
            v[nz & (v == cap)] = k
            alive &= ~nz
            cur = cur // ell
            k += 1
        return v


@lru_cache(maxsize=None)
def arith(ring: RingSpec, digits: int | None = None) -> ArrayArith:
    return ArrayArith(ring, digits)


def _tup(a: np.ndarray) -> tuple:
    return tuple(int(x) for x in a)


# ---------------------------------------------------------------------------
# matrices


class OKMatrix:
    """Matrix over O_K / ell^N with a certified precision."""

    __slots__ = ("ring", "data", "prec")

    def __init__(self, ring: RingSpec, data, prec: int | None = None):
        self.ring = ring
        ar = arith(ring)
        arr = np.asarray(data) if not isinstance(data, np.ndarray) else data
        if arr.ndim == 2:
            arr = arr[..., None]
        if arr.ndim != 3 or arr.shape[-1] != ring.m:
            raise ShapeMismatch(f"bad matrix data shape {arr.shape} for m={ring.m}")
        if arr.dtype != ar.dtype or (arr.dtype != object and (arr.min(initial=0) < 0 or arr.max(initial=0) >= ar.M)):
            arr = ar.reduce(arr)
        self.data = arr
        self.prec = ring.N if prec is None else min(int(prec), ring.N)

    # constructors
    @classmethod
    def from_ints(cls, ring: RingSpec, rows, prec=None) -> "OKMatrix":
        rows = list(rows)
        r = len(rows)
        c = len(rows[0]) if r else 0
        arr = np.zeros((r, c, ring.m), dtype=object)
        for i, row in enumerate(rows):
            if len(row) != c:
                raise ShapeMismatch("ragged rows")
            for j, x in enumerate(row):
                if isinstance(x, OKElem):
                    x = x.coeffs
                if isinstance(x, (int, np.integer)):
                    arr[i, j, 0] = int(x)
                else:
                    arr[i, j, :] = [int(t) for t in x]
        return cls(ring, arith(ring).reduce(arr), prec)

    @classmethod
    def identity(cls, ring: RingSpec, n: int) -> "OKMatrix":
        ar = arith(ring)
        d = ar.zeros((n, n))
        d[np.arange(n), np.arange(n), 0] = 1
        return cls(ring, d)

    @classmethod
    def zeros(cls, ring: RingSpec, r: int, c: int) -> "OKMatrix":
        return cls(ring, arith(ring).zeros((r, c)))

    # basic structure
    @property
    def shape(self) -> tuple:
        return self.data.shape[:2]

    @property
    def nrows(self) -> int:
        return self.data.shape[0]

    @property
    def ncols(self) -> int:
        return self.data.shape[1]

    def _same(self, other):
        if not isinstance(other, OKMatrix):
            raise TypeError(f"expected OKMatrix, got {type(other).__name__}")
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def __matmul__(self, other: "OKMatrix") -> "OKMatrix":
        self._same(other)
        if self.ncols != other.nrows:
            raise ShapeMismatch(f"{self.shape} @ {other.shape}")
        return OKMatrix(self.ring, arith(self.ring).matmul(self.data, other.data), min(self.prec, other.prec))

    def __add__(self, other):
        self._same(other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} + {other.shape}")
        return OKMatrix(self.ring, (self.data + other.data) % arith(self.ring).M, min(self.prec, other.prec))

    def __sub__(self, other):
        self._same(other)
        if self.shape != other.shape:
            raise ShapeMismatch(f"{self.shape} - {other.shape}")
        return OKMatrix(self.ring, (self.data - other.data) % arith(self.ring).M, min(self.prec, other.prec))

    def __neg__(self):
        return OKMatrix(self.ring, (-self.data) % arith(self.ring).M, self.prec)

    @property
    def T(self) -> "OKMatrix":
        return OKMatrix(self.ring, self.data.transpose(1, 0, 2).copy(), self.prec)

    def scale(self, c) -> "OKMatrix":
        ar = arith(self.ring)
        return OKMatrix(self.ring, ar.mul(self.data, ar.const(c)), self.prec)

    def with_prec(self, prec: int) -> "OKMatrix":
        return OKMatrix(self.ring, self.data, min(prec, self.prec))

    def copy(self) -> "OKMatrix":
        return OKMatrix(self.ring, self.data.copy(), self.prec)

    def __getitem__(self, key) -> "OKMatrix":
        rows, cols = key
        d = self.data[rows][:, cols]
        return OKMatrix(self.ring, np.ascontiguousarray(d), self.prec)

    def entry(self, i: int, j: int) -> tuple:
        return _tup(self.data[i, j])

    def elem(self, i: int, j: int) -> OKElem:
        return OKElem(self.ring, self.entry(i, j))

    def power(self, e: int) -> "OKMatrix":
        if e < 0:
            return self.inv().power(-e)
        result = OKMatrix.identity(self.ring, self.nrows)
        base = self
        while e > 0:
            if e & 1:
                result = result @ base
            base = base @ base
            e >>= 1
        return result.with_prec(self.prec)

    # comparisons at certified precision
    def equals(self, other: "OKMatrix", prec: int | None = None) -> bool:
        self._same(other)
        if self.shape != other.shape:
            return False
        p = min(self.prec, other.prec) if prec is None else prec
        mod = self.ring.ell ** p
        return bool(((self.data - other.data) % mod == 0).all())

    def is_zero(self, prec: int | None = None) -> bool:
        p = self.prec if prec is None else prec
        return bool((self.data % (self.ring.ell ** p) == 0).all())

    def is_identity(self, prec: int | None = None) -> bool:
        if self.nrows != self.ncols:
            return False
        return self.equals(OKMatrix.identity(self.ring, self.nrows), prec)

    def valuation(self) -> int:
        """Minimal entry valuation, equal to prec when the matrix vanishes at precision."""
        if self.data.size == 0:
            return self.prec
        v = arith(self.ring).valuations(self.data % (self.ring.ell ** self.prec), self.prec)
        return int(v.min())

    def div_ell(self, k: int) -> "OKMatrix":
        """Exact division by ell^k; costs k digits of certified precision."""
        if k == 0:
            return self
        pk = self.ring.ell ** k
        if (self.data % pk != 0).any():
            raise ArithmeticError(f"matrix not divisible by ell^{k}")
        return OKMatrix(self.ring, self.data // pk, self.prec - k)

    def mul_ell(self, k: int) -> "OKMatrix":
        if k == 0:
            return self
        ar = arith(self.ring)
        if k >= self.ring.N:
            return OKMatrix(self.ring, ar.zeros(self.shape), self.prec)
        return OKMatrix(self.ring, mulmod(self.data, np.asarray(self.ring.ell ** k % ar.M, dtype=self.data.dtype), ar.M), self.prec)

    def residue(self) -> "OKMatrix":
        """Reduction mod ell as a matrix over F_q."""
        return OKMatrix(self.ring.residue, self.data % self.ring.ell)

    def lift(self, ring: RingSpec) -> "OKMatrix":
        """Coefficientwise lift of a residue matrix into `ring` (digits 0..ell-1)."""
        return OKMatrix(ring, self.data.astype(arith(ring).dtype))

    def to_ints(self) -> list:
        d = self.data
        if self.ring.m == 1:
            return [[int(d[i, j, 0]) for j in range(d.shape[1])] for i in range(d.shape[0])]
        return [[[int(x) for x in d[i, j]] for j in range(d.shape[1])] for i in range(d.shape[0])]

    def __eq__(self, other):
        return isinstance(other, OKMatrix) and other.ring == self.ring and self.equals(other)

    __hash__ = None

    def __repr__(self):
        return f"OKMatrix({self.nrows}x{self.ncols}, prec={self.prec}, {self.to_ints()})"

    # determinant and inverse
    def det(self) -> OKElem:
        if self.nrows != self.ncols:
            raise ShapeMismatch("determinant of a non-square matrix")
        value, _ = _det(self)
        return value

    def inv(self) -> "OKMatrix":
        """Inverse over O_K; requires a unit determinant and loses no precision."""
        if self.nrows != self.ncols:
            raise ShapeMismatch("inverse of a non-square matrix")
        # a column without a unit pivot means det vanishes mod ell
        out = _unit_pivot_inverse(self)
        if out is None:
            raise NotInvertible("determinant is not a unit")
        return out


def block_diag(*mats: OKMatrix) -> OKMatrix:
    ring = mats[0].ring
    r = sum(m.nrows for m in mats)
    c = sum(m.ncols for m in mats)
    out = arith(ring).zeros((r, c))
    i = j = 0
    for m in mats:
        out[i : i + m.nrows, j : j + m.ncols] = m.data
        i += m.nrows
        j += m.ncols
    return OKMatrix(ring, out, min(m.prec for m in mats))


def hstack(mats) -> OKMatrix:
    mats = list(mats)
    return OKMatrix(mats[0].ring, np.concatenate([m.data for m in mats], axis=1), min(m.prec for m in mats))


def vstack(mats) -> OKMatrix:
    mats = list(mats)
    return OKMatrix(mats[0].ring, np.concatenate([m.data for m in mats], axis=0), min(m.prec for m in mats))


def stack_matmul(A: OKMatrix, stack: np.ndarray, ring: RingSpec) -> np.ndarray:
    """A @ each matrix of a (k, n, n, m) stack."""
    return arith(ring).matmul(A.data[None], stack)


def companion(ring: RingSpec, coeffs) -> OKMatrix:
    """Companion matrix of a monic polynomial (ints or coefficient tuples, constant first)."""
    n = len(coeffs) - 1
    ar = arith(ring)
    d = ar.zeros((n, n))
    for i in range(1, n):
        d[i, i - 1, 0] = 1
    for i in range(n):
        c = ar.const(coeffs[i])
        d[i, n - 1] = (-c) % ar.M
    return OKMatrix(ring, d)


# ---------------------------------------------------------------------------
# elimination kernels


def _scalar_inv(ring, digits, c: np.ndarray) -> np.ndarray:
    ar = arith(ring, digits)
    return ar.const(ar.scalar.inv(_tup(c)))


def _unit_pivot_inverse_small(A: OKMatrix):
    """Scalar Gauss-Jordan for small matrices, where numpy call overhead dominates."""
    n = A.nrows
    ring = A.ring
    ca = CoeffArith(ring)
    ell = ring.ell
    one, zero = ca.one, ca.zero
    W = [[_tup(A.data[i, j]) for j in range(n)] + [one if i == j else zero for j in range(n)]
         for i in range(n)]
    for k in range(n):
        p = next((i for i in range(k, n) if any(c % ell for c in W[i][k])), None)
        if p is None:
            return None
        W[k], W[p] = W[p], W[k]
        piv = ca.inv(W[k][k])
        W[k] = [ca.mul(piv, x) for x in W[k]]
        for i in range(n):
            f = W[i][k]
            if i != k and any(f):
                W[i] = [ca.sub(x, ca.mul(f, y)) for x, y in zip(W[i], W[k])]
    data = np.array([[list(x) for x in row[n:]] for row in W], dtype=object)
    return OKMatrix(ring, asmod(data, ring.modulus), A.prec)


def _unit_pivot_inverse(A: OKMatrix):
    """Gauss-Jordan on [A | I] with unit pivots; None when some column has no unit pivot."""
    n = A.nrows
    if n <= 6:
        return _unit_pivot_inverse_small(A)
    ring = A.ring
    ar = arith(ring)
    ell = ring.ell
    W = np.concatenate([A.data, OKMatrix.identity(ring, n).data.astype(A.data.dtype)], axis=1)
    for k in range(n):
        units = np.nonzero((W[k:, k] % ell != 0).any(axis=-1))[0]
        if not len(units):
            return None
        p = k + int(units[0])
        if p != k:
            W[[k, p]] = W[[p, k]]
        W[k] = ar.mul(W[k], _scalar_inv(ring, ring.N, W[k, k])[None, :])
        col = W[:, k].copy()
        col[k] = 0
        if col.any():
            W = (W - ar.mul(col[:, None, :], W[k][None, :, :])) % ar.M
    return OKMatrix(ring, W[:, n:], A.prec)


def _det(A: OKMatrix):
    det, prec, _total = _det_full(A)
    return det, prec


def _det_full(A: OKMatrix):
    """Full-pivoting elimination below the pivot; returns (det, certified precision, v(det)) or None if singular.

    The pivot has minimal valuation v among the remaining entries, so the
    multipliers col / ell^v only ever meet pivot-row entries divisible by
    ell^v: the Schur complements keep the input precision p, and the
    determinant is known to p + v(det) - max v.
    """
    ring = A.ring
    ar = arith(ring)
    ell = ring.ell
    n = A.nrows
    R = A.data.copy()
    prec = A.prec
    det = ar.const(1)
    sign = 1
    rows = list(range(n))
    cols = list(range(n))
    total = vmax = 0
    for step in range(n):
        sub = R[np.ix_(rows[step:], cols[step:])] % (ell ** prec)
        vals = ar.valuations(sub, prec)
        v = int(vals.min())
        if v >= prec:
            return OKElem(ring, (0,) * ring.m), prec, None
        ii, jj = np.argwhere(vals == v)[0]
        ii += step
        jj += step
        if ii != step:
            rows[step], rows[ii] = rows[ii], rows[step]
            sign = -sign
        if jj != step:
            cols[step], cols[jj] = cols[jj], cols[step]
            sign = -sign
        pr, pc = rows[step], cols[step]
        piv = R[pr, pc]
        det = ar.mul(det, piv)
        total += v
        vmax = max(vmax, v)
        if step == n - 1:
            break
        unit = piv // (ell ** v)
        uinv = _scalar_inv(ring, ring.N, unit)
        rest = rows[step + 1 :]
        col = R[rest, pc] // (ell ** v)
        factors = ar.mul(col, uinv[None, :])
        R[rest] = (R[rest] - ar.mul(factors[:, None, :], R[pr][None, :, :])) % ar.M
    if sign < 0:
        det = (-det) % ar.M
    return OKElem(ring, _tup(det)), min(ring.N, prec + total - vmax), total


def _kinverse(A: OKMatrix) -> "KMatrix":
    """Inverse over K by Gauss-Jordan with full pivoting by minimal valuation.

    A pivot of valuation v > 0 is minimal among the unpivoted rows, so only
    the rows pivoted earlier are multiplied by ell^v before elimination; the
    final diagonal of powers of ell is divided out as a global shift. Each
    such pivot costs v digits of the stored representatives, so the work is
    done v(det A) digits above the ring precision.
    """
    ring = A.ring
    ell = ring.ell
    n = A.nrows
    N = ring.N
    _d, _dprec, d = _det_full(A)
    if d is None:
        raise NotInvertible("matrix is singular at working precision")
    digits = N + int(d)
    ar = arith(ring, digits)
    eye = ar.zeros((n, n))
    eye[np.arange(n), np.arange(n), 0] = 1
    R = np.concatenate([asmod(A.data, ar.M), eye], axis=1)
    expo = np.zeros(n, dtype=np.int64)
    pivrow = []
    pivcol = []
    free_r = list(range(n))
    free_c = list(range(n))
    for _ in range(n):
        p = A.prec
        sub = R[np.ix_(free_r, free_c)] % (ell ** p)
        vals = ar.valuations(sub, p)
        v = int(vals.min())
        if v >= p:
            raise NotInvertible("matrix is singular at working precision")
        ii, jj = np.argwhere(vals == v)[0]
        i, j = free_r[ii], free_c[jj]
        if v > 0 and pivrow:
            R[pivrow] = mulmod(R[pivrow], np.asarray(ell ** v, dtype=R.dtype), ar.M)
            expo[pivrow] += v
        unit = R[i, j] // (ell ** v)
        uinv = _scalar_inv(ring, digits, unit)
        R[i] = ar.mul(R[i], uinv[None, :])
        expo[i] += v
        others = [k for k in range(n) if k != i]
        if others:
            col = R[others, j] // (ell ** v)
            R[others] = (R[others] - ar.mul(col[:, None, :], R[i][None, :, :])) % ar.M
        pivrow.append(i)
        pivcol.append(j)
        free_r.remove(i)
        free_c.remove(j)
    top = int(expo.max())
    big = ar.zeros((n, n))
    for i, j in zip(pivrow, pivcol):
        big[j] = mulmod(R[i, n:], np.asarray(ell ** int(top - expo[i]) % ar.M, dtype=R.dtype), ar.M)
    v0 = min(int(ar.valuations(big, digits).min()), top)
    out = asmod(big // (ell ** v0), ell ** N)
    top -= v0
    # Precision from the residual: with X = ell^-s A^-1 and A X = ell^-s I + R,
    # X is correct to min(v(R), prec(A)) + s digits (s <= 0 the shift of A^-1).
    K = KMatrix(OKMatrix(ring, out, N), -top)
    s = min(K.shift, 0)
    X = K.integral.mul_ell(K.shift - s) if K.shift > s else K.integral
    Afull = OKMatrix(ring, A.data, N)
    resid = Afull @ X - OKMatrix.identity(ring, n).mul_ell(-s)
    r = min(resid.valuation(), A.prec)
    prec = max(min(r + s, N), 0)
    return KMatrix(OKMatrix(ring, X.data, prec), s)


@dataclass
class Echelon:
    """Reduced row echelon data over O_K: pivot rows carry a unit 1 in their pivot column."""

    rows: np.ndarray  # (num pivots, ncols, m)
    pivots: list
    free: list
    prec: int


def rref(A: OKMatrix) -> Echelon:
    """Gauss-Jordan elimination with unit pivots.

    When no unit pivot remains every remaining row is divisible by ell and is
    divided by it (a K-scaling, so the K-kernel is unchanged); each division
    costs the row one digit. Rows that vanish at their precision are dropped.
    """
    ring = A.ring
    ar = arith(ring)
    ell = ring.ell
    R = A.data.copy()
    nr, nc = A.shape
    rowprec = np.full(nr, A.prec, dtype=np.int64)
    active = list(range(nr))
    piv_rows: list[int] = []
    piv_cols: list[int] = []
    nonpiv = np.ones(nc, dtype=bool)
    live = np.ones(nr, dtype=bool)  # rows still active
    pivmask = np.zeros(nr, dtype=bool)
    while active:
        sub = R[active] % ell
        units = (sub != 0).any(axis=-1) & nonpiv[None, :]
        if units.any():
            colmask = units.any(axis=0)
            j = int(np.argmax(colmask))
            ii = int(np.argmax(units[:, j]))
            i = active[ii]
            uinv = _scalar_inv(ring, ring.N, R[i, j])
            R[i] = ar.mul(R[i], uinv[None, :])
            live[i] = False
            others = list(np.flatnonzero(live | pivmask))
            if others:
                col = R[others, j]
                nzr = col.any(axis=-1)
                if nzr.any():
                    oth = [k for k, z in zip(others, nzr) if z]
                    R[oth] = (R[oth] - ar.mul(R[oth, j][:, None, :], R[i][None, :, :])) % ar.M
                    rowprec[oth] = np.minimum(rowprec[oth], rowprec[i])
            active.remove(i)
            pivmask[i] = True
            piv_rows.append(i)
            piv_cols.append(j)
            nonpiv[j] = False
            continue
        keep = []
        for k in active:
            mod = ell ** int(rowprec[k]) if rowprec[k] > 0 else 1
            if rowprec[k] <= 0 or not (R[k] % mod).any():
                continue
            keep.append(k)
        if not keep:
            break
        R[keep] = R[keep] // ell
        rowprec[keep] -= 1
        live[:] = False
        live[keep] = True
        active = keep
    order = np.argsort(piv_cols)
    rows = np.stack([R[piv_rows[o]] for o in order]) if piv_rows else ar.zeros((0, nc))
    pivots = [piv_cols[o] for o in order]
    free = [j for j in range(nc) if nonpiv[j]]
    prec = int(min([rowprec[i] for i in piv_rows], default=A.prec))
    return Echelon(rows, pivots, free, prec)


def kernel(A: OKMatrix) -> OKMatrix:
    """Saturated basis (columns) of the right K-kernel, identity on the free coordinates."""
    ring = A.ring
    ar = arith(ring)
    ech = rref(A)
    nc = A.ncols
    K = ar.zeros((nc, len(ech.free)))
    for t, f in enumerate(ech.free):
        K[f, t, 0] = 1
        for r, pcol in enumerate(ech.pivots):
            K[pcol, t] = (-ech.rows[r, f]) % ar.M
    return OKMatrix(ring, K, ech.prec)


def rank(A: OKMatrix) -> int:
    return len(rref(A).pivots)


def normalize_basis(B: OKMatrix):
    """Column operations making a saturated basis the identity on some rows.

    Returns (B', rows) with B' = B*U for U invertible over O_K and
    B'[rows] = I; coordinates of a vector in span(B') are read off `rows`.
    """
    ech = rref(B.T)
    if len(ech.pivots) != B.ncols:
        raise NotInvertible("basis is not saturated or not independent")
    return OKMatrix(B.ring, ech.rows.transpose(1, 0, 2).copy(), min(ech.prec, B.prec)), list(ech.pivots)


def solve(A: OKMatrix, b: OKMatrix) -> OKMatrix:
    """Solution X of A X = b for A with unit-determinant square part, via the K-inverse."""
    km = _kinverse(A)
    if km.shift < 0:
        raise NotInvertible("solve requires a unit determinant")
    return km.to_ok() @ b


# ---------------------------------------------------------------------------
# matrices over K


class KMatrix:
    """ell^shift * integral, normalized so the integral part has a unit entry (or is zero)."""

    __slots__ = ("integral", "shift")

    def __init__(self, integral: OKMatrix, shift: int = 0, normalize: bool = True):
        if normalize:
            v = integral.valuation()
            if v >= integral.prec:
                integral, shift = OKMatrix(integral.ring, np.zeros_like(integral.data), integral.prec), 0
            elif v > 0:
                integral = integral.div_ell(v).with_prec(integral.prec)
                shift += v
        self.integral = integral
        self.shift = int(shift)

    @classmethod
    def of(cls, M: OKMatrix) -> "KMatrix":
        return cls(M, 0)

    @property
    def ring(self) -> RingSpec:
        return self.integral.ring

    @property
    def shape(self):
        return self.integral.shape

    @property
    def prec(self):
        return self.integral.prec

    def is_integral(self) -> bool:
        return self.shift >= 0 or self.integral.is_zero()

    def to_ok(self) -> OKMatrix:
        if self.shift < 0:
            if self.integral.is_zero():
                return OKMatrix.zeros(self.ring, *self.shape)
            raise ArithmeticError("matrix is not integral")
        return self.integral.mul_ell(self.shift)

    def __matmul__(self, other):
        if isinstance(other, OKMatrix):
            other = KMatrix(other)
        return KMatrix(self.integral @ other.integral, self.shift + other.shift)

    def _align(self, other):
        s = min(self.shift, other.shift)
        return self.integral.mul_ell(self.shift - s), other.integral.mul_ell(other.shift - s), s

    def __add__(self, other):
        a, b, s = self._align(other)
        return KMatrix(a + b, s)

    def __sub__(self, other):
        a, b, s = self._align(other)
        return KMatrix(a - b, s)

    def __neg__(self):
        return KMatrix(-self.integral, self.shift, normalize=False)

    @property
    def T(self):
        return KMatrix(self.integral.T, self.shift, normalize=False)

    def scale(self, c) -> "KMatrix":
        return KMatrix(self.integral.scale(c), self.shift)

    def inv(self) -> "KMatrix":
        km = _kinverse(self.integral)
        return KMatrix(km.integral, km.shift - self.shift)

    def equals(self, other: "KMatrix", prec: int | None = None) -> bool:
        if isinstance(other, OKMatrix):
            other = KMatrix(other)
        a, b, _ = self._align(other)
        return a.equals(b, prec)

    def __repr__(self):
        return f"KMatrix(shift={self.shift}, {self.integral!r})"


# ---------------------------------------------------------------------------
# lattices and forms


@dataclass
class Lattice:
    """O_K-lattice spanned by the columns of an invertible K-matrix."""

    basis: KMatrix

    @classmethod
    def standard(cls, ring: RingSpec, n: int) -> "Lattice":
        return cls(KMatrix(OKMatrix.identity(ring, n)))

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def contains(self, other: "Lattice") -> bool:
        return (self.basis.inv() @ other.basis).is_integral()

    def equals(self, other: "Lattice") -> bool:
        return self.contains(other) and other.contains(self)


@dataclass
class BilinearForm:
    gram: KMatrix
    parity: str  # "alternating" or "symmetric"
    perfect: bool = False

    def __post_init__(self):
        if self.parity not in ("alternating", "symmetric"):
            raise ValueError(f"unknown parity {self.parity!r}")


def lattice_sum(mats) -> Lattice:
    """Basis of the O_K-span of the columns of all given K-matrices.

    Column reduction over the local ring: at each step the entry of minimal
    valuation in the unreduced rows becomes a pivot and clears its row. Every
    step is a unimodular column operation with integer coefficients, so the
    kept columns are O_K-combinations of the inputs and inherit their
    precision.
    """
    mats = [KMatrix(m) if isinstance(m, OKMatrix) else m for m in mats]
    ring = mats[0].ring
    ar = arith(ring)
    ell = ring.ell
    s = min(m.shift for m in mats)
    X = hstack([m.integral.mul_ell(m.shift - s) for m in mats])
    n = X.nrows
    D = X.data.copy()
    colprec = np.full(X.ncols, min(m.prec for m in mats), dtype=np.int64)
    rows_left = list(range(n))
    cols_left = list(range(X.ncols))
    picked = []
    for _ in range(n):
        p = int(colprec[cols_left].min())
        sub = D[np.ix_(rows_left, cols_left)] % (ell ** p)
        vals = ar.valuations(sub, p)
        v = int(vals.min())
        if v >= p:
            raise PrecisionExhausted("lattice pivot beyond certified precision")
        # smallest row, then smallest column among minimal entries
        ii, jj = np.argwhere(vals == v)[0]
        i, j = rows_left[ii], cols_left[jj]
        unit = D[i, j] // (ell ** v)
        uinv = _scalar_inv(ring, ring.N, unit)
        D[:, j] = ar.mul(D[:, j], uinv[None, :])
        others = [k for k in cols_left if k != j]
        if others:
            f = D[i, others] // (ell ** v)
            nz = f.any(axis=-1)
            if nz.any():
                oth = [k for k, z in zip(others, nz) if z]
                f = f[nz]
                D[:, oth] = (D[:, oth] - ar.mul(D[:, j][:, None, :], f[None, :, :])) % ar.M
                colprec[oth] = np.minimum(colprec[oth], colprec[j])
        rows_left.remove(i)
        cols_left.remove(j)
        picked.append((i, j))
    picked.sort()
    B = OKMatrix(ring, D[:, [j for _, j in picked]], int(min(colprec[j] for _, j in picked)))
    return Lattice(KMatrix(B, s))


def _kron_t(ar, X):
    """(X^T kron X^T) as an (n^2, n^2, m) array, row-major vectorization."""
    XT = X.transpose(1, 0, 2)
    n = XT.shape[0]
    K = ar.mul(XT[:, None, :, None, :], XT[None, :, None, :, :])
    # K[i, k, j, l] = XT[i, j] * XT[k, l]; index (i,k) rows, (j,l) cols
    return K.reshape(n * n, n * n, ar.m)


def _parity_columns(n: int, parity: str):
    if parity == "alternating":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    return [(i, j) for i in range(n) for j in range(i, n)]


def invariant_forms(mats, parity: str) -> list:
    """Basis of the K-space of forms F with M^T F M = F for all M and F^T = +-F."""
    mats = [KMatrix(m) if isinstance(m, OKMatrix) else m for m in mats]
    ring = mats[0].ring
    ar = arith(ring)
    n = mats[0].shape[0]
    pairs = _parity_columns(n, parity)
    sign = -1 if parity == "alternating" else 1
    blocks = []
    prec = min(m.prec for m in mats)
    for M in mats:
        X = M.integral.data
        K = _kron_t(ar, X)
        if M.shift >= 0:
            K = mulmod(K, np.asarray(ring.ell ** (2 * M.shift) % ar.M, dtype=K.dtype), ar.M)
            eye_scale = 1
        else:
            eye_scale = ring.ell ** (-2 * M.shift) % ar.M
        idx = np.arange(n * n)
        K[idx, idx, 0] = (K[idx, idx, 0] - eye_scale) % ar.M
        cols = []
        for i, j in pairs:
            c = K[:, i * n + j].copy()
            if i != j:
                c = (c + sign * K[:, j * n + i]) % ar.M
            cols.append(c)
        blocks.append(np.stack(cols, axis=1) if cols else ar.zeros((n * n, 0)))
    system = OKMatrix(ring, np.concatenate(blocks, axis=0), prec)
    if not pairs:
        return []
    ker = kernel(system)
    forms = []
    for t in range(ker.ncols):
        F = ar.zeros((n, n))
        for u, (i, j) in enumerate(pairs):
            c = ker.data[u, t]
            F[i, j] = c
            if i != j:
                F[j, i] = (sign * c) % ar.M
        forms.append(KMatrix(OKMatrix(ring, F, ker.prec)))
    return forms


def commutant(mats) -> list:
    """Saturated O_K-basis of the matrices X commuting with every given integral matrix."""
    ring = mats[0].ring
    ar = arith(ring)
    n = mats[0].nrows
    blocks = []
    eye = OKMatrix.identity(ring, n).data
    for M in mats:
        # vec(X M) - vec(M X) = (I kron M^T - M kron I) vec(X)
        MT = M.data.transpose(1, 0, 2)
        A = ar.mul(eye[:, None, :, None, :], MT[None, :, None, :, :]).reshape(n * n, n * n, ar.m)
        B = ar.mul(M.data[:, None, :, None, :], eye[None, :, None, :, :]).reshape(n * n, n * n, ar.m)
        blocks.append((A - B) % ar.M)
    system = OKMatrix(ring, np.concatenate(blocks, axis=0), min(m.prec for m in mats))
    ker = kernel(system)
    return [OKMatrix(ring, ker.data[:, t].reshape(n, n, ar.m), ker.prec) for t in range(ker.ncols)]


def form_normalize(F: BilinearForm, T: Lattice):
    """Rescale F so it maps T x T onto O_K; returns (i, perfect form in the T-basis)."""
    G = T.basis.T @ F.gram @ T.basis
    if G.integral.is_zero():
        raise DegenerateAfterScaling("form vanishes on the lattice")
    i = -G.shift
    gram = KMatrix(G.integral, 0, normalize=False)
    d = G.integral.det()
    if not d.is_unit():
        raise DegenerateAfterScaling(f"rescaled Gram determinant has valuation {ok_val(d)}")
    return i, BilinearForm(gram, F.parity, True)


def ok_val(x: OKElem):
    from .padic import ok_valuation

    return ok_valuation(x)


def j_std(ring: RingSpec, n: int) -> OKMatrix:
    if n % 2:
        raise OddDimension(f"dimension {n} is odd")
    ar = arith(ring)
    d = ar.zeros((n, n))
    for k in range(0, n, 2):
        d[k, k + 1, 0] = 1
        d[k + 1, k, 0] = ar.M - 1
    return OKMatrix(ring, d)


def is_alternating(J: OKMatrix, prec: int | None = None) -> bool:
    p = J.prec if prec is None else prec
    mod = J.ring.ell ** p
    skew = ((J.data + J.data.transpose(1, 0, 2)) % mod == 0).all()
    diag = (J.data[np.arange(J.nrows), np.arange(J.nrows)] % mod == 0).all()
    return bool(skew and diag)


def symplectic_basis(J: OKMatrix) -> OKMatrix:
    """S over O_K with S^T J S = J_std, by symplectic Gram-Schmidt on unit pairings."""
    n = J.nrows
    if n % 2:
        raise OddDimension(f"dimension {n} is odd")
    ring = J.ring
    ar = arith(ring)
    if not J.det().is_unit():
        raise NotPerfect("Gram determinant is not a unit")
    ell = ring.ell
    vecs = OKMatrix.identity(ring, n).data  # columns are the remaining vectors
    out = []
    Jd = J.data
    while vecs.shape[1]:
        # Gram of the remaining vectors
        G = ar.matmul(ar.matmul(vecs.transpose(1, 0, 2), Jd), vecs)
        found = None
        for a in range(G.shape[0]):
            units = np.nonzero((G[a] % ell != 0).any(axis=-1))[0]
            if len(units):
                found = (a, int(units[0]))
                break
        if found is None:
            raise NotPerfect("no unit pairing left")
        a, b = found
        x = vecs[:, a]
        y = ar.mul(vecs[:, b], _scalar_inv(ring, ring.N, G[a, b])[None, :])
        rest = [k for k in range(vecs.shape[1]) if k not in (a, b)]
        Z = vecs[:, rest]
        # z' = z - J(z, y) x + J(z, x) y
        Jy = ar.matmul(Jd, y[:, None, :])[:, 0]
        Jx = ar.matmul(Jd, x[:, None, :])[:, 0]
        zy = ar.matmul(Z.transpose(1, 0, 2), Jy[:, None, :])[:, 0]
        zx = ar.matmul(Z.transpose(1, 0, 2), Jx[:, None, :])[:, 0]
        Z = (Z - ar.mul(x[:, None, :], zy[None, :, :]) + ar.mul(y[:, None, :], zx[None, :, :])) % ar.M
        out.extend([x, y])
        vecs = Z
    S = OKMatrix(ring, np.stack(out, axis=1), J.prec)
    return S


def mat_ops(A, B, op: str):
    if op == "add":
        return A + B
    if op == "mul":
        return A @ B
    if op == "transpose":
        return A.T
    if op == "det":
        return A.det() if isinstance(A, OKMatrix) else A.integral.det()
    if op == "inv":
        return A.inv()
    raise ValueError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# residue-field solving and polynomials of matrices


def fq_kernel(A: OKMatrix) -> OKMatrix:
    """Echelonized kernel basis (columns) of a matrix over F_q."""
    return kernel(A)


def fq_solve(A: OKMatrix, b: OKMatrix | None = None):
    """Kernel basis of A, or (particular solution, kernel basis) of A x = b over F_q."""
    if b is None:
        return fq_kernel(A)
    aug = hstack([A, -b])
    ker = kernel(aug)
    n = A.ncols
    last = ker.data[n]
    idx = [t for t in range(ker.ncols) if last[t].any()]
    if not idx:
        return None, fq_kernel(A)
    t = idx[0]
    ar = arith(A.ring)
    inv = _scalar_inv(A.ring, A.ring.N, last[t])
    x = ar.mul(ker.data[:n, t], inv[None, :])
    return OKMatrix(A.ring, x[:, None, :]), fq_kernel(A)


def charpoly(A: OKMatrix) -> list:
    """Characteristic polynomial det(xI - A) by Berkowitz (division free), constant first."""
    ring = A.ring
    ar = arith(ring)
    n = A.nrows
    if n == 0:
        return [CoeffArith(ring).one]
    D = A.data
    v = [ar.const(1), (-D[n - 1, n - 1]) % ar.M]  # highest degree first
    for r in range(n - 2, -1, -1):
        a = D[r, r]
        Rrow = D[r, r + 1 :]
        S = D[r + 1 :, r]
        Msub = D[r + 1 :, r + 1 :]
        k = n - r - 1
        col = [ar.const(1), (-a) % ar.M]
        x = S
        for _ in range(k):
            dot = ar.matmul(Rrow[None, :, :], x[:, None, :])[0, 0]
            col.append((-dot) % ar.M)
            x = ar.matmul(Msub, x[:, None, :])[:, 0]
        new = []
        for i in range(k + 2):
            acc = np.zeros(ar.m, dtype=ar.dtype)
            for j in range(min(i, k) + 1):
                acc = (acc + ar.mul(col[i - j], v[j])) % ar.M
            new.append(acc)
        v = new
    return P.trim([_tup(c) for c in reversed(v)])


def poly_at_matrix(f: list, A: OKMatrix) -> OKMatrix:
    ring = A.ring
    n = A.nrows
    acc = OKMatrix.zeros(ring, n, n)
    eye = OKMatrix.identity(ring, n)
    for c in reversed(f):
        acc = acc @ A + eye.scale(c)
    return acc.with_prec(A.prec)


def poly_factor_squarefree_local(f: list, ring: RingSpec, seed: int = 0) -> list:
    """Hensel lift of the factorization mod ell of monic f (coefficient tuples) to precision N."""
    full = CoeffArith(ring)
    res = CoeffArith(ring, 1)
    fbar = P.reduce(res, f)
    factors = P.factor_squarefree(res, fbar, seed)
    return P.hensel_lift(full, [tuple(c) for c in f], factors)


def minimal_polynomial(x: OKMatrix, rng: random.Random, probes: int = 2) -> list:
    """Monic minimal polynomial of x, from Krylov sequences of random vectors, verified."""
    ring = x.ring
    ar = arith(ring)
    n = x.nrows
    vs = ar.reduce(np.array([[[rng.randrange(ring.ell ** 3) for _ in range(ring.m)] for _ in range(probes)] for _ in range(n)], dtype=object))
    cols = [vs.reshape(n * probes, ring.m)]
    cur = vs
    for d in range(1, n + 1):
        cur = ar.matmul(x.data, cur)
        cols.append(cur.reshape(n * probes, ring.m))
        K = OKMatrix(ring, np.stack(cols, axis=1), x.prec)
        ker = kernel(K)
        if ker.ncols:
            vec = ker.data[:, 0]
            lead = vec[d]
            if not (lead % ring.ell).any():
                continue
            inv = _scalar_inv(ring, ring.N, lead)
            coeffs = ar.mul(vec, inv[None, :])
            f = P.trim([_tup(c) for c in coeffs])
            if poly_at_matrix(f, x).is_zero(min(x.prec, ker.prec)):
                return f
    return charpoly(x)
