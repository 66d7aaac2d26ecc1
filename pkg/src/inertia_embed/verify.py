"""Independent checker for symplectic certificates.

Works directly on integer arrays with its own ring arithmetic: matrix
products are exact float64 BLAS products of small limbs, recombined modulo
ell^prec, followed by reduction modulo the defining polynomial. Nothing here
calls the construction code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)
    precision: int = 0
    dimension: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def lines(self) -> list:
        out = [f"precision: ell^{self.precision}", f"dimension: {self.dimension}"]
        for c in self.checks:
            out.append(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}{': ' + c.detail if c.detail else ''}")
        return out

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "precision": self.precision,
            "dimension": self.dimension,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


class _Ring:
    """Z[x]/(f, ell^prec) on arrays whose last axis holds power-basis coefficients."""

    def __init__(self, ell: int, poly, prec: int):
        self.ell = ell
        self.poly = [int(c) for c in poly]  # monic, constant first
        self.m = len(self.poly) - 1
        self.M = ell ** prec
        self.big = self.M >= (1 << 50)

    def _limb_matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        M = self.M
        k = A.shape[-1]
        if self.big:
            return np.matmul(A.astype(object), B.astype(object)) % M
        bits = max(1, (M - 1).bit_length())
        limb = min((52 - max(1, k).bit_length()) // 2, 62 - bits)
        if limb < 1:
            return np.matmul(A.astype(object), B.astype(object)) % M
        nl = -(-bits // limb)
        mask = (1 << limb) - 1
        Al = [((A >> (limb * i)) & mask).astype(np.float64) for i in range(nl)]
        Bl = [((B >> (limb * i)) & mask).astype(np.float64) for i in range(nl)]
        acc = None
        for s in reversed(range(2 * nl - 1)):
            part = None
            for i in range(max(0, s - nl + 1), min(s, nl - 1) + 1):
                p = np.matmul(Al[i], Bl[s - i]).astype(np.int64) % M
                part = p if part is None else (part + p) % M
            acc = part if acc is None else ((acc << limb) % M + part) % M
        return acc

    def _scal(self, a: np.ndarray, c: int) -> np.ndarray:
        if self.big:
            return a.astype(object) * c % self.M
        if c.bit_length() + (self.M - 1).bit_length() >= 63:
            return (a.astype(object) * c % self.M).astype(np.int64)
        return a * c % self.M

    def matmul(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        """A (..., n, k, m) times B (..., k, p, m)."""
        m = self.m
        if m == 1:
            return self._limb_matmul(A[..., 0], B[..., 0])[..., None]
        prods = [None] * (2 * m - 1)
        for i in range(m):
            for j in range(m):
                p = self._limb_matmul(A[..., i], B[..., j])
                prods[i + j] = p if prods[i + j] is None else (prods[i + j] + p) % self.M
        for t in range(2 * m - 2, m - 1, -1):
            top = prods[t]
            for i in range(m):
                c = (-self.poly[i]) % self.M
                if c:
                    prods[t - m + i] = (prods[t - m + i] + self._scal(top, c)) % self.M
        return np.stack(prods[:m], axis=-1)


def _fq_rank(mat: np.ndarray, ell: int) -> int:
    """Rank over F_ell of an integer matrix."""
    A = (np.asarray(mat, dtype=np.int64) % ell).copy()
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        piv = np.nonzero(A[r:, c])[0]
        if not len(piv):
            continue
        p = r + int(piv[0])
        A[[r, p]] = A[[p, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, ell) % ell
        others = np.nonzero(A[:, c])[0]
        for i in others:
            if i != r:
                A[i] = (A[i] - A[i, c] * A[r]) % ell
        r += 1
        if r == rows:
            break
    return r


def _regular_matrix(J: np.ndarray, poly: list, ell: int) -> np.ndarray:
    """F_ell-matrix (n m x n m) of the F_q-linear map given by J mod ell."""
    n, _, m = J.shape
    # x^k mod f over F_ell for k < 2m
    powers = []
    cur = [1] + [0] * (m - 1)
    for _ in range(2 * m):
        powers.append(cur)
        top = cur[-1]
        cur = [0] + cur[:-1]
        cur = [(cur[i] - top * poly[i]) % ell for i in range(m)]
    out = np.zeros((n * m, n * m), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            a = [int(x) % ell for x in J[i, j]]
            for s in range(m):  # image of basis vector x^s
                col = [0] * m
                for t, at in enumerate(a):
                    if at:
                        for u in range(m):
                            col[u] = (col[u] + at * powers[s + t][u]) % ell
                out[i * m:(i + 1) * m, j * m + s] = col
    return out


def verify_arrays(ell: int, poly, prec: int, table: np.ndarray, images: np.ndarray, gram: np.ndarray,
                  declared_dim: int) -> VerificationReport:
    """Check an embedding given as raw integer data.

    images has shape (|G|, n, n, m), gram (n, n, m), table (|G|, |G|).
    """
    R = _Ring(ell, poly, prec)
    M = R.M
    dtype = object if R.big else np.int64
    imgs = np.asarray(images).astype(dtype) % M
    J = np.asarray(gram).astype(dtype) % M
    table = np.asarray(table, dtype=np.int64)
    order = table.shape[0]
    n = imgs.shape[1]
    report = VerificationReport(precision=prec, dimension=n)

    # (e) dimension
    shapes_ok = imgs.shape[1:3] == (n, n) and J.shape[:2] == (n, n) and imgs.shape[0] == order
    report.checks.append(Check("dimension", bool(shapes_ok and n == declared_dim),
                               f"found {n}, declared {declared_dim}"))
    if not shapes_ok:
        return report

    # (a) homomorphism on all pairs
    bad = 0
    first = None
    for h in range(order):
        prod = R.matmul(imgs, np.broadcast_to(imgs[h], imgs.shape))
        target = imgs[table[:, h]]
        diff = np.nonzero(((prod - target) % M).reshape(order, -1).any(axis=1))[0]
        if len(diff):
            bad += len(diff)
            if first is None:
                first = (int(diff[0]), h)
    report.checks.append(Check("homomorphism", bad == 0,
                               f"{order * order} pairs, {bad} failures" + (f", first at {first}" if first else "")))

    # (b) J alternating with unit determinant
    skew = ((J + J.transpose(1, 0, 2)) % M == 0).all()
    diag = (J[np.arange(n), np.arange(n)] % M == 0).all()
    rank = _fq_rank(_regular_matrix(J, [int(c) for c in poly], ell), ell)
    unit = rank == n * R.m
    report.checks.append(Check("gram alternating", bool(skew and diag), "J^T = -J with zero diagonal"))
    report.checks.append(Check("gram determinant unit", bool(unit), f"rank mod ell {rank} of {n * R.m}"))

    # (c) symplectic
    left = R.matmul(imgs.transpose(0, 2, 1, 3), np.broadcast_to(J, (order,) + J.shape))
    sym = R.matmul(left, imgs)
    bad_s = np.nonzero(((sym - J[None]) % M).reshape(order, -1).any(axis=1))[0]
    report.checks.append(Check("preserves form", len(bad_s) == 0,
                               f"{order} elements, {len(bad_s)} failures"))

    # (d) faithful mod ell
    ident = None
    for e in range(order):
        if (table[e] == np.arange(order)).all():
            ident = e
            break
    eye = np.zeros((n, n, R.m), dtype=np.int64)
    eye[np.arange(n), np.arange(n), 0] = 1
    red = (imgs % ell).astype(np.int64)
    trivial = [g for g in range(order) if g != ident and (red[g] == eye).all()]
    id_ok = ident is not None and (((imgs[ident] - eye) % M) == 0).all()
    report.checks.append(Check("identity maps to I", bool(id_ok), ""))
    report.checks.append(Check("faithful mod ell", not trivial,
                               f"{len(trivial)} nontrivial elements reduce to I" + (f", e.g. {trivial[0]}" if trivial else "")))
    return report


def verify_certificate(cert) -> VerificationReport:
    """Run every check on a certificate object (anything with ring, group, images, gram, dim)."""
    ring = cert.ring
    images = np.stack([np.asarray(M.data) for M in cert.images])
    prec = min(min(M.prec for M in cert.images), cert.gram.prec)
    return verify_arrays(ring.ell, ring.poly, prec, cert.group.table, images, np.asarray(cert.gram.data),
                         cert.dim)
