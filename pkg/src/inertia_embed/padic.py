"""Truncated arithmetic in O_K, the unramified degree-m extension of Z_ell.

Elements are coefficient vectors in the power basis 1, x, ..., x^(m-1) of
Z_ell[x]/(f) with f monic and irreducible mod ell, stored mod ell^N.
Since K/Q_ell is unramified the uniformizer is ell itself and the residue
field is F_q = F_ell[x]/(f mod ell), q = ell^m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

from .errors import (
    DivisionByZero,
    EvenPrime,
    NonResidue,
    NotPrime,
    NotUnit,
    PrecisionTooLow,
    RingMismatch,
    ZeroInput,
)

MIN_PRECISION = 4


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def int_valuation(x: int, ell: int) -> int | float:
    if x == 0:
        return math.inf
    v = 0
    while x % ell == 0:
        x //= ell
        v += 1
    return v


@dataclass(frozen=True)
class RingSpec:
    """O_K truncated at ell^N; `poly` is the monic defining polynomial, low degree first."""

    ell: int
    m: int
    N: int
    poly: tuple = field(default=(0, 1))

    @property
    def q(self) -> int:
        return self.ell ** self.m

    @cached_property
    def modulus(self) -> int:
        return self.ell ** self.N

    @cached_property
    def reduction(self) -> tuple:
        """x^k reduced mod poly as integer coefficient tuples, k = 0 .. 2m-2."""
        m = self.m
        rows = []
        cur = [0] * m
        cur[0] = 1
        for k in range(max(2 * m - 1, 1)):
            if k < m:
                vec = [0] * m
                vec[k] = 1
                rows.append(tuple(vec))
                if k == m - 1:
                    cur = vec
                continue
            # multiply previous by x and reduce x^m = -sum poly[i] x^i
            top = cur[m - 1]
            nxt = [0] + cur[:-1]
            nxt = [nxt[i] - top * self.poly[i] for i in range(m)]
            rows.append(tuple(nxt))
            cur = nxt
        return tuple(rows)

    def with_precision(self, N: int) -> "RingSpec":
        # internal: residue views (N = 1) bypass the public minimum
        return replace(self, N=N)

    @cached_property
    def residue(self) -> "RingSpec":
        return self.with_precision(1)

    def elem(self, value) -> "OKElem":
        return OKElem(self, _normalize(self, value, self.modulus))

    def zero(self) -> "OKElem":
        return self.elem(0)

    def one(self) -> "OKElem":
        return self.elem(1)

    def fq(self, value) -> "FqElem":
        return FqElem(self, _normalize(self, value, self.ell))

    def __repr__(self):
        return f"RingSpec(ell={self.ell}, m={self.m}, N={self.N}, poly={self.poly})"


def _normalize(ring: RingSpec, value, mod: int) -> tuple:
    if isinstance(value, (OKElem, FqElem)):
        value = value.coeffs
    if isinstance(value, int):
        vec = [value] + [0] * (ring.m - 1)
    else:
        vec = list(value)
        if len(vec) != ring.m:
            raise ValueError(f"expected {ring.m} coefficients, got {len(vec)}")
    return tuple(int(c) % mod for c in vec)


# ---------------------------------------------------------------------------
# coefficient-tuple arithmetic, shared by elements, polynomials and matrices


class CoeffArith:
    """Arithmetic on coefficient tuples of O_K / ell^digits (digits=1: F_q)."""

    def __init__(self, ring: RingSpec, digits: int | None = None):
        self.ring = ring
        self.digits = ring.N if digits is None else digits
        self.mod = ring.ell ** self.digits
        self.m = ring.m
        self.zero = (0,) * ring.m
        self.one = (1,) + (0,) * (ring.m - 1)

    def scalar(self, n: int) -> tuple:
        return (n % self.mod,) + (0,) * (self.m - 1)

    def add(self, a, b):
        M = self.mod
        return tuple((x + y) % M for x, y in zip(a, b))

    def sub(self, a, b):
        M = self.mod
        return tuple((x - y) % M for x, y in zip(a, b))

    def neg(self, a):
        M = self.mod
        return tuple((-x) % M for x in a)

    def mul(self, a, b):
        m, M = self.m, self.mod
        if m == 1:
            return ((a[0] * b[0]) % M,)
        if m == 2:
            a0, a1 = a
            b0, b1 = b
            c2 = a1 * b1
            r0, r1 = self.ring.reduction[2]
            return ((a0 * b0 + c2 * r0) % M, (a0 * b1 + a1 * b0 + c2 * r1) % M)
        prod = [0] * (2 * m - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        red = self.ring.reduction
        out = [0] * m
        for k, c in enumerate(prod):
            if c:
                row = red[k]
                for i in range(m):
                    out[i] += c * row[i]
        return tuple(x % M for x in out)

    def smul(self, n: int, a):
        M = self.mod
        return tuple((n * x) % M for x in a)

    def pow(self, a, e: int):
        result, base = self.one, a
        while e > 0:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def is_zero(self, a) -> bool:
        return not any(a)

    def is_unit(self, a) -> bool:
        ell = self.ring.ell
        return any(x % ell for x in a)

    def residue_inv(self, a):
        """Inverse in F_q of the reduction of a."""
        ell = self.ring.ell
        res = CoeffArith(self.ring, 1)
        abar = tuple(x % ell for x in a)
        if not any(abar):
            raise DivisionByZero("zero has no inverse in the residue field")
        return res.pow(abar, self.ring.q - 2)

    def inv(self, a):
        """Inverse of a unit: residue inverse then Newton iteration y <- y(2 - a y)."""
        if not self.is_unit(a):
            raise NotUnit("element has positive valuation")
        y = self.residue_inv(a)
        if self.digits == 1:
            return y
        correct = 1
        two = self.scalar(2)
        while correct < self.digits:
            y = self.mul(y, self.sub(two, self.mul(a, y)))
            correct *= 2
        return y

    def valuation(self, a) -> int | float:
        v = min(int_valuation(x, self.ring.ell) for x in a)
        return math.inf if v >= self.digits else v

    def reduce(self, a, digits: int):
        M = self.ring.ell ** digits
        return tuple(x % M for x in a)


# ---------------------------------------------------------------------------
# public ring construction


def _rabin_irreducible(ell: int, coeffs: tuple) -> bool:
    from . import poly as P

    ar = CoeffArith(RingSpec(ell, 1, 1, (0, 1)), 1)
    f = [(c % ell,) for c in coeffs]
    return P.is_irreducible(ar, f)


def find_defining_polynomial(ell: int, m: int) -> tuple:
    """Smallest monic degree-m polynomial irreducible mod ell (coefficients read as base-ell digits)."""
    if m == 1:
        return (0, 1)
    for k in range(ell ** m):
        digits, t = [], k
        for _ in range(m):
            digits.append(t % ell)
            t //= ell
        coeffs = tuple(digits) + (1,)
        if digits[0] != 0 and _rabin_irreducible(ell, coeffs):
            return coeffs
    raise RuntimeError("no irreducible polynomial found")  # unreachable for prime ell


def ring_create(ell: int, m: int, N: int) -> RingSpec:
    if not is_prime(ell):
        raise NotPrime(f"{ell} is not prime")
    if ell == 2:
        raise EvenPrime("ell must be odd")
    if m < 1:
        raise ValueError("unramified degree must be >= 1")
    if N < MIN_PRECISION:
        raise PrecisionTooLow(f"precision {N} < {MIN_PRECISION}")
    return RingSpec(ell, m, N, find_defining_polynomial(ell, m))


# ---------------------------------------------------------------------------
# elements


@dataclass(frozen=True)
class OKElem:
    ring: RingSpec
    coeffs: tuple

    def _check(self, other) -> "OKElem":
        if isinstance(other, int):
            return self.ring.elem(other)
        if not isinstance(other, OKElem):
            return NotImplemented
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")
        return other

    @property
    def _ar(self) -> CoeffArith:
        return _arith(self.ring)

    def __add__(self, other):
        other = self._check(other)
        return OKElem(self.ring, self._ar.add(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return OKElem(self.ring, self._ar.sub(self.coeffs, other.coeffs))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        return OKElem(self.ring, self._ar.mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return OKElem(self.ring, self._ar.neg(self.coeffs))

    def __pow__(self, e: int):
        if e < 0:
            return ok_inv(self) ** (-e)
        return OKElem(self.ring, self._ar.pow(self.coeffs, e))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_unit(self) -> bool:
        return self._ar.is_unit(self.coeffs)

    def residue(self) -> "FqElem":
        return self.ring.fq(self.coeffs)

    def __int__(self):
        if any(self.coeffs[1:]):
            raise ValueError("element is not in Z_ell")
        return self.coeffs[0]

    def __repr__(self):
        if self.ring.m == 1:
            return f"OKElem({self.coeffs[0]} mod {self.ring.ell}^{self.ring.N})"
        return f"OKElem({list(self.coeffs)} mod {self.ring.ell}^{self.ring.N})"


@dataclass(frozen=True)
class FqElem:
    ring: RingSpec
    coeffs: tuple

    def _check(self, other) -> "FqElem":
        if isinstance(other, int):
            return self.ring.fq(other)
        if not isinstance(other, FqElem):
            return NotImplemented
        if other.ring != self.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")
        return other

    @property
    def _ar(self) -> CoeffArith:
        return _residue_arith(self.ring)

    def __add__(self, other):
        other = self._check(other)
        return FqElem(self.ring, self._ar.add(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._check(other)
        return FqElem(self.ring, self._ar.sub(self.coeffs, other.coeffs))

    def __mul__(self, other):
        other = self._check(other)
        return FqElem(self.ring, self._ar.mul(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return FqElem(self.ring, self._ar.neg(self.coeffs))

    def __pow__(self, e: int):
        return fq_pow(self, e)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __repr__(self):
        return f"FqElem({list(self.coeffs)} in F_{self.ring.q})"


_ARITH_CACHE: dict = {}


def _arith(ring: RingSpec) -> CoeffArith:
    key = (ring, ring.N)
    ar = _ARITH_CACHE.get(key)
    if ar is None:
        ar = _ARITH_CACHE[key] = CoeffArith(ring)
    return ar


def _residue_arith(ring: RingSpec) -> CoeffArith:
    key = (ring, 1)
    ar = _ARITH_CACHE.get(key)
    if ar is None:
        ar = _ARITH_CACHE[key] = CoeffArith(ring, 1)
    return ar


# ---------------------------------------------------------------------------
# operations


def ok_arith(x: OKElem, y: OKElem, op: str) -> OKElem:
    if x.ring != y.ring:
        raise RingMismatch(f"{x.ring} vs {y.ring}")
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    raise ValueError(f"unknown op {op!r}")


def ok_inv(x: OKElem) -> OKElem:
    return OKElem(x.ring, _arith(x.ring).inv(x.coeffs))


def ok_valuation(x: OKElem) -> int | float:
    return _arith(x.ring).valuation(x.coeffs)


def fq_arith(a: FqElem, b: FqElem, op: str) -> FqElem:
    if a.ring != b.ring:
        raise RingMismatch(f"{a.ring} vs {b.ring}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a * fq_inv(b)
    raise ValueError(f"unknown op {op!r}")


def fq_inv(a: FqElem) -> FqElem:
    if a.is_zero():
        raise DivisionByZero("inverse of zero in F_q")
    return FqElem(a.ring, _residue_arith(a.ring).residue_inv(a.coeffs))


def fq_pow(a: FqElem, e: int) -> FqElem:
    if e < 0:
        return fq_pow(fq_inv(a), -e)
    return FqElem(a.ring, _residue_arith(a.ring).pow(a.coeffs, e))


def fq_is_square(a: FqElem) -> bool:
    """Euler criterion; zero counts as a square."""
    if a.is_zero():
        return True
    return fq_pow(a, (a.ring.q - 1) // 2).coeffs == _residue_arith(a.ring).one


def fq_elements(ring: RingSpec):
    """All elements of F_q in a fixed order (integer index read in base ell)."""
    ell, m = ring.ell, ring.m
    for k in range(ring.q):
        digits, t = [], k
        for _ in range(m):
            digits.append(t % ell)
            t //= ell
        yield tuple(digits)


def tonelli_shanks(x, *, one, mul, power, eq, order: int, nonresidue):
    """Square root of x in a cyclic group of even `order`, given a non-square."""
    s, t = 0, order
    while t % 2 == 0:
        t //= 2
        s += 1
    z = power(nonresidue, t)
    r = power(x, (t + 1) // 2)
    b = power(x, t)
    M = s
    while not eq(b, one):
        i, bb = 0, b
        while not eq(bb, one):
            bb = mul(bb, bb)
            i += 1
        if i >= M:
            raise NonResidue("element is not a square")
        c = z
        for _ in range(M - i - 1):
            c = mul(c, c)
        r = mul(r, c)
        z = mul(c, c)
        b = mul(b, z)
        M = i
    return r


@lru_cache(maxsize=None)
def _first_nonresidue(ring: RingSpec) -> tuple:
    return next(v for v in fq_elements(ring) if any(v) and not fq_is_square(FqElem(ring, v)))


def fq_sqrt(a: FqElem) -> FqElem:
    """A square root of a in F_q (the lexicographically smaller of the two)."""
    ar = _residue_arith(a.ring)
    if a.is_zero():
        return a
    if not fq_is_square(a):
        raise NonResidue(f"{a} is not a square")
    q = a.ring.q
    nonres = _first_nonresidue(a.ring)
    r = tonelli_shanks(
        a.coeffs,
        one=ar.one,
        mul=ar.mul,
        power=ar.pow,
        eq=lambda u, v: u == v,
        order=q - 1,
        nonresidue=nonres,
    )
    return FqElem(a.ring, min(r, ar.neg(r)))


def ok_sqrt(x: OKElem) -> OKElem:
    """Square root of a unit by Hensel lifting a residue root; derivative 2y is a unit.

    Of the two roots the one with the smaller reduced coefficient vector is
    returned, e.g. sqrt(6) mod 25 is 9 rather than 16.
    """
    ar = _arith(x.ring)
    if not x.is_unit():
        raise NotUnit("square root is only defined here for units")
    r0 = fq_sqrt(x.residue())
    # Newton on z = 1/sqrt(x): z <- z (3 - x z^2) / 2, multiplications only
    z = ar.residue_inv(r0.coeffs)
    half = ar.scalar(pow(2, -1, ar.mod))
    three = ar.scalar(3)
    correct = 1
    while correct < x.ring.N:
        z = ar.mul(ar.mul(z, ar.sub(three, ar.mul(x.coeffs, ar.mul(z, z)))), half)
        correct *= 2
    y = ar.mul(x.coeffs, z)
    return OKElem(x.ring, min(y, ar.neg(y)))


def teichmuller(r: FqElem) -> OKElem:
    """The (q-1)-st root of unity lifting r, by Newton iteration on y^(q-1) = 1."""
    if r.is_zero():
        raise ZeroInput("Teichmuller lift of zero")
    ring = r.ring
    ar = _arith(ring)
    q = ring.q
    y = tuple(r.coeffs)
    inv_qm1 = ar.scalar(pow(q - 1, -1, ar.mod))
    correct = 1
    while correct < ring.N:
        # Newton step y - y (w - 1) / ((q-1) w) with w = y^(q-1) = 1 + O(ell^k);
        # dropping the 1/w factor changes the step by O(ell^2k)
        w = ar.pow(y, q - 1)
        y = ar.sub(y, ar.mul(ar.mul(y, ar.sub(w, ar.one)), inv_qm1))
        correct *= 2
    return OKElem(ring, y)
