"""Univariate polynomials with coefficients in O_K / ell^k or in F_q.

A polynomial is a list of coefficient tuples, constant term first, with no
trailing zeros (the zero polynomial is the empty list). All routines take a
`CoeffArith` describing the coefficient ring.
"""

from __future__ import annotations

import random
from functools import lru_cache

from .errors import NotSquarefreeModEll, NotUnit
from .padic import CoeffArith, prime_factors


def trim(f: list) -> list:
    f = list(f)
    while f and not any(f[-1]):
        f.pop()
    return f


def deg(f: list) -> int:
    return len(f) - 1


def const(ar: CoeffArith, c) -> list:
    if isinstance(c, int):
        c = ar.scalar(c)
    return trim([c])


def from_ints(ar: CoeffArith, coeffs) -> list:
    return trim([ar.scalar(int(c)) for c in coeffs])


def add(ar, f, g):
    n = max(len(f), len(g))
    out = []
    for i in range(n):
        a = f[i] if i < len(f) else ar.zero
        b = g[i] if i < len(g) else ar.zero
        out.append(ar.add(a, b))
    return trim(out)


def sub(ar, f, g):
    return add(ar, f, neg(ar, g))


def neg(ar, f):
    return [ar.neg(c) for c in f]


def scale(ar, c, f):
    return trim([ar.mul(c, a) for a in f])


def mul(ar, f, g):
    if not f or not g:
        return []
    out = [ar.zero] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        if not any(a):
            continue
        for j, b in enumerate(g):
            out[i + j] = ar.add(out[i + j], ar.mul(a, b))
    return trim(out)


def divmod_(ar, f, g):
    """Quotient and remainder; the leading coefficient of g must be a unit."""
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    lead_inv = ar.inv(g[-1])
    dg = deg(g)
    r = list(f)
    if len(r) <= dg:
        return [], trim(r)
    q = [ar.zero] * (len(r) - dg)
    for k in range(len(r) - 1 - dg, -1, -1):
        c = ar.mul(r[k + dg], lead_inv)
        q[k] = c
        if any(c):
            for i, b in enumerate(g):
                r[k + i] = ar.sub(r[k + i], ar.mul(c, b))
    return trim(q), trim(r[:dg])


def rem(ar, f, g):
    return divmod_(ar, f, g)[1]


def monic(ar, f):
    if not f:
        return f
    return scale(ar, ar.inv(f[-1]), f)


def gcd(ar, f, g):
    """Monic gcd over a field (ar.digits == 1)."""
    while g:
        f, g = g, rem(ar, f, g)
    return monic(ar, f)


def xgcd(ar, f, g):
    """(d, s, t) with s f + t g = d monic, over a field."""
    r0, r1 = f, g
    s0, s1 = const(ar, 1), []
    t0, t1 = [], const(ar, 1)
    while r1:
        q, r = divmod_(ar, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, sub(ar, s0, mul(ar, q, s1))
        t0, t1 = t1, sub(ar, t0, mul(ar, q, t1))
    if not r0:
        return r0, s0, t0
    c = ar.inv(r0[-1])
    return scale(ar, c, r0), scale(ar, c, s0), scale(ar, c, t0)


def powmod(ar, f, e: int, modulus):
    result = const(ar, 1)
    base = rem(ar, f, modulus)
    while e > 0:
        if e & 1:
            result = rem(ar, mul(ar, result, base), modulus)
        base = rem(ar, mul(ar, base, base), modulus)
        e >>= 1
    return result


def deriv(ar, f):
    return trim([ar.smul(i, f[i]) for i in range(1, len(f))])


def evaluate(ar, f, x):
    acc = ar.zero
    for c in reversed(f):
        acc = ar.add(ar.mul(acc, x), c)
    return acc


def reduce(ar_target: CoeffArith, f):
    """Reduce coefficients into the (coarser) ring of `ar_target`."""
    return trim([ar_target.reduce(c, ar_target.digits) for c in f])


def _x(ar):
    return [ar.zero, ar.one]


def is_squarefree(ar, f) -> bool:
    return deg(gcd(ar, f, deriv(ar, f))) == 0


def is_irreducible(ar, f) -> bool:
    """Rabin's test over F_q (ar.digits must be 1)."""
    f = monic(ar, f)
    n = deg(f)
    if n <= 0:
        return False
    if n == 1:
        return True
    q = ar.ring.q
    x = _x(ar)

    def frob_power(k):
        y = x
        for _ in range(k):
            y = powmod(ar, y, q, f)
        return y

    if sub(ar, frob_power(n), rem(ar, x, f)):
        return False
    for p in prime_factors(n):
        h = sub(ar, frob_power(n // p), x)
        if deg(gcd(ar, f, h)) != 0:
            return False
    return True


def distinct_degree(ar, f) -> list:
    """Pairs (d, product of the degree-d irreducible factors) for squarefree monic f."""
    q = ar.ring.q
    out = []
    x = _x(ar)
    h = rem(ar, x, f)
    d = 0
    f = monic(ar, f)
    while deg(f) > 0:
        d += 1
        if 2 * d > deg(f):
            out.append((deg(f), f))
            break
        h = powmod(ar, h, q, f)
        g = gcd(ar, f, sub(ar, h, x))
        if deg(g) > 0:
            out.append((d, g))
            f = divmod_(ar, f, g)[0]
            h = rem(ar, h, f)
    return out


def equal_degree(ar, f, d: int, rng: random.Random) -> list:
    """Cantor-Zassenhaus splitting of a product of degree-d irreducibles (q odd)."""
    f = monic(ar, f)
    if deg(f) == d:
        return [f]
    q = ar.ring.q
    ell = ar.ring.ell
    m = ar.m
    while True:
        a = trim(
            [tuple(rng.randrange(ell) for _ in range(m)) for _ in range(deg(f))]
        )
        if deg(a) < 1:
            continue
        g = gcd(ar, f, a)
        if 0 < deg(g) < deg(f):
            break
        b = powmod(ar, a, (q ** d - 1) // 2, f)
        g = gcd(ar, f, sub(ar, b, const(ar, 1)))
        if 0 < deg(g) < deg(f):
            break
    return equal_degree(ar, g, d, rng) + equal_degree(ar, divmod_(ar, f, g)[0], d, rng)


def factor_squarefree(ar, f, seed: int = 0) -> list:
    """Monic irreducible factors over F_q of a squarefree f, sorted canonically."""
    if not is_squarefree(ar, f):
        raise NotSquarefreeModEll("polynomial is not squarefree mod ell")
    rng = random.Random(seed)
    out = []
    for d, g in distinct_degree(ar, f):
        out.extend(equal_degree(ar, g, d, rng))
    return sorted(out, key=lambda p: (deg(p), [list(c) for c in p]))


def hensel_lift_pair(ar_full: CoeffArith, f, g, h):
    """Lift f = g*h mod ell (g, h monic, coprime mod ell) to precision ar_full.digits."""
    ring = ar_full.ring
    res = CoeffArith(ring, 1)
    ell = ring.ell
    d, s, t = xgcd(res, reduce(res, g), reduce(res, h))
    if deg(d) != 0:
        raise NotSquarefreeModEll("factors are not coprime mod ell")
    g = [tuple(c) for c in g]
    h = [tuple(c) for c in h]
    for k in range(1, ar_full.digits):
        err = sub(ar_full, f, mul(ar_full, g, h))
        pk = ell ** k
        e = [tuple((x // pk) % ell for x in c) for c in err]
        e = trim(e)
        if not e:
            continue
        # a*h + b*g = e mod ell with deg a < deg g: a = t*e mod g
        a = rem(res, mul(res, t, e), reduce(res, g))
        b = divmod_(res, sub(res, e, mul(res, a, reduce(res, h))), reduce(res, g))[0]
        g = add(ar_full, g, [ar_full.smul(pk, c) for c in a])
        h = add(ar_full, h, [ar_full.smul(pk, c) for c in b])
    return g, h


def hensel_lift(ar_full: CoeffArith, f, factors_mod_ell: list) -> list:
    """Lift a factorization of monic f into pairwise coprime monic factors mod ell."""
    if not f or f[-1] != ar_full.one:
        raise NotUnit("Hensel lifting needs a monic polynomial")
    if len(factors_mod_ell) == 1:
        return [f]
    res = CoeffArith(ar_full.ring, 1)
    first = factors_mod_ell[0]
    rest = const(res, 1)
    for p in factors_mod_ell[1:]:
        rest = mul(res, rest, p)
    g, h = hensel_lift_pair(ar_full, f, first, rest)
    return [g] + hensel_lift(ar_full, h, factors_mod_ell[1:])


@lru_cache(maxsize=None)
def cyclotomic_int(n: int) -> tuple:
    """Integer coefficients of the n-th cyclotomic polynomial, constant term first."""
    # x^n - 1 divided by Phi_d for all proper divisors d
    poly = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly = _int_exact_div(poly, list(cyclotomic_int(d)))
    return tuple(poly)


def _int_exact_div(f: list[int], g: list[int]) -> list[int]:
    f = list(f)
    dg = len(g) - 1
    q = [0] * (len(f) - dg)
    for k in range(len(f) - 1 - dg, -1, -1):
        c = f[k + dg] // g[-1]
        q[k] = c
        for i, b in enumerate(g):
            f[k + i] -= c * b
    return q


def _pth_root(ar, f):
    """g with g(x)^ell = f(x), for f a polynomial in x^ell over F_q."""
    ell = ar.ring.ell
    e = ar.ring.q // ell
    return trim([ar.pow(f[i], e) for i in range(0, len(f), ell)])


def radical(ar, f):
    """Product of the distinct monic irreducible factors of f over F_q."""
    f = monic(ar, f)
    if deg(f) <= 0:
        return const(ar, 1)
    df = deriv(ar, f)
    if not df:
        return radical(ar, _pth_root(ar, f))
    h = gcd(ar, f, df)
    if deg(h) == 0:
        return f
    a = divmod_(ar, f, h)[0]  # squarefree, holds the factors of multiplicity prime to ell
    b = radical(ar, h)
    return monic(ar, divmod_(ar, mul(ar, a, b), gcd(ar, a, b))[0])


def factor_with_multiplicity(ar, f, seed: int = 0) -> list:
    """Pairs (g, k) with f = lc(f) * prod g^k over F_q, g monic irreducible."""
    f = monic(ar, f)
    out = []
    for g in factor_squarefree(ar, radical(ar, f), seed):
        k = 0
        while True:
            q, r = divmod_(ar, f, g)
            if r:
                break
            f, k = q, k + 1
        out.append((g, k))
    return out


def coprime_factors(ar, f, seed: int = 0) -> list:
    """The prime-power parts g^k of f over F_q; pairwise coprime, product f (f monic)."""
    out = []
    for g, k in factor_with_multiplicity(ar, f, seed):
        p = const(ar, 1)
        for _ in range(k):
            p = mul(ar, p, g)
        out.append(p)
    return out
