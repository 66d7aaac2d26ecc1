"""O_K and F_q arithmetic against integer oracles (pow, brute force, Euler's criterion)."""

import random

import pytest

from inertia_embed.errors import EvenPrime, NonResidue, NotUnit, PrecisionTooLow
from inertia_embed.padic import (
    fq_elements,
    fq_inv,
    fq_is_square,
    fq_pow,
    fq_sqrt,
    ok_inv,
    ok_sqrt,
    ok_valuation,
    ring_create,
    teichmuller,
)


def test_ring_base_case():
    R = ring_create(5, 1, 16)
    assert R.q == 5 and R.modulus == 5 ** 16


def test_ring_degree_two_is_irreducible_mod_ell():
    R = ring_create(5, 2, 8)
    assert R.q == 25
    f = [c % 5 for c in R.poly]
    # brute-force oracle: a monic quadratic is irreducible iff it has no root in F_5
    assert len(f) == 3 and f[-1] == 1
    assert all((f[0] + f[1] * x + x * x) % 5 for x in range(5))


def test_ring_rejects_two_and_low_precision():
    with pytest.raises(EvenPrime):
        ring_create(2, 1, 8)
    with pytest.raises(PrecisionTooLow):
        ring_create(5, 1, 2)


# Small-modulus examples are computed at the minimum precision 4 and read mod 5^2 or 5^3.


def test_add_mul_small_values():
    R = ring_create(5, 1, 4)
    assert (R.elem(1) + R.elem(-1)).is_zero()
    assert int(R.elem(2) * R.elem(63)) % 125 == 1
    assert (R.elem(17) * R.elem(0)).is_zero()


def test_inverse_oracle():
    R = ring_create(5, 1, 4)
    assert int(ok_inv(R.elem(1))) == 1
    assert int(ok_inv(R.elem(2))) % 125 == pow(2, -1, 125) == 63
    with pytest.raises(NotUnit):
        ok_inv(R.elem(5))


def test_valuation():
    R = ring_create(5, 1, 16)
    assert ok_valuation(R.elem(75)) == 2
    assert ok_valuation(R.elem(0)) == float("inf")
    assert ok_valuation(R.elem(7)) == 0


def test_sqrt_oracle():
    R = ring_create(5, 1, 4)
    roots = sorted(x for x in range(25) if x * x % 25 == 6)
    assert roots == [9, 16]
    assert int(ok_sqrt(R.elem(6))) % 25 == 9
    assert int(ok_sqrt(R.elem(1))) == 1
    # Euler's criterion: 2^2 = 4 = -1 mod 5, so 2 is a non-residue
    assert pow(2, 2, 5) == 4
    with pytest.raises(NonResidue):
        ok_sqrt(ring_create(5, 1, 8).elem(2))


def test_teichmuller_oracle():
    R = ring_create(5, 1, 4)
    lifts = {r: [x for x in range(25) if x % 5 == r and pow(x, 4, 25) == 1] for r in range(1, 5)}
    assert lifts[2] == [7] and lifts[4] == [24]
    assert int(teichmuller(R.fq(1))) == 1
    assert int(teichmuller(R.fq(2))) % 25 == 7
    assert int(teichmuller(R.fq(4))) == R.modulus - 1


def test_fq_small_field():
    R = ring_create(5, 1, 8)
    assert fq_inv(R.fq(1)).coeffs == (1,)
    squares = {x * x % 5 for x in range(1, 5)}
    assert squares == {1, 4}
    assert not fq_is_square(R.fq(2))
    for c in fq_elements(R):
        g = R.fq(c)
        if not g.is_zero():
            assert fq_pow(g, R.q - 1).coeffs == (1,)


def test_fq_sqrt_over_f25():
    R = ring_create(5, 2, 8)
    for c in fq_elements(R):
        a = R.fq(c)
        if not a.is_zero() and fq_is_square(a):
            r = fq_sqrt(a)
            assert (r * r - a).is_zero()


@pytest.mark.parametrize("ell,m", [(5, 1), (5, 2), (7, 3), (3, 2)])
def test_random_inverse_sqrt_teichmuller(ell, m):
    R = ring_create(ell, m, 12)
    rng = random.Random(ell * 10 + m)
    for _ in range(200):
        c = [rng.randrange(R.modulus) for _ in range(m)]
        if c[0] % ell == 0:
            c[0] += 1
        x = R.elem(tuple(c))
        assert (x * ok_inv(x) - R.one()).is_zero()
        r = ok_sqrt(x * x)
        assert (r * r - x * x).is_zero()
        t = teichmuller(x.residue())
        assert (t ** (R.q - 1) - R.one()).is_zero()
        assert (t.residue() - x.residue()).is_zero()
