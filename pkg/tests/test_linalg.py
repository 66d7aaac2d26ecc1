"""Matrices over O_K and K: inverses, kernels, lattices, forms, symplectic bases."""

import random

import numpy as np
import pytest

from inertia_embed.errors import DegenerateAfterScaling, NotInvertible, NotPerfect, NotSquarefreeModEll
from inertia_embed.linalg import (
    BilinearForm,
    KMatrix,
    Lattice,
    OKMatrix,
    block_diag,
    companion,
    form_normalize,
    invariant_forms,
    is_alternating,
    j_std,
    kernel,
    lattice_sum,
    rank,
    symplectic_basis,
)
from inertia_embed import poly as P
from inertia_embed.padic import CoeffArith, ok_inv, ok_valuation, ring_create

R = ring_create(5, 1, 16)


def M(rows, ring=R):
    return OKMatrix.from_ints(ring, rows)


def test_inverse_of_identity_and_rotation():
    assert OKMatrix.identity(R, 3).inv().is_identity()
    # 2x2 adjugate: [[a,b],[c,d]]^-1 = [[d,-b],[-c,a]] / det, det = 1
    assert M([[0, -1], [1, 0]]).inv() == M([[0, 1], [-1, 0]])


def test_non_unit_determinant():
    A = M([[5, 0], [0, 1]])
    assert ok_valuation(A.det()) == 1
    with pytest.raises(NotInvertible):
        A.inv()


def test_kinverse_of_nonintegral_matrix():
    A = KMatrix(M([[1, 0], [0, 5]]), 0)
    Ai = A.inv()
    assert Ai.shift == -1
    assert (A @ Ai).equals(KMatrix(OKMatrix.identity(R, 2)))


def test_det_against_integer_oracle():
    rng = random.Random(3)
    for _ in range(20):
        rows = [[rng.randrange(-9, 10) for _ in range(3)] for _ in range(3)]
        a = np.array(rows, dtype=object)
        d = (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]) - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
             + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
        assert int(M(rows).det()) == d % R.modulus


def test_unit_pivot_inverse_random():
    rng = random.Random(0)
    R2 = ring_create(5, 2, 12)
    for _ in range(30):
        n = rng.randint(1, 6)
        while True:
            A = OKMatrix.from_ints(R2, [[(rng.randrange(R2.modulus), rng.randrange(R2.modulus))
                                         for _ in range(n)] for _ in range(n)])
            if A.det().is_unit():
                break
        assert (A @ A.inv()).is_identity()
        assert (A.inv() @ A).is_identity()


def test_kernels_over_residue_field():
    F = ring_create(5, 1, 16)
    assert kernel(OKMatrix.identity(F, 3).residue()).ncols == 0
    assert kernel(OKMatrix.zeros(F, 3, 3).residue()).ncols == 3
    k = kernel(M([[1, 1], [1, 1]]).residue())
    assert k.ncols == 1
    v = [int(x[0]) % 5 for x in k.data[:, 0]]
    # span{(1, -1)}
    assert (v[0] + v[1]) % 5 == 0 and v[0] % 5 != 0
    assert rank(M([[1, 2], [2, 4]]).residue()) == 1


def test_lattice_sum_examples():
    I = KMatrix(OKMatrix.identity(R, 2))
    assert lattice_sum([I]).equals(Lattice.standard(R, 2))
    D = KMatrix(M([[1, 0], [0, 5]]), -1)  # diag(1/5, 1)
    T = lattice_sum([I, D])
    assert T.equals(Lattice(D))
    assert lattice_sum([I, KMatrix(M([[5, 0], [0, 5]]))]).equals(Lattice.standard(R, 2))


def test_invariant_forms_examples():
    forms = invariant_forms([OKMatrix.identity(R, 2)], "alternating")
    assert len(forms) == 1 and is_alternating(forms[0].to_ok())
    C3 = companion(R, [1, 1, 1])
    forms = invariant_forms([C3], "alternating")
    assert len(forms) == 1
    F = forms[0].to_ok()
    assert (C3.T @ F @ C3).equals(F)
    assert len(invariant_forms([-OKMatrix.identity(R, 1)], "symmetric")) == 1


def test_form_normalize_examples():
    std = Lattice.standard(R, 2)
    i, F = form_normalize(BilinearForm(KMatrix(j_std(R, 2).scale(5)), "alternating"), std)
    assert i == -1 and F.perfect and F.gram.to_ok() == j_std(R, 2)
    i, F = form_normalize(BilinearForm(KMatrix(j_std(R, 2)), "alternating"), std)
    assert i == 0
    bad = block_diag(j_std(R, 2), j_std(R, 2).scale(5))
    assert ok_valuation(bad.det()) == 2
    with pytest.raises(DegenerateAfterScaling):
        form_normalize(BilinearForm(KMatrix(bad), "alternating"), Lattice.standard(R, 4))


def test_symplectic_basis():
    J = j_std(R, 4)
    assert symplectic_basis(J).is_identity()
    J2 = M([[0, 2], [-2, 0]])
    S = symplectic_basis(J2)
    assert (S.T @ J2 @ S) == j_std(R, 2)
    assert int(ok_inv(R.elem(2))) * 2 % R.modulus == 1
    with pytest.raises(NotPerfect):
        symplectic_basis(M([[0, 5], [-5, 0]]))


def test_symplectic_basis_random_perfect_forms():
    rng = random.Random(1)
    for n in (2, 4, 6, 8):
        while True:
            A = M([[rng.randrange(25) for _ in range(n)] for _ in range(n)])
            J = A - A.T
            if J.det().is_unit():
                break
        S = symplectic_basis(J)
        assert (S.T @ J @ S) == j_std(R, n)


def test_local_factorization():
    ar = CoeffArith(R)
    res = CoeffArith(R, 1)
    f = P.from_ints(ar, [-1, 0, 1])
    facs = P.hensel_lift(ar, f, P.factor_squarefree(res, P.reduce(res, f)))
    roots = sorted(int(P.neg(ar, g)[0][0]) % R.modulus for g in facs)
    assert roots == [1, R.modulus - 1]
    phi41 = P.from_ints(res, P.cyclotomic_int(41))
    # the order of 5 mod 41 is 20, so Phi_41 splits into two factors of degree 20
    assert min(k for k in range(1, 41) if pow(5, k, 41) == 1) == 20
    assert sorted(P.deg(g) for g in P.factor_squarefree(res, phi41)) == [20, 20]
    with pytest.raises(NotSquarefreeModEll):
        P.factor_squarefree(res, P.from_ints(res, [0, 0, 1]))
