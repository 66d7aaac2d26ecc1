"""Representations: construction, lattices, MeatAxe, projectors, splitting, centralizers, intertwiners."""

import itertools

import pytest

from inertia_embed.errors import NotIsomorphic, NotStable, RelationViolated
from inertia_embed.groups import character_table_dixon, cyclic, quaternion8, subgroup
from inertia_embed.linalg import KMatrix, OKMatrix, block_diag, companion, j_std
from inertia_embed.modrep import (
    Representation,
    centralizer_field,
    intertwiner,
    isotypic_projectors,
    meataxe_is_simple,
    projector_image,
    reduce_mod_ell,
    rep_from_input,
    simple_split,
    stabilize_lattice,
)
from inertia_embed.padic import ok_sqrt, ring_create

R = ring_create(5, 1, 16)


def q8_rep():
    s = ok_sqrt(R.elem(-1)).coeffs
    ms = tuple((-c) % R.modulus for c in s)
    i = OKMatrix.from_ints(R, [[0, -1], [1, 0]])
    j = OKMatrix.from_ints(R, [[s, 0], [0, ms]])
    G = quaternion8()
    # elements 4 and 2 of the table generate Q8
    return G, rep_from_input(G, {4: i, 2: j}, R), i, j


def regular_c3():
    G = cyclic(3)
    P = OKMatrix.from_ints(R, [[0, 0, 1], [1, 0, 0], [0, 1, 0]])
    return G, rep_from_input(G, {1: P}, R)


def test_trivial_rep_and_relations():
    G = cyclic(4)
    rep = rep_from_input(G, {1: OKMatrix.identity(R, 2)}, R)
    assert all(M.to_ok().is_identity() for M in rep.images)
    with pytest.raises(RelationViolated):
        rep_from_input(G, {1: OKMatrix.from_ints(R, [[0, -1], [1, 0]]).scale(2)}, R)


def test_q8_relations_mod_ell_power():
    G, rep, i, j = q8_rep()
    assert (i @ j).equals(-(j @ i))
    red = reduce_mod_ell(rep)
    assert all(r.nrows == 2 for r in red)
    i_mod = i.residue()
    assert (i_mod @ i_mod).equals(-OKMatrix.identity(R, 2).residue())


def test_stabilize_lattice():
    G, rep = regular_c3()
    assert stabilize_lattice(rep).basis.to_ok().is_identity()
    D = KMatrix(OKMatrix.from_ints(R, [[1, 0, 0], [0, 5, 0], [0, 0, 5]]), -1)
    conj = rep.conjugate(D)
    assert not conj.is_integral()
    T = stabilize_lattice(conj)
    assert conj.conjugate(T.basis).is_integral()
    with pytest.raises(NotStable):
        reduce_mod_ell(conj)


def test_rep_from_input_keeps_precision_for_nonintegral_generators():
    G, rep = regular_c3()
    D = KMatrix(OKMatrix.from_ints(R, [[1, 0, 0], [0, 5, 0], [0, 0, 1]]), -1)
    conj = rep.conjugate(D)
    again = rep_from_input(G, {1: conj.images[1]}, R)
    assert all(a.equals(b) for a, b in zip(again.images, conj.images))
    assert again.prec >= conj.prec - 2


def test_meataxe():
    assert meataxe_is_simple([OKMatrix.from_ints(R, [[2]]).residue()]).simple
    G, rep = regular_c3()
    res = meataxe_is_simple([rep.images[1].to_ok().residue()])
    assert not res.simple
    # brute-force oracle: the only invariant lines mod 5 are multiples of (1, 1, 1)
    lines = [v for v in itertools.product(range(5), repeat=3) if any(v)
             if any(all((v[(k - 1) % 3] - a * v[k]) % 5 == 0 for k in range(3)) for a in range(1, 5))]
    assert {v for v in lines} == {(a, a, a) for a in range(1, 5)}
    sub = res.submodule
    assert sub.ncols == 1
    col = [int(x[0]) % 5 for x in sub.data[:, 0]]
    assert tuple(col) in lines
    C3 = companion(R, [1, 1, 1])
    # x^2 + x + 1 has no root mod 5
    assert all((x * x + x + 1) % 5 for x in range(5))
    assert meataxe_is_simple([C3.residue()]).simple


def test_isotypic_projectors_regular_c3():
    G, rep = regular_c3()
    projs = isotypic_projectors(rep, character_table_dixon(G))
    # 5 = 2 mod 3 fuses the two nontrivial characters into one orbit
    assert sorted(projector_image(p.projector).ncols for p in projs) == [1, 2]
    total = projs[0].projector + projs[1].projector
    assert total.equals(KMatrix(OKMatrix.identity(R, 3)))


def test_isotypic_projectors_c15_orbits():
    G = cyclic(15)
    P = OKMatrix.zeros(R, 15, 15)
    for k in range(15):
        P.data[(k + 1) % 15, k, 0] = 1
    rep = rep_from_input(G, {1: P}, R)
    projs = isotypic_projectors(rep, character_table_dixon(G))
    # Gal(Q5(zeta_15)/Q5) is all of (Z/15)^*: <5 mod 3> on the unramified part, (Z/5)^* on the ramified part
    units = [u for u in range(15) if u % 3 and u % 5]
    orbits = {frozenset(k * u % 15 for u in units) for k in range(15)}
    assert sorted(len(o) for o in orbits) == [1, 2, 4, 8]
    dims = sorted(projector_image(p.projector).ncols for p in projs)
    assert dims == [1, 2, 4, 8]


def test_simple_split_multiplicity_two():
    C3 = companion(R, [1, 1, 1])
    X = block_diag(C3, C3)
    pieces = simple_split([OKMatrix.identity(R, 4), X, X @ X], [1])
    assert sorted(p.ncols for p in pieces) == [2, 2]
    eye3 = OKMatrix.identity(R, 3)
    assert len(simple_split([eye3], [0])) == 3


def test_centralizer_fields():
    G, rep, i, j = q8_rep()
    E = centralizer_field([i, j], j_std(R, 2))
    assert E.dim == 1 and E.fixed_dim == 1
    C3 = companion(R, [1, 1, 1])
    E = centralizer_field([C3], j_std(R, 2))
    assert E.dim == 2 and E.fixed_dim == 1
    assert not E.involution.is_identity()
    assert centralizer_field([OKMatrix.identity(R, 1)]).dim == 1


def test_intertwiner():
    G = cyclic(3)
    H, emap = subgroup(G, [0, 1, 2])
    C3 = companion(R, [1, 1, 1])
    tau = [C3.power(k) for k in range(3)]
    A = intertwiner(tau, tau, H)
    for k in range(3):
        assert (tau[k] @ A).equals(A @ tau[k])
    U = OKMatrix.from_ints(R, [[1, 2], [3, 7]])
    Ui = U.inv()
    tau2 = [Ui @ t @ U for t in tau]
    A = intertwiner(tau, tau2, H)
    for k in range(3):
        assert (tau2[k] @ A).equals(A @ tau[k])
    assert A.det().is_unit()
    triv = [OKMatrix.identity(R, 2)] * 3
    with pytest.raises(NotIsomorphic):
        intertwiner(triv, tau, H)


def test_representation_container():
    G, rep = regular_c3()
    assert isinstance(rep, Representation) and rep.dim == 3 and rep.prec == 16
