"""Finite groups from tables, inertia splittings, classes and character tables."""

import itertools

import numpy as np
import pytest

from inertia_embed.errors import BadAction, NoInverse, NotInertiaForm
from inertia_embed.groups import (
    build_family,
    character_table_dixon,
    conjugacy_classes,
    cyclic,
    dihedral,
    group_from_table,
    inertia_split,
    quaternion8,
    verify_orthogonality,
)


def s3():
    perms = list(itertools.permutations(range(3)))
    idx = {p: i for i, p in enumerate(perms)}
    table = [[idx[tuple(a[b[k]] for k in range(3))] for b in perms] for a in perms]
    return group_from_table(table)


def test_tables():
    assert group_from_table([[0, 1], [1, 0]]).order == 2
    with pytest.raises(NoInverse):
        group_from_table([[0, 1], [1, 1]])
    Q = quaternion8()
    assert Q.order == 8
    assert sorted(int(o) for o in Q.element_orders) == [1, 2, 4, 4, 4, 4, 4, 4]


def test_inertia_split_examples():
    st = inertia_split(cyclic(15), 5)
    assert len(st.H) == 3 and st.L_order == 5
    assert cyclic(15).element_orders[st.c] % 5 == 0
    st = inertia_split(s3(), 5)
    assert len(st.H) == 6 and st.c == st.group.identity
    with pytest.raises(NotInertiaForm):
        inertia_split(s3(), 3)
    with pytest.raises(NotInertiaForm):
        inertia_split(dihedral(5), 5)


def test_decompose_is_bijective():
    G = build_family("semidirect(11, 5, 3)")
    st = inertia_split(G, 5)
    seen = set()
    for g in range(G.order):
        h, j = st.decompose(g)
        assert G.mul(h, st.c_power(j)) == g
        seen.add((h, j))
    assert len(seen) == G.order


def test_conjugacy_classes():
    classes, _ = conjugacy_classes(cyclic(7))
    assert len(classes) == 7
    classes, _ = conjugacy_classes(s3())
    assert sorted(len(c) for c in classes) == [1, 2, 3]
    classes, _ = conjugacy_classes(quaternion8())
    assert len(classes) == 5


def test_character_tables():
    assert sorted(character_table_dixon(cyclic(3)).degrees) == [1, 1, 1]
    T = character_table_dixon(s3())
    assert sorted(T.degrees) == [1, 1, 2]
    verify_orthogonality(T)
    assert character_table_dixon(cyclic(1)).degrees == [1]
    Tq = character_table_dixon(quaternion8())
    assert sorted(Tq.degrees) == [1, 1, 1, 1, 2]
    assert sum(d * d for d in Tq.degrees) == 8


def test_abelian_tables_are_linear():
    T = character_table_dixon(cyclic(12))
    assert T.mult is None and T.degrees == [1] * 12
    # characters of C12 are x -> a*x mod 12, one for each a
    rows = {tuple(T.linear[chi][T.class_of[x]] for x in range(12)) for chi in range(12)}
    assert rows == {tuple(a * x % 12 for x in range(12)) for a in range(12)}
    c2 = np.array([[0, 1], [1, 0]])
    c2c6 = group_from_table((np.kron(c2, np.ones((6, 6), dtype=int)) * 6
                             + np.kron(np.ones((2, 2), dtype=int), cyclic(6).table)))
    T = character_table_dixon(c2c6)
    assert T.num == 12 and T.exponent == 6
    assert T.galois_image(1, -1 % 6) in range(12)
    T.linear[1] = T.linear[2]
    with pytest.raises(ArithmeticError):
        verify_orthogonality(T)


def test_large_cyclic_table():
    T = character_table_dixon(cyclic(1000))
    assert T.num == 1000 and T.orbit_sum([0, 1]).shape == (1000, 1000)


def test_families():
    assert pow(3, 5, 11) == 1 and pow(10, 5, 41) == 1 and pow(2, 5, 11) != 1
    assert build_family("semidirect(11, 5, 3)").order == 55
    assert build_family("semidirect(41, 5, 10)").order == 205
    with pytest.raises(BadAction):
        build_family("semidirect(11, 5, 2)")
    G = build_family("c3^4:c5")
    assert G.order == 405
    assert np.array_equal(G.table, build_family("c3^4:c5").table)
