"""Constructions: doubling, induction, cyclic embeddings, extension, decomposition, orchestration, verification."""

import pytest

from inertia_embed import demos
from inertia_embed.errors import (
    BadTarget,
    EvenPrime,
    ForceRequired,
    KernelConditionFails,
    NotIntegral,
    NotIsomorphic,
)
from inertia_embed.groups import character_table_dixon, cyclic, inertia_split, semidirect
from inertia_embed.linalg import KMatrix, OKMatrix, block_diag, companion, is_alternating, j_std
from inertia_embed.padic import ring_create
from inertia_embed.symplectic import (
    SymplecticCertificate,
    cyclic_base_embedding,
    cyclic_embedding,
    decompose_symplectic_G,
    embed_inertia_group,
    extend_to_G,
    hyperbolic_double,
    induce_symplectic,
    pad_embedding,
)

R = ring_create(5, 1, 16)


def test_hyperbolic_double_examples():
    imgs, J = hyperbolic_double([OKMatrix.identity(R, 2)])
    assert imgs[0].is_identity()
    U = OKMatrix.from_ints(R, [[1, 1], [0, 1]])
    imgs, J = hyperbolic_double([U])
    # transpose-inverse of [[1,1],[0,1]] is [[1,0],[-1,1]]
    assert imgs[0][2:, 2:] == OKMatrix.from_ints(R, [[1, 0], [-1, 1]])
    assert (imgs[0].T @ J @ imgs[0]) == J
    with pytest.raises(NotIntegral):
        hyperbolic_double([KMatrix(OKMatrix.identity(R, 2), -1)])


def test_cyclic_base_embedding():
    R3 = ring_create(3, 1, 12)
    C, negI, J = cyclic_base_embedding(3, R3)
    assert C == OKMatrix.from_ints(R3, [[0, -1], [1, -1]])
    assert (C.T @ J @ C) == J and J.det().is_unit()
    for ell in (5, 7, 11):
        Rl = ring_create(ell, 1, 12)
        C, negI, J = cyclic_base_embedding(ell, Rl)
        assert C.nrows == ell - 1 and C.power(ell).is_identity()
        assert (C.T @ J @ C) == J and is_alternating(J) and J.det().is_unit()
    with pytest.raises(EvenPrime):
        cyclic_base_embedding(2, R)


def test_cyclic_embeddings():
    c = cyclic_embedding(5, 1, R)
    assert c.dim == 4 and c.report.passed
    c = cyclic_embedding(5, 2, R)
    assert c.dim == 20 and c.report.passed and c.group.order == 50
    c = cyclic_embedding(5, 0, R)
    assert c.dim == 2 and c.images[1] == -OKMatrix.identity(R, 2)


def test_induction_trivial_index_and_kernel_condition():
    G = cyclic(10)
    C, negI, J = cyclic_base_embedding(5, R)
    base = [(-1) ** (i % 2) for i in range(10)]
    f = {i: C.power(i % 5).scale(base[i]) for i in range(10)}
    ind = induce_symplectic(G, list(range(10)), f, J)
    assert all(ind.images[g] == f[g] for g in range(10))
    G4 = cyclic(4)
    f = {0: OKMatrix.identity(R, 2), 2: OKMatrix.identity(R, 2)}
    with pytest.raises(KernelConditionFails):
        induce_symplectic(G4, [0, 2], f, j_std(R, 2))


def test_induction_c25_two_sections():
    for seed in (0, 1):
        c = cyclic_embedding(5, 2, R, seed)
        assert c.report.passed
        assert any("induced" in n for n in c.notes)


def test_extend_trivial_action():
    G = semidirect(3, 5, 1)
    st = inertia_split(G, 5)
    C3 = companion(R, [1, 1, 1])
    tau = {h: C3.power(h % 3) for h in st.H}
    images, tr = extend_to_G(tau, j_std(R, 2), st)
    assert images[st.c].is_identity()
    assert all(tr.checks.values())


def test_extend_twist_counterexample():
    st, tau, F = demos.twist_counterexample()
    with pytest.raises(NotIsomorphic):
        extend_to_G(tau, F, st)


def test_decompose_examples():
    sc = demos.build("c11sd5")
    G = sc.structure.group
    ring = sc.ring
    _, _, rep5 = demos.galois_module_rep(11, 5, 3, ring)
    imgs, J = hyperbolic_double(rep5.ok_images())
    pieces = decompose_symplectic_G(imgs, J, G, character_table_dixon(G))
    assert len(pieces) == 1 and pieces[0].flagged and pieces[0].basis.ncols == 5
    G3 = cyclic(3)
    C3 = companion(R, [1, 1, 1])
    X = block_diag(C3, C3)
    images = [X.power(k) for k in range(3)]
    pieces = decompose_symplectic_G(images, j_std(R, 4), G3, character_table_dixon(G3))
    assert len(pieces) == 2 and not any(p.flagged for p in pieces)
    pieces = decompose_symplectic_G([C3.power(k) for k in range(3)], j_std(R, 2), G3)
    assert len(pieces) == 1


@pytest.mark.parametrize("name,dim", [("c3xc5", 6), ("q8", 2), ("c11sd5", 10)])
def test_embed_small_demos(name, dim):
    sc = demos.build(name)
    cert = embed_inertia_group(sc.structure, sc.rep, sc.form)
    assert cert.dim == dim and cert.report.passed
    assert cert.gram == j_std(sc.ring, dim)


def test_force_required_for_ell_three():
    sc = demos.build("ell3-budget-probe")
    with pytest.raises(ForceRequired):
        embed_inertia_group(sc.structure, sc.rep, sc.form)


def test_verifier_catches_tampering_and_nonfaithful():
    sc = demos.build("c3xc5")
    cert = embed_inertia_group(sc.structure, sc.rep, sc.form)
    bad = [M.copy() for M in cert.images]
    g = sc.structure.group.generators[0]
    bad[g].data[0, 0, 0] = (bad[g].data[0, 0, 0] + 5 ** (cert.prec - 1)) % 5 ** 16
    t = SymplecticCertificate(cert.ring, cert.group, bad, cert.gram.with_prec(cert.prec))
    assert "homomorphism" in t.verify().failed
    # C3 x C5 sending the C5 factor to I is not faithful
    G = sc.structure.group
    C3 = companion(R, [1, 1, 1])
    imgs = [C3.power(st_h % 3) for st_h in range(G.order)]
    nf = SymplecticCertificate(R, G, imgs, j_std(R, 2))
    assert nf.verify().failed == ["faithful mod ell"]


def test_pad_embedding():
    c = cyclic_embedding(5, 0, R)
    assert pad_embedding(c, 2) is c
    p = pad_embedding(c, 6)
    assert p.dim == 6 and p.verify().passed
    assert p.images[1][2:, 2:].is_identity()
    with pytest.raises(BadTarget):
        pad_embedding(p, 4)


def test_random_seeds_do_not_change_validity():
    sc = demos.build("c11sd5", seed=3)
    for seed in range(3):
        cert = embed_inertia_group(sc.structure, sc.rep, sc.form, seed=seed)
        assert cert.report.passed
