"""Symplectic constructions for inertia groups G = H x| <c>.

Extension of a self-dual H-simple lattice representation to G, hyperbolic
doubling, induction of symplectic representations, embeddings of
C_{ell^m} x {+-1}, decomposition of a symplectic K[G]-module into simple
pieces, and the pipeline that assembles a certified embedding into
Sp_2d(O_K).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

import numpy as np

from . import modrep as MR
from .errors import (
    BadTarget,
    BudgetViolation,
    DecompositionFailure,
    EvenPrime,
    ForceRequired,
    FormNotPerfect,
    KernelConditionFails,
    MultiplierEscapesE0,
    NonScalarPower,
    NoUnimodularSolution,
    NotFaithful,
    NotIntegral,
    NotIsomorphic,
    NotIsomorphicTwist,
    NotStable,
    OddDimension,
    PrecisionExhausted,
    SplitInconclusive,
)
from .groups import (
    FiniteGroup,
    InertiaStructure,
    character_table_dixon,
    cyclic,
    quotient,
    structure_from,
    subgroup,
)
from .linalg import (
    BilinearForm,
    KMatrix,
    Lattice,
    OKMatrix,
    arith,
    block_diag,
    companion,
    form_normalize,
    invariant_forms,
    is_alternating,
    j_std,
    symplectic_basis,
)
from .padic import CoeffArith, RingSpec, teichmuller
from .poly import cyclotomic_int
from .verify import VerificationReport, verify_certificate

log = logging.getLogger(__name__)

RETRY_BUDGET = 32


def euler_phi_prime_power(ell: int, t: int) -> int:
    return 1 if t == 0 else (ell - 1) * ell ** (t - 1)


def _as_ok(M) -> OKMatrix:
    if isinstance(M, KMatrix):
        if not M.is_integral():
            raise NotIntegral("matrix is not integral")
        return M.to_ok()
    return M


def _random_unit_combination(mats: list, rng: random.Random, ring: RingSpec, need_unit_det: bool):
    """Seeded random O_K-combination of `mats`; the first basis element is tried first."""
    for attempt in range(RETRY_BUDGET):
        if attempt == 0:
            X = mats[0]
        else:
            X = None
            for M in mats:
                term = M.scale(rng.randrange(ring.ell ** 2))
                X = term if X is None else X + term
        if X.is_zero():
            continue
        if need_unit_det and not X.det().is_unit():
            continue
        return X
    return None


# ---------------------------------------------------------------------------
# certificates


@dataclass
class SymplecticCertificate:
    ring: RingSpec
    group: FiniteGroup
    images: list  # OKMatrix for every element
    gram: OKMatrix
    structure: InertiaStructure | None = None
    ledger: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    report: VerificationReport | None = None
    seed: int = 0

    @property
    def dim(self) -> int:
        return self.gram.nrows

    @property
    def prec(self) -> int:
        return min(min(M.prec for M in self.images), self.gram.prec)

    def verify(self) -> VerificationReport:
        self.report = verify_certificate(self)
        return self.report


def direct_sum(certs: list, group: FiniteGroup) -> tuple:
    """(images, gram) of the orthogonal sum of representations of the same group."""
    images = [block_diag(*[c[0][g] for c in certs]) for g in range(group.order)]
    gram = block_diag(*[c[1] for c in certs])
    return images, gram


def pad_embedding(cert: SymplecticCertificate, target_dim: int) -> SymplecticCertificate:
    """Orthogonal sum with a trivially acted-on standard symplectic space of the missing dimension."""
    extra = target_dim - cert.dim
    if extra < 0 or extra % 2:
        raise BadTarget(f"cannot pad dimension {cert.dim} to {target_dim}")
    if extra == 0:
        return cert
    eye = OKMatrix.identity(cert.ring, extra)
    images = [block_diag(M, eye) for M in cert.images]
    gram = block_diag(cert.gram, j_std(cert.ring, extra))
    return SymplecticCertificate(cert.ring, cert.group, images, gram, cert.structure, cert.ledger,
                                 cert.notes + [f"padded {cert.dim} -> {target_dim}"], None, cert.seed)


def _pad_pair(images: list, gram: OKMatrix, target: int) -> tuple:
    extra = target - gram.nrows
    if extra < 0 or extra % 2:
        raise BadTarget(f"cannot pad dimension {gram.nrows} to {target}")
    if extra == 0:
        return images, gram
    eye = OKMatrix.identity(gram.ring, extra)
    return [block_diag(M, eye) for M in images], block_diag(gram, j_std(gram.ring, extra))


# ---------------------------------------------------------------------------
# hyperbolic doubling


def hyperbolic_double(images: list) -> tuple:
    """g -> diag(M_g, M_g^-T) on T0 + T0^* with the pairing ((x,f),(y,g)) -> g(x) - f(y).

    Returns (images, J) with J = [[0, I], [-I, 0]].
    """
    mats = []
    for M in images:
        Mk = M if isinstance(M, KMatrix) else KMatrix(M)
        if not Mk.is_integral():
            raise NotIntegral("representation is not integral on the lattice")
        inv = Mk.inv()
        if not inv.is_integral():
            raise NotIntegral("inverse image is not integral on the lattice")
        mats.append((Mk.to_ok(), inv.to_ok()))
    ring = mats[0][0].ring
    n = mats[0][0].nrows
    eye = OKMatrix.identity(ring, n)
    zero = OKMatrix.zeros(ring, n, n)
    from .linalg import hstack, vstack

    J = vstack([hstack([zero, eye]), hstack([-eye, zero])])
    out = [block_diag(M, Minv.T) for M, Minv in mats]
    for D in out:
        if not (D.T @ J @ D).equals(J):
            raise PrecisionExhausted("doubled representation does not preserve the pairing")
    return out, J


# ---------------------------------------------------------------------------
# induction


@dataclass
class InducedRep:
    images: list
    gram: OKMatrix
    section: list  # coset representatives
    coset_of: list
    section_check: bool


def _coset_data(G0: FiniteGroup, G1: list, rng: random.Random | None):
    G1s = sorted(G1)
    coset_of = [-1] * G0.order
    section = []
    for g in range(G0.order):
        if coset_of[g] >= 0:
            continue
        members = [G0.mul(g, s) for s in G1s]
        for x in members:
            coset_of[x] = len(section)
        section.append(min(members) if rng is None else rng.choice(members))
    return section, coset_of


def _induced_images(G0: FiniteGroup, f: dict, section: list, coset_of: list, d1: int, ring: RingSpec) -> list:
    k = len(section)
    ar = arith(ring)
    sec_inv = [G0.inv[p] for p in section]
    out = []
    for g in range(G0.order):
        data = ar.zeros((k * d1, k * d1))
        gi = G0.inv[g]
        prec = ring.N
        for gam, p in enumerate(section):
            x = G0.mul(gi, p)
            gam2 = coset_of[x]
            s = G0.mul(sec_inv[gam2], x)
            blk = f[G0.inv[s]]
            prec = min(prec, blk.prec)
            data[gam * d1:(gam + 1) * d1, gam2 * d1:(gam2 + 1) * d1] = blk.data
        out.append(OKMatrix(ring, data, prec))
    return out


def induce_symplectic(G0: FiniteGroup, G1: list, f: dict, e1: OKMatrix, seed: int = 0,
                      check_section: bool = True) -> InducedRep:
    """Induce f: G1 -> Sp(T1, e1) to G0 on functions u with u(xs) = f(s)^-1 u(x)."""
    ring = e1.ring
    G1s = set(int(x) for x in G1)
    d1 = e1.nrows
    if not is_alternating(e1) or not e1.det().is_unit():
        raise FormNotPerfect("inducing form must be perfect and alternating")
    ident = G0.identity
    kern = [g for g in G1s if g != ident and f[g].is_identity()]
    for g1 in kern:
        if all(f[G0.conj(x, g1)].is_identity() for x in range(G0.order)):
            raise KernelConditionFails(f"every conjugate of element {g1} acts trivially")
    section, coset_of = _coset_data(G0, list(G1s), None)
    images = _induced_images(G0, f, section, coset_of, d1, ring)
    gram = block_diag(*([e1] * len(section)))
    for x in range(G0.order):
        for s in G0.generators:
            if not (images[x] @ images[s]).equals(images[G0.mul(x, s)]):
                raise PrecisionExhausted("induced matrices fail the homomorphism recheck")
    for g in range(G0.order):
        if not (images[g].T @ gram @ images[g]).equals(gram):
            raise PrecisionExhausted("induced representation does not preserve the form")
        if g != ident and images[g].is_identity():
            raise KernelConditionFails(f"induced representation is trivial on element {g}")
    ok = True
    if check_section and len(section) > 1:
        ok = _check_section_independence(G0, f, section, coset_of, d1, ring, gram, images, seed)
        if not ok:
            raise PrecisionExhausted("induced representation depends on the section")
    return InducedRep(images, gram, section, coset_of, ok)


def _check_section_independence(G0, f, section, coset_of, d1, ring, gram, images, seed) -> bool:
    rng = random.Random(seed)
    members = {}
    for x in range(G0.order):
        members.setdefault(coset_of[x], []).append(x)
    section2 = [rng.choice(members[i]) for i in range(len(section))]
    images2 = _induced_images(G0, f, section2, coset_of, d1, ring)
    # u2(gamma) = u(p(gamma) t) = f(t)^-1 u(p(gamma))
    blocks = [f[G0.inv[G0.mul(G0.inv[p], p2)]] for p, p2 in zip(section, section2)]
    D = block_diag(*blocks)
    Dinv = D.inv()
    if not (D.T @ gram @ D).equals(gram):
        return False
    return all((D @ images[g] @ Dinv).equals(images2[g]) for g in range(G0.order))


# ---------------------------------------------------------------------------
# cyclic groups


def cyclic_base_embedding(ell: int, ring: RingSpec, seed: int = 0) -> tuple:
    """(C, -I, J): C the companion matrix of the ell-th cyclotomic polynomial and J a perfect C-invariant alternating form."""
    if ell % 2 == 0:
        raise EvenPrime("ell must be odd")
    if ell < 3:
        raise ValueError("ell must be at least 3")
    C = companion(ring, list(cyclotomic_int(ell)))
    n = ell - 1
    forms = [F.to_ok() for F in invariant_forms([C], "alternating")]
    rng = random.Random(seed)
    J = _random_unit_combination(forms, rng, ring, True) if forms else None
    if J is None:
        raise NoUnimodularSolution("no unimodular invariant alternating form found")
    negI = -OKMatrix.identity(ring, n)
    if not C.power(ell).is_identity() or C.is_identity():
        raise PrecisionExhausted("companion matrix does not have order ell")
    for M in (C, negI):
        if not (M.T @ J @ M).equals(J):
            raise PrecisionExhausted("base form is not invariant")
    if not is_alternating(J):
        raise PrecisionExhausted("base form is not alternating")
    return C, negI, J


def cyclic_embedding(ell: int, m: int, ring: RingSpec, seed: int = 0) -> SymplecticCertificate:
    """C_{ell^m} x {+-1} (as the cyclic group of order 2 ell^m) inside Sp_{phi(ell^m)}(O_K).

    Element k corresponds to (k mod ell^m, k mod 2).
    """
    n_cyc = ell ** m
    G = cyclic(2 * n_cyc)
    if m == 0:
        J = j_std(ring, 2)
        eye = OKMatrix.identity(ring, 2)
        images = [eye, -eye]
        cert = SymplecticCertificate(ring, G, images, J, notes=["cyclic: {+-1} via -I"], seed=seed)
        cert.verify()
        return cert
    C, negI, J = cyclic_base_embedding(ell, ring, seed)
    base = []
    Cp = [C.power(i) for i in range(ell)]
    for i in range(2 * ell):
        M = Cp[i % ell]
        base.append(-M if i % 2 else M)
    if m == 1:
        images = base
        notes = [f"cyclic base embedding in dimension {ell - 1}"]
    else:
        step = ell ** (m - 1)
        G1 = [i * step for i in range(2 * ell)]
        f = {i * step: base[i] for i in range(2 * ell)}
        ind = induce_symplectic(G, G1, f, J, seed)
        images, J = ind.images, ind.gram
        notes = [f"cyclic: induced from order {2 * ell} to order {2 * n_cyc}, dimension {J.nrows}"]
    cert = SymplecticCertificate(ring, G, images, J, notes=notes, seed=seed)
    cert.verify()
    if not cert.report.passed:
        raise PrecisionExhausted(f"cyclic embedding failed verification: {cert.report.failed}")
    return cert


def _cyclic_index(j: int, sign: int, ell_power: int) -> int:
    """Index in cyclic(2 ell^k) of (j mod ell^k, sign)."""
    want = 0 if sign > 0 else 1
    for k in range(2 * ell_power):
        if k % ell_power == j % ell_power and k % 2 == want:
            return k
    raise ValueError("no such element")


# ---------------------------------------------------------------------------
# extension from H to G


@dataclass
class ExtensionTrace:
    A: OKMatrix
    a: OKMatrix
    a1: OKMatrix
    A1_raw: OKMatrix
    z: OKMatrix
    A1: OKMatrix
    b: OKMatrix  # A1_raw^#L
    mu: int
    B: OKMatrix
    s: int
    det_A1: int
    E_dim: int
    E0_dim: int
    iota_order: int
    corrected: bool = False
    n1: int | None = None
    checks: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "[E:K]": self.E_dim,
            "[E0:K]": self.E0_dim,
            "mu": self.mu,
            "s": self.s,
            "det A1": self.det_A1,
            "#iota(L)": self.iota_order,
            "unitary correction": self.corrected,
            "checks": dict(self.checks),
        }


def _conj_order(X: OKMatrix, Xinv: OKMatrix, basis: list, bound: int) -> int:
    cur = list(basis)
    for k in range(1, bound + 1):
        cur = [X @ u @ Xinv for u in cur]
        if all(u.equals(b) for u, b in zip(cur, basis)):
            return k
    raise PrecisionExhausted("conjugation action on E has unexpected order")


def _unitary_correction(A1: OKMatrix, E: MR.CentralizerData, L: int, tau_gens: list, seed: int) -> tuple:
    """z in E with z' z = 1 and (A1 z)^{n1} = I, n1 the order of conjugation by A1 on E.

    y = A1^{n1} lies in the fixed field F of that conjugation and satisfies y' y = 1.
    Writing y = omega y1 (Teichmuller times principal unit), z = zeta^-1 w / w'
    where zeta is an n1-th root of omega and N_{E/F}(w) = 1 + y1^-1, which by
    Hilbert 90 style bookkeeping gives N(w / w') = y1^-1.
    """
    ring = A1.ring
    n = A1.nrows
    eye = OKMatrix.identity(ring, n)
    A1inv = A1.inv()
    n1 = _conj_order(A1, A1inv, E.basis, L)
    y = A1.power(n1)
    for T in tau_gens:
        if not (y @ T).equals(T @ y):
            raise NonScalarPower("A1^n1 does not centralize tau(H)")
    qE = E.q

    def conj(u):
        return A1 @ u @ A1inv

    def norm(w):
        acc, t = w, w
        for _ in range(n1 - 1):
            t = conj(t)
            acc = acc @ t
        return acc

    def trace(w):
        acc, t = w, w
        for _ in range(n1 - 1):
            t = conj(t)
            acc = acc + t
        return acc

    omega = MR.e_teichmuller(y, qE)
    y1 = y @ omega.inv()
    if not (y1 - eye).residue().is_zero():
        raise PrecisionExhausted("principal part of A1^n1 is not 1 mod ell")
    zeta = omega.power(pow(n1, -1, qE - 1))
    v = eye + y1.inv()
    theta, trinv = None, None
    rng = random.Random(seed)
    candidates = list(E.basis)
    for _ in range(4 * RETRY_BUDGET):
        candidates.append(E.from_coords(np.array([[rng.randrange(ring.ell) for _ in range(ring.m)] for _ in range(E.dim)], dtype=np.int64)))
    for cand in candidates:
        t = trace(cand)
        if MR.e_is_unit(t):
            theta, trinv = cand, t.inv()
            break
    if theta is None:
        raise NonScalarPower("no element of unit trace found")
    two = teichmuller(ring.fq(2))
    w = eye.scale((two ** pow(n1, -1, ring.ell - 1)).coeffs)
    vinv = v.inv()
    for k in range(1, ring.N):
        r = norm(w) @ vinv - eye
        if r.is_zero():
            break
        if r.valuation() < k:
            raise PrecisionExhausted("norm lifting lost track of precision")
        delta = r.div_ell(k)
        delta = E.from_coords(E.coords(delta) % ring.ell)
        x = -(delta @ theta @ trinv)
        w = w @ (eye + x.mul_ell(k))
    if not norm(w).equals(v):
        raise PrecisionExhausted("norm equation not solved")
    z = zeta.inv() @ w @ E.adjoint(w).inv()
    return z, n1


def extend_to_G(tau: dict, F: OKMatrix, structure: InertiaStructure, seed: int = 0) -> tuple:
    """Extend an H-representation on a lattice with perfect invariant form F to G.

    `tau` maps each element of H (indices of structure.group) to its matrix.
    Returns (images for all elements of G, ExtensionTrace).
    """
    G = structure.group
    ring = F.ring
    n = F.nrows
    L = structure.L_order
    Hgroup, emap = subgroup(G, structure.H)
    tau_list = [tau[g] for g in emap]
    c = structure.c
    conj_list = [tau[G.conj(c, g)] for g in emap]
    eye = OKMatrix.identity(ring, n)
    gens = [tau_list[g] for g in Hgroup.generators] or [eye]
    try:
        A = MR.intertwiner(tau_list, conj_list, Hgroup, seed)
    except NotIsomorphic as exc:
        raise NotIsomorphicTwist(f"conjugated representation is not isomorphic: {exc}",
                                 hom_dim_mod_ell=exc.hom_dim_mod_ell) from exc
    if not F.det().is_unit():
        raise FormNotPerfect("form is not perfect on the lattice")
    for M in tau_list:
        if not (M.T @ F @ M).equals(F):
            raise NotStable("form is not H-invariant")
    E = MR.centralizer_field(gens, F)
    Finv = F.inv()
    a = Finv @ A.T @ F @ A
    if not E.contains(a) or not E.adjoint(a).equals(a) or not MR.e_is_unit(a):
        raise MultiplierEscapesE0("multiplier of A is not a unit of E0")
    Ainv = A.inv()
    x = a @ (Ainv @ a @ A)
    if not E.contains(x) or not E.adjoint(x).equals(x):
        raise MultiplierEscapesE0("a sigma^-1(a) is not in E0")
    E0 = MR.fixed_subfield(E)
    a1 = MR.e_sqrt(x, E0, seed)
    A1_raw = A @ A @ a1.inv()
    if not (A1_raw.T @ F @ A1_raw).equals(F):
        raise MultiplierEscapesE0("A1 does not preserve the form")
    q0 = ring.q ** E.fixed_dim
    mu = q0 - 1
    b = A1_raw.power(L)
    corrected = False
    n1 = None
    z = eye
    if not A1_raw.power(mu).power(L).is_identity():
        z, n1 = _unitary_correction(A1_raw, E, L, gens, seed)
        corrected = True
    A1 = A1_raw @ z
    checks = {}
    checks["A^T F A = F a"] = (A.T @ F @ A).equals(F @ a)
    checks["a sigma^-1(a) = a1^2"] = x.equals(a1 @ a1)
    checks["a1 in E0"] = E.adjoint(a1).equals(a1)
    checks["A1^T F A1 = F"] = (A1.T @ F @ A1).equals(F)
    B = A1.power(mu)
    checks["B^#L = I"] = B.power(L).is_identity()
    if not checks["B^#L = I"]:
        raise NonScalarPower("B^#L is not the identity")
    s = pow(2 * mu, -1, L) if L > 1 else 0
    Bs = B.power(s)
    conj_ok = all((Bs @ tau[h]).equals(tau[G.conj(c, h)] @ Bs) for h in structure.H)
    checks["conjugation identity"] = conj_ok
    checks["tau_G(c)^#L = I"] = Bs.power(L).is_identity()
    checks["tau_G(c) preserves F"] = (Bs.T @ F @ Bs).equals(F)
    if not all(checks.values()):
        failed = [k for k, v in checks.items() if not v]
        raise PrecisionExhausted(f"extension identities fail: {failed}")
    det = A1.det()
    det_int = 1 if det.coeffs == CoeffArith(ring).one else (-1 if (det + ring.one()).is_zero() else 0)
    if det_int == 0:
        raise PrecisionExhausted("det A1 is not +-1")
    Bpow = [eye]
    for _ in range(1, max(L, 1)):
        Bpow.append(Bpow[-1] @ Bs)
    images = [None] * G.order
    for g in range(G.order):
        h, j = structure.decompose(g)
        images[g] = tau[h] @ Bpow[j]
    iota = _conj_order(Bs, Bs.inv(), E.basis, max(L, 1)) if L > 1 else 1
    trace = ExtensionTrace(A, a, a1, A1_raw, z, A1, b, mu, B, s, det_int, E.dim, E.fixed_dim, iota,
                           corrected, n1, checks)
    return images, trace


# ---------------------------------------------------------------------------
# decomposition of symplectic K[G]-modules


@dataclass
class Piece:
    basis: OKMatrix  # saturated basis in lattice coordinates
    gram: OKMatrix  # restriction of the form (meaningful when not flagged)
    flagged: bool


def _orth_complement(e: OKMatrix, S: OKMatrix, X: OKMatrix) -> OKMatrix:
    """Saturated basis of {x in span X : e(S, x) = 0}."""
    from .linalg import kernel

    M = S.T @ e @ X
    k = kernel(M)
    return X @ k


def decompose_symplectic_G(images: list, e: OKMatrix, group: FiniteGroup, table=None, seed: int = 0) -> list:
    """Split (V, e) into simple pieces: nondegenerate ones with their form, and isotropic ones flagged for doubling."""
    ring = e.ring
    rng = random.Random(seed)
    table = table or character_table_dixon(group)
    rep = MR.Representation(group, ring, images)
    try:
        projs = MR.isotypic_projectors(rep, table)
    except PrecisionExhausted as exc:
        raise DecompositionFailure(str(exc)) from exc
    orbits = [p.orbit for p in projs]
    all_orbits = MR.character_orbits(table, ring)
    index_of = {tuple(o): i for i, o in enumerate(orbits)}
    done = set()
    pieces = []
    gens = group.generators
    for i, pr in enumerate(projs):
        if i in done:
            continue
        done.add(i)
        U = MR.projector_image(pr.projector)
        d_idx = MR.dual_orbit(table, pr.orbit, all_orbits)
        dual = tuple(all_orbits[d_idx])
        j = index_of.get(dual)
        try:
            if j is not None and j != i:
                done.add(j)
                B, _rows, sub = MR.subspace_action(images, U)
                for S in MR.simple_split(sub, gens, rng.randrange(1 << 30)):
                    basis = B @ S
                    pieces.append(Piece(basis, basis.T @ e @ basis, True))
                continue
            X = U
            while X.ncols:
                B, _rows, sub = MR.subspace_action(images, X)
                simples = [B @ S for S in MR.simple_split(sub, gens, rng.randrange(1 << 30))]
                S = simples[0]
                gram = S.T @ e @ S
                if S.ncols % 2 == 0 and not gram.is_zero() and _nondegenerate(gram):
                    pieces.append(Piece(S, gram, False))
                    X = _orth_complement(e, S, X)
                    continue
                partner = None
                for T in simples[1:]:
                    if not (S.T @ e @ T).is_zero():
                        partner = T
                        break
                if partner is None:
                    raise DecompositionFailure("isotropic simple piece has no dual partner")
                pieces.append(Piece(S, gram, True))
                from .linalg import hstack

                X = _orth_complement(e, hstack([S, partner]), X)
        except (SplitInconclusive, NotStable) as exc:
            raise DecompositionFailure(str(exc)) from exc
    total = sum(p.basis.ncols * (2 if p.flagged else 1) for p in pieces)
    if total != e.nrows:
        raise DecompositionFailure(f"pieces cover dimension {total} of {e.nrows}")
    return pieces


def _nondegenerate(gram: OKMatrix) -> bool:
    d = gram.det()
    return not d.is_zero()


# ---------------------------------------------------------------------------
# the embedding pipeline


@dataclass
class _Context:
    ring: RingSpec
    rng: random.Random
    ledger: list
    notes: list
    force: bool
    depth: int = 0

    def seed(self) -> int:
        return self.rng.randrange(1 << 30)


def find_invariant_form(images: list) -> KMatrix:
    """A nondegenerate invariant alternating form of the representation, by seeded search."""
    forms = invariant_forms(images, "alternating")
    if not forms:
        raise NotStable("no invariant alternating form")
    ring = forms[0].ring
    rng = random.Random(0)
    ints = [F.integral.mul_ell(max(F.shift, 0)) for F in forms]
    X = _random_nondegenerate(ints, rng, ring)
    if X is None:
        raise NotStable("no nondegenerate invariant alternating form found")
    return KMatrix(X)


def _random_nondegenerate(mats: list, rng: random.Random, ring: RingSpec):
    for attempt in range(RETRY_BUDGET):
        X = mats[0] if attempt == 0 else None
        if X is None:
            for M in mats:
                term = M.scale(rng.randrange(ring.ell ** 2))
                X = term if X is None else X + term
        if not X.det().is_zero():
            return X
    return None


def embed_inertia_group(structure: InertiaStructure, rep: MR.Representation, form=None, *, force: bool = False,
                        seed: int = 0) -> SymplecticCertificate:
    """Certified embedding of G into Sp_2d(O_K) from a faithful symplectic representation of dimension 2d."""
    ell = structure.ell
    if ell < 5 and not force:
        raise ForceRequired(f"ell = {ell} < 5 requires force")
    G = structure.group
    ring = rep.ring
    n = rep.dim
    if n % 2:
        raise OddDimension(f"representation dimension {n} is odd")
    ident = KMatrix(OKMatrix.identity(ring, n))
    for g in range(G.order):
        if g != G.identity and rep.images[g].equals(ident):
            raise NotFaithful(f"element {g} acts trivially")
    ctx = _Context(ring, random.Random(seed), [], [], force)
    if form is None:
        form = find_invariant_form([rep.images[g] for g in G.generators])
        ctx.notes.append("form: found by invariant-form search")
    form = form if isinstance(form, KMatrix) else KMatrix(form)
    for g in G.generators:
        M = rep.images[g]
        if not (M.T @ form @ M).equals(form):
            raise NotStable("form is not invariant")
    T = MR.stabilize_lattice(rep)
    repT = rep.conjugate(T.basis)
    images = repT.ok_images()
    gramT = T.basis.T @ form @ T.basis
    gram = gramT.integral
    table = character_table_dixon(G)
    pieces = decompose_symplectic_G(images, gram, G, table, ctx.seed())
    ctx.notes.append(f"decomposition: {len(pieces)} piece(s), dims "
                     f"{[p.basis.ncols for p in pieces]}, flagged {[p.flagged for p in pieces]}")
    parts = []
    for p in pieces:
        _B, _rows, sub = MR.subspace_action(images, p.basis)
        parts.append(_embed_piece(structure, sub, p.gram, p.flagged, ctx))
    out_images, J = direct_sum(parts, G)
    if J.nrows > n:
        raise BudgetViolation(f"pieces need dimension {J.nrows} > {n}")
    out_images, J = _pad_pair(out_images, J, n)
    if J.nrows < n or parts and sum(q[1].nrows for q in parts) < n:
        ctx.notes.append(f"padded {sum(q[1].nrows for q in parts)} -> {n}")
    S = symplectic_basis(J)
    Sinv = S.inv()
    Jstd = j_std(ring, n)
    if not (S.T @ J @ S).equals(Jstd):
        raise PrecisionExhausted("symplectic basis recheck failed")
    final = [Sinv @ M @ S for M in out_images]
    cert = SymplecticCertificate(ring, G, final, Jstd.with_prec(min(M.prec for M in final)), structure,
                                 ctx.ledger, ctx.notes, None, seed)
    cert.verify()
    return cert


def _faithful_quotient(structure: InertiaStructure, images: list):
    G = structure.group
    kern = [g for g in range(G.order) if images[g].is_identity()]
    if len(kern) == 1:
        return structure, images, None
    Gbar, proj = quotient(G, kern)
    reps = [None] * Gbar.order
    for g in range(G.order):
        if reps[proj[g]] is None:
            reps[proj[g]] = g
    Hbar = sorted({int(proj[h]) for h in structure.H})
    sbar = structure_from(Gbar, Hbar, int(proj[structure.c]), structure.ell)
    return sbar, [images[r] for r in reps], proj


def _embed_piece(structure: InertiaStructure, images: list, gram: OKMatrix, flagged: bool, ctx: _Context) -> tuple:
    """(images over structure.group, perfect alternating gram) for one simple piece."""
    sbar, imgs, proj = _faithful_quotient(structure, images)
    out, J = _embed_faithful(sbar, imgs, gram, flagged, ctx)
    if proj is None:
        return out, J
    return [out[int(proj[g])] for g in range(structure.group.order)], J


def _embed_faithful(s: InertiaStructure, images: list, gram: OKMatrix, flagged: bool, ctx: _Context) -> tuple:
    G = s.group
    ring = ctx.ring
    n = images[0].nrows
    tag = "  " * ctx.depth
    if flagged:
        out, J = hyperbolic_double(images)
        ctx.notes.append(f"{tag}piece dim {n}: hyperbolic double -> {2 * n}")
        return out, J
    Hgroup, emap = subgroup(G, s.H)
    Himgs = [images[g] for g in emap]
    hgens = [Himgs[g].residue() for g in Hgroup.generators] or [OKMatrix.identity(ring.residue, n)]
    if MR.meataxe_is_simple(hgens, ctx.seed()).simple:
        _i, bf = form_normalize(BilinearForm(KMatrix(gram), "alternating"), Lattice.standard(ring, n))
        ctx.notes.append(f"{tag}piece dim {n}: simple over H, form rescaled to a perfect one")
        return images, bf.gram.to_ok()
    tableH = character_table_dixon(Hgroup)
    projs = MR.isotypic_projectors(MR.Representation(Hgroup, ring, Himgs), tableH)
    if len(projs) > 1:
        return _induction_branch(s, images, gram, projs[0].projector, ctx)
    return _isotypic_branch(s, images, gram, Hgroup, emap, ctx)


def _induction_branch(s: InertiaStructure, images: list, gram: OKMatrix, P1: KMatrix, ctx: _Context) -> tuple:
    G = s.group
    n = images[0].nrows
    tag = "  " * ctx.depth
    G1 = [g for g in range(G.order) if (KMatrix(images[g]) @ P1).equals(P1 @ KMatrix(images[g]))]
    k = G.order // len(G1)
    U1 = MR.projector_image(P1)
    B, _rows, sub = MR.subspace_action([images[g] for g in G1], U1)
    G1grp, e1map = subgroup(G, G1)
    pos = {old: new for new, old in enumerate(e1map)}
    s1 = structure_from(G1grp, [pos[h] for h in s.H], pos[G.power(s.c, k)], s.ell)
    gram1 = B.T @ gram @ B
    if gram1.det().is_zero():
        raise DecompositionFailure("form is degenerate on an H-isotypic component")
    ctx.notes.append(f"{tag}piece dim {n}: {k} H-isotypic components, inducing from index {k}")
    ctx.depth += 1
    f_imgs, e1 = _embed_piece(s1, sub, gram1, False, ctx)
    ctx.depth -= 1
    f_imgs, e1 = _pad_pair(f_imgs, e1, U1.ncols)
    f = {e1map[i]: f_imgs[i] for i in range(G1grp.order)}
    ind = induce_symplectic(G, G1, f, e1, ctx.seed())
    return ind.images, ind.gram


def _cyclic_route(s: InertiaStructure, images: list, ctx: _Context, extra: str) -> tuple:
    """Embed G = H x L with H acting by +-1 through C_{#L} x {+-1}."""
    G = s.group
    n = images[0].nrows
    eye = OKMatrix.identity(ctx.ring, n)
    signs = {}
    for h in s.H:
        if images[h].is_identity():
            signs[h] = 1
        elif images[h].equals(-eye):
            signs[h] = -1
        else:
            raise DecompositionFailure("H does not act through +-1")
    cert = cyclic_embedding(s.ell, s.k, ctx.ring, ctx.seed())
    out = []
    for g in range(G.order):
        h, j = s.decompose(g)
        out.append(cert.images[_cyclic_index(j, signs[h], s.L_order)])
    ctx.notes.append(f"{'  ' * ctx.depth}piece dim {n}: {extra}cyclic embedding of dimension {cert.dim}")
    ctx.notes.extend(f"{'  ' * (ctx.depth + 1)}{note}" for note in cert.notes)
    return out, cert.gram


def _isotypic_branch(s: InertiaStructure, images: list, gram: OKMatrix, Hgroup, emap, ctx: _Context) -> tuple:
    G = s.group
    ring = ctx.ring
    n = images[0].nrows
    tag = "  " * ctx.depth
    Himgs = [images[g] for g in emap]
    BW, tauW_list = MR.h_simple_submodule(Himgs, Hgroup, ctx.seed())
    w = BW.ncols
    r = n // w
    if w == 1:
        return _cyclic_route(s, images, ctx, "H acts by scalars, ")
    tau = {emap[i]: tauW_list[i] for i in range(Hgroup.order)}
    gens = [tauW_list[g] for g in Hgroup.generators]
    parity = "alternating"
    forms = invariant_forms(gens, parity)
    if not forms:
        parity = "symmetric"
        forms = invariant_forms(gens, parity)
    if not forms:
        raise DecompositionFailure("H-simple constituent is not self-dual")
    ints = [F.integral for F in forms]
    F = None
    for _ in range(RETRY_BUDGET):
        X = None
        for M in ints:
            term = M.scale(ctx.rng.randrange(1, ring.ell ** 2))
            X = term if X is None else X + term
        if not X.is_zero():
            F = X
            break
    if F is None:
        raise DecompositionFailure("no nonzero invariant form on W")
    _i, bf = form_normalize(BilinearForm(KMatrix(F), parity), Lattice.standard(ring, w))
    Fp = bf.gram.to_ok()
    tauG, trace = extend_to_G(tau, Fp, s, ctx.seed())
    if parity == "symmetric":
        out, J = hyperbolic_double(tauG)
    else:
        out, J = tauG, Fp
    desc = (f"{tag}piece dim {n}: H-isotypic, W dim {w}, r = {r}, [E:K] = {trace.E_dim}, "
            f"[E0:K] = {trace.E0_dim}, {parity} form on W")
    kern = [g for g in range(G.order) if g != G.identity and out[g].is_identity()]
    if not kern:
        ctx.notes.append(desc + f", extension injective, dimension {J.nrows}")
        return out, J
    cpow = {s.c_power(j) for j in range(s.L_order)}
    for g in kern:
        if g not in cpow or any(G.mul(g, x) != G.mul(x, g) for x in range(G.order)):
            raise DecompositionFailure("kernel of the extension is not central in L")
    if w == trace.E0_dim:
        for h in s.H:
            if not (images[h] @ images[h]).is_identity():
                raise DecompositionFailure("dim over E0 is 1 but H has elements of order > 2")
        return _cyclic_route(s, images, ctx, "extension not injective, dim_E0 W = 1, ")
    iota = trace.iota_order
    L = s.L_order
    t = 0
    while s.ell ** t < L // iota:
        t += 1
    phi_t = euler_phi_prime_power(s.ell, t)
    phi_L = euler_phi_prime_power(s.ell, s.k)
    record = {
        "w": w,
        "r": r,
        "t": t,
        "#L": L,
        "#iota(L)": iota,
        "[E0:K]": trace.E0_dim,
        "[E:K]": trace.E_dim,
        "kernel order": len(kern) + 1,
        "#iota(L) divides [E0:K]": trace.E0_dim % iota == 0,
        "#iota(L) <= [E0:K] <= w/2": iota <= trace.E0_dim <= w / 2,
        "r >= phi(ell^t)": r >= phi_t,
        "2w + phi(#L) <= rw": 2 * w + phi_L <= r * w,
    }
    ctx.ledger.append(record)
    failed = [k for k, v in record.items() if isinstance(v, bool) and not v]
    if failed:
        raise BudgetViolation(f"ledger inequalities fail: {failed} ({record})")
    psi = cyclic_embedding(s.ell, s.k, ring, ctx.seed())
    cyc = []
    for g in range(G.order):
        _h, j = s.decompose(g)
        cyc.append(psi.images[_cyclic_index(j, 1, L)])
    total = [block_diag(out[g], cyc[g]) for g in range(G.order)]
    Jt = block_diag(J, psi.gram)
    ctx.notes.append(desc + f", extension has kernel of order {len(kern) + 1}; "
                     f"adding the cyclic embedding of L, dimension {Jt.nrows}")
    return total, Jt

