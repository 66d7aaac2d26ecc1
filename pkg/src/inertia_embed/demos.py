"""Built-in scenarios: groups with faithful symplectic representations over Q_ell unramified.

Each builder returns a Scenario holding the inertia structure, the input
representation (possibly non-integral), an invariant alternating form (or
None when the pipeline should search for one) and the expected output
dimension.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field


from . import poly as P
from .errors import UnknownFamily
from .groups import (
    InertiaStructure,
    PHI5_OVER_F3,
    cyclic,
    elementary_semidirect,
    inertia_split,
    quaternion8,
    semidirect,
)
from .linalg import (
    KMatrix,
    OKMatrix,
    block_diag,
    companion,
    invariant_forms,
    j_std,
)
from .modrep import Representation, rep_from_input
from .padic import CoeffArith, RingSpec, ok_sqrt, ring_create


@dataclass
class Scenario:
    name: str
    ring: RingSpec
    structure: InertiaStructure
    rep: Representation
    form: KMatrix | None
    expected_dim: int
    description: str = ""
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# building blocks


def local_cyclotomic_factor(n: int, ring: RingSpec) -> list:
    """First monic factor over O_K (Hensel lift) of the n-th cyclotomic polynomial, ell not dividing n."""
    full = CoeffArith(ring)
    res = CoeffArith(ring, 1)
    phi = P.from_ints(full, P.cyclotomic_int(n))
    factors = P.factor_squarefree(res, P.reduce(res, phi))
    return P.hensel_lift(full, phi, factors)[0]


def power_ring_module(n: int, s: int, ring: RingSpec) -> tuple:
    """O_K[x]/(h) for h a local factor of Phi_n: (mult-by-x matrix, matrix of x -> x^s).

    The second matrix is a ring automorphism exactly when s lies in <q> mod n.
    """
    h = local_cyclotomic_factor(n, ring)
    ar = CoeffArith(ring)
    X = companion(ring, h)
    w = P.deg(h)
    cols = []
    xs = P.powmod(ar, [ar.zero, ar.one], s, h)
    cur = [ar.one]
    for _ in range(w):
        col = list(cur) + [ar.zero] * (w - len(cur))
        cols.append(col)
        cur = P.rem(ar, P.mul(ar, cur, xs), h) or [ar.zero]
    data = [[cols[j][i] for j in range(w)] for i in range(w)]
    S = OKMatrix.from_ints(ring, data)
    return X, S


def random_conjugator(ring: RingSpec, n: int, rng: random.Random, shift_rows: int = 1) -> KMatrix:
    """Random invertible K-matrix: a unimodular-ish integral matrix times ell^-1 on a few rows."""
    while True:
        data = [[rng.randrange(ring.ell ** 2) for _ in range(n)] for _ in range(n)]
        M = OKMatrix.from_ints(ring, data)
        if M.det().is_unit():
            break
    D = OKMatrix.identity(ring, n)
    for i in range(min(shift_rows, n)):
        D.data[i, i, 0] = ring.ell
    # X = M D / ell is non-integral when shift_rows < n
    return KMatrix(M @ D, -1 if shift_rows else 0)


def conjugate_input(rep: Representation, form: KMatrix, X: KMatrix) -> tuple:
    Xinv = X.inv()
    images = [Xinv @ M @ X for M in rep.images]
    return Representation(rep.group, rep.ring, images), X.T @ form @ X


def _rep_from_gens(G, gens: dict, ring: RingSpec) -> Representation:
    return rep_from_input(G, gens, ring)


def _symmetric_invariant_form(mats: list, rng: random.Random) -> OKMatrix:
    forms = [F.integral for F in invariant_forms(mats, "symmetric")]
    ring = forms[0].ring
    for attempt in range(64):
        X = forms[0] if attempt == 0 else None
        if X is None:
            for F in forms:
                t = F.scale(rng.randrange(ring.ell ** 2))
                X = t if X is None else X + t
        if not X.det().is_zero():
            return X
    raise RuntimeError("no nondegenerate symmetric invariant form")


# ---------------------------------------------------------------------------
# scenarios


def c3xc5(ring: RingSpec | None = None, seed: int = 0) -> Scenario:
    """C3 x C5: a C3 symplectic plane plus the 4-dimensional C5 block."""
    ring = ring or ring_create(5, 1, 16)
    G = semidirect(3, 5, 1)
    st = inertia_split(G, 5)
    A3 = companion(ring, [1, 1, 1])
    C5 = companion(ring, [1, 1, 1, 1, 1])
    from .symplectic import cyclic_base_embedding

    _C, _n, J5 = cyclic_base_embedding(5, ring, seed)
    gens = {1: block_diag(A3, OKMatrix.identity(ring, 4)), 3: block_diag(OKMatrix.identity(ring, 2), C5)}
    rep = _rep_from_gens(G, gens, ring)
    form = KMatrix(block_diag(j_std(ring, 2), J5))
    return Scenario("c3xc5", ring, st, rep, form, 6, "C3 x C5 in Sp6")


def q8(ring: RingSpec | None = None, seed: int = 0) -> Scenario:
    """Q8 on its 2-dimensional representation, conjugated by diag(1/ell, 1)."""
    ring = ring or ring_create(5, 1, 16)
    G = quaternion8()
    st = inertia_split(G, ring.ell)
    iota = ok_sqrt(ring.elem(-1))
    ar = CoeffArith(ring)
    zero = ar.zero
    mi = ar.neg(iota.coeffs)
    I_ = OKMatrix.from_ints(ring, [[iota.coeffs, zero], [zero, mi]])
    J_ = OKMatrix.from_ints(ring, [[0, 1], [-1, 0]])
    rep = _rep_from_gens(G, {2: I_, 4: J_}, ring)
    form = KMatrix(j_std(ring, 2))
    D = KMatrix(OKMatrix.from_ints(ring, [[1, 0], [0, ring.ell]]), -1)
    rep, form = conjugate_input(rep, form, D)
    return Scenario("q8", ring, st, rep, form, 2, "Q8 with non-integral input, Sp2")


def galois_module_rep(n: int, m: int, s: int, ring: RingSpec) -> tuple:
    """C_n x| C_m acting on O_K[x]/(h): h by x, c by x -> x^s."""
    G = semidirect(n, m, s)
    st = inertia_split(G, ring.ell)
    X, S = power_ring_module(n, s, ring)
    rep = _rep_from_gens(G, {1: X, n: S}, ring)
    return G, st, rep


def c11sd5(ring: RingSpec | None = None, seed: int = 0, s: int = 3) -> Scenario:
    """C11 x| C5: hyperbolic double of the 5-dimensional module, randomly conjugated."""
    ring = ring or ring_create(5, 1, 16)
    G, st, rep5 = galois_module_rep(11, 5, s, ring)
    from .symplectic import hyperbolic_double

    imgs, J = hyperbolic_double(rep5.ok_images())
    rep = Representation(G, ring, imgs)
    rng = random.Random(seed)
    rep, form = conjugate_input(rep, KMatrix(J), random_conjugator(ring, 10, rng))
    return Scenario("c11sd5", ring, st, rep, form, 10, "C11 x| C5 hyperbolic input, Sp10")


def c41_module(ring: RingSpec | None = None, s: int = 10) -> tuple:
    """The 20-dimensional simple module of C41 x| C5 over Q5 and its H-part."""
    ring = ring or ring_create(5, 1, 16)
    G, st, rep = galois_module_rep(41, 5, s, ring)
    return ring, G, st, rep


def c41sd5(ring: RingSpec | None = None, seed: int = 0) -> Scenario:
    """C41 x| C5 on its 20-dimensional module; the form is found by search."""
    ring, G, st, rep = c41_module(ring)
    return Scenario("c41sd5", ring, st, rep, None, 20, "C41 x| C5, 20-dimensional module")


def cyclic25(ring: RingSpec | None = None, seed: int = 0) -> Scenario:
    """C25 x {+-1} on Q5(zeta_25) with -1 acting as -I; form found by search."""
    ring = ring or ring_create(5, 1, 16)
    G = cyclic(50)
    st = inertia_split(G, 5)
    C = companion(ring, list(P.cyclotomic_int(25)))
    # generator 1 of C50 = (1 mod 25, 1 mod 2): zeta times -1
    rep = _rep_from_gens(G, {1: -C}, ring)
    return Scenario("cyclic25", ring, st, rep, None, 20, "C25 x {+-1} in Sp20")


def c41_extension(ring: RingSpec | None = None, seed: int = 0, s: int = 10) -> tuple:
    """Run extend_to_G for C41 x| C5 from a 20-dimensional local factor module of H = C41.

    Returns (images for all of G, ExtensionTrace, structure, F).
    """
    from .linalg import BilinearForm, Lattice, form_normalize
    from .symplectic import extend_to_G

    ring = ring or ring_create(5, 1, 16)
    G = semidirect(41, 5, s)
    st = inertia_split(G, ring.ell)
    X = companion(ring, local_cyclotomic_factor(41, ring))
    # H = C41 is the elements 0..40, a acting as x^a
    tau = {a: X.power(a) for a in st.H}
    F0 = invariant_forms([X], "alternating")[0]
    _, bf = form_normalize(BilinearForm(F0, "alternating"), Lattice.standard(ring, X.nrows))
    F = bf.gram.to_ok()
    images, trace = extend_to_G(tau, F, st, seed)
    return images, trace, st, F


def tensor_scenario(n: int, s: int, ring: RingSpec, seed: int = 0, conjugate: bool = True) -> Scenario:
    """C_n x| C_ell on W (x) U with W = O_K[x]/(h) and U the cyclotomic C_ell block.

    The form is a symmetric invariant form on W tensored with the alternating base form on U,
    so H acts isotypically with multiplicity ell - 1.
    """
    from .symplectic import cyclic_base_embedding

    ell = ring.ell
    G = semidirect(n, ell, s)
    st = inertia_split(G, ell)
    X, S = power_ring_module(n, s, ring)
    w = X.nrows
    C, _negI, JU = cyclic_base_embedding(ell, ring, seed)
    rng = random.Random(seed)
    FW = _symmetric_invariant_form([X, S], rng)
    u = C.nrows
    eyeU = OKMatrix.identity(ring, u)
    hx = kron(X, eyeU)
    cx = kron(S, C)
    rep = _rep_from_gens(G, {1: hx, n: cx}, ring)
    form = KMatrix(kron(FW, JU))
    if conjugate:
        rep, form = conjugate_input(rep, form, random_conjugator(ring, w * u, rng))
    return Scenario(f"tensor(n={n},s={s})", ring, st, rep, form, w * u,
                    f"C{n} x| C{ell} on a {w}x{u} tensor module", {"w": w, "r": u})


def kron(A: OKMatrix, B: OKMatrix) -> OKMatrix:
    from .linalg import arith

    ar = arith(A.ring)
    a, b = A.data, B.data
    prod = ar.mul(a[:, None, :, None, :], b[None, :, None, :, :])
    n1, m1 = A.shape
    n2, m2 = B.shape
    return OKMatrix(A.ring, prod.reshape(n1 * n2, m1 * m2, ar.m), min(A.prec, B.prec))


def c3_4_c5(ring: RingSpec | None = None, seed: int = 0) -> Scenario:
    """(Z/3)^4 x| C5 induced from a 2-dimensional H-module: five H-isotypic components."""
    from .symplectic import induce_symplectic

    ring = ring or ring_create(5, 1, 16)
    G = elementary_semidirect(3, PHI5_OVER_F3, 5)
    st = inertia_split(G, 5)
    A3 = companion(ring, [1, 1, 1])
    powers = [OKMatrix.identity(ring, 2), A3, A3 @ A3]
    # chi(v) = zeta_3^{v_0}; H elements are indices 0..80 with v_0 the lowest base-3 digit
    f = {h: powers[h % 3] for h in st.H}
    ind = induce_symplectic(G, st.H, f, j_std(ring, 2), seed)
    rep = Representation(G, ring, ind.images)
    rng = random.Random(seed)
    rep, form = conjugate_input(rep, KMatrix(ind.gram), random_conjugator(ring, 10, rng))
    return Scenario("c3^4:c5", ring, st, rep, form, 10, "(Z/3)^4 x| C5 induced from H, Sp10")


def ell3_budget_probe(ring: RingSpec | None = None, seed: int = 0) -> Scenario:
    """ell = 3: C4 x C3 on W (x) U with W = Q3(i), U the C3 plane."""
    ring = ring or ring_create(3, 1, 16)
    sc = tensor_scenario(4, 1, ring, seed)
    sc.name = "ell3-budget-probe"
    sc.description = "C4 x C3 over Q3, tensor module of dimension 4"
    return sc


def minus_one_in_q_powers(n: int, q: int) -> bool:
    x, seen = 1, set()
    while x not in seen:
        seen.add(x)
        x = x * q % n
    return (n - 1) in seen


def random_instances(count: int = 20, seed: int = 0, ell: int = 5, max_n: int = 200, max_degree: int = 6) -> list:
    """(n, s) pairs for seeded random tensor scenarios.

    n is prime to ell with -1 a power of ell mod n (so W is self-dual with a
    nontrivial adjoint involution) and [K(zeta_n):K] <= max_degree; s runs over the
    elements of order dividing ell in <ell> mod n.
    """
    rng = random.Random(seed)
    cands = []
    for n in range(3, max_n + 1):
        if math.gcd(n, ell) != 1 or not minus_one_in_q_powers(n, ell):
            continue
        deg = 1
        x = ell % n
        while x != 1 % n:
            x = x * ell % n
            deg += 1
        if deg > max_degree:
            continue
        group = [pow(ell, i, n) for i in range(deg)]
        ss = sorted({t for t in group if pow(t, ell, n) == 1 % n})
        cands.append((n, ss))
    out = []
    for _ in range(count):
        n, ss = rng.choice(cands)
        out.append((n, rng.choice(ss)))
    return out


BUILDERS = {
    "c3xc5": c3xc5,
    "q8": q8,
    "c11sd5": c11sd5,
    "c41sd5": c41sd5,
    "cyclic25": cyclic25,
    "ell3-budget-probe": ell3_budget_probe,
    "c3^4:c5": c3_4_c5,
}


def build(name: str, ell: int | None = None, precision: int | None = None, seed: int = 0) -> Scenario:
    if name not in BUILDERS:
        raise UnknownFamily(f"unknown demo {name!r}; choose from {sorted(BUILDERS)}")
    default_ell = 3 if name == "ell3-budget-probe" else 5
    ring = ring_create(ell or default_ell, 1, precision or 16)
    return BUILDERS[name](ring, seed)


# ---------------------------------------------------------------------------
# negative controls


def twist_counterexample(ring: RingSpec | None = None) -> tuple:
    """C31 x| C5 with c h c^-1 = h^2; 2 is not a power of 5 mod 31, so the twisted H-module differs.

    Returns (structure, tau on H, a perfect matrix standing in for the form).
    """
    ring = ring or ring_create(5, 1, 16)
    G = semidirect(31, 5, 2)
    st = inertia_split(G, 5)
    h = local_cyclotomic_factor(31, ring)
    X = companion(ring, h)
    tau = {a: X.power(a) for a in st.H}
    return st, tau, OKMatrix.identity(ring, X.nrows)

