"""Representations over K at finite precision and their decomposition.

Covers lattice stabilization, reduction mod ell, the MeatAxe over F_q,
isotypic projectors from a character table, splitting isotypic pieces into
simple ones, centralizer fields with the adjoint involution of an invariant
form, intertwiners between conjugate representations, and arithmetic in the
centralizer field E (square roots, Teichmuller lifts, norms).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from . import poly as P
from .errors import (
    InconclusiveAfterRetries,
    InvolutionEscapesE,
    NonResidue,
    NotCommutative,
    NotInvertible,
    NotIsomorphic,
    NotStable,
    NotSquarefreeModEll,
    PrecisionExhausted,
    RelationViolated,
    SplitInconclusive,
)
from .groups import CharacterTable, FiniteGroup, subgroup
from .linalg import (
    KMatrix,
    Lattice,
    OKMatrix,
    _scalar_inv,
    arith,
    commutant,
    kernel,
    lattice_sum,
    minimal_polynomial,
    normalize_basis,
    poly_at_matrix,
)
from .padic import CoeffArith, RingSpec, int_valuation, tonelli_shanks

RETRY_BUDGET = 32


# ---------------------------------------------------------------------------
# representations


class Representation:
    """Images of every group element as K-matrices (integral part plus ell-shift)."""

    def __init__(self, group: FiniteGroup, ring: RingSpec, images: list):
        self.group = group
        self.ring = ring
        self.images = [KMatrix(M) if isinstance(M, OKMatrix) else M for M in images]
        self.dim = self.images[0].shape[0] if images else 0

    def image(self, g: int) -> KMatrix:
        return self.images[g]

    def is_integral(self) -> bool:
        return all(M.is_integral() for M in self.images)

    def ok_images(self) -> list:
        if not self.is_integral():
            raise NotStable("representation is not integral on the standard lattice")
        return [M.to_ok() for M in self.images]

    @property
    def prec(self) -> int:
        return min(M.prec for M in self.images)

    def conjugate(self, basis: KMatrix) -> "Representation":
        """The representation in the basis given by the columns of `basis`."""
        binv = basis.inv()
        return Representation(self.group, self.ring, [binv @ M @ basis for M in self.images])

    def __repr__(self):
        return f"Representation(dim={self.dim}, group order={self.group.order}, prec={self.prec})"


def _as_kmatrix(M) -> KMatrix:
    return M if isinstance(M, KMatrix) else KMatrix(M)


def _generator_stable_lattice(gens: list, n: int, ring: RingSpec) -> KMatrix:
    """Basis of the smallest lattice containing the standard one and stable under `gens`."""
    T = KMatrix(OKMatrix.identity(ring, n))
    for _ in range(n * ring.N + 1):
        T2 = lattice_sum([T] + [M @ T for M in gens]).basis
        if (T2.inv() @ T).is_integral() and (T.inv() @ T2).is_integral():
            return T
        T = T2
    raise RelationViolated("generator images do not stabilize a lattice (infinite image?)")


def rep_from_input(group: FiniteGroup, gen_images: dict, ring: RingSpec) -> Representation:
    """Extend generator images to all of G by products and verify every Cayley-graph edge.

    Products are taken in the basis of a lattice stable under the generators,
    where every image is integral and multiplication loses no precision.
    Agreement of rho(x) rho(s) with rho(xs) for all x and all generators s
    forces rho to be a homomorphism.
    """
    gens = {int(g): _as_kmatrix(M) for g, M in gen_images.items()}
    if not gens:
        raise RelationViolated("no generator images given")
    n = next(iter(gens.values())).shape[0]
    for g, M in gens.items():
        try:
            M.inv()
        except NotInvertible as exc:
            raise NotInvertible(f"image of generator {g} is singular") from exc
    if all(M.is_integral() for M in gens.values()):
        T = Tinv = None
        local = {g: M.to_ok() for g, M in gens.items()}
    else:
        T = _generator_stable_lattice(list(gens.values()), n, ring)
        Tinv = T.inv()
        local = {}
        for g, M in gens.items():
            Ml = Tinv @ M @ T
            if not Ml.is_integral():
                raise NotStable(f"generator {g} does not preserve its stable lattice")
            local[g] = Ml.to_ok()
    ok: list = [None] * group.order
    ok[group.identity] = OKMatrix.identity(ring, n)
    frontier = [group.identity]
    while frontier:
        nxt = []
        for x in frontier:
            for s, M in local.items():
                y = group.mul(x, s)
                if ok[y] is None:
                    ok[y] = ok[x] @ M
                    nxt.append(y)
        frontier = nxt
    if any(im is None for im in ok):
        raise RelationViolated("generator images do not generate the group")
    for x in range(group.order):
        for s, M in local.items():
            if not (ok[x] @ M).equals(ok[group.mul(x, s)]):
                raise RelationViolated(f"rho({x}) rho({s}) != rho({group.mul(x, s)})")
    if T is None:
        images = [KMatrix(M) for M in ok]
    else:
        images = [T @ KMatrix(M) @ Tinv for M in ok]
    return Representation(group, ring, images)


def rep_from_images(group: FiniteGroup, ring: RingSpec, images: list, check: bool = True) -> Representation:
    rep = Representation(group, ring, images)
    if check:
        gens = group.generators
        for x in range(group.order):
            for s in gens:
                if not (rep.images[x] @ rep.images[s]).equals(rep.images[group.mul(x, s)]):
                    raise RelationViolated(f"rho({x}) rho({s}) != rho({group.mul(x, s)})")
    return rep


# ---------------------------------------------------------------------------
# lattices and reduction


def stabilize_lattice(rep: Representation, elems=None) -> Lattice:
    """The O_K-span of rho(g) applied to the standard lattice, over g in `elems`."""
    elems = range(rep.group.order) if elems is None else elems
    T = lattice_sum([rep.images[g] for g in elems])
    binv = T.basis.inv()
    for g in elems:
        if not (binv @ rep.images[g] @ T.basis).is_integral():
            raise PrecisionExhausted("stabilized lattice fails the stability recheck")
    return T


def reduce_mod_ell(rep: Representation, T: Lattice | None = None, elems=None) -> list:
    """Matrices over F_q of rho(g) in the basis of T (default: the standard lattice)."""
    elems = range(rep.group.order) if elems is None else elems
    binv = T.basis.inv() if T is not None else None
    out = []
    for g in elems:
        M = rep.images[g] if T is None else binv @ rep.images[g] @ T.basis
        if not M.is_integral():
            raise NotStable(f"rho({g}) does not preserve the lattice")
        out.append(M.to_ok().residue())
    return out


def subspace_action(images: list, basis: OKMatrix) -> tuple:
    """Normalized basis B (B[rows] = I) and the matrices of each image on span(B).

    Raises NotStable if some image does not preserve the span.
    """
    B, rows = normalize_basis(basis)
    sub = []
    for M in images:
        MB = M @ B
        X = MB[rows, list(range(B.ncols))]
        if not (B @ X).equals(MB):
            raise NotStable("subspace is not invariant")
        sub.append(X)
    return B, rows, sub


# ---------------------------------------------------------------------------
# F_q subspaces and the MeatAxe


class _FqSpan:
    """Echelonized span of vectors over F_q, grown one vector at a time."""

    def __init__(self, ring: RingSpec, n: int):
        self.ring = ring.residue
        self.ar = arith(self.ring)
        self.n = n
        self.rows: list = []  # (pivot, vector (n, m))

    def reduce(self, w: np.ndarray) -> np.ndarray:
        ar = self.ar
        w = w.copy()
        for p, row in self.rows:
            c = w[p]
            if c.any():
                w = (w - ar.mul(row, c[None, :])) % ar.M
        return w

    def add(self, w: np.ndarray) -> bool:
        w = self.reduce(w)
        nz = np.nonzero(w.any(axis=-1))[0]
        if not len(nz):
            return False
        p = int(nz[0])
        inv = _scalar_inv(self.ring, 1, w[p])
        self.rows.append((p, self.ar.mul(w, inv[None, :])))
        return True

    @property
    def dim(self) -> int:
        return len(self.rows)

    def basis(self) -> OKMatrix:
        if not self.rows:
            return OKMatrix(self.ring, self.ar.zeros((self.n, 0)))
        return OKMatrix(self.ring, np.stack([r for _, r in self.rows], axis=1))


def spin(gens: list, v: np.ndarray) -> OKMatrix:
    """Basis (columns) of the smallest subspace containing v and stable under gens."""
    ring = gens[0].ring
    ar = arith(ring)
    span = _FqSpan(ring, gens[0].nrows)
    queue = []
    if span.add(v):
        queue.append(v)
    while queue:
        u = queue.pop()
        for M in gens:
            w = ar.matmul(M.data, u[:, None, :])[:, 0]
            if span.add(w):
                queue.append(w)
    return span.basis()


@dataclass
class MeatAxeResult:
    simple: bool
    submodule: OKMatrix | None = None  # columns over F_q when not simple


def _random_fq(rng: random.Random, ring: RingSpec) -> tuple:
    return tuple(rng.randrange(ring.ell) for _ in range(ring.m))


def _random_algebra_element(gens: list, rng: random.Random, pool: list) -> OKMatrix:
    a, b = rng.randrange(len(pool)), rng.randrange(len(pool))
    pool.append(pool[a] @ pool[b])
    x = None
    for M in pool:
        c = _random_fq(rng, M.ring)
        term = M.scale(c)
        x = term if x is None else x + term
    return x


def meataxe_is_simple(gens: list, seed: int = 0, retries: int = RETRY_BUDGET) -> MeatAxeResult:
    """Holt-Rees MeatAxe with Norton's criterion over F_q (matrices over the residue ring)."""
    n = gens[0].nrows
    if n <= 1:
        return MeatAxeResult(True)
    ring = gens[0].ring
    res = CoeffArith(ring, 1)
    rng = random.Random(seed)
    pool = list(gens)
    gensT = [M.T for M in gens]
    for _ in range(retries):
        x = _random_algebra_element(gens, rng, pool)
        cp = _charpoly_fq(x)
        for g, _k in P.factor_with_multiplicity(res, cp, rng.randrange(1 << 30)):
            gx = poly_at_matrix(g, x)
            N = kernel(gx)
            if N.ncols == 0:
                continue
            v = N.data[:, 0]
            S = spin(gens, v)
            if S.ncols < n:
                return MeatAxeResult(False, S)
            if N.ncols != P.deg(g):
                continue
            NT = kernel(gx.T)
            w = NT.data[:, 0]
            D = spin(gensT, w)
            if D.ncols < n:
                # the annihilator of an invariant dual subspace is invariant
                return MeatAxeResult(False, kernel(D.T))
            return MeatAxeResult(True)
    raise InconclusiveAfterRetries(f"MeatAxe undecided after {retries} attempts")


def _charpoly_fq(x: OKMatrix) -> list:
    from .linalg import charpoly

    return charpoly(x)


def find_simple_submodule_mod_ell(gens: list, seed: int = 0) -> OKMatrix:
    """Basis over F_q of a simple submodule of the module given by `gens`."""
    n = gens[0].nrows
    basis = OKMatrix.identity(gens[0].ring, n)
    cur = gens
    depth_seed = seed
    while True:
        r = meataxe_is_simple(cur, depth_seed)
        if r.simple:
            return basis
        B, _rows, sub = subspace_action(cur, r.submodule)
        basis = basis @ B
        cur = sub
        depth_seed += 1


# ---------------------------------------------------------------------------
# isotypic projectors


def _mobius_prime_power(k: int) -> int:
    return 1 if k == 0 else (-1 if k == 1 else 0)


def _galois_units(e: int, ell: int, q: int) -> list:
    """Residues t mod e describing Gal(K(zeta_e)/K): t = q^i on the prime-to-ell part, any unit on the ell part."""
    a = int_valuation(e, ell) if e > 1 else 0
    la = ell ** a
    ep = e // la
    qpow = {pow(q, i, ep) if ep > 1 else 0 for i in range(max(1, ep))}
    return [t for t in range(e) if math.gcd(t, e) == 1 and ((t % ep) in qpow if ep > 1 else True)]


class _PeriodTable:
    """Values in O_K of sums of zeta_e^j over Galois orbits of exponents j."""

    def __init__(self, e: int, ring: RingSpec):
        self.e = e
        self.ring = ring
        ell = ring.ell
        self.ar = CoeffArith(ring)
        a = int_valuation(e, ell) if e > 1 else 0
        la = ell ** a
        ep = e // la
        self.a, self.la, self.ep = a, la, ep
        self.units = _galois_units(e, ell, ring.q)
        self.h = self._local_cyclotomic_factor(ep) if ep > 1 else None
        self.orbit_of = [-1] * e
        self.orbits = []
        self.values = []
        for j in range(e):
            if self.orbit_of[j] >= 0:
                continue
            orb = sorted({(j * t) % e for t in self.units})
            for x in orb:
                self.orbit_of[x] = len(self.orbits)
            self.orbits.append(orb)
            self.values.append(self._period(orb))

    def _local_cyclotomic_factor(self, ep: int) -> list:
        res = CoeffArith(self.ring, 1)
        full = self.ar
        phi = P.from_ints(full, P.cyclotomic_int(ep))
        factors = P.factor_squarefree(res, P.reduce(res, phi))
        return P.hensel_lift(full, phi, factors)[0]

    def _period(self, orb: list) -> tuple:
        ar = self.ar
        j = orb[0]
        j2 = j % self.la
        mu = _mobius_prime_power(self.a - (int_valuation(j2, self.ring.ell) if j2 else self.a))
        if mu == 0:
            return ar.zero
        if self.ep == 1:
            return ar.scalar(mu)
        r1 = sorted({x % self.ep for x in orb})
        s = []
        for j1 in r1:
            mono = [ar.zero] * j1 + [ar.one]
            s = P.add(ar, s, mono)
        s = P.rem(ar, s, self.h)
        if P.deg(s) > 0:
            raise ArithmeticError("Gauss period is not in K")
        val = s[0] if s else ar.zero
        return ar.smul(mu, val)

    def evaluate(self, mult: np.ndarray) -> tuple:
        """Value in O_K of sum_j mult[j] zeta_e^j, for mult constant on Galois orbits."""
        ar = self.ar
        acc = ar.zero
        for i in sorted({self.orbit_of[int(j)] for j in np.nonzero(mult)[0]}):
            orb = self.orbits[i]
            c = int(mult[orb[0]])
            if any(int(mult[x]) != c for x in orb):
                raise ArithmeticError("class function value is not K-rational")
            acc = ar.add(acc, ar.smul(c, self.values[i]))
        return acc


def character_orbits(table: CharacterTable, ring: RingSpec) -> list:
    """Orbits of irreducible characters under Gal(K(zeta_e)/K), as sorted index lists."""
    units = _galois_units(table.exponent, ring.ell, ring.q)
    seen = [False] * table.num
    out = []
    for chi in range(table.num):
        if seen[chi]:
            continue
        orb = sorted({table.galois_image(chi, t) for t in units})
        for x in orb:
            seen[x] = True
        out.append(orb)
    return out


def dual_orbit(table: CharacterTable, orbit: list, orbits: list) -> int:
    """Index in `orbits` of the orbit of complex conjugates of `orbit`."""
    conj = table.galois_image(orbit[0], -1 % table.exponent if table.exponent > 1 else 1)
    for i, o in enumerate(orbits):
        if conj in o:
            return i
    raise ArithmeticError("dual orbit not found")


@dataclass
class IsotypicProjector:
    projector: KMatrix
    orbit: list
    degree: int


def isotypic_projectors(rep: Representation, table: CharacterTable, ring: RingSpec | None = None,
                        keep_zero: bool = False) -> list:
    """Central idempotents of K[G] for each Galois orbit of characters, acting through rho.

    rho must be integral. Division by #G costs v_ell(#G) digits.
    """
    ring = ring or rep.ring
    G = rep.group
    images = rep.ok_images()
    n = rep.dim
    ar = arith(ring)
    ell = ring.ell
    v = int_valuation(G.order, ell)
    if ring.N - v < 4:
        raise PrecisionExhausted("not enough precision for character idempotents")
    unit_part = G.order // ell ** v
    stack = np.stack([M.data for M in images])  # (|G|, n, n, m)
    periods = _PeriodTable(table.exponent, ring)
    inv_of = G.inv
    out = []
    prec = min(M.prec for M in images) - v
    for orb in character_orbits(table, ring):
        deg = table.degrees[orb[0]]
        msum = table.orbit_sum(orb)  # (classes, e)
        class_vals = [periods.evaluate(msum[c]) for c in range(len(table.classes))]
        # weight of rho(g) is t_O(g^-1)
        weights = np.stack([ar.const(class_vals[table.class_of[inv_of[g]]]) for g in range(G.order)])
        total = ar.reduce(ar.mul(stack, weights[:, None, None, :]).sum(axis=0))
        coef = CoeffArith(ring).scalar(deg * pow(unit_part, -1, ell ** ring.N))
        total = ar.mul(total, ar.const(coef)[None, None, :])
        Pm = KMatrix(OKMatrix(ring, total, prec), -v)
        if Pm.integral.is_zero() and not keep_zero:
            continue
        out.append(IsotypicProjector(Pm, orb, deg))
    _verify_projectors(out, images, n, ring)
    return out


def _verify_projectors(projs: list, images: list, n: int, ring: RingSpec) -> None:
    eye = KMatrix(OKMatrix.identity(ring, n))
    total = None
    for pr in projs:
        Pm = pr.projector
        if not (Pm @ Pm).equals(Pm):
            raise PrecisionExhausted("isotypic projector is not idempotent at working precision")
        for M in images:
            if not (Pm @ M).equals(KMatrix(M) @ Pm):
                raise PrecisionExhausted("isotypic projector is not central")
        total = Pm if total is None else total + Pm
    if total is not None and not total.equals(eye):
        raise PrecisionExhausted("isotypic projectors do not sum to the identity")


def projector_image(Pm: KMatrix) -> OKMatrix:
    """Saturated basis of the image of a projector: the kernel of I - P."""
    n = Pm.shape[0]
    ring = Pm.ring
    s = -Pm.shift if Pm.shift < 0 else 0
    eye = OKMatrix.identity(ring, n).mul_ell(s)
    integral = Pm.integral.mul_ell(Pm.shift + s) if Pm.shift + s > 0 else Pm.integral
    return kernel(eye - integral)


# ---------------------------------------------------------------------------
# splitting isotypic pieces


def local_coprime_factors(f: list, ring: RingSpec, seed: int = 0) -> list:
    """Hensel lift of the prime-power factorization of monic f mod ell."""
    full = CoeffArith(ring)
    res = CoeffArith(ring, 1)
    parts = P.coprime_factors(res, P.reduce(res, f), seed)
    if len(parts) == 1:
        return [f]
    return P.hensel_lift(full, [tuple(c) for c in f], parts)


def _is_commutative(basis: list) -> bool:
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            if not (basis[i] @ basis[j]).equals(basis[j] @ basis[i]):
                return False
    return True


def simple_split(images: list, gens: list, seed: int = 0, retries: int = RETRY_BUDGET) -> list:
    """Split an isotypic module into simple submodules.

    `images` are integral matrices of the module (gens indexes the generators).
    Returns a list of saturated bases (columns) in the module's coordinates.
    A piece is accepted as simple when its commutant is commutative.
    """
    ring = images[0].ring
    n = images[0].nrows
    rng = random.Random(seed)
    gmats = [images[g] for g in gens]
    C = commutant(gmats)
    if _is_commutative(C):
        return [OKMatrix.identity(ring, n)]
    for _ in range(retries):
        x = None
        for Cb in C:
            term = Cb.scale(rng.randrange(ring.ell ** 2))
            x = term if x is None else x + term
        f = minimal_polynomial(x, rng)
        try:
            factors = local_coprime_factors(f, ring, rng.randrange(1 << 30))
        except NotSquarefreeModEll:
            continue
        if len(factors) < 2:
            continue
        pieces = [kernel(poly_at_matrix(fac, x)) for fac in factors]
        if sum(p.ncols for p in pieces) != n or any(p.ncols == 0 for p in pieces):
            continue
        out = []
        for piece in pieces:
            B, _rows, sub = subspace_action(images, piece)
            for local in simple_split(sub, gens, rng.randrange(1 << 30), retries):
                out.append(B @ local)
        dims = {b.ncols for b in out}
        if len(dims) != 1 or len(out) * dims.pop() != n:
            raise SplitInconclusive("simple pieces of an isotypic module have different dimensions")
        return out
    raise SplitInconclusive(f"no splitting element found in {retries} attempts")


# ---------------------------------------------------------------------------
# centralizer fields


@dataclass
class CentralizerData:
    """E = commutant of tau(H) on W, with the adjoint involution of a form."""

    basis: list  # OKMatrix elements of E, normalized so coordinates are read on `rows`
    rows: list
    dim: int
    residue_degree: int
    gram: OKMatrix | None = None
    ginv: OKMatrix | None = None
    involution: OKMatrix | None = None  # coordinates of u' in terms of u
    fixed_dim: int | None = None  # [E_0 : K]
    fixed_basis: list = field(default_factory=list)
    sigma: OKMatrix | None = None
    iota_order: int | None = None

    @property
    def ring(self) -> RingSpec:
        return self.basis[0].ring

    @property
    def n(self) -> int:
        return self.basis[0].nrows

    def coords(self, X: OKMatrix) -> np.ndarray:
        flat = X.data.reshape(-1, X.ring.m)
        return flat[self.rows]

    def from_coords(self, c: np.ndarray) -> OKMatrix:
        ar = arith(self.ring)
        stack = np.stack([b.data for b in self.basis])
        data = ar.reduce(ar.mul(stack, c[:, None, None, :]).sum(axis=0))
        return OKMatrix(self.ring, data, min(b.prec for b in self.basis))

    def contains(self, X: OKMatrix, prec: int | None = None) -> bool:
        return self.from_coords(self.coords(X)).equals(X, prec)

    def adjoint(self, X: OKMatrix) -> OKMatrix:
        """u' = F^-1 u^T F."""
        return self.ginv @ X.T @ self.gram

    @property
    def q(self) -> int:
        return self.ring.q ** self.residue_degree


def _algebra(elems: list, residue_degree: int | None = None) -> CentralizerData:
    ring = elems[0].ring
    n = elems[0].nrows
    flat = OKMatrix(ring, np.stack([c.data.reshape(-1, ring.m) for c in elems], axis=1), min(c.prec for c in elems))
    Bn, rows = normalize_basis(flat)
    basis = [OKMatrix(ring, Bn.data[:, t].reshape(n, n, ring.m), Bn.prec) for t in range(Bn.ncols)]
    deg = len(basis) if residue_degree is None else residue_degree
    return CentralizerData(basis, rows, len(basis), deg)


def centralizer_field(gens: list, gram: OKMatrix | None = None) -> CentralizerData:
    """Commutant of the integral matrices `gens`, checked to be a commutative unramified algebra."""
    C = commutant(gens)
    if not _is_commutative(C):
        raise NotCommutative("commutant is not commutative; the module is not simple")
    res_dim = len(commutant([g.residue() for g in gens]))
    if res_dim != len(C):
        raise NotCommutative(f"commutant dimension {len(C)} differs from {res_dim} mod ell")
    data = _algebra(C)
    if gram is not None:
        attach_form(data, gram)
    return data


def fixed_subfield(data: CentralizerData) -> CentralizerData:
    """E_0 as an algebra in its own right (requires an attached form)."""
    if data.involution is None:
        raise ValueError("no form attached")
    return _algebra(data.fixed_basis)


def attach_form(data: CentralizerData, gram: OKMatrix) -> None:
    ring = data.ring
    data.gram = gram
    data.ginv = gram.inv()
    cols = []
    prec = ring.N
    for b in data.basis:
        bp = data.adjoint(b)
        if not data.contains(bp):
            raise InvolutionEscapesE("adjoint of an element of E lies outside E")
        cols.append(data.coords(bp))
        prec = min(prec, bp.prec)
    inv = OKMatrix(ring, np.stack(cols, axis=1), prec)
    if not (inv @ inv).is_identity():
        raise InvolutionEscapesE("adjoint is not an involution on E")
    data.involution = inv
    fixed = kernel(inv - OKMatrix.identity(ring, data.dim))
    data.fixed_dim = fixed.ncols
    data.fixed_basis = [data.from_coords(fixed.data[:, t]) for t in range(fixed.ncols)]
    if data.dim % data.fixed_dim or data.dim // data.fixed_dim not in (1, 2):
        raise InvolutionEscapesE(f"[E:E0] = {data.dim}/{data.fixed_dim} is not 1 or 2")


# ---------------------------------------------------------------------------
# arithmetic in E


def e_is_unit(x: OKMatrix) -> bool:
    return bool(x.residue().det().coeffs != (0,) * x.ring.m)


def e_sqrt(x: OKMatrix, data: CentralizerData, seed: int = 0) -> OKMatrix:
    """Square root of a unit x of E: Tonelli-Shanks in the residue field of E, then Newton.

    Of the two roots the one whose reduced entries are lexicographically smaller is returned.
    """
    ring = x.ring
    n = x.nrows
    qE = data.q
    xr = x.residue()
    one = OKMatrix.identity(ring.residue, n)
    half = (qE - 1) // 2
    if not xr.power(half).is_identity():
        raise NonResidue("element of E is not a square mod ell")
    rng = random.Random(seed)
    nonres = None
    for _ in range(64 * RETRY_BUDGET):
        c = np.array([[rng.randrange(ring.ell) for _ in range(ring.m)] for _ in range(data.dim)], dtype=np.int64)
        z = data.from_coords(c).residue()
        if not e_is_unit(z):
            continue
        if not z.power(half).is_identity():
            nonres = z
            break
    if nonres is None:
        raise NonResidue("no non-square found in E")
    r = tonelli_shanks(
        xr,
        one=one,
        mul=lambda a, b: a @ b,
        power=lambda a, k: a.power(k),
        eq=lambda a, b: a.equals(b),
        order=qE - 1,
        nonresidue=nonres,
    )
    y = data.from_coords(data.coords(r.lift(ring)))
    inv2 = CoeffArith(ring).inv(CoeffArith(ring).scalar(2))
    correct = 1
    while correct < ring.N:
        y = (y + x @ y.inv()).scale(inv2)
        correct *= 2
    y = y.with_prec(x.prec)
    neg = -y
    key = lambda M: tuple(int(t) for t in M.data.ravel())  # noqa: E731
    return y if key(y) <= key(neg) else neg


def e_teichmuller(y: OKMatrix, qE: int) -> OKMatrix:
    """Root of unity of order prime to ell congruent to the unit y mod ell."""
    w = y
    for _ in range(y.ring.N):
        w = w.power(qE)
    return w


# ---------------------------------------------------------------------------
# intertwiners


def hom_dim_mod_ell(tau: list, tau2: list) -> int:
    """dim over F_q of {X : tau2(g) X = X tau(g)} for the given generator images."""
    ring = tau[0].ring.residue
    ar = arith(ring)
    n = tau[0].nrows
    eye = OKMatrix.identity(ring, n).data
    blocks = []
    for A, B in zip(tau2, tau):
        A, B = A.residue(), B.residue()
        # vec(A X) - vec(X B) = (A kron I - I kron B^T) vec(X)
        K1 = ar.mul(A.data[:, None, :, None, :], eye[None, :, None, :, :]).reshape(n * n, n * n, ring.m)
        BT = B.data.transpose(1, 0, 2)
        K2 = ar.mul(eye[:, None, :, None, :], BT[None, :, None, :, :]).reshape(n * n, n * n, ring.m)
        blocks.append((K1 - K2) % ar.M)
    system = OKMatrix(ring, np.concatenate(blocks, axis=0))
    return kernel(system).ncols


def intertwiner(tau: list, tau2: list, Hgroup: FiniteGroup, seed: int = 0, retries: int = RETRY_BUDGET) -> OKMatrix:
    """Invertible A with tau2(h) A = A tau(h) for all h, by averaging over H.

    tau and tau2 list the images of all elements of Hgroup (an ell'-group).
    """
    ring = tau[0].ring
    n = tau[0].nrows
    ar = arith(ring)
    gens = Hgroup.generators
    hd = hom_dim_mod_ell([tau[g] for g in gens], [tau2[g] for g in gens])
    if hd == 0:
        raise NotIsomorphic("the representations are not isomorphic mod ell", hom_dim_mod_ell=0)
    order_inv = CoeffArith(ring).inv(CoeffArith(ring).scalar(Hgroup.order))
    left = np.stack([M.data for M in tau2])
    right = np.stack([tau[int(Hgroup.inv[h])].data for h in range(Hgroup.order)])
    rng = random.Random(seed)
    for attempt in range(retries):
        if attempt == 0:
            X = OKMatrix.identity(ring, n)
        else:
            X = OKMatrix(ring, np.array([[[rng.randrange(ring.ell ** 2) for _ in range(ring.m)] for _ in range(n)] for _ in range(n)], dtype=np.int64))
        prod = ar.matmul(ar.matmul(left, X.data[None]), right)
        A = OKMatrix(ring, ar.reduce(prod.sum(axis=0)), min(M.prec for M in tau + tau2)).scale(order_inv)
        if not e_is_unit(A):
            continue
        for h in range(Hgroup.order):
            if not (tau2[h] @ A).equals(A @ tau[h]):
                raise PrecisionExhausted("averaged intertwiner fails the recheck")
        return A
    raise NotIsomorphic(f"no invertible intertwiner in {retries} attempts (mod-ell Hom dimension {hd})", hom_dim_mod_ell=hd)


# ---------------------------------------------------------------------------
# H-simple submodules over O_K


def lift_submodule(images: list, Hgroup: FiniteGroup, basis_mod_ell: OKMatrix) -> OKMatrix:
    """Saturated O_K-basis of the H-submodule lifting an H-stable subspace mod ell.

    Averages a projection onto a lift of the subspace over H, then refines the
    resulting approximate idempotent by e -> 3e^2 - 2e^3.
    """
    ring = images[0].ring
    ar = arith(ring)
    n = images[0].nrows
    Bbar, rows = normalize_basis(basis_mod_ell)
    B = Bbar.lift(ring)
    sel = OKMatrix.zeros(ring, Bbar.ncols, n)
    for i, r in enumerate(rows):
        sel.data[i, r, 0] = 1
    Pi = B @ sel
    left = np.stack([M.data for M in images])
    right = np.stack([images[int(Hgroup.inv[h])].data for h in range(Hgroup.order)])
    avg = ar.reduce(ar.matmul(ar.matmul(left, Pi.data[None]), right).sum(axis=0))
    order_inv = CoeffArith(ring).inv(CoeffArith(ring).scalar(Hgroup.order))
    E = OKMatrix(ring, avg, min(M.prec for M in images)).scale(order_inv)
    for _ in range(ring.N.bit_length() + 1):
        E2 = E @ E
        E = E2.scale(3) - (E2 @ E).scale(2)
    if not (E @ E).equals(E):
        raise PrecisionExhausted("idempotent refinement did not converge")
    return kernel(OKMatrix.identity(ring, n) - E)


def h_simple_submodule(images: list, Hgroup: FiniteGroup, seed: int = 0) -> tuple:
    """A simple H-submodule W of an integral H-module: (saturated basis, images on W)."""
    gens = [images[g].residue() for g in Hgroup.generators] or [OKMatrix.identity(images[0].ring.residue, images[0].nrows)]
    S = find_simple_submodule_mod_ell(gens, seed)
    basis = lift_submodule(images, Hgroup, S)
    B, _rows, sub = subspace_action(images, basis)
    return B, sub


def restrict_to_subgroup(images: list, G: FiniteGroup, elems: list) -> tuple:
    """(subgroup, images indexed by subgroup elements)."""
    Hgroup, emap = subgroup(G, elems)
    return Hgroup, [images[g] for g in emap]
