"""Finite groups given by multiplication tables.

Includes detection of the decomposition G = H x| <c> with H the normal
subgroup of elements of order prime to ell, conjugacy classes, character
tables by the Dixon-Schneider method, quotients and subgroups, and a few
families used as test inputs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    AuxPrimeSearchFailed,
    BadAction,
    NoIdentity,
    NoInverse,
    NotAssociative,
    NotInertiaForm,
    UnknownFamily,
)
from .padic import is_prime, prime_factors

ASSOC_EXHAUSTIVE_LIMIT = 512
ORDER_SOFT_CAP = 2000


class FiniteGroup:
    """A group on {0, ..., n-1} with multiplication table `table[a, b] = a*b`."""

    def __init__(self, table, name: str | None = None, validate: bool = True):
        t = np.asarray(table, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("multiplication table must be square")
        self.table = t
        self.order = t.shape[0]
        self.name = name
        n = self.order
        if ((t < 0) | (t >= n)).any():
            raise ValueError("table entries out of range")
        ident = [e for e in range(n) if (t[e] == np.arange(n)).all() and (t[:, e] == np.arange(n)).all()]
        if not ident:
            raise NoIdentity("no two-sided identity")
        self.identity = ident[0]
        inv = np.full(n, -1, dtype=np.int64)
        for a in range(n):
            hits = np.nonzero(t[a] == self.identity)[0]
            if len(hits) != 1 or t[hits[0], a] != self.identity:
                raise NoInverse(f"element {a} has no two-sided inverse")
            inv[a] = hits[0]
        self.inv = inv
        if validate:
            self._check_latin()
            self._check_associative()

    def _check_latin(self):
        n = self.order
        full = np.arange(n)
        for a in range(n):
            if not (np.sort(self.table[a]) == full).all() or not (np.sort(self.table[:, a]) == full).all():
                raise NoInverse("table is not a Latin square")

    def _check_associative(self):
        t = self.table
        n = self.order
        if n <= ASSOC_EXHAUSTIVE_LIMIT:
            for a in range(n):
                # (a b) c == a (b c) for all b, c
                if not (t[t[a]] == t[a][t]).all():
                    raise NotAssociative(f"associativity fails with a = {a}")
        else:
            rng = np.random.default_rng(0)
            for _ in range(20000):
                a, b, c = rng.integers(0, n, 3)
                if t[t[a, b], c] != t[a, t[b, c]]:
                    raise NotAssociative("associativity spot-check failed")

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def power(self, g: int, k: int) -> int:
        if k < 0:
            g, k = int(self.inv[g]), -k
        result = self.identity
        base = g
        while k:
            if k & 1:
                result = int(self.table[result, base])
            base = int(self.table[base, base])
            k >>= 1
        return result

    def conj(self, g: int, x: int) -> int:
        """g x g^-1."""
        return int(self.table[self.table[g, x], self.inv[g]])

    @cached_property
    def element_orders(self) -> np.ndarray:
        n = self.order
        orders = np.zeros(n, dtype=np.int64)
        for g in range(n):
            k, x = 1, g
            while x != self.identity:
                x = int(self.table[x, g])
                k += 1
            orders[g] = k
        return orders

    @cached_property
    def exponent(self) -> int:
        e = 1
        for o in set(int(x) for x in self.element_orders):
            e = e * o // math.gcd(e, o)
        return e

    def closure(self, gens) -> list:
        """Sorted elements of the subgroup generated by `gens`."""
        elems = {self.identity}
        frontier = [self.identity]
        gens = [int(g) for g in gens]
        while frontier:
            new = []
            for x in frontier:
                for g in gens:
                    y = int(self.table[x, g])
                    if y not in elems:
                        elems.add(y)
                        new.append(y)
            frontier = new
        return sorted(elems)

    @cached_property
    def generators(self) -> list:
        """A small generating set: greedily add the least element not yet generated."""
        gens: list[int] = []
        span = {self.identity}
        for g in sorted(range(self.order), key=lambda x: (-int(self.element_orders[x]), x)):
            if g not in span:
                gens.append(g)
                span = set(self.closure(gens))
                if len(span) == self.order:
                    break
        return gens

    def is_normal(self, elems) -> bool:
        s = set(int(x) for x in elems)
        return all(self.conj(g, x) in s for g in self.generators for x in s)

    def __repr__(self):
        return f"FiniteGroup(order={self.order}{', ' + self.name if self.name else ''})"


def group_from_table(table, name: str | None = None) -> FiniteGroup:
    return FiniteGroup(table, name)


def subgroup(G: FiniteGroup, elems) -> tuple[FiniteGroup, list]:
    """The subgroup on `elems` as its own group, with the list mapping new index -> old index."""
    elems = sorted(int(x) for x in elems)
    pos = {x: i for i, x in enumerate(elems)}
    try:
        t = [[pos[int(G.table[a, b])] for b in elems] for a in elems]
    except KeyError as exc:
        raise ValueError("elements are not closed under multiplication") from exc
    return FiniteGroup(t, validate=False), elems


def quotient(G: FiniteGroup, normal) -> tuple[FiniteGroup, np.ndarray]:
    """G/N with cosets ordered by least element; returns (group, projection array)."""
    N = sorted(int(x) for x in normal)
    proj = np.full(G.order, -1, dtype=np.int64)
    reps = []
    for g in range(G.order):
        if proj[g] >= 0:
            continue
        idx = len(reps)
        reps.append(g)
        for x in N:
            proj[int(G.table[g, x])] = idx
    t = [[int(proj[G.table[a, b]]) for b in reps] for a in reps]
    return FiniteGroup(t, validate=False), proj


# ---------------------------------------------------------------------------
# inertia structure


@dataclass
class InertiaStructure:
    group: FiniteGroup
    H: list
    c: int
    ell: int
    k: int  # [G:H] = ell^k

    @property
    def L_order(self) -> int:
        return self.ell ** self.k

    @cached_property
    def H_set(self) -> frozenset:
        return frozenset(self.H)

    @cached_property
    def _decomp(self) -> dict:
        G = self.group
        out = {}
        cj = G.identity
        for j in range(self.L_order):
            for h in self.H:
                out[int(G.table[h, cj])] = (h, j)
            cj = int(G.table[cj, self.c])
        return out

    def decompose(self, g: int) -> tuple[int, int]:
        """(h, j) with g = h * c^j, 0 <= j < #L."""
        return self._decomp[int(g)]

    def c_power(self, j: int) -> int:
        return self.group.power(self.c, j)


def inertia_split(G: FiniteGroup, ell: int) -> InertiaStructure:
    orders = G.element_orders
    H = [g for g in range(G.order) if math.gcd(int(orders[g]), ell) == 1]
    Hs = set(H)
    for a in H:
        for b in H:
            if int(G.table[a, b]) not in Hs:
                raise NotInertiaForm("elements of order prime to ell do not form a subgroup")
    if not G.is_normal(H):
        raise NotInertiaForm("prime-to-ell subgroup is not normal")
    if G.order % len(H):
        raise NotInertiaForm("wrong index")
    index = G.order // len(H)
    k = 0
    while index % ell == 0:
        index //= ell
        k += 1
    if index != 1:
        raise NotInertiaForm("index of H is not a power of ell")
    target = ell ** k
    cands = [g for g in range(G.order) if int(orders[g]) == target]
    if not cands:
        raise NotInertiaForm("no element of order [G:H]")
    c = cands[0] if k else G.identity
    return InertiaStructure(G, H, c, ell, k)


def structure_from(G: FiniteGroup, H, c: int, ell: int) -> InertiaStructure:
    """Validate an explicitly given decomposition."""
    H = sorted(int(x) for x in H)
    if math.gcd(len(H), ell) != 1 or not G.is_normal(H):
        raise NotInertiaForm("H must be a normal ell'-subgroup")
    o = int(G.element_orders[c])
    k = 0
    while o % ell == 0:
        o //= ell
        k += 1
    if o != 1 or len(H) * ell ** k != G.order:
        raise NotInertiaForm("c must have ell-power order [G:H]")
    st = InertiaStructure(G, H, int(c), ell, k)
    if len(st._decomp) != G.order:
        raise NotInertiaForm("H and c do not generate G")
    return st


# ---------------------------------------------------------------------------
# conjugacy classes and characters


def conjugacy_classes(G: FiniteGroup) -> tuple[list, np.ndarray]:
    seen = np.full(G.order, -1, dtype=np.int64)
    classes = []
    allg = np.arange(G.order)
    for x in range(G.order):
        if seen[x] >= 0:
            continue
        orbit = [int(y) for y in np.unique(G.table[G.table[allg, x], G.inv[allg]])]
        for y in orbit:
            seen[y] = 0
        classes.append(orbit)
    classes.sort(key=lambda c: (len(c), c[0]))
    class_of = np.zeros(G.order, dtype=np.int64)
    for i, c in enumerate(classes):
        class_of[c] = i
    return classes, class_of


@dataclass
class CharacterTable:
    """Irreducible characters over C with values in Z[zeta_e].

    `mult[chi, cls, j]` is the multiplicity of the eigenvalue zeta_e^j of
    rho_chi(g) for g in class `cls`, so chi(g) = sum_j mult[...,j] zeta_e^j.
    When every character is linear, `mult` is None and `linear[chi, cls] = j`
    records chi(g) = zeta_e^j instead, which keeps large abelian tables small.
    """

    group: FiniteGroup
    classes: list
    class_of: np.ndarray
    exponent: int
    mult: np.ndarray
    degrees: list
    aux_prime: int = 0
    power_map: dict = field(default_factory=dict)
    linear: np.ndarray | None = None

    @property
    def num(self) -> int:
        return len(self.degrees)

    def value(self, chi: int, g: int) -> np.ndarray:
        return self.class_value(chi, int(self.class_of[g]))

    def class_value(self, chi: int, cls: int) -> np.ndarray:
        if self.mult is not None:
            return self.mult[chi, cls]
        out = np.zeros(self.exponent, dtype=np.int64)
        out[self.linear[chi, cls]] = 1
        return out

    def orbit_sum(self, chis: list) -> np.ndarray:
        """Sum of the eigenvalue multiplicities of several characters, shape (classes, e)."""
        if self.mult is not None:
            return self.mult[chis].sum(axis=0)
        k = len(self.classes)
        out = np.zeros((k, self.exponent), dtype=np.int64)
        for chi in chis:
            np.add.at(out, (np.arange(k), self.linear[chi]), 1)
        return out

    def class_power(self, cls: int, t: int) -> int:
        key = (cls, t % self.exponent)
        if key not in self.power_map:
            g = self.classes[cls][0]
            self.power_map[key] = int(self.class_of[self.group.power(g, t % self.exponent)])
        return self.power_map[key]

    def galois_image(self, chi: int, t: int) -> int:
        """Index of the character g -> chi(g^t), t prime to the exponent."""
        if math.gcd(t, self.exponent) != 1:
            raise ValueError("Galois twist needs t prime to the exponent")
        k = len(self.classes)
        rows = self.mult if self.mult is not None else self.linear
        if self.mult is not None:
            target = np.stack([self.mult[chi, self.class_power(c, t)] for c in range(k)])
        else:
            target = self.linear[chi] * t % self.exponent
        if not hasattr(self, "_row_index"):
            self._row_index = {np.ascontiguousarray(rows[psi]).tobytes(): psi for psi in range(self.num)}
        psi = self._row_index.get(np.ascontiguousarray(target, dtype=rows.dtype).tobytes())
        if psi is None:
            raise ArithmeticError("Galois image of a character not found in the table")
        return psi


def _primitive_root(p: int) -> int:
    fs = prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in fs):
            return g
    raise ArithmeticError("no primitive root")


def _aux_primes(e: int, lower: int, count: int, limit: int = 1 << 25) -> list:
    out = []
    k = max(1, lower // e)
    while len(out) < count:
        p = k * e + 1
        if p > limit:
            raise AuxPrimeSearchFailed("no auxiliary prime below the search limit")
        if p > lower and is_prime(p):
            out.append(p)
        k += 1
    return out


def _nullspace_mod(A: np.ndarray, p: int) -> np.ndarray:
    """Basis (as columns) of the right kernel of A over F_p."""
    A = A.copy() % p
    r, c = A.shape
    piv_cols = []
    row = 0
    for j in range(c):
        if row >= r:
            break
        nz = np.nonzero(A[row:, j])[0]
        if len(nz) == 0:
            continue
        i = row + nz[0]
        if i != row:
            A[[row, i]] = A[[i, row]]
        A[row] = (A[row] * pow(int(A[row, j]), -1, p)) % p
        col = A[:, j].copy()
        col[row] = 0
        A = (A - np.outer(col, A[row])) % p
        piv_cols.append(j)
        row += 1
    free = [j for j in range(c) if j not in piv_cols]
    N = np.zeros((c, len(free)), dtype=np.int64)
    for t, f in enumerate(free):
        N[f, t] = 1
        for i, pc in enumerate(piv_cols):
            N[pc, t] = (-A[i, f]) % p
    return N


def _charpoly_mod(X: np.ndarray, p: int) -> list:
    """det(xI - X) over F_p by Berkowitz, constant term first."""
    n = X.shape[0]
    v = [1, (-int(X[n - 1, n - 1])) % p]
    for r in range(n - 2, -1, -1):
        R = X[r, r + 1 :]
        S = X[r + 1 :, r]
        M = X[r + 1 :, r + 1 :]
        k = n - r - 1
        col = [1, (-int(X[r, r])) % p]
        x = S.copy()
        for _ in range(k):
            col.append(int(-(R @ x)) % p)
            x = (M @ x) % p
        v = [sum(col[i - j] * v[j] for j in range(min(i, k) + 1)) % p for i in range(k + 2)]
    return list(reversed(v))


def _roots_mod(f: list, p: int) -> list:
    xs = np.arange(p, dtype=np.int64)
    acc = np.zeros(p, dtype=np.int64)
    for c in reversed(f):
        acc = (acc * xs + c) % p
    return [int(x) for x in np.nonzero(acc == 0)[0]]


def character_table_dixon(G: FiniteGroup, bound: int = ORDER_SOFT_CAP) -> CharacterTable:
    if G.order > bound:
        raise AuxPrimeSearchFailed(f"group order {G.order} exceeds the bound {bound}")
    cached = getattr(G, "_character_table", None)
    if cached is not None:
        return cached
    n = G.order
    classes, class_of = conjugacy_classes(G)
    k = len(classes)
    e = G.exponent
    if k == n:
        table = CharacterTable(G, classes, class_of, e, None, [1] * n,
                               linear=_linear_characters(G, classes))
        verify_orthogonality(table)
        G._character_table = table
        return table
    p = _aux_primes(e, int(2 * math.isqrt(n)) + 2, 1)[0]
    z = pow(_primitive_root(p), (p - 1) // e, p)
    zpow = np.array([pow(z, i, p) for i in range(e)], dtype=np.int64)
    sizes = np.array([len(c) for c in classes], dtype=np.int64)
    inv_class = np.array([class_of[G.inv[c[0]]] for c in classes], dtype=np.int64)
    id_class = int(class_of[G.identity])

    # a[r, s, t] = #{(x, y) in C_r x C_s : x y = g_t}
    a = np.zeros((k, k, k), dtype=np.int64)
    allg = np.arange(n)
    for t, cl in enumerate(classes):
        gt = cl[0]
        y = G.table[G.inv[allg], gt]
        np.add.at(a[:, :, t], (class_of[allg], class_of[y]), 1)

    spaces = [np.eye(k, dtype=np.int64)]  # bases as columns
    for r in range(k):
        if all(B.shape[1] == 1 for B in spaces):
            break
        if r == id_class:
            continue
        Mr = a[r] % p
        new = []
        for B in spaces:
            d = B.shape[1]
            if d == 1:
                new.append(B)
                continue
            piv = _pivot_rows(B, p)
            Bn = _normalize_cols(B, piv, p)
            X = (Mr @ Bn % p)[piv]
            for lam in _roots_mod(_charpoly_mod(X, p), p):
                N = _nullspace_mod((X - lam * np.eye(d, dtype=np.int64)) % p, p)
                if N.shape[1]:
                    new.append(Bn @ N % p)
        spaces = new
    if len(spaces) != k or any(B.shape[1] != 1 for B in spaces):
        raise ArithmeticError("class matrices did not separate the characters")

    degrees = []
    vals = np.zeros((k, k), dtype=np.int64)
    size_inv = np.array([pow(int(s), -1, p) for s in sizes], dtype=np.int64)
    for idx, B in enumerate(spaces):
        w = B[:, 0] % p
        w = w * pow(int(w[id_class]), -1, p) % p
        S = int((w * w[inv_class] % p * size_inv % p).sum() % p)
        d2 = n * pow(S, -1, p) % p
        deg = next((d for d in range(1, math.isqrt(n) + 1) if n % d == 0 and d * d % p == d2), None)
        if deg is None:
            raise ArithmeticError("character degree not recovered")
        degrees.append(deg)
        vals[idx] = deg * w % p * size_inv % p
    # m_j(g) = (1/o) sum_i chi(g^i) z^(-j i) for j a multiple of e/o
    mult = np.zeros((k, k, e), dtype=np.int64)
    for t in range(k):
        g = classes[t][0]
        o = int(G.element_orders[g])
        step = e // o
        pcls = [int(class_of[G.power(g, i)]) for i in range(o)]
        ui = np.outer(np.arange(o), np.arange(o)) * step
        Z = zpow[(-ui) % e]
        counts = (vals[:, pcls] @ Z.T) % p * pow(o, -1, p) % p
        if (counts > np.array(degrees)[:, None]).any():
            raise ArithmeticError("eigenvalue multiplicity out of range")
        mult[:, t, ::step] = counts
    order = sorted(range(k), key=lambda i: (degrees[i], [list(-mult[i, t]) for t in range(k)]))
    mult = mult[order]
    degrees = [degrees[i] for i in order]
    table = CharacterTable(G, classes, class_of, e, mult, degrees, p)
    verify_orthogonality(table)
    G._character_table = table
    return table


def _linear_characters(G: FiniteGroup, classes: list) -> np.ndarray:
    """Exponent table of Hom(G, mu_e) for abelian G, rows sorted, built one cyclic extension at a time.

    If every character of S is known and g^m is the first power of g in S, each
    character extends to <S, g> in m ways: chi(g) = zeta_e^b with m*b = chi(g^m).
    """
    e = G.exponent
    inS = np.zeros(G.order, dtype=bool)
    inS[G.identity] = True
    S = np.array([G.identity])
    vals = np.zeros((1, G.order), dtype=np.int64)
    while len(S) < G.order:
        g = int(np.nonzero(~inS)[0][0])
        powers = [G.identity]
        x = g
        while not inS[x]:
            powers.append(x)
            x = int(G.table[x, g])
        m = len(powers)
        ax = vals[:, x]
        if (ax % m).any():
            raise ArithmeticError("character value does not extend")
        b = (np.repeat(ax // m, m) + np.tile(np.arange(m) * (e // m), len(ax))) % e
        old = np.repeat(vals, m, axis=0)
        new = np.zeros_like(old)
        for i, gi in enumerate(powers):
            new[:, G.table[S, gi]] = (old[:, S] + i * b[:, None]) % e
        vals = new
        S = np.concatenate([G.table[S, gi] for gi in powers])
        inS[S] = True
    lin = vals[:, [c[0] for c in classes]]
    return lin[np.lexsort(lin.T[::-1])]


def _pivot_rows(B: np.ndarray, p: int) -> list:
    """Rows on which the column basis B restricts to an invertible matrix."""
    A = B.T.copy() % p
    d, n = A.shape
    piv = []
    row = 0
    for j in range(n):
        if row >= d:
            break
        nz = np.nonzero(A[row:, j])[0]
        if len(nz) == 0:
            continue
        i = row + nz[0]
        if i != row:
            A[[row, i]] = A[[i, row]]
        A[row] = (A[row] * pow(int(A[row, j]), -1, p)) % p
        col = A[:, j].copy()
        col[row] = 0
        A = (A - np.outer(col, A[row])) % p
        piv.append(j)
        row += 1
    return piv


def _normalize_cols(B: np.ndarray, piv: list, p: int) -> np.ndarray:
    """B * (B[piv])^-1 so that the basis is the identity on the pivot rows."""
    sub = B[piv] % p
    d = sub.shape[0]
    aug = np.concatenate([sub, np.eye(d, dtype=np.int64)], axis=1)
    for j in range(d):
        i = j + int(np.nonzero(aug[j:, j])[0][0])
        if i != j:
            aug[[j, i]] = aug[[i, j]]
        aug[j] = aug[j] * pow(int(aug[j, j]), -1, p) % p
        col = aug[:, j].copy()
        col[j] = 0
        aug = (aug - np.outer(col, aug[j])) % p
    return B @ aug[:, d:] % p


def _reduced_power_height(e: int) -> int:
    """Largest absolute power-basis coefficient of x^j mod Phi_e, 0 <= j < e."""
    from .poly import cyclotomic_int

    phi = list(cyclotomic_int(e))
    d = len(phi) - 1
    cur = [0] * d
    if d:
        cur[0] = 1
    h = 1
    for _ in range(e):
        top = cur[-1] if d else 0
        cur = [0] + cur[:-1]
        cur = [cur[i] - top * phi[i] for i in range(d)]
        h = max(h, max((abs(x) for x in cur), default=0))
    return h


def verify_orthogonality(table: CharacterTable) -> None:
    """Exact first and second orthogonality over Z[zeta_e].

    Inner products are evaluated at every primitive e-th root of unity
    modulo several primes p = 1 mod e; Z[zeta_e]/p is the product of those
    evaluations, and the primes' product exceeds twice the coefficient
    bound, so vanishing modulo all of them is vanishing in Z[zeta_e].
    """
    G = table.group
    e = table.exponent
    k = len(table.classes)
    n = G.order
    if table.mult is None:
        _verify_linear(table)
        return
    sizes = np.array([len(c) for c in table.classes], dtype=np.int64)
    maxdeg = max(table.degrees)
    bound = 2 * (e * n * maxdeg * maxdeg * _reduced_power_height(e) + n) + 1
    primes = []
    prod = 1
    for p in _aux_primes(e, 1 << 20, 64):
        primes.append(p)
        prod *= p
        if prod > bound:
            break
    units = [u for u in range(e) if math.gcd(u, e) == 1]
    js = np.arange(e)
    for p in primes:
        z = pow(_primitive_root(p), (p - 1) // e, p)
        zp = np.array([pow(z, j, p) for j in range(e)], dtype=np.int64)
        for u in units:
            w = zp[(js * u) % e]
            wc = zp[(-js * u) % e]
            V = (table.mult @ w) % p  # chi x class
            Vc = (table.mult @ wc) % p
            inner = (V * sizes[None, :] % p) @ Vc.T % p
            if not (inner == (n * np.eye(k, dtype=np.int64)) % p).all():
                raise ArithmeticError("first orthogonality relation fails")
            col = V.T @ Vc % p
            cent = np.array([n // s for s in sizes], dtype=np.int64)
            if not (col == np.diag(cent) % p).all():
                raise ArithmeticError("second orthogonality relation fails")
    for d in table.degrees:
        if n % d:
            raise ArithmeticError("character degree does not divide the group order")


def _verify_linear(table: CharacterTable) -> None:
    """#G distinct homomorphisms G -> Z/e are the complete, orthogonal character table of abelian G."""
    G = table.group
    lin = table.linear
    if lin.shape != (G.order, G.order) or len(table.classes) != G.order:
        raise ArithmeticError("linear table needs an abelian group")
    vals = np.zeros_like(lin)
    vals[:, [c[0] for c in table.classes]] = lin
    allg = np.arange(G.order)
    for s in G.generators:
        if ((vals[:, G.table[allg, s]] - vals - vals[:, [s]]) % table.exponent).any():
            raise ArithmeticError("linear character is not a homomorphism")
    if len({row.tobytes() for row in lin}) != G.order:
        raise ArithmeticError("linear characters are not distinct")


# ---------------------------------------------------------------------------
# families


def cyclic(n: int) -> FiniteGroup:
    a = np.arange(n)
    return FiniteGroup((a[:, None] + a[None, :]) % n, name=f"C{n}", validate=False)


def dihedral(n: int) -> FiniteGroup:
    """Order 2n; element r^i s^f has index i + n f."""
    t = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for f1 in range(2):
        for i1 in range(n):
            for f2 in range(2):
                for i2 in range(n):
                    i = (i1 + (i2 if f1 == 0 else -i2)) % n
                    t[i1 + n * f1, i2 + n * f2] = i + n * ((f1 + f2) % 2)
    return FiniteGroup(t, name=f"D{n}")


def quaternion8() -> FiniteGroup:
    """Elements in the order 1, -1, i, -i, j, -j, k, -k."""
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    base = {("i", "i"): "-1", ("j", "j"): "-1", ("k", "k"): "-1", ("i", "j"): "k", ("j", "k"): "i",
            ("k", "i"): "j", ("j", "i"): "-k", ("k", "j"): "-i", ("i", "k"): "-j"}

    def split(x):
        return (-1, x[1:]) if x.startswith("-") else (1, x)

    def mul(x, y):
        sx, ux = split(x)
        sy, uy = split(y)
        s = sx * sy
        if ux == "1":
            r = uy
        elif uy == "1":
            r = ux
        else:
            r = base[(ux, uy)]
        sr, ur = split(r)
        s *= sr
        return ur if s == 1 else ("-" + ur if ur != "1" else "-1")

    idx = {x: i for i, x in enumerate(names)}
    t = [[idx[mul(x, y)] for y in names] for x in names]
    return FiniteGroup(t, name="Q8")


def semidirect(n: int, m: int, s: int) -> FiniteGroup:
    """C_n x| C_m with c h c^-1 = h^s; element (a, j) = h^a c^j has index a + n j."""
    if pow(s, m, n) != 1 % n or math.gcd(s, n) != 1:
        raise BadAction(f"{s} does not have order dividing {m} mod {n}")
    N = n * m
    a = np.arange(N) % n
    j = np.arange(N) // n
    spow = np.array([pow(s, jj, n) for jj in range(m)], dtype=np.int64)
    A = (a[:, None] + spow[j][:, None] * a[None, :]) % n
    J = (j[:, None] + j[None, :]) % m
    return FiniteGroup(A + n * J, name=f"C{n}:C{m}", validate=False)


def elementary_semidirect(p: int, action: list, m: int) -> FiniteGroup:
    """(Z/p)^r x| C_m with c acting by the integer matrix `action` (order dividing m).

    Element (v, j) has index (v read in base p, first coordinate lowest) + p^r j.
    """
    A = np.array(action, dtype=np.int64) % p
    r = A.shape[0]
    powers = [np.eye(r, dtype=np.int64)]
    for _ in range(m):
        powers.append(powers[-1] @ A % p)
    if not (powers[m] == np.eye(r, dtype=np.int64)).all():
        raise BadAction("action matrix order does not divide m")
    size = p ** r
    vecs = np.array([[(x // p ** i) % p for i in range(r)] for x in range(size)], dtype=np.int64)
    weights = p ** np.arange(r)
    N = size * m
    t = np.zeros((N, N), dtype=np.int64)
    for j1 in range(m):
        img = (vecs @ powers[j1].T) % p  # c^j1 acting on every vector
        for j2 in range(m):
            sums = (vecs[:, None, :] + img[None, :, :]) % p
            idx = sums @ weights
            t[j1 * size : (j1 + 1) * size, j2 * size : (j2 + 1) * size] = idx + size * ((j1 + j2) % m)
    return FiniteGroup(t, name=f"C{p}^{r}:C{m}", validate=False)


def direct_product(G1: FiniteGroup, G2: FiniteGroup) -> FiniteGroup:
    """Element (a, b) has index a + |G1| b."""
    n1 = G1.order
    a = np.arange(n1 * G2.order) % n1
    b = np.arange(n1 * G2.order) // n1
    t = G1.table[a[:, None], a[None, :]] + n1 * G2.table[b[:, None], b[None, :]]
    return FiniteGroup(t, validate=False)


_FAMILY_RE = re.compile(r"^\s*([a-z0-9_^:]+)\s*(?:\(([^)]*)\))?\s*$")

PHI5_OVER_F3 = [[0, 0, 0, -1], [1, 0, 0, -1], [0, 1, 0, -1], [0, 0, 1, -1]]


def build_family(spec, ell: int | None = None):
    """Build a named family; returns (group, structure) when ell is given, else the group.

    Accepted specs: "cyclic(n)", "dihedral(n)", "quaternion8",
    "semidirect(n, m, s)", "c3^4:c5" and "direct(n, m)".
    """
    if isinstance(spec, dict):
        name = spec.get("name") or spec.get("family")
        args = spec.get("args", [])
    else:
        mt = _FAMILY_RE.match(str(spec))
        if not mt:
            raise UnknownFamily(f"cannot parse family {spec!r}")
        name = mt.group(1)
        args = [int(x) for x in mt.group(2).split(",")] if mt.group(2) else []
    name = name.lower()
    if name == "cyclic":
        G = cyclic(*args)
    elif name == "dihedral":
        G = dihedral(*args)
    elif name in ("quaternion8", "q8"):
        G = quaternion8()
    elif name == "semidirect":
        G = semidirect(*args)
    elif name == "direct":
        G = semidirect(args[0], args[1], 1)
    elif name in ("c3^4:c5", "c3_4_c5"):
        G = elementary_semidirect(3, PHI5_OVER_F3, 5)
    else:
        raise UnknownFamily(f"unknown family {name!r}")
    if ell is None:
        return G
    return G, inertia_split(G, ell)
