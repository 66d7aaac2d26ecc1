"""Seeded property corpus behind the `selftest` subcommand.

Each check returns (passed, detail). With `inject_fault` one check is fed
deliberately corrupted data, so a healthy corpus must report a failure.
"""

from __future__ import annotations

import json
import random
import time

from .errors import ForceRequired, NotInertiaForm, NotIsomorphic
from .linalg import OKMatrix
from .padic import fq_is_square, ok_inv, ok_sqrt, ring_create, teichmuller


def _ring(ell=5, m=1, N=16):
    return ring_create(ell, m, N)


def check_arithmetic(seed: int, fault: bool):
    rng = random.Random(seed)
    bad = 0
    for ell, m in ((5, 1), (5, 2), (7, 1), (3, 2)):
        R = _ring(ell, m)
        for _ in range(200):
            c = [rng.randrange(R.modulus) for _ in range(m)]
            c[0] = c[0] - c[0] % ell + rng.randrange(1, ell)
            x = R.elem(tuple(c))
            if not (x * ok_inv(x) - R.one()).is_zero():
                bad += 1
            sq = x * x
            r = ok_sqrt(sq)
            if not (r * r - sq).is_zero():
                bad += 1
            t = teichmuller(x.residue())
            if not (t ** (R.q - 1) - R.one()).is_zero() or (t - x).residue().coeffs != (0,) * m:
                bad += 1
            if not fq_is_square(sq.residue()):
                bad += 1
    return bad == 0, f"{bad} failures"


def check_unit_inverse(seed: int, fault: bool):
    rng = random.Random(seed)
    R = _ring(5, 2)
    bad = 0
    for _ in range(100):
        n = rng.randint(1, 6)
        while True:
            M = OKMatrix.from_ints(R, [[(rng.randrange(R.modulus), rng.randrange(R.modulus)) for _ in range(n)]
                                       for _ in range(n)])
            if M.det().is_unit():
                break
        if not (M @ M.inv()).is_identity():
            bad += 1
    return bad == 0, f"{bad} failures"


def check_hyperbolic_double(seed: int, fault: bool):
    from .symplectic import hyperbolic_double

    rng = random.Random(seed)
    R = _ring()
    bad = 0
    for _ in range(20):
        n = rng.randint(1, 4)
        while True:
            M = OKMatrix.from_ints(R, [[rng.randrange(R.modulus) for _ in range(n)] for _ in range(n)])
            if M.det().is_unit():
                break
        imgs, J = hyperbolic_double([M])
        D = imgs[0]
        if not (D.T @ J @ D).equals(J):
            bad += 1
    return bad == 0, f"{bad} failures"


def check_cyclic_base(seed: int, fault: bool):
    from .symplectic import cyclic_base_embedding

    bad = []
    for ell in (3, 5, 7, 11):
        R = ring_create(ell, 1, 12)
        C, negI, J = cyclic_base_embedding(ell, R, seed)
        if fault and ell == 5:
            J = J + OKMatrix.identity(R, J.nrows).mul_ell(11)
        ok = ((C.T @ J @ C).equals(J) and (J.T + J).is_zero() and J.det().is_unit()
              and C.power(ell).is_identity())
        if not ok:
            bad.append(ell)
    return not bad, f"failing ell: {bad}" if bad else "ell in 3, 5, 7, 11"


def check_induction_sections(seed: int, fault: bool):
    from .symplectic import cyclic_embedding

    R = _ring()
    cert = cyclic_embedding(5, 2, R, seed)
    ok = cert.report.passed and cert.dim == 20
    return ok, f"dimension {cert.dim}, report {'pass' if cert.report.passed else cert.report.failed}"


def check_demo_corpus(seed: int, fault: bool):
    from . import demos, serialize
    from .symplectic import embed_inertia_group

    out = []
    ok = True
    for name in ("c3xc5", "q8", "c11sd5", "cyclic25"):
        sc = demos.build(name, seed=seed)
        cert = embed_inertia_group(sc.structure, sc.rep, sc.form, seed=seed)
        text = serialize.dumps(serialize.certificate_to_json(cert))
        again = embed_inertia_group(sc.structure, sc.rep, sc.form, seed=seed)
        same = text == serialize.dumps(serialize.certificate_to_json(again))
        rep = serialize.verify_certificate_file(json.loads(text))
        good = rep.passed and cert.dim == sc.expected_dim and same
        ok &= good
        out.append(f"{name}:{'ok' if good else 'FAIL'}")
    return ok, ", ".join(out)


def check_tamper(seed: int, fault: bool):
    from . import demos, serialize
    from .symplectic import embed_inertia_group

    sc = demos.build("c3xc5", seed=seed)
    cert = embed_inertia_group(sc.structure, sc.rep, sc.form, seed=seed)
    data = serialize.certificate_to_json(cert)
    rng = random.Random(seed)
    g = rng.randrange(1, len(data["images"]))
    i = rng.randrange(cert.dim)
    j = rng.randrange(cert.dim)
    data["images"][g][i][j][0] = (data["images"][g][i][j][0] + 5 ** (cert.prec - 1)) % 5 ** cert.ring.N
    rep = serialize.verify_certificate_file(data)
    return not rep.passed, f"failed checks after tampering: {rep.failed}"


def check_negative_controls(seed: int, fault: bool):
    from . import demos
    from .groups import dihedral, inertia_split
    from .symplectic import embed_inertia_group, extend_to_G

    results = {}
    try:
        inertia_split(dihedral(5), 5)
        results["NotInertiaForm"] = False
    except NotInertiaForm:
        results["NotInertiaForm"] = True
    st, tau, F = demos.twist_counterexample()
    try:
        extend_to_G(tau, F, st, seed)
        results["NotIsomorphic"] = False
    except NotIsomorphic:
        results["NotIsomorphic"] = True
    sc = demos.build("ell3-budget-probe", seed=seed)
    try:
        embed_inertia_group(sc.structure, sc.rep, sc.form, seed=seed)
        results["ForceRequired"] = False
    except ForceRequired:
        results["ForceRequired"] = True
    return all(results.values()), ", ".join(f"{k}:{'ok' if v else 'FAIL'}" for k, v in results.items())


CHECKS = [
    ("O_K inverse, square root, Teichmuller lift", check_arithmetic),
    ("unit-determinant inversion", check_unit_inverse),
    ("hyperbolic double preserves the pairing", check_hyperbolic_double),
    ("cyclic base form invariant and perfect", check_cyclic_base),
    ("induced cyclic embedding of C25 x {+-1}", check_induction_sections),
    ("demo corpus round trip and determinism", check_demo_corpus),
    ("tampered certificate rejected", check_tamper),
    ("negative controls", check_negative_controls),
]


def run(seed: int = 0, inject_fault: bool = False, out=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        t = time.time()
        try:
            passed, detail = fn(seed, inject_fault)
        except Exception as exc:  # report, do not abort the corpus
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        ok &= bool(passed)
        out(f"[{'PASS' if passed else 'FAIL'}] {name} ({time.time() - t:.1f}s): {detail}")
    return ok

