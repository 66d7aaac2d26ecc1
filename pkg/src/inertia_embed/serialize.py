"""JSON formats: problem inputs and self-contained certificate files.

O_K elements are coefficient lists in the power basis of the defining
polynomial, constant term first, each coefficient an integer in
[0, ell^N). Matrices are lists of rows of such lists.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import EmbeddingError
from .groups import InertiaStructure, build_family, group_from_table, inertia_split, structure_from
from .linalg import KMatrix, OKMatrix
from .modrep import Representation, rep_from_input
from .padic import RingSpec, ring_create
from .verify import VerificationReport, verify_arrays

CERT_FORMAT = "inertia-embed-certificate"


class InputError(EmbeddingError, ValueError):
    """Malformed problem or certificate file."""


# ---------------------------------------------------------------------------
# matrices


def matrix_to_json(M: OKMatrix) -> list:
    return [[[int(c) for c in M.data[i, j]] for j in range(M.ncols)] for i in range(M.nrows)]


def matrix_from_json(ring: RingSpec, rows, prec: int | None = None) -> OKMatrix:
    arr = np.asarray(rows, dtype=object)
    if arr.ndim != 3 or arr.shape[-1] != ring.m:
        raise InputError(f"matrix entries must be coefficient lists of length {ring.m}")
    return OKMatrix(ring, arr, prec)


def _entry(ring: RingSpec, x) -> tuple:
    """(coefficients, shift, known digits) from an int, a list of ints or {coeffs, shift, prec}."""
    prec = ring.N
    if isinstance(x, bool):
        raise InputError("boolean matrix entry")
    if isinstance(x, int):
        coeffs, shift = [x], 0
    elif isinstance(x, list):
        coeffs, shift = x, 0
    elif isinstance(x, dict):
        coeffs, shift = x.get("coeffs", [0]), int(x.get("shift", 0))
        prec = min(int(x.get("prec", ring.N)), ring.N)
        if isinstance(coeffs, int):
            coeffs = [coeffs]
    else:
        raise InputError(f"cannot read matrix entry {x!r}")
    if len(coeffs) > ring.m or not all(isinstance(c, int) and not isinstance(c, bool) for c in coeffs):
        raise InputError(f"bad coefficient list {coeffs!r}")
    return list(coeffs) + [0] * (ring.m - len(coeffs)), shift, prec


def kmatrix_from_input(ring: RingSpec, rows) -> KMatrix:
    """A K-matrix from rows of entries, each carrying its own power of ell and known digits."""
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError("matrix must be a non-empty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise InputError("ragged matrix")
    parsed = [[_entry(ring, x) for x in r] for r in rows]
    s = min(sh for r in parsed for _, sh, _ in r)
    prec = min(min(p + sh - s for r in parsed for _, sh, p in r), ring.N)
    if prec < 1:
        raise InputError("matrix entries carry no known digits")
    M = ring.modulus
    data = [[[c * ring.ell ** (sh - s) % M for c in co] for co, sh, _ in r] for r in parsed]
    return KMatrix(OKMatrix.from_ints(ring, data, prec), s)


# ---------------------------------------------------------------------------
# problem input


@dataclass
class Problem:
    ring: RingSpec
    structure: InertiaStructure
    rep: Representation
    form: KMatrix | None
    name: str = "input"


def load_problem(path_or_dict, precision: int | None = None) -> Problem:
    """Parse a ProblemInput (path or already-loaded dict)."""
    from . import demos

    data = _read_json(path_or_dict)
    if not isinstance(data, dict):
        raise InputError("problem input must be a JSON object")
    try:
        ell = int(data["ell"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("missing or bad 'ell'") from exc
    m = int(data.get("unramified_degree", 1))
    N = int(precision or data.get("precision", 16))
    rep_spec = data.get("rep")
    if not isinstance(rep_spec, dict):
        raise InputError("missing 'rep'")
    if "builder" in rep_spec:
        sc = demos.build(rep_spec["builder"], ell=ell, precision=N, seed=int(data.get("seed", 0)))
        return Problem(sc.ring, sc.structure, sc.rep, sc.form, sc.name)
    ring = ring_create(ell, m, N)
    G = _group_from_input(data.get("group"))
    if "H" in data:
        if "c" not in data:
            raise InputError("'H' given without 'c'")
        structure = structure_from(G, [int(h) for h in data["H"]], int(data["c"]), ell)
    else:
        structure = inertia_split(G, ell)
    gens = rep_spec.get("generator_images")
    if not isinstance(gens, dict) or not gens:
        raise InputError("rep needs 'generator_images' (element index -> matrix) or 'builder'")
    try:
        images = {int(k): kmatrix_from_input(ring, v) for k, v in gens.items()}
    except ValueError as exc:
        raise InputError(f"bad generator index: {exc}") from exc
    dim = rep_spec.get("dim")
    for M in images.values():
        if M.shape[0] != M.shape[1] or (dim is not None and M.shape[0] != int(dim)):
            raise InputError("generator image has the wrong shape")
    rep = rep_from_input(G, images, ring)
    form = kmatrix_from_input(ring, data["form"]) if data.get("form") is not None else None
    return Problem(ring, structure, rep, form, str(data.get("name", "input")))


def _group_from_input(g):
    if not isinstance(g, dict):
        raise InputError("missing 'group'")
    if "family" in g:
        return build_family(g["family"])
    if "table" in g:
        table = np.asarray(g["table"], dtype=np.int64)
        if "order" in g and int(g["order"]) != table.shape[0]:
            raise InputError("group order does not match the table")
        return group_from_table(table)
    raise InputError("group needs 'family' or 'table'")


def problem_to_json(ring: RingSpec, structure: InertiaStructure, rep: Representation, form: KMatrix | None,
                    name: str = "input") -> dict:
    """A ProblemInput dict with an explicit table and generator images (round-trips through load_problem)."""
    G = structure.group

    def kjson(Mk: KMatrix) -> list:
        I = Mk.integral
        return [[{"coeffs": [int(c) for c in I.data[i, j]], "shift": Mk.shift, "prec": int(I.prec)}
                 for j in range(I.ncols)] for i in range(I.nrows)]

    out = {
        "name": name,
        "ell": ring.ell,
        "unramified_degree": ring.m,
        "precision": ring.N,
        "group": {"order": G.order, "table": G.table.tolist()},
        "H": sorted(int(h) for h in structure.H),
        "c": int(structure.c),
        "rep": {"dim": rep.dim, "generator_images": {str(g): kjson(rep.images[g]) for g in G.generators}},
    }
    if form is not None:
        out["form"] = kjson(form)
    return out


# ---------------------------------------------------------------------------
# certificates


def certificate_to_json(cert) -> dict:
    ring = cert.ring
    report = cert.report or cert.verify()
    return {
        "format": CERT_FORMAT,
        "version": __version__,
        "seed": int(cert.seed),
        "ring": {"ell": ring.ell, "m": ring.m, "N": ring.N, "poly": [int(c) for c in ring.poly]},
        "precision": int(cert.prec),
        "dimension": int(cert.dim),
        "group": {"order": int(cert.group.order), "table": cert.group.table.tolist()},
        "images": [matrix_to_json(M) for M in cert.images],
        "gram": matrix_to_json(cert.gram),
        "ledger": [_plain(r) for r in cert.ledger],
        "notes": list(cert.notes),
        "report": report.to_dict(),
    }


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_certificate(cert, path: str) -> None:
    write_atomic(path, dumps(certificate_to_json(cert)))


def _read_json(path_or_dict):
    if isinstance(path_or_dict, dict):
        return path_or_dict
    try:
        with open(path_or_dict) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read JSON from {path_or_dict}: {exc}") from exc


def verify_certificate_file(path_or_dict) -> VerificationReport:
    """Check a certificate file using only its own contents."""
    data = _read_json(path_or_dict)
    try:
        if data.get("format") != CERT_FORMAT:
            raise InputError("not a certificate file")
        r = data["ring"]
        ell, prec = int(r["ell"]), int(data["precision"])
        poly = [int(c) for c in r["poly"]]
        m = len(poly) - 1
        table = np.asarray(data["group"]["table"], dtype=np.int64)
        images = np.asarray(data["images"], dtype=object)
        gram = np.asarray(data["gram"], dtype=object)
        dim = int(data["dimension"])
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise InputError("group table is not square")
        if table.size and (table.min() < 0 or table.max() >= table.shape[0]):
            raise InputError("group table entries out of range")
        if images.ndim != 4 or images.shape[-1] != m or gram.ndim != 3 or gram.shape[-1] != m:
            raise InputError("image or gram arrays have the wrong shape")
        if prec < 1 or prec > int(r["N"]):
            raise InputError("bad precision")
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"malformed certificate: {exc}") from exc
    M = ell ** prec
    if any(not isinstance(x, int) or isinstance(x, bool) for x in images.ravel()) or \
            any(not isinstance(x, int) or isinstance(x, bool) for x in gram.ravel()):
        raise InputError("certificate entries must be integers")
    dtype = object if M >= (1 << 50) else np.int64
    return verify_arrays(ell, poly, prec, table, (images % M).astype(dtype), (gram % M).astype(dtype), dim)
