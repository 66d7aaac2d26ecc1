"""Vectorized modular products on numpy integer arrays.

Moduli below 2**62 use int64 storage. Products that would overflow are
split into bit chunks of the second factor and recombined by Horner's rule,
so every intermediate stays below 2**62. Larger moduli fall back to
object arrays holding Python ints.
"""

import numpy as np

_BITS = 62


def dtype_for(modulus: int):
    return np.int64 if modulus < (1 << _BITS) else object


def asmod(a, modulus: int) -> np.ndarray:
    """Copy of `a` reduced into [0, modulus) with the storage dtype for `modulus`."""
    arr = np.asarray(a)
    if dtype_for(modulus) is object:
        return _pyreduce(arr.astype(object), modulus)
    if arr.dtype == object:
        return _pyreduce(arr, modulus).astype(np.int64)
    return np.mod(arr.astype(np.int64), modulus)


def _pyreduce(arr: np.ndarray, modulus: int) -> np.ndarray:
    f = np.frompyfunc(lambda x: int(x) % modulus, 1, 1)
    return f(arr).astype(object) if arr.size else arr.astype(object)


def mulmod(a: np.ndarray, b: np.ndarray, modulus: int) -> np.ndarray:
    """Elementwise a*b mod modulus for reduced inputs (broadcasting)."""
    if a.dtype == object or b.dtype == object:
        return (a * b) % modulus
    bm = (modulus - 1).bit_length()
    if 2 * bm <= _BITS:
        return (a * b) % modulus
    d = _BITS - bm
    if d < 1:
        return (a.astype(object) * b.astype(object) % modulus).astype(np.int64)
    nchunks = -(-bm // d)
    mask = (1 << d) - 1
    acc = None
    for k in reversed(range(nchunks)):
        part = (a * ((b >> (d * k)) & mask)) % modulus
        acc = part if acc is None else ((acc << d) % modulus + part) % modulus
    return acc


def matmulmod(A: np.ndarray, B: np.ndarray, modulus: int) -> np.ndarray:
    """Batched matrix product A @ B mod modulus for reduced inputs."""
    if A.dtype == object or B.dtype == object:
        return np.matmul(A.astype(object), B.astype(object)) % modulus
    inner = A.shape[-1]
    if inner == 0:
        return np.zeros(A.shape[:-1] + B.shape[-1:], dtype=np.int64)
    bm = (modulus - 1).bit_length()
    lg = (inner - 1).bit_length()
    if 2 * bm + lg <= _BITS:
        return np.matmul(A, B) % modulus
    d = _BITS - bm - lg
    if d < 1:
        return np.matmul(A.astype(object), B.astype(object)) % modulus
    nchunks = -(-bm // d)
    mask = (1 << d) - 1
    acc = None
    for k in reversed(range(nchunks)):
        part = np.matmul(A, (B >> (d * k)) & mask) % modulus
        acc = part if acc is None else ((acc << d) % modulus + part) % modulus
    return acc
