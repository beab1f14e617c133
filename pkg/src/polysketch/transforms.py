"""Fast Walsh-Hadamard transform and the two matrix-free base sketches.

The building blocks are the subsampled randomized Hadamard transform (SRHT),
which maps R^d -> R^m as ``(1/sqrt(m)) * P H D``, and its tensor variant
(TensorSRHT) which maps a pair tensor product R^m x R^m -> R^m without ever
materializing the m^2-dimensional product vector.  Both are described by
small seeded arrays (sign diagonals and sampled coordinates) and applied via
the FWHT, so applying a sketch costs O(len log len) instead of a dense
matrix product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidDimensionError, InvalidParameterError
from .rng import rademacher, stream

__all__ = [
    "SrhtSketch",
    "TensorSrhtSketch",
    "fwht_in_place",
    "next_pow2",
    "ose_dims",
    "srht_apply",
    "srht_apply_matrix",
    "srht_dense",
    "srht_new",
    "tensor_srht_apply_pair",
    "tensor_srht_dense",
    "tensor_srht_new",
]


def next_pow2(x: float) -> int:
    """Smallest power of two >= max(x, 1)."""
    n = max(1, math.ceil(x))
    return 1 << (n - 1).bit_length()


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def fwht_in_place(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform of a vector, in place.

    Overwrites ``v`` with ``H v`` where ``H`` is the +-1 Hadamard matrix of
    order ``len(v)`` (so ``H @ H = len(v) * I``).  Runs in O(len log len).

    Args:
        v: 1-D float array whose length is a power of two.  Mutated.

    Returns:
        The same array object, transformed.
    """
    if v.ndim != 1:
        raise InvalidDimensionError("fwht_in_place expects a 1-D array")
    if not v.flags["C_CONTIGUOUS"]:
        raise InvalidDimensionError("fwht_in_place needs a contiguous array")
    n = v.shape[0]
    if not _is_pow2(n):
        raise InvalidDimensionError(f"length {n} is not a power of two")
    h = 1
    while h < n:
        blocks = v.reshape(-1, 2 * h)
        left = blocks[:, :h]
        right = blocks[:, h:]
        tmp = left - right
        left += right
        right[...] = tmp
        h *= 2
    return v


def _fwht_columns(a: np.ndarray) -> np.ndarray:
    """FWHT applied to every column of a 2-D array, in place."""
    n = a.shape[0]
    h = 1
    while h < n:
        blocks = a.reshape(-1, 2 * h, a.shape[1])
        left = blocks[:, :h, :]
        right = blocks[:, h:, :]
        tmp = left - right
        left += right
        right[...] = tmp
        h *= 2
    return a


@dataclass(frozen=True)
class SrhtSketch:
    """Seeded description of an SRHT map R^d -> R^m.

    Inputs shorter than the padded dimension are zero-padded, which leaves
    norms unchanged.  ``rows`` are sampled uniformly with replacement.
    """

    input_dim: int
    padded_dim: int
    output_dim: int
    signs: np.ndarray  # +-1, length padded_dim
    rows: np.ndarray  # int64 indices < padded_dim, length output_dim
    scale: float  # 1/sqrt(output_dim)
    seed: int

    def __post_init__(self):
        if not _is_pow2(self.padded_dim) or self.padded_dim < self.input_dim:
            raise InvalidDimensionError(
                "padded_dim must be a power of two >= input_dim"
            )
        if len(self.rows) == 0 or self.rows.min() < 0 or self.rows.max() >= self.padded_dim:
            raise InvalidDimensionError("row indices out of range")


def srht_new(d: int, m: int, seed: int) -> SrhtSketch:
    """Draw a fresh SRHT sketch, a deterministic function of ``seed``."""
    if d < 1 or m < 1:
        raise InvalidParameterError("dimensions must be positive")
    d2 = next_pow2(d)
    signs = rademacher(stream(seed, "srht.signs"), d2)
    rows = stream(seed, "srht.rows").integers(0, d2, size=m)
    return SrhtSketch(
        input_dim=d,
        padded_dim=d2,
        output_dim=m,
        signs=signs,
        rows=rows,
        scale=1.0 / math.sqrt(m),
        seed=seed,
    )


def srht_apply(sk: SrhtSketch, x: np.ndarray) -> np.ndarray:
    """Apply the sketch to one vector of length ``input_dim``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (sk.input_dim,):
        raise InvalidDimensionError(
            f"expected vector of length {sk.input_dim}, got shape {x.shape}"
        )
    buf = np.zeros(sk.padded_dim)
    buf[: sk.input_dim] = x
    buf *= sk.signs
    fwht_in_place(buf)
    return buf[sk.rows] * sk.scale


def srht_apply_matrix(sk: SrhtSketch, X: np.ndarray) -> np.ndarray:
    """Apply the sketch to every column of a (input_dim, n) matrix."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != sk.input_dim:
        raise InvalidDimensionError(
            f"expected ({sk.input_dim}, n) matrix, got shape {X.shape}"
        )
    buf = np.zeros((sk.padded_dim, X.shape[1]))
    buf[: sk.input_dim] = X
    buf *= sk.signs[:, None]
    _fwht_columns(buf)
    return buf[sk.rows] * sk.scale


def srht_dense(sk: SrhtSketch) -> np.ndarray:
    """Dense (output_dim, padded_dim) matrix equal to the sketch map.

    Test oracle: ``srht_apply(sk, x) == srht_dense(sk) @ pad(x)``.
    """
    H = scipy.linalg.hadamard(sk.padded_dim).astype(np.float64)
    return sk.scale * (H * sk.signs[None, :])[sk.rows]


@dataclass(frozen=True)
class TensorSrhtSketch:
    """Seeded description of a TensorSRHT map R^m x R^m -> R^{m_out}.

    Applies independent sign diagonals and Hadamard transforms to each
    factor, then samples coordinate pairs of the implicit product vector.
    """

    factor_dim: int  # power of two
    output_dim: int
    signs1: np.ndarray  # +-1, length factor_dim
    signs2: np.ndarray  # +-1, length factor_dim, independently seeded
    rows1: np.ndarray  # int64, first index of each sampled pair
    rows2: np.ndarray  # int64, second index of each sampled pair
    scale: float  # 1/sqrt(output_dim)
    seed: int

    def __post_init__(self):
        if not _is_pow2(self.factor_dim):
            raise InvalidDimensionError("factor_dim must be a power of two")
        for rows in (self.rows1, self.rows2):
            if len(rows) == 0 or rows.min() < 0 or rows.max() >= self.factor_dim:
                raise InvalidDimensionError("pair indices out of range")

    @property
    def row_pairs(self) -> np.ndarray:
        """(output_dim, 2) array of sampled coordinate pairs."""
        return np.stack([self.rows1, self.rows2], axis=1)


def tensor_srht_new(m_in: int, m_out: int, seed: int) -> TensorSrhtSketch:
    """Draw a fresh TensorSRHT sketch, a deterministic function of ``seed``."""
    if m_out < 1:
        raise InvalidParameterError("output dimension must be positive")
    if not _is_pow2(m_in):
        raise InvalidDimensionError("factor dimension must be a power of two")
    signs1 = rademacher(stream(seed, "tsrht.signs1"), m_in)
    signs2 = rademacher(stream(seed, "tsrht.signs2"), m_in)
    pair_rng = stream(seed, "tsrht.rows")
    flat = pair_rng.integers(0, m_in * m_in, size=m_out)
    return TensorSrhtSketch(
        factor_dim=m_in,
        output_dim=m_out,
        signs1=signs1,
        signs2=signs2,
        rows1=flat // m_in,
        rows2=flat % m_in,
        scale=1.0 / math.sqrt(m_out),
        seed=seed,
    )


def tensor_srht_apply_pair(
    sk: TensorSrhtSketch, u: np.ndarray, v: np.ndarray
) -> np.ndarray:
    """Apply the sketch to the tensor product ``u x v`` without forming it.

    Equals the dense map applied to ``kron(u, v)``, but costs
    O(m log m + m_out) per pair.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != (sk.factor_dim,) or v.shape != (sk.factor_dim,):
        raise InvalidDimensionError(
            f"expected two vectors of length {sk.factor_dim}"
        )
    a = fwht_in_place(u * sk.signs1)
    b = fwht_in_place(v * sk.signs2)
    return a[sk.rows1] * b[sk.rows2] * sk.scale


def tensor_srht_dense(sk: TensorSrhtSketch) -> np.ndarray:
    """Dense (output_dim, factor_dim^2) matrix of the sketch map.

    Row k is ``kron(row i_k of H D1, row j_k of H D2) * scale``, matching
    the row-major pairing used by ``tensor_srht_apply_pair``.
    """
    H = scipy.linalg.hadamard(sk.factor_dim).astype(np.float64)
    HD1 = H * sk.signs1[None, :]
    HD2 = H * sk.signs2[None, :]
    out = np.empty((sk.output_dim, sk.factor_dim**2))
    for k in range(sk.output_dim):
        out[k] = np.kron(HD1[sk.rows1[k]], HD2[sk.rows2[k]])
    return out * sk.scale


def ose_dims(
    n: int,
    d: int,
    eps: float,
    delta: float,
    kind: str,
    constant: float = 1.0,
) -> int:
    """Sketch rows needed for an (eps, delta) subspace embedding.

    SRHT needs ``c * n * ln(nd/delta) / eps^2`` rows; the TensorSRHT for
    degree-2 tensors needs ``c * n * ln^3(nd/(eps*delta)) / eps^2``.  The
    result is rounded up to a power of two so it can serve as the factor
    dimension of a TensorSRHT with no further padding.  ``constant`` absorbs
    the unstated constants of those bounds; the acceptance suite calibrates
    a single library-wide value.
    """
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise InvalidParameterError("eps and delta must lie in (0, 1)")
    if n < 1 or d < 1:
        raise InvalidParameterError("n and d must be positive")
    if constant <= 0.0:
        raise InvalidParameterError("constant must be positive")
    if kind == "srht":
        log_term = max(math.log(n * d / delta), 1.0)
    elif kind == "tensor_srht":
        log_term = max(math.log(n * d / (eps * delta)), 1.0) ** 3
    else:
        raise InvalidParameterError(f"unknown sketch kind {kind!r}")
    return next_pow2(constant * n * log_term / eps**2)
