"""Limited-randomness sketching of p-fold tensor powers.

One SRHT ``T`` and one TensorSRHT ``S`` are drawn once and reused at every
node of the implicit squaring tree: ``w_0 = T x``, ``w_l = S(w_{l-1} x
w_{l-1})``, and for degrees that are not powers of two the levels matching
the set bits of ``p`` are combined with further applications of ``S``.  The
whole sketcher is a deterministic function of exactly two seed streams, one
for each base sketch.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _fast
from .data import DataMatrix
from .errors import InvalidDimensionError, InvalidParameterError, OracleGuardError
from .rng import derive_seed
from .transforms import (
    SrhtSketch,
    TensorSrhtSketch,
    ose_dims,
    srht_apply,
    srht_new,
    tensor_srht_apply_pair,
    tensor_srht_new,
)

__all__ = [
    "SketchedMatrix",
    "TensorSketcher",
    "dense_operator",
    "plan_dims",
    "sketch_matrix",
    "sketch_vector",
]

DENSE_OPERATOR_GUARD = 2**16


def _set_bits(p: int) -> list[int]:
    return [i for i in range(p.bit_length()) if (p >> i) & 1]


@dataclass(frozen=True)
class TensorSketcher:
    """Degree-p tensor-power sketcher built from two base sketches."""

    srht: SrhtSketch  # T: R^d -> R^m
    pair_sketch: TensorSrhtSketch  # S: R^m x R^m -> R^m
    degree: int
    seed: int
    set_bits: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.degree < 1:
            raise InvalidParameterError("degree must be a positive integer")
        m = self.srht.output_dim
        if self.pair_sketch.factor_dim != m or self.pair_sketch.output_dim != m:
            raise InvalidDimensionError(
                "pair sketch must map R^m x R^m -> R^m with m = srht output dim"
            )
        object.__setattr__(self, "set_bits", tuple(_set_bits(self.degree)))

    @property
    def input_dim(self) -> int:
        return self.srht.input_dim

    @property
    def output_dim(self) -> int:
        return self.srht.output_dim

    @property
    def num_levels(self) -> int:
        """log2 of the largest power of two <= degree."""
        return self.degree.bit_length() - 1

    @property
    def base_level(self) -> int:
        return self.set_bits[0]

    @property
    def combine_levels(self) -> tuple[int, ...]:
        return self.set_bits[1:]


def tensor_sketcher(d: int, m: int, p: int, seed: int) -> TensorSketcher:
    """Draw a degree-p sketcher with output dimension ``m`` (power of two)."""
    if m < 1 or (m & (m - 1)) != 0:
        raise InvalidDimensionError(
            "sketch dimension must be a power of two (it is reused as the "
            "TensorSRHT factor dimension)"
        )
    t = srht_new(d, m, derive_seed(seed, "tensor-sketcher.T"))
    s = tensor_srht_new(m, m, derive_seed(seed, "tensor-sketcher.S"))
    return TensorSketcher(srht=t, pair_sketch=s, degree=p, seed=seed)


@dataclass(frozen=True)
class SketchedMatrix:
    """Result of sketching every column of a data matrix."""

    values: np.ndarray  # m x n
    degree: int
    seed: int
    n: int
    d: int
    m: int


def sketch_vector(ts: TensorSketcher, x: np.ndarray) -> np.ndarray:
    """Sketch the p-fold tensor power of one vector.

    Reference implementation: keeps every squaring level (O(m log p)
    memory) and never materializes a pair tensor.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (ts.input_dim,):
        raise InvalidDimensionError(
            f"expected vector of length {ts.input_dim}, got shape {x.shape}"
        )
    levels = [srht_apply(ts.srht, x)]
    for _ in range(ts.num_levels):
        levels.append(tensor_srht_apply_pair(ts.pair_sketch, levels[-1], levels[-1]))
    z = levels[ts.base_level]
    for i in ts.combine_levels:
        z = tensor_srht_apply_pair(ts.pair_sketch, z, levels[i])
    return z


def sketch_matrix(ts: TensorSketcher, X: DataMatrix) -> SketchedMatrix:
    """Sketch every column of ``X`` (compiled path).

    Column j equals ``sketch_vector(ts, X[:, j])`` bit for bit; columns are
    independent, so the result does not depend on evaluation order.
    """
    if X.d != ts.input_dim:
        raise InvalidDimensionError(
            f"sketcher expects {ts.input_dim} rows, data has {X.d}"
        )
    out = np.empty((ts.output_dim, X.n))
    _fast.sketch_columns(
        X.values,
        ts.srht.padded_dim,
        ts.srht.signs,
        ts.srht.rows,
        ts.srht.scale,
        ts.pair_sketch.signs1,
        ts.pair_sketch.signs2,
        ts.pair_sketch.rows1,
        ts.pair_sketch.rows2,
        ts.pair_sketch.scale,
        ts.num_levels,
        ts.base_level,
        np.asarray(ts.combine_levels, dtype=np.int64),
        out,
        1,
    )
    return SketchedMatrix(
        values=out, degree=ts.degree, seed=ts.seed, n=X.n, d=X.d, m=ts.output_dim
    )


def dense_operator(ts: TensorSketcher) -> np.ndarray:
    """Materialize the m x d^p linear map the sketcher applies to x^{x p}.

    Only valid for power-of-two degrees (where the sketch is a fixed linear
    operator on the tensor-power space) and tiny dimensions; this is a test
    oracle.  Columns are obtained by evaluating the squaring tree on product
    basis vectors, which by the Kronecker mixed-product identity equals the
    dense operator product.
    """
    p = ts.degree
    if p & (p - 1) != 0:
        raise InvalidParameterError("dense operator requires a power-of-two degree")
    d = ts.input_dim
    if d**p > DENSE_OPERATOR_GUARD:
        raise OracleGuardError(
            f"d^p = {d**p} exceeds the dense-operator guard {DENSE_OPERATOR_GUARD}"
        )
    eye = np.eye(d)
    t_cols = [srht_apply(ts.srht, eye[:, i]) for i in range(d)]
    cols = []
    for multi in itertools.product(range(d), repeat=p):
        vs = [t_cols[i] for i in multi]
        while len(vs) > 1:
            vs = [
                tensor_srht_apply_pair(ts.pair_sketch, vs[2 * k], vs[2 * k + 1])
                for k in range(len(vs) // 2)
            ]
        cols.append(vs[0])
    return np.column_stack(cols)


def plan_dims(
    n: int, d: int, p: int, eps: float, delta: float, constant: float = 1.0
) -> tuple[int, float]:
    """Sketch dimension for a degree-p Gram sandwich at accuracy ``eps``.

    The per-sketch accuracy is split as ``eps_hat = eps / (3 p)`` (the
    composed sketch pays a (1 +- eps_hat)^{3p} factor), and the dimension is
    the larger of the two base-sketch requirements at that accuracy.  The
    resulting sketch of all n columns costs O(nd log d + n m log m log p).
    """
    if p < 1:
        raise InvalidParameterError("degree must be a positive integer")
    eps_hat = eps / (3.0 * p)
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must lie in (0, 1)")
    m = max(
        ose_dims(n, d, eps_hat, delta, "srht", constant),
        ose_dims(n, d, eps_hat, delta, "tensor_srht", constant),
    )
    return m, eps_hat


def sketcher_for_plan(
    n: int,
    d: int,
    p: int,
    eps: float,
    delta: float,
    seed: int,
    constant: float = 1.0,
    m_override: int | None = None,
) -> TensorSketcher:
    """Convenience: a sketcher sized by ``plan_dims`` or an explicit m."""
    if m_override is not None:
        m = m_override
    else:
        m, _ = plan_dims(n, d, p, eps, delta, constant)
    return tensor_sketcher(d, m, p, seed)


def expected_sketch_flops(n: int, d: int, p: int, m: int) -> float:
    """Rough flop count of sketch_matrix, for benchmark sanity checks."""
    d2 = 1 << max(d - 1, 0).bit_length()
    t_cost = d2 * max(math.log2(d2), 1.0)
    levels = max(p.bit_length() - 1, 0) + max(bin(p).count("1") - 1, 0)
    s_cost = levels * (2 * m * max(math.log2(m), 1.0) + m)
    return n * (t_cost + s_cost)
