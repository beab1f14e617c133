"""Exact kernel oracles, Taylor truncation plans, and sketched approximators.

A kernel with positive Taylor coefficients ``K = sum_l C_l (X^{x l})^T
X^{x l}`` is approximated by truncating the series where the analytic tail
bound drops below ``eps/2`` and sketching each kept term with the degree-l
tensor sketcher.  Slowly decaying coefficient families additionally sample
high-degree terms proportionally to their coefficients instead of sketching
all of them, which keeps the estimator's Gram unbiased for the dropped tail.

Block dimension formulas are theorem-shaped and conservative; every
constructor takes a ``block_m`` override so experiments can pin practical
dimensions directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .data import DataMatrix
from .errors import (
    DomainError,
    InvalidParameterError,
    UndefinedValueError,
)
from .rng import derive_seed, stream
from .tensor_sketch import sketch_matrix, tensor_sketcher
from .transforms import ose_dims, srht_apply_matrix, srht_new

__all__ = [
    "KernelBlock",
    "SketchedKernel",
    "TaylorPlan",
    "draw_tail_indices",
    "exact_tail_gram",
    "expected_sampled_degree",
    "gaussian_kernel_exact",
    "gaussian_sketch",
    "gaussian_block_dims",
    "gaussian_tail_bound",
    "gaussian_truncation_degree",
    "make_sampled_plan",
    "ntk_coefficient",
    "ntk_kernel_exact",
    "ntk_kernel_tail_bound",
    "ntk_series_tail_bound",
    "ntk_series_value",
    "ntk_sketch",
    "pconv_sketch",
    "pconv_tail_bound",
    "pconv_truncation_degree",
    "poly_kernel_exact",
    "sampled_pconv_sketch",
    "sampled_tail_gram",
    "term_block_dim",
]

_TWO_PI = 2.0 * math.pi
_NTK_CLAMP_TOL = 1e-9
_MAX_TRUNCATION = 100_000


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------


def poly_kernel_exact(X: DataMatrix, p: int) -> np.ndarray:
    """Degree-p polynomial kernel: elementwise p-th power of X^T X."""
    if p < 0:
        raise InvalidParameterError("degree must be non-negative")
    gram = X.values.T @ X.values
    return gram**p


def gaussian_kernel_exact(X: DataMatrix) -> np.ndarray:
    """Gaussian kernel exp(-||x_i - x_j||^2 / 2); unit diagonal by construction."""
    gram = X.values.T @ X.values
    sq = np.diag(gram)
    dist_sq = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
    return np.exp(-0.5 * dist_sq)


def ntk_kernel_exact(X: DataMatrix) -> np.ndarray:
    """Two-layer ReLU tangent kernel (1/2 - arccos(s)/(2 pi)) * s entrywise.

    Requires columns inside the unit ball; inner products are clamped to
    [-1, 1] with tolerance 1e-9 before arccos.
    """
    gram = X.values.T @ X.values
    over = np.abs(gram).max(initial=0.0)
    if over > 1.0 + _NTK_CLAMP_TOL:
        raise DomainError(
            f"inner product {over} exceeds 1 beyond the clamp tolerance"
        )
    s = np.clip(gram, -1.0, 1.0)
    return (0.5 - np.arccos(s) / _TWO_PI) * s


# ---------------------------------------------------------------------------
# Series truncation
# ---------------------------------------------------------------------------


def _gaussian_log_terms(r: float, n: int, count: int) -> np.ndarray:
    ls = np.arange(count, dtype=np.float64)
    if r == 0.0:
        out = np.full(count, -np.inf)
        out[0] = math.log(n)
        return out
    return math.log(n) + 2.0 * ls * math.log(r) - gammaln(ls + 1.0)


def gaussian_tail_bound(r: float, n: int, q: int) -> float:
    """Upper bound on sum_{l > q} n r^{2l} / l!, summed numerically.

    Terms are accumulated until they fall below 1e-300 or the geometric
    ratio test closes the remainder.
    """
    if r < 0.0:
        raise InvalidParameterError("radius must be non-negative")
    if r == 0.0:
        return 0.0
    r2 = r * r
    total = 0.0
    term = math.exp(math.log(n) + 2.0 * (q + 1) * math.log(r) - gammaln(q + 2.0))
    l = q + 1
    while term >= 1e-300:
        ratio = r2 / (l + 1)
        if ratio < 0.5:
            # remaining tail is dominated by a geometric series
            return total + term / (1.0 - ratio)
        total += term
        term *= ratio
        l += 1
        if l - q > _MAX_TRUNCATION:  # pragma: no cover - factorial always wins
            raise InvalidParameterError("gaussian tail failed to converge")
    return total


def gaussian_truncation_degree(r: float, n: int, eps: float) -> int:
    """Smallest q with the numerically evaluated factorial tail <= eps/2."""
    if r < 0.0:
        raise InvalidParameterError("radius must be non-negative")
    if n < 1:
        raise InvalidParameterError("n must be positive")
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must lie in (0, 1)")
    if r == 0.0:
        return 0
    target = eps / 2.0
    q = 0
    while gaussian_tail_bound(r, n, q) > target:
        q += 1
        if q > _MAX_TRUNCATION:  # pragma: no cover
            raise InvalidParameterError("gaussian truncation failed to converge")
    return q


def _series_tail_bound(
    coeff,
    n: int,
    r: float,
    start: int,
    exponent_of=lambda l: 2.0 * l,
    direct_terms: int = 4096,
) -> float:
    """Upper bound on sum_{l >= start} n * C_l * r^{exponent(l)}.

    Sums a window of terms directly; the remainder is bounded by Cauchy
    condensation over doubling blocks (a strict overestimate for
    non-increasing terms), closed off with a geometric ratio test.  Growing
    terms are a divergence and raise.
    """

    def f(x):
        return float(coeff(x)) * r ** exponent_of(x)

    total = 0.0
    end = start + direct_terms
    for l in range(start, end):
        t = n * f(l)
        if t < 0.0 or not math.isfinite(t):
            raise InvalidParameterError("series terms must be finite and positive")
        total += t
        if t < 1e-300:
            return total
    # condensation: sum over [M 2^j, M 2^{j+1}) is at most M 2^j f(M 2^j)
    block_start = end
    prev_block = math.inf
    for _ in range(5000):
        block = block_start * f(block_start)
        if not math.isfinite(block) or block > prev_block * (1.0 + 1e-12):
            raise InvalidParameterError(
                "series terms are growing; radius and coefficients are incompatible"
            )
        total += n * block
        if block < 1e-300:
            return total
        ratio = block / prev_block if math.isfinite(prev_block) else math.nan
        if ratio == ratio and ratio < 1.0 - 1e-6:
            return total + n * block * ratio / (1.0 - ratio)
        prev_block = block
        block_start *= 2
    raise InvalidParameterError(
        "tail bound failed to close; coefficients decay too slowly"
    )


def pconv_tail_bound(coeff, n: int, r: float, q: int) -> float:
    """Upper bound on the dropped tail sum_{l > q} n * C_l * r^{2l}."""
    return _series_tail_bound(coeff, n, r, q + 1, exponent_of=lambda l: 2.0 * l)


def pconv_truncation_degree(coeff, n: int, r: float, eps: float) -> int:
    """Smallest q with the evaluated polynomial-decay tail <= eps/2."""
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must lie in (0, 1)")
    if r < 0.0:
        raise InvalidParameterError("radius must be non-negative")
    target = eps / 2.0
    q = 0
    while _series_tail_bound(coeff, n, r, q + 1) > target:
        q += 1
        if q > _MAX_TRUNCATION:
            raise InvalidParameterError(
                "tail never reaches eps/2; radius and coefficients are incompatible"
            )
    return q


# ---------------------------------------------------------------------------
# Taylor plans and sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaylorPlan:
    """Exact-vs-sampled decomposition of a truncated kernel series.

    Series terms are indexed 0..truncation_index; ``degrees[i]`` is the
    tensor-power degree of term i (the identity map except for kernels whose
    series skips degrees).  Terms with index <= exact_upto are sketched
    exactly; the rest are covered by ``m_samples`` i.i.d. draws with
    probabilities proportional to their coefficients.
    """

    degrees: np.ndarray
    coefficients: np.ndarray
    truncation_index: int
    exact_upto: int
    sampled_probs: np.ndarray
    tail_coefficient_mass: float
    m_samples: int
    gaussian_prefactor: bool
    tail_bound: float

    def __post_init__(self):
        q = self.truncation_index
        s = self.exact_upto
        if not (0 <= s <= q):
            raise InvalidParameterError("need 0 <= exact_upto <= truncation_index")
        if len(self.degrees) != q + 1 or len(self.coefficients) != q + 1:
            raise InvalidParameterError("need one degree/coefficient per term")
        if np.any(self.coefficients <= 0.0):
            raise InvalidParameterError("coefficients must be positive")
        n_sampled = q - s
        if len(self.sampled_probs) != n_sampled:
            raise InvalidParameterError("one probability per sampled term required")
        if n_sampled > 0 and abs(self.sampled_probs.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("sampled probabilities must sum to 1")

    @property
    def sampled_indices(self) -> np.ndarray:
        return np.arange(self.exact_upto + 1, self.truncation_index + 1)

    @property
    def has_sampling(self) -> bool:
        return self.truncation_index > self.exact_upto and self.m_samples > 0


def make_sampled_plan(
    coefficients: np.ndarray,
    exact_upto: int,
    m_samples: int,
    degrees: np.ndarray | None = None,
    gaussian_prefactor: bool = False,
    tail_bound: float = 0.0,
) -> TaylorPlan:
    """Build a plan from explicit per-term coefficients (term q = last entry)."""
    coefficients = np.asarray(coefficients, dtype=np.float64)
    q = len(coefficients) - 1
    if degrees is None:
        degrees = np.arange(q + 1, dtype=np.int64)
    degrees = np.asarray(degrees, dtype=np.int64)
    tail = coefficients[exact_upto + 1 :]
    mass = float(tail.sum())
    probs = tail / mass if len(tail) else np.empty(0)
    return TaylorPlan(
        degrees=degrees,
        coefficients=coefficients,
        truncation_index=q,
        exact_upto=exact_upto,
        sampled_probs=probs,
        tail_coefficient_mass=mass,
        m_samples=m_samples,
        gaussian_prefactor=gaussian_prefactor,
        tail_bound=tail_bound,
    )


def draw_tail_indices(plan: TaylorPlan, seed: int) -> np.ndarray:
    """i.i.d. series indices sampled proportionally to their coefficients."""
    if not plan.has_sampling:
        return np.empty(0, dtype=np.int64)
    rng = stream(seed, "taylor.tail-degrees")
    picks = rng.choice(len(plan.sampled_probs), size=plan.m_samples, p=plan.sampled_probs)
    return plan.sampled_indices[picks]


def exact_tail_gram(X: DataMatrix, plan: TaylorPlan) -> np.ndarray:
    """R = sum over sampled-range terms of C_l (X^T X)^{o deg_l}, exactly."""
    gram = X.values.T @ X.values
    R = np.zeros_like(gram)
    for idx in plan.sampled_indices:
        R += plan.coefficients[idx] * gram ** int(plan.degrees[idx])
    return R


def sampled_tail_gram(X: DataMatrix, plan: TaylorPlan, indices: np.ndarray) -> np.ndarray:
    """The sampling estimator of the tail Gram, with exact per-term Grams.

    Each draw contributes C_l / (p_l m) times its term, which makes the
    estimator unbiased for ``exact_tail_gram``.
    """
    if not plan.has_sampling:
        raise UndefinedValueError("plan has no sampled range")
    gram = X.values.T @ X.values
    out = np.zeros_like(gram)
    offset = plan.exact_upto + 1
    for idx in indices:
        prob = plan.sampled_probs[idx - offset]
        weight = plan.coefficients[idx] / (prob * plan.m_samples)
        out += weight * gram ** int(plan.degrees[idx])
    return out


def expected_sampled_degree(plan: TaylorPlan) -> float:
    """Mean tensor-power degree of one coefficient-proportional draw."""
    if plan.truncation_index == plan.exact_upto:
        raise UndefinedValueError("plan has no sampled range")
    degrees = plan.degrees[plan.sampled_indices]
    return float(np.dot(plan.sampled_probs, degrees))


# ---------------------------------------------------------------------------
# Sketched kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelBlock:
    """One stacked component of a sketched kernel: scale * sketch of X^{x degree}."""

    degree: int
    scale: float
    values: np.ndarray  # rows x n, unscaled
    kind: str  # "ones" | "linear" | "tensor"

    @property
    def rows(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SketchedKernel:
    """Block-structured feature matrix W with W^T W approximating a kernel."""

    blocks: tuple[KernelBlock, ...]
    diag: np.ndarray | None
    plan: TaylorPlan
    seed: int
    m_total: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "m_total", sum(b.rows for b in self.blocks))

    @property
    def n(self) -> int:
        return self.blocks[0].values.shape[1]

    def gram(self) -> np.ndarray:
        """Approximate kernel D (sum_l scale_l^2 Z_l^T Z_l) D without stacking."""
        G = np.zeros((self.n, self.n))
        for b in self.blocks:
            G += (b.scale**2) * (b.values.T @ b.values)
        if self.diag is not None:
            G = self.diag[:, None] * G * self.diag[None, :]
        return G

    def stack(self) -> np.ndarray:
        """All scaled blocks stacked into a single m_total x n matrix."""
        W = np.vstack([b.scale * b.values for b in self.blocks])
        if self.diag is not None:
            W = W * self.diag[None, :]
        return W


def term_block_dim(
    n: int,
    d: int,
    degree: int,
    eps_term: float,
    delta_term: float,
    constant: float = 1.0,
) -> int:
    """Sketch rows needed to approximate one degree-l series term to eps_term.

    Degree 0 is the exact all-ones row; degree 1 a plain SRHT; higher
    degrees pay the eps_term / (3 l) accuracy split of the composed sketch,
    so per-block rows grow like l^2 and a q-term stack like q^3.
    """
    if degree == 0:
        return 1
    if degree == 1:
        return ose_dims(n, d, eps_term, delta_term, "srht", constant)
    return ose_dims(
        n, d, eps_term / (3.0 * degree), delta_term, "tensor_srht", constant
    )


def gaussian_block_dims(
    n: int, d: int, q: int, eps: float, delta: float, constant: float = 1.0
) -> list[int]:
    """Planned rows per degree block of a truncation-q Gaussian sketch."""
    delta_term = delta / (q + 1)
    return [
        term_block_dim(n, d, l, eps / 2.0, delta_term, constant)
        for l in range(q + 1)
    ]


def _term_block(
    X: DataMatrix,
    degree: int,
    scale: float,
    eps_term: float,
    delta_term: float,
    seed: int,
    constant: float,
    block_m: int | None,
) -> KernelBlock:
    """Sketch one series term to relative accuracy eps_term."""
    if degree == 0:
        return KernelBlock(0, scale, np.ones((1, X.n)), "ones")
    m = block_m or term_block_dim(X.n, X.d, degree, eps_term, delta_term, constant)
    if degree == 1:
        t = srht_new(X.d, m, seed)
        return KernelBlock(1, scale, srht_apply_matrix(t, X.values), "linear")
    ts = tensor_sketcher(X.d, m, degree, seed)
    return KernelBlock(degree, scale, sketch_matrix(ts, X).values, "tensor")


def _validate_eps_delta(eps: float, delta: float) -> None:
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise InvalidParameterError("eps and delta must lie in (0, 1)")


def gaussian_sketch(
    X: DataMatrix,
    eps: float,
    delta: float,
    seed: int,
    *,
    ose_constant: float = 1.0,
    block_m: int | None = None,
) -> SketchedKernel:
    """Sketch of the Gaussian kernel as a weighted stack of degree blocks.

    Truncates the exponential series at the smallest q whose tail bound is
    <= eps/2, sketches each term to relative accuracy eps/2 (degree 0 is the
    exact all-ones row, degree 1 a plain SRHT of X), scales term l by
    1/sqrt(l!), and applies the right diagonal exp(-||x_i||^2 / 2).
    """
    _validate_eps_delta(eps, delta)
    q = gaussian_truncation_degree(X.radius, X.n, eps)
    delta_term = delta / (q + 1)
    eps_term = eps / 2.0
    blocks = []
    for l in range(q + 1):
        alpha = math.exp(-0.5 * gammaln(l + 1.0))
        blocks.append(
            _term_block(
                X, l, alpha, eps_term, delta_term,
                derive_seed(seed, "gaussian.block", l), ose_constant, block_m,
            )
        )
    diag = np.exp(-0.5 * X.column_norms_sq())
    coeffs = np.exp(-gammaln(np.arange(q + 1) + 1.0))
    plan = make_sampled_plan(
        coeffs, exact_upto=q, m_samples=0, gaussian_prefactor=True,
        tail_bound=gaussian_tail_bound(X.radius, X.n, q),
    )
    return SketchedKernel(tuple(blocks), diag, plan, seed)


def pconv_sketch(
    X: DataMatrix,
    coeff,
    p_exponent: float,
    eps: float,
    delta: float,
    seed: int,
    *,
    ose_constant: float = 1.0,
    block_m: int | None = None,
) -> SketchedKernel:
    """Sketch of a kernel with polynomially decaying coefficients, all terms exact.

    ``coeff(l)`` must be positive and non-increasing like (l+1)^{-Theta(p)}.
    Every term up to the truncation degree is sketched (no sampling); use
    ``sampled_pconv_sketch`` when the decay exponent is in (1, 3).
    """
    _validate_eps_delta(eps, delta)
    if p_exponent <= 1.0:
        raise InvalidParameterError("decay exponent must exceed 1")
    q = pconv_truncation_degree(coeff, X.n, X.radius, eps)
    coeffs = np.array([float(coeff(l)) for l in range(q + 1)])
    if np.any(coeffs <= 0.0):
        raise InvalidParameterError("coefficients must be positive")
    delta_term = delta / (q + 1)
    eps_term = eps / 2.0
    blocks = [
        _term_block(
            X, l, math.sqrt(coeffs[l]), eps_term, delta_term,
            derive_seed(seed, "pconv.block", l), ose_constant, block_m,
        )
        for l in range(q + 1)
    ]
    plan = make_sampled_plan(
        coeffs, exact_upto=q, m_samples=0,
        tail_bound=pconv_tail_bound(coeff, X.n, X.radius, q),
    )
    return SketchedKernel(tuple(blocks), None, plan, seed)


def _prefix_size(p_exponent: float, n: int, eps: float, constant: float) -> int:
    if 2.0 < p_exponent < 3.0:
        raw = (n / eps) ** (2.0 / (1.0 + 2.0 * p_exponent))
    else:  # 1 < p <= 2
        raw = n ** ((2.0 + 2.0 / p_exponent) / (3.0 + 2.0 * p_exponent)) / eps ** (
            2.0 / (3.0 + 2.0 * p_exponent)
        )
    return max(1, math.ceil(constant * raw))


def _sample_count(
    p_exponent: float, n: int, s: int, eps: float, delta: float, constant: float
) -> int:
    raw = n**2 * s ** (-2.0 * p_exponent) * math.log(n / delta) / eps**2
    return max(1, math.ceil(constant * raw))


def sampled_pconv_sketch(
    X: DataMatrix,
    coeff,
    p_exponent: float,
    eps: float,
    delta: float,
    seed: int,
    *,
    ose_constant: float = 1.0,
    sample_constant: float = 1.0,
    prefix_constant: float = 1.0,
    block_m: int | None = None,
    s_override: int | None = None,
    m_samples_override: int | None = None,
) -> SketchedKernel:
    """Exact prefix plus coefficient-proportional sampling of the series tail.

    For decay exponents in (1, 3) the first s terms are sketched exactly and
    the remaining terms up to the truncation degree are covered by
    ``m_samples`` i.i.d. draws; draw i gets scale sqrt(C_l / (p_l m)), which
    makes the stacked estimator's Gram unbiased for the dropped tail.
    Exponents outside (1, 3) route to the all-exact plan, as does s >= q.
    """
    _validate_eps_delta(eps, delta)
    if not (1.0 < p_exponent < 3.0):
        return pconv_sketch(
            X, coeff, p_exponent, eps, delta, seed,
            ose_constant=ose_constant, block_m=block_m,
        )
    q = pconv_truncation_degree(coeff, X.n, X.radius, eps)
    s = s_override if s_override is not None else _prefix_size(
        p_exponent, X.n, eps, prefix_constant
    )
    if s >= q:
        return pconv_sketch(
            X, coeff, p_exponent, eps, delta, seed,
            ose_constant=ose_constant, block_m=block_m,
        )
    m_samples = (
        m_samples_override
        if m_samples_override is not None
        else _sample_count(p_exponent, X.n, s, eps, delta, sample_constant)
    )
    coeffs = np.array([float(coeff(l)) for l in range(q + 1)])
    if np.any(coeffs <= 0.0):
        raise InvalidParameterError("coefficients must be positive")
    plan = make_sampled_plan(
        coeffs, exact_upto=s, m_samples=m_samples,
        tail_bound=pconv_tail_bound(coeff, X.n, X.radius, q),
    )
    indices = draw_tail_indices(plan, seed)
    delta_term = delta / (s + 1 + m_samples)
    eps_term = eps / 2.0
    blocks = [
        _term_block(
            X, l, math.sqrt(coeffs[l]), eps_term, delta_term,
            derive_seed(seed, "pconv.block", l), ose_constant, block_m,
        )
        for l in range(s + 1)
    ]
    offset = s + 1
    for i, idx in enumerate(indices):
        prob = plan.sampled_probs[idx - offset]
        scale = math.sqrt(coeffs[idx] / (prob * m_samples))
        blocks.append(
            _term_block(
                X, int(plan.degrees[idx]), scale, eps_term, delta_term,
                derive_seed(seed, "pconv.sample-block", i), ose_constant, block_m,
            )
        )
    return SketchedKernel(tuple(blocks), None, plan, seed)


# ---------------------------------------------------------------------------
# Neural tangent kernel
# ---------------------------------------------------------------------------


def ntk_coefficient(l: int) -> float:
    """Series coefficient binom(2l, l) 4^{-l} / ((2l+1) 2 pi) of the tangent kernel.

    Exact arithmetic for small l, log-gamma beyond l = 30 to avoid overflow.
    """
    if l < 0:
        raise InvalidParameterError("index must be non-negative")
    if l <= 30:
        return math.comb(2 * l, l) * 0.25**l / ((2 * l + 1) * _TWO_PI)
    log_c = (
        gammaln(2 * l + 1)
        - 2.0 * gammaln(l + 1)
        - l * math.log(4.0)
        - math.log(2 * l + 1)
        - math.log(_TWO_PI)
    )
    return float(np.exp(log_c))


def _ntk_scalar_exponent(l) -> float:
    # term l of the scalar series is C_l x^{2l+2}
    return 2.0 * l + 2.0


def _ntk_kernel_exponent(l) -> float:
    # term l of the kernel series has degree 2l+2, so its Gram picks up r^{2(2l+2)}
    return 2.0 * (2.0 * l + 2.0)


def ntk_series_value(x: float, terms: int) -> float:
    """Partial sum x/4 + sum_{l < terms} C_l x^{2l+2} of the scalar expansion."""
    total = x / 4.0
    for l in range(terms):
        total += ntk_coefficient(l) * x ** (2 * l + 2)
    return total


def ntk_series_tail_bound(x_abs: float, terms: int) -> float:
    """Upper bound on the dropped scalar-series mass for |x| <= x_abs <= 1."""
    if x_abs > 1.0 + _NTK_CLAMP_TOL:
        raise DomainError("series only converges on [-1, 1]")
    return _series_tail_bound(
        ntk_coefficient, 1, min(x_abs, 1.0), terms, exponent_of=_ntk_scalar_exponent
    )


def ntk_kernel_tail_bound(n: int, r: float, terms: int) -> float:
    """Upper bound on the operator norm of the dropped kernel-series tail."""
    return _series_tail_bound(
        ntk_coefficient, n, r, terms, exponent_of=_ntk_kernel_exponent
    )


def ntk_truncation_index(n: int, r: float, eps: float) -> int:
    """Smallest series index L with the tangent-kernel tail bound <= eps/2."""
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must lie in (0, 1)")
    target = eps / 2.0
    L = 0
    while ntk_kernel_tail_bound(n, r, L + 1) > target:
        L += 1
        if L > _MAX_TRUNCATION:  # pragma: no cover
            raise InvalidParameterError("tangent-kernel tail failed to converge")
    return L


def ntk_sketch(
    X: DataMatrix,
    eps: float,
    delta: float,
    seed: int,
    *,
    ose_constant: float = 1.0,
    sample_constant: float = 1.0,
    prefix_constant: float = 1.0,
    block_m: int | None = None,
    s_override: int | None = None,
    m_samples_override: int | None = None,
) -> SketchedKernel:
    """Sketch of the tangent kernel: a linear block plus even-degree series blocks.

    The x/4 term contributes a degree-1 block with scale 1/2; the series
    terms (degree 2l+2, coefficient C_l = Theta(l^{-1.5})) go through the
    exact-prefix-plus-sampling scheme with decay exponent 1.5.  The plan
    covers the series terms; block degrees are {1} union {2l+2}.
    """
    _validate_eps_delta(eps, delta)
    r = X.radius
    if r > 1.0 + _NTK_CLAMP_TOL:
        raise InvalidParameterError("tangent kernel requires unit-radius data")
    r = min(r, 1.0)
    p_exponent = 1.5
    L = ntk_truncation_index(X.n, r, eps)
    coeffs = np.array([ntk_coefficient(l) for l in range(L + 1)])
    degrees = np.array([2 * l + 2 for l in range(L + 1)], dtype=np.int64)
    s = s_override if s_override is not None else _prefix_size(
        p_exponent, X.n, eps, prefix_constant
    )
    tail_bound = ntk_kernel_tail_bound(X.n, r, L + 1)
    if s >= L:
        plan = make_sampled_plan(
            coeffs, exact_upto=L, m_samples=0, degrees=degrees, tail_bound=tail_bound
        )
        indices = np.empty(0, dtype=np.int64)
    else:
        m_samples = (
            m_samples_override
            if m_samples_override is not None
            else _sample_count(p_exponent, X.n, s, eps, delta, sample_constant)
        )
        plan = make_sampled_plan(
            coeffs, exact_upto=s, m_samples=m_samples, degrees=degrees,
            tail_bound=tail_bound,
        )
        indices = draw_tail_indices(plan, seed)
    n_blocks = 1 + plan.exact_upto + 1 + len(indices)
    delta_term = delta / n_blocks
    eps_term = eps / 2.0
    blocks = [
        _term_block(
            X, 1, 0.5, eps_term, delta_term,
            derive_seed(seed, "ntk.linear"), ose_constant, block_m,
        )
    ]
    for l in range(plan.exact_upto + 1):
        blocks.append(
            _term_block(
                X, int(degrees[l]), math.sqrt(coeffs[l]), eps_term, delta_term,
                derive_seed(seed, "ntk.block", l), ose_constant, block_m,
            )
        )
    offset = plan.exact_upto + 1
    for i, idx in enumerate(indices):
        prob = plan.sampled_probs[idx - offset]
        scale = math.sqrt(coeffs[idx] / (prob * plan.m_samples))
        blocks.append(
            _term_block(
                X, int(degrees[idx]), scale, eps_term, delta_term,
                derive_seed(seed, "ntk.sample-block", i), ose_constant, block_m,
            )
        )
    return SketchedKernel(tuple(blocks), None, plan, seed)
