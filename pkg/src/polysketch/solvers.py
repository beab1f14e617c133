"""Sketch-preconditioned solvers for kernel systems.

``precond_gd_solve`` solves a Gaussian-kernel linear system by sketching the
kernel's feature stack, sketching that again with a plain SRHT, taking a QR
factorization to build a triangular preconditioner, and running unit-step
gradient descent on the preconditioned normal equations.  ``krr_solve``
handles polynomial-kernel ridge regression by composing the tensor sketch
with an outer SRHT whose size tracks the statistical dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data import DataMatrix
from .errors import (
    ConvergenceError,
    InvalidParameterError,
    OracleGuardError,
    PreconditionerError,
)
from .kernels import gaussian_kernel_exact, gaussian_sketch, poly_kernel_exact
from .rng import derive_seed
from .tensor_sketch import plan_dims, sketch_matrix, tensor_sketcher
from .transforms import next_pow2, ose_dims, srht_apply_matrix, srht_new

__all__ = [
    "GdReport",
    "KrrReport",
    "PreconditionedSystem",
    "RidgeProblem",
    "build_preconditioner",
    "condition_number",
    "krr_exact",
    "krr_solve",
    "precond_gd_solve",
    "statistical_dimension",
]

KRR_EXACT_GUARD = 512
_PINV_THRESHOLD = 1e-12


def condition_number(M: np.ndarray) -> float:
    """Ratio of extreme singular values; infinite below 1e-14 relative rank."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0 or not np.any(M):
        raise InvalidParameterError("matrix must be nonzero")
    svals = np.linalg.svd(M, compute_uv=False)
    smax = svals[0]
    smin = svals[-1]
    if smin < 1e-14 * smax:
        return math.inf
    return float(smax / smin)


def statistical_dimension(K: np.ndarray, lam: float) -> float:
    """Effective degrees of freedom Tr[K (K + lam I)^{-1}] of a PSD matrix."""
    if lam < 0.0:
        raise InvalidParameterError("regularization must be non-negative")
    K = np.asarray(K, dtype=np.float64)
    scale = max(np.abs(K).max(initial=0.0), 1.0)
    if np.abs(K - K.T).max(initial=0.0) > 1e-10 * scale:
        raise InvalidParameterError("matrix is not symmetric to tolerance")
    evals = np.linalg.eigvalsh(0.5 * (K + K.T))
    lam_max = max(evals.max(initial=0.0), 0.0)
    evals = np.clip(evals, 0.0, None)
    if lam == 0.0:
        cutoff = _PINV_THRESHOLD * lam_max
        return float(np.sum(evals > cutoff))
    return float(np.sum(evals / (evals + lam)))


@dataclass(frozen=True)
class PreconditionedSystem:
    """Feature stack W with a triangular R making W R near-orthonormal."""

    W: np.ndarray  # m_total x n
    R: np.ndarray  # n x n upper triangular (inverse of the QR factor)
    epsilon0: float
    kappa_hat: float  # measured condition number of W R
    inner_rows: int


def build_preconditioner(
    W: np.ndarray,
    eps0: float,
    delta: float,
    seed: int,
    *,
    ose_constant: float = 1.0,
    inner_m: int | None = None,
) -> PreconditionedSystem:
    """QR-based preconditioner from an SRHT sketch of the feature stack.

    Draws S with enough rows to embed W's column space at accuracy
    ``eps0``, factors S W = Q R_f, and returns R = R_f^{-1} so that S W R
    has exactly orthonormal columns and W R has condition number close to
    (1 + eps0) / (1 - eps0).
    """
    m_total, n = W.shape
    rows = inner_m or ose_dims(n, m_total, eps0, delta, "srht", ose_constant)
    sk = srht_new(m_total, rows, derive_seed(seed, "precond.inner-srht"))
    SW = srht_apply_matrix(sk, W)
    r_factor = np.linalg.qr(SW, mode="r")
    diag = np.abs(np.diag(r_factor))
    if diag.min() < 1e-12 * max(diag.max(), 1.0):
        raise PreconditionerError("sketched feature stack is rank deficient")
    R = scipy.linalg.solve_triangular(r_factor, np.eye(n))
    kappa = condition_number(W @ R)
    return PreconditionedSystem(
        W=W, R=R, epsilon0=eps0, kappa_hat=kappa, inner_rows=rows
    )


@dataclass(frozen=True)
class GdReport:
    iterations: int
    converged: bool
    final_residual: float  # ||W^T W R z - y|| at exit
    target: float  # eps * ||y||
    kappa_hat: float
    precond_residuals: tuple[float, ...]  # ||M z_t - R^T y|| per iteration
    m_total: int
    inner_rows: int
    iteration_cap: int


def precond_gd_solve(
    X: DataMatrix,
    y: np.ndarray,
    eps: float,
    delta: float,
    seed: int,
    *,
    eps0: float = 0.1,
    ose_constant: float = 1.0,
    gauss_block_m: int | None = None,
    inner_m: int | None = None,
) -> tuple[np.ndarray, GdReport]:
    """Approximately solve the Gaussian-kernel system G x = y.

    Builds the kernel feature stack at accuracy eps/4, preconditions it via
    an inner SRHT (accuracy ``eps0``) and QR, then iterates unit-step
    gradient descent ``z <- z - M^T (M z - R^T y)`` with
    M = R^T W^T W R from z = 0 until ``||W^T W R z - y|| <= eps ||y||``.
    Returns ``x = R z``; against the exact kernel, ``||G x - y||`` is
    eps-small at desk scale.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.n,):
        raise InvalidParameterError(f"y must have length {X.n}")
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must lie in (0, 1)")
    if X.radius > 1.0 + 1e-9:
        raise InvalidParameterError(
            "columns must lie in the unit ball for the Gaussian-kernel solver"
        )
    sketched = gaussian_sketch(
        X, eps / 4.0, delta, derive_seed(seed, "precond.kernel"),
        ose_constant=ose_constant, block_m=gauss_block_m,
    )
    W = sketched.stack()
    system = build_preconditioner(
        W, eps0, delta, seed, ose_constant=ose_constant, inner_m=inner_m
    )
    R = system.R
    gram_w = W.T @ W
    A = gram_w @ R  # W^T W R, used by the stopping rule
    M = R.T @ A  # symmetric PSD by construction
    rhs = R.T @ y

    y_norm = float(np.linalg.norm(y))
    target = eps * y_norm
    cap = int(10.0 * math.log(max(system.kappa_hat / eps, math.e)) + 50.0)

    z = np.zeros(X.n)
    precond_residuals: list[float] = []
    iterations = 0
    while True:
        outer_residual = float(np.linalg.norm(A @ z - y))
        if outer_residual <= target:
            break
        if iterations >= cap:
            raise ConvergenceError(
                f"gradient descent hit the iteration cap {cap} "
                f"(residual {outer_residual:.3e}, target {target:.3e})",
                residual=outer_residual,
                iterations=iterations,
            )
        grad = M @ z - rhs
        precond_residuals.append(float(np.linalg.norm(grad)))
        z = z - M.T @ grad
        iterations += 1

    report = GdReport(
        iterations=iterations,
        converged=True,
        final_residual=outer_residual,
        target=target,
        kappa_hat=system.kappa_hat,
        precond_residuals=tuple(precond_residuals),
        m_total=W.shape[0],
        inner_rows=system.inner_rows,
        iteration_cap=cap,
    )
    return R @ z, report


@dataclass(frozen=True)
class RidgeProblem:
    """Sketched ridge instance min_z ||S (Z^T z - y)||^2 + lam ||z||^2."""

    Z: np.ndarray  # t x n sketched features
    y: np.ndarray
    lam: float

    def __post_init__(self):
        if self.lam < 0.0:
            raise InvalidParameterError("regularization must be non-negative")
        if self.Z.shape[1] != self.y.shape[0]:
            raise InvalidParameterError("feature columns must match targets")


@dataclass(frozen=True)
class KrrReport:
    t_rows: int
    eps_hat: float
    outer_rows: int
    stat_dim_estimate: float
    identity_outer: bool
    rank_deficient: bool
    lambda_hypothesis_ok: bool | None  # None when the oracle guard applies
    cost: float


def krr_solve(
    X: DataMatrix,
    y: np.ndarray,
    p: int,
    lam: float,
    eps: float,
    seed: int,
    *,
    delta: float = 0.1,
    ose_constant: float = 1.0,
    krr_constant: float = 1.0,
    t_override: int | None = None,
    outer_m: int | None = None,
    identity_outer: bool = False,
) -> tuple[np.ndarray, float, KrrReport]:
    """Composed-sketch ridge regression for the degree-p polynomial kernel.

    Sketches the kernel features once (t rows), estimates the statistical
    dimension from the sketched Gram, draws an outer SRHT with
    ceil(eps^{-1} (s + log(1/eps)) log(s/eps)) rows (power-of-two rounded),
    solves the t-dimensional problem in closed form via normal equations,
    and recovers x from Z x = z by least squares.  The reported cost is
    ||K x - y||^2 + lam x^T K x via Gram identities.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (X.n,):
        raise InvalidParameterError(f"y must have length {X.n}")
    if lam < 0.0:
        raise InvalidParameterError("regularization must be non-negative")
    if not (0.0 < eps < 1.0):
        raise InvalidParameterError("eps must lie in (0, 1)")

    if t_override is not None:
        t, eps_hat = t_override, eps / (3.0 * p)
    else:
        t, eps_hat = plan_dims(X.n, X.d, p, eps, delta, ose_constant)
    ts = tensor_sketcher(X.d, t, p, derive_seed(seed, "krr.features"))
    Z = sketch_matrix(ts, X).values  # t x n

    sketched_gram = Z.T @ Z
    s_lam = statistical_dimension(sketched_gram, lam)

    if identity_outer:
        SZt = Z.T
        Sy = y
        outer_rows = X.n
    else:
        if outer_m is not None:
            outer_rows = outer_m
        else:
            log_s = math.log(max(s_lam / eps, math.e))
            outer_rows = next_pow2(
                krr_constant * (s_lam + math.log(1.0 / eps)) * log_s / eps
            )
        outer = srht_new(X.n, outer_rows, derive_seed(seed, "krr.outer-srht"))
        SZt = srht_apply_matrix(outer, Z.T)  # rows x t
        Sy = srht_apply_matrix(outer, y[:, None]).ravel()

    problem = RidgeProblem(Z=Z, y=y, lam=lam)
    normal = SZt.T @ SZt + lam * np.eye(t)
    rhs = SZt.T @ Sy
    try:
        z = scipy.linalg.solve(normal, rhs, assume_a="pos")
    except np.linalg.LinAlgError:
        z = np.linalg.lstsq(normal, rhs, rcond=_PINV_THRESHOLD)[0]

    x, _, rank, _ = np.linalg.lstsq(problem.Z, z, rcond=_PINV_THRESHOLD)
    rank_deficient = rank < X.n

    K = poly_kernel_exact(X, p)
    hypothesis_ok: bool | None = None
    if X.n <= KRR_EXACT_GUARD:
        lam_max = float(np.linalg.eigvalsh(K).max())
        hypothesis_ok = lam < lam_max / eps**2
    resid = K @ x - y
    cost = float(resid @ resid + lam * (x @ (K @ x)))

    report = KrrReport(
        t_rows=t,
        eps_hat=eps_hat,
        outer_rows=outer_rows,
        stat_dim_estimate=s_lam,
        identity_outer=identity_outer,
        rank_deficient=bool(rank_deficient),
        lambda_hypothesis_ok=hypothesis_ok,
        cost=cost,
    )
    return x, cost, report


def krr_exact(
    X: DataMatrix, y: np.ndarray, p: int, lam: float
) -> tuple[np.ndarray, float]:
    """Exact minimizer of ||K x - y||^2 + lam x^T K x (test oracle).

    Solves the stationarity system (K^2 + lam K) x = K y by symmetric
    eigendecomposition with a 1e-12 pseudo-inverse threshold.  Refuses past
    n = 512: oracles never approximate.
    """
    y = np.asarray(y, dtype=np.float64)
    if X.n > KRR_EXACT_GUARD:
        raise OracleGuardError(f"exact solver guard is n <= {KRR_EXACT_GUARD}")
    if lam < 0.0:
        raise InvalidParameterError("regularization must be non-negative")
    K = poly_kernel_exact(X, p)
    evals, evecs = np.linalg.eigh(K)
    lam_max = max(evals.max(initial=0.0), 0.0)
    keep = evals > _PINV_THRESHOLD * lam_max
    y_t = evecs.T @ y
    x_t = np.zeros_like(y_t)
    x_t[keep] = y_t[keep] / (evals[keep] + lam)
    x_opt = evecs @ x_t
    resid = K @ x_opt - y
    opt = float(resid @ resid + lam * (x_opt @ (K @ x_opt)))
    return x_opt, opt
