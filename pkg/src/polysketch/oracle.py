"""Brute-force ground truth and statistical verifiers.

Everything here is sketch-free and deterministic.  Oracles refuse to run
past their size guards rather than approximate, and any disagreement with a
fast path beyond stated tolerances is a test failure, never a warning.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidParameterError, OracleGuardError

__all__ = [
    "MonteCarloStats",
    "SpectralReport",
    "monte_carlo_norm_ratio",
    "spectral_sandwich",
    "tensor_power_dense",
]

TENSOR_POWER_GUARD = 2**12
NULL_SPACE_RELATIVE_CUTOFF = 1e-10
NULL_SPACE_LEAK_TOL = 1e-8
SYMMETRY_TOL = 1e-10


def tensor_power_dense(X: np.ndarray, p: int) -> np.ndarray:
    """Explicit d^p x n matrix of p-fold Kronecker powers of the columns.

    Satisfies the Gram identity: its Gram equals the elementwise p-th power
    of X^T X.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidParameterError("expected a 2-D matrix")
    if p < 0:
        raise InvalidParameterError("power must be non-negative")
    d, n = X.shape
    if d**p > TENSOR_POWER_GUARD:
        raise OracleGuardError(
            f"d^p = {d**p} exceeds the tensor-power guard {TENSOR_POWER_GUARD}"
        )
    cols = []
    for j in range(n):
        col = np.ones(1)
        for _ in range(p):
            col = np.kron(col, X[:, j])
        cols.append(col)
    return np.column_stack(cols)


@dataclass(frozen=True)
class SpectralReport:
    """Measured two-sided relative eigenvalue deviation of A against B."""

    eps_measured: float
    min_eig: float
    max_eig: float
    rank_used: int
    threshold: float
    passed: bool
    structural_failure: bool  # A has mass on B's null space

    def __post_init__(self):
        assert self.eps_measured >= 0.0


def spectral_sandwich(A: np.ndarray, B: np.ndarray, eps: float) -> SpectralReport:
    """Check the PSD sandwich (1-eps) B <= A <= (1+eps) B.

    Whitens ``A`` by ``B^{-1/2}`` on B's range (eigenvalues below
    ``1e-10 * lambda_max`` count as null directions) and reports the largest
    relative deviation of the whitened eigenvalues from 1.  If A has
    non-negligible mass on B's null space the check fails structurally
    rather than raising.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidParameterError("A and B must be square with equal shapes")
    for M, name in ((A, "A"), (B, "B")):
        scale = max(np.abs(M).max(), 1.0)
        if np.abs(M - M.T).max() > SYMMETRY_TOL * scale:
            raise InvalidParameterError(f"{name} is not symmetric to tolerance")
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)

    evals, evecs = np.linalg.eigh(B)
    lam_max = max(evals.max(initial=0.0), 0.0)
    threshold = NULL_SPACE_RELATIVE_CUTOFF * lam_max
    keep = evals > threshold
    rank = int(keep.sum())

    structural = False
    if rank < len(evals):
        null_vecs = evecs[:, ~keep]
        leak = np.abs(null_vecs.T @ A @ null_vecs).max(initial=0.0)
        if leak > NULL_SPACE_LEAK_TOL * max(lam_max, 1.0):
            structural = True

    if rank == 0:
        eps_measured = float(np.abs(A).max())
        min_eig = max_eig = 0.0
        passed = (not structural) and eps_measured <= eps
        return SpectralReport(
            eps_measured, min_eig, max_eig, rank, threshold, passed, structural
        )

    whiten = evecs[:, keep] / np.sqrt(evals[keep])[None, :]
    core = whiten.T @ A @ whiten
    core_evals = np.linalg.eigvalsh(0.5 * (core + core.T))
    min_eig = float(core_evals.min())
    max_eig = float(core_evals.max())
    eps_measured = max(abs(max_eig - 1.0), abs(1.0 - min_eig))
    passed = (not structural) and eps_measured <= eps
    return SpectralReport(
        eps_measured, min_eig, max_eig, rank, threshold, passed, structural
    )


@dataclass(frozen=True)
class MonteCarloStats:
    mean: float
    std: float
    quantiles: dict[str, float]
    failure_rate: float | None
    trials: int
    degenerate: bool  # single trial: std reported as 0


def monte_carlo_norm_ratio(
    builder: Callable[[int], Callable[[np.ndarray], np.ndarray]],
    X: np.ndarray,
    y: np.ndarray | None,
    trials: int,
    master_seed: int = 0,
    eps: float | None = None,
) -> MonteCarloStats:
    """Distribution of ||sketch(v)||^2 / ||v||^2 over freshly seeded sketches.

    ``builder(seed)`` must return a function applying a sketch drawn from
    that seed; ``v = X @ y`` when ``y`` is given, else ``X`` itself (a
    vector).  Trial seeds derive from ``master_seed``, so results are
    reproducible.  When ``eps`` is given, also reports the fraction of
    trials with ``|ratio - 1| > eps`` for comparison against a target
    failure probability.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    v = np.asarray(X, dtype=np.float64)
    if y is not None:
        v = v @ np.asarray(y, dtype=np.float64)
    denom = float(v @ v)
    if denom == 0.0:
        raise InvalidParameterError("target vector has zero norm")
    from .rng import derive_seed

    ratios = np.empty(trials)
    for t in range(trials):
        apply = builder(derive_seed(master_seed, "mc-trial", t))
        s = apply(v)
        ratios[t] = float(s @ s) / denom
    degenerate = trials == 1
    std = 0.0 if degenerate else float(ratios.std(ddof=1))
    qs = np.quantile(ratios, [0.05, 0.25, 0.5, 0.75, 0.95])
    failure_rate = None
    if eps is not None:
        failure_rate = float(np.mean(np.abs(ratios - 1.0) > eps))
    return MonteCarloStats(
        mean=float(ratios.mean()),
        std=std,
        quantiles={
            "q05": qs[0],
            "q25": qs[1],
            "q50": qs[2],
            "q75": qs[3],
            "q95": qs[4],
        },
        failure_rate=failure_rate,
        trials=trials,
        degenerate=degenerate,
    )
