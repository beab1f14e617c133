"""Command-line entry point: sketches, kernel approximations, solvers, bench.

Every run emits a JSON report embedding the full configuration and seed, so
any result is reproducible from its report alone.  ``bench`` sweeps a grid
over (n, d, p, eps) and writes one CSV row per cell with the planned sketch
dimension and wall-clock timings (one discarded warm-up per cell).

Exit codes: 0 success, 1 validation error, 2 compute failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _fast
from .data import DataMatrix
from .errors import (
    ConvergenceError,
    InvalidDimensionError,
    InvalidParameterError,
    MatrixParseError,
    OracleGuardError,
    PolysketchError,
    PreconditionerError,
)
from .io import load_matrix, load_vector
from .kernels import (
    gaussian_kernel_exact,
    gaussian_sketch,
    ntk_kernel_exact,
    ntk_sketch,
    pconv_sketch,
    poly_kernel_exact,
    sampled_pconv_sketch,
)
from .oracle import spectral_sandwich
from .solvers import krr_exact, krr_solve, precond_gd_solve
from .tensor_sketch import plan_dims, sketch_matrix, tensor_sketcher
from .rng import derive_seed

EXACT_CHECK_GUARD = 512
BENCH_COLUMNS = ["n", "d", "p", "eps", "m", "trials", "sketch_ms"]

_COMMANDS = ("sketch", "gaussian", "ntk", "pconv", "solve", "krr", "bench")


@dataclass
class RunConfig:
    command: str
    kernel: str
    degree: int = 2
    eps: float = 0.25
    delta: float = 0.1
    lam: float = 0.0
    seed: int = 0
    m: int | None = None
    ose_constant: float = 1.0
    input: str | None = None
    target: str | None = None
    output: str | None = None
    exact_check: bool = False
    trials: int = 200
    pconv_exponent: float = 2.5
    inner_m: int | None = None
    t_rows: int | None = None
    n_list: tuple[int, ...] = (8,)
    d_list: tuple[int, ...] = (256,)
    eps_list: tuple[float, ...] = ()
    p_list: tuple[int, ...] = ()

    def validate(self) -> None:
        if self.command not in _COMMANDS:
            raise InvalidParameterError(f"unknown command {self.command!r}")
        if not (0.0 < self.eps < 1.0):
            raise InvalidParameterError("--eps must lie in (0, 1)")
        if not (0.0 < self.delta < 1.0):
            raise InvalidParameterError("--delta must lie in (0, 1)")
        if self.degree < 1:
            raise InvalidParameterError("--degree must be a positive integer")
        if self.lam < 0.0:
            raise InvalidParameterError("--lambda must be non-negative")
        if self.trials < 1:
            raise InvalidParameterError("--trials must be positive")
        if self.m is not None and self.m < 1:
            raise InvalidParameterError("--m must be positive")
        if self.command != "bench" and self.input is None:
            raise InvalidParameterError(f"--input is required for {self.command}")


@dataclass
class ReportRecord:
    config: dict
    success: bool
    m_total: int | None = None
    q: int | None = None
    s: int | None = None
    sampled_degrees: list[int] | None = None
    eps_measured: float | None = None
    eps_pass: bool | None = None
    iterations: int | None = None
    residual: float | None = None
    kappa_hat: float | None = None
    cost: float | None = None
    opt_cost: float | None = None
    bench_rows: list[dict] | None = None
    error: str | None = None
    timings_ms: dict | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)


class _Phases:
    """Wall-clock per phase in milliseconds."""

    def __init__(self):
        self.times = {"ingest": 0.0, "sketch": 0.0, "solve": 0.0, "verify": 0.0}
        self._start = None
        self._phase = None

    def begin(self, phase: str):
        self._phase = phase
        self._start = time.perf_counter()

    def end(self):
        if self._phase is not None:
            self.times[self._phase] += (time.perf_counter() - self._start) * 1e3
            self._phase = None


def _require_exact_guard(n: int) -> None:
    if n > EXACT_CHECK_GUARD:
        raise OracleGuardError(
            f"--exact-check refused: guard n <= {EXACT_CHECK_GUARD} exceeded (n={n})"
        )


def _sandwich(record: ReportRecord, approx: np.ndarray, exact: np.ndarray, eps: float):
    rep = spectral_sandwich(approx, exact, eps)
    record.eps_measured = rep.eps_measured
    record.eps_pass = bool(rep.passed)


def _run_sketch(cfg: RunConfig, record: ReportRecord, phases: _Phases) -> None:
    phases.begin("ingest")
    X = load_matrix(cfg.input)
    phases.end()
    phases.begin("sketch")
    if cfg.m is not None:
        m = cfg.m
    else:
        m, _ = plan_dims(X.n, X.d, cfg.degree, cfg.eps, cfg.delta, cfg.ose_constant)
    ts = tensor_sketcher(X.d, m, cfg.degree, cfg.seed)
    Z = sketch_matrix(ts, X)
    phases.end()
    record.m_total = Z.m
    if cfg.exact_check:
        phases.begin("verify")
        _require_exact_guard(X.n)
        _sandwich(record, Z.values.T @ Z.values, poly_kernel_exact(X, cfg.degree), cfg.eps)
        phases.end()


def _run_kernel(cfg: RunConfig, record: ReportRecord, phases: _Phases) -> None:
    phases.begin("ingest")
    X = load_matrix(cfg.input)
    phases.end()
    phases.begin("sketch")
    if cfg.command == "gaussian":
        sk = gaussian_sketch(
            X, cfg.eps, cfg.delta, cfg.seed,
            ose_constant=cfg.ose_constant, block_m=cfg.m,
        )
        exact = gaussian_kernel_exact
    elif cfg.command == "ntk":
        sk = ntk_sketch(
            X, cfg.eps, cfg.delta, cfg.seed,
            ose_constant=cfg.ose_constant, block_m=cfg.m,
        )
        exact = ntk_kernel_exact
    else:
        coeff = _power_law(cfg.pconv_exponent)
        if 1.0 < cfg.pconv_exponent < 3.0:
            sk = sampled_pconv_sketch(
                X, coeff, cfg.pconv_exponent, cfg.eps, cfg.delta, cfg.seed,
                ose_constant=cfg.ose_constant, block_m=cfg.m,
            )
        else:
            sk = pconv_sketch(
                X, coeff, cfg.pconv_exponent, cfg.eps, cfg.delta, cfg.seed,
                ose_constant=cfg.ose_constant, block_m=cfg.m,
            )

        def exact(Xd):
            gram = Xd.values.T @ Xd.values
            out = np.zeros_like(gram)
            for l in range(sk.plan.truncation_index + 1):
                out += coeff(l) * gram**l
            tail_start = sk.plan.truncation_index + 1
            # include enough of the series to be a faithful oracle
            for l in range(tail_start, tail_start + 200):
                out += coeff(l) * gram**l
            return out

    phases.end()
    record.m_total = sk.m_total
    record.q = int(sk.plan.truncation_index)
    record.s = int(sk.plan.exact_upto)
    record.sampled_degrees = (
        sorted(int(sk.plan.degrees[i]) for i in sk.plan.sampled_indices)
        if sk.plan.has_sampling
        else []
    )
    if cfg.exact_check:
        phases.begin("verify")
        _require_exact_guard(X.n)
        _sandwich(record, sk.gram(), exact(X), cfg.eps)
        phases.end()


def _power_law(p_exponent: float):
    def coeff(l):
        return (l + 1.0) ** (-p_exponent)

    return coeff


def _run_solve(cfg: RunConfig, record: ReportRecord, phases: _Phases) -> None:
    phases.begin("ingest")
    X = load_matrix(cfg.input)
    y = _load_target(cfg, X)
    phases.end()
    phases.begin("solve")
    x_hat, rep = precond_gd_solve(
        X, y, cfg.eps, cfg.delta, cfg.seed,
        ose_constant=cfg.ose_constant, gauss_block_m=cfg.m, inner_m=cfg.inner_m,
    )
    phases.end()
    record.m_total = rep.m_total
    record.iterations = rep.iterations
    record.residual = rep.final_residual
    record.kappa_hat = rep.kappa_hat
    if cfg.exact_check:
        phases.begin("verify")
        _require_exact_guard(X.n)
        G = gaussian_kernel_exact(X)
        record.eps_measured = float(
            np.linalg.norm(G @ x_hat - y) / max(np.linalg.norm(y), 1e-300)
        )
        record.eps_pass = record.eps_measured <= cfg.eps
        phases.end()


def _run_krr(cfg: RunConfig, record: ReportRecord, phases: _Phases) -> None:
    phases.begin("ingest")
    X = load_matrix(cfg.input)
    y = _load_target(cfg, X)
    phases.end()
    phases.begin("solve")
    x_star, cost, rep = krr_solve(
        X, y, cfg.degree, cfg.lam, cfg.eps, cfg.seed,
        delta=cfg.delta, ose_constant=cfg.ose_constant,
        t_override=cfg.t_rows, outer_m=cfg.m,
    )
    phases.end()
    record.m_total = rep.t_rows
    record.cost = cost
    record.iterations = rep.outer_rows
    if cfg.exact_check:
        phases.begin("verify")
        _require_exact_guard(X.n)
        _, opt = krr_exact(X, y, cfg.degree, cfg.lam)
        record.opt_cost = opt
        record.eps_measured = float(cost / opt - 1.0) if opt > 0 else 0.0
        record.eps_pass = cost <= (1.0 + cfg.eps) * opt or opt == 0.0
        phases.end()


def _load_target(cfg: RunConfig, X: DataMatrix) -> np.ndarray:
    if cfg.target is not None:
        return load_vector(cfg.target, expected_len=X.n)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(cfg.seed)))
    y = rng.standard_normal(X.n)
    return y / np.linalg.norm(y)


def _bench_cell_ms(ts, X: DataMatrix, repeats: int, blocks: int = 5) -> float:
    """Best-of-blocks per-call milliseconds; repeats loop runs compiled."""
    out = np.empty((ts.output_dim, X.n))
    args = (
        X.values, ts.srht.padded_dim, ts.srht.signs, ts.srht.rows, ts.srht.scale,
        ts.pair_sketch.signs1, ts.pair_sketch.signs2,
        ts.pair_sketch.rows1, ts.pair_sketch.rows2, ts.pair_sketch.scale,
        ts.num_levels, ts.base_level,
        np.asarray(ts.combine_levels, dtype=np.int64), out,
    )
    _fast.sketch_columns(*args, 1)  # discarded warm-up (also compiles)
    best = float("inf")
    for _ in range(blocks):
        t0 = time.perf_counter()
        _fast.sketch_columns(*args, repeats)
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best * 1e3


def _run_bench(cfg: RunConfig, record: ReportRecord, phases: _Phases) -> None:
    eps_values = cfg.eps_list or (cfg.eps,)
    p_values = cfg.p_list or (cfg.degree,)
    rows = []
    phases.begin("sketch")
    for idx, (n, d, p, eps) in enumerate(
        itertools.product(cfg.n_list, cfg.d_list, p_values, eps_values)
    ):
        cell_seed = derive_seed(cfg.seed, "bench.cell", idx)
        rng = np.random.Generator(np.random.Philox(key=np.uint64(cell_seed)))
        X = DataMatrix(rng.standard_normal((d, n)))
        if cfg.m is not None:
            m = cfg.m
        else:
            m, _ = plan_dims(n, d, p, eps, cfg.delta, cfg.ose_constant)
        ts = tensor_sketcher(d, m, p, cell_seed)
        ms = _bench_cell_ms(ts, X, cfg.trials)
        rows.append(
            {
                "n": n,
                "d": d,
                "p": p,
                "eps": eps,
                "m": m,
                "trials": cfg.trials,
                "sketch_ms": ms,
            }
        )
    phases.end()
    record.bench_rows = rows
    record.m_total = rows[-1]["m"] if rows else None
    if cfg.output:
        lines = [",".join(BENCH_COLUMNS)]
        for row in rows:
            lines.append(
                ",".join(
                    f"{row[c]:.6f}" if c == "sketch_ms" else f"{row[c]:.17g}" if c == "eps" else str(row[c])
                    for c in BENCH_COLUMNS
                )
            )
        Path(cfg.output).write_text("\n".join(lines) + "\n")


def run_command(cfg: RunConfig) -> ReportRecord:
    """Dispatch one configured run and return its report."""
    cfg.validate()
    record = ReportRecord(config=dataclasses.asdict(cfg), success=False)
    phases = _Phases()
    runner = {
        "sketch": _run_sketch,
        "gaussian": _run_kernel,
        "ntk": _run_kernel,
        "pconv": _run_kernel,
        "solve": _run_solve,
        "krr": _run_krr,
        "bench": _run_bench,
    }[cfg.command]
    try:
        runner(cfg, record, phases)
        record.success = True
    except (ConvergenceError, PreconditionerError, OracleGuardError) as exc:
        phases.end()
        record.error = str(exc)
        if isinstance(exc, ConvergenceError):
            record.iterations = exc.iterations
            record.residual = exc.residual
        record.success = False
    record.timings_ms = phases.times
    return record


def _write_report(cfg: RunConfig, record: ReportRecord) -> None:
    text = record.to_json()
    if cfg.command == "bench":
        # CSV already written to --output; report goes to stdout
        print(text)
    elif cfg.output:
        Path(cfg.output).write_text(text + "\n")
    else:
        print(text)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polysketch",
        description="Tensor sketches of polynomial kernels and their applications",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, needs_input: bool = True):
        if needs_input:
            p.add_argument("--input", required=True, help="matrix file (native or .csv)")
        p.add_argument("--eps", type=float, default=0.25)
        p.add_argument("--delta", type=float, default=0.1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--m", type=int, default=None, help="explicit sketch-dimension override")
        p.add_argument("--ose-constant", dest="ose_constant", type=float, default=1.0)
        p.add_argument("--output", default=None, help="report path (stdout if omitted)")
        p.add_argument("--exact-check", dest="exact_check", action="store_true")
        p.add_argument("--trials", type=int, default=200)

    p = sub.add_parser("sketch", help="sketch a degree-p polynomial kernel feature map")
    common(p)
    p.add_argument("--degree", type=int, default=2)

    for name in ("gaussian", "ntk"):
        p = sub.add_parser(name, help=f"sketched {name} kernel")
        common(p)

    p = sub.add_parser("pconv", help="kernel with power-law Taylor coefficients")
    common(p)
    p.add_argument("--pconv-exponent", dest="pconv_exponent", type=float, default=2.5)

    p = sub.add_parser("solve", help="preconditioned Gaussian-kernel system solver")
    common(p)
    p.add_argument("--target", default=None, help="right-hand side vector file")
    p.add_argument("--inner-m", dest="inner_m", type=int, default=None)

    p = sub.add_parser("krr", help="sketched kernel ridge regression")
    common(p)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--target", default=None)
    p.add_argument("--t-rows", dest="t_rows", type=int, default=None)

    p = sub.add_parser("bench", help="timing sweep over a (n, d, p, eps) grid")
    common(p, needs_input=False)
    p.add_argument("--n-list", dest="n_list", type=_int_list, default=(8,))
    p.add_argument("--d-list", dest="d_list", type=_int_list, default=(256,))
    p.add_argument("--p-list", dest="p_list", type=_int_list, default=())
    p.add_argument("--eps-list", dest="eps_list", type=_float_list, default=())
    p.add_argument("--degree", type=int, default=4)

    return parser


def config_from_args(argv: list[str]) -> RunConfig:
    args = build_parser().parse_args(argv)
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    payload = {k: v for k, v in vars(args).items() if k in fields}
    payload["kernel"] = {
        "sketch": "poly",
        "gaussian": "gaussian",
        "ntk": "ntk",
        "pconv": "pconv",
        "solve": "gaussian",
        "krr": "poly",
        "bench": "poly",
    }[args.command]
    return RunConfig(**payload)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
        record = run_command(cfg)
    except (InvalidParameterError, InvalidDimensionError, MatrixParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PolysketchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write_report(cfg, record)
    return 0 if record.success else 2


if __name__ == "__main__":
    sys.exit(main())
