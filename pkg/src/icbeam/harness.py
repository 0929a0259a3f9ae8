r"""Monte Carlo experiment harness.

A single :class:`ExperimentSpec` pins down everything a run needs: problem
sizes, SNR grid, rate weights, power-constraint style, the methods to
compare, the CSI-mismatch settings, trial count and the master seed.  Every
trial draws its own channels (and, in mismatch mode, its own estimation
error) from counter-based generators keyed by (master_seed, trial, stream),
so results do not depend on execution order and trials can be spread over
worker processes.

SNR normalization: the shared budget is P_T = K (one unit per user, and
exactly 1.0 per user in per-node mode) with unit-variance noise, so the
per-link SNR in dB maps to the channel variance sigma_h^2 = 10^(snr/10).

In mismatch mode the designer sees estimated channels.  The 'naive' design
runs the perfect-CSI algorithm on them; the 'robust' design (weighted-MMSE
methods only) additionally loads its covariances with the assumed error
variance, which may deliberately differ from the true one by the
``sigma_eps_frac`` factor.  Reported rates are always realized on the true
channels.
"""

import csv
import io
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import GradientConfig, projected_gradient_wsr, simple_mmse_run
from .channel import (
    ChannelSet,
    NetworkDims,
    apply_mismatch,
    generate_channels,
    snr_to_sigma_h,
)
from .filters import DegenerateInputError, PerNodePower, PowerConstraint, SumPower
from .optimizer import OptimizerConfig, run_algorithm1, weighted_sum_rate
from .robust import RobustContext

KNOWN_METHODS = ("wmmse", "simple_mmse", "gradient")

CSV_HEADER = (
    "snr_db",
    "method",
    "constraint",
    "robust",
    "mean_wsr",
    "std_err",
    "mean_iterations",
    "clamp_count",
)


@dataclass(frozen=True)
class RobustSettings:
    """CSI-mismatch configuration.

    sigma_delta_frac: true error variance as a fraction of sigma_h^2.
    sigma_eps_frac:   relative misestimate of that variance by the designer
                      (assumed = true * (1 + sigma_eps_frac)); 0 means the
                      designer knows the error statistics exactly.
    """

    sigma_delta_frac: float
    sigma_eps_frac: float = 0.0

    def __post_init__(self):
        if self.sigma_delta_frac < 0:
            raise ValueError(
                f"sigma_delta_frac must be >= 0, got {self.sigma_delta_frac}"
            )
        if self.sigma_eps_frac < -1:
            raise ValueError(
                f"sigma_eps_frac must be >= -1, got {self.sigma_eps_frac}"
            )


@dataclass
class ExperimentSpec:
    """Everything one reproducible experiment depends on."""

    dims: NetworkDims
    snr_db: Tuple[float, ...] = (0.0, 10.0, 20.0)
    mu: Optional[Sequence[float]] = None
    constraint: str = "sum"
    methods: Tuple[str, ...] = ("wmmse",)
    robust: Optional[RobustSettings] = None
    trials: int = 100
    master_seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    gradient: GradientConfig = field(default_factory=GradientConfig)
    workers: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        if len(self.snr_db) == 0:
            raise ValueError("snr_db grid must not be empty")
        self.snr_db = tuple(float(s) for s in self.snr_db)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        if self.constraint not in ("sum", "pernode"):
            raise ValueError(
                f"constraint must be 'sum' or 'pernode', got {self.constraint!r}"
            )
        if len(self.methods) == 0:
            raise ValueError("methods must not be empty")
        for m in self.methods:
            if m not in KNOWN_METHODS:
                raise ValueError(f"unknown method {m!r}; pick from {KNOWN_METHODS}")
        if self.mu is not None:
            mu = np.asarray(self.mu, dtype=np.float64)
            if mu.shape != (self.dims.K,):
                raise ValueError(
                    f"mu must have {self.dims.K} entries, got shape {mu.shape}"
                )
            if not np.all(mu > 0):
                raise ValueError("all mu entries must be > 0")
            self.mu = tuple(float(x) for x in mu)
        d, M, N, K = self.dims.d, self.dims.M, self.dims.N, self.dims.K
        if M + N < (K + 1) * d:
            warnings.warn(
                f"requested streams likely infeasible: M+N={M+N} < (K+1)d={(K+1)*d}; "
                "interference alignment cannot support this load",
                RuntimeWarning,
                stacklevel=2,
            )

    def rate_weights(self) -> np.ndarray:
        if self.mu is None:
            return np.ones(self.dims.K, dtype=np.float64)
        return np.asarray(self.mu, dtype=np.float64)


@dataclass(frozen=True)
class ResultRow:
    snr_db: float
    method: str
    constraint: str
    robust: str          # 'none', 'naive' or 'robust'
    mean_wsr: float
    std_err: float
    mean_iterations: float
    clamp_count: int


@dataclass
class ResultTable:
    rows: List[ResultRow]

    def find(self, snr_db: float, method: str, robust: str = "none") -> ResultRow:
        for r in self.rows:
            if r.snr_db == snr_db and r.method == method and r.robust == robust:
                return r
        raise KeyError((snr_db, method, robust))


@dataclass
class PointStats:
    """Per-trial outcomes of one (snr, method, design-variant) cell."""

    wsr: np.ndarray          # realized weighted sum rate, one entry per good trial
    iterations: np.ndarray
    clamps: np.ndarray
    failures: int            # trials lost to degenerate inputs

    @property
    def mean_wsr(self) -> float:
        return float(np.mean(self.wsr)) if self.wsr.size else float("nan")

    @property
    def std_err(self) -> float:
        if self.wsr.size < 2:
            return 0.0
        return float(np.std(self.wsr, ddof=1) / np.sqrt(self.wsr.size))


def _constraint_for(spec: ExperimentSpec) -> PowerConstraint:
    if spec.constraint == "sum":
        return SumPower(float(spec.dims.K))
    return PerNodePower(np.ones(spec.dims.K))


def design_cells(spec: ExperimentSpec) -> List[Tuple[str, str]]:
    """(method, variant) pairs a spec produces.

    Without mismatch every method runs once as 'none'.  With mismatch every
    method runs on the estimated channels as 'naive', and the weighted-MMSE
    method additionally runs its loaded variant as 'robust'.
    """
    cells: List[Tuple[str, str]] = []
    for m in spec.methods:
        if spec.robust is None:
            cells.append((m, "none"))
        else:
            cells.append((m, "naive"))
            if m == "wmmse":
                cells.append((m, "robust"))
    return cells


def evaluate_trial(
    spec: ExperimentSpec, snr_db: float, trial: int
) -> Dict[Tuple[str, str], Tuple[float, int, int, bool]]:
    """Run every requested (method, variant) on trial's channel draw.

    Returns cell -> (realized WSR, iterations, clamp events, succeeded).
    Seeding depends only on (master_seed, trial), never on how many other
    trials run or in which order.
    """
    dims = spec.dims
    mu = spec.rate_weights()
    constraint = _constraint_for(spec)
    sigma_h = snr_to_sigma_h(snr_db)
    truth = generate_channels(dims, sigma_h, (spec.master_seed, trial, 0))
    if spec.robust is not None:
        sigma_delta = spec.robust.sigma_delta_frac * sigma_h
        mismatched = apply_mismatch(truth, sigma_delta, (spec.master_seed, trial, 1))
        design = mismatched.estimated_channels
        assumed = sigma_delta * (1.0 + spec.robust.sigma_eps_frac)
    else:
        design = truth
        assumed = 0.0

    out: Dict[Tuple[str, str], Tuple[float, int, int, bool]] = {}
    for method, variant in design_cells(spec):
        try:
            if method == "wmmse":
                ctx = None
                if variant == "robust":
                    ctx = RobustContext(design, assumed)
                state, trace = run_algorithm1(
                    design, dims, mu, constraint,
                    config=spec.optimizer, robust_ctx=ctx,
                )
                wsr = weighted_sum_rate(truth, state.precoders, mu)
                out[(method, variant)] = (wsr, trace.iterations, trace.clamp_count, True)
            elif method == "simple_mmse":
                state, trace = simple_mmse_run(design, dims, mu, constraint, spec.optimizer)
                wsr = weighted_sum_rate(truth, state.precoders, mu)
                out[(method, variant)] = (wsr, trace.iterations, trace.clamp_count, True)
            else:
                V, trace = projected_gradient_wsr(design, dims, mu, constraint, spec.gradient)
                wsr = weighted_sum_rate(truth, V, mu)
                out[(method, variant)] = (wsr, trace.iterations, 0, True)
        except DegenerateInputError:
            out[(method, variant)] = (float("nan"), 0, 0, False)
    return out


def _trial_task(args):
    spec, snr_db, trial = args
    return snr_db, trial, evaluate_trial(spec, snr_db, trial)


def run_cells(spec: ExperimentSpec) -> Dict[Tuple[float, str, str], PointStats]:
    """Evaluate the full (snr x method x variant) grid, trial by trial."""
    tasks = [(spec, snr, t) for snr in spec.snr_db for t in range(spec.trials)]
    raw: Dict[Tuple[float, int], Dict] = {}
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for snr_db, trial, res in pool.map(_trial_task, tasks, chunksize=4):
                raw[(snr_db, trial)] = res
    else:
        for task in tasks:
            snr_db, trial, res = _trial_task(task)
            raw[(snr_db, trial)] = res

    cells: Dict[Tuple[float, str, str], PointStats] = {}
    for snr in spec.snr_db:
        for method, variant in design_cells(spec):
            wsr, iters, clamps, failures = [], [], [], 0
            for trial in range(spec.trials):
                w, it, cl, ok = raw[(snr, trial)][(method, variant)]
                if ok:
                    wsr.append(w)
                    iters.append(it)
                    clamps.append(cl)
                else:
                    failures += 1
            cells[(snr, method, variant)] = PointStats(
                np.asarray(wsr), np.asarray(iters), np.asarray(clamps), failures
            )
    return cells


def run_experiment(spec: ExperimentSpec) -> ResultTable:
    """Full Monte Carlo sweep reduced to one averaged row per cell."""
    cells = run_cells(spec)
    rows: List[ResultRow] = []
    for snr in spec.snr_db:
        for method, variant in design_cells(spec):
            st = cells[(snr, method, variant)]
            rows.append(
                ResultRow(
                    snr_db=float(snr),
                    method=method,
                    constraint=spec.constraint,
                    robust=variant,
                    mean_wsr=st.mean_wsr,
                    std_err=st.std_err,
                    mean_iterations=(
                        float(np.mean(st.iterations)) if st.iterations.size else 0.0
                    ),
                    clamp_count=int(np.sum(st.clamps)) if st.clamps.size else 0,
                )
            )
    return ResultTable(rows)


def _fmt(x: float) -> str:
    return "{:.6g}".format(float(x))


def table_to_csv_text(table: ResultTable) -> str:
    """Render with 6 significant digits, LF line endings, trailing newline."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in table.rows:
        writer.writerow(
            [
                _fmt(r.snr_db),
                r.method,
                r.constraint,
                r.robust,
                _fmt(r.mean_wsr),
                _fmt(r.std_err),
                _fmt(r.mean_iterations),
                str(int(r.clamp_count)),
            ]
        )
    return buf.getvalue()


def emit_csv(table: ResultTable, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(table_to_csv_text(table))
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def complexity_csv_text(
    k_values: Sequence[int],
    M: int = 5,
    N: int = 5,
    d: int = 2,
    I1: int = 10,
    I2: int = 10,
    I3: int = 10,
) -> str:
    """Sweep of the closed-form cost and feedback models over network size."""
    from .complexity import ComplexityParams, feedback_amounts, total_multiplications

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "K",
            "mults_gradient",
            "mults_wmmse_sum",
            "mults_wmmse_pernode",
            "feedback_gradient",
            "feedback_wmmse_sum",
            "feedback_wmmse_pernode",
        ]
    )
    for K in k_values:
        p = ComplexityParams(int(K), M, N, d, I1=I1, I2=I2, I3=I3)
        fb = feedback_amounts(p)
        writer.writerow(
            [
                str(int(K)),
                _fmt(total_multiplications(p, "gradient")),
                _fmt(total_multiplications(p, "wmmse_sum")),
                _fmt(total_multiplications(p, "wmmse_pernode")),
                _fmt(fb.gradient),
                _fmt(fb.wmmse_sum),
                _fmt(fb.wmmse_pernode),
            ]
        )
    return buf.getvalue()


def emit_complexity_csv(path: str, k_values: Sequence[int], **kw) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(complexity_csv_text(k_values, **kw))
    except OSError as exc:
        raise OSError(f"cannot write complexity table to {path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# flat key = value experiment files

_SPEC_DEFAULTS = {
    "k": "3", "m": "2", "n": "2", "d": "1",
    "snr_db": "0, 10, 20",
    "mu": "",
    "constraint": "sum",
    "methods": "wmmse",
    "robust": "off",
    "sigma_delta_frac": "0.1",
    "sigma_eps_frac": "0",
    "trials": "100",
    "seed": "0",
    "epsilon": "5e-3",
    "max_iters": "200",
    "init": "svd",
    "init_seed": "0",
    "restarts": "0",
    "bisection_tol": "1e-8",
    "grad_iters": "2000",
    "workers": "1",
    "out": "",
}


def load_spec_file(path: str) -> Dict[str, str]:
    """Parse a flat ``key = value`` file ('#' comments, blank lines ignored)."""
    mapping: Dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                body = line.split("#", 1)[0].strip()
                if not body:
                    continue
                if "=" not in body:
                    raise ValueError(
                        f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}"
                    )
                key, value = body.split("=", 1)
                key = key.strip().lower()
                if key not in _SPEC_DEFAULTS:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                mapping[key] = value.strip()
    except OSError as exc:
        raise OSError(f"cannot read experiment file {path!r}: {exc}") from exc
    return mapping


def _parse_floats(text: str) -> Tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def spec_from_mapping(
    mapping: Dict[str, str], overrides: Optional[Dict[str, str]] = None
) -> ExperimentSpec:
    """Combine defaults, file values and explicit overrides into a spec.

    Precedence: overrides > mapping > built-in defaults.
    """
    merged = dict(_SPEC_DEFAULTS)
    merged.update({k.lower(): v for k, v in mapping.items()})
    if overrides:
        merged.update({k.lower(): v for k, v in overrides.items() if v is not None})

    dims = NetworkDims(
        int(merged["k"]), int(merged["m"]), int(merged["n"]), int(merged["d"])
    )
    mu = _parse_floats(merged["mu"]) if merged["mu"].strip() else None
    methods = tuple(
        tok.strip() for tok in merged["methods"].replace(",", " ").split()
    )
    robust_flag = merged["robust"].strip().lower()
    if robust_flag in ("on", "true", "1", "yes"):
        robust = RobustSettings(
            float(merged["sigma_delta_frac"]), float(merged["sigma_eps_frac"])
        )
    elif robust_flag in ("off", "false", "0", "no"):
        robust = None
    else:
        raise ValueError(f"robust must be on/off, got {merged['robust']!r}")
    optimizer = OptimizerConfig(
        epsilon=float(merged["epsilon"]),
        max_iters=int(merged["max_iters"]),
        init=merged["init"],
        init_seed=int(merged["init_seed"]),
        restarts=int(merged["restarts"]),
        bisection_tol=float(merged["bisection_tol"]),
    )
    gradient = GradientConfig(outer_iters=int(merged["grad_iters"]))
    return ExperimentSpec(
        dims=dims,
        snr_db=_parse_floats(merged["snr_db"]),
        mu=mu,
        constraint=merged["constraint"].strip().lower(),
        methods=methods,
        robust=robust,
        trials=int(merged["trials"]),
        master_seed=int(merged["seed"]),
        optimizer=optimizer,
        gradient=gradient,
        workers=int(merged["workers"]),
        out=merged["out"].strip() or None,
    )
