"""Monte Carlo harness: recovery metrics, parameter sweeps and named presets."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .alphabet import PROB_MODES, DiscreteSignal, quantize, unit_circle_alphabet
from .baselines import standard_sbl_run
from .errors import InvalidArgument, NumericalFailure
from .gamp import GampConfig, gamp_run
from .measurement import MATRIX_KINDS, make_instance
from .vbi import VbiConfig, vbi_run

SOLVERS = ("vbi", "gamp", "standard-sbl")
AXES = ("snr_db", "delta", "L", "iteration")
VBI_PRIORS = ("non-informative", "true")
CSV_HEADER = ["sweep_param", "value", "solver", "metric", "value", "trials", "failures", "seed"]


def _values(x):
    return np.asarray(getattr(x, "values", x), dtype=complex).reshape(-1)


def mse_curve(estimate_history, x_true) -> list[float]:
    """``|x_e - x_true|^2 / N`` for every estimate in the history."""
    truth = _values(x_true)
    if len(estimate_history) == 0:
        raise InvalidArgument("estimate history is empty")
    out = []
    for est in estimate_history:
        e = _values(est)
        if e.shape != truth.shape:
            raise InvalidArgument(f"estimate of length {e.size} vs truth of length {truth.size}")
        out.append(float(np.sum(np.abs(e - truth) ** 2) / truth.size))
    return out


def _indices(sig):
    if isinstance(sig, DiscreteSignal):
        return sig.indices
    return np.asarray(sig).reshape(-1)


def _paired(estimates, truths):
    if len(estimates) != len(truths) or len(estimates) == 0:
        raise InvalidArgument("need the same positive number of estimates and truths")
    pairs = [(_indices(e), _indices(t)) for e, t in zip(estimates, truths)]
    for e, t in pairs:
        if e.shape != t.shape:
            raise InvalidArgument("estimate and truth lengths differ")
    return pairs


def ser(estimates, truths) -> float:
    """Fraction of symbol positions that differ, over all trials.

    Entries are quantized signals (or raw index arrays) compared by index.
    """
    pairs = _paired(estimates, truths)
    wrong = sum(int(np.count_nonzero(e != t)) for e, t in pairs)
    return wrong / sum(t.size for _, t in pairs)


def success_rate(estimates, truths) -> float:
    """Fraction of trials whose whole vector is recovered exactly."""
    pairs = _paired(estimates, truths)
    return sum(bool(np.array_equal(e, t)) for e, t in pairs) / len(pairs)


@dataclass
class SweepConfig:
    """One experiment: a single swept axis with everything else held fixed.

    ``axis="iteration"`` records the trial-averaged MSE after every solver
    iteration instead of sweeping a parameter; ``values`` is then ignored.
    ``snr_db=None`` means noise-free. ``vbi_prior`` chooses whether VBI sees
    the flat prior 1/L or the alphabet's actual probabilities (GAMP always
    uses the latter).
    """

    axis: str
    values: list = field(default_factory=list)
    N: int = 100
    L: int = 4
    delta: float = 0.7
    snr_db: Optional[float] = None
    matrix_kind: str = "iid-gaussian"
    trials: int = 200
    solvers: list = field(default_factory=lambda: list(SOLVERS))
    master_seed: int = 0
    prob_mode: str = "random-simplex"
    vbi_prior: str = "non-informative"
    max_iters: int = 100
    vbi: dict = field(default_factory=dict)
    gamp: dict = field(default_factory=dict)
    jobs: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidArgument(f"axis must be one of {AXES}, got {self.axis!r}")
        if self.axis != "iteration" and len(self.values) == 0:
            raise InvalidArgument("a parameter sweep needs at least one value")
        if self.trials < 1:
            raise InvalidArgument("trials must be at least 1")
        if self.N < 1 or self.L < 1 or self.max_iters < 1 or self.jobs < 1:
            raise InvalidArgument("N, L, max_iters and jobs must be positive")
        if self.matrix_kind not in MATRIX_KINDS:
            raise InvalidArgument(f"matrix_kind must be one of {MATRIX_KINDS}")
        if self.prob_mode not in PROB_MODES:
            raise InvalidArgument(f"prob_mode must be one of {PROB_MODES}")
        if self.vbi_prior not in VBI_PRIORS:
            raise InvalidArgument(f"vbi_prior must be one of {VBI_PRIORS}")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad or not self.solvers:
            raise InvalidArgument(f"solvers must be a nonempty subset of {SOLVERS}, got {self.solvers}")
        self.values = list(self.values)
        self.solvers = list(self.solvers)
        # build once so bad override keys fail here rather than inside a worker
        self.vbi_config()
        self.gamp_config()

    def vbi_config(self) -> VbiConfig:
        try:
            return VbiConfig(**{"max_iters": self.max_iters, **self.vbi})
        except TypeError as exc:
            raise InvalidArgument(f"bad vbi override: {exc}") from exc

    def gamp_config(self) -> GampConfig:
        try:
            return GampConfig(**{"max_iters": self.max_iters, **self.gamp})
        except TypeError as exc:
            raise InvalidArgument(f"bad gamp override: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> SweepConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidArgument(f"unknown sweep settings: {sorted(unknown)}")
        return cls(**data)

    def point(self, value) -> dict:
        """Instance parameters at one swept value."""
        p = {"L": self.L, "delta": self.delta, "snr_db": self.snr_db}
        if self.axis in p:
            p[self.axis] = int(value) if self.axis == "L" else (None if value is None else float(value))
        return p


@dataclass
class SweepRow:
    sweep_param: str
    value: float
    solver: str
    metric: str
    metric_value: float
    trials: int
    failures: int
    seed: int

    def as_list(self):
        return [self.sweep_param, self.value, self.solver, self.metric, self.metric_value, self.trials, self.failures, self.seed]


@dataclass
class SweepResult:
    rows: list
    config: dict
    wall_time: float
    # solver -> (trials x max_iters) MSE array; only for axis="iteration"
    histories: dict = field(default_factory=dict)

    def get(self, value, solver: str, metric: str) -> SweepRow:
        for r in self.rows:
            if r.solver == solver and r.metric == metric and np.isclose(r.value, value):
                return r
        raise KeyError((value, solver, metric))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow(r.as_list())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "wall_time_s": self.wall_time,
            "columns": CSV_HEADER,
            "rows": [r.as_list() for r in self.rows],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def _pad(history, length):
    h = list(history)[:length]
    if not h:
        return [np.nan] * length
    return h + [h[-1]] * (length - len(h))


def _solve(solver, inst, cfg: SweepConfig):
    """Run one solver; return (continuous estimate, MSE history)."""
    A, y, x = inst.A, inst.y, inst.x_true
    if solver == "vbi":
        alph = inst.alphabet.with_uniform_probs() if cfg.vbi_prior == "non-informative" else inst.alphabet
        res = vbi_run(A, y, alph, cfg.vbi_config(), x_true=x)
        return res.mu_final, res.mse_history
    if solver == "gamp":
        res = gamp_run(A, y, inst.alphabet, cfg.gamp_config(), x_true=x)
        return res.mu_x, res.mse_history
    res = standard_sbl_run(A, y, inst.alphabet, cfg.vbi_config(), x_true=x)
    return res.mu_final, res.mse_history


def _run_trial(args):
    cfg_dict, idx, value, trial = args
    cfg = SweepConfig.from_dict(cfg_dict)
    p = cfg.point(value)
    rng = np.random.default_rng([cfg.master_seed, idx, trial])
    alphabet = unit_circle_alphabet(p["L"], cfg.prob_mode, rng)
    inst = make_instance(alphabet, cfg.N, p["delta"], cfg.matrix_kind, p["snr_db"], rng)
    out = {}
    for solver in cfg.solvers:
        try:
            est, hist = _solve(solver, inst, cfg)
        except NumericalFailure:
            out[solver] = None
            continue
        q = quantize(est, alphabet).indices
        out[solver] = {
            "errors": int(np.count_nonzero(q != inst.x_true.indices)),
            "mse": float(np.mean(np.abs(est - inst.x_true.values) ** 2)),
            "history": _pad(hist, cfg.max_iters) if cfg.axis == "iteration" else None,
        }
    return out


def _map(tasks, jobs):
    if jobs <= 1:
        return [_run_trial(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        # map preserves submission order, so aggregation is schedule-independent
        return list(pool.map(_run_trial, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run every (swept value, trial) pair and aggregate per solver.

    Each trial draws its own alphabet probabilities, signal, matrix and
    noise from ``default_rng([master_seed, value_index, trial])``; all
    solvers see the same instance. A trial whose solver raises a numerical
    failure counts as entirely wrong for SER and success rate, is left out
    of the MSE average, and is tallied in ``failures``.
    """
    start = time.perf_counter()
    cfg_dict = config.to_dict()
    points = [None] if config.axis == "iteration" else config.values
    rows, histories = [], {}
    for idx, value in enumerate(points):
        tasks = [(cfg_dict, idx, value, t) for t in range(config.trials)]
        outcomes = _map(tasks, config.jobs)
        for solver in config.solvers:
            per = [o[solver] for o in outcomes]
            ok = [r for r in per if r is not None]
            failures = len(per) - len(ok)
            if config.axis == "iteration":
                H = np.array([r["history"] for r in ok]) if ok else np.full((0, config.max_iters), np.nan)
                histories[solver] = H
                mean = H.mean(axis=0) if ok else np.full(config.max_iters, np.nan)
                for i, m in enumerate(mean, start=1):
                    rows.append(SweepRow("iteration", i, solver, "mse", float(m), config.trials, failures, config.master_seed))
                continue
            errors = sum(r["errors"] for r in ok) + failures * config.N
            exact = sum(r["errors"] == 0 for r in ok)
            mse = float(np.mean([r["mse"] for r in ok])) if ok else float("nan")
            v = None if value is None else float(value)
            for metric, mval in (
                ("ser", errors / (config.trials * config.N)),
                ("success_rate", exact / config.trials),
                ("mse", mse),
            ):
                rows.append(SweepRow(config.axis, v, solver, metric, mval, config.trials, failures, config.master_seed))
    return SweepResult(rows, cfg_dict, time.perf_counter() - start, histories)


def run_convergence(config: SweepConfig) -> SweepResult:
    if config.axis != "iteration":
        raise InvalidArgument("convergence runs use axis='iteration'")
    return run_sweep(config)


SNR_GRID = [float(s) for s in range(0, 31, 3)]
DELTA_GRID = [round(0.1 * k, 1) for k in range(1, 11)]
L_GRID = list(range(2, 17, 2))

PRESETS = {
    "fig1a": dict(axis="iteration", delta=0.7, L=8, snr_db=30.0, matrix_kind="iid-gaussian"),
    "fig1b": dict(axis="iteration", delta=0.8, L=16, snr_db=None, matrix_kind="iid-gaussian"),
    "fig2a": dict(axis="iteration", delta=0.7, L=8, snr_db=30.0, matrix_kind="correlated"),
    "fig2b": dict(axis="iteration", delta=0.8, L=16, snr_db=None, matrix_kind="correlated"),
    "fig3a": dict(axis="snr_db", values=SNR_GRID, delta=0.7, L=4, matrix_kind="iid-gaussian"),
    "fig3b": dict(axis="snr_db", values=SNR_GRID, delta=0.8, L=8, matrix_kind="iid-gaussian"),
    "fig3c": dict(axis="snr_db", values=SNR_GRID, delta=0.9, L=16, matrix_kind="iid-gaussian"),
    "fig4a": dict(axis="snr_db", values=SNR_GRID, delta=0.7, L=4, matrix_kind="correlated"),
    "fig4b": dict(axis="snr_db", values=SNR_GRID, delta=0.8, L=8, matrix_kind="correlated"),
    "fig4c": dict(axis="snr_db", values=SNR_GRID, delta=0.9, L=16, matrix_kind="correlated"),
    "fig5a": dict(axis="delta", values=DELTA_GRID, L=4, snr_db=None, matrix_kind="iid-gaussian"),
    "fig5b": dict(axis="delta", values=DELTA_GRID, L=8, snr_db=None, matrix_kind="iid-gaussian"),
    "fig6a": dict(axis="delta", values=DELTA_GRID, L=3, snr_db=None, matrix_kind="correlated"),
    "fig6b": dict(axis="delta", values=DELTA_GRID, L=6, snr_db=None, matrix_kind="correlated"),
    "fig_L_a": dict(axis="L", values=L_GRID, delta=0.8, snr_db=20.0, matrix_kind="correlated"),
    "fig_L_b": dict(axis="L", values=L_GRID, delta=0.8, snr_db=20.0, matrix_kind="iid-gaussian"),
}


def preset(name: str, **overrides) -> SweepConfig:
    if name not in PRESETS:
        raise InvalidArgument(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return SweepConfig(**{**PRESETS[name], **overrides})
