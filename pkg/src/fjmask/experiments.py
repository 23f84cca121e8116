"""Monte Carlo sweeps of the eavesdropper's estimate error over one system hyperparameter."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from ._validation import as_entropy, check_positive
from .attacker import KnowledgeSet, neighbor_opinions
from .dynamics import is_stable, random_fj_system, susceptibility_bounds
from .exceptions import NumericalError, ParameterError
from .mask import MaskConfig, simulate_masked
from .metrics import estimate_error, information_matrix
from .network import random_regular_network

log = logging.getLogger(__name__)

SWEPT = ("phi", "susceptibility_midpoint", "degree")
CONFIG_KEYS = ("n", "d", "phi", "eps", "lambda_lo", "lambda_hi", "swept", "values", "trials", "seed")
MIDPOINT_WIDTH = 0.1
DEFAULT_T_MAX = 100_000
TARGET_AGENT = 0


class TrialExcluded(NumericalError):
    """A trial that did not produce a usable estimate error (unstable or not converged)."""


@dataclass(frozen=True)
class TrialParams:
    n: int = 100
    d: int = 10
    phi: float = 0.3
    eps: float = 1e-4
    lambda_lo: float = 0.0
    lambda_hi: float = 1.0
    t_max: int = DEFAULT_T_MAX

    def validate(self) -> "TrialParams":
        if self.n < 1 or not 1 <= self.d <= self.n:
            raise ParameterError(f"need 1 <= d <= n, got n={self.n}, d={self.d}")
        check_positive("phi", self.phi)
        check_positive("eps", self.eps)
        if not 0.0 <= self.lambda_lo <= self.lambda_hi <= 1.0:
            raise ParameterError("need 0 <= lambda_lo <= lambda_hi <= 1")
        if self.t_max < 1:
            raise ParameterError("t_max must be at least 1")
        return self

    def with_swept(self, swept: str, value) -> "TrialParams":
        if swept == "phi":
            return replace(self, phi=float(value))
        if swept == "degree":
            if float(value) != int(value):
                raise ParameterError(f"degree must be an integer, got {value}")
            return replace(self, d=int(value))
        if swept == "susceptibility_midpoint":
            if not 0.05 <= float(value) <= 0.95:
                raise ParameterError(f"susceptibility midpoint must lie in [0.05, 0.95], got {value}")
            lo, hi = susceptibility_bounds(float(value), MIDPOINT_WIDTH)
            return replace(self, lambda_lo=lo, lambda_hi=hi)
        raise ParameterError(f"unknown swept parameter {swept!r}; expected one of {SWEPT}")


@dataclass(frozen=True)
class SweepConfig:
    swept: str
    values: tuple
    trials: int
    seed: int
    n: int = 100
    d: int = 10
    phi: float = 0.3
    eps: float = 1e-4
    lambda_lo: float = 0.0
    lambda_hi: float = 1.0
    t_max: int = DEFAULT_T_MAX

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if self.swept not in SWEPT:
            raise ParameterError(f"unknown swept parameter {self.swept!r}; expected one of {SWEPT}")
        if not self.values:
            raise ParameterError("values must not be empty")
        if int(self.trials) < 1:
            raise ParameterError(f"trials must be at least 1, got {self.trials}")
        as_entropy(self.seed)
        for v in self.values:
            self.params_for(v)

    @property
    def base(self) -> TrialParams:
        return TrialParams(self.n, self.d, self.phi, self.eps, self.lambda_lo, self.lambda_hi, self.t_max)

    def params_for(self, value) -> TrialParams:
        return self.base.with_swept(self.swept, value).validate()

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepConfig":
        unknown = sorted(set(doc) - set(CONFIG_KEYS))
        if unknown:
            raise ParameterError(f"unknown config keys: {unknown}")
        missing = [k for k in ("swept", "values", "trials", "seed") if k not in doc]
        if missing:
            raise ParameterError(f"config is missing keys: {missing}")
        kw = dict(doc)
        kw["values"] = tuple(kw["values"])
        return cls(**kw)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("t_max")
        doc["values"] = list(self.values)
        return {k: doc[k] for k in CONFIG_KEYS}


def load_config(path) -> SweepConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(text)
    else:
        doc = json.loads(text)
    return SweepConfig.from_dict(doc)


def trial_seed(master_seed: int, trial: int) -> int:
    """Seed of trial ``trial``; shared by every swept value (common random numbers)."""
    ss = np.random.SeedSequence([as_entropy(master_seed), trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(params: TrialParams, seed: int, *, target: int = TARGET_AGENT) -> float:
    """One end-to-end sample of the estimate error for the target agent.

    Random network, random system, masked run to tolerance, then the
    information matrix of the target's observations. Raises
    :class:`TrialExcluded` when the system is unstable or the run does not
    converge within ``params.t_max`` steps.
    """
    params.validate()
    net_seed, sys_seed, mask_seed = (
        int(s) for s in np.random.SeedSequence(as_entropy(seed)).generate_state(3, dtype=np.uint64)
    )
    net = random_regular_network(params.n, params.d, net_seed)
    sys = random_fj_system(net, params.lambda_lo, params.lambda_hi, sys_seed)
    if not is_stable(sys):
        raise TrialExcluded("sampled system is unstable")
    try:
        run = simulate_masked(
            sys, MaskConfig(params.phi, mask_seed), params.eps, params.t_max, log_noise=False
        )
    except NumericalError as exc:
        raise TrialExcluded(str(exc)) from exc
    if not run.trajectory.converged:
        raise TrialExcluded(f"no convergence within t_max={params.t_max}")
    K = KnowledgeSet.observe(sys, run.trajectory)
    A = neighbor_opinions(K, target)
    if params.d == 1:
        return 0.0
    return estimate_error(information_matrix(A, params.phi))


def _trial_task(args):
    params, seed = args
    try:
        return run_trial(params, seed)
    except TrialExcluded as exc:
        log.info("trial excluded: %s", exc)
        return math.nan


@dataclass(frozen=True)
class SweepResult:
    """Estimate errors, one row per swept value and one column per trial.

    Excluded trials are stored as NaN; unrecoverable rows as +inf.
    """

    config: SweepConfig
    errors: np.ndarray

    @property
    def values(self) -> tuple:
        return self.config.values

    def excluded(self) -> np.ndarray:
        return np.isnan(self.errors).sum(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("swept_value,trial,estimate_error\n")
        for v, row in zip(self.values, self.errors):
            for k, e in enumerate(row):
                buf.write(f"{_fmt(v)},{k},{_fmt(e)}\n")
        return buf.getvalue()

    def summary_csv(self) -> str:
        return summary_to_csv(summarize(self))


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def run_sweep(cfg: SweepConfig, workers: int = 1) -> SweepResult:
    """Run ``trials`` trials per swept value.

    Results are placed by (value index, trial index), so the output is the
    same for any number of workers.
    """
    tasks = [
        (cfg.params_for(v), trial_seed(cfg.seed, k))
        for v in cfg.values
        for k in range(cfg.trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        flat = [_trial_task(t) for t in tasks]
    errors = np.array(flat, dtype=float).reshape(len(cfg.values), cfg.trials)
    res = SweepResult(cfg, errors)
    for v, ex in zip(cfg.values, res.excluded()):
        if ex:
            log.warning("swept value %s: %d of %d trials excluded", v, ex, cfg.trials)
    return res


SUMMARY_FIELDS = (
    "swept_value", "trials", "excluded", "finite", "fraction_infinite",
    "min", "q1", "median", "q3", "max", "mean",
)


def summarize_errors(errors) -> dict:
    """Quartiles (linear interpolation) of the finite errors plus counts.

    NaN entries count as excluded; infinite ones are reported through
    ``fraction_infinite`` (a fraction of the included trials) and left out
    of the quartiles and the mean.
    """
    e = np.asarray(errors, dtype=float).reshape(-1)
    included = e[~np.isnan(e)]
    finite = included[np.isfinite(included)]
    row = {
        "trials": int(e.size),
        "excluded": int(e.size - included.size),
        "finite": int(finite.size),
        "fraction_infinite": (
            float(np.isinf(included).sum() / included.size) if included.size else math.nan
        ),
    }
    if finite.size:
        q = np.percentile(finite, [0, 25, 50, 75, 100], method="linear")
        row.update(min=q[0], q1=q[1], median=q[2], q3=q[3], max=q[4], mean=float(finite.mean()))
    else:
        row.update({k: math.nan for k in ("min", "q1", "median", "q3", "max", "mean")})
    return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in row.items()}


def summarize(result: SweepResult) -> list[dict]:
    if result.errors.size == 0:
        raise ParameterError("cannot summarise an empty result")
    return [{"swept_value": v, **summarize_errors(row)} for v, row in zip(result.values, result.errors)]


def summary_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(",".join(SUMMARY_FIELDS) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(row[k]) for k in SUMMARY_FIELDS) + "\n")
    return buf.getvalue()


def read_results_csv(path) -> list[tuple[float, int, float]]:
    """Rows ``(swept_value, trial, estimate_error)`` of a results file."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["swept_value", "trial", "estimate_error"]:
            raise ParameterError(f"{path}: not a sweep results file (header {header})")
        try:
            rows = [(float(r[0]), int(r[1]), float(r[2])) for r in reader if r]
        except (ValueError, IndexError) as exc:
            raise ParameterError(f"{path}: malformed row ({exc})") from exc
    if not rows:
        raise ParameterError(f"{path}: no data rows")
    return rows


def write_outputs(result: SweepResult, out_dir, overwrite: bool = False) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res_path, sum_path = out / "results.csv", out / "summary.csv"
    if not overwrite and (res_path.exists() or sum_path.exists()):
        raise FileExistsError(f"{out} already holds sweep output; pass overwrite to replace it")
    res_path.write_text(result.to_csv())
    sum_path.write_text(result.summary_csv())
    return res_path, sum_path
