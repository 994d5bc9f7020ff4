"""Monte Carlo sweeps over (p, gamma, beta) grids.

Each trial draws its own training and test sets from a seed derived from
``(master_seed, p, gamma, beta, trial)``, trains by gradient descent and
records both errors. Trials are independent, so they can be farmed out to
worker processes; aggregation sorts by cell and trial first, which makes the
output independent of scheduling.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from threadpoolctl import threadpool_limits

from .datagen import MeanSpec, MixtureConfig, generate_dataset, mixing_matrix
from .errors import ConfigError, HeavyBOError
from .rng import derive_seed
from .trainer import TrainConfig, evaluate_error, gd_train, is_linearly_separable

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "p",
    "gamma",
    "beta",
    "trials_used",
    "mean_train_error",
    "mean_test_error",
    "sem_test_error",
    "ci95_halfwidth",
    "failed_trials",
]
TRIAL_COLUMNS = ["p", "gamma", "beta", "trial", "seed", "train_error", "test_error", "final_loss", "separable", "status"]
MAX_FAILED_FRACTION = 0.2


@dataclass(frozen=True)
class SweepGrid:
    p_values: tuple = (100, 400, 800, 1500)
    gamma_values: tuple = (0.25, 0.5, 2.0)
    beta_values: tuple = (1e-3,)
    n_train: int = 200
    n_test: int = 1000
    eta: float = 0.05
    mean: MeanSpec = field(default_factory=MeanSpec.dense)
    mixing: str = "haar"
    calibration: str = "variance"
    trials: int = 20
    epochs: int = 100_000
    master_seed: int = 0
    shared_test_set: bool = False

    def __post_init__(self):
        for name in ("p_values", "gamma_values", "beta_values"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must not be empty")
        if self.trials < 1 or self.epochs < 1 or self.n_train < 1 or self.n_test < 1:
            raise ConfigError("trials, epochs, n_train and n_test must be >= 1")
        if not 0 <= self.eta <= 1:
            raise ConfigError("eta must lie in [0, 1]")
        if self.mixing not in ("identity", "haar") or self.calibration not in ("variance", "orlicz"):
            raise ConfigError("bad mixing or calibration mode")

    def cells(self):
        return list(itertools.product(self.p_values, self.gamma_values, self.beta_values))


@dataclass
class TrialResult:
    p: int
    gamma: float
    beta: float
    trial: int
    seed: int
    train_error: float = math.nan
    test_error: float = math.nan
    separable: Optional[bool] = None
    final_loss: float = math.nan
    wall_time: float = 0.0
    failed: bool = False
    message: str = ""


@dataclass
class AggregateCell:
    p: int
    gamma: float
    beta: float
    trials_used: int
    failed_trials: int
    mean_train_error: float
    mean_test_error: float
    sem_test_error: Optional[float]

    @property
    def ci95_halfwidth(self) -> Optional[float]:
        return None if self.sem_test_error is None else 1.96 * self.sem_test_error

    @property
    def valid(self) -> bool:
        total = self.trials_used + self.failed_trials
        return self.trials_used > 0 and self.failed_trials <= MAX_FAILED_FRACTION * total


def trial_seed(grid: SweepGrid, p, gamma, beta, trial) -> int:
    return derive_seed(grid.master_seed, int(p), float(gamma), float(beta), int(trial))


def run_trial(p, gamma, beta, grid: SweepGrid, seed: int, trial: int = 0) -> TrialResult:
    """Fresh train/test draw, gradient descent, both error rates.

    Numerical failures are caught and returned as a failed result.
    """
    t0 = time.perf_counter()
    result = TrialResult(p=p, gamma=gamma, beta=beta, trial=trial, seed=seed)
    cfg = MixtureConfig(
        p=p,
        n=grid.n_train,
        shape=gamma,
        calibration=grid.calibration,
        mean=grid.mean,
        noise_rate=grid.eta,
        mixing=grid.mixing,
        seed=seed,
    )
    try:
        with threadpool_limits(limits=1):
            u = mixing_matrix(cfg)
            train = generate_dataset(cfg, mixing=u)
            if grid.shared_test_set:
                test_cfg = replace(cfg, seed=derive_seed(grid.master_seed, "test", p, gamma))
                test = generate_dataset(test_cfg, count=grid.n_test, mixing=mixing_matrix(test_cfg))
            else:
                test = generate_dataset(cfg, offset=grid.n_train, count=grid.n_test, mixing=u)
            state = gd_train(train, TrainConfig(learning_rate=beta, epochs=grid.epochs))
            result.train_error = evaluate_error(state.theta, train)
            result.test_error = evaluate_error(state.theta, test)
            result.final_loss = state.loss
            result.separable = True if result.train_error == 0 else is_linearly_separable(train)[0]
    except (HeavyBOError, FloatingPointError, np.linalg.LinAlgError) as exc:
        result.failed = True
        result.message = f"{type(exc).__name__}: {exc}"
        log.warning("trial p=%s gamma=%s beta=%s #%d failed: %s", p, gamma, beta, trial, result.message)
    result.wall_time = time.perf_counter() - t0
    return result


def _job(args):
    grid, p, gamma, beta, trial = args
    return run_trial(p, gamma, beta, grid, trial_seed(grid, p, gamma, beta, trial), trial)


def aggregate(results) -> list:
    """Fold trial results into one cell per (p, gamma, beta), in sorted order."""
    results = sorted(results, key=lambda r: (r.p, r.gamma, r.beta, r.trial))
    cells = []
    for key, group in itertools.groupby(results, key=lambda r: (r.p, r.gamma, r.beta)):
        group = list(group)
        ok = [r for r in group if not r.failed]
        test = np.array([r.test_error for r in ok])
        train = np.array([r.train_error for r in ok])
        sem = float(test.std(ddof=1) / math.sqrt(len(ok))) if len(ok) > 1 else None
        cells.append(
            AggregateCell(
                p=key[0],
                gamma=key[1],
                beta=key[2],
                trials_used=len(ok),
                failed_trials=len(group) - len(ok),
                mean_train_error=float(train.mean()) if ok else math.nan,
                mean_test_error=float(test.mean()) if ok else math.nan,
                sem_test_error=sem,
            )
        )
    return cells


def run_sweep(grid: SweepGrid, workers: int = 1, return_trials: bool = False):
    """Run every (cell, trial) of ``grid``; return the aggregate cells.

    With ``return_trials`` the per-trial results come back as a second value.
    """
    jobs = [(grid, p, g, b, t) for (p, g, b) in grid.cells() for t in range(grid.trials)]
    log.info("sweep: %d cells x %d trials on %d worker(s)", len(grid.cells()), grid.trials, workers)
    if workers <= 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_job, jobs, chunksize=1))
    cells = aggregate(results)
    for c in cells:
        if not c.valid:
            log.warning("cell p=%s gamma=%s beta=%s invalid: %d failed trials", c.p, c.gamma, c.beta, c.failed_trials)
    return (cells, results) if return_trials else cells


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def emit_csv(cells, path) -> None:
    if not cells:
        raise ConfigError("nothing to write: empty table")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in cells:
            w.writerow(
                [
                    _fmt(c.p),
                    _fmt(float(c.gamma)),
                    _fmt(float(c.beta)),
                    _fmt(c.trials_used),
                    _fmt(c.mean_train_error),
                    _fmt(c.mean_test_error),
                    _fmt(c.sem_test_error),
                    _fmt(c.ci95_halfwidth),
                    _fmt(c.failed_trials),
                ]
            )


def emit_trials_csv(results, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRIAL_COLUMNS)
        for r in sorted(results, key=lambda r: (r.p, r.gamma, r.beta, r.trial)):
            sep = "" if r.separable is None else int(bool(r.separable))
            status = "ok" if not r.failed else r.message
            w.writerow(
                [r.p, _fmt(float(r.gamma)), _fmt(float(r.beta)), r.trial, r.seed,
                 _fmt(r.train_error), _fmt(r.test_error), _fmt(r.final_loss), sep, status]
            )


def read_csv(path) -> list:
    """Load an aggregate table written by :func:`emit_csv`."""
    cells = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ConfigError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            num = lambda k: float(row[k]) if row[k] != "" else math.nan
            cells.append(
                AggregateCell(
                    p=int(row["p"]),
                    gamma=float(row["gamma"]),
                    beta=float(row["beta"]),
                    trials_used=int(row["trials_used"]),
                    failed_trials=int(row["failed_trials"]),
                    mean_train_error=num("mean_train_error"),
                    mean_test_error=num("mean_test_error"),
                    sem_test_error=None if row["sem_test_error"] == "" else float(row["sem_test_error"]),
                )
            )
    return cells


# -- config files -----------------------------------------------------------

_SEQ_FIELDS = {"p_values": int, "gamma_values": float, "beta_values": float}
_SCALAR_FIELDS = {
    "n_train": int,
    "n_test": int,
    "eta": float,
    "trials": int,
    "epochs": int,
    "master_seed": int,
    "mixing": str,
    "calibration": str,
    "mean": MeanSpec.parse,
    "shared_test_set": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}


def parse_grid_values(values: dict, base: Optional[SweepGrid] = None) -> SweepGrid:
    """Build a grid from string values keyed by SweepGrid field names."""
    kwargs = {}
    for key, raw in values.items():
        if raw is None:
            continue
        try:
            if key in _SEQ_FIELDS:
                kwargs[key] = tuple(_SEQ_FIELDS[key](v) for v in str(raw).split(",") if v.strip())
            elif key in _SCALAR_FIELDS:
                kwargs[key] = _SCALAR_FIELDS[key](str(raw).strip())
            else:
                raise ConfigError(f"unknown sweep setting {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return replace(base or SweepGrid(), **kwargs)


def load_grid(path) -> SweepGrid:
    """Read ``key = value`` lines; sequences are comma separated, ``#`` comments."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            values[key.strip()] = val.strip()
    return parse_grid_values(values)
