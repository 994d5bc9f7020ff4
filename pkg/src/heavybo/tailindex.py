"""Tail-index estimation from upper order statistics.

For centred absolute values sorted in decreasing order, the i-th largest
``x_(i)`` is paired with ``z_i = -log(i / n)``, an estimate of
``-log P(|X| >= x_(i))``. Fitting ``z = a x^xi + b`` over the top fraction
of the sample gives the tail index ``xi``: about 2 for Gaussian tails, 1 for
exponential tails, smaller for heavier ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DataError, FitError

XI_MIN, XI_MAX = 0.05, 4.0
GRID_STEP = 0.01
XI_TOL = 1e-4


@dataclass(frozen=True)
class TailPoints:
    x: np.ndarray  # descending
    z: np.ndarray
    n_total: int

    def __len__(self):
        return len(self.x)


@dataclass(frozen=True)
class TailFit:
    xi: float
    a: float
    b: float
    rss: float
    at_boundary: bool = False


@dataclass
class ColumnFit:
    column: int
    fit: Optional[TailFit]
    status: str  # "ok", "boundary" or an error message


@dataclass
class TailSummary:
    columns: list = field(default_factory=list)
    mean_xi: Optional[float] = None
    var_xi: Optional[float] = None

    @property
    def n_ok(self) -> int:
        return sum(c.fit is not None for c in self.columns)


def tail_points(samples, fraction: float = 0.05) -> TailPoints:
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if not 0 < fraction <= 1:
        raise DataError("fraction must lie in (0, 1]")
    k = math.floor(fraction * n + 1e-9)
    if k < 1:
        raise DataError(f"{n} samples leave an empty upper {fraction:g} tail")
    dev = np.abs(x - x.mean())
    if not np.any(dev > 0):
        raise DataError("samples have zero spread")
    order = np.argsort(-dev, kind="stable")[:k]
    i = np.arange(1, k + 1)
    return TailPoints(x=dev[order], z=-np.log(i / n), n_total=n)


def _linear_fit(x, z, xi):
    """Closed-form least squares of z on [x^xi, 1]; returns (a, b, rss)."""
    u = x**xi
    uc = u - u.mean()
    suu = uc @ uc
    if not suu > 1e-300 or not np.isfinite(suu):
        return math.nan, math.nan, math.inf
    a = (uc @ (z - z.mean())) / suu
    b = z.mean() - a * u.mean()
    r = a * u + b - z
    return float(a), float(b), float(r @ r)


def fit_tail_index(points: TailPoints) -> TailFit:
    """Least-squares fit of ``z = a x^xi + b``.

    ``xi`` is searched on a 0.01 grid over [0.05, 4], with ``a`` and ``b``
    solved exactly at each grid point; the best grid point is then refined
    by golden-section search inside its neighbouring grid cells.
    """
    x, z = np.asarray(points.x, dtype=float), np.asarray(points.z, dtype=float)
    if x.size < 3:
        raise FitError("need at least 3 tail points")
    if np.ptp(x) == 0:
        raise FitError("tail points have a single distinct x value")
    # rescaling x leaves xi unchanged and keeps x^xi well conditioned
    scale = float(np.max(x))
    xs = x / scale

    grid = np.round(np.arange(XI_MIN, XI_MAX + GRID_STEP / 2, GRID_STEP), 10)
    rss = np.array([_linear_fit(xs, z, g)[2] for g in grid])
    if not np.any(np.isfinite(rss)):
        raise FitError("degenerate design at every grid point")
    j = int(np.argmin(rss))
    best_xi, best_rss = float(grid[j]), float(rss[j])

    lo, hi = grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)]
    if lo < best_xi < hi:
        res = minimize_scalar(
            lambda t: _linear_fit(xs, z, t)[2],
            bracket=(lo, best_xi, hi),
            method="golden",
            options={"xtol": XI_TOL / max(best_xi, 1.0)},
        )
        if XI_MIN <= res.x <= XI_MAX and res.fun <= best_rss:
            best_xi, best_rss = float(res.x), float(res.fun)

    a, b, rss_final = _linear_fit(xs, z, best_xi)
    # undo the x rescaling: a (x/scale)^xi = (a scale^-xi) x^xi
    a = a * scale ** (-best_xi)
    at_boundary = best_xi - XI_MIN < 2 * GRID_STEP or XI_MAX - best_xi < 2 * GRID_STEP
    return TailFit(xi=best_xi, a=a, b=b, rss=rss_final, at_boundary=at_boundary)


def estimate_dataset_tails(features, fraction: float = 0.05) -> TailSummary:
    """Fit every column of a (samples x features) matrix.

    Columns that cannot be fitted are kept in the report with their error as
    status and left out of the mean and variance of ``xi``.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    if features.shape[1] < 1:
        raise DataError("no feature columns")
    summary = TailSummary()
    for j in range(features.shape[1]):
        try:
            fit = fit_tail_index(tail_points(features[:, j], fraction))
        except DataError as exc:
            summary.columns.append(ColumnFit(j, None, f"failed: {exc}"))
            continue
        summary.columns.append(ColumnFit(j, fit, "boundary" if fit.at_boundary else "ok"))
    xis = np.array([c.fit.xi for c in summary.columns if c.fit is not None])
    if xis.size:
        summary.mean_xi = float(xis.mean())
        summary.var_xi = float(xis.var(ddof=1)) if xis.size > 1 else 0.0
    return summary
