"""Logistic-loss gradient descent and the hard-margin predictor it converges to.

The empirical risk is the unnormalised sum

    R(theta) = sum_k log(1 + exp(-y_k theta . x_k))

and training starts from ``theta = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit

from .datagen import Dataset, z_matrix
from .errors import ConfigError, ConvergenceError, DivergenceError, DomainError, NotSeparableError

DIRECTION_WINDOW = 1000


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 100_000
    direction_tol: float = 0.0
    log_every: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.direction_tol < 0 or self.log_every < 0:
            raise ConfigError("direction_tol and log_every must be non-negative")


@dataclass
class LogRow:
    epoch: int
    loss: float
    grad_norm: float
    train_error: float
    cosine_to_oracle: Optional[float] = None


@dataclass
class ModelState:
    theta: np.ndarray
    epoch: int
    loss: float
    grad_norm: float
    monotone: bool = True  # loss never increased between consecutive epochs
    first_increase: Optional[int] = None
    history: list = field(default_factory=list)

    @property
    def direction(self):
        return self.theta / np.linalg.norm(self.theta)


@dataclass
class MarginSolution:
    w: np.ndarray
    min_margin: float
    dual: np.ndarray
    sweeps: int = 0

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.w))


def _check_dims(theta, ds):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ds.p,):
        raise DomainError(f"theta has shape {theta.shape}, dataset has p={ds.p}")
    return theta


def _loss_from_margins(m):
    # logaddexp(0, -m) is log1p(exp(-m)) for m >= 0 and -m + log1p(exp(m)) otherwise
    return float(np.sum(np.logaddexp(0.0, -m)))


def logistic_loss(theta, ds: Dataset) -> float:
    theta = _check_dims(theta, ds)
    return _loss_from_margins(z_matrix(ds).T @ theta)


def loss_gradient(theta, ds: Dataset) -> np.ndarray:
    """-sum_k z_k / (1 + exp(theta . z_k))."""
    theta = _check_dims(theta, ds)
    z = z_matrix(ds)
    return -(z @ expit(-(z.T @ theta)))


def gd_train(ds: Dataset, cfg: TrainConfig, oracle: Optional[np.ndarray] = None) -> ModelState:
    """Full-batch gradient descent from zero.

    Because every iterate lies in the span of the label-signed samples, the
    iteration runs on the coefficient vector ``a`` with ``theta = Z a``
    whenever ``n < 2p``; each epoch then costs an ``n x n`` product instead
    of two ``p x n`` ones. The recorded trajectory is identical in exact
    arithmetic.

    With ``cfg.log_every`` set, a ``LogRow`` is appended to ``history`` at
    epoch 0, every ``log_every`` epochs and at the end; ``oracle`` (a
    direction to compare against) fills the cosine column.
    """
    z = z_matrix(ds)
    p, n = z.shape
    beta = cfg.learning_rate
    use_gram = n < 2 * p
    if use_gram:
        gram = z.T @ z
        coef = np.zeros(n)
    else:
        theta = np.zeros(p)
    oracle_dir = None if oracle is None else oracle / np.linalg.norm(oracle)

    def current_theta():
        return z @ coef if use_gram else theta.copy()

    def grad_norm(s):
        if use_gram:
            return float(np.sqrt(max(s @ gram @ s, 0.0)))
        return float(np.linalg.norm(z @ s))

    def log(epoch, m, loss, s):
        cos = None
        if oracle_dir is not None:
            th = current_theta()
            nrm = np.linalg.norm(th)
            cos = float(th @ oracle_dir / nrm) if nrm > 0 else 0.0
        state.history.append(LogRow(epoch, loss, grad_norm(s), float(np.mean(m <= 0)), cos))

    state = ModelState(theta=np.zeros(p), epoch=0, loss=0.0, grad_norm=0.0)
    prev_loss = np.inf
    prev_dir = None
    epoch = 0
    while True:
        m = gram @ coef if use_gram else z.T @ theta
        loss = _loss_from_margins(m)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        if loss > prev_loss * (1 + 1e-12) and state.monotone:
            state.monotone = False
            state.first_increase = epoch
        prev_loss = loss
        s = expit(-m)
        if cfg.log_every and (epoch % cfg.log_every == 0 or epoch == cfg.epochs):
            log(epoch, m, loss, s)
        if epoch == cfg.epochs:
            break
        if cfg.direction_tol > 0 and epoch % DIRECTION_WINDOW == 0 and epoch > 0:
            th = current_theta()
            d = th / np.linalg.norm(th)
            if prev_dir is not None and np.linalg.norm(d - prev_dir) <= cfg.direction_tol:
                if cfg.log_every and state.history[-1].epoch != epoch:
                    log(epoch, m, loss, s)
                break
            prev_dir = d
        if use_gram:
            coef += beta * s
        else:
            theta += beta * (z @ s)
        epoch += 1

    state.theta = current_theta()
    state.epoch = epoch
    state.loss = loss
    state.grad_norm = grad_norm(s)
    if not np.all(np.isfinite(state.theta)):
        raise DivergenceError(epoch)
    return state


def _lp_separator(z):
    """A u with z_k . u >= 1 for all k, or None when none exists."""
    p, n = z.shape
    res = linprog(
        np.zeros(p), A_ub=-z.T, b_ub=-np.ones(n), bounds=[(None, None)] * p, method="highs"
    )
    if res.status == 0:
        return res.x
    if res.status == 2:
        return None
    raise ConvergenceError(f"separability LP failed: {res.message}")


def hard_margin_oracle(ds: Dataset, tol: float = 1e-8, max_sweeps: int = 200_000) -> MarginSolution:
    """Minimum-norm u with y_k u . x_k >= 1, by dual coordinate ascent.

    Maximises sum(a) - a^T G a / 2 over a >= 0 (G the Gram matrix of the
    label-signed samples), one coordinate at a time in cyclic order, until
    the largest KKT violation drops to ``tol``; then ``w = Z a``.

    Separability is settled first: the sum of the label-signed samples is
    tried as a witness, and failing that a feasibility LP decides. A
    non-separable dataset raises NotSeparableError instead of letting the
    dual run off to infinity.
    """
    z = z_matrix(ds)
    n = z.shape[1]
    gram = z.T @ z
    if np.min(gram.sum(axis=1)) <= 0 and _lp_separator(z) is None:
        raise NotSeparableError("dataset is not linearly separable")
    diag = np.diag(gram).copy()

    a = np.zeros(n)
    g = np.zeros(n)  # g = G a, maintained incrementally
    for sweep in range(1, max_sweeps + 1):
        worst = 0.0
        for i in range(n):
            grad = 1.0 - g[i]
            viol = abs(grad) if a[i] > 0 else max(grad, 0.0)
            worst = max(worst, viol)
            new = max(0.0, a[i] + grad / diag[i])
            d = new - a[i]
            if d != 0.0:
                a[i] = new
                g += d * gram[:, i]
        if worst <= tol:
            break
    else:
        raise ConvergenceError(f"dual coordinate ascent did not reach tol={tol} in {max_sweeps} sweeps")
    w = z @ a
    return MarginSolution(w=w, min_margin=float(np.min(z.T @ w)), dual=a, sweeps=sweep)


def evaluate_error(w, ds: Dataset) -> float:
    """Fraction of samples with sign(w . x) != y; a zero score counts as wrong."""
    w = np.asarray(w, dtype=float)
    if not np.any(w):
        raise DomainError("zero weight vector does not define a classifier")
    return float(np.mean(ds.labels * (w @ ds.points) <= 0))


def is_linearly_separable(ds: Dataset):
    """Return ``(separable, witness)``; the witness is None when not separable.

    Tries the sum of the label-signed samples first, then the feasibility LP
    that also guards :func:`hard_margin_oracle`.
    """
    z = z_matrix(ds)
    v = z.sum(axis=1)
    if np.min(z.T @ v) > 0:
        return True, v
    u = _lp_separator(z)
    return (u is not None), u
