"""Assumption checks, generalization and learning-rate bounds, empirical audits.

The theory leaves most constants unnamed (C, c, c5..c10); they live in
``BoundConstants`` and default to 1, so absolute values are structural and
only shapes and monotonicities carry meaning. ``c2`` is the exception and is
computed exactly by :func:`c2_constant`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .datagen import Dataset, z_matrix
from .distcore import gamma_fn
from .errors import ConfigError, ConvergenceError, DataError, DomainError
from .trainer import is_linearly_separable


@dataclass(frozen=True)
class BoundConstants:
    C: float = 1.0
    c: float = 1.0
    c5: float = 1.0
    c6: float = 1.0
    c7: float = 1.0
    c8: float = 1.0
    c9: float = 1.0
    c10: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ConfigError(f"constant {f.name} must be positive")

    @classmethod
    def load(cls, path) -> "BoundConstants":
        """Read a JSON object or ``name = value`` lines."""
        text = open(path).read()
        try:
            values = json.loads(text)
        except json.JSONDecodeError:
            values = {}
            for line in text.splitlines():
                line = line.split("#", 1)[0].strip()
                if line:
                    key, _, val = line.partition("=")
                    values[key.strip()] = val.strip()
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ConfigError(f"unknown constants: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in values.items()})


@dataclass
class AssumptionCheck:
    name: str
    lhs: float
    rhs: float
    satisfied: Optional[bool]
    relation: str = "<="


@dataclass
class AssumptionReport:
    checks: list
    inputs: dict
    c2: float

    def __getitem__(self, name) -> AssumptionCheck:
        for chk in self.checks:
            if chk.name == name:
                return chk
        raise KeyError(name)

    @property
    def all_satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks if c.satisfied is not None)


@dataclass
class ConcentrationAudit:
    norm_ratio_range: tuple  # min/max of ||z_k||^2 / p
    max_cross: float  # max_{i != j} |z_i . z_j|
    clean_mu_dot_range: Optional[tuple]
    noisy_mu_dot_range: Optional[tuple]
    noisy_fraction: float
    separable: bool
    cluster_norm_ratio: Optional[float] = None  # mean ||q_k||^2 / p, an empirical kappa


def _check_alpha(alpha):
    if not 0 < alpha <= 2:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")


def _log_n_delta(n, delta):
    return math.log(n / delta)


def c2_constant(alpha: float, kappa: float) -> float:
    """c2 = 2 max(8 / kappa, (8 / alpha) Gamma(2 / alpha) + kappa + 2)."""
    _check_alpha(alpha)
    if kappa <= 0:
        raise DomainError("kappa must be positive")
    return 2.0 * max(8.0 / kappa, 8.0 / alpha * gamma_fn(2.0 / alpha) + kappa + 2.0)


def a5_second_branch(p, n, mu_norm, delta, alpha, kappa):
    inner = p + 2 * n * (mu_norm**2 + math.sqrt(p) * _log_n_delta(n, delta) ** (1.0 / alpha))
    return 1.0 / (c2_constant(alpha, kappa) * inner)


def a5_lr_bound(p, n, mu_norm, delta, alpha, kappa, s1) -> float:
    """Learning-rate ceiling of the (A5) condition for a given top singular value."""
    return min(8.0 / s1**2, a5_second_branch(p, n, mu_norm, delta, alpha, kappa))


def check_assumptions(
    p,
    n,
    mu_norm,
    delta,
    alpha,
    kappa,
    beta: Optional[float] = None,
    s1_bound: Optional[float] = None,
    consts: BoundConstants = BoundConstants(),
) -> AssumptionReport:
    """Evaluate (A1)-(A5).

    (A5) compares ``beta`` against ``min(8 / s1^2, second branch)``; without
    ``s1_bound`` only the second branch is used, and without ``beta`` the
    check reports the ceiling with ``satisfied=None``.
    """
    _check_alpha(alpha)
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if min(p, n, kappa) <= 0 or mu_norm < 0:
        raise DomainError("p, n and kappa must be positive and mu_norm non-negative")
    C = consts.C
    L = _log_n_delta(n, delta)
    checks = [
        AssumptionCheck("A1", delta, 1.0 / C, delta < 1.0 / C, "<"),
        AssumptionCheck("A2", n, C * math.log(1.0 / delta), n >= C * math.log(1.0 / delta), ">="),
    ]
    rhs3 = C * max(mu_norm**2 * n, n**2 * L ** (2.0 / alpha))
    checks.append(AssumptionCheck("A3", p, rhs3, p >= rhs3, ">="))
    rhs4 = C * L ** (1.0 / alpha)
    checks.append(AssumptionCheck("A4", mu_norm, rhs4, mu_norm >= rhs4, ">="))
    ceiling = a5_second_branch(p, n, mu_norm, delta, alpha, kappa)
    if s1_bound is not None:
        ceiling = min(ceiling, 8.0 / s1_bound**2)
    checks.append(
        AssumptionCheck("A5", math.nan if beta is None else beta, ceiling, None if beta is None else beta <= ceiling)
    )
    inputs = dict(p=p, n=n, mu_norm=mu_norm, delta=delta, alpha=alpha, kappa=kappa, beta=beta, s1_bound=s1_bound)
    return AssumptionReport(checks, inputs, c2_constant(alpha, kappa))


def _sv_inner(p, n, mu, delta, alpha, consts):
    mu = np.asarray(mu, dtype=float)
    l1 = float(np.sum(np.abs(mu)))
    sq = float(mu @ mu)
    mx = float(np.max(np.abs(mu))) if mu.size else 0.0
    tail = (n * math.log(9.0) + math.log(4.0 / delta)) ** (2.0 / alpha)
    return (
        consts.c5
        + consts.c6 * math.sqrt(n) * l1 / p
        + 2.0 * n * sq / p
        + (consts.c7 + consts.c8 * mx * math.sqrt(n)) / p * tail
    )


def singular_value_bound(p, n, mu, delta, alpha, consts: BoundConstants = BoundConstants()) -> float:
    """High-probability ceiling on the top singular value of the signed data matrix."""
    _check_alpha(alpha)
    if len(mu) != p:
        raise DomainError(f"mu has length {len(mu)}, expected {p}")
    return math.sqrt(p) * _sv_inner(p, n, mu, delta, alpha, consts)


def lr_bound_A6(p, n, mu, delta, alpha, kappa, consts: BoundConstants = BoundConstants()) -> float:
    """(A6): (A5) with the singular value replaced by its high-probability ceiling."""
    _check_alpha(alpha)
    mu = np.asarray(mu, dtype=float)
    first = 8.0 / p * _sv_inner(p, n, mu, delta, alpha, consts) ** -2
    L = _log_n_delta(n, delta)
    second = 1.0 / (c2_constant(alpha, kappa) * p) / (
        1.0 + 2.0 * n / p * (float(mu @ mu) + math.sqrt(p) * L ** (1.0 / alpha))
    )
    return min(first, second)


def theorem1_bound(eta, mu_norm, p, alpha, c=1.0) -> float:
    """eta + exp(-c ||mu||^(2 alpha) / p^(alpha / 2)), clamped to 1."""
    _check_alpha(alpha)
    return min(1.0, eta + math.exp(-c * mu_norm ** (2 * alpha) / p ** (alpha / 2)))


def rareweak_bound(eta, lam, s, p, alpha, c=1.0) -> float:
    """eta + exp(-c (lam^2 s)^alpha / p^(alpha / 2)), clamped to 1."""
    _check_alpha(alpha)
    return min(1.0, eta + math.exp(-c * (lam**2 * s) ** alpha / p ** (alpha / 2)))


def lr_bound_cor7(p, c9=1.0) -> float:
    if p < 1:
        raise DomainError("p must be >= 1")
    return c9 / p


def lr_bound_cor8(p, n, alpha, c10=1.0) -> float:
    """c10 / p * (1 + n^(2/alpha - 1) (log n)^(-1/alpha))^-2."""
    _check_alpha(alpha)
    if p < 1:
        raise DomainError("p must be >= 1")
    if n < 2:
        raise DomainError("n must be >= 2 so that log n > 0")
    return c10 / p * (1.0 + n ** (2.0 / alpha - 1.0) * math.log(n) ** (-1.0 / alpha)) ** -2


def empirical_top_singular(Z, tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on the smaller Gram matrix.

    Starts from the normalised all-ones vector and stops once the Rayleigh
    quotient changes by at most ``tol * 1e-2`` relatively.
    """
    Z = np.asarray(Z, dtype=float)
    if not np.any(Z):
        raise DataError("power iteration on a zero matrix")
    gram = Z.T @ Z if Z.shape[1] <= Z.shape[0] else Z @ Z.T
    k = gram.shape[0]
    v = np.ones(k) / math.sqrt(k)
    if not np.any(gram @ v):
        # all-ones lies in the null space; fall back to a fixed generic start
        v = np.linspace(1.0, 2.0, k) * np.where(np.arange(k) % 2, -1.0, 1.0)
        v /= np.linalg.norm(v)
    lam = float(v @ gram @ v)
    for _ in range(max_iter):
        w = gram @ v
        nrm = np.linalg.norm(w)
        if nrm == 0:
            raise DataError("power iteration collapsed to zero")
        v = w / nrm
        new = float(v @ gram @ v)
        if abs(new - lam) <= tol * 1e-2 * abs(new):
            return math.sqrt(new)
        lam = new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


def concentration_audit(ds: Dataset) -> ConcentrationAudit:
    """Measure the concentration quantities of a realised sample; no thresholds."""
    z = z_matrix(ds)
    p = ds.p
    gram = z.T @ z
    sq = np.diag(gram)
    off = np.abs(gram - np.diag(sq))
    max_cross = float(off.max()) if ds.n > 1 else 0.0

    clean_rng = noisy_rng = None
    kappa_hat = None
    if ds.mu is not None:
        dots = ds.mu @ z
        clean, noisy = dots[~ds.noise_mask], dots[ds.noise_mask]
        if clean.size:
            clean_rng = (float(clean.min()), float(clean.max()))
        if noisy.size:
            noisy_rng = (float(noisy.min()), float(noisy.max()))
        q = ds.points - np.outer(ds.mu, ds.clean_labels)
        kappa_hat = float(np.mean(np.sum(q * q, axis=0)) / p)

    separable, _ = is_linearly_separable(ds)
    return ConcentrationAudit(
        norm_ratio_range=(float(sq.min() / p), float(sq.max() / p)),
        max_cross=max_cross,
        clean_mu_dot_range=clean_rng,
        noisy_mu_dot_range=noisy_rng,
        noisy_fraction=float(np.mean(ds.noise_mask)),
        separable=bool(separable),
        cluster_norm_ratio=kappa_hat,
    )


def report_rows(report: AssumptionReport):
    """Flatten a report into ``(key, value)`` pairs for text emission."""
    rows = [(k, v) for k, v in report.inputs.items()]
    rows.append(("c2", report.c2))
    for chk in report.checks:
        rows += [
            (f"{chk.name}.lhs", chk.lhs),
            (f"{chk.name}.rhs", chk.rhs),
            (f"{chk.name}.satisfied", chk.satisfied),
        ]
    return rows

