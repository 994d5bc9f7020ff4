"""Noisy heavy-tailed mixture data.

A sample is built in five steps: a clean label ``yc`` uniform on {-1, +1},
a cluster vector ``q`` with i.i.d. generalized normal coordinates, the point
``x = U q + yc * mu``, and finally the observed label ``y``, which equals
``-yc`` with probability ``eta`` independently of everything else.

Points are stored column-wise: ``Dataset.points`` has shape ``(p, n)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .distcore import calibrated_params, draw_gennormal
from .errors import ConfigError, DataError
from .rng import stream

MEAN_KINDS = ("dense", "rareweak", "explicit", "ones")


def dense_count(p: int) -> int:
    """floor(p ** (2/3)) computed in integers (p=1000 gives 100, not 99)."""
    k = int(round(p ** (2.0 / 3.0)))
    while k**3 > p * p:
        k -= 1
    while (k + 1) ** 3 <= p * p:
        k += 1
    return k


@dataclass(frozen=True)
class MeanSpec:
    """How to build the mean vector ``mu``.

    ``dense`` sets the first floor(p^(2/3)) coordinates to 1, ``rareweak``
    sets ``s`` coordinates to ``lam``, ``ones`` sets every coordinate to 1,
    and ``explicit`` carries the vector itself.
    """

    kind: str = "dense"
    s: int = 0
    lam: float = 0.0
    values: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in MEAN_KINDS:
            raise ConfigError(f"unknown mean kind {self.kind!r}")
        if self.kind == "rareweak" and (self.s < 0 or self.lam < 0):
            raise ConfigError("rare-weak mean needs s >= 0 and lambda >= 0")
        if self.kind == "explicit" and self.values is None:
            raise ConfigError("explicit mean needs a vector")

    @classmethod
    def dense(cls):
        return cls("dense")

    @classmethod
    def rare_weak(cls, s, lam):
        return cls("rareweak", s=int(s), lam=float(lam))

    @classmethod
    def explicit(cls, values):
        return cls("explicit", values=tuple(float(v) for v in values))

    @classmethod
    def parse(cls, text: str) -> "MeanSpec":
        """Parse ``dense``, ``ones`` or ``rareweak:s,lambda``."""
        text = text.strip()
        if text in ("dense", "ones"):
            return cls(text)
        if text.startswith("rareweak:"):
            try:
                s, lam = text.split(":", 1)[1].split(",")
                return cls.rare_weak(int(s), float(lam))
            except ValueError as exc:
                raise ConfigError(f"bad rare-weak spec {text!r}") from exc
        raise ConfigError(f"cannot parse mean spec {text!r}")

    def label(self) -> str:
        if self.kind == "rareweak":
            return f"rareweak:{self.s},{self.lam:g}"
        if self.kind == "explicit":
            return "explicit"
        return self.kind


def build_mean_vector(spec: MeanSpec, p: int) -> np.ndarray:
    if p < 1:
        raise ConfigError("p must be >= 1")
    mu = np.zeros(p)
    if spec.kind == "dense":
        mu[: dense_count(p)] = 1.0
    elif spec.kind == "ones":
        mu[:] = 1.0
    elif spec.kind == "rareweak":
        if spec.s > p:
            raise ConfigError(f"rare-weak support s={spec.s} exceeds p={p}")
        mu[: spec.s] = spec.lam
    else:
        if len(spec.values) != p:
            raise ConfigError(f"explicit mean has length {len(spec.values)}, expected {p}")
        mu[:] = spec.values
    return mu


@dataclass(frozen=True)
class MixtureConfig:
    p: int
    n: int
    shape: float = 2.0
    calibration: str = "variance"
    mean: MeanSpec = field(default_factory=MeanSpec.dense)
    noise_rate: float = 0.0
    mixing: str = "identity"
    seed: int = 0

    def __post_init__(self):
        if self.p < 1 or self.n < 1:
            raise ConfigError("p and n must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError(f"noise_rate must lie in [0, 1], got {self.noise_rate}")
        if not self.shape > 0:
            raise ConfigError(f"shape must be positive, got {self.shape}")
        if self.calibration not in ("variance", "orlicz"):
            raise ConfigError(f"unknown calibration {self.calibration!r}")
        if self.mixing not in ("identity", "haar"):
            raise ConfigError(f"unknown mixing {self.mixing!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.mean.kind == "rareweak" and self.mean.s > self.p:
            raise ConfigError(f"rare-weak support s={self.mean.s} exceeds p={self.p}")


@dataclass(frozen=True, eq=False)
class Dataset:
    points: np.ndarray  # (p, n), column k is x_k
    labels: np.ndarray  # observed y, int8 in {-1, +1}
    clean_labels: np.ndarray
    noise_mask: np.ndarray
    mu: Optional[np.ndarray] = None
    config: Optional[MixtureConfig] = None

    def __post_init__(self):
        for a in (self.points, self.labels, self.clean_labels, self.noise_mask, self.mu):
            if a is not None:
                a.setflags(write=False)

    @property
    def p(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @classmethod
    def from_arrays(cls, points, labels, clean_labels=None, mu=None):
        """Wrap raw arrays (``points`` is p x n). Missing clean labels mean no noise."""
        points = np.array(points, dtype=float, ndmin=2)
        labels = np.asarray(labels, dtype=np.int8).copy()
        if points.shape[1] != labels.shape[0]:
            raise DataError("points must be p x n with n matching the labels")
        if not np.all(np.abs(labels) == 1):
            raise DataError("labels must be -1 or +1")
        clean = labels.copy() if clean_labels is None else np.asarray(clean_labels, dtype=np.int8).copy()
        mu = None if mu is None else np.array(mu, dtype=float)
        return cls(points, labels, clean, clean != labels, mu)


def random_orthogonal(p: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR with the R-diagonal sign fix."""
    if p < 1:
        raise ConfigError("p must be >= 1")
    a = stream(seed, "haar", p).standard_normal((p, p))
    q, r = np.linalg.qr(a)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d


def mixing_matrix(config: MixtureConfig) -> Optional[np.ndarray]:
    """The U of ``config``; ``None`` stands for the identity."""
    if config.mixing == "identity":
        return None
    return random_orthogonal(config.p, config.seed)


def generate_dataset(
    config: MixtureConfig,
    *,
    offset: int = 0,
    count: Optional[int] = None,
    mixing: Optional[np.ndarray] = None,
    cluster_sampler: Optional[Callable] = None,
) -> Dataset:
    """Draw ``count`` samples (default ``config.n``) from the mixture.

    Sample ``k`` uses its own random stream keyed by ``(seed, offset + k)``,
    so a held-out set from the same distribution is simply a later index
    range: ``generate_dataset(cfg, offset=cfg.n, count=m)``. The mixing
    matrix and mean depend only on ``config`` and are shared by both.

    ``cluster_sampler(rng, p)`` replaces the generalized normal draw of ``q``
    and exists for degenerate test constructions.
    """
    p = config.p
    n = config.n if count is None else int(count)
    if n < 1:
        raise ConfigError("count must be >= 1")
    mu = build_mean_vector(config.mean, p)
    params = calibrated_params(config.shape, config.calibration)
    if mixing is None and config.mixing == "haar":
        mixing = random_orthogonal(p, config.seed)

    q = np.empty((p, n))
    clean = np.empty(n, dtype=np.int8)
    flip = np.empty(n, dtype=bool)
    for k in range(n):
        rng = stream(config.seed, "sample", offset + k)
        clean[k] = 1 if rng.random() < 0.5 else -1
        q[:, k] = draw_gennormal(rng, params, p) if cluster_sampler is None else cluster_sampler(rng, p)
        flip[k] = rng.random() < config.noise_rate

    x = q if mixing is None else mixing @ q
    x += np.outer(mu, clean)
    labels = np.where(flip, -clean, clean).astype(np.int8)
    return Dataset(x, labels, clean, flip, mu, config)


def z_matrix(ds: Dataset) -> np.ndarray:
    """Label-signed samples: column k is ``y_k * x_k``."""
    return ds.points * ds.labels


# -- persistence ------------------------------------------------------------

_MAGIC = b"HEAVYBO-DATASET 1\n"


def _config_to_dict(cfg: Optional[MixtureConfig]):
    if cfg is None:
        return None
    d = asdict(cfg)
    d["mean"] = {k: v for k, v in d["mean"].items() if k != "values"}
    return d


def _config_from_dict(d):
    if d is None:
        return None
    mean = d.pop("mean")
    if mean["kind"] == "explicit":
        return None
    return MixtureConfig(mean=MeanSpec(**mean, values=None), **d)


def save_dataset(ds: Dataset, path) -> None:
    """Binary format: magic line, one-line JSON header, then raw little-endian
    columns (points sample by sample, labels, clean labels, noise mask, mu)."""
    header = {
        "p": ds.p,
        "n": ds.n,
        "shape": ds.config.shape if ds.config else None,
        "eta": ds.config.noise_rate if ds.config else None,
        "seed": ds.config.seed if ds.config else None,
        "has_mu": ds.mu is not None,
        "config": _config_to_dict(ds.config),
    }
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(ds.points.T, dtype="<f8").tobytes())
        fh.write(ds.labels.astype("i1").tobytes())
        fh.write(ds.clean_labels.astype("i1").tobytes())
        fh.write(ds.noise_mask.astype("u1").tobytes())
        if ds.mu is not None:
            fh.write(ds.mu.astype("<f8").tobytes())


def load_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_csv(path)
    with open(path, "rb") as fh:
        if fh.readline() != _MAGIC:
            raise DataError(f"{path} is not a dataset file")
        header = json.loads(fh.readline())
        p, n = header["p"], header["n"]
        blob = fh.read()
    need = 8 * p * n + 3 * n + (8 * p if header["has_mu"] else 0)
    if len(blob) != need:
        raise DataError(f"{path}: expected {need} payload bytes, found {len(blob)}")
    off = 8 * p * n
    points = np.frombuffer(blob[:off], dtype="<f8").reshape(n, p).T.astype(float)
    labels = np.frombuffer(blob[off : off + n], dtype="i1").copy()
    clean = np.frombuffer(blob[off + n : off + 2 * n], dtype="i1").copy()
    mask = np.frombuffer(blob[off + 2 * n : off + 3 * n], dtype="u1").astype(bool)
    mu = np.frombuffer(blob[off + 3 * n :], dtype="<f8").astype(float) if header["has_mu"] else None
    return Dataset(points, labels, clean, mask, mu, _config_from_dict(header["config"]))


def save_csv(ds: Dataset, path) -> None:
    """CSV with columns x_1..x_p, y, y_clean, noisy; one row per sample."""
    cols = [f"x_{i + 1}" for i in range(ds.p)] + ["y", "y_clean", "noisy"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for k in range(ds.n):
            row = [repr(float(v)) for v in ds.points[:, k]]
            row += [str(int(ds.labels[k])), str(int(ds.clean_labels[k])), str(int(ds.noise_mask[k]))]
            fh.write(",".join(row) + "\n")


def load_csv(path) -> Dataset:
    with open(path) as fh:
        cols = fh.readline().strip().split(",")
    try:
        iy, ic, im = cols.index("y"), cols.index("y_clean"), cols.index("noisy")
    except ValueError as exc:
        raise DataError(f"{path}: missing y / y_clean / noisy columns") from exc
    xcols = [i for i, c in enumerate(cols) if c.startswith("x_")]
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    points = table[:, xcols].T.copy()
    labels = table[:, iy].astype(np.int8)
    clean = table[:, ic].astype(np.int8)
    mask = table[:, im].astype(bool)
    if np.any(mask != (labels != clean)):
        raise DataError(f"{path}: noisy column disagrees with the labels")
    return Dataset(points, labels, clean, mask, None, None)

