"""Riemannian covariance feature front-end.

Per trial and per frequency band: causal Butterworth band-pass filtering,
regularized spatial covariance, whitening against the training-set mean
covariance, matrix logarithm, and a norm-preserving half-vectorization
(upper triangle, row-major, off-diagonals scaled by sqrt(2)). Feature
standardization statistics come from the training set only, keeping the
whole front-end causal with respect to test data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.signal

__all__ = [
    "FilterBankConfig",
    "Standardization",
    "RiemannFrontEnd",
    "NumericsError",
    "design_bandpass",
    "apply_filterbank",
    "estimate_covariance",
    "fit_reference",
    "riemann_features",
    "fit_standardization",
    "apply_standardization",
    "default_bands",
    "n_features",
]


class NumericsError(RuntimeError):
    """Raised when a matrix that must be positive definite is not."""


@dataclass(frozen=True)
class FilterBankConfig:
    """Band edges in Hz for the filter bank; every filter is a second-order
    Butterworth band-pass realized as cascaded biquad sections."""

    bands: tuple[tuple[float, float], ...]
    order: int = 2

    def __post_init__(self):
        if not self.bands:
            raise ValueError("filter bank needs at least one band")
        for low, high in self.bands:
            if not 0 < low < high:
                raise ValueError(f"invalid band ({low}, {high})")

    @property
    def n_bands(self) -> int:
        return len(self.bands)


def n_features(n_channels: int) -> int:
    """Feature count of the tangent-space kernel: n_ch * (n_ch + 1) / 2."""
    return n_channels * (n_channels + 1) // 2


@lru_cache(maxsize=256)
def design_bandpass(low: float, high: float, fs: float, order: int = 2) -> np.ndarray:
    """Butterworth band-pass as second-order sections (analog prototype +
    pre-warped bilinear transform, as done by scipy)."""
    if not 0 < low < high < fs / 2:
        raise ValueError(f"band ({low}, {high}) must satisfy 0 < low < high < fs/2")
    return scipy.signal.butter(order, [low, high], btype="bandpass", fs=fs, output="sos")


def apply_filterbank(trial: np.ndarray, fs: float, cfg: FilterBankConfig) -> np.ndarray:
    """Causal forward filtering of an (n_ch, n_s) trial through every band.

    Returns an (n_bands, n_ch, n_s) array. No zero-phase (forward-backward)
    pass: the pipeline stays causal.
    """
    trial = np.asarray(trial, dtype=np.float64)
    if trial.ndim != 2:
        raise ValueError("trial must be a (n_channels, n_samples) matrix")
    out = np.empty((cfg.n_bands,) + trial.shape)
    for b, (low, high) in enumerate(cfg.bands):
        sos = design_bandpass(low, high, fs, cfg.order)
        out[b] = scipy.signal.sosfilt(sos, trial, axis=1)
    return out


def estimate_covariance(x: np.ndarray, alpha: float = 0.1) -> np.ndarray:
    """Regularized spatial covariance (X X^T + alpha I) / (n_s - 1)."""
    x = np.asarray(x, dtype=np.float64)
    n_ch, n_s = x.shape
    if n_s < 2:
        raise ValueError("need at least 2 samples per trial")
    return (x @ x.T + alpha * np.eye(n_ch)) / (n_s - 1)


def _eigh_spd(mat: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    sym = (mat + mat.T) / 2.0  # absorb rounding before the eigendecomposition
    w, v = np.linalg.eigh(sym)
    if w[0] <= 0 or not np.all(np.isfinite(w)):
        raise NumericsError(f"{what} is not positive definite (min eigenvalue {w[0]:.3e})")
    return w, v


def fit_reference(train_covs) -> np.ndarray:
    """Inverse square root of the arithmetic mean of the training covariances."""
    covs = np.asarray(train_covs, dtype=np.float64)
    if covs.ndim != 3 or covs.shape[0] < 1:
        raise ValueError("need at least one covariance matrix")
    c_ref = covs.mean(axis=0)
    w, v = _eigh_spd(c_ref, "mean training covariance")
    return (v / np.sqrt(w)) @ v.T


def riemann_features(cov: np.ndarray, whitener: np.ndarray) -> np.ndarray:
    """Tangent-space features of one covariance matrix.

    logm of the whitened covariance via symmetric eigendecomposition, then
    the norm-preserving half-vectorization: the euclidean norm of the output
    equals the Frobenius norm of the log matrix.
    """
    m = whitener @ cov @ whitener
    w, v = _eigh_spd(m, "whitened covariance")
    logm = (v * np.log(w)) @ v.T
    logm = (logm + logm.T) / 2.0
    n_ch = logm.shape[0]
    iu, ju = np.triu_indices(n_ch)
    scale = np.where(iu == ju, 1.0, np.sqrt(2.0))
    return logm[iu, ju] * scale


@dataclass
class Standardization:
    mean: np.ndarray
    std: np.ndarray  # zero-variance features hold std=0 and pass through as 0


def fit_standardization(train_features: np.ndarray) -> Standardization:
    """Per-feature mean/std over the training set (population convention)."""
    f = np.asarray(train_features, dtype=np.float64)
    if f.shape[0] < 2:
        raise ValueError("need at least 2 training vectors to fit standardization")
    return Standardization(f.mean(axis=0), f.std(axis=0))


def apply_standardization(f: np.ndarray, stats: Standardization) -> np.ndarray:
    safe = np.where(stats.std > 0, stats.std, 1.0)
    out = (np.asarray(f, dtype=np.float64) - stats.mean) / safe
    return np.where(stats.std > 0, out, 0.0)


def default_bands(dataset_kind: str) -> FilterBankConfig:
    """Stock filter banks: '3class' is 13 contiguous 2 Hz bands over 4-30 Hz;
    '4class' is a multi-width overlapping family over 4-40 Hz (widths 2, 4,
    8, 16, 32 Hz at 50% overlap)."""
    if dataset_kind == "3class":
        bands = tuple((float(lo), float(lo + 2)) for lo in range(4, 30, 2))
        return FilterBankConfig(bands)
    if dataset_kind == "4class":
        bands = []
        for width in (2, 4, 8, 16, 32):
            lo = 4
            while lo + width <= 40:
                bands.append((float(lo), float(lo + width)))
                lo += width // 2
        return FilterBankConfig(tuple(bands))
    raise ValueError(f"unknown dataset kind {dataset_kind!r}")


class RiemannFrontEnd:
    """Fitted front-end state: per-band whiteners plus feature statistics.

    ``fit`` consumes training trials only; ``transform`` maps one trial to a
    standardized (n_bands, n_features) array.
    """

    def __init__(self, cfg: FilterBankConfig, alpha: float = 0.1):
        self.cfg = cfg
        self.alpha = alpha
        self.fs: float | None = None
        self.whiteners: np.ndarray | None = None     # (n_bands, n_ch, n_ch)
        self.stats: Standardization | None = None    # over (n_bands, n_features)

    @property
    def fitted(self) -> bool:
        return self.whiteners is not None

    def fit(self, trials: np.ndarray, fs: float) -> "RiemannFrontEnd":
        trials = np.asarray(trials, dtype=np.float64)
        if trials.ndim != 3 or trials.shape[0] < 2:
            raise ValueError("need at least 2 training trials (n, n_ch, n_s)")
        self.fs = float(fs)
        n, n_ch, _ = trials.shape
        n_b = self.cfg.n_bands
        covs = np.empty((n_b, n, n_ch, n_ch))
        for i in range(n):
            banded = apply_filterbank(trials[i], fs, self.cfg)
            for b in range(n_b):
                covs[b, i] = estimate_covariance(banded[b], self.alpha)
        self.whiteners = np.stack([fit_reference(covs[b]) for b in range(n_b)])
        feats = np.stack([self._raw_features_from_covs(covs[:, i]) for i in range(n)])
        flat = feats.reshape(n, -1)
        stats = fit_standardization(flat)
        self.stats = Standardization(stats.mean.reshape(feats.shape[1:]),
                                     stats.std.reshape(feats.shape[1:]))
        return self

    def _raw_features_from_covs(self, covs_per_band: np.ndarray) -> np.ndarray:
        return np.stack([riemann_features(covs_per_band[b], self.whiteners[b])
                         for b in range(self.cfg.n_bands)])

    def transform(self, trial: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise RuntimeError("front-end is not fitted")
        banded = apply_filterbank(np.asarray(trial, dtype=np.float64), self.fs, self.cfg)
        covs = np.stack([estimate_covariance(banded[b], self.alpha)
                         for b in range(self.cfg.n_bands)])
        raw = self._raw_features_from_covs(covs)
        return apply_standardization(raw, self.stats)

    def transform_many(self, trials: np.ndarray) -> np.ndarray:
        return np.stack([self.transform(t) for t in np.asarray(trials, dtype=np.float64)])

    # --- checkpoint ---------------------------------------------------------

    _MAGIC = b"HDRS"

    def save(self, path) -> None:
        if not self.fitted:
            raise RuntimeError("cannot save an unfitted front-end")
        n_b, n_ch, _ = self.whiteners.shape
        nf = self.stats.mean.shape[1]
        with open(path, "wb") as fh:
            fh.write(self._MAGIC)
            fh.write(struct.pack("<HdfHHI", 1, self.alpha, self.fs, n_b, n_ch, nf))
            for low, high in self.cfg.bands:
                fh.write(struct.pack("<dd", low, high))
            fh.write(self.whiteners.astype("<f8").tobytes())
            fh.write(self.stats.mean.astype("<f8").tobytes())
            fh.write(self.stats.std.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "RiemannFrontEnd":
        with open(path, "rb") as fh:
            raw = fh.read()
        if raw[:4] != cls._MAGIC:
            raise ValueError(f"not a front-end checkpoint: bad magic {raw[:4]!r}")
        head = struct.Struct("<HdfHHI")
        version, alpha, fs, n_b, n_ch, nf = head.unpack_from(raw, 4)
        if version != 1:
            raise ValueError(f"unsupported front-end checkpoint version {version}")
        off = 4 + head.size
        bands = []
        for _ in range(n_b):
            low, high = struct.unpack_from("<dd", raw, off)
            bands.append((low, high))
            off += 16
        fe = cls(FilterBankConfig(tuple(bands)), alpha=alpha)
        fe.fs = fs
        count = n_b * n_ch * n_ch
        fe.whiteners = np.frombuffer(raw, dtype="<f8", count=count, offset=off) \
            .reshape(n_b, n_ch, n_ch).copy()
        off += count * 8
        mean = np.frombuffer(raw, dtype="<f8", count=n_b * nf, offset=off) \
            .reshape(n_b, nf).copy()
        off += n_b * nf * 8
        std = np.frombuffer(raw, dtype="<f8", count=n_b * nf, offset=off) \
            .reshape(n_b, nf).copy()
        fe.stats = Standardization(mean, std)
        return fe
