"""Trial datasets: binary file format, CSV import, cross-validation folds,
and a synthetic generator with class-separable band-power structure.

File format (little-endian)::

    magic "HDBC" | version u16 | n_trials u32 | n_ch u16 | n_s u32
    | fs f32 | n_cl u16
    | per trial: session u16, label u16, samples f32 channel-major

Labels are 1-based; label 0 is invalid. Round-trips are bit-exact.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "TrialDataset",
    "SynthSpec",
    "DatasetFormatError",
    "DatasetValidationError",
    "save_dataset",
    "load_dataset",
    "make_folds",
    "generate_synthetic",
    "separable_synth_spec",
    "import_csv",
]

_MAGIC = b"HDBC"
_VERSION = 1
_HEADER = struct.Struct("<HIHIfH")
_TRIAL_HEAD = struct.Struct("<HH")


class DatasetFormatError(Exception):
    """Malformed dataset file (bad magic, version, or truncated payload)."""


class DatasetValidationError(ValueError):
    """Structurally valid file with invalid contents (e.g. label 0)."""


@dataclass
class TrialDataset:
    """Uniform trials (n_trials, n_ch, n_s) with 1-based labels and
    per-trial session ids."""

    samples: np.ndarray
    labels: np.ndarray
    sessions: np.ndarray
    fs: float
    n_classes: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.sessions = np.asarray(self.sessions, dtype=np.int64)
        if self.samples.ndim != 3:
            raise DatasetValidationError("samples must be (n_trials, n_ch, n_s)")
        if self.samples.shape[1] < 2 or self.samples.shape[2] < 2:
            raise DatasetValidationError("need at least 2 channels and 2 samples")
        n = self.samples.shape[0]
        if self.labels.shape != (n,) or self.sessions.shape != (n,):
            raise DatasetValidationError("labels and sessions must match trial count")
        if n and (self.labels.min() < 1 or self.labels.max() > self.n_classes):
            raise DatasetValidationError(
                f"labels must lie in 1..{self.n_classes}, "
                f"got range [{self.labels.min()}, {self.labels.max()}]")

    @property
    def n_trials(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[2]

    def subset(self, idx) -> "TrialDataset":
        return TrialDataset(self.samples[idx], self.labels[idx],
                            self.sessions[idx], self.fs, self.n_classes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrialDataset):
            return NotImplemented
        return (self.fs == other.fs and self.n_classes == other.n_classes
                and np.array_equal(self.samples, other.samples)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.sessions, other.sessions))


def save_dataset(ds: TrialDataset, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(_HEADER.pack(_VERSION, ds.n_trials, ds.n_channels,
                              ds.n_samples, ds.fs, ds.n_classes))
        for i in range(ds.n_trials):
            fh.write(_TRIAL_HEAD.pack(int(ds.sessions[i]), int(ds.labels[i])))
            fh.write(ds.samples[i].astype("<f4").tobytes())


def load_dataset(path) -> TrialDataset:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != _MAGIC:
        raise DatasetFormatError(
            f"bad magic {raw[:4]!r} at offset 0, expected {_MAGIC!r}")
    if len(raw) < 4 + _HEADER.size:
        raise DatasetFormatError(f"truncated header at offset {len(raw)}")
    version, n_trials, n_ch, n_s, fs, n_cl = _HEADER.unpack_from(raw, 4)
    if version != _VERSION:
        raise DatasetFormatError(f"unsupported format version {version}")
    off = 4 + _HEADER.size
    trial_bytes = _TRIAL_HEAD.size + n_ch * n_s * 4
    need = off + n_trials * trial_bytes
    if len(raw) < need:
        raise DatasetFormatError(
            f"truncated payload: have {len(raw)} bytes, need {need} "
            f"(failure at offset {len(raw)})")
    samples = np.empty((n_trials, n_ch, n_s), dtype=np.float32)
    labels = np.empty(n_trials, dtype=np.int64)
    sessions = np.empty(n_trials, dtype=np.int64)
    for i in range(n_trials):
        sessions[i], labels[i] = _TRIAL_HEAD.unpack_from(raw, off)
        off += _TRIAL_HEAD.size
        samples[i] = np.frombuffer(raw, dtype="<f4", count=n_ch * n_s,
                                   offset=off).reshape(n_ch, n_s)
        off += n_ch * n_s * 4
    return TrialDataset(samples, labels, sessions, fs, n_cl)


def make_folds(ds: TrialDataset, n_folds: int, by_session: bool = False,
               seed=0) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train_idx, test_idx) pairs that partition the trial index set.

    ``by_session`` gives leave-one-session-out folds (n_folds must equal the
    number of distinct sessions); otherwise folds are class-stratified
    random splits drawn from ``seed``.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    all_idx = np.arange(ds.n_trials)
    if by_session:
        sessions = np.unique(ds.sessions)
        if len(sessions) != n_folds:
            raise ValueError(
                f"by_session with n_folds={n_folds} but {len(sessions)} sessions")
        return [(all_idx[ds.sessions != s], all_idx[ds.sessions == s])
                for s in sessions]
    rng = np.random.default_rng(seed)
    fold_of = np.empty(ds.n_trials, dtype=np.int64)
    for label in np.unique(ds.labels):
        members = all_idx[ds.labels == label]
        members = members[rng.permutation(len(members))]
        fold_of[members] = np.arange(len(members)) % n_folds
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(n_folds)]


@dataclass
class SynthSpec:
    """Synthetic dataset recipe: each class drives its own channel line-up
    inside its own frequency bands, plus white noise.

    ``amplitudes`` has shape (n_classes, n_channels, len(bands)); per trial,
    each active (channel, band) cell contributes one sinusoid with a random
    frequency inside the band and a random phase.
    """

    n_classes: int = 3
    n_channels: int = 16
    n_samples: int = 1000
    fs: float = 250.0
    n_trials: int = 120
    n_sessions: int = 4
    bands: tuple[tuple[float, float], ...] = ((6.0, 10.0), (14.0, 18.0), (22.0, 26.0))
    amplitudes: np.ndarray | None = None
    noise_sigma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.amplitudes is None:
            self.amplitudes = _default_amplitudes(self.n_classes, self.n_channels,
                                                  len(self.bands))
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        expect = (self.n_classes, self.n_channels, len(self.bands))
        if self.amplitudes.shape != expect:
            raise ValueError(f"amplitudes must have shape {expect}")
        if np.any(self.amplitudes < 0) or self.noise_sigma < 0:
            raise ValueError("amplitudes and noise_sigma must be non-negative")


def _default_amplitudes(n_classes: int, n_channels: int, n_bands: int) -> np.ndarray:
    """One band per class, driven strongly on a class-specific third of the
    channels and weakly elsewhere."""
    amp = np.zeros((n_classes, n_channels, n_bands))
    for c in range(n_classes):
        band = c % n_bands
        for ch in range(n_channels):
            amp[c, ch, band] = 1.0 if ch % n_classes == c else 0.2
    return amp


def separable_synth_spec(n_classes: int = 3, n_channels: int = 16,
                         n_trials: int = 120, n_sessions: int = 4,
                         seed: int = 0, noise_sigma: float = 0.3) -> SynthSpec:
    """Stock class-separable recipe with disjoint active bands."""
    all_bands = ((6.0, 10.0), (14.0, 18.0), (22.0, 26.0), (27.0, 29.0))
    return SynthSpec(n_classes=n_classes, n_channels=n_channels,
                     n_trials=n_trials, n_sessions=n_sessions,
                     bands=all_bands[:n_classes], noise_sigma=noise_sigma,
                     seed=seed)


def generate_synthetic(spec: SynthSpec) -> TrialDataset:
    """Deterministic synthetic dataset; labels balanced within one trial,
    sessions interleaved so every session sees every class."""
    n = spec.n_trials
    labels = np.arange(n) % spec.n_classes + 1
    sessions = (np.arange(n) // spec.n_classes) % spec.n_sessions
    t = np.arange(spec.n_samples) / spec.fs
    samples = np.empty((n, spec.n_channels, spec.n_samples), dtype=np.float32)
    for i in range(n):
        rng = np.random.default_rng((spec.seed, i))
        x = np.zeros((spec.n_channels, spec.n_samples))
        amp = spec.amplitudes[labels[i] - 1]
        for ch in range(spec.n_channels):
            for b, (low, high) in enumerate(spec.bands):
                a = amp[ch, b]
                if a == 0.0:
                    continue
                freq = rng.uniform(low, high)
                phase = rng.uniform(0.0, 2.0 * np.pi)
                x[ch] += a * np.sin(2.0 * np.pi * freq * t + phase)
        if spec.noise_sigma > 0:
            x += rng.normal(0.0, spec.noise_sigma, size=x.shape)
        samples[i] = x
    return TrialDataset(samples, labels, sessions, spec.fs, spec.n_classes)


def import_csv(manifest_path, fs: float, n_classes: int | None = None) -> TrialDataset:
    """Read one CSV file per trial (header row of channel names, one row per
    sample) plus a manifest CSV with columns file,label,session."""
    manifest_path = Path(manifest_path)
    entries = []
    with open(manifest_path, newline="") as fh:
        for row in csv.DictReader(fh):
            entries.append((row["file"], int(row["label"]), int(row["session"])))
    if not entries:
        raise DatasetValidationError("manifest lists no trials")
    trials = []
    for fname, _, _ in entries:
        path = manifest_path.parent / fname
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            next(reader)  # channel-name header
            rows = [[float(v) for v in row] for row in reader if row]
        trials.append(np.asarray(rows, dtype=np.float32).T)  # -> (n_ch, n_s)
    samples = np.stack(trials)
    labels = np.asarray([e[1] for e in entries])
    sessions = np.asarray([e[2] for e in entries])
    if n_classes is None:
        n_classes = int(labels.max())
    return TrialDataset(samples, labels, sessions, fs, n_classes)
