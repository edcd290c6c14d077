"""Experiment configuration: flat key=value files with CLI overrides.

A config file holds one ``key = value`` pair per line; ``#`` starts a
comment. Every key can also be set on the command line with repeated
``--set key=value`` flags, which win over the file. Unknown keys are a
config error, as is any value of the wrong type.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

__all__ = ["ConfigError", "ExperimentConfig", "parse_config_file", "derive_seed"]

EMBEDDINGS = ("thermometer", "gray2", "random_projection", "learned")


class ConfigError(Exception):
    """Invalid configuration (unknown key, bad value, inconsistent dims)."""


def _parse_bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_bands(raw: str):
    raw = raw.strip()
    if raw in ("3class", "4class"):
        return raw
    bands = []
    for part in raw.split(","):
        lo, _, hi = part.partition("-")
        bands.append((float(lo), float(hi)))
    return tuple(bands)


@dataclass
class ExperimentConfig:
    # data
    dataset: str | None = None
    bands: object = "3class"          # preset name or tuple of (low, high)
    alpha: float = 0.1
    folds: int = 4
    by_session: bool = True
    # embedding
    embedding: str = "thermometer"
    dim: int = 10000                  # random_projection / learned only
    bits_per_feature: int = 8
    clip_range: float = 3.0
    sparsity: float = 0.1
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 50
    momentum: float = 0.9
    init_scale: float | None = None
    quantize_export: bool = False
    # encoder / AM
    clip_output: bool = True
    am_k: int = 1
    am_restarts: int = 10
    am_iters: int = 100
    am_init: str = "random"
    # run control
    seed: int = 0
    threads: int = 1
    out: str | None = None
    _dim_explicit: bool = field(default=False, repr=False, compare=False)

    _PARSERS = {
        "dataset": str,
        "bands": _parse_bands,
        "alpha": float,
        "folds": int,
        "by_session": _parse_bool,
        "embedding": str,
        "dim": int,
        "bits_per_feature": int,
        "clip_range": float,
        "sparsity": float,
        "learning_rate": float,
        "batch_size": int,
        "epochs": int,
        "momentum": float,
        "init_scale": float,
        "quantize_export": _parse_bool,
        "clip_output": _parse_bool,
        "am_k": int,
        "am_restarts": int,
        "am_iters": int,
        "am_init": str,
        "seed": int,
        "threads": int,
        "out": str,
    }

    def apply(self, key: str, raw: str) -> None:
        key = key.strip()
        if key not in self._PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            setattr(self, key, self._PARSERS[key](raw.strip()))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from exc
        if key == "dim":
            self._dim_explicit = True

    def validate(self) -> "ExperimentConfig":
        if self.embedding not in EMBEDDINGS:
            raise ConfigError(
                f"embedding must be one of {EMBEDDINGS}, got {self.embedding!r}")
        if self.dim < 1 or self.bits_per_feature < 1:
            raise ConfigError("dim and bits_per_feature must be >= 1")
        if not 0.0 < self.sparsity <= 1.0:
            raise ConfigError("sparsity must lie in (0, 1]")
        if self.clip_range <= 0 or self.alpha <= 0:
            raise ConfigError("clip_range and alpha must be positive")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if self.am_k < 1 or self.am_restarts < 1 or self.am_iters < 1:
            raise ConfigError("am_k, am_restarts, am_iters must be >= 1")
        if self.am_init not in ("random", "d2"):
            raise ConfigError("am_init must be 'random' or 'd2'")
        if self.learning_rate <= 0 or self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("bad training hyperparameters")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.embedding == "learned" and self.filter_bank().n_bands % 2 == 0:
            # even band counts can tie the band sum at exactly zero; ties
            # resolve to bit 1, but an odd count avoids them entirely
            warnings.warn("an odd number of frequency bands is recommended "
                          "for the learned embedding", stacklevel=2)
        return self

    def resolved_dim(self, n_features: int) -> int:
        """Hypervector dimension once the feature count is known; checks that
        an explicitly set dim is consistent for quantized embeddings."""
        if self.embedding in ("thermometer", "gray2"):
            derived = n_features * self.quantizer_bits()
            if self._dim_explicit and self.dim != derived:
                raise ConfigError(
                    f"dim={self.dim} inconsistent with quantized embedding "
                    f"({n_features} features x {self.quantizer_bits()} bits = {derived})")
            return derived
        return self.dim

    def quantizer_bits(self) -> int:
        return self.bits_per_feature

    def filter_bank(self):
        from .riemann import FilterBankConfig, default_bands

        if isinstance(self.bands, str):
            return default_bands(self.bands)
        return FilterBankConfig(self.bands)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(b) for b in v]
            out[f.name] = v
        return out


def parse_config_file(path) -> list[tuple[str, str]]:
    pairs = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        pairs.append((key.strip(), value.strip()))
    return pairs


def derive_seed(*parts) -> int:
    """Stable 64-bit sub-seed from a master seed plus context tags."""
    ss = np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
