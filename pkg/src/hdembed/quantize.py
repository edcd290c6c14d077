"""Per-feature quantization embeddings: thermometer and two-bit Gray codes.

Each feature vector is standardized against its own mean/variance, every
component is quantized to one of ``levels`` uniform bins over
[-clip_range, +clip_range], the per-level codewords are concatenated
(dim = n_features * bits_per_feature), and a fixed random permutation
spreads the bits so no single feature stays localized.

Code kinds:
    thermometer  level i -> i ones then q - i zeros; levels == q
    gray2        level 0 -> all zeros, then weight-2 words in revolving-door
                 order; adjacent levels differ in exactly 2 bits;
                 levels == q * (q - 1) / 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hv import Hypervector

__all__ = [
    "QuantizerConfig",
    "Codebook",
    "QuantizedEmbedder",
    "standardize_vector",
    "quantize_level",
    "build_codebook",
    "embed_quantized",
]

CODE_KINDS = ("thermometer", "gray2")


@dataclass(frozen=True)
class QuantizerConfig:
    """Static parameters of a quantization embedding.

    ``clip_range`` is in standardized units: values at or beyond +-clip_range
    saturate into the outermost bins. ``permutation_seed=None`` keeps the
    identity permutation (useful for tests and debugging).
    """

    bits_per_feature: int
    code_kind: str = "thermometer"
    clip_range: float = 3.0
    permutation_seed: int | None = None

    def __post_init__(self):
        if self.code_kind not in CODE_KINDS:
            raise ValueError(f"unknown code kind {self.code_kind!r}")
        if self.bits_per_feature < 1:
            raise ValueError("bits_per_feature must be >= 1")
        if self.code_kind == "gray2" and self.bits_per_feature < 2:
            raise ValueError("gray2 needs at least 2 bits per feature")
        if self.clip_range <= 0:
            raise ValueError("clip_range must be positive")

    @property
    def levels(self) -> int:
        q = self.bits_per_feature
        if self.code_kind == "thermometer":
            return q
        return q * (q - 1) // 2


@dataclass(frozen=True)
class Codebook:
    """Per-level bit strings, one row per quantization level."""

    codewords: np.ndarray  # (levels, bits_per_feature) uint8

    @property
    def levels(self) -> int:
        return self.codewords.shape[0]

    @property
    def bits_per_feature(self) -> int:
        return self.codewords.shape[1]

    def encode(self, level_indices: np.ndarray) -> np.ndarray:
        """Concatenated codewords for a vector of level indices."""
        return self.codewords[np.asarray(level_indices)].reshape(-1)


def standardize_vector(f: np.ndarray) -> tuple[np.ndarray, bool]:
    """Standardize a vector against its own mean and population variance.

    Returns (standardized, degenerate). A zero-variance input maps to the
    all-zero vector with the degenerate flag set.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] < 2:
        raise ValueError("feature vector must be 1-D with length >= 2")
    mean = f.mean()
    std = f.std()  # population convention (divide by n)
    if std == 0.0:
        return np.zeros_like(f), True
    return (f - mean) / std, False


def quantize_level(x: float, cfg: QuantizerConfig) -> int:
    """Map a standardized value to a level index in {0, ..., levels-1}.

    Uniform bins over [-clip_range, +clip_range] with saturation outside.
    """
    return int(_quantize_levels(np.asarray([x], dtype=np.float64), cfg)[0])


def _quantize_levels(x: np.ndarray, cfg: QuantizerConfig) -> np.ndarray:
    l, a = cfg.levels, cfg.clip_range
    idx = np.floor((x + a) * (l / (2.0 * a))).astype(np.int64)
    return np.clip(idx, 0, l - 1)


def _gray2_pairs(q: int):
    """Weight-2 positions in revolving-door order: consecutive pairs share one."""
    for j in range(1, q):
        inner = range(j - 1, -1, -1) if j % 2 == 1 else range(j)
        for i in inner:
            yield (i, j)


def build_codebook(cfg: QuantizerConfig) -> Codebook:
    q, l = cfg.bits_per_feature, cfg.levels
    words = np.zeros((l, q), dtype=np.uint8)
    if cfg.code_kind == "thermometer":
        for i in range(l):
            words[i, :i] = 1
    else:
        for level, (i, j) in enumerate(_gray2_pairs(q), start=1):
            if level >= l:
                break
            words[level, i] = 1
            words[level, j] = 1
    return Codebook(words)


class QuantizedEmbedder:
    """Quantization embedding bound to a fixed input length.

    Precomputes the codebook and the output permutation so per-vector
    embedding is a lookup, a reshape and a gather.
    """

    def __init__(self, n_features: int, cfg: QuantizerConfig):
        if n_features < 2:
            raise ValueError("need at least 2 features")
        self.n_features = n_features
        self.cfg = cfg
        self.codebook = build_codebook(cfg)
        self.dim = n_features * cfg.bits_per_feature
        if cfg.permutation_seed is None:
            self.permutation = None
        else:
            rng = np.random.default_rng(cfg.permutation_seed)
            self.permutation = rng.permutation(self.dim)

    def levels_for(self, f: np.ndarray) -> np.ndarray:
        standardized, _ = standardize_vector(f)
        return _quantize_levels(standardized, cfg=self.cfg)

    def embed(self, f: np.ndarray) -> Hypervector:
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got {f.shape}")
        bits = self.codebook.encode(self.levels_for(f))
        if self.permutation is not None:
            bits = bits[self.permutation]
        return Hypervector.from_bits(bits)


def embed_quantized(f: np.ndarray, cfg: QuantizerConfig) -> Hypervector:
    """One-shot embedding of a single feature vector."""
    f = np.asarray(f, dtype=np.float64)
    return QuantizedEmbedder(f.shape[0], cfg).embed(f)
