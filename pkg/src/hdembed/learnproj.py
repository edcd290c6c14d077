"""End-to-end trained projection into Hamming space.

The binary encoder (project -> threshold -> XOR with the band vector ->
majority across bands) has an exact real-valued twin that can be trained
with gradient descent:

    r_b = W f_b                     shared dense projection, no bias
    z   = sum_b D(r_b) * csign_b    D(x) = +1 if x >= 0 else -1
    S   = sigmoid(z)                per-bit probability that the encoded
                                    bit is 1

where csign_b = 1 - 2*C_b turns the band hypervector's bits into signs, so
XOR becomes multiplication under the bit -> (-1)^bit correspondence.
Thresholding S at 0.5 (ties to 1) reproduces the binary encoder output
bit for bit. Training minimizes binary cross-entropy against one random
target hypervector per class; gradients cross the discretization with the
straight-through estimator (passed where |r| <= 1, zero elsewhere).
After training the targets become the class prototypes directly, so no
separate associative-memory pass is needed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .am import AssociativeMemory
from .hv import Hypervector, ItemMemory, _n_words, random_hv

__all__ = [
    "TrainConfig",
    "LearnedModel",
    "DenseProjection",
    "init_model",
    "forward",
    "bce_loss",
    "ste_grad",
    "backward_ste",
    "train",
    "export",
    "float8_quantize",
    "save_model",
    "load_model",
]

_BCE_EPS = 1e-12


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 50
    momentum: float = 0.9
    init_scale: float | None = None  # None -> 1 / sqrt(n_features)
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("learning_rate > 0, batch_size >= 1, epochs >= 0 required")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.init_scale is not None and self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass
class LearnedModel:
    weights: np.ndarray          # (dim, n_features) float64
    targets: list[Hypervector]   # one per class, frozen at init
    band_signs: np.ndarray       # (n_bands, dim) float64 in {-1, +1}
    band_memory: ItemMemory
    config: TrainConfig
    target_bits: np.ndarray = field(init=False)  # (n_classes, dim) float64

    def __post_init__(self):
        self.target_bits = np.stack([t.bits().astype(np.float64) for t in self.targets])

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.targets)

    @property
    def n_bands(self) -> int:
        return self.band_signs.shape[0]


def init_model(n_features: int, dim: int, n_classes: int, n_bands: int,
               item_memory: ItemMemory, cfg: TrainConfig | None = None) -> LearnedModel:
    """Fresh model: uniform random weights, random binary class targets,
    band signs derived from the first ``n_bands`` item-memory entries."""
    cfg = cfg or TrainConfig()
    if item_memory.dim != dim:
        raise ValueError(f"item memory dim {item_memory.dim} != model dim {dim}")
    if len(item_memory) < n_bands:
        raise ValueError(f"item memory holds {len(item_memory)} < {n_bands} band vectors")
    scale = cfg.init_scale if cfg.init_scale is not None else 1.0 / np.sqrt(n_features)
    rng = np.random.default_rng(cfg.seed)
    weights = rng.uniform(-scale, scale, size=(dim, n_features))
    targets = [random_hv(dim, rng) for _ in range(n_classes)]
    band_signs = np.stack(
        [1.0 - 2.0 * item_memory.vector(b).bits().astype(np.float64)
         for b in range(n_bands)]
    )
    return LearnedModel(weights, targets, band_signs, item_memory, cfg)


def _band_sum(model: LearnedModel, banded: np.ndarray, discretize: bool) -> tuple:
    """Pre-activations r (n_bands, dim) and band sum z (dim,)."""
    banded = np.asarray(banded, dtype=np.float64)
    if banded.shape != (model.n_bands, model.n_features):
        raise ValueError(
            f"expected features of shape {(model.n_bands, model.n_features)}, "
            f"got {banded.shape}")
    r = banded @ model.weights.T
    d = np.where(r >= 0.0, 1.0, -1.0) if discretize else r
    z = (d * model.band_signs).sum(axis=0)
    return r, z


def forward(model: LearnedModel, banded: np.ndarray, discretize: bool = True) -> np.ndarray:
    """Per-bit probabilities S in (0, 1)^dim for one banded feature sample.

    With ``discretize=False`` the sign nonlinearity is replaced by the
    identity, giving the smooth path used for gradient verification.
    """
    _, z = _band_sum(model, banded, discretize)
    return expit(z)


def bce_loss(s: np.ndarray, target_bits: np.ndarray) -> float:
    """Binary cross-entropy between probabilities and target bits, mean over
    components, clamped against log(0)."""
    s = np.clip(np.asarray(s, dtype=np.float64), _BCE_EPS, 1.0 - _BCE_EPS)
    t = np.asarray(target_bits, dtype=np.float64)
    return float(np.mean(-(t * np.log(s) + (1.0 - t) * np.log(1.0 - s))))


def ste_grad(upstream: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Straight-through estimate: pass the gradient where |r| <= 1, else zero."""
    return np.asarray(upstream) * (np.abs(r) <= 1.0)


def backward_ste(model: LearnedModel, banded: np.ndarray, grad_at_s: np.ndarray,
                 discretize: bool = True) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. the weights, given dL/dS.

    The sigmoid and the band sum are differentiated analytically; the
    discretization uses the straight-through estimator.
    """
    banded = np.asarray(banded, dtype=np.float64)
    r, z = _band_sum(model, banded, discretize)
    s = expit(z)
    g_z = np.asarray(grad_at_s, dtype=np.float64) * s * (1.0 - s)
    g_r = g_z[np.newaxis, :] * model.band_signs
    if discretize:
        g_r = ste_grad(g_r, r)
    return g_r.T @ banded  # (dim, n_features)


def train(model: LearnedModel, features: np.ndarray, labels: np.ndarray,
          cfg: TrainConfig | None = None) -> LearnedModel:
    """Mini-batch SGD with momentum on the cross-entropy to class targets.

    ``features`` has shape (n_samples, n_bands, n_features); ``labels`` are
    1-based class ids. Sample order is reshuffled every epoch from the
    config seed, so identical inputs give identical trained weights.
    """
    cfg = cfg or model.config
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 3 or features.shape[0] == 0:
        raise ValueError("features must be (n_samples, n_bands, n_features), non-empty")
    if features.shape[1:] != (model.n_bands, model.n_features):
        raise ValueError("feature geometry does not match the model")
    if np.any(labels < 1) or np.any(labels > model.n_classes):
        raise ValueError(f"labels must lie in 1..{model.n_classes}")

    n = features.shape[0]
    targets = model.target_bits[labels - 1]  # (n, dim)
    rng = np.random.default_rng(cfg.seed)
    velocity = np.zeros_like(model.weights)
    w = model.weights
    signs = model.band_signs[np.newaxis]  # (1, n_bands, dim)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            fb = features[idx]                       # (B, n_bands, n_features)
            tb = targets[idx]                        # (B, dim)
            b = fb.shape[0]
            flat = fb.reshape(b * model.n_bands, model.n_features)
            r = (flat @ w.T).reshape(b, model.n_bands, model.dim)
            z = (np.where(r >= 0.0, 1.0, -1.0) * signs).sum(axis=1)
            s = expit(z)
            g_z = (s - tb) / (model.dim * b)         # fused sigmoid + BCE, mean reduction
            g_r = (g_z[:, np.newaxis, :] * signs) * (np.abs(r) <= 1.0)
            grad = g_r.reshape(b * model.n_bands, model.dim).T @ flat
            velocity = cfg.momentum * velocity + grad
            w -= cfg.learning_rate * velocity
    return model


class DenseProjection:
    """Dense real projection used for binary inference: bit i = 1 iff
    row i of the weights dotted with the features is >= 0."""

    def __init__(self, weights: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.dim = self.weights.shape[0]
        self.n_features = self.weights.shape[1]

    def embed(self, f: np.ndarray) -> Hypervector:
        f = np.asarray(f, dtype=np.float64)
        if f.shape != (self.n_features,):
            raise ValueError(f"expected {self.n_features} features, got {f.shape}")
        z = self.weights @ f
        return Hypervector.from_bits((z >= 0.0).astype(np.uint8))


def export(model: LearnedModel, quantize_weights: bool = False
           ) -> tuple[DenseProjection, AssociativeMemory]:
    """Binary inference pipeline: the trained projection plus an associative
    memory whose prototypes are the class targets drawn at init."""
    w = float8_quantize(model.weights) if quantize_weights else model.weights.copy()
    am = AssociativeMemory.from_prototypes([[t] for t in model.targets])
    return DenseProjection(w), am


# --- 8-bit minifloat (1 sign, 4 exponent, 3 mantissa bits, bias 7) ---------

def _float8_table() -> np.ndarray:
    vals = np.empty(128, dtype=np.float64)
    for e in range(16):
        for m in range(8):
            if e == 0:
                vals[e * 8 + m] = (m / 8.0) * 2.0**-6
            else:
                vals[e * 8 + m] = (1.0 + m / 8.0) * 2.0 ** (e - 7)
    vals[127] = vals[126]  # NaN slot unused; alias to the max finite value
    return vals


_F8_VALUES = _float8_table()


def _float8_encode(w: np.ndarray) -> np.ndarray:
    mag = np.minimum(np.abs(w), _F8_VALUES[-1])
    hi = np.searchsorted(_F8_VALUES, mag).clip(0, 127)
    lo = np.maximum(hi - 1, 0)
    pick_hi = (_F8_VALUES[hi] - mag) <= (mag - _F8_VALUES[lo])
    idx = np.where(pick_hi, hi, lo).astype(np.uint8)
    return np.where(w < 0, idx | 0x80, idx).astype(np.uint8)


def _float8_decode(codes: np.ndarray) -> np.ndarray:
    mag = _F8_VALUES[codes & 0x7F]
    return np.where(codes & 0x80, -mag, mag)


def float8_quantize(w: np.ndarray) -> np.ndarray:
    """Round every entry to the nearest 8-bit minifloat value."""
    return _float8_decode(_float8_encode(np.asarray(w, dtype=np.float64)))


# --- checkpoint -------------------------------------------------------------

_MODEL_MAGIC = b"HDLM"


def save_model(model: LearnedModel, path, quantize_weights: bool = False) -> None:
    """Write the checkpoint: header, weights (float32 or 8-bit codes),
    packed targets, packed band-vector bits."""
    im_seed = model.band_memory.seed
    if not isinstance(im_seed, (int, np.integer)):
        raise ValueError("saving requires an integer-seeded band item memory")
    with open(path, "wb") as fh:
        fh.write(_MODEL_MAGIC)
        fh.write(struct.pack("<HBIIHHQQ", 1, 1 if quantize_weights else 0,
                             model.dim, model.n_features, model.n_classes,
                             model.n_bands, model.config.seed, int(im_seed)))
        if quantize_weights:
            fh.write(_float8_encode(model.weights).tobytes())
        else:
            fh.write(model.weights.astype("<f4").tobytes())
        for t in model.targets:
            fh.write(t.words.astype("<u8").tobytes())
        for b in range(model.n_bands):
            fh.write(model.band_memory.vector(b).words.astype("<u8").tobytes())


def load_model(path) -> LearnedModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MODEL_MAGIC:
        raise ValueError(f"not a projection checkpoint: bad magic {raw[:4]!r}")
    header = struct.Struct("<HBIIHHQQ")
    version, quantized, dim, n_features, n_classes, n_bands, seed, im_seed = \
        header.unpack_from(raw, 4)
    if version != 1:
        raise ValueError(f"unsupported model checkpoint version {version}")
    off = 4 + header.size
    n_weights = dim * n_features
    if quantized:
        codes = np.frombuffer(raw, dtype=np.uint8, count=n_weights, offset=off)
        weights = _float8_decode(codes).reshape(dim, n_features)
        off += n_weights
    else:
        weights = np.frombuffer(raw, dtype="<f4", count=n_weights, offset=off)
        weights = weights.astype(np.float64).reshape(dim, n_features)
        off += n_weights * 4
    n_words = _n_words(dim)
    targets = []
    for _ in range(n_classes):
        words = np.frombuffer(raw, dtype="<u8", count=n_words, offset=off).copy()
        targets.append(Hypervector(dim, words))
        off += n_words * 8
    entries = []
    for b in range(n_bands):
        words = np.frombuffer(raw, dtype="<u8", count=n_words, offset=off).copy()
        entries.append((b, Hypervector(dim, words)))
        off += n_words * 8
    im = ItemMemory.from_entries(entries)
    im.seed = int(im_seed)
    cfg = TrainConfig(seed=int(seed))
    return LearnedModel(weights, targets, _band_signs_from_im(im, n_bands), im, cfg)


def _band_signs_from_im(im: ItemMemory, n_bands: int) -> np.ndarray:
    return np.stack([1.0 - 2.0 * im.vector(b).bits().astype(np.float64)
                     for b in range(n_bands)])
