"""Cross-validated experiment orchestration and reporting.

For every fold the front-end statistics (reference covariances and feature
standardization) are fitted on the training trials only, then the chosen
embedding and associative memory are trained and the held-out trials
classified. All randomness is derived from the master seed with fixed
context tags, so a rerun with the same config reproduces every non-timing
field of the report bit for bit.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import am as am_mod
from . import learnproj
from .config import ExperimentConfig, derive_seed
from .data import TrialDataset, make_folds
from .encoder import band_item_memory, encode_trial
from .quantize import QuantizedEmbedder, QuantizerConfig
from .randproj import gen_projection
from .riemann import RiemannFrontEnd, n_features

__all__ = [
    "RunReport",
    "FoldResult",
    "TrainedEmbedding",
    "accuracy",
    "footprint_bits",
    "train_embedding",
    "train_memory",
    "classify_trials",
    "run_fold",
    "run_experiment",
    "write_report",
]

# seed derivation tags (master seed, tag, [fold], [trial])
_TAG_FOLDS = 1
_TAG_IM = 2
_TAG_PERM = 3
_TAG_PROJ = 4
_TAG_MODEL = 5
_TAG_TIES = 6
_TAG_AM = 7


def accuracy(predictions, labels) -> float:
    """Percentage of correct predictions."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise ValueError("predictions and labels must be equal-length and non-empty")
    return 100.0 * float(np.mean(predictions == labels))


def footprint_bits(embedding: str, n_classes: int, dim: int,
                   n_feats: int, n_bands: int) -> dict:
    """Model storage cost per component, in bits.

    The quantized codes are rule-generated (0 bits); the sparse projection
    stores two bits per entry; the learned projection stores 8-bit floats;
    a dense 64-bit linear classifier over the flattened features is included
    as a reference point.
    """
    per_embedding = {
        "thermometer": 0,
        "gray2": 0,
        "random_projection": 2 * n_feats * dim,
        "learned": 8 * n_feats * dim,
    }
    if embedding not in per_embedding:
        raise ValueError(f"unknown embedding {embedding!r}")
    return {
        "am": n_classes * dim,
        "hd_encoder": dim,
        "embedding": per_embedding[embedding],
        "svm_reference": 64 * n_classes * n_feats * n_bands,
    }


@dataclass
class FoldResult:
    accuracy: float
    predictions: np.ndarray
    labels: np.ndarray
    confusion: np.ndarray
    prototype_similarity: np.ndarray
    timings: dict


@dataclass
class RunReport:
    fold_accuracies: list
    mean_accuracy: float
    confusion: np.ndarray
    prototype_similarity: list
    footprint: dict
    timings: dict
    config: dict
    band_list: list                  # resolved (low, high) pairs, preset expanded
    n_features: int
    n_bands: int
    dim: int

    def to_json(self) -> str:
        doc = {
            "fold_accuracies": self.fold_accuracies,
            "mean_accuracy": self.mean_accuracy,
            "confusion": self.confusion.tolist(),
            "prototype_similarity": [m.tolist() for m in self.prototype_similarity],
            "footprint_bits": self.footprint,
            "timings_seconds": self.timings,
            "config": self.config,
            "band_list": self.band_list,
            "n_features": self.n_features,
            "n_bands": self.n_bands,
            "dim": self.dim,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [
            f"{'embedding':<18} {self.config['embedding']}",
            f"{'dim':<18} {self.dim}",
            f"{'features/band':<18} {self.n_features}",
            f"{'bands':<18} {self.n_bands}",
            f"{'mean accuracy':<18} {self.mean_accuracy:.2f} %",
        ]
        for i, acc in enumerate(self.fold_accuracies):
            lines.append(f"{f'fold {i}':<18} {acc:.2f} %")
        lines.append("confusion matrix (rows = true class):")
        for row in self.confusion:
            lines.append("  " + " ".join(f"{int(v):5d}" for v in row))
        lines.append("prototype distances (fold 0):")
        for row in self.prototype_similarity[0]:
            lines.append("  " + " ".join(f"{v:6.3f}" for v in row))
        lines.append("footprint [bits]:")
        for key, val in self.footprint.items():
            lines.append(f"  {key:<18} {val}")
        lines.append("timings [s]:")
        for key, val in self.timings.items():
            lines.append(f"  {key:<18} {val:.6f}")
        return "\n".join(lines)


def _build_embedder(cfg: ExperimentConfig, n_feats: int, fold: int):
    """Untrained embedder plus the resolved hypervector dimension."""
    if cfg.embedding in ("thermometer", "gray2"):
        qcfg = QuantizerConfig(
            bits_per_feature=cfg.quantizer_bits(),
            code_kind=cfg.embedding,
            clip_range=cfg.clip_range,
            permutation_seed=derive_seed(cfg.seed, _TAG_PERM),
        )
        emb = QuantizedEmbedder(n_feats, qcfg)
        return emb, emb.dim
    dim = cfg.resolved_dim(n_feats)
    if cfg.embedding == "random_projection":
        proj = gen_projection(dim, n_feats, cfg.sparsity,
                              seed=derive_seed(cfg.seed, _TAG_PROJ, fold))
        return proj, dim
    return None, dim  # learned: built after the item memory exists


def _tie_rng(cfg: ExperimentConfig, fold: int, trial: int):
    return np.random.default_rng(derive_seed(cfg.seed, _TAG_TIES, fold, trial))


@dataclass
class TrainedEmbedding:
    embedder: object
    im: object
    target_am: object = None       # learned kind: AM holding the class targets
    model: object = None           # learned kind: the trained LearnedModel


def train_embedding(cfg: ExperimentConfig, train_feats: np.ndarray,
                    train_labels: np.ndarray, n_classes: int,
                    fold: int = 0) -> TrainedEmbedding:
    """Embedder plus band item memory; trains the projection when learned."""
    n_bands, n_feats = train_feats.shape[1], train_feats.shape[2]
    embedder, dim = _build_embedder(cfg, n_feats, fold)
    im = band_item_memory(n_bands, dim, seed=derive_seed(cfg.seed, _TAG_IM))
    if cfg.embedding != "learned":
        return TrainedEmbedding(embedder, im)
    tcfg = learnproj.TrainConfig(
        learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
        epochs=cfg.epochs, momentum=cfg.momentum, init_scale=cfg.init_scale,
        seed=derive_seed(cfg.seed, _TAG_MODEL, fold))
    model = learnproj.init_model(n_feats, dim, n_classes, n_bands, im, tcfg)
    learnproj.train(model, train_feats, train_labels)
    embedder, target_am = learnproj.export(model, cfg.quantize_export)
    return TrainedEmbedding(embedder, im, target_am, model)


def train_memory(cfg: ExperimentConfig, emb: TrainedEmbedding,
                 train_feats: np.ndarray, train_labels: np.ndarray,
                 n_classes: int, fold: int = 0):
    """Associative memory for the fold; learned k=1 reuses the class targets."""
    if cfg.embedding == "learned" and cfg.am_k == 1:
        return emb.target_am
    encoded = [
        (encode_trial(train_feats[i], emb.embedder, emb.im,
                      clip_output=cfg.clip_output or cfg.am_k > 1,
                      rng=_tie_rng(cfg, fold, i)), int(train_labels[i]))
        for i in range(train_feats.shape[0])
    ]
    am_rng = np.random.default_rng(derive_seed(cfg.seed, _TAG_AM, fold))
    if cfg.am_k == 1:
        return am_mod.am_train(encoded, n_classes, rng=am_rng)
    return am_mod.am_kmeans(encoded, n_classes, cfg.am_k, cfg.am_restarts,
                            cfg.am_iters, rng=am_rng, init=cfg.am_init)


def classify_trials(cfg: ExperimentConfig, emb: TrainedEmbedding, memory,
                    feats: np.ndarray, fold: int = 0) -> np.ndarray:
    preds = np.empty(feats.shape[0], dtype=np.int64)
    for j in range(feats.shape[0]):
        q = encode_trial(feats[j], emb.embedder, emb.im, clip_output=True,
                         rng=_tie_rng(cfg, fold, 10_000_000 + j))
        preds[j] = memory.classify(q)
    return preds


def run_fold(cfg: ExperimentConfig, ds: TrialDataset, fold: int,
             train_idx: np.ndarray, test_idx: np.ndarray) -> FoldResult:
    timings = {}
    t0 = time.perf_counter()
    front = RiemannFrontEnd(cfg.filter_bank(), alpha=cfg.alpha)
    front.fit(ds.samples[train_idx], ds.fs)
    train_feats = front.transform_many(ds.samples[train_idx])
    test_feats = front.transform_many(ds.samples[test_idx])
    timings["fit_features"] = time.perf_counter() - t0

    train_labels = ds.labels[train_idx]
    t0 = time.perf_counter()
    emb = train_embedding(cfg, train_feats, train_labels, ds.n_classes, fold)
    timings["train_embedding"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    memory = train_memory(cfg, emb, train_feats, train_labels, ds.n_classes, fold)
    timings["train_am"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    preds = classify_trials(cfg, emb, memory, test_feats, fold)
    timings["inference_per_trial"] = (time.perf_counter() - t0) / max(1, len(test_idx))

    test_labels = ds.labels[test_idx]
    conf = np.zeros((ds.n_classes, ds.n_classes), dtype=np.int64)
    for truth, pred in zip(test_labels, preds):
        conf[truth - 1, pred - 1] += 1
    return FoldResult(accuracy(preds, test_labels), preds, test_labels, conf,
                      am_mod.prototype_similarity(memory), timings)


def run_experiment(cfg: ExperimentConfig, ds: TrialDataset) -> RunReport:
    cfg.validate()
    n_feats = n_features(ds.n_channels)
    dim = cfg.resolved_dim(n_feats)  # raises before any compute on mismatch
    bank = cfg.filter_bank()
    folds = make_folds(ds, cfg.folds, by_session=cfg.by_session,
                       seed=derive_seed(cfg.seed, _TAG_FOLDS))

    def job(args):
        fold, (train_idx, test_idx) = args
        return run_fold(cfg, ds, fold, train_idx, test_idx)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(job, enumerate(folds)))
    else:
        results = [job(item) for item in enumerate(folds)]

    confusion = np.sum([r.confusion for r in results], axis=0)
    timings = {key: float(np.mean([r.timings[key] for r in results]))
               for key in results[0].timings}
    return RunReport(
        fold_accuracies=[r.accuracy for r in results],
        mean_accuracy=float(np.mean([r.accuracy for r in results])),
        confusion=confusion,
        prototype_similarity=[r.prototype_similarity for r in results],
        footprint=footprint_bits(cfg.embedding, ds.n_classes, dim, n_feats,
                                 bank.n_bands),
        timings=timings,
        config=cfg.to_dict(),
        band_list=[list(b) for b in bank.bands],
        n_features=n_feats,
        n_bands=bank.n_bands,
        dim=dim,
    )


def write_report(report: RunReport, outdir) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    (out / "summary.txt").write_text(report.summary() + "\n")
