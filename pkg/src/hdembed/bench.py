"""Wall-clock timing harness: per-trial classifier train/inference times
and a micro-benchmark of the packed-bit kernels across backends.

Timings exclude feature extraction (features are precomputed once) and the
first warm-up repetition. Energy measurement is out of scope; this harness
reports time only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .backend import available_backends
from .config import ExperimentConfig, derive_seed
from .data import TrialDataset, make_folds
from .riemann import RiemannFrontEnd


@dataclass
class BenchResult:
    train_per_trial: tuple[float, float]   # (mean s, std s)
    infer_per_trial: tuple[float, float]
    repeats: int
    n_train: int
    n_test: int

    def summary(self) -> str:
        tm, ts = self.train_per_trial
        im, istd = self.infer_per_trial
        return "\n".join([
            f"{'repeats':<22} {self.repeats}",
            f"{'train trials':<22} {self.n_train}",
            f"{'test trials':<22} {self.n_test}",
            f"{'train / trial [ms]':<22} {1e3 * tm:.4f} +- {1e3 * ts:.4f}",
            f"{'inference / trial [ms]':<22} {1e3 * im:.4f} +- {1e3 * istd:.4f}",
        ])


def benchmark(cfg: ExperimentConfig, ds: TrialDataset, repeats: int = 10) -> BenchResult:
    """Average per-trial training and inference time of the classifier.

    Features come from the first cross-validation fold's split and are
    computed once up front; each repetition times embedding + memory
    training over the train set and per-trial classification over the test
    set. Runs single-threaded.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    from .pipeline import (_TAG_FOLDS, classify_trials, train_embedding,
                           train_memory)

    cfg.validate()
    train_idx, test_idx = make_folds(ds, cfg.folds, by_session=cfg.by_session,
                                     seed=derive_seed(cfg.seed, _TAG_FOLDS))[0]
    front = RiemannFrontEnd(cfg.filter_bank(), alpha=cfg.alpha)
    front.fit(ds.samples[train_idx], ds.fs)
    train_feats = front.transform_many(ds.samples[train_idx])
    test_feats = front.transform_many(ds.samples[test_idx])
    train_labels = ds.labels[train_idx]

    train_times, infer_times = [], []
    for rep in range(repeats + 1):  # first pass is the untimed warm-up
        t0 = time.perf_counter()
        emb = train_embedding(cfg, train_feats, train_labels, ds.n_classes)
        memory = train_memory(cfg, emb, train_feats, train_labels, ds.n_classes)
        t_train = time.perf_counter() - t0

        t0 = time.perf_counter()
        classify_trials(cfg, emb, memory, test_feats)
        t_infer = time.perf_counter() - t0

        if rep == 0:
            continue
        train_times.append(t_train / len(train_idx))
        infer_times.append(t_infer / len(test_idx))
    return BenchResult(
        train_per_trial=(float(np.mean(train_times)), float(np.std(train_times))),
        infer_per_trial=(float(np.mean(infer_times)), float(np.std(infer_times))),
        repeats=repeats,
        n_train=len(train_idx),
        n_test=len(test_idx),
    )


def _time_op(fn, repeats: int) -> float:
    fn()  # warm-up
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def kernel_benchmark(dim: int = 10000, n_vectors: int = 256,
                     repeats: int = 20) -> list[tuple[str, str, float]]:
    """Compare the compiled and numpy kernel backends on the hot operations.

    Returns (backend, operation, seconds-per-call) rows.
    """
    rng = np.random.default_rng(0)
    n_words = (dim + 63) // 64
    mat = rng.integers(0, 2**64, size=(n_vectors, n_words), dtype=np.uint64)
    mask = np.uint64(0xFFFFFFFFFFFFFFFF) if dim % 64 == 0 \
        else np.uint64((1 << (dim % 64)) - 1)
    mat[:, -1] &= mask
    q = mat[0].copy()
    counts = np.zeros(dim, dtype=np.int64)

    rows = []
    for name, mod in available_backends().items():
        ops = {
            "hamming_one_to_many": lambda m=mod: m.hamming_one_to_many(q, mat),
            "add_bits_matrix": lambda m=mod: m.add_bits_matrix(mat, counts.copy()),
            "threshold_counts": lambda m=mod: m.threshold_counts(counts, n_vectors),
            "hamming_words": lambda m=mod: m.hamming_words(q, mat[1]),
        }
        for op_name, fn in ops.items():
            rows.append((name, op_name, _time_op(fn, repeats)))
    return rows


def format_kernel_table(rows: list[tuple[str, str, float]]) -> str:
    by_op: dict[str, dict[str, float]] = {}
    for backend, op, seconds in rows:
        by_op.setdefault(op, {})[backend] = seconds
    backends = sorted({r[0] for r in rows}, key=lambda b: b != "cython")
    head = f"{'operation':<22}" + "".join(f"{b + ' [us]':>16}" for b in backends)
    if len(backends) == 2:
        head += f"{'speedup':>10}"
    lines = [head]
    for op, vals in by_op.items():
        line = f"{op:<22}" + "".join(f"{1e6 * vals[b]:>16.2f}" for b in backends)
        if len(backends) == 2:
            line += f"{vals[backends[1]] / vals[backends[0]]:>9.1f}x"
        lines.append(line)
    return "\n".join(lines)
