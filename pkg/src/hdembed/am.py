"""Associative memory: prototype training, nearest-prototype classification,
and Hamming-space k-means for multiple prototypes per class.

Class labels are 1-based throughout. Classification returns the class whose
nearest prototype (over its k slots) has the smallest normalized Hamming
distance to the query; distance ties resolve to the lowest class id, and
within a class to the lowest slot index.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .hv import Accumulator, Hypervector, _n_words, binarize, random_hv

__all__ = [
    "AssociativeMemory",
    "am_train",
    "am_classify",
    "am_kmeans",
    "hd_kmeans",
    "KMeansResult",
    "prototype_similarity",
    "save_am",
    "load_am",
]


class AssociativeMemory:
    """n_classes x k prototype hypervectors plus per-prototype addition counts."""

    def __init__(self, dim: int, n_classes: int, k: int,
                 prototypes: np.ndarray, counts: np.ndarray):
        if n_classes < 1 or k < 1:
            raise ValueError("need at least one class and one prototype per class")
        if prototypes.shape != (n_classes * k, _n_words(dim)):
            raise ValueError("prototype matrix shape mismatch")
        self.dim = dim
        self.n_classes = n_classes
        self.k = k
        self._matrix = np.ascontiguousarray(prototypes, dtype=np.uint64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (n_classes * k,) or np.any(self.counts < 0):
            raise ValueError("counts must be non-negative, one per prototype")

    @classmethod
    def from_prototypes(cls, protos: list[list[Hypervector]],
                        counts: list[list[int]] | None = None) -> "AssociativeMemory":
        n_classes = len(protos)
        k = len(protos[0])
        dim = protos[0][0].dim
        rows = [p.words for cls_protos in protos for p in cls_protos]
        if counts is None:
            flat_counts = np.zeros(n_classes * k, dtype=np.int64)
        else:
            flat_counts = np.asarray([c for cc in counts for c in cc], dtype=np.int64)
        return cls(dim, n_classes, k, np.stack(rows), flat_counts)

    def prototype(self, label: int, slot: int = 0) -> Hypervector:
        return Hypervector(self.dim, self._matrix[(label - 1) * self.k + slot].copy())

    def distances(self, q: Hypervector) -> np.ndarray:
        """Normalized distance from q to every prototype, shape (n_classes, k)."""
        if q.dim != self.dim:
            raise ValueError(f"dimension mismatch: {q.dim} != {self.dim}")
        d = kernels.hamming_one_to_many(q.words, self._matrix)
        return (d / self.dim).reshape(self.n_classes, self.k)

    def classify(self, q: Hypervector) -> int:
        per_class = self.distances(q).min(axis=1)
        return int(np.argmin(per_class)) + 1


def am_train(encoded, n_classes: int, rng=None) -> AssociativeMemory:
    """Accumulate encoded samples per class and binarize into k=1 prototypes.

    ``encoded`` is a sequence of (Hypervector | Accumulator, label) pairs;
    accumulator inputs carry unclipped per-band votes and raise the
    per-class addition count by their own n_added. Classes with no samples
    are reported in the raised error.
    """
    encoded = list(encoded)
    if not encoded:
        raise ValueError("no training samples")
    dim = encoded[0][0].dim
    accs = [Accumulator(dim) for _ in range(n_classes)]
    for sample, label in encoded:
        if not 1 <= label <= n_classes:
            raise ValueError(f"label {label} outside 1..{n_classes}")
        acc = accs[label - 1]
        if isinstance(sample, Accumulator):
            acc.merge(sample)
        else:
            acc.add(sample)
    empty = [i + 1 for i, acc in enumerate(accs) if acc.n_added == 0]
    if empty:
        raise ValueError(f"classes with no training samples: {empty}")
    protos = np.stack([binarize(acc, rng).words for acc in accs])
    counts = np.asarray([acc.n_added for acc in accs], dtype=np.int64)
    return AssociativeMemory(dim, n_classes, 1, protos, counts)


def am_classify(am: AssociativeMemory, q: Hypervector) -> int:
    """Label of the nearest prototype (min over slots, argmin over classes)."""
    return am.classify(q)


@dataclass
class KMeansResult:
    centroids: np.ndarray      # (k, words) packed
    assignments: np.ndarray    # (n,)
    objective: float           # summed normalized within-cluster distance
    history: list[float]       # objective after each update step
    n_iters: int


def _majority_rows(rows: np.ndarray, dim: int, rng) -> np.ndarray:
    counts = np.zeros(dim, dtype=np.int64)
    kernels.add_bits_matrix(rows, counts)
    n = rows.shape[0]
    if n % 2 == 0:
        counts = counts + random_hv(dim, rng).bits()
        n += 1
    return kernels.threshold_counts(counts, n)


def _objective(samples: np.ndarray, centroids: np.ndarray,
               assignments: np.ndarray, dim: int) -> float:
    total = 0
    for c in range(centroids.shape[0]):
        members = samples[assignments == c]
        if members.shape[0]:
            total += int(kernels.hamming_one_to_many(centroids[c], members).sum())
    return total / dim


def _kmeans_single(samples: np.ndarray, dim: int, k: int, max_iters: int,
                   rng, init: str) -> KMeansResult:
    n = samples.shape[0]
    if init == "d2":
        centroid_idx = _d2_seed(samples, dim, k, rng)
    else:
        centroid_idx = rng.choice(n, size=k, replace=False)
    centroids = samples[centroid_idx].copy()

    dists = np.empty((n, k), dtype=np.int64)
    assignments = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    it = 0
    for it in range(1, max_iters + 1):
        for c in range(k):
            dists[:, c] = kernels.hamming_one_to_many(centroids[c], samples)
        new_assign = np.argmin(dists, axis=1)  # ties -> lowest centroid index

        # Repair empty clusters with the sample farthest from its centroid.
        repaired: list[int] = []
        for c in range(k):
            if not np.any(new_assign == c):
                own = dists[np.arange(n), new_assign].astype(np.float64)
                own[repaired] = -1.0  # distances are stale for moved samples
                far = int(np.argmax(own))
                repaired.append(far)
                new_assign[far] = c
                centroids[c] = samples[far]

        history.append(_objective(samples, centroids, new_assign, dim))
        if np.array_equal(new_assign, assignments):
            assignments = new_assign
            break
        assignments = new_assign

        for c in range(k):
            members = samples[assignments == c]
            centroids[c] = _majority_rows(members, dim, rng)
        history.append(_objective(samples, centroids, assignments, dim))

    return KMeansResult(centroids, assignments, history[-1], history, it)


def _d2_seed(samples: np.ndarray, dim: int, k: int, rng) -> np.ndarray:
    """Distance-squared weighted seeding over the sample set."""
    n = samples.shape[0]
    chosen = [int(rng.integers(n))]
    closest = kernels.hamming_one_to_many(samples[chosen[0]], samples).astype(np.float64)
    while len(chosen) < k:
        w = closest**2
        if w.sum() == 0:
            remaining = [i for i in range(n) if i not in chosen]
            chosen.append(int(rng.choice(remaining)))
            continue
        nxt = int(rng.choice(n, p=w / w.sum()))
        chosen.append(nxt)
        closest = np.minimum(closest, kernels.hamming_one_to_many(samples[nxt], samples))
    return np.asarray(chosen)


def hd_kmeans(samples: list[Hypervector], k: int, restarts: int = 10,
              max_iters: int = 100, rng=None, init: str = "random") -> KMeansResult:
    """Hamming-distance k-means with majority-vote centroid updates.

    Runs ``restarts`` independent clusterings from random training samples
    and keeps the one with the smallest total within-cluster distance.
    """
    if len(samples) == 0:
        raise ValueError("no samples to cluster")
    dim = samples[0].dim
    mat = np.stack([s.words for s in samples])
    if k < 1 or k > mat.shape[0]:
        raise ValueError(f"k must lie in 1..{mat.shape[0]}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if init not in ("random", "d2"):
        raise ValueError("init must be 'random' or 'd2'")
    rng = np.random.default_rng(rng)
    best: KMeansResult | None = None
    for _ in range(max(1, restarts)):
        result = _kmeans_single(mat, dim, k, max_iters, rng, init)
        if best is None or result.objective < best.objective:
            best = result
    return best


def am_kmeans(encoded, n_classes: int, k: int, restarts: int = 10,
              max_iters: int = 100, rng=None, init: str = "random") -> AssociativeMemory:
    """Cluster each class's binary samples into k prototypes."""
    rng = np.random.default_rng(rng)
    encoded = list(encoded)
    by_class: list[list[Hypervector]] = [[] for _ in range(n_classes)]
    for sample, label in encoded:
        if not 1 <= label <= n_classes:
            raise ValueError(f"label {label} outside 1..{n_classes}")
        if not isinstance(sample, Hypervector):
            raise ValueError("k-means training requires clipped (binary) samples")
        by_class[label - 1].append(sample)
    dim = encoded[0][0].dim
    rows = []
    counts = []
    for label0, samples in enumerate(by_class):
        if len(samples) < k:
            raise ValueError(f"class {label0 + 1} has {len(samples)} samples < k={k}")
        result = hd_kmeans(samples, k, restarts, max_iters, rng, init)
        rows.append(result.centroids)
        counts.extend(np.bincount(result.assignments, minlength=k).tolist())
    return AssociativeMemory(dim, n_classes, k, np.concatenate(rows),
                             np.asarray(counts, dtype=np.int64))


def prototype_similarity(am: AssociativeMemory) -> np.ndarray:
    """Pairwise normalized Hamming distances between all stored prototypes."""
    n = am.n_classes * am.k
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        d = kernels.hamming_one_to_many(am._matrix[i], am._matrix[i:])
        out[i, i:] = d / am.dim
        out[i:, i] = out[i, i:]
    return out


_AM_MAGIC = b"HDAM"


def save_am(am: AssociativeMemory, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_AM_MAGIC)
        fh.write(struct.pack("<HHHI", 1, am.n_classes, am.k, am.dim))
        fh.write(am._matrix.astype("<u8").tobytes())
        fh.write(am.counts.astype("<i8").tobytes())


def load_am(path) -> AssociativeMemory:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _AM_MAGIC:
        raise ValueError(f"not an associative-memory checkpoint: bad magic {raw[:4]!r}")
    version, n_classes, k, dim = struct.unpack_from("<HHHI", raw, 4)
    if version != 1:
        raise ValueError(f"unsupported AM checkpoint version {version}")
    off = 4 + struct.calcsize("<HHHI")
    n_words = _n_words(dim)
    protos = np.frombuffer(raw, dtype="<u8", count=n_classes * k * n_words, offset=off)
    off += protos.nbytes
    counts = np.frombuffer(raw, dtype="<i8", count=n_classes * k, offset=off)
    return AssociativeMemory(dim, n_classes, k,
                             protos.reshape(n_classes * k, n_words).copy(),
                             counts.copy())
