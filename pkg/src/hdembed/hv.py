"""Bit-packed binary hypervectors and the MAP operation set.

Hypervectors are dense binary vectors of dimension ``dim`` (typically
thousands of bits) stored in little-endian uint64 words. The algebra:

    bind(a, b)        component-wise XOR; invertible, distance-preserving
    bundle(vs, rng)   bit-wise majority; similar to every input
    permute(a, k)     cyclic right shift by k bit positions
    hamming(a, b)     normalized Hamming distance in [0, 1]

Thresholding conventions are fixed once for the whole package: a count
exactly on the majority threshold yields bit 1, and an even number of
bundled vectors is resolved by adding one extra random vector drawn from
the ``rng`` argument, so every randomized result is replayable from a seed.

``Accumulator`` holds an unbinarized integer sum of vectors (used for
higher-resolution prototype training), ``ItemMemory`` is a seeded store of
labelled vectors with nearest-neighbor cleanup.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .backend import kernels

WORD_BITS = 64

__all__ = [
    "Hypervector",
    "Accumulator",
    "ItemMemory",
    "random_hv",
    "hamming",
    "bind",
    "complement",
    "permute",
    "bundle",
    "accumulate",
    "binarize",
    "im_nearest",
    "encode_record",
    "decode_field",
]


def _n_words(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS


def _pad_mask(dim: int) -> np.uint64:
    """Mask of valid bit positions in the last word."""
    used = dim % WORD_BITS
    if used == 0:
        return np.uint64(0xFFFFFFFFFFFFFFFF)
    return np.uint64((1 << used) - 1)


def _pack(bits: np.ndarray) -> np.ndarray:
    dim = bits.shape[0]
    packed = np.packbits(bits.astype(np.uint8, copy=False), bitorder="little")
    words = np.zeros(_n_words(dim) * 8, dtype=np.uint8)
    words[: packed.shape[0]] = packed
    return words.view(np.uint64)


class Hypervector:
    """Immutable bit-packed binary vector of a fixed dimension."""

    __slots__ = ("dim", "words")

    def __init__(self, dim: int, words: np.ndarray):
        if dim < 1:
            raise ValueError("hypervector dimension must be >= 1")
        if words.dtype != np.uint64 or words.shape != (_n_words(dim),):
            raise ValueError("words must be a uint64 array of length ceil(dim/64)")
        words = np.ascontiguousarray(words)
        words.flags.writeable = False
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "words", words)

    def __setattr__(self, name, value):
        raise AttributeError("Hypervector is immutable")

    @classmethod
    def from_bits(cls, bits) -> "Hypervector":
        bits = np.asarray(bits)
        if bits.ndim != 1 or bits.shape[0] < 1:
            raise ValueError("bits must be a non-empty 1-D array")
        return cls(bits.shape[0], _pack(bits))

    def bits(self) -> np.ndarray:
        """Unpacked {0,1} uint8 array of length ``dim``."""
        return np.unpackbits(self.words.view(np.uint8), bitorder="little", count=self.dim)

    def count(self) -> int:
        """Number of set bits."""
        return int(kernels.popcount_words(self.words))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.words, other.words))

    def __hash__(self) -> int:
        return hash((self.dim, self.words.tobytes()))

    def __xor__(self, other: "Hypervector") -> "Hypervector":
        return bind(self, other)

    def __repr__(self) -> str:
        return f"Hypervector(dim={self.dim}, ones={self.count()})"


def _check_same_dim(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")


def random_hv(dim: int, rng) -> Hypervector:
    """Draw a hypervector with i.i.d. equiprobable bits from ``rng``.

    ``rng`` is a ``numpy.random.Generator`` or a seed acceptable to
    ``numpy.random.default_rng``; identical stream state gives an
    identical vector.
    """
    if dim < 1:
        raise ValueError("hypervector dimension must be >= 1")
    rng = np.random.default_rng(rng)
    words = rng.integers(0, 2**64, size=_n_words(dim), dtype=np.uint64)
    words[-1] &= _pad_mask(dim)
    return Hypervector(dim, words)


def hamming(a: Hypervector, b: Hypervector) -> float:
    """Normalized Hamming distance: fraction of differing bits, in [0, 1]."""
    _check_same_dim(a, b)
    return kernels.hamming_words(a.words, b.words) / a.dim


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """Component-wise XOR. Self-inverse and exactly distance-preserving."""
    _check_same_dim(a, b)
    return Hypervector(a.dim, a.words ^ b.words)


def complement(a: Hypervector) -> Hypervector:
    """Flip every bit."""
    words = ~a.words
    words[-1] &= _pad_mask(a.dim)
    return Hypervector(a.dim, words)


def permute(a: Hypervector, shift: int) -> Hypervector:
    """Cyclic right shift of the bit sequence by ``shift`` positions (mod dim)."""
    shift = shift % a.dim
    if shift == 0:
        return a
    return Hypervector.from_bits(np.roll(a.bits(), shift))


class Accumulator:
    """Integer per-component sum of hypervectors, prior to binarization.

    Mutable and single-writer. ``n_added`` tracks the majority threshold;
    when merging unclipped encoder outputs it grows by the number of
    bundled vectors they represent, keeping every count <= n_added.
    """

    __slots__ = ("dim", "counts", "n_added")

    def __init__(self, dim: int, counts: np.ndarray | None = None, n_added: int = 0):
        if dim < 1:
            raise ValueError("accumulator dimension must be >= 1")
        if counts is None:
            counts = np.zeros(dim, dtype=np.int64)
        else:
            counts = np.asarray(counts, dtype=np.int64)
            if counts.shape != (dim,):
                raise ValueError("counts length must equal dim")
        self.dim = dim
        self.counts = counts
        self.n_added = int(n_added)

    def add(self, v: Hypervector) -> "Accumulator":
        if v.dim != self.dim:
            raise ValueError(f"dimension mismatch: {v.dim} != {self.dim}")
        kernels.add_bits_to_counts(v.words, self.counts)
        self.n_added += 1
        return self

    def add_counts(self, values: np.ndarray, weight: int) -> "Accumulator":
        """Merge an integer component vector that stands for ``weight`` additions."""
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (self.dim,):
            raise ValueError("values length must equal dim")
        if weight < 1 or np.any(values < 0) or np.any(values > weight):
            raise ValueError("values must lie in [0, weight]")
        self.counts += values
        self.n_added += int(weight)
        return self

    def merge(self, other: "Accumulator") -> "Accumulator":
        return self.add_counts(other.counts, other.n_added)

    def copy(self) -> "Accumulator":
        return Accumulator(self.dim, self.counts.copy(), self.n_added)

    def __repr__(self) -> str:
        return f"Accumulator(dim={self.dim}, n_added={self.n_added})"


def accumulate(acc: Accumulator, v: Hypervector | Accumulator) -> Accumulator:
    """Fold a hypervector (or another accumulator) into ``acc`` in place."""
    if isinstance(v, Accumulator):
        return acc.merge(v)
    return acc.add(v)


def binarize(acc: Accumulator, rng=None) -> Hypervector:
    """Majority-threshold an accumulator into a hypervector.

    Bit i is 1 when counts[i] >= n_added / 2 (a count exactly on the
    threshold gives 1). For an even n_added one extra random vector from
    ``rng`` is folded in first, which flips exactly the tied positions at
    random. Does not modify ``acc``.
    """
    if acc.n_added < 1:
        raise ValueError("cannot binarize an empty accumulator")
    counts, n = acc.counts, acc.n_added
    if n % 2 == 0:
        if rng is None:
            raise ValueError("even number of additions requires an rng for tie-breaking")
        tie = random_hv(acc.dim, rng)
        counts = counts + tie.bits()
        n += 1
    return Hypervector(acc.dim, kernels.threshold_counts(counts, n))


def bundle(vs: Sequence[Hypervector], rng=None) -> Hypervector:
    """Bit-wise majority of one or more hypervectors."""
    if len(vs) == 0:
        raise ValueError("cannot bundle an empty sequence")
    dim = vs[0].dim
    acc = Accumulator(dim)
    mat = np.stack([v.words for v in vs]) if len(vs) > 1 else None
    if mat is None:
        acc.add(vs[0])
    else:
        for v in vs[1:]:
            if v.dim != dim:
                raise ValueError("all bundled vectors must share one dimension")
        kernels.add_bits_matrix(mat, acc.counts)
        acc.n_added = len(vs)
    return binarize(acc, rng)


class ItemMemory:
    """Ordered store of labelled seed hypervectors with nearest cleanup.

    Generated memories are fully reproducible from (seed, count, dim).
    """

    def __init__(self, labels: Sequence, matrix: np.ndarray, dim: int, seed=None):
        if len(labels) != matrix.shape[0]:
            raise ValueError("one row per label required")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique")
        self.labels = list(labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        self._matrix = np.ascontiguousarray(matrix, dtype=np.uint64)
        self.dim = dim
        self.seed = seed

    @classmethod
    def generate(cls, labels_or_count, dim: int, seed) -> "ItemMemory":
        """Draw one random hypervector per label from a stream seeded by ``seed``."""
        if isinstance(labels_or_count, int):
            labels = list(range(labels_or_count))
        else:
            labels = list(labels_or_count)
        rng = np.random.default_rng(seed)
        rows = [random_hv(dim, rng).words for _ in labels]
        return cls(labels, np.stack(rows), dim, seed=seed)

    @classmethod
    def from_entries(cls, entries: Iterable[tuple]) -> "ItemMemory":
        entries = list(entries)
        if not entries:
            raise ValueError("item memory needs at least one entry")
        dim = entries[0][1].dim
        labels = [lab for lab, _ in entries]
        mat = np.stack([hv.words for _, hv in entries])
        for _, hv in entries:
            if hv.dim != dim:
                raise ValueError("all entries must share one dimension")
        return cls(labels, mat, dim)

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label) -> bool:
        return label in self._index

    def get(self, label) -> Hypervector:
        return Hypervector(self.dim, self._matrix[self._index[label]].copy())

    def vector(self, index: int) -> Hypervector:
        return Hypervector(self.dim, self._matrix[index].copy())

    def nearest(self, q: Hypervector) -> tuple:
        """(label, normalized distance) of the closest entry; ties -> lowest index."""
        if len(self.labels) == 0:
            raise ValueError("item memory is empty")
        if q.dim != self.dim:
            raise ValueError(f"dimension mismatch: {q.dim} != {self.dim}")
        dists = kernels.hamming_one_to_many(q.words, self._matrix)
        i = int(np.argmin(dists))
        return self.labels[i], dists[i] / self.dim


def im_nearest(im: ItemMemory, q: Hypervector) -> tuple:
    """Closest stored entry to ``q`` as (label, distance)."""
    return im.nearest(q)


def encode_record(pairs: Sequence[tuple], rng=None) -> Hypervector:
    """Bundle of field-value bindings: a holographic record hypervector."""
    if len(pairs) == 0:
        raise ValueError("record needs at least one (field, value) pair")
    return bundle([bind(f, v) for f, v in pairs], rng)


def decode_field(record: Hypervector, field: Hypervector, im: ItemMemory):
    """Recover the value bound to ``field`` by unbinding and IM cleanup."""
    return im.nearest(bind(field, record))[0]
