"""Pure-numpy fallback for the compiled bit kernels.

Same function surface and packed-word layout as ``hdembed._kernels``:
bit i sits in word i // 64 at position i % 64, padding bits are zero.
"""

import numpy as np


def popcount_words(words):
    return int(np.bitwise_count(words).sum())


def hamming_words(a, b):
    return int(np.bitwise_count(a ^ b).sum())


def hamming_one_to_many(q, mat):
    return np.bitwise_count(mat ^ q[np.newaxis, :]).sum(axis=1).astype(np.int64)


def _unpack(words, d):
    return np.unpackbits(words.view(np.uint8), bitorder="little", count=d)


def add_bits_to_counts(words, counts):
    counts += _unpack(words, counts.shape[0])


def add_bits_matrix(mat, counts):
    d = counts.shape[0]
    bits = np.unpackbits(mat.view(np.uint8), axis=1, bitorder="little", count=d)
    counts += bits.sum(axis=0, dtype=np.int64)


def threshold_counts(counts, n):
    bits = (2 * counts >= n).astype(np.uint8)
    packed = np.packbits(bits, bitorder="little")
    n_words = (counts.shape[0] + 63) // 64
    padded = np.zeros(n_words * 8, dtype=np.uint8)
    padded[: packed.shape[0]] = packed
    return padded.view(np.uint64)
