# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for packed binary hypervectors.

Layout contract (shared with the numpy fallback): bit i of a vector lives
in word i // 64 at bit position i % 64, and padding bits past the vector
dimension are always zero.
"""

import numpy as np

cimport numpy as cnp

cdef extern from *:
    """
    /* Hardware popcount when the ISA flag is set at compile time,
       SWAR fallback otherwise. */
    #if defined(__POPCNT__) || defined(__ARM_NEON)
    #define hd_popcount64(x) ((unsigned long long)__builtin_popcountll(x))
    #else
    static inline unsigned long long hd_popcount64(unsigned long long x) {
        x = x - ((x >> 1) & 0x5555555555555555ULL);
        x = (x & 0x3333333333333333ULL) + ((x >> 2) & 0x3333333333333333ULL);
        x = (x + (x >> 4)) & 0x0f0f0f0f0f0f0f0fULL;
        return (x * 0x0101010101010101ULL) >> 56;
    }
    #endif
    static inline int hd_ctz64(unsigned long long x) {
        return __builtin_ctzll(x);
    }
    """
    unsigned long long hd_popcount64(unsigned long long x) nogil
    int hd_ctz64(unsigned long long x) nogil


def popcount_words(const cnp.uint64_t[::1] words):
    """Total number of set bits in a packed word array."""
    cdef Py_ssize_t i
    cdef unsigned long long total = 0
    with nogil:
        for i in range(words.shape[0]):
            total += hd_popcount64(words[i])
    return total


def hamming_words(const cnp.uint64_t[::1] a, const cnp.uint64_t[::1] b):
    """Number of differing bits between two packed word arrays."""
    cdef Py_ssize_t i
    cdef unsigned long long total = 0
    with nogil:
        for i in range(a.shape[0]):
            total += hd_popcount64(a[i] ^ b[i])
    return total


def hamming_one_to_many(const cnp.uint64_t[::1] q, const cnp.uint64_t[:, ::1] mat):
    """Bit distances from one packed vector to every row of a packed matrix."""
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t w = mat.shape[1]
    cdef Py_ssize_t i, j
    # four independent accumulators keep the popcount pipeline busy
    cdef unsigned long long a0, a1, a2, a3
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out_v = out
    with nogil:
        for i in range(n):
            a0 = a1 = a2 = a3 = 0
            j = 0
            while j + 4 <= w:
                a0 += hd_popcount64(q[j] ^ mat[i, j])
                a1 += hd_popcount64(q[j + 1] ^ mat[i, j + 1])
                a2 += hd_popcount64(q[j + 2] ^ mat[i, j + 2])
                a3 += hd_popcount64(q[j + 3] ^ mat[i, j + 3])
                j += 4
            while j < w:
                a0 += hd_popcount64(q[j] ^ mat[i, j])
                j += 1
            out_v[i] = <cnp.int64_t> (a0 + a1 + a2 + a3)
    return out


cdef inline void _add_word_bits(unsigned long long w, cnp.int64_t * counts) noexcept nogil:
    # visit set bits only; clearing the lowest one each step
    while w:
        counts[hd_ctz64(w)] += 1
        w &= w - 1


def add_bits_to_counts(const cnp.uint64_t[::1] words, cnp.int64_t[::1] counts):
    """Add the unpacked bits of one packed vector into an integer counts array."""
    cdef Py_ssize_t n_words = words.shape[0]
    cdef Py_ssize_t wi
    if (counts.shape[0] + 63) >> 6 != n_words:
        raise ValueError("counts length does not match the packed width")
    with nogil:
        for wi in range(n_words):
            _add_word_bits(words[wi], &counts[wi << 6])


def add_bits_matrix(const cnp.uint64_t[:, ::1] mat, cnp.int64_t[::1] counts):
    """Accumulate the bits of every row of a packed matrix into counts."""
    cdef Py_ssize_t n = mat.shape[0]
    cdef Py_ssize_t n_words = mat.shape[1]
    cdef Py_ssize_t r, wi
    if (counts.shape[0] + 63) >> 6 != n_words:
        raise ValueError("counts length does not match the packed width")
    with nogil:
        for r in range(n):
            for wi in range(n_words):
                _add_word_bits(mat[r, wi], &counts[wi << 6])


def threshold_counts(const cnp.int64_t[::1] counts, cnp.int64_t n):
    """Pack bit i = (2 * counts[i] >= n); padding bits stay zero."""
    cdef Py_ssize_t d = counts.shape[0]
    cdef Py_ssize_t n_words = (d + 63) >> 6
    cdef Py_ssize_t i
    out = np.zeros(n_words, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out_v = out
    with nogil:
        for i in range(d):
            if 2 * counts[i] >= n:
                out_v[i >> 6] |= (<cnp.uint64_t> 1) << (i & 63)
    return out
