"""Backend equivalence: the compiled kernels and the numpy fallback must
agree bit for bit on every operation and every dimension, including ones
that straddle word boundaries."""

import numpy as np
import pytest

from hdembed import _kernels_np

try:
    from hdembed import _kernels
    BACKENDS = [("cython", _kernels), ("numpy", _kernels_np)]
except ImportError:  # extension not built
    _kernels = None
    BACKENDS = [("numpy", _kernels_np)]

DIMS = [1, 7, 63, 64, 65, 128, 1000, 10000]


def _random_packed(rng, n, dim):
    n_words = (dim + 63) // 64
    mat = rng.integers(0, 2**64, size=(n, n_words), dtype=np.uint64)
    if dim % 64:
        mat[:, -1] &= np.uint64((1 << (dim % 64)) - 1)
    return mat


@pytest.mark.parametrize("dim", DIMS)
def test_backends_agree(dim):
    if _kernels is None:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(dim)
    mat = _random_packed(rng, 8, dim)
    q = mat[0].copy()
    counts = rng.integers(0, 50, size=dim).astype(np.int64)

    assert _kernels.popcount_words(q) == _kernels_np.popcount_words(q)
    assert _kernels.hamming_words(q, mat[3]) == _kernels_np.hamming_words(q, mat[3])
    np.testing.assert_array_equal(
        _kernels.hamming_one_to_many(q, mat),
        _kernels_np.hamming_one_to_many(q, mat))

    c1, c2 = counts.copy(), counts.copy()
    _kernels.add_bits_to_counts(mat[2], c1)
    _kernels_np.add_bits_to_counts(mat[2], c2)
    np.testing.assert_array_equal(c1, c2)

    c1, c2 = counts.copy(), counts.copy()
    _kernels.add_bits_matrix(mat, c1)
    _kernels_np.add_bits_matrix(mat, c2)
    np.testing.assert_array_equal(c1, c2)

    for n in (1, 7, 8, 49):
        np.testing.assert_array_equal(
            _kernels.threshold_counts(counts, n),
            _kernels_np.threshold_counts(counts, n))


@pytest.mark.parametrize("name,mod", BACKENDS)
def test_kernel_semantics_against_unpacked(name, mod):
    """Each kernel must match a direct computation on unpacked bits."""
    rng = np.random.default_rng(5)
    for dim in (1, 65, 321):
        mat = _random_packed(rng, 5, dim)
        bits = np.unpackbits(mat.view(np.uint8), axis=1, bitorder="little",
                             count=dim).astype(np.int64)
        assert mod.popcount_words(mat[0]) == bits[0].sum()
        assert mod.hamming_words(mat[0], mat[1]) == int(np.sum(bits[0] != bits[1]))
        np.testing.assert_array_equal(
            mod.hamming_one_to_many(mat[0], mat),
            (bits != bits[0]).sum(axis=1))

        counts = np.zeros(dim, dtype=np.int64)
        mod.add_bits_matrix(mat, counts)
        np.testing.assert_array_equal(counts, bits.sum(axis=0))

        n = 5
        packed = mod.threshold_counts(counts, n)
        expect = (2 * counts >= n).astype(np.int64)
        got = np.unpackbits(packed.view(np.uint8), bitorder="little", count=dim)
        np.testing.assert_array_equal(got, expect)
        # padding bits beyond dim stay zero
        tail = np.unpackbits(packed.view(np.uint8), bitorder="little")[dim:]
        assert not tail.any()


@pytest.mark.parametrize("name,mod", BACKENDS)
def test_threshold_boundary_is_inclusive(name, mod):
    # count exactly on the majority threshold yields bit 1
    counts = np.array([2, 1, 3, 0], dtype=np.int64)
    packed = mod.threshold_counts(counts, 4)
    bits = np.unpackbits(packed.view(np.uint8), bitorder="little", count=4)
    np.testing.assert_array_equal(bits, [1, 0, 1, 0])
