"""Hypervector algebra: exact identities, boundary dims, randomized
statistical properties, and item-memory retrieval."""

import math

import numpy as np
import pytest

from hdembed import hv


def _pair(dim, seed):
    rng = np.random.default_rng(seed)
    return hv.random_hv(dim, rng), hv.random_hv(dim, rng)


class TestRandomHV:
    def test_deterministic_from_seed(self):
        a = hv.random_hv(10000, np.random.default_rng(7))
        b = hv.random_hv(10000, np.random.default_rng(7))
        assert a == b

    def test_independent_draws_near_half_distance(self):
        a, b = _pair(10000, 1)
        assert 0.485 <= hv.hamming(a, b) <= 0.515

    def test_single_bit_vector(self):
        v = hv.random_hv(1, np.random.default_rng(0))
        assert v.dim == 1
        assert v.bits()[0] in (0, 1)

    def test_zero_dim_rejected(self):
        with pytest.raises(ValueError):
            hv.random_hv(0, np.random.default_rng(0))

    def test_quasi_orthogonality_statistics(self):
        # sample std of pair distances behaves like 0.5/sqrt(dim)
        rng = np.random.default_rng(42)
        dists = np.array([hv.hamming(hv.random_hv(10000, rng),
                                     hv.random_hv(10000, rng))
                          for _ in range(1000)])
        assert abs(dists.mean() - 0.5) <= 0.005
        assert abs(dists.std() - 0.005) <= 0.002


class TestHamming:
    def test_self_distance_zero(self):
        a, _ = _pair(512, 3)
        assert hv.hamming(a, a) == 0.0

    def test_complement_distance_one(self):
        for dim in (1, 63, 64, 65, 10000):
            a = hv.random_hv(dim, np.random.default_rng(dim))
            assert hv.hamming(a, hv.complement(a)) == 1.0

    def test_hand_counted_case(self):
        a = hv.Hypervector.from_bits([0, 1, 0, 1])
        b = hv.Hypervector.from_bits([0, 1, 1, 0])
        assert hv.hamming(a, b) == 0.5

    def test_dim_mismatch_rejected(self):
        a = hv.random_hv(64, np.random.default_rng(0))
        b = hv.random_hv(65, np.random.default_rng(0))
        with pytest.raises(ValueError):
            hv.hamming(a, b)


class TestBind:
    def test_self_binding_is_zero(self):
        a, _ = _pair(1000, 5)
        assert hv.bind(a, a).count() == 0

    def test_isometry_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            dim = int(rng.integers(1, 2049))
            a, b, c = (hv.random_hv(dim, rng) for _ in range(3))
            assert hv.hamming(hv.bind(a, c), hv.bind(b, c)) == hv.hamming(a, b)

    def test_invertible(self):
        a, b = _pair(777, 9)
        assert hv.bind(hv.bind(a, b), b) == a

    def test_xor_operator(self):
        a, b = _pair(100, 2)
        assert (a ^ b) == hv.bind(a, b)


class TestPermute:
    def test_zero_and_full_shift_identity(self):
        a, _ = _pair(513, 4)
        assert hv.permute(a, 0) == a
        assert hv.permute(a, 513) == a
        assert hv.permute(a, -513) == a

    def test_small_shift(self):
        a = hv.Hypervector.from_bits([1, 0, 0, 0])
        assert list(hv.permute(a, 1).bits()) == [0, 1, 0, 0]

    def test_isometry(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            dim = int(rng.integers(2, 513))
            shift = int(rng.integers(-dim, dim))
            a, b = hv.random_hv(dim, rng), hv.random_hv(dim, rng)
            assert hv.hamming(hv.permute(a, shift), hv.permute(b, shift)) \
                == hv.hamming(a, b)

    def test_roundtrip(self):
        a, _ = _pair(200, 6)
        assert hv.permute(hv.permute(a, 17), -17) == a


def _minority_probability(m: int) -> float:
    """Chance that the majority of m fair bits disagrees with a given one."""
    return sum(math.comb(m - 1, j) for j in range(m // 2)) / 2 ** (m - 1)


class TestBundle:
    def test_single_vector_identity(self):
        a, _ = _pair(999, 7)
        assert hv.bundle([a]) == a

    def test_two_of_three_majority(self):
        a, b = _pair(4096, 8)
        assert hv.bundle([a, a, b]) == a

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            hv.bundle([])

    @pytest.mark.parametrize("m", [3, 5, 7])
    def test_distance_to_inputs_matches_binomial(self, m):
        rng = np.random.default_rng(m)
        vs = [hv.random_hv(10000, rng) for _ in range(m)]
        out = hv.bundle(vs)
        expected = _minority_probability(m)
        for v in vs:
            assert abs(hv.hamming(out, v) - expected) <= 0.02

    def test_even_count_needs_rng(self):
        a, b = _pair(256, 10)
        with pytest.raises(ValueError):
            hv.bundle([a, b])

    def test_even_count_replayable(self):
        rng = np.random.default_rng(21)
        vs = [hv.random_hv(512, rng) for _ in range(4)]
        r1 = hv.bundle(vs, np.random.default_rng(99))
        r2 = hv.bundle(vs, np.random.default_rng(99))
        assert r1 == r2


class TestAccumulator:
    def test_threshold_by_hand(self):
        acc = hv.Accumulator(3, counts=[3, 1, 2], n_added=3)
        assert list(hv.binarize(acc).bits()) == [1, 0, 1]

    def test_single_accumulate_roundtrip(self):
        a, _ = _pair(300, 12)
        acc = hv.accumulate(hv.Accumulator(300), a)
        assert hv.binarize(acc) == a

    def test_binarize_empty_rejected(self):
        with pytest.raises(ValueError):
            hv.binarize(hv.Accumulator(16))

    def test_binarize_does_not_mutate(self):
        rng = np.random.default_rng(1)
        acc = hv.Accumulator(128)
        acc.add(hv.random_hv(128, rng)).add(hv.random_hv(128, rng))
        before = acc.counts.copy()
        hv.binarize(acc, np.random.default_rng(2))
        np.testing.assert_array_equal(acc.counts, before)
        assert acc.n_added == 2

    def test_even_count_depends_only_on_tie_stream(self):
        rng = np.random.default_rng(33)
        acc = hv.Accumulator(2048)
        for _ in range(4):
            acc.add(hv.random_hv(2048, rng))
        assert hv.binarize(acc, np.random.default_rng(5)) \
            == hv.binarize(acc, np.random.default_rng(5))
        # untied positions never depend on the tie vector
        r1 = hv.binarize(acc, np.random.default_rng(5)).bits()
        r2 = hv.binarize(acc, np.random.default_rng(6)).bits()
        untied = acc.counts != acc.n_added // 2
        np.testing.assert_array_equal(r1[untied], r2[untied])

    def test_merge_weighted_counts(self):
        acc = hv.Accumulator(4)
        acc.add_counts(np.array([3, 0, 2, 1]), weight=3)
        assert acc.n_added == 3
        with pytest.raises(ValueError):
            acc.add_counts(np.array([4, 0, 0, 0]), weight=3)  # count > weight

    def test_accumulate_dispatches_on_type(self):
        a, b = _pair(64, 17)
        acc1 = hv.Accumulator(64)
        hv.accumulate(acc1, a)
        acc2 = hv.Accumulator(64)
        hv.accumulate(acc2, b)
        hv.accumulate(acc2, acc1)
        assert acc2.n_added == 2


class TestItemMemory:
    def test_reproducible_from_seed(self):
        im1 = hv.ItemMemory.generate(10, 1000, seed=3)
        im2 = hv.ItemMemory.generate(10, 1000, seed=3)
        for i in range(10):
            assert im1.vector(i) == im2.vector(i)

    def test_exact_query(self):
        im = hv.ItemMemory.generate(20, 2048, seed=1)
        label, dist = hv.im_nearest(im, im.vector(7))
        assert label == 7 and dist == 0.0

    def test_noisy_retrieval_third_of_bits(self):
        dim = 10000
        im = hv.ItemMemory.generate(100, dim, seed=5)
        rng = np.random.default_rng(6)
        for _ in range(20):
            target = int(rng.integers(100))
            bits = im.vector(target).bits()
            flip = rng.choice(dim, size=dim // 3, replace=False)
            bits[flip] ^= 1
            label, _ = im.nearest(hv.Hypervector.from_bits(bits))
            assert label == target

    def test_tie_breaks_to_lowest_index(self):
        a = hv.Hypervector.from_bits([0, 0, 0, 0])
        b = hv.Hypervector.from_bits([1, 1, 1, 1])
        im = hv.ItemMemory.from_entries([("first", a), ("second", b)])
        q = hv.Hypervector.from_bits([0, 0, 1, 1])  # equidistant
        assert im.nearest(q)[0] == "first"

    def test_duplicate_labels_rejected(self):
        a, b = _pair(64, 8)
        with pytest.raises(ValueError):
            hv.ItemMemory.from_entries([("x", a), ("x", b)])


class TestRecords:
    def test_three_field_record_decodes(self):
        rng = np.random.default_rng(2)
        dim = 10000
        fields = {name: hv.random_hv(dim, rng) for name in "xyz"}
        values = {name: hv.random_hv(dim, rng) for name in "abc"}
        im = hv.ItemMemory.from_entries(values.items())
        record = hv.encode_record(
            [(fields["x"], values["a"]),
             (fields["y"], values["b"]),
             (fields["z"], values["c"])])
        assert hv.decode_field(record, fields["x"], im) == "a"
        assert hv.decode_field(record, fields["y"], im) == "b"
        assert hv.decode_field(record, fields["z"], im) == "c"

    def test_single_pair_is_exact(self):
        rng = np.random.default_rng(3)
        f, v = hv.random_hv(4096, rng), hv.random_hv(4096, rng)
        im = hv.ItemMemory.from_entries([("v", v)])
        record = hv.encode_record([(f, v)])
        assert hv.bind(f, record) == v
        assert im.nearest(hv.bind(f, record))[1] == 0.0

    def test_seven_pairs_still_decode(self):
        rng = np.random.default_rng(4)
        dim = 10000
        pairs = [(hv.random_hv(dim, rng), hv.random_hv(dim, rng)) for _ in range(7)]
        im = hv.ItemMemory.from_entries((i, v) for i, (_, v) in enumerate(pairs))
        record = hv.encode_record(pairs)
        for i, (f, _) in enumerate(pairs):
            assert hv.decode_field(record, f, im) == i

    def test_empty_record_rejected(self):
        with pytest.raises(ValueError):
            hv.encode_record([])
