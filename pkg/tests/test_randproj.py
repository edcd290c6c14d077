"""Sparse tripolar projection: generation statistics, sign semantics, and
locality sensitivity."""

import numpy as np
import pytest
import scipy.stats

from hdembed import hv
from hdembed.randproj import SparseProjection, gen_projection, project_binarize


class TestGeneration:
    def test_full_density_has_no_zeros(self):
        proj = gen_projection(200, 17, sparsity=1.0, seed=0)
        assert proj.nonzero_fraction == 1.0

    def test_seed_reproducibility(self):
        a = gen_projection(500, 30, 0.1, seed=4)
        b = gen_projection(500, 30, 0.1, seed=4)
        assert (a.matrix != b.matrix).nnz == 0

    def test_values_are_tripolar(self):
        proj = gen_projection(300, 20, 0.25, seed=2)
        assert set(np.unique(proj.matrix.data)) <= {-1.0, 1.0}

    @pytest.mark.parametrize("s", [0.1, 2.0 / 3.0])
    def test_sparsity_within_binomial_ci(self, s):
        d, nf = 10000, 136
        proj = gen_projection(d, nf, s, seed=11)
        n = d * nf
        half_width = 2.576 * np.sqrt(s * (1 - s) / n)  # 99% CI
        assert abs(proj.nonzero_fraction - s) <= half_width

    def test_bad_sparsity_rejected(self):
        for s in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                gen_projection(10, 5, s, seed=0)


class TestProjection:
    def test_zero_input_gives_all_ones(self):
        proj = gen_projection(256, 12, 0.5, seed=1)
        out = project_binarize(proj, np.zeros(12))
        assert out.count() == 256

    def test_positive_scale_invariance(self):
        rng = np.random.default_rng(3)
        proj = gen_projection(512, 24, 0.2, seed=5)
        for _ in range(50):
            f = rng.normal(size=24)
            c = float(rng.uniform(0.01, 100.0))
            assert project_binarize(proj, c * f) == project_binarize(proj, f)

    def test_hand_worked_rows(self):
        rows = np.array([[1, -1], [-1, 1], [1, 1], [-1, -1]], dtype=float)
        proj = SparseProjection.from_matrix(rows)
        out = project_binarize(proj, np.array([2.0, 1.0]))
        # dot products (1, -1, 3, -3)
        assert list(out.bits()) == [1, 0, 1, 0]

    def test_length_mismatch_rejected(self):
        proj = gen_projection(64, 8, 0.5, seed=0)
        with pytest.raises(ValueError):
            project_binarize(proj, np.zeros(9))

    def test_antipodal_inputs_flip_nonzero_rows(self):
        proj = gen_projection(2048, 16, 0.3, seed=7)
        f = np.random.default_rng(8).normal(size=16)
        z = proj.matrix @ f
        pos, neg = project_binarize(proj, f).bits(), project_binarize(proj, -f).bits()
        differs = pos != neg
        np.testing.assert_array_equal(differs, z != 0.0)

    def test_embed_many_matches_single(self):
        proj = gen_projection(300, 10, 0.4, seed=9)
        feats = np.random.default_rng(10).normal(size=(7, 10))
        packed = proj.embed_many(feats)
        for i in range(7):
            assert hv.Hypervector(300, packed[i].copy()) == proj.embed(feats[i])


class TestLocality:
    def test_mean_bit_value_near_half(self):
        proj = gen_projection(10000, 64, 0.1, seed=12)
        rng = np.random.default_rng(13)
        means = [proj.embed(rng.normal(size=64)).count() / 10000 for _ in range(30)]
        assert 0.49 <= float(np.mean(means)) <= 0.51

    def test_hamming_tracks_angle(self):
        """Embedding distance must grow with angular distance (rank corr > 0.9).

        Pairs are unit vectors at angles spread over (0, pi); independent
        Gaussian pairs would all sit near pi/2 and carry no rank signal.
        """
        dim, nf = 10000, 16
        proj = gen_projection(dim, nf, 0.1, seed=14)
        rng = np.random.default_rng(15)
        angles, dists = [], []
        for _ in range(200):
            u = rng.normal(size=nf)
            u /= np.linalg.norm(u)
            w = rng.normal(size=nf)
            w -= (w @ u) * u
            w /= np.linalg.norm(w)
            theta = float(rng.uniform(0.0, np.pi))
            v = np.cos(theta) * u + np.sin(theta) * w
            angles.append(theta)
            dists.append(hv.hamming(proj.embed(u), proj.embed(v)))
        rho = scipy.stats.spearmanr(angles, dists).statistic
        assert rho > 0.9
