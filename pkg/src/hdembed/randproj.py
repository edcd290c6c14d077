"""Sparse tripolar random projection into Hamming space.

Entries of the projection matrix are +1 or -1 each with probability s/2
and 0 otherwise; a feature vector is embedded by projecting and taking the
sign (value exactly 0 maps to bit 1). The matrix is fully determined by
(dim, n_features, sparsity, seed), so only those four numbers ever need to
be persisted; one matrix is shared across all frequency bands.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

from .hv import Hypervector, _n_words

__all__ = ["SparseProjection", "gen_projection", "project_binarize"]


class SparseProjection:
    """Tripolar {-1, 0, +1} projection matrix in row-sorted sparse form."""

    def __init__(self, dim: int, n_features: int, sparsity: float, seed,
                 matrix: scipy.sparse.csr_matrix | None = None):
        if not 0.0 < sparsity <= 1.0:
            raise ValueError("sparsity must lie in (0, 1]")
        if dim < 1 or n_features < 1:
            raise ValueError("dim and n_features must be >= 1")
        self.dim = dim
        self.n_features = n_features
        self.sparsity = sparsity
        self.seed = seed
        self.matrix = self._materialize() if matrix is None else matrix

    def _materialize(self) -> scipy.sparse.csr_matrix:
        rng = np.random.default_rng(self.seed)
        u = rng.random((self.dim, self.n_features))
        dense = np.zeros((self.dim, self.n_features), dtype=np.float64)
        dense[u < self.sparsity / 2.0] = 1.0
        dense[(u >= self.sparsity / 2.0) & (u < self.sparsity)] = -1.0
        return scipy.sparse.csr_matrix(dense)

    @classmethod
    def from_matrix(cls, rows: np.ndarray) -> "SparseProjection":
        """Build from an explicit dense {-1,0,+1} matrix (mainly for tests)."""
        rows = np.asarray(rows, dtype=np.float64)
        nnz = np.count_nonzero(rows)
        s = nnz / rows.size if rows.size else 1.0
        return cls(rows.shape[0], rows.shape[1], max(s, 1e-12),
                   seed=None, matrix=scipy.sparse.csr_matrix(rows))

    @property
    def nonzero_fraction(self) -> float:
        return self.matrix.nnz / (self.dim * self.n_features)

    def embed(self, f: np.ndarray) -> Hypervector:
        return project_binarize(self, f)

    def embed_many(self, feats: np.ndarray) -> np.ndarray:
        """Packed embeddings for rows of ``feats``; shape (n, words)."""
        feats = np.asarray(feats, dtype=np.float64)
        z = self.matrix @ feats.T  # (dim, n)
        bits = (z >= 0.0).astype(np.uint8)
        out = np.zeros((feats.shape[0], _n_words(self.dim) * 8), dtype=np.uint8)
        packed = np.packbits(bits.T, axis=1, bitorder="little")
        out[:, : packed.shape[1]] = packed
        return out.view(np.uint64)


def gen_projection(dim: int, n_features: int, sparsity: float, seed) -> SparseProjection:
    """Materialize the seeded sparse projection matrix."""
    return SparseProjection(dim, n_features, sparsity, seed)


def project_binarize(proj: SparseProjection, f: np.ndarray) -> Hypervector:
    """Embed one feature vector: bit i = 1 iff row i of the projection
    dotted with ``f`` is >= 0."""
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (proj.n_features,):
        raise ValueError(f"expected {proj.n_features} features, got {f.shape}")
    z = proj.matrix @ f
    return Hypervector.from_bits((z >= 0.0).astype(np.uint8))
