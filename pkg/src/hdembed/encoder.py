"""Spatial encoder: embed each band's feature vector, bind it with that
band's item-memory hypervector, and bundle across bands.

With ``clip_output=False`` the majority threshold is skipped and the raw
per-component vote counts (values 0..n_bands) are returned as an
Accumulator, which keeps more resolution for prototype training.
"""

from __future__ import annotations

import numpy as np

from .hv import Accumulator, Hypervector, ItemMemory, bind, binarize

__all__ = ["band_item_memory", "encode_trial"]


def band_item_memory(n_bands: int, dim: int, seed) -> ItemMemory:
    """Band hypervectors, rematerialized from the seed at startup."""
    return ItemMemory.generate(n_bands, dim, seed)


def encode_trial(banded: np.ndarray, embedder, im: ItemMemory,
                 clip_output: bool = True, rng=None) -> Hypervector | Accumulator:
    """Encode one (n_bands, n_features) sample into a single hypervector
    (or an unclipped accumulator of the per-band votes).

    ``embedder`` is anything with ``embed(feature_vector) -> Hypervector``
    of dimension ``im.dim``. ``rng`` is only consumed for majority ties,
    i.e. when the band count is even and ``clip_output`` is set.
    """
    banded = np.asarray(banded, dtype=np.float64)
    n_bands = banded.shape[0]
    if len(im) != n_bands:
        raise ValueError(f"item memory holds {len(im)} band vectors, got {n_bands} bands")
    acc = Accumulator(im.dim)
    for b in range(n_bands):
        acc.add(bind(embedder.embed(banded[b]), im.vector(b)))
    if clip_output:
        return binarize(acc, rng)
    return acc
