"""Timing harness behavior and the backend micro-benchmark."""

import pytest

from hdembed.bench import benchmark, format_kernel_table, kernel_benchmark
from hdembed.config import ExperimentConfig
from hdembed.data import generate_synthetic, separable_synth_spec

BANDS = ((6.0, 10.0), (14.0, 18.0), (22.0, 26.0))


@pytest.fixture(scope="module")
def tiny_ds():
    return generate_synthetic(separable_synth_spec(n_trials=24, seed=3))


def _cfg(**overrides):
    cfg = ExperimentConfig()
    cfg.bands = BANDS
    cfg.seed = 0
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


def test_single_repeat_reports_zero_std(tiny_ds):
    result = benchmark(_cfg(), tiny_ds, repeats=1)
    assert result.train_per_trial[1] == 0.0
    assert result.infer_per_trial[1] == 0.0


def test_timings_non_negative(tiny_ds):
    result = benchmark(_cfg(), tiny_ds, repeats=2)
    assert result.train_per_trial[0] >= 0.0
    assert result.infer_per_trial[0] >= 0.0


def test_quantized_training_cheaper_than_learned(tiny_ds):
    """Training cost ordering: codebook embeddings train the memory only,
    the learned projection also runs gradient descent."""
    thermo = benchmark(_cfg(embedding="thermometer"), tiny_ds, repeats=2)
    learned = benchmark(
        _cfg(embedding="learned", dim=1000, learning_rate=0.5, epochs=10,
             batch_size=16), tiny_ds, repeats=2)
    assert thermo.train_per_trial[0] < learned.train_per_trial[0]


def test_kernel_benchmark_covers_available_backends():
    rows = kernel_benchmark(dim=256, n_vectors=8, repeats=2)
    backends = {r[0] for r in rows}
    assert "numpy" in backends
    table = format_kernel_table(rows)
    assert "hamming_one_to_many" in table
    for _, _, seconds in rows:
        assert seconds >= 0.0


def test_repeats_must_be_positive(tiny_ds):
    with pytest.raises(ValueError):
        benchmark(_cfg(), tiny_ds, repeats=0)
