import numpy as np
from hypothesis import given, strategies as st
from scipy import stats

from undirectify import rng

seeds64 = st.integers(0, 2 ** 64 - 1)


@given(seeds64, st.integers(1, 50), st.integers(0, 50))
def test_uniform_counters_are_stable(seed, k, offset):
    full = rng.uniforms(seed, offset + k)
    assert np.array_equal(rng.uniforms(seed, k, offset=offset), full[offset:])


@given(st.lists(seeds64, min_size=1, max_size=8))
def test_batch_matches_single(seeds):
    batch = rng.uniforms(np.array(seeds, dtype=np.uint64), 5)
    for row, s in zip(batch, seeds):
        assert np.array_equal(row, rng.uniforms(s, 5))


def test_split_scalar_and_array_agree():
    arr = rng.split(123, np.arange(10))
    assert [int(x) for x in arr] == [rng.split(123, k) for k in range(10)]
    assert len(set(arr.tolist())) == 10


def test_uniforms_look_uniform():
    u = rng.uniforms(rng.DEFAULT_SEED, 200_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 0.001
    # consecutive seeds should not be correlated
    a = rng.uniforms(np.arange(5000, dtype=np.uint64), 2)
    assert abs(np.corrcoef(a[:, 0], a[:, 1])[0, 1]) < 0.06


def test_generator_is_reproducible():
    assert rng.generator(7).random() == rng.generator(7).random()
    assert rng.generator(7).random() != rng.generator(8).random()
