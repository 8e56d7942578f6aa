import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from qdanalyzer.sources import (
    PairKind,
    SourceConfig,
    next_pair,
    pair_block,
    pair_from_angle,
    raw_words,
)


def test_singlet_at_zero():
    p = pair_from_angle(PairKind.SINGLET_SPINOR, 0.0)
    assert (p.s1_first, p.s1_second) == (1.0, -1.0)


def test_photon_at_right_angle():
    p = pair_from_angle(PairKind.PHOTON_VECTOR, math.pi / 2)
    assert p.s1_first == pytest.approx(0.0, abs=1e-15)
    assert p.s1_second == p.s1_first


def test_triplet_admixture_count():
    config = SourceConfig(PairKind.SINGLET_SPINOR, 0.03, seed=42)
    _, _, _, triplet = pair_block(config, 0, 10**6)
    count = int(triplet.sum())
    assert abs(count - 30_000) <= 3 * math.sqrt(1e6 * 0.03 * 0.97)
    assert count == 30226  # frozen regression value for this RNG layout


def test_next_pair_matches_block():
    config = SourceConfig(PairKind.SINGLET_SPINOR, 0.5, seed=9)
    two_beta, s1, s1b, triplet = pair_block(config, 100, 110)
    for k in range(10):
        p = next_pair(config, 100 + k)
        assert p.two_beta == two_beta[k] and p.s1_first == s1[k] and p.s1_second == s1b[k]
        assert (p.kind_drawn is PairKind.TRIPLET_SPINOR) == bool(triplet[k])


def test_stream_is_position_addressed():
    key = SourceConfig(seed=5).key()
    whole = raw_words(key, 0, 1000)
    chunks = [raw_words(key, s, s + 125) for s in range(0, 1000, 125)]
    with ThreadPoolExecutor(4) as pool:
        shuffled = list(pool.map(lambda s: raw_words(key, s, s + 125), reversed(range(0, 1000, 125))))
    assert np.array_equal(whole, np.vstack(chunks))
    assert np.array_equal(whole, np.vstack(shuffled[::-1]))


def test_streams_and_seeds_differ():
    a = raw_words(SourceConfig(seed=5).key(), 0, 4)
    assert not np.array_equal(a, raw_words(SourceConfig(seed=6).key(), 0, 4))
    assert not np.array_equal(a, raw_words(SourceConfig(seed=5, stream=(1,)).key(), 0, 4))


def test_two_beta_uniform_ks():
    two_beta, *_ = pair_block(SourceConfig(seed=123), 0, 10**6)
    assert two_beta.min() >= 0 and two_beta.max() < 2 * math.pi
    assert stats.kstest(two_beta, stats.uniform(0, 2 * math.pi).cdf).pvalue > 0.001


@given(seed=st.integers(0, 2**64 - 1), start=st.integers(0, 10**9),
       frac=st.floats(0, 1), kind=st.sampled_from(list(PairKind)))
def test_coupling_exact(seed, start, frac, kind):
    config = SourceConfig(kind, frac, seed=seed)
    p = next_pair(config, start)
    assert abs(p.s1_second) == abs(p.s1_first)
    assert p.s1_second == p.kind_drawn.coupling * p.s1_first
    assert p.s1_first == math.cos(p.two_beta)
    if kind is PairKind.PHOTON_VECTOR:
        assert p.kind_drawn is PairKind.PHOTON_VECTOR


def test_pure_sources():
    _, s1, s1b, _ = pair_block(SourceConfig(PairKind.SINGLET_SPINOR, 0.0, 3), 0, 5000)
    assert np.array_equal(s1b, -s1)
    _, s1, s1b, _ = pair_block(SourceConfig(PairKind.TRIPLET_SPINOR, 0.0, 3), 0, 5000)
    assert np.array_equal(s1b, s1)
    _, s1, s1b, _ = pair_block(SourceConfig(PairKind.PHOTON_VECTOR, 0.9, 3), 0, 5000)
    assert np.array_equal(s1b, s1)


def test_config_validation():
    with pytest.raises(ValueError):
        SourceConfig(triplet_fraction=1.5)
    with pytest.raises(ValueError):
        SourceConfig(seed=-1)
    with pytest.raises(ValueError):
        next_pair(SourceConfig(), -1)
