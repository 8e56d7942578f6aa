"""Causally coupled pair sources on counter-based random streams.

Every trial index owns a fixed block of eight 64-bit words taken from a Philox
stream at counter position ``2 * index``. The draws of a trial therefore depend
only on ``(seed, stream, index)``, never on chunking or thread count.

Word layout per trial::

    0  two_beta            4  probabilistic draw, first analyzer
    1  triplet admixture   5  probabilistic draw, second analyzer
    2  u  (first analyzer) 6  extra u' (independent-settings diagnostics)
    3  u' (second)         7  extra u' (independent-settings diagnostics)
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

WORDS_PER_TRIAL = 8
_BLOCKS_PER_TRIAL = WORDS_PER_TRIAL // 4
_TWO_PI = 2.0 * np.pi

W_TWO_BETA, W_KIND, W_U, W_U2, W_R1, W_R2, W_U3, W_U4 = range(WORDS_PER_TRIAL)


class PairKind(enum.IntEnum):
    SINGLET_SPINOR = 0
    TRIPLET_SPINOR = 1
    PHOTON_VECTOR = 2

    @property
    def is_spinor(self) -> bool:
        return self is not PairKind.PHOTON_VECTOR

    @property
    def coupling(self) -> int:
        """Sign relating s1 of the second member to s1 of the first."""
        return -1 if self is PairKind.SINGLET_SPINOR else 1


@dataclass(frozen=True)
class SourceConfig:
    """Pair source settings.

    ``triplet_fraction`` is the per-pair probability that a singlet spinor
    source emits a triplet pair instead. A triplet base kind is always
    triplet; photon sources ignore the fraction. ``stream`` selects an
    independent substream for the same seed.
    """

    kind: PairKind = PairKind.SINGLET_SPINOR
    triplet_fraction: float = 0.0
    seed: int = 1
    stream: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", PairKind(self.kind))
        if not 0.0 <= self.triplet_fraction <= 1.0:
            raise ValueError("triplet_fraction must lie in [0, 1]")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_stream(self, *path: int) -> "SourceConfig":
        return replace(self, stream=self.stream + tuple(path))

    @property
    def effective_triplet_fraction(self) -> float:
        if self.kind is PairKind.SINGLET_SPINOR:
            return self.triplet_fraction
        return 1.0 if self.kind is PairKind.TRIPLET_SPINOR else 0.0

    def key(self) -> np.ndarray:
        return philox_key(self.seed, self.stream)


@dataclass(frozen=True)
class IncidentPair:
    two_beta: float
    s1_first: float
    s1_second: float
    kind_drawn: PairKind


def philox_key(seed: int, stream=()) -> np.ndarray:
    seq = np.random.SeedSequence(seed, spawn_key=tuple(stream))
    return seq.generate_state(2, dtype=np.uint64)


def raw_words(key: np.ndarray, start: int, stop: int) -> np.ndarray:
    """Words of trials ``start..stop-1`` as a (stop - start, 8) uint64 array."""
    if start < 0 or stop < start:
        raise ValueError("need 0 <= start <= stop")
    bitgen = np.random.Philox(key=key)
    bitgen.advance(_BLOCKS_PER_TRIAL * start)
    return bitgen.random_raw(WORDS_PER_TRIAL * (stop - start)).reshape(-1, WORDS_PER_TRIAL)


def unit_float(words: np.ndarray) -> np.ndarray:
    """Map uint64 words to doubles in [0, 1) using the top 53 bits."""
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def pair_block(config: SourceConfig, start: int, stop: int, words=None):
    """Vectorized pairs for trials ``start..stop-1``.

    Returns ``(two_beta, s1_first, s1_second, triplet_mask)``.
    """
    if words is None:
        words = raw_words(config.key(), start, stop)
    two_beta = _TWO_PI * unit_float(words[:, W_TWO_BETA])
    s1_first = np.cos(two_beta)
    if config.kind.is_spinor:
        triplet = unit_float(words[:, W_KIND]) < config.effective_triplet_fraction
        s1_second = np.where(triplet, s1_first, -s1_first)
    else:
        triplet = np.zeros(len(two_beta), dtype=bool)
        s1_second = s1_first.copy()
    return two_beta, s1_first, s1_second, triplet


def next_pair(config: SourceConfig, stream_position: int) -> IncidentPair:
    if stream_position < 0:
        raise ValueError("stream_position must be >= 0")
    two_beta, s1, s1b, triplet = pair_block(config, stream_position, stream_position + 1)
    if config.kind.is_spinor:
        kind = PairKind.TRIPLET_SPINOR if triplet[0] else PairKind.SINGLET_SPINOR
    else:
        kind = PairKind.PHOTON_VECTOR
    return IncidentPair(float(two_beta[0]), float(s1[0]), float(s1b[0]), kind)


def pair_from_angle(kind: PairKind, two_beta: float) -> IncidentPair:
    """Pair with a given 2*beta, coupled per ``kind``."""
    kind = PairKind(kind)
    s1 = float(np.cos(two_beta))
    return IncidentPair(two_beta, s1, kind.coupling * s1, kind)
