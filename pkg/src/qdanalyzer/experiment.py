"""Coincidence experiments accumulated one pair at a time.

Trials are processed in fixed-size chunks of the counter-based stream and
tallied with integer addition, so any worker count yields identical counts.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .reference import CHSH_LIMIT, correlation_reference, monte_carlo_std_error
from .sources import PairKind, SourceConfig, philox_key, raw_words

CHUNK = 1 << 16
STRATEGIES = {"deterministic": _kernels.STRATEGY_DETERMINISTIC,
              "probabilistic": _kernels.STRATEGY_PROBABILISTIC}
VIOLATION_SIGMA = 4.0

# substream tags, so that modes sharing a seed never share draws
_TAG_MALUS = 7
_TAG_INEQ5 = 5


@dataclass(frozen=True)
class CoincidenceCounts:
    n_pp: int = 0
    n_pm: int = 0
    n_mp: int = 0
    n_mm: int = 0
    n_degenerate: int = 0

    @property
    def total(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def gamma(self) -> float:
        return (self.n_pp + self.n_mm - self.n_pm - self.n_mp) / self.total


@dataclass(frozen=True)
class CorrelationResult:
    theta: float
    gamma: float
    std_error: float
    n: int
    qm_reference: float
    counts: CoincidenceCounts
    strategy: str = "deterministic"


@dataclass(frozen=True)
class FourAngleResult:
    theta: float
    gamma4: float
    std_error: float
    components: tuple[CorrelationResult, ...]
    qm_reference: float = field(default=float("nan"))


@dataclass(frozen=True)
class ChshReport:
    gamma4: float
    lower: float
    upper: float
    excess_sigma: float
    violation: bool


@dataclass(frozen=True)
class Ineq5Report:
    settings: tuple[float, float, float, float]
    lhs: float
    rhs: float
    gamma4: float
    sign_change_fraction: float
    n: int
    n_degenerate: int
    shared_u2: bool


@dataclass(frozen=True)
class MalusResult:
    theta: float
    prepared_s1: int
    n_plus: int
    n_minus: int
    n_degenerate: int

    @property
    def n(self) -> int:
        return self.n_plus + self.n_minus

    @property
    def fraction(self) -> float:
        return self.n_plus / self.n

    @property
    def reference(self) -> float:
        c2 = math.cos(self.theta) ** 2
        return c2 if self.prepared_s1 > 0 else 1.0 - c2

    @property
    def std_error(self) -> float:
        p = self.reference
        return math.sqrt(p * (1.0 - p) / self.n)


def _tally(key, n, kernel, args, workers: int = 1):
    """Sum ``kernel(words, *args)`` over fixed chunks of trials 0..n-1."""
    bounds = [(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]

    def one(bound):
        return kernel(raw_words(key, *bound), *args)

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, bounds))
    else:
        parts = [one(b) for b in bounds]
    return np.sum(parts, axis=0, dtype=np.int64)


def _rotation(kind: PairKind, theta: float, rotation_sign: int) -> float:
    if rotation_sign not in (1, -1):
        raise ValueError("rotation_sign must be +1 or -1")
    return rotation_sign * (1.0 if kind.is_spinor else 2.0) * theta


def run_correlation(source: SourceConfig, theta: float, n_pairs: int,
                    strategy: str = "deterministic", *, rotation_sign: int = 1,
                    workers: int = 1) -> CorrelationResult:
    """Correlation between a reference analyzer and one rotated by ``theta``.

    The particle kind (spinor or vector) follows from ``source.kind``.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    q = _rotation(source.kind, theta, rotation_sign)
    raw = _tally(source.key(), n_pairs, _kernels.get("pair_counts"),
                 (int(source.kind), source.effective_triplet_fraction, q, STRATEGIES[strategy]),
                 workers)
    counts = CoincidenceCounts(*(int(x) for x in raw))
    gamma = counts.gamma()
    return CorrelationResult(
        theta=theta,
        gamma=gamma,
        std_error=float(monte_carlo_std_error(gamma, counts.total)),
        n=counts.total,
        qm_reference=float(correlation_reference(source.kind, theta, source.triplet_fraction)),
        counts=counts,
        strategy=strategy,
    )


def run_sweep(config: SourceConfig, theta_grid, n_pairs: int, strategy: str = "deterministic",
              **kwargs) -> list[CorrelationResult]:
    """One correlation per angle, each on its own substream."""
    return [
        run_correlation(config.with_stream(i), theta, n_pairs, strategy, **kwargs)
        for i, theta in enumerate(theta_grid)
    ]


def run_proton_experiment(config: SourceConfig, theta_grid, n_pairs: int = 10_000,
                          strategy: str = "deterministic", **kwargs) -> list[CorrelationResult]:
    if not config.kind.is_spinor:
        raise ValueError("proton experiment needs a spinor source")
    if len(theta_grid) == 0:
        raise ValueError("theta_grid is empty")
    return run_sweep(config, theta_grid, n_pairs, strategy, **kwargs)


def four_angle_std_error(components) -> float:
    weights = (2.0, 1.0, 1.0) if len(components) == 3 else (1.0, 1.0, 1.0, 1.0)
    return math.sqrt(sum((w * c.std_error) ** 2 for w, c in zip(weights, components)))


def run_four_angle(config: SourceConfig, theta: float, n_pairs_per_setting: int = 10_000,
                   strategy: str = "deterministic", *, independent_settings: bool = False,
                   **kwargs) -> FourAngleResult:
    """gamma4 = 2 gamma(theta) + gamma(-theta) - gamma(3 theta).

    By default the two settings at relative angle theta share one run. With
    ``independent_settings`` all four settings get their own run.
    """
    angles = [theta, -theta, 3.0 * theta]
    if independent_settings:
        angles.insert(1, theta)
    comps = tuple(
        run_correlation(config.with_stream(i), a, n_pairs_per_setting, strategy, **kwargs)
        for i, a in enumerate(angles)
    )
    if independent_settings:
        gamma4 = comps[0].gamma + comps[1].gamma + comps[2].gamma - comps[3].gamma
    else:
        gamma4 = 2.0 * comps[0].gamma + comps[1].gamma - comps[2].gamma
    return FourAngleResult(
        theta=theta,
        gamma4=gamma4,
        std_error=four_angle_std_error(comps),
        components=comps,
        qm_reference=3.0 * math.cos(2.0 * theta) - math.cos(6.0 * theta),
    )


def run_four_angle_sweep(config: SourceConfig, theta_grid, n_pairs_per_setting: int,
                         strategy: str = "deterministic", **kwargs) -> list[FourAngleResult]:
    return [
        run_four_angle(config.with_stream(i), theta, n_pairs_per_setting, strategy, **kwargs)
        for i, theta in enumerate(theta_grid)
    ]


def chsh_bound_check(result, sigma: float = VIOLATION_SIGMA) -> ChshReport:
    """Excess of |gamma4| over the CHSH limit, in standard errors."""
    gamma4 = result.gamma4
    se = result.std_error
    excess = abs(gamma4) - CHSH_LIMIT
    if se > 0:
        excess_sigma = excess / se
    else:
        excess_sigma = math.copysign(math.inf, excess) if excess else 0.0
    return ChshReport(gamma4, -CHSH_LIMIT, CHSH_LIMIT, excess_sigma, excess_sigma > sigma)


def inequality5_diagnostic(config: SourceConfig, a: float, a2: float, b: float, b2: float,
                           n_pairs: int = 10_000, *, shared_u2: bool = True,
                           rotation_sign: int = 1, workers: int = 1) -> Ineq5Report:
    """Per-trial counterfactual CHSH bound.

    Each trial draws one pair and one u, giving a single A at the reference
    analyzer. The second analyzer's signs are evaluated at relative settings
    a-b, a-b', a'-b, a'-b' (B1..B4), from one shared u' or four independent
    ones. Reports |gamma4| with gamma4 = <A(B1 - B2 + B3 + B4)>, the bound
    <|B1 - B2|> + <|B3 + B4|>, and the fraction of trials where B at a fixed
    b setting flips with the a setting.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    rel = (a - b, a - b2, a2 - b, a2 - b2)
    qs = np.array([_rotation(config.kind, r, rotation_sign) for r in rel])
    key = philox_key(config.seed, config.stream + (_TAG_INEQ5,))
    combo, rhs, changed, degenerate = _tally(
        key, n_pairs, _kernels.get("ineq5_tallies"),
        (int(config.kind), config.effective_triplet_fraction, qs, shared_u2), workers,
    )
    gamma4 = int(combo) / n_pairs
    return Ineq5Report(
        settings=(float(a), float(a2), float(b), float(b2)),
        lhs=abs(gamma4),
        rhs=int(rhs) / n_pairs,
        gamma4=gamma4,
        sign_change_fraction=int(changed) / n_pairs,
        n=n_pairs,
        n_degenerate=int(degenerate),
        shared_u2=shared_u2,
    )


def chsh_settings(theta: float) -> tuple[float, float, float, float]:
    """(a, a', b, b') = (0, 2 theta, theta, 3 theta)."""
    return 0.0, 2.0 * theta, theta, 3.0 * theta


def run_malus_sequence(prepared_s1: int, theta: float, n_photons: int, *, seed: int = 1,
                       stream=(), rotation_sign: int = 1, workers: int = 1) -> MalusResult:
    """Photons leaving a first analyzer in eigenstate ``prepared_s1`` meet a
    second analyzer rotated by ``theta``; counts the plus channel."""
    if prepared_s1 not in (1, -1):
        raise ValueError("prepared_s1 must be +1 or -1")
    if n_photons < 1:
        raise ValueError("n_photons must be >= 1")
    q = _rotation(PairKind.PHOTON_VECTOR, theta, rotation_sign)
    key = philox_key(seed, tuple(stream) + (_TAG_MALUS,))
    plus, minus, degenerate = _tally(key, n_photons, _kernels.get("malus_counts"),
                                     (prepared_s1, q), workers)
    return MalusResult(theta, prepared_s1, int(plus), int(minus), int(degenerate))
