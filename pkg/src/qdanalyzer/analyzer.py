"""Analyzer-matrix sampling and eigen-channel decisions.

A sampled analyzer has unit matrix-sphere radius, so only the sign of p1
matters. The reference analyzer (orientation 0) draws

    two_alpha = arccos(u) - pi/2,   u ~ U[-1, 1]

which keeps p1 >= 0; a rotated analyzer adds ``rotation_sign * q`` with
q = theta for spinors and q = 2 theta for vectors.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

PLUS = 1
MINUS = -1


class ParticleKind(enum.Enum):
    SPINOR = "spinor"
    VECTOR = "vector"

    @property
    def rotation_factor(self) -> float:
        return 1.0 if self is ParticleKind.SPINOR else 2.0


@dataclass(frozen=True)
class AnalyzerSetting:
    orientation: float = 0.0
    kind: ParticleKind = ParticleKind.VECTOR
    rotation_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", ParticleKind(self.kind))
        if self.rotation_sign not in (1, -1):
            raise ValueError("rotation_sign must be +1 or -1")

    @property
    def q(self) -> float:
        """Signed rotation of the p1 >= 0 hemisphere on the matrix sphere."""
        return self.rotation_sign * self.kind.rotation_factor * self.orientation


@dataclass(frozen=True)
class AnalyzerSample:
    u: float
    two_alpha: float
    p1: float


@dataclass(frozen=True)
class ChannelOutcome:
    channel: int
    t0: float
    degenerate: bool = False

    @property
    def is_plus(self) -> bool:
        return self.channel == PLUS


def sample_analyzer(setting: AnalyzerSetting, u) -> AnalyzerSample:
    """Analyzer sample for a uniform draw ``u``; arrays of ``u`` broadcast."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(u_arr)) or np.any(np.abs(u_arr) > 1.0):
        raise ValueError("u outside [-1, 1]")
    two_alpha = np.arccos(u_arr) - math.pi / 2 + setting.q
    p1 = np.cos(two_alpha)
    if u_arr.ndim == 0:
        return AnalyzerSample(float(u_arr), float(two_alpha), float(p1))
    return AnalyzerSample(u_arr, two_alpha, p1)


def decide_deterministic(s1_incident: float, sample: AnalyzerSample) -> ChannelOutcome:
    """Channel from the sign of T(0) = s1 * p1; an exact zero goes to plus and is flagged."""
    t0 = s1_incident * sample.p1
    if t0 == 0.0:
        return ChannelOutcome(PLUS, t0, True)
    return ChannelOutcome(PLUS if t0 > 0 else MINUS, t0)


def acceptance_probability(s1_incident: float, relative_angle: float) -> float:
    """cos^2 of the angle between incident polarization and analyzer axis.

    Both angles are taken on the Poincare sphere, where they are doubled:
    the incident state sits at arccos(s1), the analyzer axis at
    ``relative_angle`` (the analyzer's q), hence the half-angle below.
    """
    incident = math.acos(min(1.0, max(-1.0, s1_incident)))
    return math.cos((incident - relative_angle) / 2.0) ** 2


def decide_probabilistic(s1_incident: float, relative_angle: float, rng_draw: float) -> ChannelOutcome:
    """Malus-law comparison strategy: plus iff ``rng_draw`` < cos^2(...).

    ``t0`` carries the margin ``probability - rng_draw``.
    """
    if not 0.0 <= rng_draw < 1.0:
        raise ValueError("rng_draw must lie in [0, 1)")
    prob = acceptance_probability(s1_incident, relative_angle)
    return ChannelOutcome(PLUS if rng_draw < prob else MINUS, prob - rng_draw)
