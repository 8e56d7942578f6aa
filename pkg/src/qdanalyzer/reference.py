"""Reference curves and the numerical-expectation oracle.

The oracle integrates the model's sign products over the exact sampling
measure with a midpoint rule, doubling the node count until two successive
values agree. It re-derives the decision rules from their definitions and
shares no code with the Monte Carlo path.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .sources import PairKind

CHSH_LIMIT = 2.0


class Curve(enum.Enum):
    PROTON_SINGLET = "proton_singlet"
    PROTON_MIXTURE = "proton_mixture"
    PHOTON_SINGLE = "photon_single"
    PHOTON_FOUR_ANGLE = "photon_four_angle"
    CHSH_LIMIT = "chsh_limit"


def qm_reference(kind, theta, triplet_fraction: float = 0.0):
    """Closed-form quantum-mechanical curve ``kind`` at ``theta`` (radians).

    ``chsh_limit`` returns the upper limit; the lower one is its negative.
    """
    kind = Curve(kind)
    theta = np.asarray(theta, dtype=float)
    if kind is Curve.PROTON_SINGLET:
        out = -np.cos(theta)
    elif kind is Curve.PROTON_MIXTURE:
        out = -(1.0 - 2.0 * triplet_fraction) * np.cos(theta)
    elif kind is Curve.PHOTON_SINGLE:
        out = np.cos(2.0 * theta)
    elif kind is Curve.PHOTON_FOUR_ANGLE:
        out = 3.0 * np.cos(2.0 * theta) - np.cos(6.0 * theta)
    else:
        out = np.full_like(theta, CHSH_LIMIT)
    return float(out) if out.ndim == 0 else out


def correlation_reference(kind: PairKind, theta, triplet_fraction: float = 0.0):
    """QM single-setting correlation for a pair source."""
    kind = PairKind(kind)
    if kind is PairKind.PHOTON_VECTOR:
        return qm_reference(Curve.PHOTON_SINGLE, theta)
    if kind is PairKind.TRIPLET_SPINOR:
        return -qm_reference(Curve.PROTON_SINGLET, theta)
    return qm_reference(Curve.PROTON_MIXTURE, theta, triplet_fraction)


def model_closed_form(kind: PairKind, strategy: str, theta):
    """Analytic expectation of the model's sign product.

    Deterministic: the census of u' gives E[sign p1'] = cos q, so the
    correlation is coupling * cos q. Probabilistic (cos^2 acceptance): the
    conditional means are cos x and cos(x' - q) with x uniform on [0, pi],
    which averages to coupling * cos(q) / 2.
    """
    kind = PairKind(kind)
    q = (2.0 if kind is PairKind.PHOTON_VECTOR else 1.0) * np.asarray(theta, dtype=float)
    value = kind.coupling * np.cos(q)
    if strategy == "probabilistic":
        value = value / 2.0
    elif strategy != "deterministic":
        raise ValueError(f"unknown strategy {strategy!r}")
    return float(value) if value.ndim == 0 else value


class OracleConvergenceError(RuntimeError):
    def __init__(self, coarse: float, fine: float, nodes: int):
        super().__init__(
            f"oracle did not converge: {coarse!r} at {nodes // 2} nodes vs {fine!r} at {nodes}"
        )
        self.coarse = coarse
        self.fine = fine
        self.nodes = nodes


@dataclass(frozen=True)
class OracleSpec:
    tolerance: float = 1e-6
    min_nodes: int = 64
    max_nodes: int = 2**23


@lru_cache(maxsize=32)
def _midpoints(n: int, lo: float, hi: float) -> np.ndarray:
    h = (hi - lo) / n
    out = lo + h * (np.arange(n) + 0.5)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=32)
def _arccos_nodes(n: int) -> np.ndarray:
    out = np.arccos(_midpoints(n, -1.0, 1.0))
    out.setflags(write=False)
    return out


def _census_sign(w, q):
    return 1.0 if math.cos(w - math.pi / 2 + q) >= 0.0 else -1.0


@lru_cache(maxsize=4096)
def _census_mean(q: float, n: int) -> tuple[float, float]:
    """Midpoint mean over u in [-1, 1] of sign(cos(arccos(u) - pi/2 + q)).

    Second value bounds the quadrature error: each jump of size 2 falling
    inside a cell misweights at most half of it. The interval endpoints join
    the change count so that jumps inside the outer half-cells are seen.
    """
    w = _arccos_nodes(n)
    total, changes = _kernels.get("census_sign_sum")(w, q)
    changes += _census_sign(math.pi, q) != _census_sign(w[0], q)
    changes += _census_sign(0.0, q) != _census_sign(w[-1], q)
    return total / n, changes / n


def _step_mean(values: np.ndarray, ends=None) -> tuple[float, float]:
    """Mean of a piecewise-constant integrand on midpoint nodes, with jump bound."""
    if ends is not None:
        values_ext = np.concatenate(([ends[0]], values, [ends[1]]))
    else:
        values_ext = values
    jumps = np.abs(np.diff(values_ext))
    return float(np.mean(values)), float(np.sum(jumps)) / (2.0 * len(values))


def _second_coupling(kind: PairKind, s1):
    return -s1 if kind is PairKind.SINGLET_SPINOR else s1


@lru_cache(maxsize=64)
def _coupling_sign_mean(kind: PairKind, n: int) -> tuple[float, float]:
    """Midpoint mean over 2*beta of sign(s1) * sign(s1'), with jump bound."""
    s1 = np.cos(_midpoints(n, 0.0, 2.0 * math.pi))
    s1b = _second_coupling(kind, s1)
    end = 1.0 if _second_coupling(kind, 1.0) >= 0 else -1.0
    return _step_mean(np.where(s1 >= 0, 1.0, -1.0) * np.where(s1b >= 0, 1.0, -1.0), (end, end))


def _oracle_at(n: int, q: float, kind: PairKind, strategy: str) -> tuple[float, float]:
    if strategy == "deterministic":
        # u and u' are independent given 2*beta, so E[A B | beta] factorizes
        # into sign(s1) sign(s1') times the two u-censuses
        census_a, bound_a = _census_mean(0.0, n)
        census_b, bound_b = _census_mean(q, n)
        signs, bound_s = _coupling_sign_mean(kind, n)
        return signs * census_a * census_b, bound_a + bound_b + bound_s
    s1 = np.cos(_midpoints(n, 0.0, 2.0 * math.pi))
    s1b = _second_coupling(kind, s1)
    if strategy == "probabilistic":
        # integral over the uniform draw r of (2 [r < p] - 1) is 2p - 1; smooth in 2*beta
        mean_a = 2.0 * np.cos(np.arccos(s1) / 2.0) ** 2 - 1.0
        mean_b = 2.0 * np.cos((np.arccos(s1b) - q) / 2.0) ** 2 - 1.0
        return float(np.mean(mean_a * mean_b)), 0.0
    raise ValueError(f"unknown strategy {strategy!r}")


def model_expectation_oracle(theta: float, kind: PairKind, strategy: str = "deterministic",
                             spec: OracleSpec = OracleSpec(), rotation_sign: int = 1) -> float:
    """E[A B] for relative angle ``theta`` by convergence-controlled midpoint quadrature."""
    kind = PairKind(kind)
    if spec.min_nodes < 64:
        raise ValueError("quadrature needs at least 64 nodes per dimension")
    q = rotation_sign * (2.0 if kind is PairKind.PHOTON_VECTOR else 1.0) * float(theta)
    n = spec.min_nodes
    coarse, _ = _oracle_at(n, q, kind, strategy)
    while True:
        n *= 2
        fine, jump_bound = _oracle_at(n, q, kind, strategy)
        if abs(fine - coarse) <= spec.tolerance and jump_bound <= spec.tolerance:
            return fine
        if n >= spec.max_nodes:
            raise OracleConvergenceError(coarse, fine, n)
        coarse = fine


def sign_census(q: float, n: int = 2**20) -> float:
    """Midpoint estimate of P(cos(arccos(u') - pi/2 + q) > 0), u' ~ U[-1, 1]."""
    return (1.0 + _census_mean(float(q), n)[0]) / 2.0


def monte_carlo_std_error(gamma, n):
    """Standard error of a mean of n +/-1 variates with mean gamma."""
    return np.sqrt(np.maximum(0.0, 1.0 - np.asarray(gamma, dtype=float) ** 2) / n)
