"""Per-trial inner loops, compiled with numba when available.

Set ``QDA_DISABLE_NUMBA=1`` to force the pure-numpy implementations. Both
paths consume the raw uint64 words laid out in :mod:`qdanalyzer.sources` and
return integer tallies, so results can be summed over chunks in any order.
"""
from __future__ import annotations

import math
import os

import numpy as np

STRATEGY_DETERMINISTIC = 0
STRATEGY_PROBABILISTIC = 1

_HALF_PI = math.pi / 2
_TWO_PI = 2.0 * math.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _flag("QDA_DISABLE_NUMBA")


# ---------------------------------------------------------------- numpy path


def _np_unit(col):
    return (col >> np.uint64(11)).astype(np.float64) * _INV_2_53


def _np_sources(words, pair_code, triplet_fraction):
    s1 = np.cos(_TWO_PI * _np_unit(words[:, 0]))
    if pair_code == 2:
        return s1, s1
    triplet = _np_unit(words[:, 1]) < triplet_fraction
    return s1, np.where(triplet, s1, -s1)


def _np_decide(s1, u, q):
    """Returns (plus mask, tie mask)."""
    t0 = s1 * np.cos(np.arccos(u) - _HALF_PI + q)
    return t0 >= 0.0, t0 == 0.0


def _np_decide_prob(s1, q, r):
    prob = np.cos((np.arccos(np.clip(s1, -1.0, 1.0)) - q) / 2.0) ** 2
    return r < prob


def np_pair_counts(words, pair_code, triplet_fraction, q, strategy):
    s1, s1b = _np_sources(words, pair_code, triplet_fraction)
    if strategy == STRATEGY_DETERMINISTIC:
        u = 2.0 * _np_unit(words[:, 2]) - 1.0
        u2 = 2.0 * _np_unit(words[:, 3]) - 1.0
        a, tie_a = _np_decide(s1, u, 0.0)
        b, tie_b = _np_decide(s1b, u2, q)
        degenerate = int(np.count_nonzero(tie_a | tie_b))
    else:
        a = _np_decide_prob(s1, 0.0, _np_unit(words[:, 4]))
        b = _np_decide_prob(s1b, q, _np_unit(words[:, 5]))
        degenerate = 0
    return np.array(
        [
            np.count_nonzero(a & b),
            np.count_nonzero(a & ~b),
            np.count_nonzero(~a & b),
            np.count_nonzero(~a & ~b),
            degenerate,
        ],
        dtype=np.int64,
    )


def np_malus_counts(words, prepared_s1, q):
    u = 2.0 * _np_unit(words[:, 3]) - 1.0
    plus, tie = _np_decide(np.full(len(u), float(prepared_s1)), u, q)
    n_plus = int(np.count_nonzero(plus))
    return np.array([n_plus, len(u) - n_plus, np.count_nonzero(tie)], dtype=np.int64)


def np_ineq5_tallies(words, pair_code, triplet_fraction, qs, shared):
    """Tallies for the counterfactual CHSH bound.

    ``qs`` holds the second-analyzer rotations for settings (a-b, a-b', a'-b,
    a'-b'). Returns [sum A*(B1 - B2 + B3 + B4), sum |B1 - B2| + |B3 + B4|,
    trials with B1 != B3 or B2 != B4, degenerate trials].
    """
    s1, s1b = _np_sources(words, pair_code, triplet_fraction)
    u = 2.0 * _np_unit(words[:, 2]) - 1.0
    cols = (3, 3, 3, 3) if shared else (3, 6, 7, 5)
    a, tie = _np_decide(s1, u, 0.0)
    sign_a = np.where(a, 1, -1)
    bs = []
    for col, q in zip(cols, qs):
        b, tie_b = _np_decide(s1b, 2.0 * _np_unit(words[:, col]) - 1.0, q)
        tie |= tie_b
        bs.append(np.where(b, 1, -1))
    b1, b2, b3, b4 = bs
    combo = int(np.sum(sign_a * (b1 - b2 + b3 + b4)))
    rhs = int(np.sum(np.abs(b1 - b2) + np.abs(b3 + b4)))
    changed = int(np.count_nonzero((b1 != b3) | (b2 != b4)))
    return np.array([combo, rhs, changed, np.count_nonzero(tie)], dtype=np.int64)


def np_census_sign_sum(w, q):
    """Sum over nodes of sign(cos(w - pi/2 + q)), zero counted as +1.

    Also returns the number of sign changes between neighbouring nodes.
    """
    signs = np.where(np.cos(w - _HALF_PI + q) >= 0.0, 1.0, -1.0)
    return float(np.sum(signs)), int(np.count_nonzero(signs[1:] != signs[:-1]))


NUMPY_KERNELS = {
    "pair_counts": np_pair_counts,
    "malus_counts": np_malus_counts,
    "ineq5_tallies": np_ineq5_tallies,
    "census_sign_sum": np_census_sign_sum,
}


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)

    @_jit
    def _nb_unit(word):
        return np.float64(word >> np.uint64(11)) * _INV_2_53

    @_jit
    def _nb_pair(words, i, pair_code, triplet_fraction):
        s1 = math.cos(_TWO_PI * _nb_unit(words[i, 0]))
        if pair_code == 2:
            return s1, s1
        if _nb_unit(words[i, 1]) < triplet_fraction:
            return s1, s1
        return s1, -s1

    @_jit
    def _nb_t0(s1, word, q):
        u = 2.0 * _nb_unit(word) - 1.0
        return s1 * math.cos(math.acos(u) - _HALF_PI + q)

    @_jit
    def _nb_prob(s1, q):
        c = math.cos((math.acos(min(1.0, max(-1.0, s1))) - q) / 2.0)
        return c * c

    @_jit
    def nb_pair_counts(words, pair_code, triplet_fraction, q, strategy):
        out = np.zeros(5, dtype=np.int64)
        for i in range(words.shape[0]):
            s1, s1b = _nb_pair(words, i, pair_code, triplet_fraction)
            if strategy == STRATEGY_DETERMINISTIC:
                ta = _nb_t0(s1, words[i, 2], 0.0)
                tb = _nb_t0(s1b, words[i, 3], q)
                a = ta >= 0.0
                b = tb >= 0.0
                if ta == 0.0 or tb == 0.0:
                    out[4] += 1
            else:
                a = _nb_unit(words[i, 4]) < _nb_prob(s1, 0.0)
                b = _nb_unit(words[i, 5]) < _nb_prob(s1b, q)
            if a:
                if b:
                    out[0] += 1
                else:
                    out[1] += 1
            elif b:
                out[2] += 1
            else:
                out[3] += 1
        return out

    @_jit
    def nb_malus_counts(words, prepared_s1, q):
        out = np.zeros(3, dtype=np.int64)
        s1 = float(prepared_s1)
        for i in range(words.shape[0]):
            t0 = _nb_t0(s1, words[i, 3], q)
            if t0 >= 0.0:
                out[0] += 1
            else:
                out[1] += 1
            if t0 == 0.0:
                out[2] += 1
        return out

    @_jit
    def nb_ineq5_tallies(words, pair_code, triplet_fraction, qs, shared):
        out = np.zeros(4, dtype=np.int64)
        cols = np.array([3, 3, 3, 3]) if shared else np.array([3, 6, 7, 5])
        bs = np.zeros(4, dtype=np.int64)
        for i in range(words.shape[0]):
            s1, s1b = _nb_pair(words, i, pair_code, triplet_fraction)
            ta = _nb_t0(s1, words[i, 2], 0.0)
            tie = ta == 0.0
            sign_a = 1 if ta >= 0.0 else -1
            for k in range(4):
                tb = _nb_t0(s1b, words[i, cols[k]], qs[k])
                if tb == 0.0:
                    tie = True
                bs[k] = 1 if tb >= 0.0 else -1
            out[0] += sign_a * (bs[0] - bs[1] + bs[2] + bs[3])
            out[1] += abs(bs[0] - bs[1]) + abs(bs[2] + bs[3])
            if bs[0] != bs[2] or bs[1] != bs[3]:
                out[2] += 1
            if tie:
                out[3] += 1
        return out

    @_jit
    def nb_census_sign_sum(w, q):
        total = 0.0
        changes = 0
        prev = 0.0
        for j in range(w.shape[0]):
            sign = 1.0 if math.cos(w[j] - _HALF_PI + q) >= 0.0 else -1.0
            if j > 0 and sign != prev:
                changes += 1
            total += sign
            prev = sign
        return total, changes

    NUMBA_KERNELS = {
        "pair_counts": nb_pair_counts,
        "malus_counts": nb_malus_counts,
        "ineq5_tallies": lambda words, code, f, qs, shared: nb_ineq5_tallies(
            words, code, f, np.asarray(qs, dtype=np.float64), shared
        ),
        "census_sign_sum": nb_census_sign_sum,
    }
else:  # pragma: no cover
    NUMBA_KERNELS = {}

ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS
BACKEND = "numba" if USE_NUMBA else "numpy"


def get(name: str, backend: str | None = None):
    """Kernel ``name`` from the active backend, or from ``backend`` if given."""
    if backend is None:
        return ACTIVE[name]
    table = {"numba": NUMBA_KERNELS, "numpy": NUMPY_KERNELS}[backend]
    if name not in table:
        raise RuntimeError(f"backend {backend!r} unavailable")
    return table[name]
