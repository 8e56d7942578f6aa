import math

import numpy as np
import pytest

from qdanalyzer.experiment import (
    CHUNK,
    CoincidenceCounts,
    FourAngleResult,
    chsh_bound_check,
    chsh_settings,
    inequality5_diagnostic,
    run_correlation,
    run_four_angle,
    run_four_angle_sweep,
    run_malus_sequence,
    run_proton_experiment,
)
from qdanalyzer.reference import model_expectation_oracle
from qdanalyzer.sources import PairKind, SourceConfig

SINGLET = SourceConfig(PairKind.SINGLET_SPINOR, seed=1)
PHOTON = SourceConfig(PairKind.PHOTON_VECTOR, seed=1)
DEG = math.radians


def within(result, expected, k=4.0):
    return abs(result.gamma - expected) <= k * result.std_error


@pytest.mark.parametrize("strategy", ["deterministic"])
def test_singlet_zero_angle_is_perfect(strategy):
    r = run_correlation(SINGLET, 0.0, 5000, strategy)
    assert r.gamma == -1.0
    assert r.counts.n_pp == r.counts.n_mm == 0
    assert r.counts.n_pm + r.counts.n_mp == 5000


def test_photon_30_degrees():
    r = run_correlation(PHOTON, DEG(30), 100_000)
    assert within(r, 0.5)
    assert r.qm_reference == pytest.approx(0.5)


def test_singlet_60_degrees():
    r = run_correlation(SINGLET, DEG(60), 100_000)
    assert within(r, -0.5)


def test_zero_trials_rejected():
    with pytest.raises(ValueError):
        run_correlation(SINGLET, 0.0, 0)
    with pytest.raises(ValueError):
        run_correlation(SINGLET, 0.0, 10, "quantum")


def test_proton_grid_pure_singlet():
    grid = [DEG(d) for d in range(0, 91, 15)]
    results = run_proton_experiment(SINGLET, grid, 10_000)
    assert results[0].gamma == -1.0
    for r in results:
        assert r.qm_reference == pytest.approx(-math.cos(r.theta))
        assert within(r, -math.cos(r.theta))


def test_proton_mixture_at_zero():
    config = SourceConfig(PairKind.SINGLET_SPINOR, 0.03, seed=2)
    r = run_proton_experiment(config, [0.0], 100_000)[0]
    assert r.qm_reference == pytest.approx(-0.94)
    assert within(r, -0.94)


def test_proton_requires_spinors_and_grid():
    with pytest.raises(ValueError):
        run_proton_experiment(PHOTON, [0.0])
    with pytest.raises(ValueError):
        run_proton_experiment(SINGLET, [])


def test_four_angle_zero_is_two():
    r = run_four_angle(PHOTON, 0.0, 2000)
    assert r.gamma4 == 2.0 and r.std_error == 0.0
    assert [c.theta for c in r.components] == [0.0, -0.0, 0.0]


def test_four_angle_peak():
    r = run_four_angle(PHOTON, DEG(22.5), 100_000)
    assert abs(r.gamma4 - 2.8284271247461903) <= 4 * r.std_error
    c = r.components
    assert r.gamma4 == 2 * c[0].gamma + c[1].gamma - c[2].gamma
    assert r.std_error == pytest.approx(math.sqrt(4 * c[0].std_error**2 + c[1].std_error**2 + c[2].std_error**2))


def test_four_angle_independent_settings():
    r = run_four_angle(PHOTON, DEG(22.5), 50_000, independent_settings=True)
    assert len(r.components) == 4
    assert r.components[0].counts != r.components[1].counts
    assert abs(r.gamma4 - 2.8284271247461903) <= 4 * r.std_error


def test_four_angle_probabilistic_within_limits():
    r = run_four_angle(PHOTON, DEG(22.5), 100_000, "probabilistic")
    assert abs(r.gamma4) <= 2 + 4 * r.std_error


def test_chsh_report_arithmetic():
    fake = FourAngleResult(0.0, 2.83, 0.01, ())
    rep = chsh_bound_check(fake)
    assert rep.violation and rep.excess_sigma == pytest.approx(83.0)
    assert (rep.lower, rep.upper) == (-2.0, 2.0)
    assert not chsh_bound_check(FourAngleResult(0.0, 1.0, 0.01, ())).violation
    assert not chsh_bound_check(FourAngleResult(0.0, 2.0, 0.0, ())).violation


def test_chsh_violation_follows_closed_form():
    grid = [DEG(7.5 * k) for k in range(13)]
    for r in run_four_angle_sweep(PHOTON, grid, 100_000):
        rep = chsh_bound_check(r)
        margin = abs(r.qm_reference) - 2.0
        if margin > 8 * r.std_error:
            assert rep.violation, math.degrees(r.theta)
        elif margin < -8 * r.std_error or (margin <= 1e-12 and r.std_error == 0):
            assert not rep.violation, math.degrees(r.theta)


def test_estimator_identity_and_range():
    for strategy in ("deterministic", "probabilistic"):
        for theta in (0.0, 0.4, 1.2, 2.5):
            r = run_correlation(SourceConfig(PairKind.SINGLET_SPINOR, 0.2, 4), theta, 3000, strategy)
            c = r.counts
            assert c.total == 3000 == r.n
            assert r.gamma == (c.n_pp + c.n_mm - c.n_pm - c.n_mp) / c.total
            assert -1.0 <= r.gamma <= 1.0


@pytest.mark.parametrize("strategy", ["deterministic", "probabilistic"])
@pytest.mark.parametrize("kind", list(PairKind))
def test_symmetry_in_theta(kind, strategy):
    config = SourceConfig(kind, seed=21)
    for deg in (15, 40, 70):
        a = run_correlation(config.with_stream(0), DEG(deg), 40_000, strategy)
        b = run_correlation(config.with_stream(1), DEG(-deg), 40_000, strategy)
        assert abs(a.gamma - b.gamma) <= 4 * math.hypot(a.std_error, b.std_error)


def test_rotation_sign_statistically_equivalent():
    a = run_correlation(PHOTON, DEG(20), 50_000, rotation_sign=1)
    b = run_correlation(PHOTON.with_stream(3), DEG(20), 50_000, rotation_sign=-1)
    assert abs(a.gamma - b.gamma) <= 4 * math.hypot(a.std_error, b.std_error)


def test_seed_determinism_across_workers():
    n = 3 * CHUNK + 123
    config = SourceConfig(PairKind.SINGLET_SPINOR, 0.03, seed=77)
    ref = run_correlation(config, DEG(33), n)
    for workers in (2, 4):
        assert run_correlation(config, DEG(33), n, workers=workers) == ref
    other = run_correlation(SourceConfig(PairKind.SINGLET_SPINOR, 0.03, seed=78), DEG(33), n)
    assert other.counts != ref.counts


@pytest.mark.parametrize("strategy", ["deterministic", "probabilistic"])
@pytest.mark.parametrize("kind", list(PairKind))
def test_oracle_equivalence(kind, strategy):
    config = SourceConfig(kind, seed=5)
    for i, deg in enumerate(np.linspace(0, 90, 13)):
        theta = DEG(deg)
        r = run_correlation(config.with_stream(i), theta, 20_000, strategy)
        expected = model_expectation_oracle(theta, kind, strategy)
        assert abs(r.gamma - expected) <= 4 * r.std_error + 1e-5, (deg, r.gamma, expected)


def test_four_angle_bound():
    for r in run_four_angle_sweep(PHOTON, [DEG(d) for d in (10, 50, 80)], 5000):
        assert abs(r.gamma4) <= 4.0


# -------------------------------------------------------------- inequality (5)


def test_ineq5_equal_settings():
    rep = inequality5_diagnostic(PHOTON, 0.3, 0.3, 0.1, 0.1, 20_000)
    assert rep.rhs == 2.0
    assert rep.sign_change_fraction == 0.0
    assert rep.rhs >= rep.lhs


def test_ineq5_chsh_angles():
    rep = inequality5_diagnostic(PHOTON, *chsh_settings(DEG(22.5)), n_pairs=100_000)
    assert rep.settings == pytest.approx((0.0, DEG(45), DEG(22.5), DEG(67.5)))
    assert rep.rhs > 2.0 and rep.rhs >= rep.lhs
    assert rep.rhs == 2.83904  # frozen regression value for seed 1
    assert abs(rep.lhs - 2 * math.sqrt(2)) <= 4 * math.sqrt(3e-5)


def test_ineq5_sign_change_census():
    # B at relative angles 0 and 45 deg (photon q = 0 and 90 deg) differ when
    # sin(w) and cos(w) have opposite signs, w = arccos(u') in (pi/2, pi]:
    # measure (1 - cos(pi/2)) / 2 = 1/2 under the density sin(w)/2.
    n = 100_000
    rep = inequality5_diagnostic(PHOTON, 0.0, DEG(45), 0.0, 0.0, n)
    assert rep.sign_change_fraction > 0
    assert abs(rep.sign_change_fraction - 0.5) <= 4 * math.sqrt(0.25 / n)


def test_ineq5_independent_u2():
    rep = inequality5_diagnostic(PHOTON, 0.3, 0.3, 0.1, 0.1, 20_000, shared_u2=False)
    assert rep.rhs >= rep.lhs
    assert rep.sign_change_fraction > 0
    rep = inequality5_diagnostic(PHOTON, *chsh_settings(DEG(22.5)), n_pairs=50_000, shared_u2=False)
    assert rep.rhs >= rep.lhs > 2.0


def test_ineq5_spinors():
    rep = inequality5_diagnostic(SINGLET, *chsh_settings(DEG(45)), n_pairs=50_000)
    assert rep.rhs >= rep.lhs


# ----------------------------------------------------------------- Malus law


def test_malus_zero():
    r = run_malus_sequence(1, 0.0, 100_000)
    assert r.fraction == 1.0


def test_malus_crossed():
    r = run_malus_sequence(1, math.pi / 2, 100_000)
    assert r.fraction == 0.0


def test_malus_30():
    r = run_malus_sequence(1, DEG(30), 10**6)
    assert abs(r.fraction - 0.75) <= 4 * r.std_error


def test_malus_minus_prepared():
    r = run_malus_sequence(-1, DEG(30), 10**5)
    assert r.reference == pytest.approx(0.25)
    assert abs(r.fraction - 0.25) <= 4 * r.std_error


def test_malus_validation():
    with pytest.raises(ValueError):
        run_malus_sequence(0, 0.1, 10)
    with pytest.raises(ValueError):
        run_malus_sequence(1, 0.1, 0)


def test_counts_gamma():
    assert CoincidenceCounts(3, 1, 1, 5).gamma() == 0.6
