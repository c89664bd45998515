import numpy as np
import pytest

from totalcorr import (
    DensityMatrix,
    Ensemble,
    RegisterShape,
    RoofConfig,
    dm,
    eof_two_qubit,
    epr,
    ensemble_from_isometry,
    flags_residual,
    ghz,
    measure_M,
    mix,
    pcrc_gap,
    product,
    purify,
    random_density,
    random_pure,
    roof_additivity_gap,
    roof_minimize,
)
from totalcorr.core import ResourceLimitError, partial_trace
from totalcorr.measures import direct_measure
from totalcorr.states import PureState

Q2 = RegisterShape((2, 2))
KET0 = PureState(RegisterShape((2,)), np.array([1.0, 0.0], dtype=complex))
KET1 = PureState(RegisterShape((2,)), np.array([0.0, 1.0], dtype=complex))

FAST = RoofConfig(restarts=4, seed=3)


def werner(p):
    """p * EPR projector mixed with (1-p)/4 identity."""
    mat = p * dm(epr()).matrix + (1 - p) * np.eye(4) / 4
    return DensityMatrix(Q2, mat)


def classically_correlated():
    mat = np.zeros((4, 4), dtype=complex)
    mat[0, 0] = mat[3, 3] = 0.5
    return DensityMatrix(Q2, mat)


class TestPurify:
    def test_ancilla_trace_recovers_state(self):
        rho = random_density(RegisterShape((2, 2)), 3, seed=31)
        psi = purify(rho)
        nk = psi.shape.nsites
        red = partial_trace(dm(psi), set(range(nk - 1)))
        assert np.max(np.abs(red.matrix - rho.matrix)) < 1e-10

    def test_pure_input_gets_trivial_ancilla(self):
        psi = purify(dm(epr()))
        assert psi.shape.dims == (2, 2, 2)
        red = partial_trace(dm(psi), {0, 1})
        assert np.max(np.abs(red.matrix - dm(epr()).matrix)) < 1e-10


class TestEnsembleFromIsometry:
    def test_identity_gives_eigen_ensemble(self):
        rho = random_density(Q2, 3, seed=32)
        lam = np.sort(np.linalg.eigvalsh(rho.matrix))[::-1]
        ens = ensemble_from_isometry(rho, np.eye(3))
        assert np.allclose(sorted(ens.weights, reverse=True), lam[:3], atol=1e-10)

    def test_steered_ensemble_reconstructs_rho(self):
        rho = random_density(Q2, 2, seed=33)
        rng = np.random.default_rng(34)
        x = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
        v, _ = np.linalg.qr(x)
        ens = ensemble_from_isometry(rho, v)
        assert np.max(np.abs(mix(ens).matrix - rho.matrix)) < 1e-10

    def test_rejects_non_isometry(self):
        rho = random_density(Q2, 2, seed=35)
        with pytest.raises(ValueError):
            ensemble_from_isometry(rho, np.ones((3, 2)))

    def test_rejects_rank_deficient_steering(self):
        rho = random_density(Q2, 3, seed=36)
        with pytest.raises(ValueError):
            ensemble_from_isometry(rho, np.eye(2))


class TestRoofMinimize:
    def test_pure_input_is_direct(self):
        res = roof_minimize(ghz(3), "M")
        assert res.value == pytest.approx(1.5, abs=1e-9)
        assert res.converged
        assert len(res.ensemble.weights) == 1

    def test_rank_one_density(self):
        res = roof_minimize(dm(epr()), "S", FAST)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_separable_werner_reaches_zero(self):
        res = roof_minimize(werner(0.2), "M", FAST)
        assert res.value <= 1e-3

    def test_value_matches_returned_ensemble(self):
        rho = random_density(Q2, 3, seed=37)
        res = roof_minimize(rho, "M", FAST)
        recomputed = sum(
            p * direct_measure(member, "M")
            for p, member in zip(res.ensemble.weights, res.ensemble.members)
        )
        assert res.value == pytest.approx(recomputed, abs=1e-12)
        assert np.max(np.abs(mix(res.ensemble).matrix - rho.matrix)) < 1e-8

    def test_upper_bounded_by_eigen_ensemble(self):
        rho = random_density(Q2, 4, seed=38)
        eigen = ensemble_from_isometry(rho, np.eye(4))
        eigen_avg = sum(
            p * direct_measure(member, "M")
            for p, member in zip(eigen.weights, eigen.members)
        )
        assert roof_minimize(rho, "M", FAST).value <= eigen_avg + 1e-9

    def test_deterministic_for_fixed_seed(self):
        rho = random_density(Q2, 2, seed=39)
        a = roof_minimize(rho, "M", FAST)
        b = roof_minimize(rho, "M", FAST)
        assert a.value == b.value
        assert a.per_restart_values == b.per_restart_values

    def test_mixed_strategy_not_above_pure(self):
        rho = random_density(Q2, 2, seed=40)
        pure = roof_minimize(rho, "M", RoofConfig(restarts=3, seed=1))
        mixed = roof_minimize(
            rho, "M", RoofConfig(restarts=3, seed=1, strategy="mixed_roof")
        )
        assert mixed.value <= pure.value + 1e-6

    def test_dimension_cap(self):
        rho = random_density(Q2, 2, seed=41)
        with pytest.raises(ResourceLimitError):
            roof_minimize(rho, "M", RoofConfig(dim_cap=2))

    def test_rejects_unknown_measure(self):
        with pytest.raises(ValueError):
            roof_minimize(dm(epr()), "Q")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RoofConfig(restarts=0)
        with pytest.raises(ValueError):
            RoofConfig(strategy="annealing")


class TestAgainstFormationOracle:
    def test_eof_epr(self):
        assert eof_two_qubit(dm(epr())) == pytest.approx(1.0, abs=1e-12)

    def test_eof_separable(self):
        assert eof_two_qubit(werner(1 / 3)) == pytest.approx(0.0, abs=1e-12)
        assert eof_two_qubit(classically_correlated()) == pytest.approx(0.0)

    def test_eof_werner_concurrence_formula(self):
        # for p > 1/3 the concurrence is (3p - 1)/2
        p = 0.9
        c = (3 * p - 1) / 2
        x = (1 + np.sqrt(1 - c * c)) / 2
        expected = -x * np.log2(x) - (1 - x) * np.log2(1 - x)
        assert eof_two_qubit(werner(p)) == pytest.approx(expected, abs=1e-12)

    def test_eof_rejects_other_shapes(self):
        with pytest.raises(ValueError):
            eof_two_qubit(dm(ghz(3)))

    def test_roof_tracks_eof_on_werner(self):
        # two-qubit pure members have M = entanglement entropy, so the
        # M-roof should land on the closed-form formation value
        for p in (0.5, 0.8):
            rho = werner(p)
            res = roof_minimize(rho, "M", RoofConfig(restarts=6, seed=5))
            assert res.value == pytest.approx(eof_two_qubit(rho), abs=5e-3)

    def test_roof_tracks_eof_on_random_density(self):
        rho = random_density(Q2, 2, seed=42)
        res = roof_minimize(rho, "M", RoofConfig(restarts=8, seed=6))
        assert res.value == pytest.approx(eof_two_qubit(rho), abs=5e-3)


class TestDerivedChecks:
    def test_pcrc_gap_classically_correlated(self):
        # direct M on the 50/50 |00>,|11> mixture is 0.5; the roof over
        # product members is 0, so the gap sits at exactly one half
        gap = pcrc_gap(classically_correlated(), "M", FAST)
        assert gap == pytest.approx(0.5, abs=1e-6)

    def test_pcrc_gap_pure_state_zero(self):
        assert abs(pcrc_gap(ghz(3), "S")) < 1e-12

    def test_flags_residual_single_member(self):
        e = Ensemble((1.0,), (epr(),))
        assert flags_residual(e, "M", FAST) < 1e-6

    def test_flags_residual_two_members(self):
        e = Ensemble((0.5, 0.5), (epr(), product([KET0, KET0])))
        assert flags_residual(e, "M", RoofConfig(restarts=6, seed=7)) < 5e-3

    def test_additivity_gap_product_inputs(self):
        gap = roof_additivity_gap(
            dm(epr()), classically_correlated(), "M", RoofConfig(restarts=6, seed=8)
        )
        assert abs(gap) < 5e-3
