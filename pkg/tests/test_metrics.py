import math

import numpy as np
import pytest

import oracles
from entconc import metrics
from entconc.metrics import (
    TSIRELSON,
    ChshSettings,
    chsh_S,
    correlation,
    fidelity_from_S,
    hv_fractions,
    optimal_settings_psi_plus,
    pm_visibility,
    violation_sigma,
)
from entconc.qstate import DensityOperator, PureState, fidelity_to_pure, psi_minus, psi_plus, to_density

MODES = ("1", "2")


def dephased(g):
    m = np.zeros((4, 4))
    m[1, 1] = m[2, 2] = 0.5
    m[1, 2] = m[2, 1] = g / 2
    return DensityOperator(MODES, m)


def mixed():
    return DensityOperator(MODES, np.eye(4) / 4)


class TestCorrelation:
    def test_psi_plus_formula_against_dense_oracle(self):
        rng = np.random.default_rng(1)
        rho = to_density(psi_plus(*MODES))
        Z = np.diag([1.0, -1.0])
        X = np.array([[0.0, 1.0], [1.0, 0.0]])
        for t1, t2 in rng.uniform(0, math.pi, size=(50, 2)):
            o1 = math.cos(2 * t1) * Z + math.sin(2 * t1) * X
            o2 = math.cos(2 * t2) * Z + math.sin(2 * t2) * X
            oracle = float(np.trace(rho.matrix @ np.kron(o1, o2)).real)
            assert oracle == pytest.approx(-math.cos(2 * (t1 + t2)), abs=1e-12)
            assert correlation(rho, t1, t2).E == pytest.approx(oracle, abs=1e-12)

    def test_psi_plus_perfect_correlation(self):
        rho = to_density(psi_plus(*MODES))
        assert correlation(rho, math.pi / 4, math.pi / 4).E == pytest.approx(1.0)
        assert correlation(rho, 0, math.pi / 4).E == pytest.approx(0.0, abs=1e-15)

    def test_hv_anticorrelated(self):
        rho = to_density(PureState.from_terms(MODES, {"HV": 1}))
        assert correlation(rho, 0, 0).E == pytest.approx(-1.0)

    def test_mixed_uncorrelated(self):
        for t1, t2 in ((0, 0), (0.3, 1.1), (2.0, 0.5)):
            rec = correlation(mixed(), t1, t2)
            assert rec.E == pytest.approx(0.0, abs=1e-15)
            assert sum(rec.probs) == pytest.approx(1.0, abs=1e-10)

    def test_wrong_mode_count(self):
        with pytest.raises(ValueError):
            correlation(to_density(PureState(("1",), [1, 0])), 0, 0)


class TestChsh:
    def test_psi_plus_reaches_tsirelson(self):
        S = chsh_S(to_density(psi_plus(*MODES)), optimal_settings_psi_plus())
        assert S == pytest.approx(2 * math.sqrt(2), abs=1e-9)

    def test_dephased_family_closed_form(self):
        # With cos2t Z + sin2t X analyzers and these angles only the X-X coherence
        # term scales with gamma: S = sqrt2 (1 + gamma).
        s = optimal_settings_psi_plus()
        for g in (0.0, 0.5, 0.83, 0.859, 0.912, 1.0):
            rho = dephased(g)
            oracle = oracles.chsh_dense(rho.matrix, s.a, s.a_prime, s.b, s.b_prime)
            assert oracle == pytest.approx(math.sqrt(2) * (1 + g), abs=1e-12)
            assert chsh_S(rho, s) == pytest.approx(oracle, abs=1e-12)

    def test_dephased_family_maximum_over_linear_settings(self):
        # correlation tensor restricted to linear analyzers is diag(gamma, -1):
        # the best S is 2 sqrt(1 + gamma^2), above 2 sqrt2 gamma for every gamma < 1
        from scipy.optimize import minimize

        rng = np.random.default_rng(9)
        for g in (0.3, 0.83, 0.912):
            rho = dephased(g)
            best = max(
                -minimize(lambda x: -chsh_S(rho, ChshSettings(*np.mod(x, math.pi))), x0).fun
                for x0 in rng.uniform(0, math.pi, size=(8, 4))
            )
            assert best == pytest.approx(2 * math.sqrt(1 + g * g), abs=1e-6)
            assert best > TSIRELSON * g

    def test_classical_mixture_never_violates(self):
        rng = np.random.default_rng(4)
        rho = dephased(0.0)
        for angles in rng.uniform(0, math.pi, size=(500, 4)):
            assert abs(chsh_S(rho, ChshSettings(*angles))) <= 2 + 1e-9

    def test_settings_are_state_specific(self):
        s = optimal_settings_psi_plus()
        assert chsh_S(to_density(psi_minus(*MODES)), s) < TSIRELSON - 1e-6
        assert chsh_S(mixed(), s) == pytest.approx(0.0, abs=1e-12)

    def test_angle_range(self):
        with pytest.raises(ValueError):
            ChshSettings(0, math.pi, 0, 0)

    def test_tsirelson_bound_random_states(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(10_000):
            rho = DensityOperator(MODES, oracles.random_density(rng, 2, rank=int(rng.integers(1, 5))))
            S = chsh_S(rho, ChshSettings(*rng.uniform(0, math.pi, 4)))
            worst = max(worst, abs(S))
        assert worst <= TSIRELSON + 1e-9

    def test_local_bound_product_states(self):
        rng = np.random.default_rng(8)
        for _ in range(2000):
            a = np.array(oracles.random_unit_pair(rng))
            b = np.array(oracles.random_unit_pair(rng))
            rho = to_density(PureState(MODES, np.kron(a, b)))
            assert abs(chsh_S(rho, ChshSettings(*rng.uniform(0, math.pi, 4)))) <= 2 + 1e-9


class TestFractions:
    def test_four_windows(self):
        t = 0.98**4, 0.73**4
        s = PureState.from_terms(MODES, {"HV": math.sqrt(t[0]), "VH": math.sqrt(t[1])})
        s = PureState(MODES, s.amplitudes / np.linalg.norm(s.amplitudes))
        assert hv_fractions(s)[4] == pytest.approx(3.247976379945505)

    def test_psi_plus_ratio_one(self):
        hh, hv, vh, vv, r = hv_fractions(psi_plus(*MODES))
        assert (hh, hv, vh, vv) == pytest.approx((0, 0.5, 0.5, 0))
        assert r == pytest.approx(1.0)

    def test_product_ratio_infinite(self):
        out = hv_fractions(PureState.from_terms(MODES, {"HV": 1}))
        assert out[:4] == pytest.approx((0, 1, 0, 0))
        assert out[4] == math.inf


class TestVisibility:
    def test_psi_plus(self):
        assert pm_visibility(psi_plus(*MODES)) == pytest.approx(1.0)

    def test_classical_mixture(self):
        assert pm_visibility(dephased(0)) == pytest.approx(0.0, abs=1e-15)

    def test_dephased(self):
        assert pm_visibility(dephased(0.83)) == pytest.approx(0.83, abs=1e-12)

    def test_dephased_family_consistency(self):
        for g in np.linspace(0, 1, 21):
            rho = dephased(g)
            assert pm_visibility(rho) == pytest.approx(g, abs=1e-9)
            assert fidelity_to_pure(rho, psi_plus(*MODES)) == pytest.approx((1 + g) / 2, abs=1e-9)


class TestFidelityFromS:
    @pytest.mark.parametrize("S, F", [(2.58, 0.956), (2.43, 0.930), (2 * math.sqrt(2), 1.0)])
    def test_examples(self, S, F):
        assert fidelity_from_S(S) == pytest.approx(F, abs=5e-4)

    def test_matches_dephased_fidelity_when_visibility_is_known(self):
        # F = (1 + V) / 2 coincides with <Psi+|rho|Psi+> of the dephased family at V = gamma
        for g in (0.8, 0.9, 1.0):
            assert fidelity_from_S(TSIRELSON * g) == pytest.approx(
                fidelity_to_pure(dephased(g), psi_plus(*MODES)), abs=1e-12
            )

    @pytest.mark.parametrize("S", [-0.5, 3.0])
    def test_out_of_range(self, S):
        with pytest.raises(ValueError):
            fidelity_from_S(S)


class TestViolation:
    def test_examples(self):
        assert violation_sigma(2.58, 0.07) == pytest.approx(8.2857, abs=1e-4)
        assert violation_sigma(2.43, 0.08) == pytest.approx(5.375)
        assert violation_sigma(2.0, 0.3) == 0.0

    @pytest.mark.parametrize("sigma", [0.0, -1.0])
    def test_bad_sigma(self, sigma):
        with pytest.raises(ValueError):
            violation_sigma(2.5, sigma)


def test_outcome_probabilities_sum_to_one():
    rng = np.random.default_rng(12)
    for _ in range(200):
        rho = DensityOperator(MODES, oracles.random_density(rng, 2))
        p = metrics.outcome_probs(rho, *rng.uniform(0, math.pi, 2))
        assert p.sum() == pytest.approx(1.0, abs=1e-10)
        assert (p >= -1e-12).all()
