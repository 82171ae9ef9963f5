import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from entconc import optics
from entconc.qstate import (
    ImpossibleBranch,
    PureState,
    apply_single_mode,
    fidelity_to_pure,
    normalize,
    psi_plus,
    tensor,
)

R = 1 / math.sqrt(2)
H = np.array([1, 0])
V = np.array([0, 1])


def eq2_state(a1, b1, a2=None, b2=None):
    """Pairs (1,2), (3,4) with photon 4 already rotated by R90."""
    a2 = a1 if a2 is None else a2
    b2 = b1 if b2 is None else b2
    p12 = PureState.from_terms(("1", "2"), {"HV": a1, "VH": b1})
    p34 = PureState.from_terms(("3", "4"), {"HV": a2, "VH": b2})
    return apply_single_mode(tensor(p12, p34), "4", optics.R90)


class TestHalfWavePlate:
    def test_r90_swaps(self):
        np.testing.assert_allclose(optics.half_wave_plate(math.pi / 4) @ H, V, atol=1e-15)
        np.testing.assert_allclose(optics.half_wave_plate(math.pi / 4), optics.R90, atol=1e-15)

    def test_zero_flips_v(self):
        np.testing.assert_allclose(optics.half_wave_plate(0) @ V, -V)
        np.testing.assert_allclose(optics.half_wave_plate(0) @ H, H)

    def test_eighth_turn_makes_plus(self):
        np.testing.assert_allclose(optics.half_wave_plate(math.pi / 8) @ H, optics.PLUS, atol=1e-15)

    @given(st.floats(-10, 10))
    def test_unitary_and_involution(self, theta):
        J = optics.half_wave_plate(theta)
        assert optics.is_unitary(J)
        s = psi_plus("1", "2")
        twice = apply_single_mode(apply_single_mode(s, "1", J), "1", J)
        assert abs(np.vdot(s.amplitudes, twice.amplitudes)) == pytest.approx(1.0, abs=1e-12)


class TestBrewster:
    def test_one_window_on_plus(self):
        f = optics.brewster_window(0.98, 0.73, 1)
        out = f.apply(PureState(("1",), optics.PLUS), "1")
        np.testing.assert_allclose(out.amplitudes, [math.sqrt(0.98) * R, math.sqrt(0.73) * R])
        assert abs(out.amplitudes[0]) ** 2 / abs(out.amplitudes[1]) ** 2 == pytest.approx(1.3424657534246576)

    def test_four_windows(self):
        f = optics.brewster_window(0.98, 0.73, 4)
        assert f.t_h / f.t_v == pytest.approx(3.247976379945505)
        assert optics.is_passive(f.jones)

    def test_equal_transmissions_are_scalar(self):
        f = optics.brewster_window(1.0, 1.0, 3)
        np.testing.assert_allclose(f.jones, np.eye(2))

    @pytest.mark.parametrize("t_h, t_v, n", [(0.7, 0.9, 1), (1.2, 0.5, 1), (0.9, 0.0, 1), (0.9, 0.5, 0)])
    def test_out_of_range(self, t_h, t_v, n):
        with pytest.raises(ValueError):
            optics.brewster_window(t_h, t_v, n)

    @settings(max_examples=50)
    @given(st.floats(0.05, 1.0), st.integers(1, 6))
    def test_equal_t_keeps_state_direction(self, t, n):
        s = eq2_state(0.6, 0.8)
        out = optics.brewster_window(t, t, n).apply(s, "1")
        unit, _ = normalize(out)
        assert abs(np.vdot(s.amplitudes, unit.amplitudes)) == pytest.approx(1.0, abs=1e-12)


class TestPolarizerAndCompensator:
    def test_polarizer(self):
        np.testing.assert_allclose(optics.polarizer(math.pi / 4), [R, R])
        np.testing.assert_allclose(optics.polarizer(0), H)
        np.testing.assert_allclose(optics.polarizer(math.pi / 2), V, atol=1e-15)
        np.testing.assert_allclose(optics.polarizer(3 * math.pi / 4), [-R, R], atol=1e-15)

    def test_quarter_phase_on_pair(self):
        a, b = 0.6, 0.8
        s = PureState.from_terms(("1", "2"), {"HV": a, "VH": b})
        out = apply_single_mode(s, "1", optics.phase_compensator(math.pi / 2))
        assert out.amplitude("HV") == pytest.approx(a)
        assert out.amplitude("VH") == pytest.approx(1j * b)

    def test_zero_and_two_pi(self):
        np.testing.assert_allclose(optics.phase_compensator(0), np.eye(2))
        c = optics.phase_compensator(math.pi)
        np.testing.assert_allclose(c @ c, np.eye(2), atol=1e-15)


class TestPBS:
    def test_equal_pairs_give_ghz(self):
        out, p = optics.pbs_coincidence(eq2_state(R, R), "2", "4", "2p", "4p")
        assert p == pytest.approx(0.5, abs=1e-12)
        ghz = PureState.from_terms(("1", "2p", "3", "4p"), {"HVVV": R, "VHHH": R})
        assert fidelity_to_pure(out, ghz) == pytest.approx(1.0, abs=1e-12)

    def test_product_input_is_impossible(self):
        with pytest.raises(ImpossibleBranch):
            optics.pbs_coincidence(eq2_state(1, 0), "2", "4", "2p", "4p")

    def test_unequal_pairs_against_term_oracle(self):
        a1, b1 = 0.6, 0.8j
        a2, b2 = 0.28, 0.96
        # term-by-term oracle: generalization of the GHZ expansion
        st_ = oracles.product(oracles.pair(a1, b1, "1", "2"), oracles.pair(a2, b2, "3", "4"))
        st_ = oracles.apply_jones(st_, "4", [[0, 1], [1, 0]])
        kept = oracles.relabel(oracles.keep_equal(st_, "2", "4"), {"2": "2p", "4": "4p"})
        expected_p = abs(a1 * b2) ** 2 + abs(b1 * a2) ** 2
        assert oracles.norm_sq(kept) == pytest.approx(expected_p)

        out, p = optics.pbs_coincidence(eq2_state(a1, b1, a2, b2), "2", "4", "2p", "4p")
        assert p == pytest.approx(expected_p, abs=1e-12)
        vec = oracles.to_vector(kept, ("1", "2p", "3", "4p")) / math.sqrt(expected_p)
        np.testing.assert_allclose(out.amplitudes, vec, atol=1e-12)
        assert out.amplitude("HVVV") == pytest.approx(a1 * b2 / math.sqrt(expected_p))
        assert out.amplitude("VHHH") == pytest.approx(b1 * a2 / math.sqrt(expected_p))

    def test_output_labeling_conventions_agree(self):
        # transmitted-keeps-side versus crossed relabeling: equal after post-selection
        s = eq2_state(0.6, 0.8j, 0.28, 0.96)
        straight, p1 = optics.pbs_coincidence(s, "2", "4", "2p", "4p")
        crossed, p2 = optics.pbs_coincidence(s, "2", "4", "4p", "2p")
        assert p1 == pytest.approx(p2, abs=1e-15)
        np.testing.assert_allclose(straight.amplitudes, crossed.amplitudes, atol=1e-15)

    def test_kept_plus_discarded_is_input(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            v = rng.normal(size=16) + 1j * rng.normal(size=16)
            s = PureState(("1", "2", "3", "4"), v / np.linalg.norm(v) * rng.uniform(0.2, 1))
            _, p = optics.pbs_coincidence(s, "2", "4", "2p", "4p")
            assert p + optics.discarded_weight(s, "2", "4") == pytest.approx(s.norm_sq, abs=1e-12)

    def test_commutes_with_spectator_element(self):
        rng = np.random.default_rng(4)
        J = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        J /= np.linalg.svd(J, compute_uv=False).max()
        s = eq2_state(0.6, 0.8)
        a, pa = optics.pbs_coincidence(apply_single_mode(s, "3", J), "2", "4", "2p", "4p")
        b, pb = optics.pbs_coincidence(s, "2", "4", "2p", "4p")
        b = apply_single_mode(b, "3", J)
        np.testing.assert_allclose(a.amplitudes * np.sqrt(pa), b.amplitudes * np.sqrt(pb), atol=1e-12)

    def test_branches_sum_to_kept(self):
        s = eq2_state(0.6, 0.8)
        hh, vv = optics.pbs_branches(s, "2", "4", "2p", "4p")
        _, p = optics.pbs_coincidence(s, "2", "4", "2p", "4p")
        assert hh.norm_sq + vv.norm_sq == pytest.approx(p)
        assert hh.amplitude("VHHH") != 0 and vv.amplitude("HVVV") != 0
