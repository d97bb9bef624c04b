import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import lp_feasible, sphere_margin

from onebit_mimo.channel import ChannelModelConfig, array_response, gen_channel
from onebit_mimo.closed_form import (
    ConvexOptBoundInputs,
    channel_inversion_rate,
    convexopt_lower_bound,
    dmin_upper_check,
    finite_snr_upper_bound,
    siso_capacity,
)
from onebit_mimo.constellation_design import (
    DesignResult,
    InfeasiblePatternError,
    combined_alphabet_rate,
    design_constellation,
    designed_ba_rate,
    feasibility_check,
    max_margin_symbol,
    min_norm_point,
    mmwave_single_path_constellation,
    sign_consistent,
    simo_grid_capacity,
)
from onebit_mimo.infinite_snr import k_func
from onebit_mimo.numerics import real_lift
from onebit_mimo.quantized_dmc import all_patterns, mutual_information, transition_matrix


def channel(nr, nt, seed):
    return gen_channel(ChannelModelConfig(kind="iid_gaussian", nr=nr, nt=nt, seed=seed))


def uniform_mi(H, design):
    T = transition_matrix(H, design.constellation)
    return mutual_information(T, design.constellation.probs)


class TestMinNormPoint:
    def test_segment(self):
        P = np.array([[1.0, 1.0], [1.0, -1.0]])
        lam = min_norm_point(P @ P.T)
        np.testing.assert_allclose(P.T @ lam, [1.0, 0.0], atol=1e-12)

    def test_origin_inside(self):
        P = np.array([[1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0]])
        lam = min_norm_point(P @ P.T)
        assert np.linalg.norm(P.T @ lam) < 1e-12


class TestFeasibility:
    def test_scalar_all_quadrants(self):
        Hhat = real_lift([[1.0]])
        assert all(feasibility_check(Hhat, p) for p in all_patterns(2))

    @pytest.mark.parametrize("seed", range(5))
    def test_simo_two_antennas(self, seed):
        Hhat = real_lift(channel(2, 1, seed))
        assert sum(feasibility_check(Hhat, p) for p in all_patterns(4)) == 8

    def test_three_by_two(self):
        Hhat = real_lift(channel(3, 2, 0))
        assert sum(feasibility_check(Hhat, p) for p in all_patterns(6)) == 52

    @pytest.mark.parametrize("nr, nt, seed", [(3, 2, 1), (3, 1, 2), (4, 3, 3)])
    def test_agrees_with_lp(self, nr, nt, seed):
        Hhat = real_lift(channel(nr, nt, seed))
        for p in all_patterns(2 * nr):
            assert feasibility_check(Hhat, p) == lp_feasible(p[:, None] * Hhat)


class TestMaxMargin:
    def test_scalar_quadrant(self):
        sol = max_margin_symbol(real_lift([[1.0]]), [1, 1], 2.0)
        np.testing.assert_allclose(sol.x_hat, [1.0, 1.0], atol=1e-12)
        assert sol.d_star == pytest.approx(1.0, abs=1e-12)

    def test_infeasible(self):
        Hhat = real_lift(channel(2, 1, 0))
        bad = next(p for p in all_patterns(4) if not feasibility_check(Hhat, p))
        with pytest.raises(InfeasiblePatternError):
            max_margin_symbol(Hhat, bad, 1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e6))
    def test_homogeneity_and_constraints(self, seed, Pt):
        Hhat = real_lift(channel(2, 2, seed))
        p = all_patterns(4)[seed % 16]
        a = max_margin_symbol(Hhat, p, Pt)
        b = max_margin_symbol(Hhat, p, 2 * Pt)
        assert b.d_star == pytest.approx(math.sqrt(2) * a.d_star, rel=1e-9)
        assert a.x_hat @ a.x_hat <= Pt * (1 + 1e-9)
        assert np.min(p * (Hhat @ a.x_hat)) >= a.d_star - 1e-9 * math.sqrt(Pt)

    def test_sphere_grid_oracle(self):
        Hhat = real_lift(channel(2, 3, 4))
        Pt = 3.0
        for p in all_patterns(4):
            sol = max_margin_symbol(Hhat, p, Pt)
            ref, sampled = sphere_margin(p[:, None] * Hhat, seed=int(p @ np.arange(4)) % 97)
            assert sol.d_star == pytest.approx(math.sqrt(Pt) * ref, abs=1e-4)
            assert sol.d_star >= math.sqrt(Pt) * sampled - 1e-9


class TestDesign:
    def test_miso(self):
        H = channel(1, 3, 0)
        d = design_constellation(H, 1e6)
        assert d.M == 4
        assert uniform_mi(H, d) == pytest.approx(2.0, abs=1e-6)

    def test_two_by_two_high_snr(self):
        H = channel(2, 2, 1)
        d = design_constellation(H, 1e6)
        assert d.M == 16
        assert uniform_mi(H, d) >= 0.99 * 4

    def test_three_by_two_count(self):
        H = channel(3, 2, 2)
        d = design_constellation(H, 1e8)
        assert d.M == 52
        assert uniform_mi(H, d) >= 0.98 * math.log2(52)

    def test_enumeration_cap(self):
        with pytest.raises(ValueError):
            design_constellation(np.eye(11), 1.0)

    @pytest.mark.parametrize("nr, nt", [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3), (2, 3)])
    def test_orthant_count(self, nr, nt):
        for seed in range(5):
            assert design_constellation(channel(nr, nt, seed), 1.0).M == k_func(nr, nt)

    @pytest.mark.parametrize("seed", range(50))
    def test_dmin_upper_bound(self, seed):
        H = channel(2, 2, seed)
        d = design_constellation(H, 1.0)
        assert dmin_upper_check(H, 1.0, d.d_min)

    def test_homogeneity(self):
        H = channel(3, 2, 5)
        a = design_constellation(H, 2.0)
        b = design_constellation(H, 8.0)
        np.testing.assert_array_equal(a.patterns, b.patterns)
        np.testing.assert_allclose(b.margins, 2 * a.margins, rtol=1e-6)

    def test_sign_consistency(self):
        for nr, nt in [(2, 2), (3, 2), (4, 3)]:
            H = channel(nr, nt, 7)
            assert sign_consistent(H, design_constellation(H, 1.0))

    def test_every_symbol_at_full_power(self):
        d = design_constellation(channel(2, 3, 8), 5.0)
        np.testing.assert_allclose(np.sum(np.abs(d.constellation.symbols) ** 2, axis=1), 5.0, rtol=1e-9)
        np.testing.assert_allclose(d.constellation.probs, 1 / d.M)

    def test_scaled_matches_redesign(self):
        H = channel(2, 2, 9)
        a = design_constellation(H, 1.0).scaled(30.0)
        b = design_constellation(H, 30.0)
        np.testing.assert_allclose(a.constellation.symbols, b.constellation.symbols, atol=1e-9)

    def test_json_roundtrip(self):
        d = design_constellation(channel(2, 2, 3), 4.0)
        back = DesignResult.from_json(d.to_json())
        np.testing.assert_array_equal(back.constellation.symbols, d.constellation.symbols)
        np.testing.assert_array_equal(back.patterns, d.patterns)
        assert back.d_min == d.d_min

    @pytest.mark.parametrize("seed", range(3))
    def test_lower_bound_below_uniform_mi(self, seed):
        H = channel(2, 2, seed)
        base = design_constellation(H, 1.0)
        for db in np.linspace(-10, 40, 11):
            d = base.scaled(10 ** (db / 10))
            lb = convexopt_lower_bound(ConvexOptBoundInputs(d.M, d.d_min, 2))
            assert lb <= uniform_mi(H, d) + 1e-9


class TestRates:
    @pytest.mark.parametrize("seed", range(3))
    def test_designed_ba_below_upper_bound(self, seed):
        H = channel(2, 2, seed)
        base = design_constellation(H, 1.0)
        for db in (-10.0, 0.0, 10.0, 30.0):
            Pt = 10 ** (db / 10)
            res = designed_ba_rate(H, base.scaled(Pt))
            assert res.capacity_bits >= uniform_mi(H, base.scaled(Pt)) - 1e-12
            assert res.capacity_bits <= finite_snr_upper_bound(H, Pt) + 1e-9

    @pytest.mark.parametrize("nr, nt", [(2, 2), (2, 3)])
    def test_combined_alphabet_ordering(self, nr, nt):
        H = channel(nr, nt, 11)
        base = design_constellation(H, 1.0)
        for db in (-15.0, 0.0, 10.0, 20.0, 35.0):
            Pt = 10 ** (db / 10)
            res = combined_alphabet_rate(H, Pt, base)
            assert channel_inversion_rate(H, Pt) - 1e-9 <= res.capacity_bits
            assert res.capacity_bits <= finite_snr_upper_bound(H, Pt) + 1e-9


class TestSimoGrid:
    def test_rotated_8psk_plus_zero(self):
        h = np.array([np.exp(1j * np.pi / 8), np.exp(-1j * np.pi / 8)])
        res = simo_grid_capacity(h, 10.0, grid_n=64)
        assert res.capacity_bits == pytest.approx(2.52, abs=0.03)
        sym, p = res.support(1e-3)
        zero = np.abs(sym) < 1e-9
        assert zero.sum() == 1
        assert p[zero][0] > 0.01
        ring = sym[~zero]
        # grid resolution may split one phase over neighbouring radii
        phases = np.unique(np.round(np.mod(np.angle(ring), 2 * np.pi), 9))
        assert phases.size == 8
        np.testing.assert_allclose(np.diff(phases), np.pi / 4, atol=1e-9)
        np.testing.assert_allclose(np.abs(ring), math.sqrt(10.0), rtol=0.1)
        assert np.sum(p[~zero] * np.abs(ring) ** 2) <= 10.0 * (1 + 1e-9)

    def test_scalar_matches_closed_form(self):
        for Pt in (0.1, 1.0, 10.0):
            res = simo_grid_capacity(np.array([1.0]), Pt, grid_n=32)
            assert res.capacity_bits == pytest.approx(siso_capacity(1.0, Pt), abs=0.01)
            assert res.capacity_bits <= siso_capacity(1.0, Pt) + 1e-7

    def test_grid_size_validated(self):
        with pytest.raises(ValueError):
            simo_grid_capacity(np.array([1.0]), 1.0, grid_n=4)

    def test_json_support(self):
        res = simo_grid_capacity(np.array([1.0, 1j]), 1.0, grid_n=16)
        assert '"support_re"' in res.to_json()


class TestMmwaveSinglePath:
    def test_high_snr_reaches_four_bits(self):
        a_r = array_response(0.4, 0.3, 2, 2, math.pi)
        a_t = array_response(1.2, -0.5, 16, 16, math.pi)
        alpha = 0.8 * np.exp(0.7j)
        const, cap = mmwave_single_path_constellation(alpha, a_r, a_t, 1e8, grid_n=32)
        H = alpha * np.outer(a_r, a_t.conj())
        mi = mutual_information(transition_matrix(H, const), const.probs)
        assert mi == pytest.approx(cap, abs=1e-6)
        assert mi == pytest.approx(4.0, abs=0.1)
        assert const.average_power <= 1e8 * (1 + 1e-9)
