import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import monte_carlo_prob, z_score

from onebit_mimo.closed_form import miso_capacity, mrt_constellation, siso_capacity, siso_constellation
from onebit_mimo.numerics import binary_entropy, q_func
from onebit_mimo.quantized_dmc import (
    Constellation,
    TransitionMatrix,
    all_patterns,
    conditional_entropy,
    index_pattern,
    mutual_information,
    pattern_index,
    quantize,
    rail_entropy,
    transition_matrix,
    transition_prob,
)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


class TestQuantize:
    def test_example(self):
        np.testing.assert_array_equal(quantize([1 + 1j, -1 - 1j]), [1, -1, 1, -1])

    def test_zero_maps_to_plus(self):
        np.testing.assert_array_equal(quantize(np.zeros(3)), np.ones(6))

    @given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
    def test_sign_oracle(self, ys):
        y = np.array(ys, dtype=complex)
        expected = [1 if v.real >= 0 else -1 for v in y] + [1 if v.imag >= 0 else -1 for v in y]
        np.testing.assert_array_equal(quantize(y), expected)


class TestPatternIndex:
    def test_little_endian(self):
        assert pattern_index([1, -1, -1]) == 1
        assert pattern_index([-1, 1, -1]) == 2
        assert pattern_index([1, 1, 1, 1]) == 15

    @given(st.integers(0, 2**10 - 1))
    def test_roundtrip(self, idx):
        assert pattern_index(index_pattern(idx, 10)) == idx

    def test_all_patterns_order(self):
        P = all_patterns(4)
        assert [pattern_index(p) for p in P] == list(range(16))


class TestTransitionProb:
    def test_zero_symbol(self):
        H = np.eye(2)
        for p in all_patterns(4):
            assert transition_prob(H, np.zeros(2), p) == pytest.approx(2.0**-4)

    def test_single_antenna_factors(self):
        t = 0.7
        assert transition_prob([[1.0]], [t], [1, 1]) == pytest.approx(q_func(-math.sqrt(2) * t) * 0.5)

    def test_pattern_length_checked(self):
        with pytest.raises(ValueError):
            transition_prob(np.eye(2), np.zeros(2), [1, 1])

    def test_monte_carlo(self):
        rng = np.random.default_rng(12)
        H = _cn(rng, (2, 2))
        x = _cn(rng, 2)
        pattern = quantize(H @ x)
        freq = monte_carlo_prob(H, x, pattern, 10**6, rng)
        assert abs(z_score(freq, transition_prob(H, x, pattern), 10**6)) <= 3


class TestTransitionMatrix:
    def test_zero_symbol_row_uniform(self):
        T = transition_matrix(np.eye(3), np.zeros((1, 3)))
        np.testing.assert_allclose(T.rows, np.full((1, 64), 2.0**-6))

    def test_noiseless_limit(self):
        x = 1e4 * np.exp(0.3j)
        T = transition_matrix([[1.0]], np.array([[x]]))
        assert T.rows.max() == pytest.approx(1.0, abs=1e-12)
        assert np.argmax(T.rows[0]) == pattern_index(quantize([x]))

    def test_matches_transition_prob(self):
        rng = np.random.default_rng(1)
        H = _cn(rng, (2, 3))
        symbols = _cn(rng, (5, 3))
        T = transition_matrix(H, symbols)
        for i, x in enumerate(symbols):
            for r, p in enumerate(all_patterns(4)):
                assert T.rows[i, r] == pytest.approx(transition_prob(H, x, p), rel=1e-10)

    @settings(max_examples=30)
    @given(st.integers(0, 2**32 - 1), st.floats(-30, 30))
    def test_rows_sum_to_one(self, seed, snr_db):
        rng = np.random.default_rng(seed)
        H = _cn(rng, (2, 2))
        symbols = math.sqrt(10 ** (snr_db / 10)) * _cn(rng, (4, 2))
        T = transition_matrix(H, symbols)
        np.testing.assert_allclose(T.rows.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(np.exp(T.log_rows).sum(axis=1), 1.0, atol=1e-9)

    def test_size_cap(self):
        with pytest.raises(ValueError):
            transition_matrix(np.eye(14), np.zeros((1, 14)))

    def test_csv_roundtrip(self):
        T = transition_matrix(np.eye(2), np.array([[1, 1j], [0, 0]]))
        back = TransitionMatrix.from_csv(T.to_csv())
        np.testing.assert_array_equal(back.rows, T.rows)


class TestConstellation:
    def test_power_checked(self):
        with pytest.raises(ValueError):
            Constellation.uniform([[2.0]], power_budget=1.0)

    def test_probs_checked(self):
        with pytest.raises(ValueError):
            Constellation([[1.0], [0.0]], [0.7, 0.7], 1.0)


class TestMutualInformation:
    def test_noiseless_permutation(self):
        T = np.eye(8)[[3, 1, 6, 0]]
        assert mutual_information(T, np.full(4, 0.25)) == pytest.approx(2.0, abs=1e-12)

    def test_useless_channel(self):
        T = np.tile([0.2, 0.3, 0.5], (4, 1))
        assert mutual_information(T, np.full(4, 0.25)) == pytest.approx(0.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mutual_information(np.eye(2), np.ones(3) / 3)

    @pytest.mark.parametrize("Pt", [0.01, 1.0, 10.0, 100.0])
    def test_siso_rotated_qpsk(self, Pt):
        const = siso_constellation(1.0, Pt)
        T = transition_matrix([[1.0]], const)
        expected = 2.0 * (1.0 - binary_entropy(q_func(math.sqrt(Pt))))
        assert mutual_information(T, const.probs) == pytest.approx(expected, abs=1e-9)
        assert siso_capacity(1.0, Pt) == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=40)
    @given(st.integers(0, 2**32 - 1), st.floats(-20, 30))
    def test_bounds_and_relabeling(self, seed, snr_db):
        rng = np.random.default_rng(seed)
        H = _cn(rng, (2, 2))
        symbols = math.sqrt(10 ** (snr_db / 10)) * _cn(rng, (6, 2))
        probs = rng.dirichlet(np.ones(6))
        T = transition_matrix(H, symbols)
        mi = mutual_information(T, probs)
        assert -1e-12 <= mi <= min(math.log2(6), 4) + 1e-12
        perm = rng.permutation(T.n_outputs)
        assert mutual_information(T.rows[:, perm], probs) == pytest.approx(mi, abs=1e-10)

    def test_miso_mrt_matches_closed_form(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            h = _cn(rng, 3)
            for Pt in (0.01, 0.1, 1.0, 3.0, 10.0):
                const = mrt_constellation(h, Pt)
                T = transition_matrix(h.conj()[None, :], const)
                assert mutual_information(T, const.probs) == pytest.approx(miso_capacity(h, Pt), abs=1e-9)

    def test_conditional_entropy_factorization(self):
        rng = np.random.default_rng(8)
        H = _cn(rng, (3, 2))
        symbols = 2.0 * _cn(rng, (5, 2))
        T = transition_matrix(H, symbols)
        probs = rng.dirichlet(np.ones(5))
        assert conditional_entropy(T, probs) == pytest.approx(probs @ rail_entropy(H, symbols), abs=1e-9)
