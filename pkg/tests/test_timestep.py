"""Multi-term coefficient algebra and dual stepping-form tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfdiff.cf_core import DomainError, FractionalOrder, b_coeff, fast_init, fast_step
from cfdiff.timestep import (
    MultiTermOperator,
    StateSyncError,
    eta,
    history_weights,
    multiterm_fast_combination,
    step_coefficients,
    zeta,
)

CASE2 = MultiTermOperator.from_lists((1.0, 2.0, 3.0), (0.3, 0.5, 0.7))
CASE4 = MultiTermOperator.from_lists((1.0, 2.0, 3.0), (0.6, 0.7, 0.8))


class TestMultiTermOperator:
    def test_sorted_by_order(self):
        mt = MultiTermOperator.from_lists((3.0, 1.0, 2.0), (0.7, 0.3, 0.5))
        np.testing.assert_allclose(mt.alphas, [0.3, 0.5, 0.7])
        np.testing.assert_allclose(mt.weights, [1.0, 2.0, 3.0])

    def test_validation(self):
        with pytest.raises(DomainError):
            MultiTermOperator(())
        with pytest.raises(DomainError):
            MultiTermOperator.from_lists((-1.0,), (0.5,))
        with pytest.raises(DomainError):
            MultiTermOperator.from_lists((0.0, 0.0), (0.3, 0.5))
        with pytest.raises(DomainError):
            MultiTermOperator.from_lists((1.0, 2.0), (0.5,))

    def test_zero_weight_terms_allowed(self):
        mt = MultiTermOperator.from_lists((0.0, 1.0), (0.3, 0.5))
        assert mt.count == 2


class TestEta:
    def test_single_term_reduction(self):
        order = FractionalOrder(0.4)
        mt = MultiTermOperator(((1.0, order),))
        dt = 1.0 / 64
        for j, k in ((1, 1), (2, 5), (5, 5)):
            assert eta(mt, j, k, dt) == pytest.approx(
                b_coeff(order, j, k, dt) / (order.alpha * dt), rel=1e-14
            )

    def test_diagonal_k_independent(self):
        dt = 1.0 / 160
        vals = [eta(CASE2, k, k, dt) for k in range(1, 30)]
        assert max(vals) == pytest.approx(min(vals), rel=1e-15)

    def test_brute_force_cross_check(self):
        dt = 1.0 / 160
        j, k = 3, 17
        expected = math.fsum(
            d / (o.alpha * dt)
            * (math.exp(-o.beta * (k - j) * dt) - math.exp(-o.beta * (k - j + 1) * dt))
            for d, o in CASE2.terms
        )
        assert eta(CASE2, j, k, dt) == pytest.approx(expected, rel=1e-13)

    def test_domain_error(self):
        with pytest.raises(DomainError):
            eta(CASE2, 0, 5, 0.1)
        with pytest.raises(DomainError):
            eta(CASE2, 6, 5, 0.1)


class TestZeta:
    def test_diagonal_is_one(self):
        assert zeta(CASE2, 7, 7, 1.0 / 160) == 1.0

    def test_single_term_collapse(self):
        order = FractionalOrder(0.35)
        mt = MultiTermOperator(((2.0, order),))
        dt = 0.05
        for j, k in ((1, 4), (3, 9), (9, 9)):
            assert zeta(mt, j, k, dt) == pytest.approx(
                math.exp(-order.beta * (k - j) * dt), rel=1e-13
            )

    def test_first_column_lower_bound(self):
        # 1/zeta(1,k) <= exp(alpha_n T / (1 - alpha_n)) for k dt <= T
        horizon = 1.0
        for mt in (CASE2, CASE4):
            alpha_n = mt.alphas[-1]
            cap = math.exp(alpha_n * horizon / (1.0 - alpha_n))
            nt = 100
            dt = horizon / nt
            for k in range(1, nt + 1):
                assert 1.0 / zeta(mt, 1, k, dt) <= cap * (1.0 + 1e-12)

    def test_range(self):
        dt = 1.0 / 64
        for k in range(1, 20):
            for j in range(1, k + 1):
                assert 0.0 < zeta(CASE2, j, k, dt) <= 1.0


class TestStepCoefficients:
    def test_kappa_limit_single_term(self):
        mt = MultiTermOperator.from_lists((1.0,), (0.5,))
        sc = step_coefficients(mt, 1e-8)
        assert sc.kappa == pytest.approx(0.5, rel=1e-6)

    def test_kappa_limit_multi_term(self):
        sc = step_coefficients(CASE2, 1e-8)
        limit = 1.0 / sum(d / (1.0 - a) for d, a in zip((1.0, 2.0, 3.0), (0.3, 0.5, 0.7)))
        assert sc.kappa == pytest.approx(limit, rel=1e-6)

    def test_equal_orders_merge(self):
        merged = MultiTermOperator.from_lists((6.0,), (0.5,))
        split = MultiTermOperator.from_lists((1.0, 2.0, 3.0), (0.5, 0.5, 0.5))
        dt = 1.0 / 160
        a, b = step_coefficients(merged, dt), step_coefficients(split, dt)
        assert a.eta_diag == pytest.approx(b.eta_diag, rel=1e-14)
        assert a.kappa == pytest.approx(b.kappa, rel=1e-14)

    def test_consistency_with_eta(self):
        dt = 1.0 / 320
        sc = step_coefficients(CASE4, dt)
        assert sc.eta_diag == pytest.approx(eta(CASE4, 5, 5, dt), rel=1e-13)
        assert sc.kappa * sc.eta_diag == pytest.approx(1.0, rel=1e-15)

    def test_rejects_bad_dt(self):
        with pytest.raises(DomainError):
            step_coefficients(CASE2, 0.0)


class TestMultitermFastCombination:
    def _states(self, mt, dt, h0, h1):
        return [fast_init(order, dt, h0, h1) for _, order in mt.terms]

    def test_zero_states(self):
        states = self._states(CASE2, 0.1, 1.0, 1.0)
        assert multiterm_fast_combination(states, CASE2, 0.5) == 0.0

    def test_single_term_reduction(self):
        order = FractionalOrder(0.5)
        mt = MultiTermOperator(((2.0, order),))
        state = fast_init(order, 0.1, 0.0, 1.0)
        value = multiterm_fast_combination([state], mt, 0.7)
        assert value == pytest.approx(0.7 * 2.0 * state.decay * state.current, rel=1e-15)

    def test_desynchronized_states_rejected(self):
        states = self._states(CASE2, 0.1, 0.0, 1.0)
        states[1] = fast_step(states[1], 2.0)
        with pytest.raises(StateSyncError):
            multiterm_fast_combination(states, CASE2, 0.5)

    def test_wrong_count_rejected(self):
        states = self._states(CASE2, 0.1, 0.0, 1.0)
        with pytest.raises(StateSyncError):
            multiterm_fast_combination(states[:2], CASE2, 0.5)


class TestHistoryWeights:
    def test_first_step(self):
        np.testing.assert_allclose(history_weights(CASE2, 1, 0.01), [1.0])

    @given(k=st.integers(1, 200))
    @settings(max_examples=60, deadline=None)
    def test_weights_sum_to_one(self, k):
        w = history_weights(CASE2, k, 1.0 / 200)
        assert math.fsum(w) == pytest.approx(1.0, rel=1e-12)

    def test_positivity_full_ladder(self):
        dt = 1.0 / 2560
        for k in range(1, 2561):
            assert np.all(history_weights(CASE2, k, dt) > 0.0)

    def test_matches_zeta_definition(self):
        dt = 1.0 / 64
        k = 12
        w = history_weights(CASE4, k, dt)
        assert w[0] == pytest.approx(zeta(CASE4, 1, k, dt), rel=1e-12)
        for j in range(2, k + 1):
            expected = zeta(CASE4, j, k, dt) - zeta(CASE4, j - 1, k, dt)
            assert w[j - 1] == pytest.approx(expected, rel=1e-10, abs=1e-16)

    def test_rejects_k_zero(self):
        with pytest.raises(DomainError):
            history_weights(CASE2, 0, 0.1)


class TestZetaMonotonicity:
    @pytest.mark.parametrize(
        "mt",
        [
            MultiTermOperator.from_lists((1.0,), (0.1,)),
            MultiTermOperator.from_lists((1.0,), (0.9,)),
            CASE2,
            CASE4,
        ],
    )
    def test_monotone_in_both_indices(self, mt):
        nt = 120
        dt = 1.0 / nt
        z = np.full((nt + 1, nt + 1), np.nan)
        for k in range(1, nt + 1):
            for j in range(1, k + 1):
                z[j, k] = zeta(mt, j, k, dt)
        for j in range(1, nt):
            col = z[j, j:nt + 1]
            assert np.all(np.diff(col) < 0.0)  # decreasing in k for fixed j
        for k in range(2, nt + 1):
            row = z[1:k + 1, k]
            assert np.all(np.diff(row) > 0.0)  # increasing in j for fixed k


class TestDualFormScalar:
    @given(
        seed=st.integers(0, 2**31),
        nt=st.integers(2, 64),
    )
    @settings(max_examples=25, deadline=None)
    def test_fast_and_history_marches_agree(self, seed, nt):
        # scalar analogue of the implicit step with no spatial operator:
        # eta_kk u^k = history + f, stepped in both formulations
        rng = np.random.default_rng(seed)
        alphas = np.sort(rng.uniform(0.1, 0.9, 3))
        weights = rng.uniform(0.1, 3.0, 3)
        mt = MultiTermOperator.from_lists(weights, alphas)
        dt = 1.0 / nt
        sc = step_coefficients(mt, dt)
        forcing = rng.standard_normal(nt + 1)
        u0 = rng.standard_normal()

        # recurrence form
        u_fast = [u0]
        states = None
        for k in range(1, nt + 1):
            if k == 1:
                rhs = u_fast[0] + sc.kappa * forcing[k]
            else:
                mem = multiterm_fast_combination(states, mt, sc.kappa)
                rhs = u_fast[-1] - mem + sc.kappa * forcing[k]
            u_new = rhs / (1.0 + sc.kappa)
            if k == 1:
                states = [fast_init(o, dt, u_fast[0], u_new) for _, o in mt.terms]
            else:
                states = [fast_step(s, u_new) for s in states]
            u_fast.append(u_new)

        # normalized-history form
        u_hist = [u0]
        for k in range(1, nt + 1):
            if k == 1:
                combo = u_hist[0]
            else:
                w = history_weights(mt, k, dt)
                combo = float(np.dot(w, u_hist[:k]))
            u_hist.append((combo + sc.kappa * forcing[k]) / (1.0 + sc.kappa))

        for a, b in zip(u_fast, u_hist):
            assert abs(a - b) <= 1e-12 * (1.0 + abs(b))
