import numpy as np
import pytest

import oracles
from bdris.errors import NumericalFailureError
from bdris.precoding import (bisect_power_multiplier, build_surrogates,
                             pricing_vector, solve_precoder,
                             subproblem_objective, surrogate_coefficients)
from bdris.rates import LN2, snapshot

from conftest import complex_normal, make_network

TAU = 0.8


class TestPricingVector:
    def test_single_cell_has_no_pricing(self, rng):
        channels, iterate, noise = make_network(rng, num_bs=1, users_per_bs=(1,))
        np.testing.assert_array_equal(
            pricing_vector(0, iterate, channels, noise), 0)

    def test_zero_cross_channels_give_zero(self, small_network):
        channels, iterate, noise = small_network
        # kill every channel from BS 0 toward the other cell's user
        channels.direct[0, 1] = 0
        channels.ris_ue[0, 1] = 0
        np.testing.assert_allclose(pricing_vector(0, iterate, channels, noise),
                                   0, atol=1e-30)

    def test_two_cell_scalar_hand_expansion(self, rng):
        channels, iterate, noise = make_network(
            rng, num_bs=2, num_antennas=1, num_elements=1, num_subcarriers=1)
        snap = snapshot(iterate, channels, noise)
        # victim is user 1; its composite channel from BS 0 is the scalar f
        f = np.conj(snap.rows[0, 1, 0, 0])
        sig = abs(snap.rows[1, 1, 0, 0] * iterate.precoders[1, 0, 0]) ** 2
        interf = noise + abs(f.conjugate() * iterate.precoders[0, 0, 0]) ** 2
        snr = sig / interf
        expected = (-snr / LN2) / ((1 + snr) * interf) \
            * f * np.conj(f) * iterate.precoders[0, 0, 0]
        got = pricing_vector(0, iterate, channels, noise)
        np.testing.assert_allclose(got[0, 0], expected, rtol=1e-12)

    def test_matches_finite_differences(self, multiuser_network):
        channels, iterate, noise = multiuser_network
        for user in range(channels.num_users):
            q = channels.bs_of_user[user]
            fd = oracles.fd_precoder_gradient(
                lambda it: oracles.cell_rates(it, channels, noise, q)[1],
                iterate, user)
            got = pricing_vector(user, iterate, channels, noise)
            assert np.linalg.norm(got - fd) <= 1e-6 * np.linalg.norm(fd)


class TestSurrogate:
    def test_zero_anchor_gives_zero_coefficients(self, small_network):
        channels, iterate, noise = small_network
        iterate.precoders[0] = 0
        a, b = surrogate_coefficients(0, 0, iterate, channels, noise)
        assert a == 0
        np.testing.assert_array_equal(b, 0)

    def test_positive_weight_when_signal_present(self, small_network):
        channels, iterate, noise = small_network
        a, _ = surrogate_coefficients(0, 0, iterate, channels, noise)
        assert a > 0

    def test_lower_bound_tight_with_first_order_match(self, rng):
        channels, iterate, noise = make_network(rng)
        snap = snapshot(iterate, channels, noise)
        for q in range(channels.num_bs):
            for s in build_surrogates(q, iterate, channels, noise, snap):
                exact_anchor = np.log1p(snap.snr[s.user]) / LN2
                np.testing.assert_allclose(s.log_term_value(s.anchor),
                                           exact_anchor, atol=1e-9)
                for _ in range(100):
                    w = complex_normal(rng, *s.anchor.shape) * 0.7
                    sig = np.abs(np.einsum("ki,ki->k", np.conj(s.own_channel), w)) ** 2
                    exact = np.log1p(sig / s.mui_anchor) / LN2
                    assert np.all(s.log_term_value(w) <= exact + 1e-9)
                # first-order match at the anchor via central differences
                h = 1e-6
                for k in (0, s.anchor.shape[0] - 1):
                    for n in range(s.anchor.shape[1]):
                        for part in (1.0, 1j):
                            up, down = s.anchor.copy(), s.anchor.copy()
                            up[k, n] += h * part
                            down[k, n] -= h * part
                            sig_u = np.abs(np.conj(s.own_channel[k]) @ up[k]) ** 2
                            sig_d = np.abs(np.conj(s.own_channel[k]) @ down[k]) ** 2
                            d_exact = (np.log1p(sig_u / s.mui_anchor[k])
                                       - np.log1p(sig_d / s.mui_anchor[k])) / (LN2 * 2 * h)
                            d_sur = (s.log_term_value(up)[k]
                                     - s.log_term_value(down)[k]) / (2 * h)
                            assert d_sur == pytest.approx(d_exact, rel=1e-4, abs=1e-9)


class TestSolvePrecoder:
    def test_zero_quadratic_reduces_to_identity_solve(self, small_network):
        channels, iterate, noise = small_network
        s = build_surrogates(0, iterate, channels, noise)[0]
        s.quad_weight[:] = 0
        lam = 0.7
        got = solve_precoder(s, TAU, lam)
        np.testing.assert_allclose(got, s.rhs(TAU) / (TAU / 2 + lam), rtol=1e-12)

    def test_matches_dense_solve(self, multiuser_network):
        channels, iterate, noise = multiuser_network
        for q in range(channels.num_bs):
            for s in build_surrogates(q, iterate, channels, noise):
                for lam in (0.0, 0.5, 3.0):
                    fast = solve_precoder(s, TAU, lam)
                    rhs = s.rhs(TAU)
                    for k in range(fast.shape[0]):
                        f = s.own_channel[k]
                        mat = s.quad_weight[k] * np.outer(f, np.conj(f)) \
                            + (TAU / 2 + lam) * np.eye(len(f))
                        dense = np.linalg.solve(mat, rhs[k])
                        assert np.linalg.norm(fast[k] - dense) <= \
                            1e-10 * max(np.linalg.norm(dense), 1e-30)

    def test_norm_decreases_with_multiplier(self, small_network):
        channels, iterate, noise = small_network
        s = build_surrogates(0, iterate, channels, noise)[0]
        lams = np.linspace(0.0, 5.0, 30)
        norms = [np.linalg.norm(solve_precoder(s, TAU, lam)) for lam in lams]
        assert np.all(np.diff(norms) <= 1e-12)


class TestBisection:
    def test_loose_budget_gives_zero_multiplier(self, small_network):
        channels, iterate, noise = small_network
        surr = build_surrogates(0, iterate, channels, noise)
        lam, ws = bisect_power_multiplier(surr, TAU, 1e9)
        assert lam == 0.0

    def test_tight_budget_met_exactly(self, multiuser_network):
        channels, iterate, noise = multiuser_network
        for q in range(channels.num_bs):
            surr = build_surrogates(q, iterate, channels, noise)
            budget = 1e-3
            lam, ws = bisect_power_multiplier(surr, TAU, budget)
            power = float(np.sum(np.abs(ws) ** 2))
            assert power <= budget
            assert budget - power <= 1e-8 * budget
            assert lam > 0

    def test_stationarity_residual(self, small_network):
        channels, iterate, noise = small_network
        surr = build_surrogates(0, iterate, channels, noise)
        lam, ws = bisect_power_multiplier(surr, TAU, 1e-3)
        for s, w in zip(surr, ws):
            rhs = s.rhs(TAU)
            for k in range(w.shape[0]):
                f = s.own_channel[k]
                mat = s.quad_weight[k] * np.outer(f, np.conj(f)) \
                    + (TAU / 2 + lam) * np.eye(len(f))
                residual = np.linalg.norm(mat @ w[k] - rhs[k])
                assert residual <= 1e-8 * max(np.linalg.norm(rhs[k]), 1e-30)

    def test_bad_budget_rejected(self, small_network):
        channels, iterate, noise = small_network
        surr = build_surrogates(0, iterate, channels, noise)
        with pytest.raises(ValueError):
            bisect_power_multiplier(surr, TAU, 0.0)

    def test_unbracketable_budget_raises(self, small_network):
        channels, iterate, noise = small_network
        surr = build_surrogates(0, iterate, channels, noise)
        with pytest.raises(NumericalFailureError):
            bisect_power_multiplier(surr, TAU, 1e-300, max_doublings=5)


class TestSubproblemImprovement:
    def test_candidate_improves_surrogate_objective(self, rng):
        for trial in range(20):
            channels, iterate, noise = make_network(
                rng, users_per_bs=(2, 1), precoder_scale=0.3)
            for q in range(channels.num_bs):
                surr = build_surrogates(q, iterate, channels, noise)
                own = channels.users_of_bs(q)
                budget = float(np.sum(np.abs(iterate.precoders[own]) ** 2))
                _, ws = bisect_power_multiplier(surr, TAU, budget)
                before = subproblem_objective(
                    surr, [s.anchor for s in surr], TAU)
                after = subproblem_objective(surr, ws, TAU)
                assert after >= before - 1e-10
