"""Closed-form tests against independent Monte Carlo and series oracles.

The Monte Carlo oracles are renewal-structured (vectorized geometric draws
per protocol round), deliberately unlike both the closed forms and the
slot-level simulator.
"""
import numpy as np
import pytest
import sympy

from pncaoi.analytic import (
    avg_aoi,
    avg_aoi_oltd,
    avg_aoi_rpt,
    avg_aoi_ultd,
    downlink_moments,
    first_passage_moments,
    oltd_update_time_moments,
    side_metrics,
    uplink_moments,
)
from pncaoi.core import (
    DegenerateReliabilityError,
    ProtocolKind,
    Reliability,
    UnsupportedProtocolError,
)

GRID = [0.3, 0.5, 0.7, 0.9]


def _mc_update_time_samples(alpha, beta, n, rng):
    """Inter-update slot counts of the drop-everything protocol.

    An update takes N ~ geometric(beta) single-broadcast rounds, each
    costing a geometric(alpha) number of uplink slots plus one downlink
    slot: total = uplink attempts + N.
    """
    n_rounds = rng.geometric(beta, n)
    uplink_attempts = rng.negative_binomial(n_rounds, alpha) + n_rounds
    return (uplink_attempts + n_rounds).astype(np.float64)


def _mc_round_aoi(reset_from, alpha, beta, n, rng):
    """Average age by renewal Monte Carlo for the round-structured protocols.

    Per round draws (uplink length, both users' downlink completion) and
    accumulates one user's sawtooth trapezoids between consecutive resets.
    `reset_from`: "round_start" pins packet generation at the round start
    (retransmitting uplink), "last_uplink" at the final uplink slot
    (dropping uplink).
    """
    tu = rng.geometric(alpha, n).astype(np.float64)
    ga = rng.geometric(beta, n).astype(np.float64)
    gb = rng.geometric(beta, n).astype(np.float64)
    td = np.maximum(ga, gb)
    reset_val = (tu + ga) if reset_from == "round_start" else (1.0 + ga)
    dt = (td[:-1] - ga[:-1]) + tu[1:] + ga[1:]
    r = reset_val[:-1]
    return float(np.sum(r * dt + 0.5 * dt * dt) / np.sum(dt))


class TestOltdMoments:
    def test_perfect_links(self):
        assert oltd_update_time_moments(Reliability(1, 1)) == (2.0, 4.0)

    @pytest.mark.parametrize("alpha,beta", [(0.5, 0.5), (0.9, 0.1)])
    def test_against_markov_monte_carlo(self, alpha, beta):
        rng = np.random.default_rng(7)
        omega = _mc_update_time_samples(alpha, beta, 10_000_000, rng)
        e1, e2 = oltd_update_time_moments(Reliability(alpha, beta))
        assert e1 == pytest.approx(float(np.mean(omega)), rel=5e-3)
        assert e2 == pytest.approx(float(np.mean(omega**2)), rel=5e-3)

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateReliabilityError):
            oltd_update_time_moments(Reliability(0.0, 0.5))
        with pytest.raises(DegenerateReliabilityError):
            oltd_update_time_moments(Reliability(0.5, 0.0))


class TestFirstPassage:
    def test_perfect_links(self):
        fp = first_passage_moments(Reliability(1, 1))
        assert fp.tau_ds == pytest.approx(1.0, abs=1e-12)
        assert fp.tau_us == pytest.approx(2.0, abs=1e-12)

    def test_half_alpha_perfect_beta(self):
        fp = first_passage_moments(Reliability(0.5, 1.0))
        assert fp.tau_us == pytest.approx(3.0, abs=1e-12)

    def test_hand_solved_system(self):
        # alpha = beta = 1/2: tau_us = 6 and tau_ds = 1 + tau_us/2 = 4.
        fp = first_passage_moments(Reliability(0.5, 0.5))
        assert fp.tau_us == pytest.approx(6.0, abs=1e-12)
        assert fp.tau_ds == pytest.approx(1.0 + 0.5 * fp.tau_us, abs=1e-12)

    def test_two_derivations_agree(self):
        # Linear solve vs closed form: same quantities by different routes.
        for a in GRID:
            for b in GRID:
                e1, e2 = oltd_update_time_moments(Reliability(a, b))
                fp = first_passage_moments(Reliability(a, b))
                assert fp.tau_us == pytest.approx(e1, rel=1e-12)
                assert fp.lambda_us == pytest.approx(e2, rel=1e-12)
                assert fp.lambda_us >= fp.tau_us**2
                assert fp.lambda_ds >= fp.tau_ds**2


class TestDownlinkMoments:
    def test_perfect_beta(self):
        d = downlink_moments(1.0)
        assert (d.e_td, d.e_td_sq, d.e_td_single) == (1.0, 1.0, 1.0)

    def test_half_beta_exact(self):
        d = downlink_moments(0.5)
        assert d.e_td == pytest.approx(8.0 / 3.0, abs=1e-14)
        assert d.e_td_single == 2.0

    def test_closed_form_matches_truncated_sum(self):
        # Direct tail sums, terms until < 1e-15, vs geometric identities.
        for beta in np.arange(0.05, 1.0, 0.05):
            q = 1.0 - beta
            e1 = e2 = 0.0
            t = 1
            while True:
                tail = 1.0 - (1.0 - q ** (t - 1)) ** 2
                if tail < 1e-15:
                    break
                e1 += tail
                e2 += (2 * t - 1) * tail
                t += 1
            d = downlink_moments(float(beta))
            assert d.e_td == pytest.approx(e1, rel=1e-12)
            assert d.e_td_sq == pytest.approx(e2, rel=1e-12)

    def test_moment_inequalities(self):
        for beta in (0.1, 0.4, 0.8, 1.0):
            d = downlink_moments(beta)
            assert d.e_td >= d.e_td_single
            assert d.e_td_sq >= d.e_td**2

    def test_degenerate(self):
        with pytest.raises(DegenerateReliabilityError):
            downlink_moments(0.0)


class TestAverageAoiFormulas:
    def test_perfect_links_fixed_point(self):
        for f in (avg_aoi_oltd, avg_aoi_rpt, avg_aoi_ultd):
            assert f(Reliability(1, 1)) == pytest.approx(3.0, abs=1e-12)

    @pytest.mark.parametrize("alpha,beta", [(0.5, 0.5), (0.9, 0.9), (0.3, 0.7)])
    def test_oltd_against_renewal_monte_carlo(self, alpha, beta):
        rng = np.random.default_rng(11)
        omega = _mc_update_time_samples(alpha, beta, 4_000_000, rng)
        mc = float(np.mean(2.0 * omega + 0.5 * omega**2) / np.mean(omega))
        assert avg_aoi_oltd(Reliability(alpha, beta)) == pytest.approx(mc, rel=1e-2)

    @pytest.mark.parametrize("alpha,beta", [(0.5, 0.5), (0.7, 0.3), (0.9, 0.9)])
    def test_rpt_against_renewal_monte_carlo(self, alpha, beta):
        rng = np.random.default_rng(13)
        mc = _mc_round_aoi("round_start", alpha, beta, 4_000_000, rng)
        assert avg_aoi_rpt(Reliability(alpha, beta)) == pytest.approx(mc, rel=1e-2)

    def test_ultd_closed_form_is_upper_bound_tight_at_high_alpha(self):
        # The ULTD closed form keeps the full uplink phase in the sawtooth
        # base after an in-round reset; the protocol itself resets to
        # 1 + (own downlink completion).  The form therefore sits above the
        # renewal process, meeting it as alpha -> 1.
        rng = np.random.default_rng(17)
        for alpha, beta in [(0.5, 0.5), (0.3, 0.3), (0.9, 0.7)]:
            mc = _mc_round_aoi("last_uplink", alpha, beta, 4_000_000, rng)
            formula = avg_aoi_ultd(Reliability(alpha, beta))
            assert formula >= mc * (1.0 - 2e-3)
        mc = _mc_round_aoi("last_uplink", 0.95, 0.9, 4_000_000, rng)
        assert avg_aoi_ultd(Reliability(0.95, 0.9)) == pytest.approx(mc, rel=5e-3)

    def test_ultd_renewal_exact_expression(self):
        # Exact renewal value of the ULTD slot process, for cross-checks:
        # replace the closed form's 2 E[Tu] E[Td] term by
        # E[Tu] E[Td] + E[Tu] E[Tdj] + E[Td] - E[Tdj].
        rng = np.random.default_rng(19)
        for alpha, beta in [(0.3, 0.3), (0.5, 0.5), (0.7, 0.9)]:
            mc = _mc_round_aoi("last_uplink", alpha, beta, 4_000_000, rng)
            assert ultd_renewal_exact(alpha, beta) == pytest.approx(mc, rel=1e-2)

    def test_ultd_below_rpt_gap(self):
        # Numerator gap, scaled by 2 a^2 b, reduces to 2 (1-a)(a+b).
        for a in GRID:
            for b in GRID:
                rpt = avg_aoi_rpt(Reliability(a, b))
                ultd = avg_aoi_ultd(Reliability(a, b))
                assert ultd < rpt
                e_tu, _ = uplink_moments(a)
                d = downlink_moments(b)
                denom = e_tu + d.e_td
                gap = (rpt - ultd) * denom * 2.0 * a * a * b
                assert gap == pytest.approx(2.0 * (1.0 - a) * (a + b), abs=1e-9)
        assert avg_aoi_ultd(Reliability(1, 0.5)) == pytest.approx(
            avg_aoi_rpt(Reliability(1, 0.5)), abs=1e-12
        )

    def test_ultd_rpt_gap_symbolically(self):
        a, b = sympy.symbols("a b", positive=True)
        e_tu, e_tdj = 1 / a, 1 / b
        rpt_num = e_tu**2 + e_tu * e_tdj
        ultd_num = e_tu + e_tdj
        gap = sympy.simplify((rpt_num - ultd_num) * 2 * a**2 * b - 2 * (1 - a) * (a + b))
        assert gap == 0

    def test_floor_of_three(self):
        for a in np.arange(0.05, 1.0001, 0.05):
            for b in np.arange(0.05, 1.0001, 0.05):
                r = Reliability(round(float(a), 3), round(float(b), 3))
                for f in (avg_aoi_oltd, avg_aoi_rpt, avg_aoi_ultd):
                    v = f(r)
                    assert v >= 3.0 - 1e-12
                    if r.alpha < 1.0 or r.beta < 1.0:
                        assert v > 3.0

    def test_monotone_decreasing_in_both_links(self):
        grid = np.arange(0.05, 1.0001, 0.05)
        for f in (avg_aoi_oltd, avg_aoi_rpt, avg_aoi_ultd):
            vals = np.array([[f(Reliability(float(a), float(b))) for b in grid] for a in grid])
            assert np.all(np.diff(vals, axis=0) < 0), f"{f.__name__} not decreasing in alpha"
            assert np.all(np.diff(vals, axis=1) < 0), f"{f.__name__} not decreasing in beta"

    def test_dltd_unsupported(self):
        with pytest.raises(UnsupportedProtocolError):
            avg_aoi(ProtocolKind.DLTD, Reliability(0.5, 0.5))


def ultd_renewal_exact(alpha: float, beta: float) -> float:
    """Renewal-exact average age of the ULTD slot process (test oracle)."""
    e_tu, e_tu_sq = uplink_moments(alpha)
    d = downlink_moments(beta)
    num = (
        e_tu
        + d.e_td
        + e_tu * d.e_td
        + e_tu * d.e_td_single
        + d.e_td * d.e_td_single
        + 0.5 * e_tu_sq
        + 0.5 * d.e_td_sq
    )
    return num / (e_tu + d.e_td)


class TestSideMetrics:
    def test_perfect_rpt(self):
        m = side_metrics(ProtocolKind.RPT, Reliability(1, 1))
        assert m == (1.0, 2.0, 1.0)

    def test_oltd_delay_constant_two(self):
        for a, b in [(0.5, 0.5), (0.2, 0.9)]:
            assert side_metrics(ProtocolKind.OLTD, Reliability(a, b)).mean_packet_delay_slots == 2.0

    def test_rpt_ultd_same_throughput(self):
        for a in GRID:
            for b in GRID:
                r = Reliability(a, b)
                t_rpt = side_metrics(ProtocolKind.RPT, r).throughput_pkts_per_slot
                t_ultd = side_metrics(ProtocolKind.ULTD, r).throughput_pkts_per_slot
                assert t_rpt == pytest.approx(t_ultd, rel=1e-14)

    def test_reception_rate_ordering(self):
        for a in GRID:
            for b in GRID:
                r = Reliability(a, b)
                rr = [side_metrics(k, r).packet_reception_rate
                      for k in (ProtocolKind.OLTD, ProtocolKind.ULTD, ProtocolKind.RPT)]
                assert rr[0] <= rr[1] <= rr[2] == 1.0

    def test_dltd_unsupported(self):
        with pytest.raises(UnsupportedProtocolError):
            side_metrics(ProtocolKind.DLTD, Reliability(0.5, 0.5))

    def test_degenerate(self):
        with pytest.raises(DegenerateReliabilityError):
            side_metrics(ProtocolKind.RPT, Reliability(0.5, 0.0))
