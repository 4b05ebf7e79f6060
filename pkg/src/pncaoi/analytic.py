"""Closed-form average age and side metrics for OLTD, RPT and ULTD.

All formulas are renewal-reward expressions over one protocol round.  The
downlink completion time of the retransmitting protocols is the maximum of
two independent geometric variables; its moments are evaluated through
exact geometric-series identities rather than truncated sums.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (
    ANALYTIC_KINDS,
    DegenerateReliabilityError,
    ProtocolKind,
    Reliability,
    UnsupportedProtocolError,
)

__all__ = [
    "FirstPassageMoments",
    "DownlinkMoments",
    "SideMetrics",
    "oltd_update_time_moments",
    "first_passage_moments",
    "avg_aoi_oltd",
    "downlink_moments",
    "uplink_moments",
    "avg_aoi_rpt",
    "avg_aoi_ultd",
    "avg_aoi",
    "side_metrics",
]


@dataclass(frozen=True)
class FirstPassageMoments:
    """First and second moments of the first passage to a delivered update.

    tau_us / lambda_us: moments of the slots from an uplink start to the
    next successful reception; tau_ds / lambda_ds: the same starting from
    a downlink slot.
    """

    tau_us: float
    tau_ds: float
    lambda_us: float
    lambda_ds: float


@dataclass(frozen=True)
class DownlinkMoments:
    """Moments of the ARQ downlink phase.

    e_td / e_td_sq: first and second moments of the slots until both users
    have decoded the broadcast; e_td_single: expected slots until one
    designated user decodes (a plain geometric mean, 1/beta).
    """

    e_td: float
    e_td_sq: float
    e_td_single: float


class SideMetrics(NamedTuple):
    throughput_pkts_per_slot: float
    mean_packet_delay_slots: float
    packet_reception_rate: float


def oltd_update_time_moments(r: Reliability) -> tuple:
    """Moments (E, E of square) of the inter-update time under OLTD.

    Derived from the three-state transmission chain (uplink, downlink,
    delivered): an update needs a geometric number of single-broadcast
    rounds, each costing a geometric number of uplink slots plus one.
    """
    r.require_positive()
    a, b = r.alpha, r.beta
    e1 = (1.0 + a) / (a * b)
    e2 = (2.0 + 4.0 * a + 2.0 * a * a - 3.0 * a * b - a * a * b) / (a * a * b * b)
    return e1, e2


def first_passage_moments(r: Reliability) -> FirstPassageMoments:
    """First-passage moments to the delivered state, by direct linear solve.

    Solves the one-step conditioning relations of the transmission chain as
    two 2x2 linear systems (same matrix, different right-hand sides).  This
    is an independent route to the same quantities as
    `oltd_update_time_moments`, kept separate on purpose so the two can be
    cross-checked.
    """
    r.require_positive()
    a, b = r.alpha, r.beta
    # Unknowns x = (tau_us, tau_ds):  tau_us = 1 + (1-a) tau_us + a tau_ds
    #                                 tau_ds = 1 + (1-b) tau_us
    m = np.array([[a, -a], [-(1.0 - b), 1.0]])
    tau_us, tau_ds = np.linalg.solve(m, np.ones(2))
    # Same matrix for the second moments, with first-moment forcing terms.
    rhs = np.array(
        [
            1.0 + 2.0 * ((1.0 - a) * tau_us + a * tau_ds),
            1.0 + 2.0 * (1.0 - b) * tau_us,
        ]
    )
    lambda_us, lambda_ds = np.linalg.solve(m, rhs)
    return FirstPassageMoments(tau_us, tau_ds, lambda_us, lambda_ds)


def avg_aoi_oltd(r: Reliability) -> float:
    """Average age under OLTD, in slots.

    Every delivered update resets the age to exactly two slots, so the
    average is 2 plus half the ratio of inter-update second to first
    moments.  Equals 3 when both links are perfect.
    """
    e1, e2 = oltd_update_time_moments(r)
    return 2.0 + e2 / (2.0 * e1)


def uplink_moments(alpha: float) -> tuple:
    """Moments (E, E of square) of the geometric uplink phase length."""
    if alpha <= 0.0:
        raise DegenerateReliabilityError("alpha = 0: uplink never completes")
    return 1.0 / alpha, (2.0 - alpha) / (alpha * alpha)


def downlink_moments(beta: float) -> DownlinkMoments:
    """Moments of the both-users downlink completion time.

    The completion time is max of two independent geometric(beta) variables.
    Its tail sums collapse to geometric series in q = 1 - beta and q**2:
    sum over t of x**(t-1) is 1/(1-x), and of (2t-1) x**(t-1) is
    2/(1-x)**2 - 1/(1-x).  beta = 1 is an exact separate branch.
    """
    if beta <= 0.0:
        raise DegenerateReliabilityError("beta = 0: downlink never completes")
    if beta >= 1.0:
        return DownlinkMoments(1.0, 1.0, 1.0)
    q = 1.0 - beta
    q2 = q * q
    e_td = 2.0 / (1.0 - q) - 1.0 / (1.0 - q2)
    e_td_sq = 2.0 * (2.0 / (1.0 - q) ** 2 - 1.0 / (1.0 - q)) - (
        2.0 / (1.0 - q2) ** 2 - 1.0 / (1.0 - q2)
    )
    return DownlinkMoments(e_td, e_td_sq, 1.0 / beta)


def _round_components(r: Reliability) -> tuple:
    r.require_positive()
    e_tu, e_tu_sq = uplink_moments(r.alpha)
    d = downlink_moments(r.beta)
    return e_tu, e_tu_sq, d.e_td, d.e_td_sq, d.e_td_single


def avg_aoi_rpt(r: Reliability) -> float:
    """Average age under RPT, in slots.

    Renewal-reward over one round of expected length E[Tu] + E[Td], with the
    age at a round start equal to the previous round's duration.
    """
    e_tu, e_tu_sq, e_td, e_td_sq, e_tdj = _round_components(r)
    num = (
        e_tu * e_tu
        + e_tu * e_tdj
        + 2.0 * e_tu * e_td
        + e_tdj * e_td
        + 0.5 * e_tu_sq
        + 0.5 * e_td_sq
    )
    return num / (e_tu + e_td)


def avg_aoi_ultd(r: Reliability) -> float:
    """Average age under ULTD, in slots.

    Same renewal structure as RPT with the age at a round start reduced to
    1 + Td' (the delivered packet is generated on the last uplink attempt).

    Note: this closed form keeps the full uplink duration in the sawtooth
    base after the in-round reset, so it is an upper bound on the slot
    process, which regenerates packets on every uplink attempt and resets
    to 1 + (own downlink completion).  The two agree as alpha approaches 1
    and drift a few percent apart at small alpha; the simulator follows the
    slot process.
    """
    e_tu, e_tu_sq, e_td, e_td_sq, e_tdj = _round_components(r)
    num = (
        e_tu
        + e_tdj
        + 2.0 * e_tu * e_td
        + e_tdj * e_td
        + 0.5 * e_tu_sq
        + 0.5 * e_td_sq
    )
    return num / (e_tu + e_td)


_AOI_FUNCS = {
    ProtocolKind.OLTD: avg_aoi_oltd,
    ProtocolKind.RPT: avg_aoi_rpt,
    ProtocolKind.ULTD: avg_aoi_ultd,
}


def avg_aoi(kind: ProtocolKind, r: Reliability) -> float:
    """Average age of `kind` at reliability `r`; DLTD has no closed form."""
    try:
        return _AOI_FUNCS[kind](r)
    except KeyError:
        raise UnsupportedProtocolError(
            f"no closed-form average age for {kind.value}"
        ) from None


def side_metrics(kind: ProtocolKind, r: Reliability) -> SideMetrics:
    """Throughput (pkts/slot, both directions), mean delay and reception rate.

    RPT and ULTD share the round structure, hence the throughput
    2/(E[Tu] + E[Td]).  OLTD delivers, per user, one packet per renewal of
    expected length (1+alpha)/(alpha beta) and generates one packet pair per
    round of expected length 1+alpha, giving throughput 2 alpha beta/(1+alpha)
    and reception rate alpha beta.  Delays count only delivered packets:
    always 2 for OLTD, a full round for RPT, one uplink slot plus the
    designated user's downlink completion for ULTD.
    """
    if kind not in ANALYTIC_KINDS:
        raise UnsupportedProtocolError(f"no analytic side metrics for {kind.value}")
    r.require_positive()
    a, b = r.alpha, r.beta
    if kind is ProtocolKind.OLTD:
        return SideMetrics(2.0 * a * b / (1.0 + a), 2.0, a * b)
    e_tu, _, e_td, _, e_tdj = _round_components(r)
    throughput = 2.0 / (e_tu + e_td)
    if kind is ProtocolKind.RPT:
        return SideMetrics(throughput, e_tu + e_tdj, 1.0)
    return SideMetrics(throughput, 1.0 + e_tdj, a)
