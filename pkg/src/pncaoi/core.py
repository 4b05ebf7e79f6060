"""Shared domain types and unit conventions.

Time is measured in slots, where one slot is one packet transmission
(uplink or downlink).  Age values are also in slots; multiplying by a coded
block length converts them to channel uses.  Instantaneous age grows with
slope one between successful updates, so an age trajectory is fully
described by its reset breakpoints.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

_MASK64 = (1 << 64) - 1


class PncaoiError(Exception):
    """Base class for all domain errors raised by this package."""


class OutOfRangeError(PncaoiError, ValueError):
    """A probability or parameter fell outside its admissible interval."""


class DegenerateReliabilityError(PncaoiError, ValueError):
    """alpha or beta is zero: expected update time diverges."""


class EmptySeriesError(PncaoiError, ValueError):
    """An age trajectory with no breakpoints cannot be averaged."""


class UnsupportedProtocolError(PncaoiError, ValueError):
    """The requested protocol is not supported by this operation."""


class ProtocolKind(Enum):
    """Packet-handling protocol of the two-way relay.

    OLTD drops packets on any loss, RPT retransmits on any loss, ULTD drops
    on uplink loss and retransmits on downlink loss, DLTD does the reverse.
    DLTD is supported by the simulator only; there is no closed form for it.
    """

    OLTD = "oltd"
    RPT = "rpt"
    ULTD = "ultd"
    DLTD = "dltd"

    @classmethod
    def parse(cls, name: str) -> "ProtocolKind":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise UnsupportedProtocolError(
                f"unknown protocol {name!r}; expected one of "
                f"{', '.join(k.value for k in cls)}"
            ) from None


#: Protocols with closed-form average-age expressions.
ANALYTIC_KINDS = (ProtocolKind.OLTD, ProtocolKind.RPT, ProtocolKind.ULTD)


@dataclass(frozen=True)
class Reliability:
    """Per-attempt decode success probabilities.

    alpha: probability that the relay decodes the superimposed uplink
        signals into an XOR packet.
    beta: probability that one end user decodes a downlink broadcast.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise OutOfRangeError(f"{name}={v!r} is not a probability in [0, 1]")

    def require_positive(self) -> "Reliability":
        """Raise unless both probabilities are strictly positive."""
        if self.alpha <= 0.0:
            raise DegenerateReliabilityError("alpha = 0: relay never decodes")
        if self.beta <= 0.0:
            raise DegenerateReliabilityError("beta = 0: users never decode")
        return self


def make_reliability(alpha: float, beta: float) -> Reliability:
    """Validate and build a (alpha, beta) pair."""
    return Reliability(float(alpha), float(beta))


@dataclass(frozen=True)
class AoiSeries:
    """Sawtooth age trajectory of one user, stored as reset breakpoints.

    Each breakpoint is (time in slots, age immediately after the reset).
    Between breakpoints the age grows with slope exactly one, so the full
    trajectory is implied.  Reset ages are never below two slots: an update
    needs at least one uplink and one downlink transmission.
    """

    user: str
    breakpoints: tuple

    def __post_init__(self):
        if self.user not in ("A", "B"):
            raise OutOfRangeError(f"user must be 'A' or 'B', got {self.user!r}")
        prev_t = -np.inf
        for t, v in self.breakpoints:
            if t < 0.0:
                raise OutOfRangeError(f"breakpoint time {t} is negative")
            if t <= prev_t:
                raise OutOfRangeError("breakpoint times must be strictly increasing")
            if v < 2.0:
                raise OutOfRangeError(f"reset age {v} below the two-hop minimum of 2")
            prev_t = t


def average_from_series(series: AoiSeries, horizon: float) -> float:
    """Time-averaged age of a sawtooth trajectory, by exact trapezoids.

    Integrates the piecewise-linear slope-one trajectory from the first
    breakpoint to `horizon` and divides by the covered span.  When the
    series starts at time zero this is exactly (area / horizon).
    """
    if not series.breakpoints:
        raise EmptySeriesError(f"series for user {series.user} has no breakpoints")
    t0 = series.breakpoints[0][0]
    if horizon <= t0:
        raise OutOfRangeError(f"horizon {horizon} does not extend past first reset {t0}")
    if series.breakpoints[-1][0] > horizon:
        raise OutOfRangeError("series extends beyond the averaging horizon")
    area = 0.0
    for (t, v), (t_next, _) in zip(series.breakpoints, series.breakpoints[1:]):
        dt = t_next - t
        area += v * dt + 0.5 * dt * dt
    t_last, v_last = series.breakpoints[-1]
    dt = horizon - t_last
    area += v_last * dt + 0.5 * dt * dt
    return area / (horizon - t0)


@dataclass(frozen=True)
class AoiMetrics:
    """Summary metrics of one protocol run.

    avg_aoi_slots holds the per-user (A, B) time-averaged age.  Throughput
    counts delivered packets of both directions per slot; delay is the mean
    slots from a delivered packet's generation to its reception; reception
    rate is delivered packets over generated packets.
    """

    avg_aoi_slots: tuple
    throughput_pkts_per_slot: float
    mean_packet_delay_slots: float
    packet_reception_rate: float
    block_length: int | None = None

    @property
    def avg_aoi_mean(self) -> float:
        a, b = self.avg_aoi_slots
        return 0.5 * (a + b)

    @property
    def avg_aoi_channel_uses(self) -> tuple | None:
        """Per-user average age in channel uses (slots times block length)."""
        if self.block_length is None:
            return None
        a, b = self.avg_aoi_slots
        return (a * self.block_length, b * self.block_length)


def _mix64(z: int) -> int:
    """splitmix64 finalizer; the fixed stream-derivation hash."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RandomSource:
    """Deterministic, splittable random source.

    Draws come from numpy's counter-based Philox4x64 generator keyed by
    (seed, stream), which is reproducible across platforms and gives
    statistically independent sequences for distinct keys.  Substreams are
    derived by splitmix64-mixing coordinate indices into the stream id, so
    a sweep cell's stream depends only on its coordinates, never on
    execution order.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise OutOfRangeError("seed must fit in 64 unsigned bits")
        if not 0 <= self.stream <= _MASK64:
            raise OutOfRangeError("stream must fit in 64 unsigned bits")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))

    def substream(self, *indices: int) -> "RandomSource":
        s = self.stream
        for ix in indices:
            s = _mix64(s ^ _mix64(ix & _MASK64))
        return RandomSource(self.seed, s)
