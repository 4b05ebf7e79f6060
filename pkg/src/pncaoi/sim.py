"""Slot-level protocol simulator: Bernoulli links or recorded traces.

One slot is one transmission.  An uplink slot succeeds with probability
alpha (or the next recorded uplink outcome); a downlink slot gives each
not-yet-received user an independent success with probability beta (or the
next value of that user's recorded stream).  A user's age resets, at the
end of the slot in which it decodes, to the slots elapsed since the
recovered packet's generation.  Statistics start at the first slot by
which both users have received at least once; feedback is instantaneous,
error-free and occupies no slot.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core import (
    AoiMetrics,
    AoiSeries,
    PncaoiError,
    ProtocolKind,
    RandomSource,
    Reliability,
)

__all__ = [
    "TraceSource",
    "TraceParseError",
    "TraceExhaustedError",
    "SimulationError",
    "load_trace",
    "write_trace",
    "simulate",
    "sweep",
]

_UNIFORM_BLOCK = 1 << 22

_KIND_CODE = {
    ProtocolKind.OLTD: K.KIND_OLTD,
    ProtocolKind.RPT: K.KIND_RPT,
    ProtocolKind.ULTD: K.KIND_ULTD,
    ProtocolKind.DLTD: K.KIND_DLTD,
}

_STREAM_NAMES = {
    K.TRACE_UP_EXHAUSTED: "uplink",
    K.TRACE_DNA_EXHAUSTED: "downlink user A",
    K.TRACE_DNB_EXHAUSTED: "downlink user B",
}


class TraceParseError(PncaoiError, ValueError):
    """A trace file line could not be parsed."""


class TraceExhaustedError(PncaoiError, RuntimeError):
    """A recorded outcome stream ran out under the Error policy."""


class SimulationError(PncaoiError, RuntimeError):
    """A simulation run could not produce valid statistics."""


@dataclass(frozen=True)
class TraceSource:
    """Recorded per-attempt decode outcomes driving a trace-mode run.

    uplink: relay decode successes, one per uplink attempt.  down_a/down_b:
    per-user decode successes, one per broadcast attempt that the user
    still listens to.  on_exhausted: "error" stops the run, "wrap" recycles
    the streams (which makes long runs periodic).
    """

    uplink: np.ndarray
    down_a: np.ndarray
    down_b: np.ndarray
    on_exhausted: str = "error"

    def __post_init__(self):
        for name in ("uplink", "down_a", "down_b"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.uint8)
            if arr.ndim != 1 or arr.size == 0:
                raise TraceParseError(f"{name} stream must be a non-empty 1-D sequence")
            if np.any(arr > 1):
                raise TraceParseError(f"{name} stream entries must be 0 or 1")
            object.__setattr__(self, name, arr)
        if self.on_exhausted not in ("error", "wrap"):
            raise TraceParseError(
                f"on_exhausted must be 'error' or 'wrap', got {self.on_exhausted!r}"
            )


def load_trace(path, on_exhausted: str = "error") -> TraceSource:
    """Parse a trace file.

    Line format: comments start with '#'; "u,<0|1>" appends to the uplink
    stream; "d,<0|1>,<0|1>" appends user A and user B outcomes to the
    downlink streams.  Records of each kind form the streams in file
    order; interleaving does not matter.
    """
    up, dn_a, dn_b = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                if parts[0] == "u" and len(parts) == 2:
                    up.append(_parse_outcome(parts[1]))
                elif parts[0] == "d" and len(parts) == 3:
                    dn_a.append(_parse_outcome(parts[1]))
                    dn_b.append(_parse_outcome(parts[2]))
                else:
                    raise ValueError("expected 'u,<0|1>' or 'd,<0|1>,<0|1>'")
            except ValueError as exc:
                raise TraceParseError(f"{path}:{lineno}: {exc}") from None
    if not up or not dn_a:
        raise TraceParseError(f"{path}: trace must contain both uplink and downlink records")
    return TraceSource(np.array(up), np.array(dn_a), np.array(dn_b), on_exhausted)


def _parse_outcome(tok: str) -> int:
    if tok == "0":
        return 0
    if tok == "1":
        return 1
    raise ValueError(f"outcome must be 0 or 1, got {tok!r}")


def write_trace(path, uplink, down_a, down_b, comment: str = "") -> None:
    """Write outcome streams in the trace file format (see `load_trace`)."""
    down_a = np.asarray(down_a)
    down_b = np.asarray(down_b)
    if down_a.shape != down_b.shape:
        raise ValueError("down_a and down_b must pair up one outcome per attempt")
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        for v in np.asarray(uplink):
            fh.write(f"u,{int(bool(v))}\n")
        for a, b in zip(down_a, down_b):
            fh.write(f"d,{int(bool(a))},{int(bool(b))}\n")


def _empty_caps():
    z = np.zeros(0, dtype=np.float64)
    return z, z.copy(), z.copy(), z.copy()


def simulate(
    kind: ProtocolKind,
    links,
    horizon_slots: int,
    rng: RandomSource | None = None,
    record_series: bool = False,
):
    """Run one protocol for `horizon_slots` slots and return its metrics.

    `links` is either a `Reliability` (Bernoulli mode, `rng` required) or a
    `TraceSource` (trace mode, `rng` ignored).  With `record_series=True`
    returns (metrics, (series_a, series_b)) carrying every age reset; only
    use it for modest horizons, the buffers hold one entry per reset.

    The average age is the exact sawtooth area from the first slot at which
    both users have received, divided by the remaining span.
    """
    kind = ProtocolKind(kind)
    horizon = int(horizon_slots)
    if horizon <= 0:
        raise SimulationError("horizon must be positive")
    ist, fst = K.new_state(_KIND_CODE[kind])
    if record_series:
        cap = max(horizon + 1, 16)
        caps = tuple(np.zeros(cap, dtype=np.float64) for _ in range(4))
    else:
        caps = _empty_caps()

    if isinstance(links, TraceSource):
        wrap = links.on_exhausted == "wrap"
        code = K.run_trace(
            ist, fst, links.uplink, links.down_a, links.down_b, horizon, wrap, *caps
        )
        if code != K.TRACE_OK:
            raise TraceExhaustedError(
                f"{_STREAM_NAMES[code]} stream exhausted after "
                f"{int(ist[K.I_T])} slots (policy 'error'); "
                f"shorten the horizon or use on_exhausted='wrap'"
            )
    elif isinstance(links, Reliability):
        links.require_positive()
        if rng is None:
            raise SimulationError("Bernoulli mode requires a RandomSource")
        gen = rng.generator()
        while ist[K.I_T] < horizon:
            block = gen.random(_UNIFORM_BLOCK)
            K.run_bernoulli(ist, fst, links.alpha, links.beta, horizon, block, *caps)
    else:
        raise TypeError(f"links must be Reliability or TraceSource, got {type(links)!r}")

    if ist[K.I_OVERFLOW]:
        raise SimulationError("series capture buffer overflowed")
    if ist[K.I_WARM] == 0:
        raise SimulationError(
            f"no complete update within {horizon} slots; "
            "increase the horizon or the link reliabilities"
        )
    metrics = _finish_metrics(ist, fst, horizon)
    if not record_series:
        return metrics
    series = tuple(
        AoiSeries(user, tuple(zip(caps[2 * u].tolist()[: int(ist[K.I_CAP_A + u])],
                                  caps[2 * u + 1].tolist()[: int(ist[K.I_CAP_A + u])])))
        for u, user in enumerate(("A", "B"))
    )
    return metrics, series


def _finish_metrics(ist, fst, horizon: int) -> AoiMetrics:
    start = int(ist[K.I_START])
    span = horizon - start
    if span <= 0:
        raise SimulationError("horizon ends before statistics start; extend the run")
    avg = []
    for u in range(2):
        last = int(ist[K.I_LAST_A + u])
        s0 = max(last, start)
        v0 = fst[K.F_AGE_A + u] + (s0 - last)
        dt = float(horizon - s0)
        area = fst[K.F_AREA_A + u] + v0 * dt + 0.5 * dt * dt
        avg.append(area / span)
    deliv = int(ist[K.I_DELIV])
    gencnt = int(ist[K.I_GENCNT])
    return AoiMetrics(
        avg_aoi_slots=(avg[0], avg[1]),
        throughput_pkts_per_slot=deliv / span,
        mean_packet_delay_slots=fst[K.F_DELAY_SUM] / deliv if deliv else math.nan,
        packet_reception_rate=deliv / gencnt if gencnt else math.nan,
    )


def _float_bits(x: float) -> int:
    return int(np.float64(x).view(np.uint64))


def sweep(kinds, grid, horizon_slots: int, rng: RandomSource):
    """Simulate every (kind, reliability) cell with an independent stream.

    Each cell's stream is derived from the protocol and the (alpha, beta)
    bit patterns, so results do not depend on iteration order.  Returns
    rows (kind, reliability, metrics) in the given order.
    """
    rows = []
    for kind in kinds:
        kind = ProtocolKind(kind)
        for r in grid:
            cell_rng = rng.substream(_KIND_CODE[kind], _float_bits(r.alpha), _float_bits(r.beta))
            rows.append((kind, r, simulate(kind, r, horizon_slots, cell_rng)))
    return rows
