"""Random-coding packet-error bounds and block-length optimization.

The per-attempt decode probabilities of both hops are estimated from the
random coding exponent of the underlying binary-input AWGN channel: the
downlink is plain BPSK point-to-point, the uplink XOR decoding behaves as
a virtual binary channel whose conditional output densities are Gaussian
mixtures at the XOR constellation points.  The block error probability at
block length L and rate R is bounded by 2**(-L E(R)); the bound is used
directly as the operating packet error rate, a modeling convention rather
than a tightness claim.

Channel convention (shared with `phy`): real-valued baseband, unit symbol
energy, noise variance sigma^2 = 10**(-snr_db/10), unit gains by default.
"""
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.interpolate import CubicSpline

from .analytic import avg_aoi
from .core import (
    OutOfRangeError,
    PncaoiError,
    ProtocolKind,
    Reliability,
)

__all__ = [
    "ChannelRole",
    "ChannelSpec",
    "CodeParams",
    "QuadratureError",
    "AllDegenerateError",
    "conditional_density",
    "gallager_e0",
    "error_exponent",
    "per_bound",
    "reliability_from_rcb",
    "blocklength_curve",
    "optimize_block_length",
]

_RHO_GRID = np.linspace(0.0, 1.0, 1001)
_GOLDEN_TOL = 1e-6
_QUAD_REL_TOL = 1e-10


class QuadratureError(PncaoiError, RuntimeError):
    """Numerical integration did not reach the requested tolerance."""


class AllDegenerateError(PncaoiError, ValueError):
    """Every block length in the search range gives a useless link."""


class ChannelRole(Enum):
    POINT_TO_POINT = "p2p"
    PNC_XOR = "pnc-xor"


@dataclass(frozen=True)
class ChannelSpec:
    """Binary-input AWGN channel of one hop.

    snr_db is the per-user Es/N0.  For POINT_TO_POINT only gain_a is used;
    for PNC_XOR the conditional densities given an XOR bit are equal-weight
    Gaussian mixtures at +-(gain_a+gain_b) for bit 0 and +-(gain_a-gain_b)
    for bit 1.
    """

    role: ChannelRole
    snr_db: float
    gain_a: float = 1.0
    gain_b: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise OutOfRangeError("snr_db must be finite")

    @property
    def sigma_sq(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def sigma(self) -> float:
        return 10.0 ** (-self.snr_db / 20.0)

    def mixture(self, bit: int) -> tuple:
        """(centers, weights) of the conditional output density."""
        if self.role is ChannelRole.POINT_TO_POINT:
            h = self.gain_a
            return (np.array([h if bit == 0 else -h]), np.array([1.0]))
        c = self.gain_a + self.gain_b if bit == 0 else self.gain_a - self.gain_b
        return (np.array([c, -c]), np.array([0.5, 0.5]))


@dataclass(frozen=True)
class CodeParams:
    """Packet code description: k_bits source bits in an l_bits block."""

    k_bits: int
    l_bits: int

    def __post_init__(self):
        if self.k_bits < 1:
            raise OutOfRangeError("k_bits must be positive")
        if self.l_bits < self.k_bits:
            raise OutOfRangeError("l_bits must be at least k_bits")

    @property
    def rate(self) -> float:
        return self.k_bits / self.l_bits


def conditional_density(ch: ChannelSpec, bit: int, y) -> np.ndarray:
    """Conditional output density p(y | coded bit) of the channel."""
    y = np.asarray(y, dtype=np.float64)
    centers, weights = ch.mixture(bit)
    norm = 1.0 / math.sqrt(2.0 * math.pi * ch.sigma_sq)
    out = np.zeros_like(y, dtype=np.float64)
    for c, w in zip(centers, weights):
        out = out + w * norm * np.exp(-((y - c) ** 2) / (2.0 * ch.sigma_sq))
    return out


def _integration_bound(ch: ChannelSpec) -> float:
    centers = np.concatenate([ch.mixture(0)[0], ch.mixture(1)[0]])
    return float(np.max(np.abs(centers))) + 10.0 * ch.sigma


def gallager_e0(rho: float, ch: ChannelSpec) -> float:
    """Gallager function E0(rho) of the channel, by adaptive quadrature.

    Uses the uniform-input symmetric form
    -log2 integral of (p(y|0)**s / 2 + p(y|1)**s / 2)**(1/s) dy,
    with s = 1/(1+rho); E0(0) = 0 and E0 is concave nondecreasing on [0, 1].
    """
    if not 0.0 <= rho <= 1.0:
        raise OutOfRangeError(f"rho must lie in [0, 1], got {rho}")
    s = 1.0 / (1.0 + rho)
    bound = _integration_bound(ch)

    def integrand(y):
        p0 = conditional_density(ch, 0, y)
        p1 = conditional_density(ch, 1, y)
        return (0.5 * p0 ** s + 0.5 * p1 ** s) ** (1.0 + rho)

    value, abserr = quad(integrand, -bound, bound, epsabs=1e-13, epsrel=_QUAD_REL_TOL, limit=200)
    if not math.isfinite(value) or value <= 0.0 or abserr > 1e-8 * max(1.0, abs(value)):
        raise QuadratureError(
            f"E0 quadrature failed (value={value!r}, abserr={abserr!r}) for {ch}"
        )
    return -math.log2(value)


class _E0Table:
    """Dense E0(rho) samples of one channel plus a spline for refinement.

    Built once per channel with vectorized adaptive quadrature; used by the
    block-length sweep, where thousands of rate evaluations make per-rate
    quadrature wasteful.
    """

    def __init__(self, ch: ChannelSpec):
        s = 1.0 / (1.0 + _RHO_GRID)
        bound = _integration_bound(ch)

        def integrand(y):
            p0 = float(conditional_density(ch, 0, y))
            p1 = float(conditional_density(ch, 1, y))
            return (0.5 * p0 ** s + 0.5 * p1 ** s) ** (1.0 + _RHO_GRID)

        values, err = quad_vec(integrand, -bound, bound, epsabs=1e-13, epsrel=_QUAD_REL_TOL)
        if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
            raise QuadratureError(f"E0 table quadrature failed for {ch}")
        self.e0 = -np.log2(values)
        self.spline = CubicSpline(_RHO_GRID, self.e0)

    def exponent(self, rate: float) -> float:
        """max over rho of E0(rho) - rho * rate, grid scan plus golden refine."""
        obj = self.e0 - _RHO_GRID * rate
        i = int(np.argmax(obj))
        lo = _RHO_GRID[max(i - 1, 0)]
        hi = _RHO_GRID[min(i + 1, _RHO_GRID.size - 1)]
        f = lambda x: float(self.spline(x)) - x * rate
        best = _golden_max(f, lo, hi)
        return max(0.0, best, float(obj[i]))


@lru_cache(maxsize=64)
def _table_for(ch: ChannelSpec) -> _E0Table:
    return _E0Table(ch)


def _golden_max(f, lo: float, hi: float, tol: float = _GOLDEN_TOL) -> float:
    """Golden-section maximization of a concave function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return max(fc, fd, f(0.5 * (a + b)))


def error_exponent(rate: float, ch: ChannelSpec) -> float:
    """Random coding exponent: max over rho in [0, 1] of E0(rho) - rho rate.

    Coarse 100-step scan followed by golden-section refinement; never
    negative since rho = 0 contributes zero.
    """
    if not 0.0 < rate <= 1.0:
        raise OutOfRangeError(f"rate must lie in (0, 1], got {rate}")
    rhos = np.linspace(0.0, 1.0, 101)
    vals = np.array([gallager_e0(r, ch) - r * rate for r in rhos])
    i = int(np.argmax(vals))
    lo, hi = rhos[max(i - 1, 0)], rhos[min(i + 1, rhos.size - 1)]
    best = _golden_max(lambda x: gallager_e0(x, ch) - x * rate, lo, hi)
    return max(0.0, best, float(vals[i]))


def per_bound(code: CodeParams, ch: ChannelSpec) -> float:
    """Packet error estimate min(1, 2**(-L E(K/L))) at the code's rate."""
    return min(1.0, 2.0 ** (-code.l_bits * error_exponent(code.rate, ch)))


def reliability_from_rcb(code: CodeParams, snr_up_db: float, snr_down_db: float,
                         gain_a: float = 1.0, gain_b: float = 1.0) -> Reliability:
    """Map code and per-hop SNRs to (alpha, beta) via the error bounds."""
    up = ChannelSpec(ChannelRole.PNC_XOR, snr_up_db, gain_a, gain_b)
    down = ChannelSpec(ChannelRole.POINT_TO_POINT, snr_down_db)
    return Reliability(1.0 - per_bound(code, up), 1.0 - per_bound(code, down))


def _reliability_fast(k_bits: int, l_bits: int, up_table: _E0Table, down_table: _E0Table):
    rate = k_bits / l_bits
    alpha = 1.0 - min(1.0, 2.0 ** (-l_bits * up_table.exponent(rate)))
    beta = 1.0 - min(1.0, 2.0 ** (-l_bits * down_table.exponent(rate)))
    return alpha, beta


def blocklength_curve(k_bits: int, snr_up_db: float, snr_down_db: float,
                      kinds, l_range: tuple | None = None):
    """Average age in channel uses versus block length, for several protocols.

    Returns rows (l_bits, alpha, beta, {kind: aoi_channel_uses or nan}).
    A cell is nan when the bound gives a vanishing alpha or beta at that
    block length.  The link qualities are shared across protocols.
    """
    kinds = [ProtocolKind(k) for k in kinds]
    l_lo, l_hi = l_range if l_range is not None else (k_bits, 30 * k_bits)
    if l_lo < k_bits:
        raise OutOfRangeError(f"block length range must start at k_bits={k_bits}")
    if l_hi < l_lo:
        raise OutOfRangeError("empty block length range")
    up = _table_for(ChannelSpec(ChannelRole.PNC_XOR, snr_up_db))
    down = _table_for(ChannelSpec(ChannelRole.POINT_TO_POINT, snr_down_db))
    rows = []
    for l_bits in range(l_lo, l_hi + 1):
        alpha, beta = _reliability_fast(k_bits, l_bits, up, down)
        cells = {}
        for kind in kinds:
            if alpha <= 0.0 or beta <= 0.0:
                cells[kind] = math.nan
            else:
                cells[kind] = avg_aoi(kind, Reliability(alpha, beta)) * l_bits
        rows.append((l_bits, alpha, beta, cells))
    return rows


def optimize_block_length(k_bits: int, snr_up_db: float, snr_down_db: float,
                          kind: ProtocolKind, l_range: tuple | None = None) -> tuple:
    """Exhaustive block-length search minimizing average age in channel uses.

    Scans every integer block length in `l_range` (default [K, 30K]) and
    returns (l_star, aoi_channel_uses); ties break toward the smaller
    length.  Raises AllDegenerateError when no length gives usable links.
    """
    kind = ProtocolKind(kind)
    rows = blocklength_curve(k_bits, snr_up_db, snr_down_db, [kind], l_range)
    best_l, best_v = None, math.inf
    for l_bits, _, _, cells in rows:
        v = cells[kind]
        if not math.isnan(v) and v < best_v:
            best_l, best_v = l_bits, v
    if best_l is None:
        raise AllDegenerateError(
            f"every block length in [{rows[0][0]}, {rows[-1][0]}] gives a dead link "
            f"at SNRs ({snr_up_db}, {snr_down_db}) dB"
        )
    return best_l, best_v
