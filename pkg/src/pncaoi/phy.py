"""Desk-scale PHY layer: convolutional codec, BPSK over AWGN, XOR demodulation.

The codec is the 64-state rate-1/2 convolutional code with octal generators
133/171, zero-state started and terminated with six zero tail bits, decoded
by a soft-input Viterbi decoder.  Uplink decoding works on the XOR of the
two users' codewords: a reduced-constellation demodulator turns each
superimposed sample into an XOR-bit log-likelihood ratio, and the standard
decoder runs on those.  Positive LLRs favour bit 0 throughout.

Channel convention (shared with the coding-bound module): real-valued
baseband, unit symbol energy, noise variance sigma^2 = 10**(-snr_db/10).
"""
import math

import numpy as np

from . import _kernels as K
from .core import PncaoiError, RandomSource

__all__ = [
    "CONSTRAINT_LENGTH",
    "GENERATOR_OCTAL",
    "TAIL_BITS",
    "LengthMismatchError",
    "coded_length",
    "noise_sigma",
    "conv_encode",
    "bpsk_modulate",
    "awgn_superimpose",
    "llr_p2p",
    "llr_xor",
    "viterbi_decode",
    "estimate_alpha",
    "estimate_beta",
    "trial_outcome_streams",
]

CONSTRAINT_LENGTH = 7
GENERATOR_OCTAL = (0o133, 0o171)
TAIL_BITS = CONSTRAINT_LENGTH - 1

# Tap arrays indexed by delay: generator bits read MSB-first, so entry d
# multiplies the input d slots ago.
_TAPS = tuple(
    np.array([(g >> (CONSTRAINT_LENGTH - 1 - d)) & 1 for d in range(CONSTRAINT_LENGTH)],
             dtype=np.uint8)
    for g in GENERATOR_OCTAL
)


class LengthMismatchError(PncaoiError, ValueError):
    """Sequence lengths do not line up with each other or the code."""


def coded_length(k_bits: int) -> int:
    """Coded bits per packet: two outputs per source or tail bit."""
    return 2 * (k_bits + TAIL_BITS)


def noise_sigma(snr_db: float) -> float:
    """Noise standard deviation at a given Es/N0 in dB (unit symbol energy)."""
    return 10.0 ** (-float(snr_db) / 20.0)


def _branch_sign_tables():
    """BPSK signs of both output bits for each trellis transition.

    Indexed [next_state, predecessor_lsb]; the next state's top bit is the
    input bit of the transition, its low five bits are the shifted history.
    """
    g0, g1 = GENERATOR_OCTAL
    sign0 = np.empty((64, 2), dtype=np.float64)
    sign1 = np.empty((64, 2), dtype=np.float64)
    for ns in range(64):
        b = ns >> 5
        for p in (0, 1):
            reg = (b << 6) | ((ns & 31) << 1) | p
            sign0[ns, p] = 1.0 - 2.0 * (bin(reg & g0).count("1") & 1)
            sign1[ns, p] = 1.0 - 2.0 * (bin(reg & g1).count("1") & 1)
    return sign0, sign1


_SIGN0, _SIGN1 = _branch_sign_tables()


def _as_bits(bits) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size == 0:
        raise LengthMismatchError("bit input must be a non-empty 1-D sequence")
    if np.any((arr != 0) & (arr != 1)):
        raise LengthMismatchError("bit input must contain only 0 and 1")
    return arr.astype(np.uint8)


def conv_encode(bits) -> np.ndarray:
    """Encode source bits; output has `coded_length(len(bits))` bits.

    Zero-state start, six zero tail bits flush the register.  Encoding is
    linear over GF(2): encoding the XOR of two inputs gives the XOR of
    their encodings.
    """
    x = _as_bits(bits)
    n_out = x.size + TAIL_BITS
    y0 = np.convolve(x, _TAPS[0])[:n_out] & 1
    y1 = np.convolve(x, _TAPS[1])[:n_out] & 1
    out = np.empty(2 * n_out, dtype=np.uint8)
    out[0::2] = y0
    out[1::2] = y1
    return out


def _encode_batch(bits: np.ndarray) -> np.ndarray:
    """Vectorized `conv_encode` over rows of a (n, k) bit matrix."""
    n, k_bits = bits.shape
    n_out = k_bits + TAIL_BITS
    padded = np.zeros((n, k_bits + 2 * TAIL_BITS), dtype=np.uint8)
    padded[:, TAIL_BITS:TAIL_BITS + k_bits] = bits
    out = np.empty((n, 2 * n_out), dtype=np.uint8)
    for j, taps in enumerate(_TAPS):
        acc = np.zeros((n, n_out), dtype=np.uint8)
        for d in np.flatnonzero(taps):
            acc ^= padded[:, TAIL_BITS - d:TAIL_BITS - d + n_out]
        out[:, j::2] = acc
    return out


def bpsk_modulate(bits) -> np.ndarray:
    """Map bit 0 to +1 and bit 1 to -1."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def awgn_superimpose(xa, xb, ha: float, hb: float, sigma: float, rng) -> np.ndarray:
    """Superimpose two symbol streams with gains and add white Gaussian noise.

    `rng` is a numpy Generator (see `RandomSource.generator`).
    """
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    if xa.shape != xb.shape:
        raise LengthMismatchError(f"symbol streams differ in shape: {xa.shape} vs {xb.shape}")
    return ha * xa + hb * xb + sigma * rng.standard_normal(xa.shape)


def llr_p2p(y, h: float, sigma: float) -> np.ndarray:
    """Point-to-point BPSK LLRs: 2 h y / sigma^2."""
    return (2.0 * h / (sigma * sigma)) * np.asarray(y, dtype=np.float64)


def llr_xor(y, ha: float, hb: float, sigma: float) -> np.ndarray:
    """XOR-bit LLRs from superimposed samples, reduced-constellation style.

    XOR bit 0 corresponds to the constellation points +-(ha+hb), bit 1 to
    +-(ha-hb); the LLR compares the squared distance to the nearest point
    of each set, scaled by 1/(2 sigma^2) so magnitudes are calibrated under
    the max-log approximation.  The decoder is scale-invariant, so the
    scaling only matters for diagnostics.
    """
    y = np.asarray(y, dtype=np.float64)
    d_xor1 = np.minimum((y - ha + hb) ** 2, (y + ha - hb) ** 2)
    d_xor0 = np.minimum((y - ha - hb) ** 2, (y + ha + hb) ** 2)
    return (d_xor1 - d_xor0) / (2.0 * sigma * sigma)


def _viterbi_batch_coded(llrs: np.ndarray) -> np.ndarray:
    """Decode (n, 2(K+6)) LLR rows to (n, K) source-bit rows."""
    bits = K.viterbi_batch(np.ascontiguousarray(llrs, dtype=np.float64), _SIGN0, _SIGN1)
    return bits[:, : bits.shape[1] - TAIL_BITS]


def viterbi_decode(llrs) -> np.ndarray:
    """Maximum-likelihood decode of one LLR block; returns the source bits.

    Expects `2 * (K + 6)` LLRs for K source bits (zero start and end
    states; the six tail bits are stripped).  Ties break toward bit 0 and
    the lower predecessor state, so degenerate all-zero input decodes
    deterministically to all zeros.
    """
    arr = np.asarray(llrs, dtype=np.float64)
    if arr.ndim != 1:
        raise LengthMismatchError("LLR input must be 1-D")
    if arr.size % 2 or arr.size < 2 * (TAIL_BITS + 1):
        raise LengthMismatchError(
            f"LLR length must be 2*(K+{TAIL_BITS}) for K >= 1, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)):
        raise LengthMismatchError("LLRs must be finite")
    return _viterbi_batch_coded(arr[None, :])[0]


def _trial_generators(rng: RandomSource, domain: int, trials: int):
    return [rng.substream(domain, i).generator() for i in range(trials)]


def _alpha_outcomes(snr_db: float, k_bits: int, trials: int, rng: RandomSource,
                    ha: float = 1.0, hb: float = 1.0) -> np.ndarray:
    """Per-trial XOR-decode successes over the superimposed uplink."""
    sigma = noise_sigma(snr_db)
    gens = _trial_generators(rng, 1, trials)
    bits_a = np.stack([g.integers(0, 2, k_bits) for g in gens]).astype(np.uint8)
    bits_b = np.stack([g.integers(0, 2, k_bits) for g in gens]).astype(np.uint8)
    noise = np.stack([g.standard_normal(coded_length(k_bits)) for g in gens])
    xa = bpsk_modulate(_encode_batch(bits_a))
    xb = bpsk_modulate(_encode_batch(bits_b))
    y = ha * xa + hb * xb + sigma * noise
    decoded = _viterbi_batch_coded(llr_xor(y, ha, hb, sigma))
    return np.all(decoded == (bits_a ^ bits_b), axis=1)


def _beta_outcomes(snr_db: float, k_bits: int, trials: int, rng: RandomSource,
                   domain: int = 2, pair: bool = False):
    """Per-trial point-to-point decode successes (one user, or a user pair
    decoding the same broadcast with independent noise)."""
    sigma = noise_sigma(snr_db)
    gens = _trial_generators(rng, domain, trials)
    bits = np.stack([g.integers(0, 2, k_bits) for g in gens]).astype(np.uint8)
    x = bpsk_modulate(_encode_batch(bits))
    outs = []
    for _ in range(2 if pair else 1):
        noise = np.stack([g.standard_normal(coded_length(k_bits)) for g in gens])
        decoded = _viterbi_batch_coded(llr_p2p(x + sigma * noise, 1.0, sigma))
        outs.append(np.all(decoded == bits, axis=1))
    return tuple(outs) if pair else outs[0]


def _binomial_ci_halfwidth(p_hat: float, n: int) -> float:
    return 1.96 * math.sqrt(p_hat * (1.0 - p_hat) / n)


def estimate_alpha(snr_db: float, k_bits: int, trials: int, rng: RandomSource) -> tuple:
    """Monte Carlo estimate of the uplink XOR-decode success probability.

    Each trial encodes two fresh random packets, superimposes them with
    unit gains, demodulates XOR LLRs and decodes.  Returns the success
    fraction and its 95% binomial confidence half-width.
    """
    ok = _alpha_outcomes(snr_db, k_bits, trials, rng)
    p = float(np.mean(ok))
    return p, _binomial_ci_halfwidth(p, trials)


def estimate_beta(snr_db: float, k_bits: int, trials: int, rng: RandomSource) -> tuple:
    """Monte Carlo estimate of the downlink decode success probability.

    Point-to-point pipeline for a single user; same return convention as
    `estimate_alpha`.
    """
    ok = _beta_outcomes(snr_db, k_bits, trials, rng)
    p = float(np.mean(ok))
    return p, _binomial_ci_halfwidth(p, trials)


def trial_outcome_streams(snr_db: float, k_bits: int, trials: int, rng: RandomSource):
    """Outcome streams in simulator-trace form: (uplink, down_a, down_b).

    The uplink stream matches `estimate_alpha` draw for draw; the downlink
    streams model both users decoding the same broadcast packets through
    independent noise.  Feed to `sim.write_trace` / `sim.TraceSource`.
    """
    up = _alpha_outcomes(snr_db, k_bits, trials, rng)
    dn_a, dn_b = _beta_outcomes(snr_db, k_bits, trials, rng, domain=3, pair=True)
    return up, dn_a, dn_b
