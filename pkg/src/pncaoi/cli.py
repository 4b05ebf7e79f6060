"""Command-line interface: analytic tables, coding-bound curves, block-length
optimization, Monte Carlo / trace-driven simulation and PHY error estimation.

One binary with subcommands; every subcommand is deterministic given its
full flag set (including the seed, which defaults to the PNCAOI_SEED
environment variable, then 0).  Output is CSV (default) or JSON with a
config echo; numbers use '.' decimals regardless of locale.

Exit codes: 0 success, 1 usage error, 2 runtime or domain error.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import analytic, rcb, sim
from .core import PncaoiError, ProtocolKind, RandomSource, Reliability

SEED_ENV_VAR = "PNCAOI_SEED"

_ANALYTIC_NAMES = "oltd,rpt,ultd"
_ALL_NAMES = "oltd,rpt,ultd,dltd"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt(v) -> str:
    if isinstance(v, float):
        if v != v:
            return "nan"
        return format(v, ".10g")
    return str(v)


def _parse_floats(text: str, flag: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise _UsageError(f"{flag} expects a comma-separated list of numbers, got {text!r}")


def _parse_protocols(text: str, allowed=_ANALYTIC_NAMES):
    names = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not names:
        raise _UsageError("empty protocol list")
    kinds = []
    for name in names:
        if name not in allowed.split(","):
            raise _UsageError(f"protocol {name!r} not supported here (use {allowed})")
        kinds.append(ProtocolKind(name))
    return kinds


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise _UsageError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def _emit(args, config: dict, header, rows) -> None:
    if args.format == "json":
        payload = {
            "config": config,
            "rows": [dict(zip(header, row)) for row in rows],
        }
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _reliability_grid(args):
    alphas = _parse_floats(args.alpha, "--alpha")
    betas = _parse_floats(args.beta, "--beta")
    return [Reliability(a, b) for a in alphas for b in betas]


def cmd_analytic(args) -> int:
    kinds = _parse_protocols(args.protocols)
    grid = _reliability_grid(args)
    header = [
        "protocol", "alpha", "beta", "avg_aoi_slots",
        "throughput_pkts_per_slot", "mean_packet_delay_slots", "packet_reception_rate",
    ]
    rows = []
    for kind in kinds:
        for r in grid:
            side = analytic.side_metrics(kind, r)
            rows.append((
                kind.value, r.alpha, r.beta, analytic.avg_aoi(kind, r),
                side.throughput_pkts_per_slot, side.mean_packet_delay_slots,
                side.packet_reception_rate,
            ))
    config = {"command": "analytic", "protocols": [k.value for k in kinds],
              "alpha": _parse_floats(args.alpha, "--alpha"),
              "beta": _parse_floats(args.beta, "--beta")}
    _emit(args, config, header, rows)
    return 0


def _parse_l_values(args):
    if args.l is not None:
        vals = []
        for tok in args.l.split(","):
            tok = tok.strip()
            if tok:
                try:
                    vals.append(int(tok))
                except ValueError:
                    raise _UsageError(f"--l expects integers, got {tok!r}")
        if not vals:
            raise _UsageError("--l list is empty")
        return vals
    lo, hi = args.l_min, args.l_max
    if lo is None or hi is None:
        return None
    return list(range(lo, hi + 1))


def cmd_rcb(args) -> int:
    snr_down = args.snr_down if args.snr_down is not None else args.snr
    l_values = _parse_l_values(args)
    if l_values is None:
        l_values = list(range(args.k, 30 * args.k + 1, args.k // 2 or 1))
    header = ["k_bits", "l_bits", "rate", "snr_up_db", "snr_down_db",
              "exponent_up", "per_up", "alpha", "exponent_down", "per_down", "beta"]
    up = rcb.ChannelSpec(rcb.ChannelRole.PNC_XOR, args.snr)
    down = rcb.ChannelSpec(rcb.ChannelRole.POINT_TO_POINT, snr_down)
    rows = []
    for l_bits in l_values:
        code = rcb.CodeParams(args.k, l_bits)
        eg_up = rcb.error_exponent(code.rate, up)
        eg_down = rcb.error_exponent(code.rate, down)
        per_up = min(1.0, 2.0 ** (-l_bits * eg_up))
        per_down = min(1.0, 2.0 ** (-l_bits * eg_down))
        rows.append((args.k, l_bits, code.rate, args.snr, snr_down,
                     eg_up, per_up, 1.0 - per_up, eg_down, per_down, 1.0 - per_down))
    config = {"command": "rcb", "k": args.k, "snr_up_db": args.snr,
              "snr_down_db": snr_down, "l": l_values}
    _emit(args, config, header, rows)
    return 0


def cmd_optimize(args) -> int:
    kinds = _parse_protocols(args.protocols)
    snrs = _parse_floats(args.snr, "--snr")
    l_range = (args.l_min if args.l_min is not None else args.k,
               args.l_max if args.l_max is not None else 30 * args.k)
    rows = []
    if args.curve:
        header = ["protocol", "snr_db", "l_bits", "alpha", "beta", "aoi_channel_uses"]
        for snr in snrs:
            snr_down = args.snr_down if args.snr_down is not None else snr
            curve = rcb.blocklength_curve(args.k, snr, snr_down, kinds, l_range)
            for l_bits, alpha, beta, cells in curve:
                for kind in kinds:
                    rows.append((kind.value, snr, l_bits, alpha, beta, cells[kind]))
    else:
        header = ["protocol", "snr_db", "l_star", "aoi_channel_uses"]
        for snr in snrs:
            snr_down = args.snr_down if args.snr_down is not None else snr
            for kind in kinds:
                l_star, aoi = rcb.optimize_block_length(args.k, snr, snr_down, kind, l_range)
                rows.append((kind.value, snr, l_star, aoi))
    config = {"command": "optimize", "k": args.k, "snr_db": snrs,
              "snr_down_db": args.snr_down, "l_range": list(l_range),
              "protocols": [k.value for k in kinds], "curve": bool(args.curve)}
    _emit(args, config, header, rows)
    return 0


def cmd_simulate(args) -> int:
    kinds = _parse_protocols(args.protocols, allowed=_ALL_NAMES)
    seed = args.seed if args.seed is not None else _default_seed()
    rng = RandomSource(seed)
    header = ["protocol", "mode", "alpha", "beta", "horizon_slots", "seed",
              "avg_aoi_a", "avg_aoi_b", "avg_aoi_mean",
              "throughput_pkts_per_slot", "mean_packet_delay_slots",
              "packet_reception_rate"]
    rows = []
    if args.trace:
        source = sim.load_trace(args.trace, on_exhausted="wrap" if args.wrap else "error")
        for kind in kinds:
            m = sim.simulate(kind, source, args.horizon)
            rows.append((kind.value, "trace", "", "", args.horizon, seed,
                         *_metric_cells(m)))
        link_cfg = {"trace": args.trace, "wrap": bool(args.wrap)}
    else:
        if args.alpha is None or args.beta is None:
            raise _UsageError("simulate needs --alpha and --beta, or --trace FILE")
        grid = _reliability_grid(args)
        for kind, r, m in sim.sweep(kinds, grid, args.horizon, rng):
            rows.append((kind.value, "bernoulli", r.alpha, r.beta, args.horizon, seed,
                         *_metric_cells(m)))
        link_cfg = {"alpha": _parse_floats(args.alpha, "--alpha"),
                    "beta": _parse_floats(args.beta, "--beta")}
    config = {"command": "simulate", "protocols": [k.value for k in kinds],
              "horizon_slots": args.horizon, "seed": seed, **link_cfg}
    _emit(args, config, header, rows)
    return 0


def _metric_cells(m):
    a, b = m.avg_aoi_slots
    return (a, b, m.avg_aoi_mean, m.throughput_pkts_per_slot,
            m.mean_packet_delay_slots, m.packet_reception_rate)


def cmd_phy(args) -> int:
    from . import phy

    snrs = _parse_floats(args.snr, "--snr")
    seed = args.seed if args.seed is not None else _default_seed()
    rng = RandomSource(seed)
    if args.trials < 100:
        print(
            f"warning: only {args.trials} trials; 95% confidence half-widths "
            "will exceed a few percent",
            file=sys.stderr,
        )
    if args.emit_trace:
        os.makedirs(args.emit_trace, exist_ok=True)
    header = ["snr_db", "k_bits", "trials", "alpha_hat", "alpha_ci95",
              "beta_hat", "beta_ci95"]
    rows = []
    for i, snr in enumerate(snrs):
        snr_rng = rng.substream(4, i)
        up, dn_a, dn_b = phy.trial_outcome_streams(snr, args.k, args.trials, snr_rng)
        alpha_hat = float(np.mean(up))
        pooled = np.concatenate([dn_a, dn_b])
        beta_hat = float(np.mean(pooled))
        rows.append((
            snr, args.k, args.trials,
            alpha_hat, phy._binomial_ci_halfwidth(alpha_hat, up.size),
            beta_hat, phy._binomial_ci_halfwidth(beta_hat, pooled.size),
        ))
        if args.emit_trace:
            path = os.path.join(args.emit_trace, f"trace_{_fmt(float(snr))}dB.txt")
            sim.write_trace(
                path, up, dn_a, dn_b,
                comment=f"snr_db={_fmt(float(snr))} k_bits={args.k} "
                        f"trials={args.trials} seed={seed}",
            )
    config = {"command": "phy", "snr_db": snrs, "k": args.k,
              "trials": args.trials, "seed": seed,
              "emit_trace": args.emit_trace}
    _emit(args, config, header, rows)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="pncaoi",
        description="Average age-of-information tools for XOR-relaying "
                    "two-way relay protocols.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_output_flags(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", help="write to this path instead of stdout")

    p = sub.add_parser("analytic", help="closed-form average age and side metrics")
    p.add_argument("--alpha", required=True, help="uplink success probability (comma list)")
    p.add_argument("--beta", required=True, help="downlink success probability (comma list)")
    p.add_argument("--protocol", "--protocols", dest="protocols", default=_ANALYTIC_NAMES)
    add_output_flags(p)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("rcb", help="random-coding error bounds per block length")
    p.add_argument("--k", type=int, required=True, help="source bits per packet")
    p.add_argument("--snr", type=float, required=True, help="uplink Es/N0 in dB")
    p.add_argument("--snr-down", type=float, help="downlink Es/N0 in dB (default: --snr)")
    p.add_argument("--l", help="comma list of block lengths")
    p.add_argument("--l-min", type=int)
    p.add_argument("--l-max", type=int)
    add_output_flags(p)
    p.set_defaults(func=cmd_rcb)

    p = sub.add_parser("optimize", help="block length minimizing age in channel uses")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--snr", required=True, help="per-hop Es/N0 in dB (comma list)")
    p.add_argument("--snr-down", type=float, help="downlink Es/N0 override")
    p.add_argument("--l-min", type=int)
    p.add_argument("--l-max", type=int)
    p.add_argument("--protocol", "--protocols", dest="protocols", default=_ANALYTIC_NAMES)
    p.add_argument("--curve", action="store_true", help="dump the full age-vs-L curve")
    add_output_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="slot-level Monte Carlo or trace-driven run")
    p.add_argument("--protocol", "--protocols", dest="protocols", default=_ANALYTIC_NAMES)
    p.add_argument("--alpha", help="uplink success probability (comma list)")
    p.add_argument("--beta", help="downlink success probability (comma list)")
    p.add_argument("--trace", help="trace file (overrides --alpha/--beta)")
    p.add_argument("--wrap", action="store_true",
                   help="recycle exhausted trace streams instead of failing")
    p.add_argument("--horizon", type=int, default=1_000_000, help="slots to simulate")
    p.add_argument("--seed", type=int, help=f"default: ${SEED_ENV_VAR} or 0")
    add_output_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phy", help="Monte Carlo alpha/beta estimation over AWGN")
    p.add_argument("--snr", required=True, help="Es/N0 values in dB (comma list)")
    p.add_argument("--k", type=int, default=100, help="source bits per packet")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, help=f"default: ${SEED_ENV_VAR} or 0")
    p.add_argument("--emit-trace", metavar="DIR",
                   help="write decode-outcome trace files per SNR into DIR")
    add_output_flags(p)
    p.set_defaults(func=cmd_phy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except PncaoiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
