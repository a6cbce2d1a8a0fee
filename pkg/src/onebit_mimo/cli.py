"""Command-line driver.

Subcommands: ``simulate`` (run a config's sweep), ``analytic`` (closed-form
curves for the config's cell), ``oracle`` (exact small-scale enumeration
with a Monte Carlo and closed-form comparison table), ``figure`` (built-in
presets 1..8), ``validate-config`` (parse and check only).

Exit codes: 0 on success, including sweeps where some cells failed but
rows were written; 1 on configuration or runtime failure, or when every
requested metric failed; 2 on command-line usage errors.
"""

import argparse
import sys

import numpy as np

from . import analytic
from .config import load_config
from .detectors import ChannelEstimate, mrc_filter, zf_filter
from .exceptions import OneBitMimoError, UnsupportedCombinationError
from .model import QuantizerMode, sample_channel
from .presets import (
    DEFAULT_MASTER_SEED,
    FIGURE_IDS,
    FIGURE_TITLES,
    default_output_name,
    run_figure,
)
from .reporting import ResultRow, write_histograms_csv, write_rows_csv
from .simulate import (
    ROLE_CHANNEL,
    ExperimentSpec,
    SweepCell,
    exact_enumeration_oracle,
    run_mi_hard_mc,
    run_ser_mc,
    run_sweep,
)
from .streams import RandomStream


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="onebit-mimo",
        description="1-bit massive MIMO uplink: simulation, closed-form "
                    "analysis, and exact small-scale enumeration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True, default_out=None):
        if config_required:
            p.add_argument("--config", required=True,
                           help="path to a key = value config file")
        p.add_argument("--out", default=default_out,
                       help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")
        p.add_argument("--scale", type=float, default=1.0,
                       help="shrink figure presets: antennas and trial "
                            "budgets are multiplied by this factor")
        p.add_argument("--workers", type=int, default=1,
                       help="process count for sweep cells")

    add_common(sub.add_parser(
        "simulate", help="run the config's sweep and write a CSV"),
        default_out="results.csv")
    add_common(sub.add_parser(
        "analytic", help="closed-form curves for the config's cell "
                         "(MRC, full CSI, 1-bit only)"),
        default_out="analytic.csv")
    add_common(sub.add_parser(
        "oracle", help="exact enumeration at small M, K with a comparison "
                       "table against Monte Carlo and closed form"),
        default_out="oracle.csv")

    fig = sub.add_parser("figure", help="run a built-in figure preset")
    fig.add_argument("figure_id", type=int, choices=FIGURE_IDS,
                     metavar="1..8",
                     help="; ".join(f"{i}: {FIGURE_TITLES[i]}"
                                    for i in FIGURE_IDS))
    add_common(fig, config_required=False)

    validate = sub.add_parser("validate-config",
                              help="parse and validate a config, run nothing")
    validate.add_argument("--config", required=True)
    return parser


def _write_sweep(rows, out_path):
    write_rows_csv(out_path, rows)
    failed = [r for r in rows if r.error]
    print(f"wrote {len(rows)} rows to {out_path}")
    if failed and len(failed) == len(rows):
        for row in failed:
            print(f"error: {row.metric}: {row.error}", file=sys.stderr)
        return 1
    if failed:
        print(f"warning: {len(failed)} of {len(rows)} rows carry errors",
              file=sys.stderr)
    return 0


def _cmd_simulate(args):
    config = load_config(args.config)
    seed = args.seed if args.seed is not None else config.master_seed
    if config.figure is not None:
        return _run_figure_to_csv(config.figure, seed, args)
    cell = config.to_cell(master_seed=seed)
    rows = run_sweep([cell], workers=args.workers)
    return _write_sweep(rows, args.out)


ANALYTIC_METRIC_SET = ("mi_hard_analytic", "mi_soft_analytic", "ser_analytic")


def _cmd_analytic(args):
    config = load_config(args.config)
    if config.figure is not None:
        raise UnsupportedCombinationError(
            "the analytic command needs an explicit config, not a figure "
            "preset")
    seed = args.seed if args.seed is not None else config.master_seed
    cell = config.to_cell(master_seed=seed)
    analytic_cell = SweepCell(spec=cell.spec, metrics=ANALYTIC_METRIC_SET)
    rows = run_sweep([analytic_cell], workers=args.workers)
    return _write_sweep(rows, args.out)


def _oracle_rows_and_table(config, seed):
    if config.filter not in ("mrc", "zf") or config.csi != "full" or (
        config.quantizer != QuantizerMode.ONE_BIT.value
    ):
        raise UnsupportedCombinationError(
            "the oracle command supports the mrc and zf filters with full "
            "CSI and the 1-bit quantizer")
    spec_probe = ExperimentSpec(
        num_antennas=config.num_antennas,
        num_users=config.num_users,
        snr_db_grid=config.snr_db,
        filter_kind=config.filter,
        csi_mode="full",
        channel_trials=1,
        inner_trials=config.inner_trials,
        master_seed=seed,
        noise_variance=config.noise_variance,
    )
    rows = []
    table_lines = []
    base = dict(filter=config.filter, csi_mode="full",
                quantizer_mode="one_bit", pilot_len=None,
                channel_trials=1, inner_trials=config.inner_trials,
                master_seed=seed, num_antennas=config.num_antennas,
                num_users=config.num_users)

    def add(snr, metric, value, std_error=0.0):
        rows.append(ResultRow(snr_db=snr, metric=metric, value=value,
                              std_error=std_error, error="", **base))

    for si, snr in enumerate(config.snr_db):
        sys_config = spec_probe.config_at(snr)
        channel = sample_channel(
            sys_config, RandomStream(seed, (0, si, 0, ROLE_CHANNEL)))
        estimate = ChannelEstimate.full_csi(channel)
        filt = (mrc_filter(estimate) if config.filter == "mrc"
                else zf_filter(estimate))

        oracle_mi = np.empty(config.num_users)
        oracle_ser = np.empty(config.num_users)
        for user in range(config.num_users):
            result = exact_enumeration_oracle(channel, sys_config, filt,
                                              user=user)
            oracle_mi[user] = result.mi_hard
            oracle_ser[user] = result.ser
        add(snr, "mi_hard_oracle", float(oracle_mi.mean()))
        add(snr, "ser_oracle", float(oracle_ser.mean()))

        fixed_spec = ExperimentSpec(
            num_antennas=config.num_antennas, num_users=config.num_users,
            snr_db_grid=(snr,), filter_kind=config.filter, csi_mode="full",
            channel_trials=1, inner_trials=config.inner_trials,
            master_seed=seed, noise_variance=config.noise_variance,
            fixed_channel=channel,
        )
        mi_mc = run_mi_hard_mc(fixed_spec, key_prefix=(0, si)).points[0]
        ser_mc = run_ser_mc(fixed_spec, key_prefix=(0, si)).points[0]
        add(snr, "mi_hard_mc", mi_mc.value, mi_mc.std_error)
        add(snr, "ser_mc", ser_mc.value, ser_mc.std_error)

        cells = [f"snr {snr:+.1f} dB:"]
        cells.append(f"MI oracle {oracle_mi.mean():.6f}"
                     f" | mc {mi_mc.value:.6f}")
        cells.append(f"SER oracle {oracle_ser.mean():.6f}"
                     f" | mc {ser_mc.value:.6f}")
        if config.filter == "mrc":
            ana_mi = np.empty(config.num_users)
            ana_ser = np.empty(config.num_users)
            for user in range(config.num_users):
                metrics = analytic.analytic_user_metrics(channel, user,
                                                         sys_config)
                ana_mi[user] = metrics["mi_hard"]
                ana_ser[user] = metrics["ser"]
            add(snr, "mi_hard_analytic", float(ana_mi.mean()))
            add(snr, "ser_analytic", float(ana_ser.mean()))
            cells[1] += f" | analytic {ana_mi.mean():.6f}"
            cells[2] += f" | analytic {ana_ser.mean():.6f}"
        table_lines.append("\n  ".join(cells))
    return rows, table_lines


def _cmd_oracle(args):
    config = load_config(args.config)
    if config.figure is not None:
        raise UnsupportedCombinationError(
            "the oracle command needs an explicit config, not a figure "
            "preset")
    seed = args.seed if args.seed is not None else config.master_seed
    rows, table_lines = _oracle_rows_and_table(config, seed)
    write_rows_csv(args.out, rows)
    for line in table_lines:
        print(line)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _run_figure_to_csv(figure_id, seed, args):
    out = args.out or default_output_name(figure_id)
    kind, rows = run_figure(figure_id, master_seed=seed, scale=args.scale,
                            workers=args.workers)
    if kind == "histogram":
        write_histograms_csv(out, rows)
        print(f"wrote {len(rows)} rows to {out}")
        return 0
    return _write_sweep(rows, out)


def _cmd_figure(args):
    seed = args.seed if args.seed is not None else DEFAULT_MASTER_SEED
    return _run_figure_to_csv(args.figure_id, seed, args)


def _cmd_validate(args):
    config = load_config(args.config)
    if config.figure is not None:
        print(f"config OK: figure {config.figure} "
              f"({FIGURE_TITLES[config.figure]})")
        return 0
    cell = config.to_cell()
    print(f"config OK: explicit cell, {len(cell.spec.snr_db_grid)} SNR "
          f"points, metrics {', '.join(cell.metrics)}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "analytic": _cmd_analytic,
    "oracle": _cmd_oracle,
    "figure": _cmd_figure,
    "validate-config": _cmd_validate,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return _COMMANDS[args.command](args)
    except (OneBitMimoError, ValueError, TypeError, OSError,
            np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
