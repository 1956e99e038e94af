"""Command-line interface tying the pipeline together.

Subcommands: simulate, scenarios, fit, predict, modes, sweep-d, noise,
fft.  Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
failure.  Output files are written atomically, so a failing run leaves no
partial outputs behind; reruns with identical inputs (and --seed where it
applies) produce identical numbers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .decomposition import RankSpec, fit, load_model, write_model
from .embedding import build_embedded_pair
from .errors import DataError, NumericalError
from .modal import fft_spectrum, rank_modes, write_mode_table
from .prediction import PredictionReport, reconstruct, rrmse, sweep_order, write_sweep_report
from .simulator import FaultSpec, SimConfig, generate_scenarios, load_network, simulate
from .trajectory import (
    FLOAT_FORMAT,
    SteadyState,
    TrajectorySet,
    compute_steady_state,
    default_steady_policy,
    inject_noise,
    load_trajectory,
    load_trajectory_set,
    write_trajectory,
    write_trajectory_set,
)

__all__ = ["main", "entrypoint"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # noqa: D102 - argparse hook
        raise _UsageError(message)


def _parse_int_list(text: str) -> list[int]:
    """Integer list syntax: comma-separated values and inclusive a:b ranges."""
    out: list[int] = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            raise _UsageError(f"empty entry in integer list {text!r}")
        if ":" in token:
            lo_s, _, hi_s = token.partition(":")
            try:
                lo, hi = int(lo_s), int(hi_s)
            except ValueError:
                raise _UsageError(f"malformed range {token!r}") from None
            if hi < lo:
                raise _UsageError(f"descending range {token!r}")
            out.extend(range(lo, hi + 1))
        else:
            try:
                out.append(int(token))
            except ValueError:
                raise _UsageError(f"malformed integer {token!r}") from None
    return out


def _add_fault_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fault-start", type=float, default=1.0,
                   help="fault onset time in s (default 1.0)")
    p.add_argument("--fault-dur", type=float, default=0.1,
                   help="fault duration in s (default 0.1)")
    p.add_argument("--fault-mag", type=float, default=0.5,
                   help="power drawn (p.u.) or coupling scale factor (default 0.5)")
    p.add_argument("--fault-mode", choices=("power_sink", "coupling_drop"),
                   default="power_sink", help="disturbance type (default power_sink)")


def _add_sim_flags(p: argparse.ArgumentParser, default_horizon: Optional[float]) -> None:
    p.add_argument("--horizon", type=float, required=default_horizon is None,
                   default=default_horizon,
                   help="simulated time span in s" +
                        (f" (default {default_horizon})" if default_horizon else ""))
    p.add_argument("--dt", type=float, default=0.01,
                   help="output sampling interval in s (default 0.01)")
    p.add_argument("--dt-int", type=float, default=None,
                   help="internal integration step in s (default: <= 1 ms divisor of --dt)")


def _add_rank_flags(p: argparse.ArgumentParser) -> None:
    group = p.add_mutually_exclusive_group()
    group.add_argument("--rank-tol", type=float, default=None,
                       help="keep singular values above this fraction of the largest "
                            "(default 1e-8)")
    group.add_argument("--rank", type=int, default=None, help="fixed truncation rank")


def _rank_spec(args: argparse.Namespace) -> RankSpec:
    if args.rank is not None:
        return RankSpec.fixed(args.rank)
    if args.rank_tol is not None:
        return RankSpec.tolerance(args.rank_tol)
    return RankSpec()


def _steady_for(tset: TrajectorySet) -> SteadyState:
    return compute_steady_state(tset, default_steady_policy(tset))


def build_parser() -> _Parser:
    parser = _Parser(prog="gridmodes",
                     description="Oscillation-mode identification for networked "
                                 "swing dynamics: simulate, fit, analyze, forecast.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", help="integrate one fault scenario")
    p.add_argument("--network", required=True, help="network JSON file")
    p.add_argument("--fault-bus", type=int, default=None,
                   help="disturbed bus id (omit for an unforced run)")
    _add_fault_flags(p)
    _add_sim_flags(p, default_horizon=None)
    p.add_argument("--out", required=True, help="output trajectory CSV")

    p = sub.add_parser("scenarios", help="simulate one fault scenario per bus")
    p.add_argument("--network", required=True, help="network JSON file")
    p.add_argument("--buses", required=True,
                   help="disturbed bus ids, e.g. 1,2,3 or 1:5")
    _add_fault_flags(p)
    _add_sim_flags(p, default_horizon=20.0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--manifest", default="manifest.json",
                   help="manifest filename inside the output directory")

    p = sub.add_parser("fit", help="fit a model to a trajectory set")
    p.add_argument("--train", required=True, help="training manifest JSON")
    p.add_argument("--d", type=int, required=True, help="delay order")
    _add_rank_flags(p)
    p.add_argument("--center", choices=("on", "off"), default="on",
                   help="subtract the steady state before fitting (default on)")
    p.add_argument("--t-from", type=float, default=None,
                   help="fit only samples with t >= this (e.g. the post-fault "
                        "ringdown start); the steady state is still estimated "
                        "from the full records")
    p.add_argument("--model", required=True, help="output model JSON")

    p = sub.add_parser("predict", help="reconstruct/forecast from an initial window")
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--init", required=True,
                   help="trajectory CSV providing the first d samples")
    p.add_argument("--t-from", type=float, default=None,
                   help="take the initial window from t >= this instead of "
                        "the start of --init")
    p.add_argument("--steps", type=int, default=None,
                   help="number of output samples (default: span the reference)")
    p.add_argument("--out", required=True, help="output trajectory CSV")
    p.add_argument("--reference", default=None,
                   help="trajectory CSV to score the prediction against")
    p.add_argument("--metrics", default=None,
                   help="metrics JSON output (needs --reference)")

    p = sub.add_parser("modes", help="rank and classify the fitted modes")
    p.add_argument("--model", required=True, help="model JSON from fit")
    p.add_argument("--top", type=int, default=30,
                   help="number of modes to report (default 30)")
    p.add_argument("--ipr-threshold", type=float, default=0.5,
                   help="concentration threshold separating local from global "
                        "modes (default 0.5)")
    p.add_argument("--out", required=True, help="output mode table CSV")

    p = sub.add_parser("sweep-d", help="compare delay orders on train/test data")
    p.add_argument("--train", required=True, help="training manifest JSON")
    p.add_argument("--test", required=True, help="test manifest JSON")
    p.add_argument("--d", required=True,
                   help="delay orders, e.g. 1:20 or 1,2,4,8")
    _add_rank_flags(p)
    p.add_argument("--center", choices=("on", "off"), default="on",
                   help="subtract the steady state before fitting (default on)")
    p.add_argument("--t-from", type=float, default=None,
                   help="score only samples with t >= this (e.g. the "
                        "post-fault ringdown start); the steady state is "
                        "still estimated from the full training records")
    p.add_argument("--out", required=True, help="output sweep CSV")

    p = sub.add_parser("noise", help="add SNR-calibrated Gaussian noise to a set")
    p.add_argument("--in", dest="manifest_in", required=True, help="input manifest JSON")
    p.add_argument("--snr-db", type=float, required=True,
                   help="signal-to-noise ratio in dB")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--manifest", default="manifest.json",
                   help="manifest filename inside the output directory")

    p = sub.add_parser("fft", help="magnitude spectrum of one channel")
    p.add_argument("--traj", required=True, help="trajectory CSV")
    p.add_argument("--channel", required=True, help="channel name, e.g. omega_3")
    p.add_argument("--window", choices=("hann", "none"), default="hann",
                   help="taper applied before the transform (default hann)")
    p.add_argument("--out", required=True, help="output spectrum CSV")

    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    net = load_network(args.network)
    fault = None
    if args.fault_bus is not None:
        fault = FaultSpec(bus=args.fault_bus, t_start=args.fault_start,
                          duration=args.fault_dur, mode=args.fault_mode,
                          magnitude=args.fault_mag)
    cfg = SimConfig(dt_out=args.dt, horizon=args.horizon, dt_int=args.dt_int)
    traj = simulate(net, fault, cfg)
    write_trajectory(traj, args.out)
    print(f"wrote {args.out} ({traj.n_samples} samples, {traj.schema.n_buses} buses)")
    return 0


def _cmd_scenarios(args: argparse.Namespace) -> int:
    net = load_network(args.network)
    buses = _parse_int_list(args.buses)
    cfg = SimConfig(dt_out=args.dt, horizon=args.horizon, dt_int=args.dt_int)
    template = FaultSpec(bus=buses[0], t_start=args.fault_start,
                         duration=args.fault_dur, mode=args.fault_mode,
                         magnitude=args.fault_mag)
    tset = generate_scenarios(net, buses, cfg, template)
    manifest = write_trajectory_set(tset, args.out, args.manifest)
    print(f"wrote {len(tset)} trajectories, manifest {manifest}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    tset = load_trajectory_set(args.train)
    steady = _steady_for(tset) if args.center == "on" else None
    if args.t_from is not None:
        tset = tset.window(args.t_from)
    pair = build_embedded_pair(tset, args.d, steady)
    model = fit(pair, _rank_spec(args))
    write_model(model, args.model, include_phi=True)
    print(f"wrote {args.model} (d={model.d}, r={model.r}, {model.n_modes} modes)")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    if args.metrics is not None and args.reference is None:
        raise _UsageError("--metrics requires --reference")
    if args.steps is None and args.reference is None:
        raise _UsageError("--steps is required when no --reference is given")
    model = load_model(args.model)
    init = load_trajectory(args.init)
    if args.t_from is not None:
        init = init.window(args.t_from)
    d = model.d
    if init.n_samples < d:
        raise DataError(f"initial trajectory has {init.n_samples} samples, need {d}")
    if init.schema != model.schema:
        raise DataError("initial trajectory channels do not match the model")
    t_first = init.t0 + (d - 1) * init.dt

    ref = None
    offset = 0
    if args.reference is not None:
        ref = load_trajectory(args.reference)
        if ref.schema != model.schema:
            raise DataError("reference channels do not match the model")
        offset_f = (t_first - ref.t0) / ref.dt
        offset = round(offset_f)
        if abs(offset_f - offset) > 1e-6 or offset < 0 or offset >= ref.n_samples:
            raise DataError("prediction start does not fall on the reference grid")

    steps = args.steps if args.steps is not None else ref.n_samples - offset
    pred = reconstruct(model, init.values[:, :d], steps, t0=t_first)

    report = None
    if ref is not None:
        overlap = min(steps, ref.n_samples - offset)
        if overlap < 1:
            raise DataError("prediction and reference do not overlap")
        ref_cut = replace(ref, values=ref.values[:, offset:offset + overlap],
                          t0=t_first, fault_time=None)
        pred_cut = replace(pred, values=pred.values[:, :overlap])
        if model.center is not None:
            xbar = model.center
        else:
            xbar = SteadyState(ref.values.mean(axis=1), source="reference_mean")
        err = rrmse(TrajectorySet((ref_cut,)), TrajectorySet((pred_cut,)), xbar)
        report = PredictionReport(d=model.d, r=model.r, rrmse_test=err,
                                  per_trajectory=(err,))

    write_trajectory(pred, args.out)
    if args.metrics is not None:
        doc = {"d": model.d, "r": model.r, "steps": int(steps),
               "rrmse": report.rrmse_test}
        tmp = args.metrics + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, args.metrics)
    msg = f"wrote {args.out} ({steps} samples)"
    if report is not None:
        msg += f", rrmse={report.rrmse_test:.6g}"
    print(msg)
    return 0


def _cmd_modes(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    summaries = rank_modes(model, args.top, ipr_threshold=args.ipr_threshold)
    write_mode_table(summaries, args.out)
    print(f"wrote {args.out} ({len(summaries)} modes)")
    return 0


def _cmd_sweep_d(args: argparse.Namespace) -> int:
    train = load_trajectory_set(args.train)
    test = load_trajectory_set(args.test)
    d_values = _parse_int_list(args.d)
    steady = _steady_for(train)
    if args.t_from is not None:
        train = train.window(args.t_from)
        test = test.window(args.t_from)
    report = sweep_order(train, test, d_values, _rank_spec(args),
                         steady=steady, center=args.center == "on")
    write_sweep_report(report, args.out)
    print(f"wrote {args.out} ({len(report.rows)} orders)")
    return 0


def _cmd_noise(args: argparse.Namespace) -> int:
    tset = load_trajectory_set(args.manifest_in)
    steady = _steady_for(tset)
    noisy = inject_noise(tset, args.snr_db, steady, args.seed)
    manifest = write_trajectory_set(noisy, args.out, args.manifest)
    print(f"wrote {len(noisy)} noisy trajectories, manifest {manifest}")
    return 0


def _cmd_fft(args: argparse.Namespace) -> int:
    traj = load_trajectory(args.traj)
    spectrum = fft_spectrum(traj, args.channel, window=args.window)
    tmp = args.out + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("frequency_hz,magnitude\n")
        for f, m in zip(spectrum.freqs, spectrum.magnitudes):
            fh.write(FLOAT_FORMAT % f + "," + FLOAT_FORMAT % m + "\n")
    os.replace(tmp, args.out)
    print(f"wrote {args.out} ({spectrum.freqs.size} bins, "
          f"resolution {spectrum.resolution:.6g} Hz)")
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate,
    "scenarios": _cmd_scenarios,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "modes": _cmd_modes,
    "sweep-d": _cmd_sweep_d,
    "noise": _cmd_noise,
    "fft": _cmd_fft,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except SystemExit as exc:  # argparse --help
        code = exc.code
        return int(code) if isinstance(code, int) else 0


def entrypoint() -> None:
    sys.exit(main())
