"""Command-line interface: ``voltstab {fit,pv,modal,simulate}``."""
import argparse
import contextlib
import os
import sys

import numpy as np

from . import __version__
from .continuation import DEFAULT_TAPS, default_grid, trace_manifold, write_curves
from .loadmodel import (PRESETS, fit_quadratic, load_model, preset, read_measurements,
                        reactive_sign_crossings, save_model)
from .modal import DEFAULT_TAU, OltcParams, classify_curve
from .network import NetworkError, NetworkParams, Params, upper_branch_state
from .svgplot import pv_figure, trajectory_figure
from .tdsim import SimConfig, Trajectory, simulate, write_trajectory


class CliError(Exception):
    pass


def _positive(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _nonnegative(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _taps(text):
    parts = [s for s in text.replace(" ", "").split(",") if s]
    if not parts:
        raise argparse.ArgumentTypeError("tap list is empty")
    return [_positive(s) for s in parts]


def _network_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("network")
    g.add_argument("--x-ohm", type=_positive, default=40.0, help="line reactance [ohm] (default 40)")
    g.add_argument("--v-base", type=_positive, default=100e3, help="base voltage [V] (default 100e3)")
    g.add_argument("--s-base", type=_positive, default=100e6, help="base power [W] (default 100e6)")
    g.add_argument("--v1", type=_positive, default=1.0, help="source voltage [pu] (default 1)")
    g.add_argument("--model", default="aircon",
                   help="load preset (" + ", ".join(p.replace("_", "-") for p in PRESETS)
                   + ") or path to a model JSON file")
    return p


def _curve_flags():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("sweep")
    g.add_argument("--taps", type=_taps, default=list(DEFAULT_TAPS),
                   help="comma-separated tap ratios")
    g.add_argument("--v-min", type=_positive, default=0.05, help="lowest load voltage [pu]")
    g.add_argument("--v-max", type=_positive, default=None,
                   help="highest load voltage [pu] (default 0.999*V1/N)")
    g.add_argument("--v-step", type=_positive, default=1e-3, help="voltage step [pu]")
    return p


def _output_flags():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.add_argument("--svg", default=None, help="also write an SVG plot here")
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voltstab", description="Voltage stability with tap changers and nonlinear loads")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a quadratic load model to measurements")
    fit.add_argument("input", help="CSV with voltage_V,active_power_W,reactive_power_var")
    fit.add_argument("--v-nominal", type=_positive, default=230.0, help="nominal voltage [V]")
    fit.add_argument("--p-nominal", type=float, default=None,
                     help="nominal active power [W]; default: sample nearest V_n")
    fit.add_argument("--q-nominal", type=float, default=None,
                     help="nominal reactive power [var]; default: sample nearest V_n")
    fit.add_argument("--out", required=True, help="model JSON to write")

    net, curve, out = _network_flags(), _curve_flags(), _output_flags()
    sub.add_parser("pv", parents=[net, curve, out], help="trace P-V manifolds")
    modal = sub.add_parser("modal", parents=[net, curve, out],
                           help="trace and classify manifolds by OLTC eigenvalue")
    modal.add_argument("--tau", type=_positive, default=DEFAULT_TAU, help="OLTC time constant [s]")

    sim = sub.add_parser("simulate", parents=[net, out], help="time-domain OLTC simulation")
    sim.add_argument("--alpha", type=_nonnegative, required=True, help="loading factor")
    sim.add_argument("--n0", type=_positive, default=1.0, help="initial tap ratio")
    sim.add_argument("--vref", type=_positive, default=None,
                     help="regulation target [pu] (default: initial load voltage)")
    sim.add_argument("--tau", type=_positive, default=DEFAULT_TAU, help="OLTC time constant [s]")
    sim.add_argument("--t-end", type=_positive, default=None, help="end time [s] (default 50*tau)")
    sim.add_argument("--dt", type=_positive, default=None, help="step [s] (default tau/100)")
    return parser


def _load(selector):
    key = selector.replace("-", "_").lower()
    if key in PRESETS:
        return preset(key)
    if os.path.exists(selector):
        return load_model(selector)
    raise CliError(f"unknown model {selector!r}: not a preset and no such file")


def _network(args):
    return NetworkParams.from_physical(args.x_ohm, args.v_base, args.s_base, args.v1)


@contextlib.contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            yield fh


def _manifolds(args, net, load):
    out = []
    for tap in args.taps:
        grid = default_grid(net, tap, args.v_min, args.v_max, args.v_step)
        out.append(trace_manifold(net, load, tap, grid))
    return out


def cmd_fit(args):
    samples = read_measurements(args.input)
    model, report = fit_quadratic(samples, args.v_nominal, args.p_nominal, args.q_nominal)
    save_model(args.out, model)
    for line in report.lines(reactive_sign_crossings(model)):
        print(line)
    return 0


def cmd_pv(args):
    net, load = _network(args), _load(args.model)
    manifolds = _manifolds(args, net, load)
    with _open_out(args.out) as fh:
        write_curves(fh, manifolds)
    if args.svg:
        pv_figure(manifolds, f"P-V manifolds ({load.name})").save(args.svg)
    return 0


def cmd_modal(args):
    net, load = _network(args), _load(args.model)
    oltc = OltcParams(args.tau)
    manifolds = [classify_curve(m, net, load, oltc) for m in _manifolds(args, net, load)]
    with _open_out(args.out) as fh:
        write_curves(fh, manifolds, modal=True)
    if args.svg:
        pv_figure(manifolds, f"OLTC modal analysis ({load.name})", modal=True).save(args.svg)
    return 0


def cmd_simulate(args):
    net, load = _network(args), _load(args.model)
    tau = args.tau
    dt = args.dt if args.dt is not None else tau / 100.0
    t_end = args.t_end if args.t_end is not None else 50.0 * tau
    seed = upper_branch_state(Params(args.alpha, args.n0), net, load)
    if seed is None:
        # No steady state at the starting point: collapse before the first step.
        empty = np.empty(0)
        traj = Trajectory(empty, empty, empty, empty, empty, collapsed=True)
        with _open_out(args.out) as fh:
            write_trajectory(fh, traj)
        print(f"voltstab: no steady state at alpha={args.alpha:g}, N={args.n0:g}: "
              "voltage collapse", file=sys.stderr)
        return 0
    vref = args.vref if args.vref is not None else abs(seed.vl)
    cfg = SimConfig(args.alpha, args.n0, OltcParams(tau, vref), t_end, dt, seed)
    traj = simulate(cfg, net, load)
    with _open_out(args.out) as fh:
        write_trajectory(fh, traj)
    if args.svg:
        trajectory_figure(traj).save(args.svg)
    return 0


COMMANDS = {"fit": cmd_fit, "pv": cmd_pv, "modal": cmd_modal, "simulate": cmd_simulate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, NetworkError, ValueError, KeyError, OSError, ArithmeticError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"voltstab {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
