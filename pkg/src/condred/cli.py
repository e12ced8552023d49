"""Command-line front end: solve, sweep, eikonal, report.

A thin shell over the library — every behavior here is reachable
through ordinary calls with identical results.  Exit codes: 0 success,
1 usage or configuration problems, 2 numerical failures (caustic
reached, step cap exceeded, decay checks violated).
"""

import argparse
import csv
import os
import sys

from .config import StudyConfig, load_config, make_amplitude, make_basis, \
    make_grid, make_phase
from .convergence import emit, report_from_json, run_study
from .dynamics import EQUATIONS, SolverParams, from_envelope, solve_envelope, \
    solve_gpe
from .eikonal import PhaseProvider
from .errors import CausticError, CondredError, NumericalError
from .fields import sample_initial, write_field_csv

ALPHA_ZERO_EQUATIONS = ("env_oscillatory", "env_limit")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="study configuration file (default: built-in "
                             "polarized_baseline)")
    common.add_argument("--eps", type=float, metavar="X",
                        help="override the fixed eps value")
    common.add_argument("--alpha", type=float, metavar="X",
                        help="override the fixed alpha value")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (default: from config)")
    common.add_argument("--format", choices=("csv", "json", "svg"),
                        help="emit a single report format")
    common.add_argument("--quiet", action="store_true",
                        help="suppress progress output")

    parser = argparse.ArgumentParser(
        prog="condred",
        description="Condensate-reduction solvers and their error diagram.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", parents=[common],
                             help="run one solver cell, write snapshots")
    p_solve.add_argument("--equation", choices=EQUATIONS, default="gpe_full",
                         help="which member of the hierarchy to run")
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="run the error study and emit reports")
    p_sweep.set_defaults(func=cmd_sweep)

    p_eik = sub.add_parser("eikonal", parents=[common],
                           help="transport the phase to t_final, write CSV")
    p_eik.set_defaults(func=cmd_eikonal)

    p_rep = sub.add_parser("report", parents=[common],
                           help="re-render a JSON report")
    p_rep.add_argument("report_json", metavar="in.json",
                       help="report file produced by sweep")
    p_rep.set_defaults(func=cmd_report)
    return parser


def _load_config(args):
    return load_config(args.config) if args.config else StudyConfig()


def _out_dir(args, cfg):
    out = args.out if args.out else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


def _say(args, message):
    if not args.quiet:
        print(message)


def cmd_solve(args):
    cfg = _load_config(args)
    equation = args.equation
    eps = args.eps if args.eps is not None else cfg.eps_fixed
    if args.alpha is not None:
        alpha = args.alpha
    else:
        alpha = 0.0 if equation in ALPHA_ZERO_EQUATIONS else cfg.alpha_fixed
    grid, basis = make_grid(cfg), make_basis(cfg)
    provider = PhaseProvider(grid, make_phase(cfg))
    a0 = sample_initial(make_amplitude(cfg), grid, basis)
    params = SolverParams(equation=equation, epsilon=eps, alpha=alpha,
                          t_final=cfg.t_final, dt_safety=cfg.dt_safety)
    if equation == "gpe_full":
        psi0 = from_envelope(a0, 0.0, provider(0.0), eps, alpha, basis)
        traj = solve_gpe(psi0, params, basis)
    else:
        traj = solve_envelope(a0, params, provider, basis)
    out = _out_dir(args, cfg)
    for idx, f in enumerate(traj.fields):
        write_field_csv(f, os.path.join(out, f"snapshot_{idx:03d}.csv"))
    _say(args, f"{equation} at eps = {eps}, alpha = {alpha}: "
               f"{len(traj.fields)} snapshots over t = [0, {cfg.t_final}] "
               f"written to {out} (dt = {traj.dt:.6g})")
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    report = run_study(cfg)
    out = _out_dir(args, cfg)
    formats = (args.format,) if args.format else cfg.formats
    for fmt in formats:
        path = emit(report, fmt, os.path.join(out, f"report.{fmt}"))
        _say(args, f"wrote {path}")
    for tag, fit in report.slopes.items():
        _say(args, f"{tag}: slope {fit.value:.3f} +/- {fit.stderr:.3f}")
    return 0


def cmd_eikonal(args):
    cfg = _load_config(args)
    grid = make_grid(cfg)
    provider = PhaseProvider(grid, make_phase(cfg))
    ph = provider(cfg.t_final)
    out = _out_dir(args, cfg)
    path = os.path.join(out, "phase.csv")
    n = grid.dim_n
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        coords = [f"x{a}" for a in range(n)] if n > 1 else ["x"]
        grads = [f"ds_dx{a}" for a in range(n)] if n > 1 else ["ds_dx"]
        writer.writerow(coords + ["s"] + grads + ["lap_s"])
        mesh = [m.reshape(-1) for m in grid.x_mesh()]
        flat_s = ph.s_values.reshape(-1)
        flat_lap = ph.lap_s.reshape(-1)
        flat_grad = ph.grad_s.reshape(-1, n)
        for i in range(flat_s.size):
            row = [repr(float(m[i])) for m in mesh]
            row += [repr(float(flat_s[i]))]
            row += [repr(float(flat_grad[i, a])) for a in range(n)]
            row += [repr(float(flat_lap[i]))]
            writer.writerow(row)
    _say(args, f"phase at t = {cfg.t_final} written to {path} "
               f"(min Jacobian {ph.min_jacobian:.4f})")
    return 0


def cmd_report(args):
    with open(args.report_json, encoding="utf-8") as fh:
        report = report_from_json(fh.read())
    out = args.out if args.out else "."
    fmt = args.format if args.format else "svg"
    path = emit(report, fmt, os.path.join(out, f"report.{fmt}"))
    _say(args, f"wrote {path}")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except CausticError as exc:
        print(f"condred: caustic reached: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"condred: numerical failure: {exc}", file=sys.stderr)
        return 2
    except CondredError as exc:
        print(f"condred: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"condred: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
