"""Command line interface: ``padicns {build-operator,kernels,verify,solve,converge}``.

Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from .grid import GridFunction
from .padic import GridParams

log = logging.getLogger("padicns")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _grid_args(p):
    p.add_argument("--p", type=int, help="prime")
    p.add_argument("--N", type=int, help="ball radius exponent")
    p.add_argument("--l", type=int, help="local constancy exponent")
    p.add_argument("--config", help="JSON file with default values for any option")
    p.add_argument("--seed", type=int, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padicns", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-operator", help="assemble D^alpha_N and write it as JSON")
    _grid_args(b)
    b.add_argument("--alpha", type=float)
    b.add_argument("--method", choices=("hypersingular", "spectral"), default="hypersingular")
    b.add_argument("--out", required=True)

    k = sub.add_parser("kernels", help="tabulate Z_N and G_N on the grid as CSV")
    _grid_args(k)
    k.add_argument("--alpha", type=float)
    k.add_argument("--t", type=float)
    k.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="estimate an inequality constant and write a report")
    _grid_args(v)
    v.add_argument("--inequality", choices=("prop3", "prop4", "vonwahl", "young"))
    v.add_argument("--alpha", type=float)
    v.add_argument("--beta", type=float)
    v.add_argument("--q", type=float)
    v.add_argument("--r", type=float)
    v.add_argument("--s", type=float)
    v.add_argument("--rho", type=float)
    v.add_argument("--h", type=float)
    v.add_argument("--theta", type=float)
    v.add_argument("--samples", type=int)
    v.add_argument("--no-refine", action="store_true", help="skip the l+1 refinement run")
    v.add_argument("--out", required=True)

    for name, text in (("solve", "integrate the Cauchy problem and write a trace CSV"),
                       ("converge", "dt-refinement study at fixed grid")):
        s = sub.add_parser(name, help=text)
        _grid_args(s)
        s.add_argument("--theta", type=float)
        s.add_argument("--dt", type=float)
        s.add_argument("--T", type=float)
        s.add_argument("--scheme", choices=("ETD1", "IMEX-EULER", "IMEX-RK2"))
        s.add_argument("--phi-kind", choices=("random", "mean-zero-random", "smooth", "constant", "indicator", "character"))
        s.add_argument("--phi-scale", type=float)
        s.add_argument("--phi-file", help="initial data as GridFunction JSON")
        s.add_argument("--blowup-threshold", type=float)
        s.add_argument("--record-every", type=int)
        s.add_argument("--nonlinear-sign", type=float, choices=(1.0, -1.0))
        s.add_argument("--out", required=True)
        if name == "solve":
            s.add_argument("--final-out", help="write the final state as GridFunction JSON")
        else:
            s.add_argument("--levels", type=int)
    return parser


class _Options:
    """Command-line values layered over a JSON config and built-in defaults."""

    def __init__(self, args, defaults):
        self.args = args
        self.config = {}
        if getattr(args, "config", None):
            try:
                with open(args.config) as fh:
                    self.config = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        self.defaults = defaults

    def get(self, name, required=False):
        val = getattr(self.args, name, None)
        if val is None:
            val = self.config.get(name, self.config.get(name.replace("_", "-")))
        if val is None:
            val = self.defaults.get(name)
        if val is None and required:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")
        return val

    def params(self) -> GridParams:
        return GridParams(int(self.get("p", True)), int(self.get("N", True)), int(self.get("l", True)))


def _initial_data(opts: _Options, params: GridParams) -> GridFunction:
    from .solver import initial_data

    if opts.args.phi_file:
        with open(opts.args.phi_file) as fh:
            phi = GridFunction.from_json(json.load(fh))
        if phi.params != params:
            raise UsageError(f"initial data grid {phi.params} does not match {params}")
        return phi
    spec = opts.config.get("phi", {})
    if "values" in spec:
        return GridFunction.from_json({"p": params.p, "N": params.N, "l": params.l, "values": spec["values"]})
    kind = opts.args.phi_kind or spec.get("kind") or "mean-zero-random"
    scale = opts.args.phi_scale if opts.args.phi_scale is not None else spec.get("scale", 0.01)
    seed = opts.args.seed if opts.args.seed is not None else spec.get("seed", opts.config.get("seed", 0))
    return initial_data(params, kind, seed=int(seed), scale=float(scale))


def _solver_config(opts: _Options, params: GridParams):
    from .solver import SolverConfig

    return SolverConfig(
        params=params,
        theta=float(opts.get("theta", True)),
        dt=float(opts.get("dt", True)),
        T=float(opts.get("T", True)),
        scheme=opts.get("scheme"),
        blowup_threshold=float(opts.get("blowup_threshold")),
        record_every=int(opts.get("record_every")),
        nonlinear_sign=float(opts.get("nonlinear_sign")),
    )


SOLVER_DEFAULTS = {"scheme": "IMEX-EULER", "blowup_threshold": 1e8, "record_every": 1, "nonlinear_sign": 1.0}


def cmd_build_operator(args) -> int:
    from .operators import build_hypersingular, build_spectral, summarize

    opts = _Options(args, {})
    params = opts.params()
    alpha = float(opts.get("alpha", True))
    build = build_hypersingular if opts.get("method") == "hypersingular" else build_spectral
    op = build(alpha, params)
    with open(args.out, "w") as fh:
        json.dump(summarize(op).to_json(), fh)
    log.info("wrote %s (dim %d)", args.out, params.dim)
    return EXIT_OK


def cmd_kernels(args) -> int:
    from .kernels import ball_heat_kernel, ball_kernel_Z
    from .padic import abs_exponents

    opts = _Options(args, {})
    params = opts.params()
    alpha, t = float(opts.get("alpha", True)), float(opts.get("t", True))
    z = ball_kernel_Z(alpha, t, params).real
    g = ball_heat_kernel(alpha, t, params).real
    j = abs_exponents(params)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["coset_index", "abs_value_exponent", "Z_N_value", "G_value"])
        for k in range(params.dim):
            w.writerow([k, "-inf" if math.isinf(j[k]) else int(j[k]), f"{z[k]:.17g}", f"{g[k]:.17g}"])
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import harness

    opts = _Options(args, {"samples": 2000, "seed": 0, "theta": 1.0, "h": 1.0})
    params = opts.params()
    which = opts.get("inequality", True)
    samples, seed = int(opts.get("samples")), int(opts.get("seed"))
    refine = not args.no_refine
    f = lambda name: float(opts.get(name, True))  # noqa: E731
    if which == "prop3":
        report = harness.verify_prop3(f("alpha"), f("beta"), f("q"), params, samples, seed, refine)
    elif which == "prop4":
        report = harness.verify_prop4(f("alpha"), f("beta"), f("q"), f("r"), params, samples, seed, refine)
    elif which == "young":
        report = harness.verify_young(f("alpha"), f("beta"), f("q"), f("r"), params, samples, seed)
    else:
        report = harness.von_wahl_constants(
            f("q"), f("r"), f("s"), f("rho"), f("h"), params, samples, seed, theta=f("theta")
        )
    harness.write_report(report, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    from .solver import solve_cauchy

    opts = _Options(args, SOLVER_DEFAULTS)
    params = opts.params()
    cfg = _solver_config(opts, params)
    phi = _initial_data(opts, params)
    trace = solve_cauchy(phi, cfg)
    with open(args.out, "w") as fh:
        fh.write(trace.to_csv())
    if args.final_out and trace.final is not None:
        with open(args.final_out, "w") as fh:
            json.dump(trace.final.to_json(), fh)
    if trace.status == "blowup":
        log.warning("blow-up: ||u||_inf crossed %g in %s", cfg.blowup_threshold, trace.blowup_bracket)
    if trace.status == "error":
        print(f"numerical failure: non-finite state after t={trace.last_valid_time}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_converge(args) -> int:
    from .solver import convergence_study

    opts = _Options(args, {**SOLVER_DEFAULTS, "levels": 4})
    params = opts.params()
    cfg = _solver_config(opts, params)
    table = convergence_study(_initial_data(opts, params), cfg, int(opts.get("levels")))
    with open(args.out, "w") as fh:
        fh.write(table.to_csv())
    return EXIT_OK


COMMANDS = {
    "build-operator": cmd_build_operator,
    "kernels": cmd_kernels,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "converge": cmd_converge,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, KeyError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
