"""Command-line interface: ``commuprop check|decompose|solve|evolve SPEC``.

SPEC is a JSON file holding either a generator::

    {"n": 2, "interval": [-1, 2], "terms": [{"coeff": "t", "matrix": {...}}]}

or a quantum problem::

    {"problem": "example1", "params": {"gamma": 1, "a1": "sin(t)"}, "rho0": {...}}

Exit codes: 0 success / commutative, 1 negative verdict or refusal,
2 usage, parse or I/O error.
"""

import argparse
import json
import sys

import numpy as np

from . import quantum
from .commutativity import (
    DEFAULT_GRID,
    as_spatial_decomposition,
    check_functional_commutativity,
    martin_decompose,
)
from .errors import CommupropError, NotCommutativeError, UnphysicalStateError
from .generator import generator_from_json
from .linalg import frob_norm, matrix_from_json
from .solver import METHODS, RK4_STEPS_PER_UNIT, Propagator, trajectory

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _complex_param(value):
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace("i", "j"))
    return complex(value)


_EXAMPLE_PARAMS = {
    "example1": ("gamma", "a1", "a2", "a3", "interval"),
    "example2": ("mu", "gamma", "eps", "c00", "c01", "c10", "c11", "interval"),
}


def load_spec(path):
    """Return ``(generator, problem_or_None, rho0_or_None, raw_json)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError("spec must be a JSON object")

    problem = None
    if "problem" in raw:
        kind = raw["problem"]
        params = dict(raw.get("params", {}))
        if kind in _EXAMPLE_PARAMS:
            unknown = set(params) - set(_EXAMPLE_PARAMS[kind])
            if unknown:
                raise UsageError(f"unknown parameters for {kind}: {sorted(unknown)}")
            if "interval" in params:
                params["interval"] = tuple(params["interval"])
            if kind == "example1" and "gamma" in params:
                params["gamma"] = _complex_param(params["gamma"])
            builder = quantum.example1 if kind == "example1" else quantum.example2
            problem = builder(**params)
            gen = problem.generator
        elif kind == "custom":
            if "generator" not in raw:
                raise UsageError("custom problems need a 'generator' object")
            gen = generator_from_json(raw["generator"])
            problem = quantum.QuantumProblem("custom", gen)
        else:
            raise UsageError(f"unknown problem {kind!r}")
    elif "terms" in raw:
        gen = generator_from_json(raw)
    else:
        raise UsageError("spec needs either 'terms' (generator) or 'problem'")

    rho0 = None
    if "rho0" in raw:
        rho0 = matrix_from_json(raw["rho0"])
    return gen, problem, rho0, raw


def parse_times(text, raw=None):
    if raw is not None and "times" in raw and text is None:
        spec = raw["times"]
        if isinstance(spec, dict):
            return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        return np.array([float(x) for x in spec])
    text = text or "0:2:21"
    try:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num))
    except ValueError:
        raise UsageError(f"--times expects start:stop:count, got {text!r}") from None


def _dump(obj):
    return json.dumps(obj, indent=2) + "\n"


def _emit(obj, out):
    text = _dump(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _decomposition_for(gen, problem):
    if problem is not None and problem.decomposition is not None:
        return problem.decomposition
    return as_spatial_decomposition(gen)


def build_propagator(method, gen, problem, report, steps):
    if method == "rk4":
        return Propagator.rk4(gen, steps)
    if not report.is_commutative:
        raise NotCommutativeError(
            f"method {method!r} needs a functionally commutative generator "
            f"(witness {list(report.witness_pair)}, norm {report.witness_norm:.6g})"
        )
    if method == "exact":
        return Propagator.exact(gen, report)
    return Propagator.zhu(_decomposition_for(gen, problem))


def cmd_check(args):
    gen, _, _, _ = load_spec(args.spec)
    report = check_functional_commutativity(gen, args.grid, args.tol)
    _emit(report.to_json(), None)
    return EXIT_OK if report.is_commutative else EXIT_NEGATIVE


def cmd_decompose(args):
    gen, _, _, _ = load_spec(args.spec)
    report = check_functional_commutativity(gen, args.grid, args.tol)
    if not report.is_commutative:
        raise NotCommutativeError("generator is not functionally commutative; no decomposition")
    dec = martin_decompose(gen, args.grid, args.tol)
    _emit(dec.to_json(), args.out)
    return EXIT_OK


def _methods_needed(args):
    if args.method not in METHODS:
        raise UsageError(f"--method must be one of {METHODS}")
    compare = []
    if args.compare:
        compare = [m.strip() for m in args.compare.split(",")]
        if len(compare) != 2 or any(m not in METHODS for m in compare):
            raise UsageError("--compare expects two methods, e.g. zhu,rk4")
    return compare


def cmd_solve(args):
    compare = _methods_needed(args)
    gen, problem, _, raw = load_spec(args.spec)
    times = parse_times(args.times, raw)
    report = check_functional_commutativity(gen, args.grid, args.tol)
    props = {
        m: build_propagator(m, gen, problem, report, args.steps)
        for m in dict.fromkeys([args.method] + compare)
    }
    trajs = {m: trajectory(p, times, parallel=args.parallel) for m, p in props.items()}
    main = trajs[args.method]
    summary = {"method": args.method, "rows": len(main), "commutative": report.is_commutative}
    if compare:
        a, b = trajs[compare[0]], trajs[compare[1]]
        summary["compare"] = compare
        summary["max_residual"] = max(frob_norm(x - y) for x, y in zip(a.values, b.values))
    if args.out:
        main.to_csv(args.out + ".csv")
        _emit(main.to_json(), args.out + ".json")
        summary["csv"] = args.out + ".csv"
        summary["json"] = args.out + ".json"
        sys.stdout.write(_dump(summary))
    else:
        sys.stdout.write(main.to_csv())
        sys.stderr.write(_dump(summary))
    return EXIT_OK


def cmd_evolve(args):
    if args.method not in METHODS:
        raise UsageError(f"--method must be one of {METHODS}")
    gen, problem, rho0, raw = load_spec(args.spec)
    if rho0 is None:
        raise UsageError("evolve needs 'rho0' in the spec")
    try:
        rho0 = quantum.density_matrix(rho0)
    except UnphysicalStateError as exc:
        raise UsageError(f"invalid initial state: {exc}") from None
    times = parse_times(args.times, raw)
    report = check_functional_commutativity(gen, args.grid, args.tol)
    prop = build_propagator(args.method, gen, problem, report, args.steps)
    traj = quantum.evolve_state(prop, rho0, times, allow_unphysical=args.allow_unphysical)
    summary = {
        "method": args.method,
        "rows": len(traj),
        "max_trace_defect": float(np.max(traj.extra["trace_defect"])),
        "min_eigenvalue": float(np.min(traj.extra["min_eig"])),
        "max_hermiticity_defect": float(np.max(traj.extra["hermiticity_defect"])),
    }
    if args.out:
        traj.to_csv(args.out + ".csv")
        _emit(traj.to_json(), args.out + ".json")
        summary["csv"] = args.out + ".csv"
        summary["json"] = args.out + ".json"
        sys.stdout.write(_dump(summary))
    else:
        sys.stdout.write(traj.to_csv())
        sys.stderr.write(_dump(summary))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="commuprop",
        description="Propagators for functionally commutative linear ODEs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("spec", help="generator or quantum-problem JSON file")
        p.add_argument("--grid", type=int, default=DEFAULT_GRID, help="sample points for the checks")
        p.add_argument("--tol", type=float, help="commutativity tolerance (default 1e-9 or $COMMUPROP_TOL)")
        return p

    common(sub.add_parser("check", help="test functional commutativity")).set_defaults(func=cmd_check)

    p = common(sub.add_parser("decompose", help="sampled basis of commuting matrices"))
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_decompose)

    for name, func, helptext in (
        ("solve", cmd_solve, "fundamental solution along a time grid"),
        ("evolve", cmd_evolve, "evolve the initial state rho0"),
    ):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--method", default="zhu", help="exact, zhu or rk4 (default zhu)")
        p.add_argument("--steps", type=int, default=RK4_STEPS_PER_UNIT, help="RK4 steps per unit time")
        p.add_argument("--times", help="start:stop:count (default 0:2:21)")
        p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
        p.add_argument("--parallel", action="store_true", help="evaluate time points in threads")
        if name == "solve":
            p.add_argument("--compare", help="two methods to cross-check, e.g. zhu,rk4")
        else:
            p.add_argument("--allow-unphysical", action="store_true")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (NotCommutativeError, UnphysicalStateError) as exc:
        sys.stderr.write(f"commuprop: {exc}\n")
        return EXIT_NEGATIVE
    except (UsageError, CommupropError, ValueError, KeyError, TypeError, OSError) as exc:
        sys.stderr.write(f"commuprop: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
