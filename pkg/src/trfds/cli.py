"""Command-line interface: ``trfds solve | bench | diagnose | calibrate``.

Exit status is 0 on success, 1 on a usage error and 2 when the solver or the
objective oracle fails. A flat ``key=value`` file given with ``--config``
supplies defaults for any flag; flags on the command line take precedence.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bench, odecalib, registry
from .driver import Mode, default_config, solve
from .fdgrad import forward_gradient, initial_tau
from .problem import FeasibleSet, Problem
from .stationarity import eta_measure, measure_gap

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace(",", " ").split()], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _names(text: str) -> list:
    return [v for v in text.replace(",", " ").split() if v]


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _solver_flags(p):
    p.add_argument("--budget", type=int, help="budget in simplex gradients (n+1 evaluations each)")
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta0", type=float)
    p.add_argument("--delta-max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trfds", description="Finite-difference trust-region solver")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="minimize a built-in problem or an external oracle")
    s.add_argument("--problem", help=f"one of: {', '.join(registry.list_problems())}")
    s.add_argument("--oracle-cmd", help="command reading points on stdin and writing values on stdout")
    s.add_argument("--x0", type=_floats)
    s.add_argument("--lower", type=_floats)
    s.add_argument("--upper", type=_floats)
    s.add_argument("--timeout", type=float)
    _solver_flags(s)

    b = sub.add_parser("bench", help="run the benchmark suite and write data profiles")
    b.add_argument("--problems", type=_names, help="problem names, or 'mw' for the bounded More-Wild subset")
    b.add_argument("--budget", type=int)
    b.add_argument("--tolerances", type=_floats)
    b.add_argument("--seed", type=int)
    b.add_argument("--workers", type=int)

    d = sub.add_parser("diagnose", help="report stationarity measures at a point")
    d.add_argument("--problem")
    d.add_argument("--x", type=_floats)
    d.add_argument("--r", type=float)
    d.add_argument("--tau", type=float)
    d.add_argument("--lower", type=_floats)
    d.add_argument("--upper", type=_floats)

    c = sub.add_parser("calibrate", help="fit the predator-prey model to synthetic data")
    c.add_argument("--seed", type=int)
    c.add_argument("--budget", type=int, help="budget in evaluations")
    c.add_argument("--noise-scale", type=float)
    for flag in ("--epsilon", "--sigma", "--alpha", "--delta0", "--delta-max"):
        c.add_argument(flag, type=float)

    for p in (s, b, d, c):
        p.add_argument("--out-dir", type=Path)
        p.add_argument("--config", type=Path, help="key=value file supplying flag defaults")
    parser.subcommands = {"solve": s, "bench": b, "diagnose": d, "calibrate": c}
    return parser


def _apply_config_file(args, parser):
    if args.config is None:
        return
    actions = {a.dest: a for a in parser.subcommands[args.command]._actions}
    for key, text in read_config_file(args.config).items():
        if key not in actions or key in ("help", "config"):
            raise UsageError(f"{args.config}: unknown key {key!r} for '{args.command}'")
        if getattr(args, key) is not None:
            continue  # command line wins
        action = actions[key]
        try:
            value = action.type(text) if action.type else text
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{args.config}: bad value for {key}: {exc}")
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{args.config}: {key} must be one of {sorted(action.choices)}")
        setattr(args, key, value)


def _out_dir(args) -> Path:
    out = Path(".") if args.out_dir is None else args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_overrides(args) -> dict:
    out = {}
    for key in ("epsilon", "sigma", "alpha", "delta0", "delta_max"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    if getattr(args, "mode", None) is not None:
        out["mode"] = Mode(args.mode)
    if getattr(args, "budget", None) is not None:
        out["budget_simplex_gradients"] = args.budget
    return out


def _box(args, n):
    if args.lower is None and args.upper is None:
        return None
    lower = np.full(n, -math.inf) if args.lower is None else np.broadcast_to(args.lower, n).astype(float)
    upper = np.full(n, math.inf) if args.upper is None else np.broadcast_to(args.upper, n).astype(float)
    try:
        return FeasibleSet.box(lower, upper)
    except ValueError as exc:
        raise UsageError(str(exc))


def _registry_problem(name):
    if name is None:
        raise UsageError("--problem is required")
    try:
        return registry.get_problem(name)
    except KeyError as exc:
        raise UsageError(exc.args[0])


def _summary(lines):
    for key, value in lines:
        print(f"{key}={value}")


def cmd_solve(args) -> int:
    from .oracle import subprocess_oracle

    oracle = None
    if args.oracle_cmd is not None:
        if args.x0 is None:
            raise UsageError("--oracle-cmd requires --x0")
        oracle = subprocess_oracle(args.oracle_cmd, timeout=60.0 if args.timeout is None else args.timeout)
        problem = Problem(oracle, args.x0, name="oracle")
    else:
        problem = _registry_problem(args.problem)
        if args.x0 is not None:
            if args.x0.size != problem.n:
                raise UsageError(f"--x0 has {args.x0.size} entries, problem has dimension {problem.n}")
            problem = problem.copy(x0=args.x0)
    n = problem.n
    overrides = _config_overrides(args)
    mode = overrides.get("mode", Mode.RELAXABLE)
    box = _box(args, n)
    if box is not None:
        problem = problem.with_set(box, unrelaxable=mode == Mode.UNRELAXABLE)
    elif mode == Mode.UNRELAXABLE and problem.feasible_set.kind != "box":
        raise UsageError("--mode unrelaxable needs --lower/--upper bounds")
    try:
        config = default_config(n, **overrides)
        config.validate(n)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver parameters: {exc}")
    out = _out_dir(args)
    try:
        record = solve(problem, config)
    except Exception as exc:
        record = getattr(exc, "run_record", None)
        if record is not None:
            record.write_history_csv(out / "history.csv")
            record.write_iterations_csv(out / "iterations.csv")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        if oracle is not None:
            oracle.close()
    record.write_history_csv(out / "history.csv")
    record.write_iterations_csv(out / "iterations.csv")
    _summary([
        ("problem", problem.name), ("n", n), ("termination", record.termination.value),
        ("evals", record.evals), ("f_best", repr(record.f_best)),
        ("x_best", ",".join(repr(float(v)) for v in record.x_best)),
    ])
    return EXIT_OK


def cmd_bench(args) -> int:
    names = args.problems or ["mw"]
    problems = []
    for name in names:
        if name == "mw":
            problems.extend(registry.more_wild_subset())
        else:
            problems.append(_registry_problem(name))
    budget = 100 if args.budget is None else args.budget
    if budget < 1:
        raise UsageError("--budget must be positive")
    tolerances = bench.DEFAULT_TOLERANCES if args.tolerances is None else tuple(args.tolerances)
    if any(not 0 < t < 1 for t in tolerances):
        raise UsageError("tolerances must lie in (0, 1)")
    out = _out_dir(args)
    records = bench.run_suite(problems, budget_simplex=budget, seed=0 if args.seed is None else args.seed,
                              workers=args.workers)
    bench.write_summary_csv(records, out / "summary.csv")
    for tol in tolerances:
        profile = bench.data_profile(records, bench.ConvergenceTest(tol))
        bench.render_profile(profile, out / f"profile_tol{tol:.0e}")
    failed = [r for r in records if r.error]
    _summary([("runs", len(records)), ("failed", len(failed)), ("out_dir", out)])
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_diagnose(args) -> int:
    problem = _registry_problem(args.problem)
    n = problem.n
    box = _box(args, n)
    if box is not None:
        problem = problem.with_set(box)
    x = problem.x0 if args.x is None else args.x
    if x.size != n:
        raise UsageError(f"--x has {x.size} entries, problem has dimension {n}")
    x = problem.feasible_set.project(x)
    cfg = default_config(n)
    r = cfg.delta_max if args.r is None else args.r
    tau = initial_tau(cfg.epsilon, cfg.sigma, n) if args.tau is None else args.tau
    if not (r > 0 and tau > 0):
        raise UsageError("--r and --tau must be positive")
    fx = problem.evaluate(x)
    g = forward_gradient(problem, x, tau, fx).g
    if problem.exact_gradient is not None and problem.lipschitz is not None:
        report = measure_gap(problem, x, g, r, tau, problem.lipschitz)
        lines = report.lines()
    else:
        lines = [f"r={r!r}", f"eta={eta_measure(g, x, problem.feasible_set, r)!r}"]
    print(f"problem={problem.name}")
    print(f"tau={tau!r}")
    for line in lines:
        print(line)
    return EXIT_OK


def cmd_calibrate(args) -> int:
    seed = 0 if args.seed is None else args.seed
    budget = odecalib.DEFAULT_BUDGET if args.budget is None else args.budget
    noise = odecalib.NOISE_SCALE if args.noise_scale is None else args.noise_scale
    if budget < 1 or noise < 0:
        raise UsageError("--budget must be positive and --noise-scale nonnegative")
    overrides = _config_overrides(args)
    try:
        default_config(6, mode=Mode.UNRELAXABLE, max_evals=budget, **overrides).validate(6)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid solver parameters: {exc}")
    out = _out_dir(args)
    dataset = odecalib.make_dataset(seed=seed, noise_scale=noise)
    dataset.write_csv(out / "dataset.csv")
    try:
        result = odecalib.calibrate(dataset, budget_evals=budget, **overrides)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    odecalib.write_fit_csv(dataset, result.params, out / "fit.csv")
    odecalib.write_decrease_csv(result.record, out / "decrease.csv")
    _summary([
        ("seed", seed), ("evals", result.record.evals), ("f0", repr(result.f0)),
        ("f_best", repr(result.record.f_best)),
        ("params", ",".join(repr(float(v)) for v in result.params.as_array())),
    ])
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "diagnose": cmd_diagnose, "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config_file(args, parser)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
