"""Benchmark runner and data profiles.

Budgets are measured in simplex gradients: one unit is ``n + 1`` function
evaluations for an n-dimensional problem. A run solves a problem at
evaluation t when its best value so far satisfies

    f0 - f_t >= (1 - tolerance) * (f0 - f_best),

with ``f_best`` the lowest value found on that problem by any solver in the
comparison.
"""
from __future__ import annotations

import csv
import math
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .driver import Mode, RunRecord, default_config, solve
from .problem import BOX

DEFAULT_TOLERANCES = (1e-1, 1e-3, 1e-5, 1e-7)


@dataclass(frozen=True)
class SolverSpec:
    """A named solver variant; ``options`` are :func:`default_config` overrides.

    With ``mode="relaxable"`` a box is treated as relaxable even when the
    problem declares it unrelaxable, so the two modes can be compared on the
    same box.
    """

    name: str
    options: tuple = ()

    @classmethod
    def make(cls, name: str, **options) -> "SolverSpec":
        return cls(name, tuple(sorted(options.items())))


DEFAULT_SOLVERS = (
    SolverSpec.make("unrelaxable", mode="unrelaxable"),
    SolverSpec.make("relaxable", mode="relaxable"),
    SolverSpec.make("cauchy", mode="unrelaxable", subproblem="cauchy"),
)


@dataclass
class ConvergenceTest:
    tolerance: float
    f0: float = math.nan
    f_best: float = math.nan

    def __post_init__(self):
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")

    def satisfied(self, f: float) -> bool:
        return self.f0 - f >= (1.0 - self.tolerance) * (self.f0 - self.f_best)

    def first_solved(self, best_so_far) -> Optional[int]:
        """1-based evaluation index at which the test is first met, or None."""
        best = np.asarray(best_so_far, dtype=float)
        hits = np.flatnonzero(self.f0 - best >= (1.0 - self.tolerance) * (self.f0 - self.f_best))
        return int(hits[0]) + 1 if hits.size else None


@dataclass
class DataProfile:
    alphas: np.ndarray
    fractions: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict)
    tolerance: Optional[float] = None

    @property
    def solvers(self) -> list:
        return list(self.fractions)

    def __eq__(self, other):
        if not isinstance(other, DataProfile):
            return NotImplemented
        return (
            np.array_equal(self.alphas, other.alphas)
            and self.solvers == other.solvers
            and all(np.array_equal(self.fractions[s], other.fractions[s]) for s in self.solvers)
        )


def _run_one(problem, spec: SolverSpec, budget_simplex: int) -> RunRecord:
    options = dict(spec.options)
    relaxed = Mode(options.get("mode", Mode.RELAXABLE)) == Mode.RELAXABLE
    if relaxed and problem.unrelaxable:
        problem = problem.copy(unrelaxable=False)
    elif not relaxed and problem.feasible_set.kind != BOX:
        options["mode"] = Mode.RELAXABLE  # nothing to keep unrelaxable
    config = default_config(problem.n, budget_simplex_gradients=budget_simplex, **options)
    try:
        return solve(problem, config, solver_name=spec.name)
    except Exception as exc:  # recorded; the suite continues
        record = getattr(exc, "run_record", None)
        if record is None:
            record = RunRecord(problem=problem.name, solver=spec.name, n=problem.n, error=f"{type(exc).__name__}: {exc}")
        return record


def run_suite(problems, solvers=DEFAULT_SOLVERS, budget_simplex: int = 100, seed: int = 0,
              workers: Optional[int] = None, jitter: float = 0.0) -> list:
    """Run every solver on every problem.

    Parameters
    ----------
    problems : list of Problem
    solvers : list of SolverSpec
    budget_simplex : int
        Per-run budget in simplex gradients.
    seed : int
        Seeds the optional start-point perturbation ``jitter * N(0, I)``
        (projected back onto the feasible set); with ``jitter=0`` the runs do
        not depend on it.
    workers : int, optional
        Thread-pool size; results are returned in (problem, solver) order
        regardless.

    Returns
    -------
    list of RunRecord
    """
    problems = list(problems)
    solvers = list(solvers)
    if not problems or not solvers:
        raise ValueError("need at least one problem and one solver")
    jobs = []
    for i, p in enumerate(problems):
        x0 = p.x0
        if jitter:
            rng = np.random.default_rng([seed, i])
            x0 = p.feasible_set.project(x0 + jitter * rng.standard_normal(p.n))
        for spec in solvers:
            jobs.append((p.copy(x0=x0), spec))
    if workers == 1:
        return [_run_one(p, s, budget_simplex) for p, s in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _run_one(job[0], job[1], budget_simplex), jobs))


def data_profile(records, test: ConvergenceTest, alphas=None) -> DataProfile:
    """Fraction of problems solved by each solver within ``alpha`` simplex gradients.

    ``test.tolerance`` is used; ``f0`` and ``f_best`` are recomputed per
    problem from the records. Without an explicit grid the profile is
    evaluated at 0, at every solve time and at the largest budget used, which
    captures every step exactly.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to profile")
    by_problem: "OrderedDict[str, list]" = OrderedDict()
    solvers: list = []
    for rec in records:
        by_problem.setdefault(rec.problem, []).append(rec)
        if rec.solver not in solvers:
            solvers.append(rec.solver)
    solve_alpha = {s: [] for s in solvers}
    max_alpha = 0.0
    for name, recs in by_problem.items():
        histories = [r.best_so_far for r in recs]
        starts = [h[0] for h in histories if h.size]
        if not starts:
            for r in recs:
                solve_alpha[r.solver].append(math.inf)
            continue
        f0 = starts[0]
        f_best = min(float(np.min(h)) for h in histories if h.size)
        t = ConvergenceTest(test.tolerance, f0=f0, f_best=f_best)
        for r, h in zip(recs, histories):
            unit = r.n + 1
            max_alpha = max(max_alpha, h.size / unit)
            hit = t.first_solved(h) if h.size else None
            solve_alpha[r.solver].append(math.inf if hit is None else hit / unit)
    n_problems = len(by_problem)
    if alphas is None:
        pts = {0.0, max_alpha}
        for vals in solve_alpha.values():
            pts.update(v for v in vals if math.isfinite(v))
        alphas = np.array(sorted(pts))
    else:
        alphas = np.asarray(alphas, dtype=float)
    fractions = OrderedDict()
    for s in solvers:
        vals = np.array(solve_alpha[s])
        fractions[s] = np.array([np.count_nonzero(vals <= a) / n_problems for a in alphas])
    return DataProfile(alphas=alphas, fractions=fractions, tolerance=test.tolerance)


def write_profile_csv(profile: DataProfile, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "solver", "fraction"])
        for s in profile.solvers:
            for a, frac in zip(profile.alphas, profile.fractions[s]):
                w.writerow([repr(float(a)), s, repr(float(frac))])
    return path


def read_profile_csv(path) -> DataProfile:
    rows: "OrderedDict[str, list]" = OrderedDict()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            rows.setdefault(row["solver"], []).append((float(row["alpha"]), float(row["fraction"])))
    if not rows:
        raise ValueError(f"{path}: empty profile")
    first = next(iter(rows.values()))
    alphas = np.array([a for a, _ in first])
    fractions = OrderedDict((s, np.array([f for _, f in v])) for s, v in rows.items())
    return DataProfile(alphas=alphas, fractions=fractions)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _svg(profile: DataProfile) -> str:
    width, height, pad = 480, 320, 40
    a_max = float(profile.alphas.max()) or 1.0

    def px(a):
        return pad + (width - 2 * pad) * a / a_max

    def py(frac):
        return height - pad - (height - 2 * pad) * frac

    title = "data profile" if profile.tolerance is None else f"data profile, tolerance {profile.tolerance:g}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{title}</text>',
        f'<line class="axis" x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line class="axis" x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="11">simplex gradients (max {a_max:g})</text>',
    ]
    for i, s in enumerate(profile.solvers):
        fr = profile.fractions[s]
        cmds = [f"M{px(profile.alphas[0]):.3f},{py(fr[0]):.3f}"]
        for j in range(1, profile.alphas.size):
            cmds.append(f"H{px(profile.alphas[j]):.3f}")
            cmds.append(f"V{py(fr[j]):.3f}")
        color = _COLORS[i % len(_COLORS)]
        parts.append(f'<path class="step" data-solver="{s}" d="{" ".join(cmds)}" fill="none" stroke="{color}"/>')
        parts.append(f'<text x="{width - pad - 100}" y="{pad + 14 * (i + 1)}" font-size="11" fill="{color}">{s}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_profile(profile: DataProfile, path) -> tuple:
    """Write ``<path>.csv`` (``alpha,solver,fraction``) and ``<path>.svg``.

    Returns the two paths.
    """
    if not profile.solvers or profile.alphas.size == 0:
        raise ValueError("cannot render an empty profile")
    path = Path(path)
    csv_path = write_profile_csv(profile, path.with_suffix(".csv"))
    svg_path = path.with_suffix(".svg")
    svg_path.write_text(_svg(profile))
    return csv_path, svg_path


def write_summary_csv(records, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["problem", "solver", "n", "evals", "f_best", "termination", "error"])
        for r in records:
            term = "" if r.termination is None else r.termination.value
            w.writerow([r.problem, r.solver, r.n, r.evals, repr(float(r.f_best)), term, r.error or ""])
    return path
