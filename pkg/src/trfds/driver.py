"""Finite-difference trust-region outer loop.

Each iteration builds a forward-difference gradient (or reuses the previous
one after a type-I unsuccessful step), solves the trust-region subproblem,
and accepts or rejects the trial point by the usual actual/predicted
reduction ratio. On rejection the radius is halved, and the difference
stepsize is halved too whenever keeping it would violate
``tau * sqrt(n) <= delta``.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .fdgrad import FdGradient, bounded_gradient, forward_gradient, initial_tau
from .problem import ALL_SPACE, BOX
from .subproblem import QuadraticModel, TrialStep, solve_subproblem

BFGS_THRESHOLD = 1e-14


class Mode(str, Enum):
    RELAXABLE = "relaxable"
    UNRELAXABLE = "unrelaxable"


class IterationClass(str, Enum):
    S = "S"
    U1 = "U1"
    U2 = "U2"


class Termination(str, Enum):
    BUDGET = "Budget"
    DELTA_STOP = "DeltaStop"
    STATIONARY = "StationaryFlag"
    ORACLE_ERROR = "OracleError"


class ZeroModelDecreaseError(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass
class SolverConfig:
    epsilon: float
    sigma: float
    alpha: float
    delta0: float
    delta_max: float
    budget_simplex_gradients: int = 100
    delta_stop: float = 1e-13
    mode: Mode = Mode.RELAXABLE
    max_evals: Optional[int] = None  # overrides the simplex-gradient budget when set
    subproblem: str = "auto"
    hessian: str = "bfgs"  # "identity" keeps H_k = I throughout

    def tau0(self, n: int) -> float:
        return initial_tau(self.epsilon, self.sigma, n)

    def validate(self, n: int):
        for name in ("epsilon", "sigma", "delta0", "delta_max", "delta_stop"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.budget_simplex_gradients < 1:
            raise ValueError("budget must be at least one simplex gradient")
        if self.max_evals is not None and self.max_evals < 1:
            raise ValueError("max_evals must be positive")
        if not self.tau0(n) * math.sqrt(n) <= self.delta0 <= self.delta_max:
            raise ValueError("need tau0 * sqrt(n) <= delta0 <= delta_max")
        if self.subproblem not in ("auto", "cauchy"):
            raise ValueError(f"unknown subproblem solver {self.subproblem!r}")
        if self.hessian not in ("bfgs", "identity"):
            raise ValueError(f"unknown Hessian rule {self.hessian!r}")
        Mode(self.mode)

    def eval_budget(self, n: int) -> int:
        return self.max_evals if self.max_evals is not None else self.budget_simplex_gradients * (n + 1)


def default_config(n: int, **overrides) -> SolverConfig:
    """Default parameters for an n-dimensional problem.

    ``epsilon = 1e-5``, ``alpha = 0.01``, ``sigma = epsilon / (sqrt(n) sqrt(eps))``
    (so that ``tau0 = sqrt(eps)``), ``delta0 = max(1, tau0 sqrt(n))`` and
    ``delta_max = max(1000, delta0)``. Overrides are applied before the
    derived quantities, so e.g. passing ``sigma`` changes ``delta0``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    epsilon = overrides.pop("epsilon", 1e-5)
    sigma = overrides.pop("sigma", None)
    if sigma is None:
        sigma = epsilon / (math.sqrt(n) * math.sqrt(np.finfo(float).eps))
    tau0 = initial_tau(epsilon, sigma, n)
    delta0 = overrides.pop("delta0", None)
    if delta0 is None:
        delta0 = max(1.0, tau0 * math.sqrt(n))
    delta_max = overrides.pop("delta_max", None)
    if delta_max is None:
        delta_max = max(1000.0, delta0)
    cfg = SolverConfig(epsilon=epsilon, sigma=sigma, alpha=overrides.pop("alpha", 0.01),
                       delta0=delta0, delta_max=delta_max)
    mode = overrides.pop("mode", None)
    if mode is not None:
        cfg.mode = Mode(mode)
    return dataclasses.replace(cfg, **overrides)


@dataclass
class SolverState:
    x: np.ndarray
    fx: float
    delta: float
    tau: float
    grad: Optional[FdGradient]
    H: np.ndarray
    k: int = 0
    evals: int = 0
    last_class: Optional[IterationClass] = None


@dataclass
class StepUpdate:
    cls: IterationClass
    delta: float
    tau: float
    accept: bool
    rebuild_gradient: bool


def rho(f_old: float, f_new: float, model_decrease: float) -> float:
    if not model_decrease > 0:
        raise ZeroModelDecreaseError("ratio undefined for nonpositive model decrease")
    return (f_old - f_new) / model_decrease


def classify_and_update(state: SolverState, rho_val: Optional[float], config: SolverConfig) -> StepUpdate:
    """Radius / stepsize update. ``rho_val=None`` means the step was rejected
    without computing a ratio (zero model decrease)."""
    if rho_val is not None and rho_val >= config.alpha:
        return StepUpdate(IterationClass.S, min(2.0 * state.delta, config.delta_max), state.tau,
                          accept=True, rebuild_gradient=True)
    delta = 0.5 * state.delta
    if state.tau * math.sqrt(state.x.size) <= delta:
        return StepUpdate(IterationClass.U1, delta, state.tau, accept=False, rebuild_gradient=False)
    return StepUpdate(IterationClass.U2, delta, 0.5 * state.tau, accept=False, rebuild_gradient=True)


def bfgs_update(H, s, y, threshold: float = BFGS_THRESHOLD) -> np.ndarray:
    """Safeguarded BFGS update of the Hessian approximation.

    Skipped (``H`` returned unchanged) when ``|<s, y>|`` or ``|<s, H s>|`` is
    negligible relative to the vectors involved, or when the result is not
    finite.
    """
    H = np.asarray(H, dtype=float)
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    sy = float(s @ y)
    if not abs(sy) > threshold * np.linalg.norm(s) * np.linalg.norm(y):
        return H
    Hs = H @ s
    sHs = float(s @ Hs)
    if not abs(sHs) > threshold * np.linalg.norm(s) * np.linalg.norm(Hs):
        return H
    H_new = H + np.outer(y, y) / sy - np.outer(Hs, Hs) / sHs
    H_new = 0.5 * (H_new + H_new.T)
    if not np.all(np.isfinite(H_new)) or not np.any(H_new):
        return H
    return H_new


@dataclass
class IterationRecord:
    k: int
    cls: IterationClass
    delta: float
    tau: float
    rho: float
    mdec: float
    f: float


@dataclass
class IterationInfo:
    """Snapshot handed to the per-iteration callback (values at the start of iteration k)."""

    k: int
    x: np.ndarray
    fx: float
    g: np.ndarray
    tau_used: np.ndarray
    H: np.ndarray
    delta: float
    tau: float
    step: TrialStep
    mdec: float
    rho: Optional[float]
    cls: IterationClass
    rebuilt: bool
    evals: int


@dataclass
class RunRecord:
    problem: str
    solver: str
    n: int
    values: list = field(default_factory=list)
    feasible: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    termination: Optional[Termination] = None
    x_best: Optional[np.ndarray] = None
    f_best: float = math.inf
    x_final: Optional[np.ndarray] = None
    f_final: float = math.inf
    violations: dict = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def evals(self) -> int:
        return len(self.values)

    @property
    def best_so_far(self) -> np.ndarray:
        """Best feasible value after each evaluation (inf before the first feasible one)."""
        vals = np.where(np.asarray(self.feasible, dtype=bool), np.asarray(self.values, dtype=float), np.inf)
        return np.minimum.accumulate(vals) if vals.size else vals

    @property
    def class_counts(self) -> dict:
        counts = {c.value: 0 for c in IterationClass}
        for it in self.iterations:
            counts[it.cls.value] += 1
        return counts

    def write_history_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eval", "best_f"])
            for i, v in enumerate(self.best_so_far, start=1):
                w.writerow([i, repr(float(v))])

    def write_iterations_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "class", "delta", "tau", "rho", "mdec", "f"])
            for it in self.iterations:
                w.writerow([it.k, it.cls.value, repr(it.delta), repr(it.tau), repr(it.rho), repr(it.mdec), repr(it.f)])


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    def __init__(self, problem, max_evals, record):
        self.problem = problem
        self.max_evals = max_evals
        self.record = record
        self.fs = problem.feasible_set

    @property
    def remaining(self) -> int:
        return self.max_evals - self.record.evals

    def __call__(self, x) -> float:
        if self.remaining <= 0:
            raise _BudgetExhausted
        value = self.problem.evaluate(x)
        feasible = self.fs.contains(x)
        self.record.values.append(value)
        self.record.feasible.append(feasible)
        if feasible and value < self.record.f_best:
            self.record.f_best = value
            self.record.x_best = np.array(x, dtype=float)
        return value


class _CountingProblem:
    # adapter so the fdgrad routines go through the evaluator
    def __init__(self, ev):
        self.evaluate = ev
        self.feasible_set = ev.problem.feasible_set
        self.concurrent = False


def solve(
    problem,
    config: Optional[SolverConfig] = None,
    *,
    solver_name: str = "trfds",
    callback: Optional[Callable[[IterationInfo], None]] = None,
    diagnostics: bool = False,
    check_invariants: bool = False,
) -> RunRecord:
    """Minimize ``problem`` from ``problem.x0``.

    Parameters
    ----------
    problem : Problem
    config : SolverConfig, optional
        Defaults to :func:`default_config` for the problem dimension.
    callback : callable, optional
        Called with an :class:`IterationInfo` after every iteration.
    diagnostics : bool
        Also check ``||grad f(x_k) - g_k|| <= (L/2) delta_k`` using the
        problem's exact gradient and Lipschitz constant when available.
    check_invariants : bool
        Raise :class:`InvariantViolation` instead of only counting violations.

    Returns
    -------
    RunRecord
        Evaluation history, per-iteration log, best feasible point and the
        termination reason. Oracle errors are recorded on the record, which
        is attached to the re-raised exception as ``exc.run_record``.
    """
    n = problem.n
    config = default_config(n) if config is None else config
    config.validate(n)
    fs = problem.feasible_set
    unrelaxable = Mode(config.mode) == Mode.UNRELAXABLE or problem.unrelaxable
    if unrelaxable and fs.kind != BOX:
        raise ValueError("unrelaxable mode requires a box feasible set")

    record = RunRecord(problem=problem.name, solver=solver_name, n=n)
    record.violations = {"tau_delta": 0, "delta_max": 0, "tau_tau0": 0, "monotone": 0, "fg_delta": 0, "evals": 0}
    ev = _Evaluator(problem, config.eval_budget(n), record)
    counting = _CountingProblem(ev)
    sqrt_n = math.sqrt(n)
    check_fg = diagnostics and problem.exact_gradient is not None and problem.lipschitz is not None

    def violated(key, msg):
        record.violations[key] += 1
        if check_invariants:
            raise InvariantViolation(msg)

    tau0 = config.tau0(n)
    x = problem.x0.copy()
    state = SolverState(x=x, fx=math.nan, delta=config.delta0, tau=tau0, grad=None, H=np.eye(n))
    rebuild = True
    pending = None  # (s, g_old) for the BFGS update after a successful step
    try:
        state.fx = ev(x)
        while True:
            if state.delta <= config.delta_stop:
                record.termination = Termination.DELTA_STOP
                break
            rebuilt = False
            if rebuild:
                if ev.remaining < n:
                    record.termination = Termination.BUDGET
                    break
                if unrelaxable:
                    state.grad = bounded_gradient(counting, state.x, state.tau, state.fx)
                else:
                    state.grad = forward_gradient(counting, state.x, state.tau, state.fx)
                rebuilt = True
                rebuild = False
                if pending is not None and config.hessian == "bfgs":
                    s, g_old = pending
                    state.H = bfgs_update(state.H, s, state.grad.g - g_old)
                pending = None
            g = state.grad.g
            if check_fg:
                err = np.linalg.norm(problem.gradient(state.x) - g)
                if not err <= 0.5 * problem.lipschitz * state.delta:
                    violated("fg_delta", f"k={state.k}: ||grad - g|| = {err} > (L/2) delta")
            if not np.any(g):
                record.termination = Termination.STATIONARY
                break

            model = QuadraticModel(state.fx, g, state.H)
            step = solve_subproblem(model, state.delta, fs, state.x, config.subproblem)
            mdec = 0.0
            x_trial = None
            if step.model_decrease > 0.0:
                x_trial = state.x + step.d
                if fs.kind != ALL_SPACE:
                    x_trial = fs.project(x_trial)
                mdec = model.decrease(x_trial - state.x)
            rho_val = None
            f_trial = math.nan
            if mdec > 0.0:
                if ev.remaining < 1:
                    record.termination = Termination.BUDGET
                    break
                f_trial = ev(x_trial)
                rho_val = rho(state.fx, f_trial, mdec)
                if math.isnan(rho_val):
                    rho_val = -math.inf
            upd = classify_and_update(state, rho_val, config)

            info = IterationInfo(
                k=state.k, x=state.x.copy(), fx=state.fx, g=g.copy(), tau_used=state.grad.tau_used.copy(),
                H=state.H.copy(), delta=state.delta, tau=state.tau, step=step, mdec=mdec, rho=rho_val,
                cls=upd.cls, rebuilt=rebuilt, evals=record.evals,
            )
            f_old = state.fx
            if upd.accept:
                pending = (x_trial - state.x, g.copy())
                state.x, state.fx = x_trial, f_trial
            state.delta, state.tau = upd.delta, upd.tau
            rebuild = upd.rebuild_gradient
            state.last_class = upd.cls
            record.iterations.append(IterationRecord(
                k=state.k, cls=upd.cls, delta=info.delta, tau=info.tau,
                rho=math.nan if rho_val is None else rho_val, mdec=mdec, f=state.fx,
            ))
            state.k += 1
            state.evals = record.evals

            if not state.tau * sqrt_n <= state.delta:
                violated("tau_delta", f"k={state.k}: tau*sqrt(n) > delta")
            if not state.delta <= config.delta_max:
                violated("delta_max", f"k={state.k}: delta > delta_max")
            if not state.tau <= tau0:
                violated("tau_tau0", f"k={state.k}: tau > tau0")
            if not (state.fx < f_old if upd.accept else state.fx == f_old):
                violated("monotone", f"k={state.k}: f(x_k+1) vs f(x_k) inconsistent with class {upd.cls}")
            if not record.evals <= (n + 1) * state.k + 1:
                violated("evals", f"k={state.k}: {record.evals} evaluations exceed (n+1)k+1")
            if callback is not None:
                callback(info)
    except _BudgetExhausted:
        record.termination = Termination.BUDGET
    except Exception as exc:
        if isinstance(exc, InvariantViolation):
            raise
        record.termination = Termination.ORACLE_ERROR
        record.error = f"{type(exc).__name__}: {exc}"
        record.x_final, record.f_final = state.x.copy(), state.fx
        exc.run_record = record
        raise
    record.x_final, record.f_final = state.x.copy(), state.fx
    return record
