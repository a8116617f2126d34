"""Trust-region subproblem solvers.

All solvers minimize the quadratic model ``m(d) = f0 + <g, d> + 0.5 <H d, d>``
over ``{||d|| <= delta}``, intersected with ``{d : x + d in Omega}`` when a
feasible set is given, and return a :class:`TrialStep` whose model decrease
is at least that of the (generalized) Cauchy step.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .problem import ALL_SPACE, BALL, BOX

ARMIJO = 0.1
MAX_HALVINGS = 60
DYKSTRA_TOL = 1e-8
DYKSTRA_MAXIT = 10_000
FISTA_MAXIT = 2000


class ZeroGradientError(ValueError):
    pass


class SolverTag(str, Enum):
    CAUCHY = "Cauchy"
    GENERALIZED_CAUCHY = "GeneralizedCauchy"
    TRUNCATED_CG = "TruncatedCG"
    PROJECTED_ACCEL = "ProjectedAccel"


@dataclass
class QuadraticModel:
    f0: float
    g: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.H = np.asarray(self.H, dtype=float)
        n = self.g.size
        if self.H.shape != (n, n):
            raise ValueError("H must be n x n")
        hmax = np.max(np.abs(self.H))
        if np.max(np.abs(self.H - self.H.T)) > 1e-12 * (1.0 + hmax):
            raise ValueError("H must be symmetric")
        if hmax == 0.0:
            raise ValueError("H must be nonzero")

    def value(self, d) -> float:
        return self.f0 + float(self.g @ d + 0.5 * d @ (self.H @ d))

    def decrease(self, d) -> float:
        """``m(0) - m(d)``."""
        return -float(self.g @ d + 0.5 * d @ (self.H @ d))


@dataclass
class TrialStep:
    d: np.ndarray
    model_decrease: float
    solver_tag: SolverTag
    degenerate: bool = False


def _step(model, d, tag, degenerate=False) -> TrialStep:
    dec = model.decrease(d)
    if dec < 0.0:  # never return an ascent step; d = 0 is always admissible
        d = np.zeros_like(d)
        dec = 0.0
    return TrialStep(d=d, model_decrease=dec, solver_tag=tag, degenerate=degenerate)


def cauchy_step(model: QuadraticModel, delta: float) -> TrialStep:
    g, H = model.g, model.H
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        raise ZeroGradientError("Cauchy step undefined for g = 0")
    curv = float(g @ (H @ g))
    t = delta / gn
    if curv > 0.0:
        t = min(t, gn * gn / curv)
    return _step(model, -t * g, SolverTag.CAUCHY)


def _to_boundary(d, p, delta):
    # largest t >= 0 with ||d + t p|| = delta
    pp = float(p @ p)
    dp = float(d @ p)
    dd = float(d @ d)
    disc = max(dp * dp + pp * (delta * delta - dd), 0.0)
    return (-dp + math.sqrt(disc)) / pp


def truncated_cg(model: QuadraticModel, delta: float, max_iter: int | None = None) -> TrialStep:
    """Steihaug-Toint conjugate gradients inside the trust region."""
    g, H = model.g, model.H
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        raise ZeroGradientError("truncated CG undefined for g = 0")
    n = g.size
    max_iter = 2 * n + 5 if max_iter is None else max_iter
    tol = min(0.1, math.sqrt(gn)) * gn
    d = np.zeros(n)
    r = g.copy()
    p = -g
    rr = float(r @ r)
    for _ in range(max_iter):
        Hp = H @ p
        pHp = float(p @ Hp)
        if not np.isfinite(pHp):
            break
        if pHp <= 0.0:
            d = d + _to_boundary(d, p, delta) * p
            break
        alpha = rr / pHp
        d_next = d + alpha * p
        if np.linalg.norm(d_next) >= delta:
            d = d + _to_boundary(d, p, delta) * p
            break
        d = d_next
        r = r + alpha * Hp
        rr_new = float(r @ r)
        if math.sqrt(rr_new) <= tol:
            break
        p = -r + (rr_new / rr) * p
        rr = rr_new
    nd = np.linalg.norm(d)
    if nd > delta:
        d = d * (delta / nd)
    cg = _step(model, d, SolverTag.TRUNCATED_CG)
    cp = cauchy_step(model, delta)
    return cg if cg.model_decrease >= cp.model_decrease else cp


def _feasible_step(d, delta, feasible_set, x):
    """Pull ``d`` back into the trust region and, for boxes, exactly into the box."""
    nd = np.linalg.norm(d)
    if nd > delta:
        d = d * (delta / nd)
    if feasible_set.kind == BOX:
        d = np.clip(x + d, feasible_set.lower, feasible_set.upper) - x
    return d


def generalized_cauchy_step(model: QuadraticModel, delta: float, feasible_set, x) -> TrialStep:
    """Backtracking along the projected-gradient path.

    Tries ``t = delta/||g||, delta/(2||g||), ...`` with path point
    ``s(t) = P(x - t g) - x`` cut back radially to the trust region, and
    accepts the first point with ``m(s) <= m(0) + 0.1 <g, s>``. After 60
    halvings the best point seen is returned. If the path is stuck at ``x``
    (``-g`` lies in the normal cone) the step is ``d = 0`` flagged degenerate.
    """
    g = model.g
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        raise ZeroGradientError("generalized Cauchy step undefined for g = 0")
    x = np.asarray(x, dtype=float)
    t = delta / gn
    best_d = np.zeros_like(g)
    best_val = 0.0
    for k in range(MAX_HALVINGS + 1):
        s = feasible_set.project(x - t * g) - x
        ns = np.linalg.norm(s)
        if ns > delta:
            s = s * (delta / ns)
        if k == 0 and ns == 0.0:
            return TrialStep(d=np.zeros_like(g), model_decrease=0.0,
                             solver_tag=SolverTag.GENERALIZED_CAUCHY, degenerate=True)
        gs = float(g @ s)
        val = gs + 0.5 * float(s @ (model.H @ s))
        if val < best_val:
            best_val, best_d = val, s
        if val <= ARMIJO * gs and ns > 0.0:
            best_d = s
            break
        t *= 0.5
    d = _feasible_step(best_d, delta, feasible_set, x)
    return _step(model, d, SolverTag.GENERALIZED_CAUCHY)


def norm_estimate(H) -> float:
    """Largest |eigenvalue| of symmetric ``H`` (its spectral norm)."""
    H = np.asarray(H, dtype=float)
    if H.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))


def _set_arrays(feasible_set, x):
    if feasible_set.kind == BOX:
        return kernels.SET_BOX, feasible_set.lower - x, feasible_set.upper - x, 0.0
    if feasible_set.kind == BALL:
        a = feasible_set.center - x
        return kernels.SET_BALL, a, a, feasible_set.radius
    raise ValueError("projected_accel requires a box or ball feasible set")


def project_local(v, delta, feasible_set, x):
    """Project ``v`` onto ``{||d|| <= delta} & (Omega - x)`` with Dykstra's method."""
    kind, a, b, radius = _set_arrays(feasible_set, np.asarray(x, dtype=float))
    d, it = kernels.dykstra(np.asarray(v, dtype=float), float(delta), kind, a, b, radius,
                            DYKSTRA_TOL, DYKSTRA_MAXIT)
    if it >= DYKSTRA_MAXIT:
        warnings.warn("Dykstra projection hit its iteration cap", RuntimeWarning, stacklevel=2)
    return d


def projected_accel(model: QuadraticModel, delta: float, feasible_set, x, warm: TrialStep | None = None) -> TrialStep:
    """FISTA over the trust region intersected with the feasible set.

    Projections use Dykstra's alternating method (change tolerance 1e-8).
    The result is compared with the generalized Cauchy step and the better
    of the two is returned, so indefinite ``H`` still yields Cauchy-level
    decrease.
    """
    if feasible_set.kind == ALL_SPACE:
        raise ValueError("projected_accel requires a box or ball feasible set")
    x = np.asarray(x, dtype=float)
    gc = generalized_cauchy_step(model, delta, feasible_set, x)
    start = gc if warm is None else warm
    lip = norm_estimate(model.H)
    step = 1.0 / (1.01 * lip) if lip > 0.0 else delta / float(np.linalg.norm(model.g))
    kind, a, b, radius = _set_arrays(feasible_set, x)
    d, _, caps = kernels.fista(model.H, model.g, start.d, float(delta), kind, a, b, radius, step,
                               1e-10 * max(1.0, delta), FISTA_MAXIT, DYKSTRA_TOL, DYKSTRA_MAXIT)
    if caps:
        warnings.warn("Dykstra projection hit its iteration cap inside FISTA", RuntimeWarning, stacklevel=2)
    d = _feasible_step(d, delta, feasible_set, x)
    acc = _step(model, d, SolverTag.PROJECTED_ACCEL)
    return acc if acc.model_decrease >= gc.model_decrease else gc


def decrease_certificate(step: TrialStep, eta: float, delta: float, normH: float,
                         kappa: float = 0.5, slack: float = 1e-10) -> bool:
    """Check ``m(0) - m(d) >= kappa * eta * min(delta, eta / ||H||)`` up to ``slack``."""
    bound = kappa * eta * min(delta, eta / normH) if normH > 0 else kappa * eta * delta
    return step.model_decrease + slack >= bound


def solve_subproblem(model: QuadraticModel, delta: float, feasible_set, x, method: str = "auto") -> TrialStep:
    """Dispatch used by the driver.

    ``method="auto"`` picks truncated CG on all of R^n and the safeguarded
    FISTA solver otherwise; ``method="cauchy"`` uses the (generalized)
    Cauchy step alone.
    """
    if feasible_set.kind == ALL_SPACE:
        return cauchy_step(model, delta) if method == "cauchy" else truncated_cg(model, delta)
    if method == "cauchy":
        return generalized_cauchy_step(model, delta, feasible_set, x)
    return projected_accel(model, delta, feasible_set, x)
