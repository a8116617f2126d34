"""Diagnostic stationarity measures.

``eta_r(x) = -(1/r) min { <g, s> : x + s in Omega, ||s|| <= r }`` for an
approximate gradient ``g``; ``psi_r`` is the same quantity with the exact
gradient. The solver never evaluates these; they back the test suite and
the ``diagnose`` command.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problem import ALL_SPACE, BOX
from .subproblem import project_local

STAGNATION_TOL = 1e-10
MAX_ITER = 10_000


class MissingGradientError(ValueError):
    pass


@dataclass
class StationarityReport:
    r: float
    eta: float
    psi: Optional[float] = None
    gap: Optional[float] = None
    bound: Optional[float] = None
    bound_ok: Optional[bool] = None

    def lines(self) -> list:
        out = []
        for key in ("r", "eta", "psi", "gap", "bound", "bound_ok"):
            val = getattr(self, key)
            if val is not None:
                out.append(f"{key}={val!r}")
        return out


def eta_measure(g, x, feasible_set, r: float) -> float:
    """Approximate stationarity measure at radius ``r``.

    On all of R^n this is ``||g||``. Otherwise the linear function ``<g, s>``
    is minimized over the trust ball intersected with ``Omega - x`` by
    projected gradient (Dykstra projections), stopping once the objective
    changes by less than 1e-10 relative to ``r ||g||``.
    """
    g = np.asarray(g, dtype=float)
    gn = float(np.linalg.norm(g))
    if feasible_set.kind == ALL_SPACE or gn == 0.0:
        return gn
    x = np.asarray(x, dtype=float)
    step = r / gn
    s = np.zeros_like(g)
    obj = 0.0
    scale = max(1.0, r * gn)
    for _ in range(MAX_ITER):
        s = project_local(s - step * g, r, feasible_set, x)
        new = float(g @ s)
        if abs(new - obj) <= STAGNATION_TOL * scale:
            obj = new
            break
        obj = new
    return max(0.0, -obj / r)


def psi_measure(problem, x, r: float) -> float:
    if problem.exact_gradient is None:
        raise MissingGradientError(f"problem {problem.name!r} has no exact gradient")
    return eta_measure(problem.gradient(x), x, problem.feasible_set, r)


def measure_gap(problem, x, g, r: float, tau: float, L: float) -> StationarityReport:
    """Compare eta (from ``g``) with psi and check ``|psi - eta| <= (L/2) tau sqrt(n)``."""
    eta = eta_measure(g, x, problem.feasible_set, r)
    psi = psi_measure(problem, x, r)
    gap = abs(psi - eta)
    bound = 0.5 * L * tau * math.sqrt(np.asarray(x).size)
    return StationarityReport(r=r, eta=eta, psi=psi, gap=gap, bound=bound, bound_ok=gap <= bound + 1e-10)


def eta_bruteforce(g, x, feasible_set, r: float, pitch: float | None = None) -> float:
    """Grid-search reference for :func:`eta_measure` in dimension <= 3.

    The grid covers ``[-r, r]^n`` (shrunk to the box faces when Omega is a
    box) with spacing ``pitch``; the default is ``r/500`` for n <= 2 and
    ``r/100`` for n = 3. Only grid points inside the trust ball and Omega
    are scored, so the result never exceeds the true value.
    """
    g = np.asarray(g, dtype=float)
    x = np.asarray(x, dtype=float)
    n = g.size
    if n > 3:
        raise ValueError("brute-force reference limited to n <= 3")
    if pitch is None:
        pitch = r / 500 if n <= 2 else r / 100
    if feasible_set.kind == BOX:
        lo = np.maximum(feasible_set.lower - x, -r)
        hi = np.minimum(feasible_set.upper - x, r)
    elif feasible_set.kind == ALL_SPACE:
        lo, hi = np.full(n, -r), np.full(n, r)
    else:
        lo = np.maximum(feasible_set.center - x - feasible_set.radius, -r)
        hi = np.minimum(feasible_set.center - x + feasible_set.radius, r)
    axes = [np.linspace(lo[i], hi[i], max(2, int(math.ceil((hi[i] - lo[i]) / pitch)) + 1)) for i in range(n)]
    axes = [np.union1d(a, [0.0]) if a[0] <= 0.0 <= a[-1] else a for a in axes]
    best = 0.0
    # chunk over the first axis to bound memory
    for a0 in np.array_split(axes[0], max(1, axes[0].size // 64)):
        grids = np.meshgrid(a0, *axes[1:], indexing="ij")
        S = np.stack([G.ravel() for G in grids], axis=1)
        mask = np.einsum("ij,ij->i", S, S) <= r * r
        if feasible_set.kind != BOX and feasible_set.kind != ALL_SPACE:
            P = x + S
            mask &= np.linalg.norm(P - feasible_set.center, axis=1) <= feasible_set.radius
        if np.any(mask):
            best = min(best, float(np.min(S[mask] @ g)))
    return max(0.0, -best / r)
