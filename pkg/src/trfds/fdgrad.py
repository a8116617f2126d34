"""Finite-difference gradients.

Forward differences along the coordinate axes, and the bound-respecting
variant for unrelaxable boxes that picks, per coordinate, whichever of the
forward/backward steps fits the box with the larger length.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .problem import BOX


class DegenerateCoordinateError(ValueError):
    pass


@dataclass
class FdGradient:
    g: np.ndarray
    tau_used: np.ndarray  # signed: > 0 forward, < 0 backward
    evals_spent: int


def initial_tau(epsilon: float, sigma: float, n: int) -> float:
    if epsilon <= 0 or sigma <= 0 or n < 1:
        raise ValueError("epsilon, sigma and n must be positive")
    return epsilon / (sigma * math.sqrt(n))


def _evaluate_all(problem, points):
    if problem.concurrent and len(points) > 1:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(problem.evaluate, points))
    return [problem.evaluate(p) for p in points]


def forward_gradient(problem, x, tau: float, fx: float) -> FdGradient:
    """``g_i = (f(x + tau e_i) - f(x)) / tau``; costs exactly n evaluations."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size
    points = []
    for i in range(n):
        xi = x.copy()
        xi[i] += tau
        points.append(xi)
    values = _evaluate_all(problem, points)
    g = (np.asarray(values) - fx) / tau
    return FdGradient(g=g, tau_used=np.full(n, float(tau)), evals_spent=n)


def bounded_gradient(problem, x, tau: float, fx: float, box=None) -> FdGradient:
    """Finite differences that never leave the box ``[lower, upper]``.

    For coordinate i the admissible forward and backward lengths are
    ``min(u_i - x_i, tau)`` and ``min(x_i - l_i, tau)``; the forward
    difference is used when its length is at least the backward one.
    An offset point that rounding pushes past a face is clamped onto it, and
    the realised offset then becomes the divisor.
    """
    box = problem.feasible_set if box is None else box
    if box.kind != BOX:
        raise ValueError("bounded_gradient requires a box feasible set")
    if not tau > 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x, dtype=float)
    lo, hi = box.lower, box.upper
    n = x.size
    points = []
    steps = np.empty(n)
    for i in range(n):
        tau_f = min(hi[i] - x[i], tau)
        tau_b = min(x[i] - lo[i], tau)
        xi = x.copy()
        if tau_f >= tau_b:
            xi[i] = x[i] + tau_f
            h = tau_f
            if xi[i] > hi[i]:
                xi[i] = hi[i]
                h = xi[i] - x[i]
        else:
            xi[i] = x[i] - tau_b
            h = -tau_b
            if xi[i] < lo[i]:
                xi[i] = lo[i]
                h = xi[i] - x[i]
        if h == 0.0:
            raise DegenerateCoordinateError(f"no admissible finite-difference step in coordinate {i}")
        steps[i] = h
        points.append(xi)
    values = _evaluate_all(problem, points)
    g = (np.asarray(values) - fx) / steps
    return FdGradient(g=g, tau_used=steps, evals_spent=n)
