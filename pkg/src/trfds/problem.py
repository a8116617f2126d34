"""Objective oracles and feasible sets.

A :class:`Problem` couples a black-box objective with a :class:`FeasibleSet`
and records every oracle call in an :class:`OracleTranscript`. Only three
kinds of feasible set are shipped: the whole space, a Euclidean ball and a
box.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DimensionMismatchError(ValueError):
    pass


class InfeasibleEvaluationError(RuntimeError):
    """Raised when an unrelaxable problem is asked for f outside its box.

    This always indicates a solver bug: the unrelaxable code paths build
    every query point inside the feasible set.
    """


ALL_SPACE = "all"
BALL = "ball"
BOX = "box"


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Closed convex feasible set: all of R^n, a ball or a box."""

    kind: str
    dim: int
    center: Optional[np.ndarray] = None
    radius: Optional[float] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    @classmethod
    def all_space(cls, n: int) -> "FeasibleSet":
        return cls(ALL_SPACE, int(n))

    @classmethod
    def ball(cls, center, radius: float) -> "FeasibleSet":
        center = np.array(center, dtype=float)
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        return cls(BALL, center.size, center=center, radius=float(radius))

    @classmethod
    def box(cls, lower, upper) -> "FeasibleSet":
        lower = np.array(lower, dtype=float)
        upper = np.array(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DimensionMismatchError("box bounds must be 1-D arrays of equal length")
        if not np.all(lower < upper):
            raise ValueError("box requires lower < upper componentwise")
        return cls(BOX, lower.size, lower=lower, upper=upper)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(f"expected a vector of length {self.dim}, got shape {x.shape}")
        return x

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto the set."""
        x = self._check(x)
        if self.kind == BOX:
            return np.clip(x, self.lower, self.upper)
        if self.kind == BALL:
            diff = x - self.center
            nrm = np.linalg.norm(diff)
            if nrm <= self.radius:
                return x.copy()
            scale = self.radius / nrm
            p = self.center + diff * scale
            # rounding may leave p just outside; pull it in so contains(p) holds exactly
            for _ in range(64):
                if np.linalg.norm(p - self.center) <= self.radius:
                    return p
                scale *= 1.0 - 4.0 * np.finfo(float).eps
                p = self.center + diff * scale
            return self.center.copy()
        return x.copy()

    def contains(self, x) -> bool:
        """Exact membership test (no tolerance)."""
        x = self._check(x)
        if self.kind == BOX:
            return bool(np.all(x >= self.lower) and np.all(x <= self.upper))
        if self.kind == BALL:
            return bool(np.linalg.norm(x - self.center) <= self.radius)
        return True


def project(feasible_set: FeasibleSet, x) -> np.ndarray:
    return feasible_set.project(x)


@dataclass
class OracleTranscript:
    """Thread-safe log of every objective evaluation."""

    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    feasible: list = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def append(self, x, value, is_feasible):
        with self._lock:
            self.points.append(np.array(x, dtype=float))
            self.values.append(float(value))
            self.feasible.append(bool(is_feasible))

    @property
    def count(self) -> int:
        with self._lock:
            return len(self.values)

    def clear(self):
        with self._lock:
            self.points.clear()
            self.values.clear()
            self.feasible.clear()


class Problem:
    """A black-box minimization problem over a convex feasible set.

    Parameters
    ----------
    objective : callable
        ``objective(x) -> float``. Treated as a black box.
    x0 : array_like
        Starting point; projected onto the feasible set if infeasible.
    feasible_set : FeasibleSet, optional
        Defaults to all of R^n.
    unrelaxable : bool
        If true, the objective must never be queried outside the set and
        :meth:`evaluate` raises :class:`InfeasibleEvaluationError` if asked to.
    exact_gradient : callable, optional
        Used by diagnostics and tests only; solvers never call it.
    lipschitz, f_star, pl_mu : float, optional
        Known gradient Lipschitz constant, optimal value and PL constant.
        Test metadata only.
    concurrent : bool
        Whether the objective may be called from several threads at once.
    """

    def __init__(
        self,
        objective: Callable[[np.ndarray], float],
        x0,
        feasible_set: Optional[FeasibleSet] = None,
        *,
        name: str = "",
        unrelaxable: bool = False,
        exact_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        lipschitz: Optional[float] = None,
        f_star: Optional[float] = None,
        pl_mu: Optional[float] = None,
        concurrent: bool = False,
    ):
        x0 = np.array(x0, dtype=float).ravel()
        n = x0.size
        if n < 1:
            raise ValueError("problem dimension must be positive")
        if feasible_set is None:
            feasible_set = FeasibleSet.all_space(n)
        if feasible_set.dim != n:
            raise DimensionMismatchError("feasible set dimension does not match x0")
        if unrelaxable and feasible_set.kind != BOX:
            raise ValueError("unrelaxable constraints are only supported for boxes")
        self.n = n
        self.objective = objective
        self.feasible_set = feasible_set
        self.x0 = feasible_set.project(x0)
        self.name = name
        self.unrelaxable = unrelaxable
        self.exact_gradient = exact_gradient
        self.lipschitz = lipschitz
        self.f_star = f_star
        self.pl_mu = pl_mu
        self.concurrent = concurrent
        self.transcript = OracleTranscript()

    def __repr__(self):
        return f"Problem(name={self.name!r}, n={self.n}, set={self.feasible_set.kind})"

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise DimensionMismatchError(f"expected a vector of length {self.n}, got shape {x.shape}")
        feasible = self.feasible_set.contains(x)
        if self.unrelaxable and not feasible:
            raise InfeasibleEvaluationError(f"objective queried outside unrelaxable bounds at {x!r}")
        value = float(self.objective(x.copy()))
        self.transcript.append(x, value, feasible)
        return value

    def gradient(self, x) -> np.ndarray:
        if self.exact_gradient is None:
            raise ValueError(f"problem {self.name!r} has no exact gradient")
        return np.asarray(self.exact_gradient(np.asarray(x, dtype=float)), dtype=float)

    def copy(self, x0=None, unrelaxable: Optional[bool] = None) -> "Problem":
        """Copy with all metadata kept, a fresh transcript and optionally a new start."""
        return Problem(
            self.objective,
            self.x0 if x0 is None else x0,
            self.feasible_set,
            name=self.name,
            unrelaxable=self.unrelaxable if unrelaxable is None else unrelaxable,
            exact_gradient=self.exact_gradient,
            lipschitz=self.lipschitz,
            f_star=self.f_star,
            pl_mu=self.pl_mu,
            concurrent=self.concurrent,
        )

    def with_set(self, feasible_set: FeasibleSet, unrelaxable: bool = False, name: Optional[str] = None) -> "Problem":
        """Copy of this problem over a different feasible set (fresh transcript)."""
        return Problem(
            self.objective,
            self.x0,
            feasible_set,
            name=self.name if name is None else name,
            unrelaxable=unrelaxable,
            exact_gradient=self.exact_gradient,
            lipschitz=self.lipschitz,
            f_star=None,
            pl_mu=None,
            concurrent=self.concurrent,
        )


def evaluate(problem: Problem, x) -> float:
    return problem.evaluate(x)
