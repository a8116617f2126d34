"""Parameter calibration for the Rosenzweig-MacArthur predator-prey model.

    dY/dt = zeta Y (1 - Y/theta) - lambda Y Z / (mu + Y)
    dZ/dt = nu Y Z / (mu + Y) - xi Z

A synthetic dataset is generated from reference parameters with Gaussian
noise, and the parameters are recovered by minimizing a mean-normalized
least-squares misfit under bound constraints that the ODE model itself
cannot be evaluated outside of.
"""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .driver import Mode, RunRecord, default_config, solve
from .problem import FeasibleSet, Problem

RTOL = 1e-8
ATOL = 1e-10
MAX_STEPS = 100_000
FAILURE_PENALTY = 1e12

TIMES = 0.5 * np.arange(71)
Y0 = 400.0
Z0 = 20.0
LOWER = np.full(6, 0.001)
UPPER = np.array([5.0, 1000.0, 10.0, 500.0, 10.0, 5.0])
DEFAULT_BUDGET = 350
NOISE_SCALE = 10.0


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class PredPreyParams:
    zeta: float
    theta: float
    lam: float
    mu: float
    nu: float
    xi: float

    @classmethod
    def from_array(cls, x) -> "PredPreyParams":
        x = np.asarray(x, dtype=float)
        if x.shape != (6,):
            raise ValueError("expected 6 parameters (zeta, theta, lambda, mu, nu, xi)")
        return cls(*map(float, x))

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def within_bounds(self, lower=LOWER, upper=UPPER) -> bool:
        x = self.as_array()
        return bool(np.all(x >= lower) and np.all(x <= upper))


TRUTH = PredPreyParams(0.723, 447.0, 2.88, 21.9, 5.54, 4.99)
START = PredPreyParams(0.6, 400.0, 1.0, 10.0, 3.0, 2.0)


@dataclass
class Trajectory:
    t: np.ndarray
    Y: np.ndarray
    Z: np.ndarray


@dataclass
class Dataset:
    t: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    noise_scale: float
    seed: int
    y0: float = Y0
    z0: float = Z0

    @property
    def Y_mean(self) -> float:
        return float(np.mean(self.Y))

    @property
    def Z_mean(self) -> float:
        return float(np.mean(self.Z))

    def write_csv(self, path) -> Path:
        return _write_series(path, ["t", "Y", "Z"], self.t, self.Y, self.Z)


def _write_series(path, header, *cols) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
    return path


def integrate(params, y0: float = Y0, z0: float = Z0, times=TIMES, *,
              rtol: float = RTOL, atol: float = ATOL, max_step: float = math.inf) -> Trajectory:
    """Solve the predator-prey system with adaptive Dormand-Prince 5(4).

    Raises
    ------
    IntegrationError
        On blow-up (nonfinite state), step-size underflow or step-count
        exhaustion.
    """
    if not (y0 > 0 and z0 > 0):
        raise ValueError("initial populations must be positive")
    p = params.as_array() if isinstance(params, PredPreyParams) else np.asarray(params, dtype=float)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be a nonempty strictly increasing sequence")
    out, status = kernels.dopri5(kernels.MODEL_PREDPREY, p, np.array([y0, z0]), times,
                                 rtol, atol, max_step, MAX_STEPS)
    if status != kernels.STATUS_OK:
        raise IntegrationError(f"integration failed with status {status}")
    return Trajectory(t=times.copy(), Y=out[:, 0].copy(), Z=out[:, 1].copy())


def make_dataset(truth: PredPreyParams = TRUTH, seed: int = 0, noise_scale: float = NOISE_SCALE,
                 times=TIMES) -> Dataset:
    """Noisy observations ``Y(t_i) + s e_i`` and ``Z(t_i) + s e_i``.

    A single standard-normal draw ``e_i`` per time point perturbs both series.
    Draws come from a Philox generator keyed by ``seed``, so datasets are
    reproducible across platforms.
    """
    traj = integrate(truth, Y0, Z0, times)
    rng = np.random.Generator(np.random.Philox(seed))
    noise = rng.standard_normal(traj.t.size)
    return Dataset(t=traj.t, Y=traj.Y + noise_scale * noise, Z=traj.Z + noise_scale * noise,
                   noise_scale=float(noise_scale), seed=int(seed))


def objective(dataset: Dataset, x) -> float:
    """Mean-normalized squared misfit; integration failure gives ``1e12``."""
    p = x.as_array() if isinstance(x, PredPreyParams) else np.asarray(x, dtype=float)
    try:
        traj = integrate(p, dataset.y0, dataset.z0, dataset.t)
    except IntegrationError:
        return FAILURE_PENALTY
    ry = traj.Y - dataset.Y
    rz = traj.Z - dataset.Z
    value = float(ry @ ry) / dataset.Y_mean ** 2 + float(rz @ rz) / dataset.Z_mean ** 2
    return value if math.isfinite(value) else FAILURE_PENALTY


def calibration_problem(dataset: Dataset, x0=START, lower=LOWER, upper=UPPER) -> Problem:
    x0 = x0.as_array() if isinstance(x0, PredPreyParams) else np.asarray(x0, dtype=float)
    box = FeasibleSet.box(lower, upper)
    if not box.contains(x0):
        raise ValueError("x0 must lie within the bounds")
    return Problem(lambda x: objective(dataset, x), x0, box, name="predprey", unrelaxable=True)


@dataclass
class Calibration:
    record: RunRecord
    params: PredPreyParams
    f0: float


def calibrate(dataset: Dataset, x0=START, bounds=(LOWER, UPPER), budget_evals: int = DEFAULT_BUDGET,
              **config_overrides) -> Calibration:
    """Fit the model parameters with the unrelaxable-bounds solver.

    The default budget is 350 evaluations, i.e. 50 simplex gradients in
    dimension 6. Remaining solver parameters are the defaults of
    :func:`default_config`, possibly overridden.
    """
    problem = calibration_problem(dataset, x0, *bounds)
    config = default_config(problem.n, mode=Mode.UNRELAXABLE, max_evals=budget_evals, **config_overrides)
    record = solve(problem, config, solver_name="trfds-unrelaxable")
    return Calibration(record=record, params=PredPreyParams.from_array(record.x_best), f0=record.values[0])


def write_fit_csv(dataset: Dataset, params, path) -> Path:
    traj = integrate(params, dataset.y0, dataset.z0, dataset.t)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "Y_obs", "Z_obs", "Y_fit", "Z_fit"])
        for row in zip(dataset.t, dataset.Y, dataset.Z, traj.Y, traj.Z):
            w.writerow([repr(float(v)) for v in row])
    return path


def write_decrease_csv(record: RunRecord, path) -> Path:
    """Lowest objective value found against the number of evaluations."""
    record.write_history_csv(path)
    return Path(path)
