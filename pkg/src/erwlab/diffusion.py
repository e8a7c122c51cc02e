"""Continuum objects: the squared-Bessel-type diffusion and Brownian motion
perturbed at its extrema."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from . import seeds as _seeds
from .stats import SampleSet


@dataclass
class DiffusionPath:
    times: np.ndarray
    values: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    driving: np.ndarray | None = None


def simulate_sqbessel(b: float, nu: float, y0: float, dt: float, T: float,
                      eps_stop: float, seed: int) -> DiffusionPath:
    """Full-truncation Euler path of dY = b dt + sqrt(nu Y) dB, stopped at the
    first grid time with Y <= eps_stop when eps_stop > 0."""
    if dt <= 0 or dt > T:
        raise ValueError("need 0 < dt <= T")
    if nu <= 0:
        raise ValueError("nu must be positive")
    if y0 < 0:
        raise ValueError("y0 must be nonnegative")
    nsteps = int(round(T / dt))
    wseed = _seeds.single_seed(seed, _seeds.WALK_STREAM)
    if eps_stop > 0.0 and y0 <= eps_stop:
        values = np.array([y0])  # time 0 is already at or below the barrier
    else:
        values = _k.sqbessel_path(b, nu, y0, dt, nsteps, eps_stop, wseed)
    times = np.arange(len(values)) * dt
    return DiffusionPath(times=times, values=values, kind="sqbessel",
                         params={"b": b, "nu": nu, "y0": y0, "dt": dt,
                                 "eps_stop": eps_stop},
                         seed=int(seed))


def sqbessel_marginal_samples(b: float, nu: float, y0: float, dt: float,
                              t: float, eps_stop: float, reps: int,
                              seed: int) -> SampleSet:
    """Y(t ^ sigma_eps) over independent paths."""
    nsteps = int(round(t / dt))
    if eps_stop > 0.0 and y0 <= eps_stop:
        return SampleSet(np.full(reps, float(y0)), label="sqbessel-marginal")
    seeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    vals = _k.sqbessel_finals(b, nu, y0, dt, nsteps, eps_stop, seeds)
    return SampleSet(vals, label="sqbessel-marginal")


def _check_pbm_params(alpha: float, beta: float) -> None:
    if alpha >= 1.0 or beta >= 1.0:
        raise ValueError("the perturbed process exists only for alpha, beta < 1")


def solve_pbm(alpha: float, beta: float, increments, dt: float = 1.0,
              seed: int | None = None) -> DiffusionPath:
    """Pathwise solution of Z_k = B_k + alpha max_{j<=k} Z_j + beta min_{j<=k} Z_j.

    Each step solves the implicit equation exactly by case analysis on
    whether the proposal leaves the current extremum interval.
    """
    _check_pbm_params(alpha, beta)
    incs = np.asarray(increments, dtype=np.float64)
    values, bad = _k.pbm_path(alpha, beta, incs)
    if bad:
        raise RuntimeError("extremum update inconsistency; increments too coarse")
    driving = np.concatenate([[0.0], np.cumsum(incs)])
    times = np.arange(len(values)) * dt
    return DiffusionPath(times=times, values=values, kind="pbm",
                         params={"alpha": alpha, "beta": beta, "dt": dt},
                         seed=seed, driving=driving)


def pbm_marginal_samples(alpha: float, beta: float, t: float, dt: float,
                         reps: int, seed: int) -> SampleSet:
    """Independent samples of Z_t."""
    _check_pbm_params(alpha, beta)
    if dt <= 0 or dt > t:
        raise ValueError("need 0 < dt <= t")
    nsteps = int(round(t / dt))
    seeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    vals = _k.pbm_finals(alpha, beta, dt, nsteps, seeds)
    return SampleSet(vals, label="pbm-marginal")


def pbm_reconstruction_residual(path: DiffusionPath) -> float:
    """Max deviation of the path from the discrete functional equation."""
    if path.driving is None:
        raise ValueError("path carries no driving increments")
    z = path.values
    alpha = path.params["alpha"]
    beta = path.params["beta"]
    recon = path.driving + alpha * np.maximum.accumulate(z) \
        + beta * np.minimum.accumulate(z)
    return float(np.abs(z - recon).max())
