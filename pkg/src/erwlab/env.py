"""Cookie environments and their closed-form drift/variance parameters.

Three environment kinds are supported: deterministic periodic stacks, per-site
Markov-chain stacks (spatially i.i.d., reproducible from a seed), and
coupled environments that raise each cookie of a periodic base stack by h up
to a per-site geometric cutoff.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels as _k

MEAN_TOL = 1e-12
BOUNDARY_TOL = 1e-9


class InvalidEnvironment(ValueError):
    """Raised when an environment specification violates its constraints."""


class Regime(enum.Enum):
    TRANSIENT_RIGHT = "transient-right"
    TRANSIENT_LEFT = "transient-left"
    RECURRENT_BOUNDARY_RIGHT = "recurrent-boundary-right"
    RECURRENT_BOUNDARY_LEFT = "recurrent-boundary-left"
    RECURRENT_NONBOUNDARY = "recurrent-nonboundary"


@dataclass(frozen=True)
class ModelParams:
    """The tuple (theta, theta_tilde, rho, rho_tilde, nu, a)."""

    theta: float
    theta_tilde: float
    rho: float
    rho_tilde: float
    nu: float
    a: float

    def identity_residuals(self, stack: "PeriodicStack | None" = None) -> dict:
        """Residuals of the exact parameter identities.

        The sum identities require a mean-1/2 stack; theta = 2 rho / nu and
        a = sqrt(2/nu) hold unconditionally.
        """
        res = {
            "theta_vs_rho": self.theta - 2.0 * self.rho / self.nu,
            "theta_tilde_vs_rho_tilde": self.theta_tilde - 2.0 * self.rho_tilde / self.nu,
            "rho_sum": self.rho + self.rho_tilde - (self.nu / 2.0 - 1.0),
            "a_vs_nu": self.a - math.sqrt(2.0 / self.nu),
        }
        if stack is not None:
            s = sum(p * (1.0 - p) for p in stack.probs)
            res["theta_sum"] = (self.theta + self.theta_tilde
                                - (1.0 - stack.N / (4.0 * s)))
        return res

    def as_dict(self) -> dict:
        return {
            "theta": self.theta,
            "theta_tilde": self.theta_tilde,
            "rho": self.rho,
            "rho_tilde": self.rho_tilde,
            "nu": self.nu,
            "a": self.a,
        }


def _check_probs(probs: Sequence[float]) -> tuple:
    if len(probs) == 0:
        raise InvalidEnvironment("cookie stack must be nonempty")
    for p in probs:
        if not (0.0 < p < 1.0):
            raise InvalidEnvironment(f"cookie probability {p} outside (0,1)")
    return tuple(float(p) for p in probs)


@dataclass(frozen=True)
class PeriodicStack:
    """Deterministic period-N cookie stack, identical at every site."""

    probs: tuple
    mean_flag: bool

    @property
    def N(self) -> int:
        return len(self.probs)

    @property
    def kind(self) -> str:
        return "periodic"

    def cookie(self, site: int, j: int) -> float:
        if j < 1:
            raise ValueError("cookie index must be >= 1")
        return self.probs[(j - 1) % self.N]

    def reseed(self, seed: int) -> "PeriodicStack":
        return self

    def kernel_args(self) -> tuple:
        return (_k.PERIODIC, np.asarray(self.probs, dtype=np.float64),
                np.zeros(1), np.ones((1, 1)), 0, 0.0, 0.5, np.uint64(0))

    def spec(self) -> dict:
        return {"kind": "periodic", "probs": list(self.probs)}


@dataclass(eq=False)
class MarkovStack:
    """Per-site cookie sequences drawn from a finite-state Markov chain.

    Site realizations are a pure function of (seed, site), generated lazily
    and memoized, so reads of the same (site, j) are bit-identical and two
    instances built from the same seed agree everywhere.
    """

    states: tuple
    transition: tuple
    initial: int
    seed: int
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.states = _check_probs(self.states)
        K = len(self.states)
        if len(self.transition) != K:
            raise InvalidEnvironment("transition matrix must be square over states")
        rows = []
        for row in self.transition:
            if len(row) != K:
                raise InvalidEnvironment("transition matrix must be square over states")
            r = tuple(float(v) for v in row)
            if any(v < 0.0 for v in r):
                raise InvalidEnvironment("transition entries must be nonnegative")
            if abs(sum(r) - 1.0) > 1e-12:
                raise InvalidEnvironment("transition rows must sum to 1")
            rows.append(r)
        self.transition = tuple(rows)
        if not (0 <= self.initial < K):
            raise InvalidEnvironment("initial state index out of range")
        self.seed = int(self.seed)

    @property
    def kind(self) -> str:
        return "markov"

    def _cdf(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.transition, dtype=np.float64), axis=1)

    def cookie(self, site: int, j: int) -> float:
        if j < 1:
            raise ValueError("cookie index must be >= 1")
        chain = self._memo.get(site)
        if chain is None:
            chain = [self.initial]
            self._memo[site] = chain
        cdf = self._cdf()
        while len(chain) < j:
            jj = len(chain) + 1  # index of the state being generated
            u = _k.site_u01(np.uint64(self.seed), site, jj)
            chain.append(int(_k._mc_step(cdf, chain[-1], u)))
        return self.states[chain[j - 1]]

    def reseed(self, seed: int) -> "MarkovStack":
        return MarkovStack(self.states, self.transition, self.initial, int(seed))

    def kernel_args(self) -> tuple:
        return (_k.MARKOV, np.zeros(1), np.asarray(self.states, dtype=np.float64),
                self._cdf(), int(self.initial), 0.0, 0.5, np.uint64(self.seed))

    def spec(self) -> dict:
        return {"kind": "markov", "states": list(self.states),
                "transition": [list(r) for r in self.transition],
                "initial": self.initial, "seed": self.seed}


@dataclass(eq=False)
class CoupledEnv:
    """Periodic base stack with cookies raised by h up to a geometric cutoff.

    Cutoffs G_x follow P(G = k) = (1-eps)^k eps for k >= 0, sampled lazily
    per site from (seed, site) and memoized. The coupled cookie dominates the
    base cookie at every (site, j) by construction.
    """

    base: PeriodicStack
    h: float
    eps: float
    seed: int
    _cutoffs: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0):
            raise InvalidEnvironment("eps must be in (0,1)")
        hmax = min(1.0 - p for p in self.base.probs)
        if not (0.0 < self.h < hmax):
            raise InvalidEnvironment(f"h must be in (0, {hmax}) for this stack")
        self.seed = int(self.seed)

    @property
    def kind(self) -> str:
        return "coupled"

    def cutoff(self, site: int) -> int:
        g = self._cutoffs.get(site)
        if g is None:
            u = _k.site_u01(np.uint64(self.seed), site, 0)
            g = int(_k._geom_cutoff(u, self.eps))
            self._cutoffs[site] = g
        return g

    def cookie(self, site: int, j: int) -> float:
        if j < 1:
            raise ValueError("cookie index must be >= 1")
        p = self.base.cookie(site, j)
        if j <= self.cutoff(site):
            p += self.h
        return p

    def reseed(self, seed: int) -> "CoupledEnv":
        return CoupledEnv(self.base, self.h, self.eps, int(seed))

    def kernel_args(self) -> tuple:
        return (_k.COUPLED, np.asarray(self.base.probs, dtype=np.float64),
                np.zeros(1), np.ones((1, 1)), 0, float(self.h), float(self.eps),
                np.uint64(self.seed))

    def spec(self) -> dict:
        return {"kind": "coupled", "probs": list(self.base.probs),
                "h": self.h, "eps": self.eps, "seed": self.seed}


Environment = PeriodicStack | MarkovStack | CoupledEnv


def make_periodic(probs: Sequence[float]) -> PeriodicStack:
    probs = _check_probs(probs)
    mean = sum(probs) / len(probs)
    return PeriodicStack(probs=probs, mean_flag=abs(mean - 0.5) <= MEAN_TOL)


def compute_params(stack: PeriodicStack) -> ModelParams:
    """Closed-form (theta, theta_tilde, rho, rho_tilde, nu, a) for a periodic stack."""
    p = np.asarray(stack.probs, dtype=np.float64)
    N = len(p)
    cum = np.cumsum(2.0 * p - 1.0)          # sum_{i<=j} (2 p_i - 1)
    s = float(np.sum(p * (1.0 - p)))
    theta = float(np.sum((1.0 - p) * cum) / (2.0 * s))
    theta_tilde = float(np.sum(p * (-cum)) / (2.0 * s))
    rho = float(2.0 / N * np.sum((1.0 - p) * cum))
    rho_tilde = float(2.0 / N * np.sum(p * (-cum)))
    nu = float(8.0 / N * s)
    a = 0.5 / math.sqrt(s / N)
    return ModelParams(theta=theta, theta_tilde=theta_tilde, rho=rho,
                       rho_tilde=rho_tilde, nu=nu, a=a)


def classify(params: ModelParams, tol: float = BOUNDARY_TOL) -> Regime:
    th, tht = params.theta, params.theta_tilde
    if not (math.isfinite(th) and math.isfinite(tht)):
        raise ValueError("parameters must be finite")
    if th > 1.0 + tol:
        return Regime.TRANSIENT_RIGHT
    if tht > 1.0 + tol:
        return Regime.TRANSIENT_LEFT
    if abs(th - 1.0) <= tol:
        return Regime.RECURRENT_BOUNDARY_RIGHT
    if abs(tht - 1.0) <= tol:
        return Regime.RECURRENT_BOUNDARY_LEFT
    return Regime.RECURRENT_NONBOUNDARY


def theta_coupled(theta: float, nu: float, h: float, eps: float) -> float:
    """Tail parameter of the h-raised environment with geometric(eps) cutoffs."""
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must be in (0,1)")
    if h < 0.0:
        raise ValueError("h must be nonnegative")
    if nu <= 0.0:
        raise ValueError("nu must be positive")
    return theta + 4.0 * h * (1.0 - eps) / (nu * eps)


def cookie(env: Environment, site: int, j: int) -> float:
    """Right-step probability on the j-th visit to a site (j >= 1)."""
    return env.cookie(site, j)


def env_from_spec(spec: dict | str | Path) -> Environment:
    """Build an environment from a spec dict, JSON text, file path, or a
    comma-separated list of periodic probabilities."""
    if isinstance(spec, Path):
        spec = spec.read_text()
    if isinstance(spec, str):
        text = spec.strip()
        if text.startswith("{"):
            spec = json.loads(text)
        else:
            path = Path(text)
            if path.suffix == ".json" or path.is_file():
                spec = json.loads(path.read_text())
            else:
                try:
                    probs = [float(v) for v in text.split(",") if v.strip()]
                except ValueError:
                    raise InvalidEnvironment(f"cannot parse environment spec {text!r}")
                return make_periodic(probs)
    if not isinstance(spec, dict):
        raise InvalidEnvironment("environment spec must be a JSON object")
    kind = spec.get("kind", "periodic")
    if kind == "periodic":
        return make_periodic(spec["probs"])
    if kind == "markov":
        return MarkovStack(states=tuple(spec["states"]),
                           transition=tuple(tuple(r) for r in spec["transition"]),
                           initial=int(spec.get("initial", 0)),
                           seed=int(spec.get("seed", 0)))
    if kind == "coupled":
        base = make_periodic(spec["probs"])
        return CoupledEnv(base=base, h=float(spec["h"]), eps=float(spec["eps"]),
                          seed=int(spec.get("seed", 0)))
    raise InvalidEnvironment(f"unknown environment kind {kind!r}")
