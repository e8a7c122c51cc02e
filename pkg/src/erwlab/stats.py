"""Estimators and comparators used by the verification experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .env import PeriodicStack, compute_params, make_periodic

# minimum exceedance count for a survival point to enter the tail regression;
# below this the log-survival noise dominates the fit
_MIN_EXCEEDANCES = 10


@dataclass
class SampleSet:
    """Tagged scalar Monte Carlo outcomes, optionally right-censored."""

    values: np.ndarray
    label: str = ""
    censored: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.censored is not None:
            self.censored = np.asarray(self.censored, dtype=bool)
            if self.censored.shape != self.values.shape:
                raise ValueError("censoring flags must match values")

    def __len__(self) -> int:
        return len(self.values)

    def uncensored(self) -> np.ndarray:
        if self.censored is None:
            return self.values
        return self.values[~self.censored]


@dataclass
class TailFit:
    exponent: float
    intercept: float
    r_squared: float
    n_tail: int
    reliable: bool

    def as_dict(self) -> dict:
        return {"exponent": self.exponent, "intercept": self.intercept,
                "r_squared": self.r_squared, "n_tail": self.n_tail,
                "reliable": self.reliable}


def _values(a) -> np.ndarray:
    if isinstance(a, SampleSet):
        return a.values
    return np.asarray(a, dtype=np.float64)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov sup-distance between empirical CDFs."""
    x = np.sort(_values(a))
    y = np.sort(_values(b))
    if x.size == 0 or y.size == 0:
        raise ValueError("sample sets must be nonempty")
    grid = np.concatenate([x, y])
    cx = np.searchsorted(x, grid, side="right") / x.size
    cy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.abs(cx - cy).max())


def tail_exponent(samples: SampleSet, tail_fraction: float) -> TailFit:
    """Survival-function slope on a dyadic grid over the top tail_fraction.

    Censored samples enter the survival counts at their recorded value, which
    is exact for grid points below the smallest censored value; the grid is
    truncated there.
    """
    if not (0.0 < tail_fraction <= 0.5):
        raise ValueError("tail_fraction must be in (0, 0.5]")
    vals = samples.values
    unc = samples.uncensored()
    if unc.size < 100:
        raise ValueError("need at least 100 uncensored values")
    vmax = float(unc.max())
    if vmax == float(unc.min()):
        raise ValueError("degenerate sample: all values identical")

    thresh = float(np.quantile(unc, 1.0 - tail_fraction))
    cmin = math.inf
    if samples.censored is not None and samples.censored.any():
        cmin = float(vals[samples.censored].min())

    k0 = max(0, math.ceil(math.log2(max(thresh, 1.0))))
    grid = []
    surv = []
    total = vals.size
    for k in range(k0, 64):
        g = float(2.0 ** k)
        if g >= cmin or g >= vmax:
            break
        exceed = int(np.count_nonzero(vals > g))
        if exceed < _MIN_EXCEEDANCES:
            break
        grid.append(g)
        surv.append(exceed / total)
    if len(grid) < 2:
        raise ValueError("not enough tail mass for a survival regression")

    lx = np.log(np.asarray(grid))
    ly = np.log(np.asarray(surv))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    n_tail = len(grid)
    return TailFit(exponent=float(-slope), intercept=float(intercept),
                   r_squared=r2, n_tail=n_tail,
                   reliable=(n_tail >= 8 and r2 >= 0.95))


def qv_statistic(record, env) -> float:
    """(1/n) sum over sites y, visits j <= L(n;y) of (2 w_y(j) - 1)^2.

    Computed from the final local times, independently of the walk core's
    online accumulation (the two orderings of the double sum must agree).
    """
    n = record.n
    sites, counts = record.local_times()
    if getattr(env, "kind", None) == "periodic":
        d2 = (2.0 * np.asarray(env.probs) - 1.0) ** 2
        N = len(d2)
        prefix = np.concatenate([[0.0], np.cumsum(d2)])
        full, rem = np.divmod(counts, N)
        total = float(np.sum(full * d2.sum() + prefix[rem]))
    else:
        total = 0.0
        for x, cnt in zip(sites, counts):
            for j in range(1, int(cnt) + 1):
                d = 2.0 * env.cookie(int(x), j) - 1.0
                total += d * d
    return total / n


def find_boundary(N: int, tol: float = 1e-9, seed: int = 0,
                  max_tries: int = 500) -> PeriodicStack | None:
    """Search the mean-1/2 simplex slice for a stack with theta = 1.

    Brackets theta - 1 between a sub- and super-critical mean-1/2 stack and
    runs brentq along the (box- and mean-preserving) segment between them.
    Uses the closed form only. Returns None if no bracket is found.
    """
    if N < 4:
        raise ValueError("no mean-1/2 stack with theta near 1 exists for N < 4")
    rng = np.random.default_rng(seed)

    def theta_of(p: np.ndarray) -> float:
        return compute_params(make_periodic(p)).theta

    def sample() -> np.ndarray | None:
        p = rng.uniform(0.05, 0.95, N)
        p = p + (0.5 - p.mean())
        if np.all((p > 0.02) & (p < 0.98)):
            return p
        return None

    # deterministic high-theta seed: front-loaded highs, trailing lows
    hi = np.full(N, 0.5)
    half = N // 2
    hi[:half] = 0.96
    hi[N - half:] = 0.04
    candidates_hi = [hi] if theta_of(hi) > 1.0 else []
    candidates_lo = []
    for _ in range(max_tries):
        if candidates_hi and candidates_lo:
            break
        p = sample()
        if p is None:
            continue
        th = theta_of(p)
        if th > 1.0 and not candidates_hi:
            candidates_hi.append(p)
        elif th < 1.0 and not candidates_lo:
            candidates_lo.append(p)
    if not (candidates_hi and candidates_lo):
        return None

    p_hi, p_lo = candidates_hi[0], candidates_lo[0]

    def f(s: float) -> float:
        return theta_of((1.0 - s) * p_lo + s * p_hi) - 1.0

    s_star = brentq(f, 0.0, 1.0, xtol=1e-15, rtol=8.9e-16)
    p_star = (1.0 - s_star) * p_lo + s_star * p_hi
    stack = make_periodic(p_star)
    if abs(compute_params(stack).theta - 1.0) > tol:
        return None
    return stack
