"""Excited random walk simulation and pathwise diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels as _k
from . import seeds as _seeds
from .env import Environment, ModelParams


@dataclass
class WalkRecord:
    """One simulated walk with the bookkeeping for the drift decomposition.

    positions holds X_0..X_n; C is the accumulated cookie drift, B = X - C the
    martingale part, M/I the running extrema. visit_counts[x + counts_offset]
    is the number of visits strictly before time n, so its total equals n.
    consumed_qv is the running sum of (2w-1)^2 over consumed cookies.
    """

    positions: np.ndarray
    C: np.ndarray
    visit_counts: np.ndarray
    counts_offset: int
    consumed_qv: float
    seed: int
    env_spec: dict
    exact_drift: list | None = None

    @property
    def n(self) -> int:
        return len(self.positions) - 1

    @property
    def B(self) -> np.ndarray:
        return self.positions - self.C

    @property
    def M(self) -> np.ndarray:
        return np.maximum.accumulate(self.positions)

    @property
    def I(self) -> np.ndarray:
        return np.minimum.accumulate(self.positions)

    def local_time(self, x: int) -> int:
        idx = x + self.counts_offset
        if 0 <= idx < len(self.visit_counts):
            return int(self.visit_counts[idx])
        return 0

    def local_times(self) -> tuple[np.ndarray, np.ndarray]:
        """(sites, counts) restricted to visited sites."""
        nz = np.flatnonzero(self.visit_counts)
        return nz - self.counts_offset, self.visit_counts[nz]


@dataclass
class EdgeLocalTimes:
    """Directed-edge step counts before the (m+1)-st visit to the center site."""

    x: int
    m: int
    lam: int
    lo: int
    E_counts: np.ndarray
    D_counts: np.ndarray
    local: np.ndarray  # visit counts before lam over the same span

    def _get(self, arr: np.ndarray, y: int) -> int:
        idx = y - self.lo
        if 0 <= idx < len(arr):
            return int(arr[idx])
        return 0

    def E(self, y: int) -> int:
        return self._get(self.E_counts, y)

    def D(self, y: int) -> int:
        return self._get(self.D_counts, y)

    def local_time(self, y: int) -> int:
        return self._get(self.local, y)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.lo + len(self.E_counts))

    def led_residuals(self) -> np.ndarray:
        """Residuals of the case-split local-time identity, one per site."""
        res = np.empty(len(self.sites), np.int64)
        for i, y in enumerate(self.sites):
            lt = self.local[i]
            if y == self.x:
                rhs = self.m
            elif y < self.x:
                rhs = self.D(y) + self.D(y + 1) + (1 if 0 <= y < self.x else 0)
            else:
                rhs = self.E(y - 1) + self.E(y) + (1 if self.x < y <= 0 else 0)
            res[i] = lt - rhs
        return res

    def pairing_residuals(self) -> np.ndarray:
        """Residuals of D_y = E_{y-1} + 1{x<y<=0} (y>x) and its mirror (y<x)."""
        res = np.empty(len(self.sites), np.int64)
        for i, y in enumerate(self.sites):
            if y > self.x:
                res[i] = self.D(y) - self.E(y - 1) - (1 if self.x < y <= 0 else 0)
            elif y < self.x:
                res[i] = self.E(y) - self.D(y + 1) - (1 if 0 <= y < self.x else 0)
            else:
                res[i] = 0
        return res


@dataclass
class DiagnosticsReport:
    n: int
    gamma: float
    range_over_sqrt: float
    max_site_visits_over_sqrt: float
    rare_site_count_over_sqrt: float
    crossing_times: list
    extremum_gap_over_sqrt_log: float
    extremum_gap_over_sqrt: float

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": self.gamma,
            "range_over_sqrt": self.range_over_sqrt,
            "max_site_visits_over_sqrt": self.max_site_visits_over_sqrt,
            "rare_site_count_over_sqrt": self.rare_site_count_over_sqrt,
            "crossing_times": self.crossing_times,
            "extremum_gap_over_sqrt_log": self.extremum_gap_over_sqrt_log,
            "extremum_gap_over_sqrt": self.extremum_gap_over_sqrt,
        }


def simulate_walk(env: Environment, n_steps: int, seed: int,
                  exact_drift: bool = False) -> WalkRecord:
    """Simulate n_steps of the walk; deterministic given (env spec, seed)."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    kind, probs, states, cdf, initial, h, eps, env_seed = env.kernel_args()
    wseed = _seeds.single_seed(seed, _seeds.WALK_STREAM)
    pos, C, qv, counts, w = _k.walk_fixed(kind, probs, states, cdf, initial,
                                          h, eps, env_seed, n_steps, wseed, True)
    rec = WalkRecord(positions=pos, C=C, visit_counts=counts, counts_offset=int(w),
                     consumed_qv=float(qv), seed=int(seed), env_spec=env.spec())
    if exact_drift:
        rec.exact_drift = _exact_drift_sequence(env, pos)
    return rec


def _exact_drift_sequence(env: Environment, positions: np.ndarray) -> list:
    """Replay C_k in exact rational arithmetic (the probabilities' binary
    values are themselves exact rationals)."""
    counts: dict[int, int] = {}
    acc = Fraction(0)
    out = [acc]
    for k in range(len(positions) - 1):
        x = int(positions[k])
        j = counts.get(x, 0) + 1
        counts[x] = j
        p = Fraction(env.cookie(x, j))
        acc += 2 * p - 1
        out.append(acc)
    return out


def hitting_time(record: WalkRecord, k: int) -> int | None:
    """First index with X = k, or None if unreached."""
    hits = np.flatnonzero(record.positions == k)
    return int(hits[0]) if hits.size else None


def visit_time(record: WalkRecord, x: int, m: int) -> int | None:
    """Time of the (m+1)-st visit to x, or None if unreached."""
    hits = np.flatnonzero(record.positions == x)
    return int(hits[m]) if hits.size > m else None


def edge_local_times(record: WalkRecord, x: int, m: int) -> EdgeLocalTimes:
    """Directed-edge step counts strictly before the (m+1)-st visit to x."""
    lam = visit_time(record, x, m)
    if lam is None:
        raise ValueError(f"visit {m + 1} to site {x} not reached in record")
    src = record.positions[:lam]
    if lam == 0:
        lo, span = x, 1
        E = np.zeros(1, np.int64)
        D = np.zeros(1, np.int64)
        local = np.zeros(1, np.int64)
    else:
        dirs = np.diff(record.positions[:lam + 1])
        lo = int(min(src.min(), x))
        hi = int(max(src.max(), x))
        span = hi - lo + 1
        right = dirs == 1
        E = np.bincount(src[right] - lo, minlength=span).astype(np.int64)
        D = np.bincount(src[~right] - lo, minlength=span).astype(np.int64)
        local = np.bincount(src - lo, minlength=span).astype(np.int64)
    return EdgeLocalTimes(x=x, m=m, lam=lam, lo=lo, E_counts=E, D_counts=D,
                          local=local)


def drift_gap(record: WalkRecord, params: ModelParams) -> float:
    """sup_k |C_k - rho (M_k - X_k) - rho~ (I_k - X_k)| / sqrt(n)."""
    pos = record.positions
    M = record.M
    I = record.I
    g = np.abs(record.C - params.rho * (M - pos) - params.rho_tilde * (I - pos))
    return float(g.max() / math.sqrt(record.n))


def walk_diagnostics(record: WalkRecord, gamma: float) -> DiagnosticsReport:
    if not (0.0 < gamma < 0.5):
        raise ValueError("gamma must be in (0, 1/2)")
    n = record.n
    if n < 2:
        raise ValueError("record too short for diagnostics")
    sq = math.sqrt(n)
    pos = record.positions
    M = record.M
    I = record.I
    rng = float(M[-1] - I[-1])
    counts = record.visit_counts
    nz = counts[counts > 0]
    max_lt = float(nz.max()) if nz.size else 0.0
    rare = int(np.count_nonzero((nz >= 1) & (nz < n ** gamma)))

    lvl = int(sq)
    crossings = []
    m = 1
    while m * lvl <= M[-1]:
        crossings.append({"level": m * lvl, "time": hitting_time(record, m * lvl)})
        m *= 2
    m = 1
    while -m * lvl >= I[-1]:
        crossings.append({"level": -m * lvl, "time": hitting_time(record, -m * lvl)})
        m *= 2

    gap = float((M - pos).max())
    return DiagnosticsReport(
        n=n, gamma=gamma,
        range_over_sqrt=rng / sq,
        max_site_visits_over_sqrt=max_lt / sq,
        rare_site_count_over_sqrt=rare / sq,
        crossing_times=crossings,
        extremum_gap_over_sqrt_log=gap / (sq * math.log(n)),
        extremum_gap_over_sqrt=gap / sq,
    )


def run_to_visit(env: Environment, x: int, m: int, cap: int, seed: int,
                 store_path: bool = True):
    """Simulate until the (m+1)-st visit to x, returning the kernel outputs.

    Returns (reached, lam, E, D, counts, halfwidth, path, path_drift).
    """
    kind, probs, states, cdf, initial, h, eps, env_seed = env.kernel_args()
    wseed = _seeds.single_seed(seed, _seeds.WALK_STREAM)
    return _k.walk_to_visit(kind, probs, states, cdf, initial, h, eps, env_seed,
                            x, m, cap, wseed, store_path)


def ensemble_stats(env: Environment, n: int, reps: int, seed: int,
                   params: ModelParams | None = None) -> dict:
    """Per-replica summary statistics for reps independent walks.

    Random environments are re-realized per replica (averaged law); the
    replica-to-seed map is fixed, so results do not depend on threading.
    """
    rho = params.rho if params is not None else 0.0
    rhot = params.rho_tilde if params is not None else 0.0
    kind, probs, states, cdf, initial, h, eps, env_seed = env.kernel_args()
    wseeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    if kind == _k.PERIODIC:
        eseeds = np.zeros(reps, np.uint64)
    else:
        eseeds = _seeds.replica_env_seeds(seed, reps, _seeds.ENV_STREAM)
    fin, gap, sup_mx, sup_mn, qv = _k.walk_batch(
        kind, probs, states, cdf, initial, h, eps, eseeds, n, wseeds, rho, rhot)
    return {
        "final": fin,
        "drift_gap": gap / math.sqrt(n),
        "extremum_gap_over_sqrt": sup_mx / math.sqrt(n),
        "extremum_gap_over_sqrt_log": sup_mx / (math.sqrt(n) * math.log(n)),
        "qv": qv / n,
    }


def dump_path_csv(record: WalkRecord, path) -> None:
    """CSV dump with columns step, position, C, B, M, I."""
    from .reports import write_csv
    pos = record.positions
    rows = zip(range(len(pos)), pos, record.C, record.B, record.M, record.I)
    write_csv(path, ["step", "position", "C", "B", "M", "I"], rows)
