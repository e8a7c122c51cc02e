"""Branching-like processes, their parameter estimators, and the
local-time correspondence check against walk-extracted edge chains."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from . import seeds as _seeds
from .env import Environment, PeriodicStack, compute_params
from .stats import SampleSet

TRIAL_CAP = 10 ** 9  # hard per-transition trial cap; exceeding it is an error


class InconclusiveError(RuntimeError):
    """Raised when too few walks reach the stopping time to compare laws."""


class BlpKind(enum.Enum):
    U = _k.KU
    UHAT = _k.KUHAT
    V = _k.KV
    VHAT = _k.KVHAT

    @classmethod
    def parse(cls, name: str) -> "BlpKind":
        key = name.strip().replace("^", "").replace("hat", "HAT").upper()
        return cls[key]

    @property
    def absorbing(self) -> bool:
        return self in (BlpKind.U, BlpKind.V)

    def tail_exponent(self, theta: float, theta_tilde: float) -> float:
        """s_Z: the extinction-time tail exponent of this kind."""
        return {
            BlpKind.U: 1.0 - theta,
            BlpKind.UHAT: theta_tilde,
            BlpKind.V: 1.0 - theta_tilde,
            BlpKind.VHAT: theta,
        }[self]

    def drift_constant(self, rho: float, rho_tilde: float) -> float:
        """b_Z: the large-state per-step mean drift of this kind."""
        return {
            BlpKind.U: rho,
            BlpKind.UHAT: 1.0 + rho,
            BlpKind.V: rho_tilde,
            BlpKind.VHAT: 1.0 + rho_tilde,
        }[self]


@dataclass
class BlpTrajectory:
    kind: BlpKind
    states: np.ndarray
    sigma0: int | None
    running_sum: float
    censored: bool
    seed: int


@dataclass
class Estimate:
    value: float
    stderr: float
    reps: int

    def within(self, target: float, nsigma: float = 3.0) -> bool:
        return abs(self.value - target) <= nsigma * self.stderr


@dataclass
class PsiResult:
    residual: float
    stderr: float
    psi_hat: float
    drift_hat: float


@dataclass
class TailSurvey:
    kind: BlpKind
    sigma0: SampleSet
    sums: SampleSet
    censored_fraction: float
    s_expected: float | None
    informative: bool | None


@dataclass
class StateComparison:
    kind: str
    state: int
    tv: float
    chi2: float
    n_walk: int
    n_direct: int


@dataclass
class CorrespondenceReport:
    x: int
    m: int
    reps: int
    discarded: int
    s_cap: int
    rows: list = field(default_factory=list)

    def max_tv(self, min_obs: int) -> float:
        tvs = [r.tv for r in self.rows if r.n_walk >= min_obs]
        return max(tvs) if tvs else 0.0

    def gated_rows(self, min_obs: int) -> list:
        return [r for r in self.rows if r.n_walk >= min_obs]


def _check_draws(draws: np.ndarray) -> np.ndarray:
    if np.any(draws < 0):
        raise RuntimeError("branching transition exceeded the trial cap")
    return draws


def blp_step(kind: BlpKind, env: Environment, m: int, seed: int) -> int:
    """One transition from state m on a fresh cookie-stack realization."""
    if m < 0:
        raise ValueError("state must be nonnegative")
    return int(step_draws(kind, env, m, 1, seed)[0])


def step_draws(kind: BlpKind, env: Environment, m: int, reps: int, seed: int,
               stream: int = _seeds.WALK_STREAM,
               method: str = "auto") -> np.ndarray:
    """reps independent transitions from state m.

    method="trial" forces the per-trial reference sampler; "auto" allows the
    exact blocked sampler for large states on periodic stacks.
    """
    ek, probs, states, cdf, initial, h, eps, _ = env.kernel_args()
    seeds = _seeds.replica_seeds(seed, reps, stream)
    out = _k.blp_draws(ek, probs, states, cdf, initial, h, eps,
                       kind.value, m, seeds, TRIAL_CAP, method != "trial")
    return _check_draws(out)


def simulate_blp(kind: BlpKind, env: Environment, z0: int, cap: int,
                 seed: int) -> BlpTrajectory:
    if cap < 1:
        raise ValueError("cap must be >= 1")
    if z0 < 0:
        raise ValueError("z0 must be nonnegative")
    ek, probs, states, cdf, initial, h, eps, _ = env.kernel_args()
    wseed = _seeds.single_seed(seed, _seeds.WALK_STREAM)
    states_out, sigma0, total = _k.blp_traj(ek, probs, states, cdf, initial,
                                            h, eps, kind.value, z0, cap,
                                            wseed, TRIAL_CAP, True)
    if sigma0 == -2:
        raise RuntimeError("branching transition exceeded the trial cap")
    censored = sigma0 < 0
    return BlpTrajectory(kind=kind, states=states_out,
                         sigma0=None if censored else int(sigma0),
                         running_sum=float(total), censored=bool(censored),
                         seed=int(seed))


def estimate_drift(kind: BlpKind, env: Environment, n: int, reps: int,
                   seed: int) -> Estimate:
    """Monte Carlo E[Z_1 | Z_0 = n] - n with jackknife standard error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if reps < 2:
        raise ValueError("reps must be >= 2")
    draws = step_draws(kind, env, n, reps, seed)
    diffs = draws - n
    # for the sample mean the jackknife variance reduces to s^2 / reps
    se = float(diffs.std(ddof=1) / math.sqrt(reps))
    return Estimate(value=float(diffs.mean()), stderr=se, reps=reps)


def estimate_variance(kind: BlpKind, env: Environment, n: int, reps: int,
                      seed: int) -> Estimate:
    """Monte Carlo Var(Z_1 | Z_0 = n) / n with jackknife standard error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if reps < 3:
        raise ValueError("reps must be >= 3")
    draws = step_draws(kind, env, n, reps, seed).astype(np.float64)
    r = reps
    s1 = draws.sum()
    s2 = np.sum(draws ** 2)
    var = (s2 - s1 * s1 / r) / (r - 1)
    # leave-one-out variances from the sufficient statistics
    s1i = s1 - draws
    s2i = s2 - draws ** 2
    loo = (s2i - s1i * s1i / (r - 1)) / (r - 2) / n
    se = math.sqrt((r - 1) / r * float(np.sum((loo - loo.mean()) ** 2)))
    return Estimate(value=float(var / n), stderr=se, reps=reps)


def psi_check(env: Environment, n: int, reps: int, seed: int) -> PsiResult:
    """Difference between the consumed-drift functional and E[U_1|U_0=n] - n,
    estimated from the same draws; zero in expectation for every n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ek, probs, states, cdf, initial, h, eps, _ = env.kernel_args()
    seeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    u1, dr = _k.psi_draws(ek, probs, states, cdf, initial, h, eps, n,
                          seeds, TRIAL_CAP)
    _check_draws(u1)
    resid = dr - (u1 - n)
    se = float(resid.std(ddof=1) / math.sqrt(reps))
    return PsiResult(residual=float(resid.mean()), stderr=se,
                     psi_hat=float(dr.mean()), drift_hat=float(u1.mean() - n))


def tail_survey(kind: BlpKind, env: Environment, z0: int, reps: int, cap: int,
                seed: int) -> TailSurvey:
    """sigma_0 and running-sum samples, right-censored at cap steps."""
    ek, probs, states, cdf, initial, h, eps, _ = env.kernel_args()
    seeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    sig, tot, cen = _k.blp_tail_survey(ek, probs, states, cdf, initial, h, eps,
                                       kind.value, z0, cap, seeds, TRIAL_CAP,
                                       True)
    if np.any(sig == -2):
        raise RuntimeError("branching transition exceeded the trial cap")
    s_expected = None
    informative = None
    if isinstance(env, PeriodicStack):
        p = compute_params(env)
        s_expected = kind.tail_exponent(p.theta, p.theta_tilde)
        # the band where a desk-scale survival regression is well conditioned:
        # smaller s decays too slowly to resolve, larger s leaves too little tail
        informative = 0.2 < s_expected < 0.8
    return TailSurvey(
        kind=kind,
        sigma0=SampleSet(sig.astype(np.float64), label=f"sigma0[{kind.name}]",
                         censored=cen.copy()),
        sums=SampleSet(tot, label=f"sum[{kind.name}]", censored=cen.copy()),
        censored_fraction=float(cen.mean()),
        s_expected=s_expected,
        informative=informative,
    )


def coupled_domination_check(base_env: PeriodicStack, h: float, eps: float,
                             z0: int, steps: int, reps: int, seed: int) -> int:
    """Paired VHAT runs under the shared-uniform coupling; returns the total
    number of steps at which the boosted-environment state exceeded the base
    state (exact domination means zero)."""
    if not isinstance(base_env, PeriodicStack):
        raise ValueError("coupling is defined over a periodic base stack")
    hmax = min(1.0 - p for p in base_env.probs)
    if not (0.0 <= h < hmax):
        raise ValueError(f"h must be in [0, {hmax})")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must be in (0,1)")
    probs = np.asarray(base_env.probs, dtype=np.float64)
    seeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    viol = _k.dom_check(probs, h, eps, z0, steps, seeds, TRIAL_CAP)
    if np.any(viol < 0):
        raise RuntimeError("branching transition exceeded the trial cap")
    return int(viol.sum())


def bridge_samples(kind: BlpKind, env: Environment, z0: int, nsteps: int,
                   stop_level: int, reps: int, seed: int) -> np.ndarray:
    """Z at step nsteps, stopped on first passage <= stop_level (one sample
    per replica); feeds the diffusion-approximation comparison."""
    ek, probs, states, cdf, initial, h, eps, _ = env.kernel_args()
    seeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    out = _k.blp_bridge(ek, probs, states, cdf, initial, h, eps, kind.value,
                        z0, nsteps, stop_level, seeds, TRIAL_CAP, True)
    return _check_draws(out)


# ---------------------------------------------------------------------------
# generalized Ray-Knight correspondence
# ---------------------------------------------------------------------------

def _extract_chain_pairs(E: np.ndarray, D: np.ndarray, w: int, x: int):
    """Transition pairs (kind, state, next) from one walk's edge profiles.

    Moving right from x, transitions into sites in (x, 0] follow UHAT and
    into sites > 0 follow U; moving left, transitions into [0, x) follow VHAT
    and into sites < 0 follow V. Absorbing chains stop at their first zero
    state; the non-absorbing segments are recorded in full.
    """
    pairs = []
    # rightward edge chain
    for d in range(x + 1, w):
        cur = E[d - 1 + w]
        kind = BlpKind.UHAT if (x < d <= 0) else BlpKind.U
        if kind is BlpKind.U and cur == 0:
            break
        pairs.append((kind, int(cur), int(E[d + w])))
    # leftward edge chain
    for d in range(x - 1, -w, -1):
        cur = D[d + 1 + w]
        kind = BlpKind.VHAT if (0 <= d < x) else BlpKind.V
        if kind is BlpKind.V and cur == 0:
            break
        pairs.append((kind, int(cur), int(D[d + w])))
    return pairs


def _tv_and_chi2(walk_counts: dict, direct: np.ndarray) -> tuple[float, float]:
    support = sorted(set(walk_counts) | set(direct.tolist()))
    n1 = sum(walk_counts.values())
    n2 = len(direct)
    dcounts = {}
    for v in direct.tolist():
        dcounts[v] = dcounts.get(v, 0) + 1
    tv = 0.0
    chi2 = 0.0
    for v in support:
        c1 = walk_counts.get(v, 0)
        c2 = dcounts.get(v, 0)
        f1 = c1 / n1
        f2 = c2 / n2
        tv += abs(f1 - f2)
        pooled = (c1 + c2) / (n1 + n2)
        e1 = n1 * pooled
        e2 = n2 * pooled
        if e1 > 0:
            chi2 += (c1 - e1) ** 2 / e1
        if e2 > 0:
            chi2 += (c2 - e2) ** 2 / e2
    return 0.5 * tv, chi2


def rayknight_check(env: Environment, x: int, m: int, reps: int, seed: int,
                    step_cap: int = 1_000_000, s_cap: int = 30) -> CorrespondenceReport:
    """Compare walk-extracted edge-chain transitions against direct draws.

    Simulates reps walks to the (m+1)-st visit of x, pools extracted
    transitions by (chain kind, current state <= s_cap), and draws reps fresh
    transitions per pooled state for the total-variation comparison.
    """
    if reps < 1000:
        raise ValueError("reps must be >= 1000 for a meaningful comparison")
    ek, probs, states, cdf, initial, h, eps, _ = env.kernel_args()
    wseeds = _seeds.replica_seeds(seed, reps, _seeds.WALK_STREAM)
    if ek == _k.PERIODIC:
        eseeds = np.zeros(reps, np.uint64)
    else:
        eseeds = _seeds.replica_env_seeds(seed, reps, _seeds.ENV_STREAM)

    pooled: dict[tuple, dict] = {}
    discarded = 0
    for r in range(reps):
        reached, lam, E, D, counts, w, _, _ = _k.walk_to_visit(
            ek, probs, states, cdf, initial, h, eps, eseeds[r],
            x, m, step_cap, wseeds[r], False)
        if not reached:
            discarded += 1
            continue
        if E[x + w] + D[x + w] != m:
            raise AssertionError("edge initial condition violated")
        for kind, cur, nxt in _extract_chain_pairs(E, D, int(w), x):
            if cur > s_cap:
                continue
            key = (kind, cur)
            bucket = pooled.setdefault(key, {})
            bucket[nxt] = bucket.get(nxt, 0) + 1

    if discarded > reps // 2:
        raise InconclusiveError(
            f"{discarded}/{reps} walks never reached the stopping time")

    report = CorrespondenceReport(x=x, m=m, reps=reps, discarded=discarded,
                                  s_cap=s_cap)
    for (kind, cur) in sorted(pooled, key=lambda k: (k[0].value, k[1])):
        walk_counts = pooled[(kind, cur)]
        stream = _seeds.DIRECT_STREAM * 10000 + kind.value * 1000 + cur
        direct = step_draws(kind, env, cur, reps, seed, stream=stream)
        tv, chi2 = _tv_and_chi2(walk_counts, direct)
        report.rows.append(StateComparison(
            kind=kind.name, state=cur, tv=tv, chi2=chi2,
            n_walk=sum(walk_counts.values()), n_direct=reps))
    return report
