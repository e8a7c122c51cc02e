"""Command-line orchestration: seeded experiment presets with CSV/JSON output."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import blp as _blp
from . import diffusion as _diff
from . import reports as _rep
from . import seeds as _seeds
from . import stats as _stats
from . import walk as _walk
from .env import (InvalidEnvironment, MarkovStack, ModelParams, PeriodicStack,
                  Regime, classify, compute_params, env_from_spec)

# documented default acceptance thresholds; criteria are data, not code
DEFAULT_THRESHOLDS = {
    "ks": 0.05,
    "tv": 0.05,
    "tail": 0.15,
    "qv_rel": 0.02,
    "min_obs": 200,
}

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_REGIME = 3
EXIT_UNREACHED = 4
EXIT_INCONCLUSIVE = 5


class CliError(RuntimeError):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _emit(obj, args) -> None:
    indent = 2 if getattr(args, "json", False) else None
    sys.stdout.write(_rep.to_json(obj, indent=indent) + "\n")


def _outdir(args) -> Path | None:
    out = getattr(args, "out", None)
    if out is None:
        return None
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_env(args):
    if not getattr(args, "env", None):
        raise CliError(EXIT_INVALID, "an environment spec is required (--env)")
    try:
        return env_from_spec(args.env)
    except (InvalidEnvironment, KeyError, ValueError, OSError) as exc:
        raise CliError(EXIT_INVALID, f"invalid environment spec: {exc}")


def _periodic_params(env) -> ModelParams | None:
    if isinstance(env, PeriodicStack):
        return compute_params(env)
    return None


def _params_for(env, seed: int, n: int = 400, reps: int = 100_000) -> ModelParams:
    """Closed-form parameters for periodic stacks, Monte Carlo estimates
    otherwise (the parameters of a Markov stack are estimated, not derived)."""
    p = _periodic_params(env)
    if p is not None:
        return p
    rho = _blp.estimate_drift(_blp.BlpKind.U, env, n, reps,
                              _seeds.single_seed(seed, 101)).value
    rhot = _blp.estimate_drift(_blp.BlpKind.V, env, n, reps,
                               _seeds.single_seed(seed, 102)).value
    nu = _blp.estimate_variance(_blp.BlpKind.U, env, n, reps,
                                _seeds.single_seed(seed, 103)).value
    return ModelParams(theta=2 * rho / nu, theta_tilde=2 * rhot / nu,
                       rho=rho, rho_tilde=rhot, nu=nu, a=math.sqrt(2 / nu))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_params(args) -> None:
    env = _load_env(args)
    if isinstance(env, PeriodicStack):
        p = compute_params(env)
        out = {
            "env": env.spec(),
            "params": p.as_dict(),
            "regime": classify(p).value,
            "mean_flag": env.mean_flag,
            "identity_residuals": p.identity_residuals(env),
        }
        if not env.mean_flag:
            out["warning"] = "mean of cookie stack is not 1/2; scaling-limit commands will refuse this environment"
    else:
        out = {"env": env.spec(),
               "note": "closed-form parameters exist only for periodic stacks; "
                       "use the blp command to estimate them"}
    _emit(out, args)


def cmd_classify(args) -> None:
    env = _load_env(args)
    if not isinstance(env, PeriodicStack):
        raise CliError(EXIT_INVALID, "classification requires a periodic stack")
    p = compute_params(env)
    _emit({"theta": p.theta, "theta_tilde": p.theta_tilde,
           "regime": classify(p).value}, args)


def cmd_walk(args) -> None:
    env = _load_env(args)
    out = _outdir(args)
    if args.reps > 1:
        rows = []
        for r in range(args.reps):
            seed_r = _seeds.single_seed(args.seed, 1000 + r)
            rec = _walk.simulate_walk(env.reseed(seed_r), args.n, seed_r)
            d = _walk.walk_diagnostics(rec, args.gamma)
            crossings = ";".join(f"{c['level']}:{'' if c['time'] is None else c['time']}"
                                 for c in d.crossing_times)
            rows.append((r, seed_r, d.n, d.range_over_sqrt,
                         d.max_site_visits_over_sqrt, d.rare_site_count_over_sqrt,
                         crossings, d.extremum_gap_over_sqrt_log))
        if out is not None:
            _rep.write_csv(out / "walk_diagnostics.csv",
                           ["replica", "seed", "n", "range_over_sqrt",
                            "max_site_visits_over_sqrt", "rare_site_count_over_sqrt",
                            "crossing_times", "extremum_gap_over_sqrt_log"],
                           rows)
        med = float(np.median([r[5] for r in rows]))
        _emit({"env": env.spec(), "n": args.n, "reps": args.reps,
               "median_rare_site_count_over_sqrt": med}, args)
        return
    rec = _walk.simulate_walk(env, args.n, args.seed)
    diag = _walk.walk_diagnostics(rec, args.gamma)
    if out is not None:
        _walk.dump_path_csv(rec, out / "walk_path.csv")
    summary = {
        "env": env.spec(), "n": rec.n, "seed": args.seed,
        "final": int(rec.positions[-1]),
        "diagnostics": diag.as_dict(),
    }
    _emit(summary, args)


def cmd_blp(args) -> None:
    env = _load_env(args)
    kind = _blp.BlpKind.parse(args.kind)
    out = _outdir(args)
    if args.op == "traj":
        traj = _blp.simulate_blp(kind, env, args.z0, args.cap, args.seed)
        if out is not None:
            _rep.write_csv(out / "blp_traj.csv", ["step", "state"],
                           enumerate(traj.states))
        _emit({"env": env.spec(), "kind": kind.name, "z0": args.z0,
               "sigma0": traj.sigma0, "sum": traj.running_sum,
               "censored": traj.censored}, args)
    elif args.op == "step":
        val = _blp.blp_step(kind, env, args.level, args.seed)
        _emit({"env": env.spec(), "kind": kind.name, "state": args.level,
               "next": val}, args)
    else:
        fn = _blp.estimate_drift if args.op == "drift" else _blp.estimate_variance
        est = fn(kind, env, args.level, args.reps, args.seed)
        _emit({"env": env.spec(), "kind": kind.name, "op": args.op,
               "level": args.level, "reps": args.reps,
               "estimate": est.value, "stderr": est.stderr}, args)


def cmd_psi(args) -> None:
    env = _load_env(args)
    res = _blp.psi_check(env, args.level, args.reps, args.seed)
    _emit({"env": env.spec(), "level": args.level, "reps": args.reps,
           "residual": res.residual, "stderr": res.stderr,
           "psi_hat": res.psi_hat, "drift_hat": res.drift_hat}, args)


def cmd_rayknight(args) -> None:
    env = _load_env(args)
    try:
        rep = _blp.rayknight_check(env, args.x, args.m, args.reps, args.seed,
                                   step_cap=args.cap, s_cap=args.s_cap)
    except _blp.InconclusiveError as exc:
        raise CliError(EXIT_INCONCLUSIVE, str(exc))
    out = _outdir(args)
    if out is not None:
        _rep.write_csv(out / "rayknight.csv",
                       ["kind", "state", "tv_distance", "n_walk_obs", "n_direct_obs"],
                       ((r.kind, r.state, r.tv, r.n_walk, r.n_direct)
                        for r in rep.rows))
    gated = rep.gated_rows(args.min_obs)
    max_tv = rep.max_tv(args.min_obs)
    report = _rep.experiment_report(
        "rayknight", env.spec(), None,
        {"max_tv": max_tv, "gated_states": len(gated),
         "total_states": len(rep.rows), "discarded": rep.discarded,
         "reps": rep.reps},
        {"tv": args.tv, "min_obs": args.min_obs},
        max_tv < args.tv)
    _emit(report, args)


def cmd_tails(args) -> None:
    env = _load_env(args)
    kind = _blp.BlpKind.parse(args.kind)
    survey = _blp.tail_survey(kind, env, args.z0, args.reps, args.cap, args.seed)
    out = _outdir(args)
    if out is not None:
        rows = zip(range(args.reps), survey.sigma0.values.astype(int),
                   survey.sums.values, survey.sigma0.censored)
        _rep.write_csv(out / "tails.csv", ["replica", "sigma0", "sum", "censored"],
                       rows)
    stats = {"censored_fraction": survey.censored_fraction,
             "s_expected": survey.s_expected,
             "informative": survey.informative}
    passed = True
    for name, samples, target_scale in (("sigma0", survey.sigma0, 1.0),
                                        ("sum", survey.sums, 0.5)):
        try:
            fit = _stats.tail_exponent(samples, args.tail_fraction)
            stats[f"{name}_fit"] = fit.as_dict()
            if survey.s_expected is not None and survey.informative:
                err = abs(fit.exponent - target_scale * survey.s_expected)
                stats[f"{name}_abs_error"] = err
                passed = passed and err <= args.tol
        except ValueError as exc:
            stats[f"{name}_fit"] = {"error": str(exc)}
            passed = False
    _emit(_rep.experiment_report("tails", env.spec(), None, stats,
                                 {"tail": args.tol}, passed), args)


def cmd_driftgap(args) -> None:
    env = _load_env(args)
    params = _params_for(env, args.seed)
    ns = [int(float(v)) for v in args.n_list.split(",")]
    medians = {}
    rows = []
    for n in ns:
        st = _walk.ensemble_stats(env, n, args.reps, args.seed, params=params)
        gaps = st["drift_gap"]
        medians[str(n)] = float(np.median(gaps))
        rows.extend((n, r, g) for r, g in enumerate(gaps))
    out = _outdir(args)
    if out is not None:
        _rep.write_csv(out / "driftgap.csv", ["n", "replica", "gap"], rows)
    vals = [medians[str(n)] for n in ns]
    decreasing = all(b < a for a, b in zip(vals, vals[1:]))
    ratio = vals[-1] / vals[0] if vals[0] > 0 else math.inf
    _emit(_rep.experiment_report(
        "driftgap", env.spec(), params.as_dict(),
        {"medians": medians, "decreasing": decreasing, "last_over_first": ratio,
         "reps": args.reps},
        {}, True), args)


def cmd_qv(args) -> None:
    env = _load_env(args)
    rec = _walk.simulate_walk(env, args.n, args.seed)
    qv = _stats.qv_statistic(rec, env)
    stats = {"qv": qv, "n": args.n}
    params = _periodic_params(env)
    passed = True
    if params is not None:
        target = 1.0 - params.nu / 2.0
        stats["target"] = target
        if target != 0:
            stats["rel_error"] = abs(qv - target) / abs(target)
            passed = stats["rel_error"] <= args.tol
    _emit(_rep.experiment_report("qv", env.spec(),
                                 params.as_dict() if params else None,
                                 stats, {"qv_rel": args.tol}, passed), args)


def cmd_diffusion(args) -> None:
    out = _outdir(args)
    if args.model == "sqbessel":
        if args.reps <= 1:
            path = _diff.simulate_sqbessel(args.b, args.nu, args.y0, args.dt,
                                           args.T, args.eps_stop, args.seed)
            if out is not None:
                _rep.write_csv(out / "sqbessel_path.csv", ["time", "value"],
                               zip(path.times, path.values))
            _emit({"model": "sqbessel", "stopped_at": float(path.times[-1]),
                   "final": float(path.values[-1])}, args)
        else:
            ss = _diff.sqbessel_marginal_samples(args.b, args.nu, args.y0,
                                                 args.dt, args.T, args.eps_stop,
                                                 args.reps, args.seed)
            if out is not None:
                _rep.write_csv(out / "sqbessel_marginal.csv", ["replica", "value"],
                               enumerate(ss.values))
            _emit({"model": "sqbessel", "reps": args.reps,
                   "mean": float(ss.values.mean())}, args)
    else:
        if args.alpha >= 1.0 or args.beta >= 1.0:
            raise CliError(EXIT_INVALID,
                           "perturbation parameters must satisfy alpha, beta < 1")
        if args.reps <= 1:
            rng = np.random.default_rng(args.seed)
            incs = rng.normal(0.0, math.sqrt(args.dt), int(round(args.T / args.dt)))
            path = _diff.solve_pbm(args.alpha, args.beta, incs, dt=args.dt,
                                   seed=args.seed)
            if out is not None:
                _rep.write_csv(out / "pbm_path.csv", ["time", "value"],
                               zip(path.times, path.values))
            _emit({"model": "pbm", "final": float(path.values[-1]),
                   "residual": _diff.pbm_reconstruction_residual(path)}, args)
        else:
            ss = _diff.pbm_marginal_samples(args.alpha, args.beta, args.T,
                                            args.dt, args.reps, args.seed)
            if out is not None:
                _rep.write_csv(out / "pbm_marginal.csv", ["replica", "value"],
                               enumerate(ss.values))
            _emit({"model": "pbm", "reps": args.reps,
                   "mean": float(ss.values.mean())}, args)


def cmd_flt(args) -> None:
    env = _load_env(args)
    if not isinstance(env, PeriodicStack):
        raise CliError(EXIT_REGIME, "the scaling-limit experiment needs a periodic stack")
    if not env.mean_flag and not args.force:
        raise CliError(EXIT_REGIME,
                       "cookie stack mean is not 1/2; pass --force to override")
    params = compute_params(env)
    regime = classify(params)
    if regime is not Regime.RECURRENT_NONBOUNDARY and not args.force:
        raise CliError(EXIT_REGIME, f"regime {regime.value} is outside the "
                                    "non-boundary scaling-limit setting")
    st = _walk.ensemble_stats(env, args.n, args.reps,
                              _seeds.single_seed(args.seed, 10))
    walk_samples = st["final"] / (params.a * math.sqrt(args.n))
    pbm = _diff.pbm_marginal_samples(params.theta, params.theta_tilde, args.t,
                                     args.dt, args.reps,
                                     _seeds.single_seed(args.seed, 11))
    ks = _stats.ks_distance(walk_samples, pbm.values)
    out = _outdir(args)
    if out is not None:
        _rep.write_csv(out / "walk_samples.csv", ["replica", "value"],
                       enumerate(walk_samples))
        _rep.write_csv(out / "pbm_samples.csv", ["replica", "value"],
                       enumerate(pbm.values))
    _emit(_rep.experiment_report(
        "flt", env.spec(), params.as_dict(),
        {"ks": ks, "n": args.n, "reps": args.reps, "t": args.t, "dt": args.dt},
        {"ks": args.threshold}, ks < args.threshold), args)


def cmd_boundary(args) -> None:
    stack = _stats.find_boundary(args.N, args.tol, args.seed)
    if stack is None:
        _emit({"found": False, "N": args.N, "tol": args.tol}, args)
        return
    p = compute_params(stack)
    _emit({"found": True, "probs": list(stack.probs), "theta": p.theta,
           "regime": classify(p).value}, args)


def cmd_figure(args) -> None:
    env = _load_env(args)
    out = _outdir(args)
    if out is None:
        raise CliError(EXIT_INVALID, "figure emission requires --out")
    if args.which == 1:
        reached, lam, E, D, counts, w, path, pdrift = _walk.run_to_visit(
            env, 100, 50, args.cap, args.seed, store_path=True)
        if not reached:
            raise CliError(EXIT_UNREACHED,
                           f"visit 51 to site 100 not reached within {args.cap} steps")
        pos = path
        C = pdrift
        M = np.maximum.accumulate(pos)
        I = np.minimum.accumulate(pos)
        _rep.write_csv(out / "fig1_path.csv", ["step", "position", "C", "B", "M", "I"],
                       zip(range(len(pos)), pos, C, pos - C, M, I))
        x = 100
        local = counts.copy()
        local[x + w] -= 1  # the stopping visit itself is not a prior visit
        visited = np.flatnonzero(local)
        lo = int(visited.min() - w)
        hi = int(visited.max() - w)

        def led_residual(y: int) -> int:
            lt = int(local[y + w])
            if y == x:
                rhs = 50
            elif y < x:
                rhs = int(D[y + w] + D[y + 1 + w] + (1 if 0 <= y < x else 0))
            else:
                rhs = int(E[y - 1 + w] + E[y + w] + (1 if x < y <= 0 else 0))
            return lt - rhs

        drows = [(y, int(D[y + w]), int(local[y + w]), led_residual(y))
                 for y in range(lo, x + 1)]
        erows = [(y, int(E[y + w]), int(local[y + w]), led_residual(y))
                 for y in range(x, hi + 1)]
        _rep.write_csv(out / "fig1_D_profile.csv",
                       ["y", "D", "local_time", "led_residual"], drows)
        _rep.write_csv(out / "fig1_E_profile.csv",
                       ["y", "E", "local_time", "led_residual"], erows)
        _emit({"which": 1, "lambda": int(lam), "files": ["fig1_path.csv",
               "fig1_D_profile.csv", "fig1_E_profile.csv"]}, args)
    else:
        params = _params_for(env, args.seed)
        rec = _walk.simulate_walk(env, args.n, args.seed)
        pos = rec.positions
        approx = (params.rho * (rec.M - pos)
                  + params.rho_tilde * (rec.I - pos))
        _rep.write_csv(out / "fig3_drift.csv", ["step", "C", "approx"],
                       zip(range(len(pos)), rec.C, approx))
        gap = float(np.abs(rec.C - approx).max() / math.sqrt(rec.n))
        _emit({"which": 3, "n": rec.n, "max_gap_over_sqrt": gap,
               "params": params.as_dict(), "files": ["fig3_drift.csv"]}, args)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sp, env=True, seed=True, out=True):
    if env:
        sp.add_argument("--env", help="environment spec: JSON file, inline JSON, "
                                      "or comma-separated periodic probabilities")
    if seed:
        sp.add_argument("--seed", type=int, required=True,
                        help="master seed (mandatory; reproducibility is a contract)")
    if out:
        sp.add_argument("--out", help="output directory for CSV files")
    sp.add_argument("--json", action="store_true", help="pretty-print JSON output")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads (results are identical for any value)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="erwlab",
                                 description="excited random walk simulation lab")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("params", help="closed-form parameters and regime")
    _add_common(sp, seed=False, out=False)
    sp.set_defaults(fn=cmd_params)

    sp = sub.add_parser("classify", help="recurrence/transience classification")
    _add_common(sp, seed=False, out=False)
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("walk", help="simulate walks and their diagnostics")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--gamma", type=float, default=0.25)
    sp.add_argument("--reps", type=int, default=1,
                    help="with reps > 1, emit a per-replica diagnostics CSV")
    sp.set_defaults(fn=cmd_walk)

    sp = sub.add_parser("blp", help="branching-like process operations")
    _add_common(sp)
    sp.add_argument("--kind", default="U", help="U | Uhat | V | Vhat")
    sp.add_argument("--op", choices=["traj", "drift", "variance", "step"],
                    default="traj")
    sp.add_argument("--z0", type=int, default=1)
    sp.add_argument("--level", type=int, default=400, help="conditioning state")
    sp.add_argument("--cap", type=int, default=100_000)
    sp.add_argument("--reps", type=int, default=100_000)
    sp.set_defaults(fn=cmd_blp)

    sp = sub.add_parser("psi", help="drift-functional identity check")
    _add_common(sp, out=False)
    sp.add_argument("--level", type=int, default=5)
    sp.add_argument("--reps", type=int, default=100_000)
    sp.set_defaults(fn=cmd_psi)

    sp = sub.add_parser("rayknight", help="edge local time correspondence check")
    _add_common(sp)
    sp.add_argument("--x", type=int, default=10)
    sp.add_argument("--m", type=int, default=5)
    sp.add_argument("--reps", type=int, default=10_000)
    sp.add_argument("--cap", type=int, default=1_000_000)
    sp.add_argument("--s-cap", type=int, default=30, dest="s_cap")
    sp.add_argument("--min-obs", type=int, default=DEFAULT_THRESHOLDS["min_obs"],
                    dest="min_obs")
    sp.add_argument("--tv", type=float, default=DEFAULT_THRESHOLDS["tv"])
    sp.set_defaults(fn=cmd_rayknight)

    sp = sub.add_parser("tails", help="extinction-time tail survey")
    _add_common(sp)
    sp.add_argument("--kind", default="U")
    sp.add_argument("--z0", type=int, default=1)
    sp.add_argument("--reps", type=int, default=100_000)
    sp.add_argument("--cap", type=int, default=4096)
    sp.add_argument("--tail-fraction", type=float, default=0.3,
                    dest="tail_fraction")
    sp.add_argument("--tol", type=float, default=DEFAULT_THRESHOLDS["tail"])
    sp.set_defaults(fn=cmd_tails)

    sp = sub.add_parser("driftgap", help="drift approximation gap across n")
    _add_common(sp)
    sp.add_argument("--n-list", default="10000,100000,1000000", dest="n_list")
    sp.add_argument("--reps", type=int, default=200)
    sp.set_defaults(fn=cmd_driftgap)

    sp = sub.add_parser("qv", help="quadratic variation statistic")
    _add_common(sp, out=False)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--tol", type=float, default=DEFAULT_THRESHOLDS["qv_rel"])
    sp.set_defaults(fn=cmd_qv)

    sp = sub.add_parser("diffusion", help="squared-Bessel or perturbed-BM paths")
    _add_common(sp, env=False)
    sp.add_argument("--model", choices=["sqbessel", "pbm"], default="sqbessel")
    sp.add_argument("--b", type=float, default=0.12)
    sp.add_argument("--nu", type=float, default=1.68)
    sp.add_argument("--y0", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--eps-stop", type=float, default=0.0, dest="eps_stop")
    sp.add_argument("--reps", type=int, default=1)
    sp.set_defaults(fn=cmd_diffusion)

    sp = sub.add_parser("flt", help="scaling-limit marginal comparison")
    _add_common(sp)
    sp.add_argument("--n", type=int, default=100_000)
    sp.add_argument("--reps", type=int, default=10_000)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--dt", type=float, default=1e-4)
    sp.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLDS["ks"])
    sp.add_argument("--force", action="store_true",
                    help="run despite a mean or regime violation")
    sp.set_defaults(fn=cmd_flt)

    sp = sub.add_parser("boundary", help="search for a theta = 1 stack")
    _add_common(sp, env=False, out=False)
    sp.add_argument("--N", type=int, default=4)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.set_defaults(fn=cmd_boundary)

    sp = sub.add_parser("figure", help="CSV inputs for the plotting package")
    _add_common(sp)
    sp.add_argument("--which", type=int, choices=[1, 3], required=True)
    sp.add_argument("--n", type=int, default=200_000, help="steps (figure 3)")
    sp.add_argument("--cap", type=int, default=100_000_000,
                    help="step cap for reaching the stopping time (figure 1)")
    sp.set_defaults(fn=cmd_figure)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None):
        import numba
        numba.set_num_threads(args.threads)
    try:
        args.fn(args)
        return EXIT_OK
    except CliError as exc:
        sys.stderr.write(_rep.to_json({"error": {"code": exc.code,
                                                 "message": str(exc)}}) + "\n")
        return exc.code
    except (InvalidEnvironment, ValueError) as exc:
        sys.stderr.write(_rep.to_json({"error": {"code": EXIT_INVALID,
                                                 "message": str(exc)}}) + "\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
