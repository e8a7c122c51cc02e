"""Numba kernels for walk, branching-process, and diffusion simulation.

Reproducibility contract: every kernel that consumes randomness either
receives an explicit per-replica seed array (and re-seeds numba's
thread-local Mersenne-Twister at the top of each prange iteration, so
results are independent of the thread count and schedule), or derives
site-local values from a counter-based splitmix64 hash of
(environment seed, site, counter).
"""

import numpy as np
from numba import njit, prange

# environment kind codes
PERIODIC = 0
MARKOV = 1
COUPLED = 2

# branching-process kind codes
KU = 0
KUHAT = 1
KV = 2
KVHAT = 3

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_C1 = np.uint64(0x9E3779B97F4A7C15)
_C2 = np.uint64(0xBF58476D1CE4E5B9)
_C3 = np.uint64(0x94D049BB133111EB)
_C4 = np.uint64(0x632BE59BD9B4E019)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _mix64(z):
    # splitmix64 finalizer
    z = (z + _C1) & _M64
    z = ((z ^ (z >> np.uint64(30))) * _C2) & _M64
    z = ((z ^ (z >> np.uint64(27))) * _C3) & _M64
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _zigzag(x):
    # int64 site -> uint64, injective for negatives
    if x >= 0:
        return np.uint64(2 * x)
    return np.uint64(-2 * x - 1)


@njit(cache=True)
def site_u01(env_seed, site, ctr):
    """Uniform in [0,1) as a pure function of (seed, site, counter)."""
    h = _mix64(np.uint64(env_seed) ^ _mix64(_zigzag(site) + _C4))
    z = _mix64(h ^ ((np.uint64(ctr) * _C1) & _M64))
    return (z >> np.uint64(11)) * _INV53


@njit(cache=True, inline="always")
def _geom_cutoff(u, eps):
    # P(G = k) = (1-eps)^k * eps for k >= 0, by inversion
    if u <= 0.0:
        u = _INV53
    return np.int64(np.floor(np.log(u) / np.log1p(-eps)))


@njit(cache=True, inline="always")
def _mc_step(cdf, state, u):
    row = cdf[state]
    for k in range(row.shape[0]):
        if u < row[k]:
            return k
    return row.shape[0] - 1


# ---------------------------------------------------------------------------
# excited random walk
# ---------------------------------------------------------------------------

@njit(cache=True)
def walk_run(kind, probs, states, cdf, initial, h, eps, env_seed,
             n, rho, rhot, pos, drift):
    """Run n steps of the walk. np.random must already be seeded.

    pos/drift are output arrays of length n+1 (full record) or 0 (summary
    only). Per-site tables grow on demand so memory is linear in the range.
    Returns (x, c, qv, gap, sup_mx, sup_mn, counts, halfwidth, mx, mn) where
    gap = sup_k |C_k - rho*(M_k - X_k) - rhot*(I_k - X_k)| and
    sup_mx = sup_k (M_k - X_k), sup_mn = sup_k (X_k - I_k).
    """
    record = pos.shape[0] > 0
    nper = probs.shape[0]

    w = 16 + 4 * np.int64(np.sqrt(n))
    size = 2 * w + 1
    counts = np.zeros(size, np.int64)
    mstate = np.full(size, -1, np.int64)
    gcut = np.full(size, -1, np.int64)

    x = np.int64(0)
    c = 0.0
    qv = 0.0
    mx = np.int64(0)
    mn = np.int64(0)
    gap = 0.0
    sup_mx = np.int64(0)
    sup_mn = np.int64(0)
    if record:
        pos[0] = 0
        drift[0] = 0.0

    for k in range(n):
        if x >= w or -x >= w:
            w2 = 2 * w
            size2 = 2 * w2 + 1
            c2 = np.zeros(size2, np.int64)
            m2 = np.full(size2, -1, np.int64)
            g2 = np.full(size2, -1, np.int64)
            o = w2 - w
            c2[o:o + size] = counts
            m2[o:o + size] = mstate
            g2[o:o + size] = gcut
            counts, mstate, gcut = c2, m2, g2
            w, size = w2, size2

        idx = x + w
        j = counts[idx] + 1  # 1-based cookie index of this visit
        counts[idx] = j

        if kind == PERIODIC:
            p = probs[(j - 1) % nper]
        elif kind == MARKOV:
            if j == 1:
                s = initial
            else:
                s = _mc_step(cdf, mstate[idx], site_u01(env_seed, x, j))
            mstate[idx] = s
            p = states[s]
        else:  # COUPLED
            g = gcut[idx]
            if g < 0:
                g = _geom_cutoff(site_u01(env_seed, x, 0), eps)
                gcut[idx] = g
            p = probs[(j - 1) % nper]
            if j <= g:
                p += h

        d = 2.0 * p - 1.0
        c += d
        qv += d * d
        if np.random.random() < p:
            x += 1
        else:
            x -= 1
        if x > mx:
            mx = x
        if x < mn:
            mn = x
        if record:
            pos[k + 1] = x
            drift[k + 1] = c

        g1 = c - rho * (mx - x) - rhot * (mn - x)
        if g1 < 0.0:
            g1 = -g1
        if g1 > gap:
            gap = g1
        if mx - x > sup_mx:
            sup_mx = mx - x
        if x - mn > sup_mn:
            sup_mn = x - mn

    return x, c, qv, gap, sup_mx, sup_mn, counts, w, mx, mn


@njit(cache=True)
def walk_fixed(kind, probs, states, cdf, initial, h, eps, env_seed,
               n, seed, record):
    np.random.seed(seed)
    if record:
        pos = np.empty(n + 1, np.int64)
        drift = np.empty(n + 1, np.float64)
    else:
        pos = np.empty(0, np.int64)
        drift = np.empty(0, np.float64)
    res = walk_run(kind, probs, states, cdf, initial, h, eps, env_seed,
                   n, 0.0, 0.0, pos, drift)
    return pos, drift, res[2], res[6], res[7]


@njit(cache=True, parallel=True)
def walk_batch(kind, probs, states, cdf, initial, h, eps, env_seeds,
               n, seeds, rho, rhot):
    """Summary statistics for an ensemble of independent walks."""
    reps = seeds.shape[0]
    fin = np.empty(reps, np.int64)
    gap = np.empty(reps, np.float64)
    sup_mx = np.empty(reps, np.int64)
    sup_mn = np.empty(reps, np.int64)
    qv = np.empty(reps, np.float64)
    e = np.empty(0, np.int64)
    f = np.empty(0, np.float64)
    for r in prange(reps):
        np.random.seed(seeds[r])
        res = walk_run(kind, probs, states, cdf, initial, h, eps,
                       env_seeds[r], n, rho, rhot,
                       e[:0], f[:0])
        fin[r] = res[0]
        qv[r] = res[2]
        gap[r] = res[3]
        sup_mx[r] = res[4]
        sup_mn[r] = res[5]
    return fin, gap, sup_mx, sup_mn, qv


@njit(cache=True)
def walk_to_visit(kind, probs, states, cdf, initial, h, eps, env_seed,
                  xt, mt, cap, seed, store_path):
    """Run until the (mt+1)-st visit to site xt, or cap steps.

    Returns (reached, lam, E, D, counts, halfwidth, path, path_drift) with
    E/D the directed-edge step counts from each site strictly before the
    stopping time.
    """
    np.random.seed(seed)
    nper = probs.shape[0]

    w = np.int64(16 + 2 * max(abs(xt), 8))
    size = 2 * w + 1
    counts = np.zeros(size, np.int64)
    mstate = np.full(size, -1, np.int64)
    gcut = np.full(size, -1, np.int64)
    E = np.zeros(size, np.int64)
    D = np.zeros(size, np.int64)

    cap_path = 1024
    if store_path:
        path = np.empty(cap_path, np.int64)
        pdrift = np.empty(cap_path, np.float64)
    else:
        path = np.empty(0, np.int64)
        pdrift = np.empty(0, np.float64)

    x = np.int64(0)
    c = 0.0
    k = np.int64(0)
    reached = False
    lam = np.int64(-1)
    if store_path:
        path[0] = 0
        pdrift[0] = 0.0

    while True:
        if x >= w or -x >= w:
            w2 = 2 * w
            size2 = 2 * w2 + 1
            o = w2 - w
            c2 = np.zeros(size2, np.int64)
            m2 = np.full(size2, -1, np.int64)
            g2 = np.full(size2, -1, np.int64)
            e2 = np.zeros(size2, np.int64)
            d2 = np.zeros(size2, np.int64)
            c2[o:o + size] = counts
            m2[o:o + size] = mstate
            g2[o:o + size] = gcut
            e2[o:o + size] = E
            d2[o:o + size] = D
            counts, mstate, gcut, E, D = c2, m2, g2, e2, d2
            w, size = w2, size2

        idx = x + w
        j = counts[idx] + 1
        counts[idx] = j
        if x == xt and j == mt + 1:
            reached = True
            lam = k
            break
        if k >= cap:
            break

        if kind == PERIODIC:
            p = probs[(j - 1) % nper]
        elif kind == MARKOV:
            if j == 1:
                s = initial
            else:
                s = _mc_step(cdf, mstate[idx], site_u01(env_seed, x, j))
            mstate[idx] = s
            p = states[s]
        else:
            g = gcut[idx]
            if g < 0:
                g = _geom_cutoff(site_u01(env_seed, x, 0), eps)
                gcut[idx] = g
            p = probs[(j - 1) % nper]
            if j <= g:
                p += h

        c += 2.0 * p - 1.0
        if np.random.random() < p:
            E[idx] += 1
            x += 1
        else:
            D[idx] += 1
            x -= 1
        k += 1
        if store_path:
            if k >= cap_path:
                cap_path2 = 2 * cap_path
                p2 = np.empty(cap_path2, np.int64)
                q2 = np.empty(cap_path2, np.float64)
                p2[:cap_path] = path
                q2[:cap_path] = pdrift
                path, pdrift, cap_path = p2, q2, cap_path2
            path[k] = x
            pdrift[k] = c

    nt = k + 1 if store_path else 0
    return reached, lam, E, D, counts, w, path[:nt], pdrift[:nt]


# ---------------------------------------------------------------------------
# branching-like processes
# ---------------------------------------------------------------------------

@njit(cache=True)
def _binom(n, p):
    """Exact Binomial(n, p) in O(log n) via beta order-statistic splitting.

    The a-th order statistic of n uniforms is Beta(a, n+1-a); conditioning on
    it splits the count into a smaller binomial, so the state halves per
    iteration until a direct Bernoulli sweep finishes the job.
    """
    if p <= 0.0:
        return np.int64(0)
    if p >= 1.0:
        return np.int64(n)
    nn = n
    pp = p
    cnt = np.int64(0)
    while nn > 64:
        a = 1 + nn // 2
        b = nn + 1 - a
        x = np.random.beta(float(a), float(b))
        if pp < x:
            nn = a - 1
            pp = pp / x
        else:
            cnt += a
            nn = b - 1
            pp = (pp - x) / (1.0 - x)
            if pp < 0.0:
                pp = 0.0
    for _ in range(nn):
        if np.random.random() < pp:
            cnt += 1
    return cnt


@njit(cache=True)
def _blp_next_periodic(probs, count_success, target, itcap):
    """Counting transition for a periodic stack, with exact block shortcuts.

    Whole periods of the stack contribute exchangeable Bernoulli blocks, so
    while the remaining stop count is large we consume whole-period blocks
    via per-phase binomial draws (phase-aligned, so the cookie phase is
    unchanged); a block containing the stopping trial is revealed
    sequentially from its conditional law given the per-phase counts.
    """
    nper = probs.shape[0]
    sum_stop = 0.0
    for i in range(nper):
        sum_stop += (1.0 - probs[i]) if count_success else probs[i]

    counted = np.int64(0)
    remaining = np.int64(target)
    consumed = np.int64(0)
    fphase = np.empty(nper, np.int64)

    while remaining > 96:
        bsz = np.int64((remaining - 5.0 * np.sqrt(remaining) - 16.0) / sum_stop)
        if bsz < 4:
            break
        f = np.int64(0)
        for i in range(nper):
            sp = (1.0 - probs[i]) if count_success else probs[i]
            fphase[i] = _binom(bsz, sp)
            f += fphase[i]
        consumed += nper * bsz
        if consumed > itcap:
            return np.int64(-1)
        if f < remaining:
            counted += nper * bsz - f
            remaining -= f
        else:
            # reveal the boundary block trial-by-trial: given the per-phase
            # stop counts, stops occupy uniform subsets of each phase class
            kleft = np.empty(nper, np.int64)
            for i in range(nper):
                kleft[i] = bsz
            ph = np.int64(0)
            while True:
                if np.random.random() * kleft[ph] < fphase[ph]:
                    fphase[ph] -= 1
                    remaining -= 1
                    if remaining == 0:
                        kleft[ph] -= 1
                        return counted
                else:
                    counted += 1
                kleft[ph] -= 1
                ph += 1
                if ph == nper:
                    ph = 0
            # unreachable: f >= remaining guarantees the stop occurs in-block

    # trial-by-trial tail, starting at phase 0 (whole-period blocks only)
    ph = np.int64(0)
    while remaining > 0:
        consumed += 1
        if consumed > itcap:
            return np.int64(-1)
        p = probs[ph]
        ph += 1
        if ph == nper:
            ph = 0
        sp = (1.0 - p) if count_success else p
        if np.random.random() < sp:
            remaining -= 1
        else:
            counted += 1
    return counted


@njit(cache=True, inline="always")
def _blp_next(kind, probs, states, cdf, initial, h, eps, blp_kind, m, itcap,
              fast):
    """One transition from state m using a fresh cookie-stack realization.

    Returns -1 if the trial cap is exceeded (callers surface this as an
    error; a raise here would defeat prange parallelization).
    """
    if blp_kind == KU:
        target = m
        count_success = True
    elif blp_kind == KUHAT:
        target = m + 1
        count_success = True
    elif blp_kind == KV:
        target = m
        count_success = False
    else:
        target = m + 1
        count_success = False
    if target == 0:
        return np.int64(0)

    if fast and kind == PERIODIC and target > 96:
        return _blp_next_periodic(probs, count_success, target, itcap)

    nper = probs.shape[0]
    s = initial
    g = np.int64(-1)
    if kind == COUPLED:
        g = _geom_cutoff(np.random.random(), eps)

    counted = np.int64(0)
    stops = np.int64(0)
    j = np.int64(0)
    while stops < target:
        j += 1
        if j > itcap:
            return np.int64(-1)
        if kind == PERIODIC:
            p = probs[(j - 1) % nper]
        elif kind == MARKOV:
            if j == 1:
                s = initial
            else:
                s = _mc_step(cdf, s, np.random.random())
            p = states[s]
        else:
            p = probs[(j - 1) % nper]
            if j <= g:
                p += h
        success = np.random.random() < p
        if count_success:
            if success:
                counted += 1
            else:
                stops += 1
        else:
            if success:
                stops += 1
            else:
                counted += 1
    return counted


@njit(cache=True, parallel=True)
def blp_draws(kind, probs, states, cdf, initial, h, eps,
              blp_kind, m, seeds, itcap, fast):
    """Independent single transitions from state m (one per seed)."""
    out = np.empty(seeds.shape[0], np.int64)
    for r in prange(seeds.shape[0]):
        np.random.seed(seeds[r])
        out[r] = _blp_next(kind, probs, states, cdf, initial, h, eps,
                           blp_kind, m, itcap, fast)
    return out


@njit(cache=True, parallel=True)
def psi_draws(kind, probs, states, cdf, initial, h, eps, m, seeds, itcap):
    """Paired draws of (U_1, consumed-cookie drift sum) from U_0 = m."""
    u1 = np.empty(seeds.shape[0], np.int64)
    dr = np.empty(seeds.shape[0], np.float64)
    nper = probs.shape[0]
    for r in prange(seeds.shape[0]):
        np.random.seed(seeds[r])
        s = initial
        g = np.int64(-1)
        if kind == COUPLED:
            g = _geom_cutoff(np.random.random(), eps)
        succ = np.int64(0)
        fails = np.int64(0)
        acc = 0.0
        j = np.int64(0)
        bad = False
        while fails < m:
            j += 1
            if j > itcap:
                bad = True
                break
            if kind == PERIODIC:
                p = probs[(j - 1) % nper]
            elif kind == MARKOV:
                if j == 1:
                    s = initial
                else:
                    s = _mc_step(cdf, s, np.random.random())
                p = states[s]
            else:
                p = probs[(j - 1) % nper]
                if j <= g:
                    p += h
            acc += 2.0 * p - 1.0
            if np.random.random() < p:
                succ += 1
            else:
                fails += 1
        u1[r] = -1 if bad else succ
        dr[r] = acc
    return u1, dr


@njit(cache=True)
def blp_traj(kind, probs, states, cdf, initial, h, eps,
             blp_kind, z0, cap, seed, itcap, fast):
    """Full trajectory until sigma_0 or cap steps."""
    np.random.seed(seed)
    out = np.empty(cap + 1, np.int64)
    out[0] = z0
    z = np.int64(z0)
    total = float(z0)
    sigma0 = np.int64(-1)
    t = np.int64(0)
    for i in range(1, cap + 1):
        z = _blp_next(kind, probs, states, cdf, initial, h, eps,
                      blp_kind, z, itcap, fast)
        if z < 0:
            sigma0 = np.int64(-2)  # trial-cap sentinel
            break
        out[i] = z
        t = i
        if z <= 0:
            sigma0 = i
            break
        total += z
    return out[:t + 1], sigma0, total


@njit(cache=True, parallel=True)
def blp_tail_survey(kind, probs, states, cdf, initial, h, eps,
                    blp_kind, z0, cap, seeds, itcap, fast):
    """sigma_0 and trajectory sums, right-censored at cap steps."""
    reps = seeds.shape[0]
    sig = np.empty(reps, np.int64)
    tot = np.empty(reps, np.float64)
    cen = np.zeros(reps, np.bool_)
    for r in prange(reps):
        np.random.seed(seeds[r])
        z = np.int64(z0)
        total = float(z0)
        s0 = np.int64(-1)
        for i in range(1, cap + 1):
            z = _blp_next(kind, probs, states, cdf, initial, h, eps,
                          blp_kind, z, itcap, fast)
            if z < 0:
                s0 = np.int64(-2)
                break
            if z <= 0:
                s0 = i
                break
            total += z
        if s0 == -1:
            cen[r] = True
            sig[r] = cap
        else:
            sig[r] = s0
        tot[r] = total
    return sig, tot, cen


@njit(cache=True, parallel=True)
def blp_bridge(kind, probs, states, cdf, initial, h, eps,
               blp_kind, z0, nsteps, stop_level, seeds, itcap, fast):
    """Value of the process at step nsteps, stopped on reaching <= stop_level."""
    out = np.empty(seeds.shape[0], np.int64)
    for r in prange(seeds.shape[0]):
        np.random.seed(seeds[r])
        z = np.int64(z0)
        for i in range(nsteps):
            z = _blp_next(kind, probs, states, cdf, initial, h, eps,
                          blp_kind, z, itcap, fast)
            if z < 0 or z <= stop_level:
                break
        out[r] = z
    return out


@njit(cache=True, parallel=True)
def dom_check(probs, h, eps, z0, steps, seeds, itcap):
    """Paired VHAT trajectories under the shared-uniform coupling.

    Base process uses the periodic stack; the coupled process sees the same
    uniforms against cookies raised by h for trial indices <= per-step
    geometric cutoff. Returns per-replica counts of steps where the coupled
    state exceeded the base state (must be zero).
    """
    reps = seeds.shape[0]
    viol = np.zeros(reps, np.int64)
    nper = probs.shape[0]
    for r in prange(reps):
        np.random.seed(seeds[r])
        zb = np.int64(z0)
        zc = np.int64(z0)
        for i in range(steps):
            g = _geom_cutoff(np.random.random(), eps)
            tb = zb + 1
            tc = zc + 1
            sb = np.int64(0)
            sc = np.int64(0)
            fb = np.int64(0)
            fc = np.int64(0)
            j = np.int64(0)
            while sb < tb or sc < tc:
                j += 1
                if j > itcap:
                    viol[r] = -1  # trial-cap sentinel
                    break
                u = np.random.random()
                pb = probs[(j - 1) % nper]
                pc = pb
                if j <= g:
                    pc = pb + h
                if sb < tb:
                    if u < pb:
                        sb += 1
                    else:
                        fb += 1
                if sc < tc:
                    if u < pc:
                        sc += 1
                    else:
                        fc += 1
            if viol[r] < 0:
                break
            zb = fb
            zc = fc
            if zc > zb:
                viol[r] += 1
    return viol


# ---------------------------------------------------------------------------
# diffusions
# ---------------------------------------------------------------------------

@njit(cache=True)
def pbm_path(alpha, beta, incs):
    """Exact solution of the discretized extremum-perturbation equation."""
    n = incs.shape[0]
    out = np.empty(n + 1, np.float64)
    out[0] = 0.0
    z = 0.0
    mx = 0.0
    mn = 0.0
    bad = np.int64(0)
    for k in range(n):
        zp = z + incs[k]
        if zp > mx:
            z = (zp - alpha * mx) / (1.0 - alpha)
            if z < mn:
                bad += 1
            if z > mx:
                mx = z
        elif zp < mn:
            z = (zp - beta * mn) / (1.0 - beta)
            if z > mx:
                bad += 1
            if z < mn:
                mn = z
        else:
            z = zp
        out[k + 1] = z
    return out, bad


@njit(cache=True, parallel=True)
def pbm_finals(alpha, beta, dt, nsteps, seeds):
    out = np.empty(seeds.shape[0], np.float64)
    sd = np.sqrt(dt)
    for r in prange(seeds.shape[0]):
        np.random.seed(seeds[r])
        z = 0.0
        mx = 0.0
        mn = 0.0
        for k in range(nsteps):
            zp = z + sd * np.random.normal()
            if zp > mx:
                z = (zp - alpha * mx) / (1.0 - alpha)
                if z > mx:
                    mx = z
            elif zp < mn:
                z = (zp - beta * mn) / (1.0 - beta)
                if z < mn:
                    mn = z
            else:
                z = zp
        out[r] = z
    return out


@njit(cache=True)
def sqbessel_path(b, nu, y0, dt, nsteps, eps_stop, seed):
    """Euler scheme for dY = b dt + sqrt(nu Y) dB with full truncation at 0."""
    np.random.seed(seed)
    out = np.empty(nsteps + 1, np.float64)
    out[0] = y0
    y = y0
    sd = np.sqrt(dt)
    t = np.int64(nsteps)
    for k in range(nsteps):
        y = y + b * dt + np.sqrt(nu * y) * sd * np.random.normal()
        if y < 0.0:
            y = 0.0
        out[k + 1] = y
        if eps_stop > 0.0 and y <= eps_stop:
            t = k + 1
            break
    return out[:t + 1]


@njit(cache=True, parallel=True)
def sqbessel_finals(b, nu, y0, dt, nsteps, eps_stop, seeds):
    """Y at the final grid time, stopped on first passage below eps_stop."""
    out = np.empty(seeds.shape[0], np.float64)
    sd = np.sqrt(dt)
    for r in prange(seeds.shape[0]):
        np.random.seed(seeds[r])
        y = y0
        for k in range(nsteps):
            y = y + b * dt + np.sqrt(nu * y) * sd * np.random.normal()
            if y < 0.0:
                y = 0.0
            if eps_stop > 0.0 and y <= eps_stop:
                break
        out[r] = y
    return out
