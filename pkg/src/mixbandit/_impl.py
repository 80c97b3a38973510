"""Scalar kernels for the hot per-round loops.

Reference implementations in plain Python over float64 arrays. The
``mixbandit.kernels`` module optionally wraps every function here with
numba's ``njit``; keep the code nopython-compatible (explicit loops, no
Python objects, no exceptions -- failures are reported via status codes).
"""

import math

import numpy as np


def vdot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


def norm2(v):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return math.sqrt(s)


def chol_update(L, x):
    """In-place rank-one update of a lower Cholesky factor: L Lt += x xt.

    Clobbers x. Diagonal stays strictly positive for any finite x.
    """
    p = L.shape[0]
    for k in range(p):
        lkk = L[k, k]
        xk = x[k]
        r = math.sqrt(lkk * lkk + xk * xk)
        c = r / lkk
        s = xk / lkk
        L[k, k] = r
        for i in range(k + 1, p):
            L[i, k] = (L[i, k] + s * x[i]) / c
            x[i] = c * x[i] - s * L[i, k]


def chol_factor(A, L):
    """Dense lower Cholesky of symmetric A into L. Returns 0, or 1 on pivot failure."""
    p = A.shape[0]
    for j in range(p):
        s = A[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not (s > 0.0) or not math.isfinite(s):
            return 1
        d = math.sqrt(s)
        L[j, j] = d
        for i in range(j + 1, p):
            t = A[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / d
        for i in range(j):
            L[i, j] = 0.0
    return 0


def solve_lower(L, b, out):
    p = L.shape[0]
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * out[k]
        out[i] = s / L[i, i]


def solve_upper_t(L, b, out):
    """Solve Lt out = b for lower-triangular L."""
    p = L.shape[0]
    for i in range(p - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, p):
            s -= L[k, i] * out[k]
        out[i] = s / L[i, i]


def quad_form_inv(L, x, scratch):
    """xt (L Lt)^-1 x via a forward solve; nonnegative by construction."""
    solve_lower(L, x, scratch)
    s = 0.0
    for i in range(L.shape[0]):
        s += scratch[i] * scratch[i]
    return s


def quad_form(L, v):
    """vt (L Lt) v as the squared norm of Lt v."""
    p = L.shape[0]
    total = 0.0
    for j in range(p):
        s = 0.0
        for i in range(j, p):
            s += L[i, j] * v[i]
        total += s * s
    return total


def spd_solve(L, b, tmp, out):
    """(L Lt) out = b via forward then transposed-backward substitution."""
    solve_lower(L, b, tmp)
    solve_upper_t(L, tmp, out)


def logdet(L):
    s = 0.0
    for i in range(L.shape[0]):
        s += math.log(L[i, i])
    return 2.0 * s


def ridge_solve(gram, b, mu, A, L, tmp, out):
    """(gram + mu I) out = b. Returns 0, or 1 when the factorization fails."""
    p = gram.shape[0]
    for i in range(p):
        for j in range(p):
            A[i, j] = gram[i, j]
        A[i, i] += mu
    if chol_factor(A, L) != 0:
        return 1
    spd_solve(L, b, tmp, out)
    return 0


def constrained_ls(gram, b, radius, out, A, L, tmp):
    """Minimize 0.5 tt gram t - bt t over the ball of the given radius.

    Ridge-path bisection on the multiplier mu: return the mu=1e-10 solution
    when it is interior, otherwise bisect until the solution norm is within
    1e-8 relative of the radius. Returns 0 on success, 1 when bracketing or
    bisection fails to converge within 200 iterations.
    """
    p = b.shape[0]
    allzero = True
    for i in range(p):
        if b[i] != 0.0:
            allzero = False
    if allzero:
        for i in range(p):
            out[i] = 0.0
        return 0
    mu_lo = 1e-10
    if ridge_solve(gram, b, mu_lo, A, L, tmp, out) == 0 and norm2(out) <= radius:
        return 0
    lo = mu_lo
    hi = 1.0
    n_grow = 0
    while True:
        st = ridge_solve(gram, b, hi, A, L, tmp, out)
        if st == 0:
            if norm2(out) < radius:
                break
            lo = hi
        hi *= 2.0
        n_grow += 1
        if n_grow > 200:
            return 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        st = ridge_solve(gram, b, mid, A, L, tmp, out)
        if st != 0:
            lo = mid
            continue
        nm = norm2(out)
        if abs(nm - radius) <= 1e-8 * radius:
            return 0
        if nm > radius:
            lo = mid
        else:
            hi = mid
    return 1


def radius_sq_formula(t, d, p, B, lam, delta, phi_d, shift):
    """Squared radius of the delayed confidence ellipsoid after t rounds."""
    dp = float(d) * float(p)
    arg = float(t + d)
    if dp > arg:
        arg = dp
    val = dp * math.log((B + 1.0) * (B + 1.0) * math.e * arg / dp)
    val += 4.0 * lam * B * B
    val += 2.0 * float(t) * phi_d * shift
    val += 2.0 * float(d) * math.log(float(d) / delta)
    return val


def iid_radius_sq_formula(L, p, B, lam, delta):
    """log det(V/lam) + lam B^2 + 2 log(1/delta) from the factor of V."""
    return logdet(L) - p * math.log(lam) + lam * B * B + 2.0 * math.log(1.0 / delta)


def ingest_one(x, y, policy_code, d, p, B, lam, delta, phi_d, shift,
               Lfac, gram, bvec, center, theta_star, theta_norm,
               A_s, L_s, t1, coverage, radius_sq_at, center_norm, count):
    """Absorb one observation and rebuild the live confidence set.

    Returns (status, new_count, radius_sq); status 1 signals a solver failure.
    """
    for i in range(p):
        t1[i] = x[i]
    chol_update(Lfac, t1)
    for i in range(p):
        xi = x[i]
        for j in range(p):
            gram[i, j] += xi * x[j]
        bvec[i] += y * x[i]
    count += 1
    if policy_code == 1:
        spd_solve(Lfac, bvec, t1, center)
        rsq = iid_radius_sq_formula(Lfac, p, B, lam, delta)
    else:
        st = constrained_ls(gram, bvec, B, center, A_s, L_s, t1)
        if st != 0:
            return 1, count, 0.0
        rsq = radius_sq_formula(count, d, p, B, lam, delta, phi_d, shift)
    radius_sq_at[count - 1] = rsq
    center_norm[count - 1] = norm2(center)
    for i in range(p):
        t1[i] = theta_star[i] - center[i]
    qv = quad_form(Lfac, t1)
    ok = qv <= rsq
    if policy_code != 1 and theta_norm > B * (1.0 + 1e-12):
        ok = False
    if ok:
        coverage[count - 1] = 1
    return 0, count, rsq


def simulate_bandit(arms, eps, rand_choice, theta_star, policy_code, warmup_code,
                    d, B, lam, delta, phi_d, shift):
    """Run one full bandit replication with lagged ingestion.

    Policy codes: 0 delayed UCB, 1 ridge UCB baseline (d must be 1),
    2 greedy, 3 uniform random (uses rand_choice), 4 oracle.
    Observations enter the design statistics d rounds after being played, so
    the live statistics at round t always cover exactly the first t-d rounds.
    Returns a status (0 ok, nonzero solver failure), the failing round, and
    the per-round trace arrays.
    """
    T = arms.shape[0]
    K = arms.shape[1]
    p = arms.shape[2]

    Lfac = np.zeros((p, p))
    for i in range(p):
        Lfac[i, i] = math.sqrt(lam)
    gram = np.zeros((p, p))
    bvec = np.zeros(p)
    count = 0

    qx = np.zeros((d, p))
    qy = np.zeros(d)

    center = np.zeros(p)
    live_rsq = 0.0
    A_s = np.empty((p, p))
    L_s = np.empty((p, p))
    t1 = np.empty(p)

    chosen = np.zeros(T, np.int64)
    opt_value = np.zeros(T)
    inst_regret = np.zeros(T)
    cum_regret = np.zeros(T)
    rewards = np.zeros(T)
    mean_reward = np.zeros(T)
    ucb_chosen = np.full(T, np.nan)
    radius_sq_used = np.full(T, np.nan)
    potential = np.zeros(T)
    coverage = np.zeros(T, np.uint8)
    radius_sq_at = np.full(T, np.nan)
    center_norm = np.full(T, np.nan)

    theta_norm = norm2(theta_star)
    status = 0
    fail_round = 0
    creg = 0.0

    for t in range(1, T + 1):
        tm1 = t - 1
        if t > d:
            slot = tm1 % d
            st, count, live_rsq = ingest_one(
                qx[slot], qy[slot], policy_code, d, p, B, lam, delta, phi_d,
                shift, Lfac, gram, bvec, center, theta_star, theta_norm,
                A_s, L_s, t1, coverage, radius_sq_at, center_norm, count)
            if st != 0:
                status = 1
                fail_round = t
                break

        best_v = -1e300
        best_i = 0
        for k in range(K):
            v = vdot(theta_star, arms[tm1, k])
            if v > best_v:
                best_v = v
                best_i = k
        opt_value[tm1] = best_v

        if policy_code == 4:
            choice = best_i
        elif policy_code == 3:
            choice = int(rand_choice[tm1])
        elif t <= d:
            if warmup_code == 0:
                choice = tm1 % K
            else:
                choice = 0
        else:
            beta = 0.0
            if policy_code != 2:
                beta = math.sqrt(live_rsq)
            best_u = -1e300
            choice = 0
            for k in range(K):
                u = vdot(center, arms[tm1, k])
                if policy_code != 2:
                    q = quad_form_inv(Lfac, arms[tm1, k], t1)
                    u += beta * math.sqrt(q)
                if u > best_u:
                    best_u = u
                    choice = k
            ucb_chosen[tm1] = best_u
            if policy_code != 2:
                radius_sq_used[tm1] = live_rsq

        xsel = arms[tm1, choice]
        q = quad_form_inv(Lfac, xsel, t1)
        potential[tm1] = q if q < 1.0 else 1.0
        mv = vdot(theta_star, xsel)
        yv = mv + eps[tm1]
        slot = tm1 % d
        for i in range(p):
            qx[slot, i] = xsel[i]
        qy[slot] = yv
        rewards[tm1] = yv
        mean_reward[tm1] = mv
        chosen[tm1] = choice
        r = best_v - mv
        inst_regret[tm1] = r
        creg += r
        cum_regret[tm1] = creg

    while status == 0 and count < T:
        s = count + 1
        slot = (s - 1) % d
        st, count, live_rsq = ingest_one(
            qx[slot], qy[slot], policy_code, d, p, B, lam, delta, phi_d,
            shift, Lfac, gram, bvec, center, theta_star, theta_norm,
            A_s, L_s, t1, coverage, radius_sq_at, center_norm, count)
        if st != 0:
            status = 1
            fail_round = s

    return (status, fail_round, chosen, opt_value, inst_regret, cum_regret,
            rewards, mean_reward, ucb_chosen, radius_sq_used, potential,
            coverage, radius_sq_at, center_norm)
