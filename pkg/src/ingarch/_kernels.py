"""Numba-accelerated recursions for the conditional-mean filter and simulation.

These kernels are the only hot loops in the package; everything else is
vectorized numpy. All kernels are deterministic functions of their inputs
(random draws are consumed from pre-generated uniform arrays).
"""

import math

import numpy as np
from numba import njit

# Conditional means above this are treated as numerically divergent; the
# wrappers translate the flag into a -inf log-likelihood.
LAMBDA_CAP = 1e12


@njit(cache=True)
def lambda_filter(x, a0, alpha, beta, x_init, lam_init):
    """Run lam[t] = a0 + sum_i alpha[i]*x[t-1-i] + sum_j beta[j]*lam[t-1-j].

    Pre-sample values of x and lam are the constants x_init / lam_init.
    Returns (lam, ok); ok is False when the recursion exceeded LAMBDA_CAP.
    """
    n = x.shape[0]
    p = alpha.shape[0]
    q = beta.shape[0]
    lam = np.empty(n)
    ok = True
    for t in range(n):
        s = a0
        for i in range(p):
            u = t - 1 - i
            s += alpha[i] * (x[u] if u >= 0 else x_init)
        for j in range(q):
            u = t - 1 - j
            s += beta[j] * (lam[u] if u >= 0 else lam_init)
        if not (s < LAMBDA_CAP):
            ok = False
            s = LAMBDA_CAP
        lam[t] = s
    return lam, ok


@njit(cache=True)
def lambda_filter_sens(x, a0, alpha, beta, x_init, lam_init, dx_init, dlam_init):
    """Filter plus sensitivities of lam[t] w.r.t. the packed parameters.

    dx_init / dlam_init hold the derivatives of the two pre-sample constants
    in the packed order [a0, alpha..., beta..., disp?]; their length K sets
    the sensitivity dimension (a trailing dispersion coordinate matters when
    the initialization depends on it). Returns (lam, dlam, ok) with dlam of
    shape (K, n).
    """
    n = x.shape[0]
    p = alpha.shape[0]
    q = beta.shape[0]
    K = dx_init.shape[0]
    lam = np.empty(n)
    dlam = np.zeros((K, n))
    ok = True
    for t in range(n):
        s = a0
        for i in range(p):
            u = t - 1 - i
            s += alpha[i] * (x[u] if u >= 0 else x_init)
        for j in range(q):
            u = t - 1 - j
            s += beta[j] * (lam[u] if u >= 0 else lam_init)
        if not (s < LAMBDA_CAP):
            ok = False
            s = LAMBDA_CAP
        lam[t] = s
        for c in range(K):
            g = 1.0 if c == 0 else 0.0
            if 1 <= c <= p:
                u = t - c
                g += x[u] if u >= 0 else x_init
            if p + 1 <= c <= p + q:
                u = t - (c - p)
                g += lam[u] if u >= 0 else lam_init
            for i in range(p):
                if t - 1 - i < 0:
                    g += alpha[i] * dx_init[c]
            for j in range(q):
                u = t - 1 - j
                g += beta[j] * (dlam[c, u] if u >= 0 else dlam_init[c])
            dlam[c, t] = g
    return lam, dlam, ok


@njit(cache=True)
def simulate_hgeom(n, burnin, a0, alpha, beta, phi, x_init, lam_init, u_zero, u_geo):
    """Simulate a hurdle-geometric INGARCH path.

    Draws 0 with probability phi, otherwise a shifted geometric with success
    probability (1-phi)/lam via inverse-cdf on the pre-drawn uniforms.
    Returns (counts, lam) for the n post-burnin steps.
    """
    p = alpha.shape[0]
    q = beta.shape[0]
    total = n + burnin
    xs = np.empty(total)
    lams = np.empty(total)
    out_x = np.empty(n, dtype=np.int64)
    out_l = np.empty(n)
    for t in range(total):
        s = a0
        for i in range(p):
            u = t - 1 - i
            s += alpha[i] * (xs[u] if u >= 0 else x_init)
        for j in range(q):
            u = t - 1 - j
            s += beta[j] * (lams[u] if u >= 0 else lam_init)
        if not (s < LAMBDA_CAP):
            s = LAMBDA_CAP
        lams[t] = s
        theta = (1.0 - phi) / s
        if theta > 1.0:
            theta = 1.0
        if u_zero[t] < phi:
            x = 0.0
        elif theta >= 1.0:
            x = 1.0
        else:
            x = 1.0 + math.floor(math.log1p(-u_geo[t]) / math.log1p(-theta))
        xs[t] = x
        if t >= burnin:
            out_x[t - burnin] = np.int64(x)
            out_l[t - burnin] = s
    return out_x, out_l
