"""Compiled inner loops for the metapopulation SIR integrator.

State arrays have shape ``(3, N)`` holding the S, I, R fractions. The graph is
passed in CSR form together with ``inv_deg`` (0 for isolated nodes).
"""

import numpy as np
from numba import njit

OK = 0
STEP_UNDERFLOW = 1
NEGATIVE_STATE = 2

NEGATIVE_TOL = 1e-9
SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 5.0


@njit(cache=True)
def network_rhs_csr(y, indptr, indices, data, inv_deg, beta, gamma, kappa, out):
    n = y.shape[1]
    for i in range(n):
        s = y[0, i]
        inf = y[1, i]
        r = y[2, i]
        ds = 0.0
        di = 0.0
        dr = 0.0
        if inv_deg[i] > 0.0:
            for k in range(indptr[i], indptr[i + 1]):
                j = indices[k]
                w = data[k]
                ds += w * (y[0, j] - s)
                di += w * (y[1, j] - inf)
                dr += w * (y[2, j] - r)
            c = kappa * inv_deg[i]
            ds *= c
            di *= c
            dr *= c
        infection = beta[i] * s * inf
        recovery = gamma[i] * inf
        out[0, i] = -infection + ds
        out[1, i] = infection - recovery + di
        out[2, i] = recovery + dr


@njit(cache=True)
def _rk4_step(y, k1, h, indptr, indices, data, inv_deg, beta, gamma, kappa, out, work):
    """One classic RK4 step of size h from y, with k1 = f(y) precomputed."""
    k2 = work[0]
    k3 = work[1]
    k4 = work[2]
    tmp = work[3]
    tmp[:, :] = y + 0.5 * h * k1
    network_rhs_csr(tmp, indptr, indices, data, inv_deg, beta, gamma, kappa, k2)
    tmp[:, :] = y + 0.5 * h * k2
    network_rhs_csr(tmp, indptr, indices, data, inv_deg, beta, gamma, kappa, k3)
    tmp[:, :] = y + h * k3
    network_rhs_csr(tmp, indptr, indices, data, inv_deg, beta, gamma, kappa, k4)
    out[:, :] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def integrate_segment(y0, t0, dt, n_out, indptr, indices, data, inv_deg,
                      beta, gamma, kappa, rtol, atol, hmin, hmax, h0):
    """Advance from t0 and record the state at t0 + k*dt for k = 1..n_out.

    Local error is estimated by step doubling: the accepted value is the
    two-half-step RK4 result, and (half - full) / 15 estimates its error.
    Returns ``(records, y, t, h, status, n_steps)``.
    """
    n = y0.shape[1]
    records = np.empty((n_out, 3, n))
    y = y0.copy()
    k1 = np.empty_like(y)
    kh = np.empty_like(y)
    full = np.empty_like(y)
    mid = np.empty_like(y)
    half = np.empty_like(y)
    work = np.empty((4, 3, n))
    t = t0
    h = min(h0, hmax)
    n_steps = 0
    k = 1
    while k <= n_out:
        target = t0 + k * dt
        h_try = h
        last = False
        if t + h_try >= target - 1e-12 * max(1.0, abs(target)):
            h_try = target - t
            last = True
        network_rhs_csr(y, indptr, indices, data, inv_deg, beta, gamma, kappa, k1)
        _rk4_step(y, k1, h_try, indptr, indices, data, inv_deg, beta, gamma, kappa, full, work)
        _rk4_step(y, k1, 0.5 * h_try, indptr, indices, data, inv_deg, beta, gamma, kappa, mid, work)
        network_rhs_csr(mid, indptr, indices, data, inv_deg, beta, gamma, kappa, kh)
        _rk4_step(mid, kh, 0.5 * h_try, indptr, indices, data, inv_deg, beta, gamma, kappa, half, work)
        err = 0.0
        for c in range(3):
            for i in range(n):
                scale = atol + rtol * max(abs(y[c, i]), abs(half[c, i]))
                e = abs(half[c, i] - full[c, i]) / 15.0 / scale
                if e > err:
                    err = e
        if err <= 1.0:
            for c in range(3):
                for i in range(n):
                    v = half[c, i]
                    if v < 0.0:
                        if v < -NEGATIVE_TOL:
                            return records, half, t + h_try, h_try, NEGATIVE_STATE, n_steps
                        v = 0.0
                    y[c, i] = v
            n_steps += 1
            if err == 0.0:
                fac = FAC_MAX
            else:
                fac = min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
            if last:
                t = target
                records[k - 1] = y
                k += 1
                # a step shortened to land on the grid says little about the step we could take
                if fac >= 1.0:
                    h = max(h, h_try * fac)
                else:
                    h = h_try * fac
            else:
                t = t + h_try
                h = h_try * fac
            h = min(h, hmax)
        else:
            h = h_try * max(FAC_MIN, SAFETY * err ** -0.2)
            if h < hmin:
                return records, y, t, h, STEP_UNDERFLOW, n_steps
    return records, y, t, h, OK, n_steps


@njit(cache=True)
def integrate_fixed(y0, h, n_steps, indptr, indices, data, inv_deg, beta, gamma, kappa):
    """Plain fixed-step RK4 for convergence studies."""
    y = y0.copy()
    k1 = np.empty_like(y)
    nxt = np.empty_like(y)
    work = np.empty((4, 3, y.shape[1]))
    for _ in range(n_steps):
        network_rhs_csr(y, indptr, indices, data, inv_deg, beta, gamma, kappa, k1)
        _rk4_step(y, k1, h, indptr, indices, data, inv_deg, beta, gamma, kappa, nxt, work)
        y[:, :] = nxt
    return y
