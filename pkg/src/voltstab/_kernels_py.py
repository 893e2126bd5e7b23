"""Pure-Python network kernels.

Mirror of ``_kernels.pyx``; used when the compiled module is unavailable
and as the reference in the backend-equivalence tests.

State vector layout (12 reals)::

    [re v1, re vp, re ip, re vs, re is, re vl,
     im v1, im vp, im ip, im vs, im is, im vl]

Packed parameters (11 reals)::

    [v1_mag, x_line, p_z, p_i, p_p, p_scale, q_z, q_i, q_p, q_scale, v_ref]
"""
import math
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor
from scipy.linalg import lu_solve as lu_solve_factored

OK = 0
NOT_CONVERGED = 1
SINGULAR = 2
COLLAPSED = 3

PIVOT_RTOL = 1e-14


def _load(m, lp):
    u = m / lp[10]
    p = lp[5] * ((lp[2] * u + lp[3]) * u + lp[4])
    q = lp[9] * ((lp[6] * u + lp[7]) * u + lp[8])
    dp = lp[5] * (2.0 * lp[2] * u + lp[3]) / lp[10]
    dq = lp[9] * (2.0 * lp[6] * u + lp[7]) / lp[10]
    return p, q, dp, dq


def residual(z, alpha, n, lp):
    v1r, vpr, ipr, vsr, isr, vlr, v1i, vpi, ipi, vsi, isi, vli = z
    v1, x = lp[0], lp[1]
    m = math.sqrt(vlr * vlr + vli * vli)
    p, q, _, _ = _load(m, lp)
    out = np.empty(12)
    out[0] = v1r * v1r + v1i * v1i - v1 * v1
    out[1] = v1r + x * ipi - vpr
    out[2] = v1i - x * ipr - vpi
    out[3] = vpr - n * vsr
    out[4] = vpi - n * vsi
    out[5] = n * ipr - isr
    out[6] = n * ipi - isi
    out[7] = vsr - vlr
    out[8] = vsi - vli
    out[9] = vlr * isr + vli * isi - alpha * p
    out[10] = vli * isr - vlr * isi - alpha * q
    out[11] = vli
    return out


def jacobian(z, alpha, n, lp):
    """Return ``(J, dF/dN)``; requires a nonzero load voltage."""
    v1r, vpr, ipr, vsr, isr, vlr, v1i, vpi, ipi, vsi, isi, vli = z
    x = lp[1]
    m = math.sqrt(vlr * vlr + vli * vli)
    _, _, dp, dq = _load(m, lp)
    J = np.zeros((12, 12))
    J[0, 0] = 2.0 * v1r
    J[0, 6] = 2.0 * v1i
    J[1, 0] = 1.0
    J[1, 8] = x
    J[1, 1] = -1.0
    J[2, 6] = 1.0
    J[2, 2] = -x
    J[2, 7] = -1.0
    J[3, 1] = 1.0
    J[3, 3] = -n
    J[4, 7] = 1.0
    J[4, 9] = -n
    J[5, 2] = n
    J[5, 4] = -1.0
    J[6, 8] = n
    J[6, 10] = -1.0
    J[7, 3] = 1.0
    J[7, 5] = -1.0
    J[8, 9] = 1.0
    J[8, 11] = -1.0
    J[9, 5] = isr - alpha * dp * vlr / m
    J[9, 11] = isi - alpha * dp * vli / m
    J[9, 4] = vlr
    J[9, 10] = vli
    J[10, 5] = -isi - alpha * dq * vlr / m
    J[10, 11] = isr - alpha * dq * vli / m
    J[10, 4] = vli
    J[10, 10] = -vlr
    J[11, 11] = 1.0
    dn = np.zeros(12)
    dn[3] = -vsr
    dn[4] = -vsi
    dn[5] = ipr
    dn[6] = ipi
    return J, dn


def lu_solve(A, b):
    """Solve ``A x = b`` by partial-pivot LU.

    Returns ``(x, ok)``; ``ok`` is False when a pivot falls below
    ``PIVOT_RTOL`` times the largest matrix entry.
    """
    A = np.asarray(A, dtype=float)
    thresh = PIVOT_RTOL * max(1.0, float(np.max(np.abs(A))))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < thresh:
        return np.array(b, dtype=float), False
    return lu_solve_factored((lu, piv), b, check_finite=False), True


def newton(z0, alpha, n, lp, tol=1e-10, maxit=50, max_halvings=8):
    """Damped Newton iteration.

    Returns ``(z, status, iterations, residual_inf_norm)``.
    """
    z = np.array(z0, dtype=float)
    f = residual(z, alpha, n, lp)
    nf = float(np.max(np.abs(f)))
    it = 0
    while not nf < tol:
        if it == maxit or not math.isfinite(nf):
            return z, NOT_CONVERGED, it, nf
        if z[5] == 0.0 and z[11] == 0.0:
            return z, SINGULAR, it, nf
        J, _ = jacobian(z, alpha, n, lp)
        dz, ok = lu_solve(J, -f)
        if not ok:
            return z, SINGULAR, it, nf
        step = 1.0
        for _ in range(max_halvings + 1):
            zt = z + step * dz
            ft = residual(zt, alpha, n, lp)
            nft = float(np.max(np.abs(ft)))
            if nft < nf:
                break
            step *= 0.5
        z, f, nf = zt, ft, nft
        it += 1
    # Polish with undamped steps while the residual keeps falling; this
    # recovers accuracy where convergence is linear (double root at the nose).
    while it < maxit:
        J, _ = jacobian(z, alpha, n, lp)
        dz, ok = lu_solve(J, -f)
        if not ok:
            break
        zt = z + dz
        ft = residual(zt, alpha, n, lp)
        nft = float(np.max(np.abs(ft)))
        if not nft < nf:
            break
        z, f, nf = zt, ft, nft
        it += 1
    return z, OK, it, nf


def _terminal(z, lp):
    vlr, vli, isr, isi = z[5], z[11], z[4], z[10]
    return math.hypot(vlr, vli), vlr * isr + vli * isi, vli * isr - vlr * isi


def rk4_oltc(z0, n0, alpha, tau, v_target, dt, nsteps, lp,
             tol=1e-10, maxit=50, max_jump=0.05):
    """Integrate dN/dt = (|vl| - v_target) / tau with classical RK4.

    Every stage re-solves the network, warm-started from the latest
    algebraic state.  ``z0`` must already solve the network at ``n0``.
    Returns ``(t, n, vl, p, q, status, z_last)``; on collapse the arrays
    stop at the last accepted step.
    """
    t_out = np.empty(nsteps + 1)
    n_out = np.empty(nsteps + 1)
    v_out = np.empty(nsteps + 1)
    p_out = np.empty(nsteps + 1)
    q_out = np.empty(nsteps + 1)
    z = np.array(z0, dtype=float)
    n = float(n0)
    v, p, q = _terminal(z, lp)
    t_out[0], n_out[0], v_out[0], p_out[0], q_out[0] = 0.0, n, v, p, q

    def stage(nn, zg, vprev):
        if not nn > 0:
            return None
        zs, status, _, _ = newton(zg, alpha, nn, lp, tol, maxit)
        if status != OK:
            return None
        vs = math.hypot(zs[5], zs[11])
        if abs(vs - vprev) > max_jump or zs[5] <= 0.0:
            return None
        return (vs - v_target) / tau, zs, vs

    k = 0
    status = OK
    while k < nsteps:
        s1 = (v - v_target) / tau
        r2 = stage(n + 0.5 * dt * s1, z, v)
        if r2 is None:
            status = COLLAPSED
            break
        r3 = stage(n + 0.5 * dt * r2[0], r2[1], r2[2])
        if r3 is None:
            status = COLLAPSED
            break
        r4 = stage(n + dt * r3[0], r3[1], r3[2])
        if r4 is None:
            status = COLLAPSED
            break
        n_new = n + dt / 6.0 * (s1 + 2.0 * r2[0] + 2.0 * r3[0] + r4[0])
        r5 = stage(n_new, r4[1], r4[2])
        if r5 is None:
            status = COLLAPSED
            break
        n, z = n_new, r5[1]
        v, p, q = _terminal(z, lp)
        k += 1
        t_out[k], n_out[k], v_out[k], p_out[k], q_out[k] = k * dt, n, v, p, q
    m = k + 1
    return t_out[:m], n_out[:m], v_out[:m], p_out[:m], q_out[:m], status, z
