# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled network kernels.

Same contract and state layout as ``_kernels_py``; see that module.
"""
from libc.math cimport sqrt, fabs, hypot, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF NZ = 12

cdef enum:
    ST_OK = 0
    ST_NOT_CONVERGED = 1
    ST_SINGULAR = 2
    ST_COLLAPSED = 3

cdef double _PIVOT_RTOL = 1e-14

OK = ST_OK
NOT_CONVERGED = ST_NOT_CONVERGED
SINGULAR = ST_SINGULAR
COLLAPSED = ST_COLLAPSED
PIVOT_RTOL = _PIVOT_RTOL


cdef inline void _load(double m, const double* lp, double* p, double* q,
                       double* dp, double* dq) noexcept nogil:
    cdef double u = m / lp[10]
    p[0] = lp[5] * ((lp[2] * u + lp[3]) * u + lp[4])
    q[0] = lp[9] * ((lp[6] * u + lp[7]) * u + lp[8])
    dp[0] = lp[5] * (2.0 * lp[2] * u + lp[3]) / lp[10]
    dq[0] = lp[9] * (2.0 * lp[6] * u + lp[7]) / lp[10]


cdef void _residual(const double* z, double alpha, double n, const double* lp,
                    double* out) noexcept nogil:
    cdef double v1 = lp[0], x = lp[1]
    cdef double m = sqrt(z[5] * z[5] + z[11] * z[11])
    cdef double p, q, dp, dq
    _load(m, lp, &p, &q, &dp, &dq)
    out[0] = z[0] * z[0] + z[6] * z[6] - v1 * v1
    out[1] = z[0] + x * z[8] - z[1]
    out[2] = z[6] - x * z[2] - z[7]
    out[3] = z[1] - n * z[3]
    out[4] = z[7] - n * z[9]
    out[5] = n * z[2] - z[4]
    out[6] = n * z[8] - z[10]
    out[7] = z[3] - z[5]
    out[8] = z[9] - z[11]
    out[9] = z[5] * z[4] + z[11] * z[10] - alpha * p
    out[10] = z[11] * z[4] - z[5] * z[10] - alpha * q
    out[11] = z[11]


cdef void _jacobian(const double* z, double alpha, double n, const double* lp,
                    double* J, double* dn) noexcept nogil:
    cdef int i
    cdef double x = lp[1]
    cdef double m = sqrt(z[5] * z[5] + z[11] * z[11])
    cdef double p, q, dp, dq
    _load(m, lp, &p, &q, &dp, &dq)
    for i in range(NZ * NZ):
        J[i] = 0.0
    for i in range(NZ):
        dn[i] = 0.0
    J[0 * NZ + 0] = 2.0 * z[0]
    J[0 * NZ + 6] = 2.0 * z[6]
    J[1 * NZ + 0] = 1.0
    J[1 * NZ + 8] = x
    J[1 * NZ + 1] = -1.0
    J[2 * NZ + 6] = 1.0
    J[2 * NZ + 2] = -x
    J[2 * NZ + 7] = -1.0
    J[3 * NZ + 1] = 1.0
    J[3 * NZ + 3] = -n
    J[4 * NZ + 7] = 1.0
    J[4 * NZ + 9] = -n
    J[5 * NZ + 2] = n
    J[5 * NZ + 4] = -1.0
    J[6 * NZ + 8] = n
    J[6 * NZ + 10] = -1.0
    J[7 * NZ + 3] = 1.0
    J[7 * NZ + 5] = -1.0
    J[8 * NZ + 9] = 1.0
    J[8 * NZ + 11] = -1.0
    J[9 * NZ + 5] = z[4] - alpha * dp * z[5] / m
    J[9 * NZ + 11] = z[10] - alpha * dp * z[11] / m
    J[9 * NZ + 4] = z[5]
    J[9 * NZ + 10] = z[11]
    J[10 * NZ + 5] = -z[10] - alpha * dq * z[5] / m
    J[10 * NZ + 11] = z[4] - alpha * dq * z[11] / m
    J[10 * NZ + 4] = z[11]
    J[10 * NZ + 10] = -z[5]
    J[11 * NZ + 11] = 1.0
    dn[3] = -z[3]
    dn[4] = -z[9]
    dn[5] = z[2]
    dn[6] = z[8]


cdef bint _lu_solve(double* A, double* b) noexcept nogil:
    """In-place partial-pivot elimination; solution left in ``b``."""
    cdef int i, j, k, piv
    cdef double amax = 1.0, t, f, big
    for i in range(NZ * NZ):
        if fabs(A[i]) > amax:
            amax = fabs(A[i])
    cdef double thresh = _PIVOT_RTOL * amax
    for k in range(NZ):
        piv = k
        big = fabs(A[k * NZ + k])
        for i in range(k + 1, NZ):
            if fabs(A[i * NZ + k]) > big:
                big = fabs(A[i * NZ + k])
                piv = i
        if big < thresh:
            return False
        if piv != k:
            for j in range(NZ):
                t = A[k * NZ + j]
                A[k * NZ + j] = A[piv * NZ + j]
                A[piv * NZ + j] = t
            t = b[k]
            b[k] = b[piv]
            b[piv] = t
        for i in range(k + 1, NZ):
            f = A[i * NZ + k] / A[k * NZ + k]
            if f != 0.0:
                for j in range(k, NZ):
                    A[i * NZ + j] -= f * A[k * NZ + j]
                b[i] -= f * b[k]
    for k in range(NZ - 1, -1, -1):
        t = b[k]
        for j in range(k + 1, NZ):
            t -= A[k * NZ + j] * b[j]
        b[k] = t / A[k * NZ + k]
    return True


cdef inline double _infnorm(const double* f) noexcept nogil:
    cdef int i
    cdef double r = 0.0
    for i in range(NZ):
        if not fabs(f[i]) <= r:
            r = fabs(f[i])
    return r


cdef int _newton(double* z, double alpha, double n, const double* lp, double tol,
                 int maxit, int max_halvings, int* iters, double* resnorm) noexcept nogil:
    cdef double f[NZ]
    cdef double ft[NZ]
    cdef double zt[NZ]
    cdef double dz[NZ]
    cdef double J[NZ * NZ]
    cdef double dn[NZ]
    cdef double nf, nft, step
    cdef int i, h, it = 0
    _residual(z, alpha, n, lp, f)
    nf = _infnorm(f)
    while not nf < tol:
        if it == maxit or not isfinite(nf):
            iters[0] = it
            resnorm[0] = nf
            return ST_NOT_CONVERGED
        if z[5] == 0.0 and z[11] == 0.0:
            iters[0] = it
            resnorm[0] = nf
            return ST_SINGULAR
        _jacobian(z, alpha, n, lp, J, dn)
        for i in range(NZ):
            dz[i] = -f[i]
        if not _lu_solve(J, dz):
            iters[0] = it
            resnorm[0] = nf
            return ST_SINGULAR
        step = 1.0
        for h in range(max_halvings + 1):
            for i in range(NZ):
                zt[i] = z[i] + step * dz[i]
            _residual(zt, alpha, n, lp, ft)
            nft = _infnorm(ft)
            if nft < nf:
                break
            step *= 0.5
        for i in range(NZ):
            z[i] = zt[i]
            f[i] = ft[i]
        nf = nft
        it += 1
    # Undamped polishing while the residual keeps falling.
    while it < maxit:
        _jacobian(z, alpha, n, lp, J, dn)
        for i in range(NZ):
            dz[i] = -f[i]
        if not _lu_solve(J, dz):
            break
        for i in range(NZ):
            zt[i] = z[i] + dz[i]
        _residual(zt, alpha, n, lp, ft)
        nft = _infnorm(ft)
        if not nft < nf:
            break
        for i in range(NZ):
            z[i] = zt[i]
            f[i] = ft[i]
        nf = nft
        it += 1
    iters[0] = it
    resnorm[0] = nf
    return ST_OK


def residual(z, double alpha, double n, lp):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=float)
    cdef double[::1] lv = np.ascontiguousarray(lp, dtype=float)
    out = np.empty(NZ)
    cdef double[::1] ov = out
    _residual(&zv[0], alpha, n, &lv[0], &ov[0])
    return out


def jacobian(z, double alpha, double n, lp):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=float)
    cdef double[::1] lv = np.ascontiguousarray(lp, dtype=float)
    J = np.empty((NZ, NZ))
    dn = np.empty(NZ)
    cdef double[:, ::1] Jv = J
    cdef double[::1] dv = dn
    _jacobian(&zv[0], alpha, n, &lv[0], &Jv[0, 0], &dv[0])
    return J, dn


def lu_solve(A, b):
    cdef double[:, ::1] Av = np.array(A, dtype=float, order="C")
    x = np.array(b, dtype=float)
    cdef double[::1] xv = x
    ok = _lu_solve(&Av[0, 0], &xv[0])
    return x, bool(ok)


def newton(z0, double alpha, double n, lp, double tol=1e-10, int maxit=50,
           int max_halvings=8):
    z = np.array(z0, dtype=float)
    cdef double[::1] zv = z
    cdef double[::1] lv = np.ascontiguousarray(lp, dtype=float)
    cdef int iters = 0
    cdef double resnorm = 0.0
    cdef int status = _newton(&zv[0], alpha, n, &lv[0], tol, maxit, max_halvings,
                              &iters, &resnorm)
    return z, status, iters, resnorm


cdef inline bint _stage(double nn, double* zs, const double* zg, double vprev,
                        double alpha, double tau, double v_target, const double* lp,
                        double tol, int maxit, double max_jump,
                        double* slope, double* vs) noexcept nogil:
    cdef int i, iters
    cdef double resnorm
    if not nn > 0:
        return False
    for i in range(NZ):
        zs[i] = zg[i]
    if _newton(zs, alpha, nn, lp, tol, maxit, 8, &iters, &resnorm) != ST_OK:
        return False
    vs[0] = hypot(zs[5], zs[11])
    if fabs(vs[0] - vprev) > max_jump or zs[5] <= 0.0:
        return False
    slope[0] = (vs[0] - v_target) / tau
    return True


def rk4_oltc(z0, double n0, double alpha, double tau, double v_target, double dt,
             int nsteps, lp, double tol=1e-10, int maxit=50, double max_jump=0.05):
    cdef double[::1] lv = np.ascontiguousarray(lp, dtype=float)
    zarr = np.array(z0, dtype=float)
    cdef double[::1] zv = zarr
    t_out = np.empty(nsteps + 1)
    n_out = np.empty(nsteps + 1)
    v_out = np.empty(nsteps + 1)
    p_out = np.empty(nsteps + 1)
    q_out = np.empty(nsteps + 1)
    cdef double[::1] tv = t_out, nv = n_out, vv = v_out, pv = p_out, qv = q_out
    cdef double z2[NZ]
    cdef double z3[NZ]
    cdef double z4[NZ]
    cdef double z5[NZ]
    cdef double n = n0, s1, s2, s3, s4, v2, v3, v4, v5, s5, n_new
    cdef double* z = &zv[0]
    cdef const double* lpp = &lv[0]
    cdef int i, k = 0, status = ST_OK
    cdef double v = hypot(z[5], z[11])
    tv[0] = 0.0
    nv[0] = n
    vv[0] = v
    pv[0] = z[5] * z[4] + z[11] * z[10]
    qv[0] = z[11] * z[4] - z[5] * z[10]
    with nogil:
        while k < nsteps:
            s1 = (v - v_target) / tau
            if not _stage(n + 0.5 * dt * s1, z2, z, v, alpha, tau, v_target, lpp,
                          tol, maxit, max_jump, &s2, &v2):
                status = ST_COLLAPSED
                break
            if not _stage(n + 0.5 * dt * s2, z3, z2, v2, alpha, tau, v_target, lpp,
                          tol, maxit, max_jump, &s3, &v3):
                status = ST_COLLAPSED
                break
            if not _stage(n + dt * s3, z4, z3, v3, alpha, tau, v_target, lpp,
                          tol, maxit, max_jump, &s4, &v4):
                status = ST_COLLAPSED
                break
            n_new = n + dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4)
            if not _stage(n_new, z5, z4, v4, alpha, tau, v_target, lpp,
                          tol, maxit, max_jump, &s5, &v5):
                status = ST_COLLAPSED
                break
            n = n_new
            for i in range(NZ):
                z[i] = z5[i]
            v = v5
            k += 1
            tv[k] = k * dt
            nv[k] = n
            vv[k] = v
            pv[k] = z[5] * z[4] + z[11] * z[10]
            qv[k] = z[11] * z[4] - z[5] * z[10]
    m = k + 1
    return t_out[:m], n_out[:m], v_out[:m], p_out[:m], q_out[:m], status, zarr
