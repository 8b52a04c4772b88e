# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_pure.py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, log, log1p, fabs, INFINITY

cnp.import_array()

cdef double LN2 = 0.6931471805599453
cdef double INV_E = 0.36787944117144233
cdef double EULER = 2.718281828459045
cdef double DUAL_FLOOR = 1e-12

CONVERGED = 0
MAX_ITER = 1
DEGENERATE = 2


cdef inline double _lambert_w0(double x) noexcept nogil:
    cdef double ep, p, w, ew, f, wp1, denom, dw
    cdef int i
    if x >= 0.0:
        return 0.0
    ep = (x + INV_E) * EULER
    if ep <= 0.0:
        return -1.0
    if ep < 0.3:
        p = sqrt(2.0 * ep)
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * 769.0 / 17280.0))))
        if p < 1e-4:
            return w
    else:
        w = log1p(x)
    for i in range(32):
        ew = exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (wp1 + 1.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if fabs(dw) <= 1e-16 * (1.0 + fabs(w)):
            break
    if w < -1.0:
        return -1.0
    if w > 0.0:
        return 0.0
    return w


cdef inline double _rate(double a, double snr, double bandwidth) noexcept nogil:
    if a <= 0.0:
        return 0.0
    cdef double ratio = snr / a
    if ratio > 1e300:
        return bandwidth * a * (log(snr) - log(a)) / LN2
    return bandwidth * a * log1p(ratio) / LN2


cdef inline double _frac(double lam, double mu, double snr, double bandwidth) noexcept nogil:
    cdef double q = mu * LN2 / (lam * bandwidth)
    cdef double w = _lambert_w0(-exp(-(q + 1.0)))
    return snr * (-w) / (1.0 + w)


def lambert_w0(double x):
    return _lambert_w0(x)


def lambert_w0_array(x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0])
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(xv.shape[0]):
        ov[i] = _lambert_w0(xv[i])
    return out.reshape(np.shape(x))


def rate_frac(a, snr, bandwidth):
    a_arr, snr_arr = np.broadcast_arrays(np.asarray(a, dtype=np.float64), np.asarray(snr, dtype=np.float64))
    cdef double[::1] av = np.ascontiguousarray(a_arr).ravel()
    cdef double[::1] sv = np.ascontiguousarray(snr_arr).ravel()
    out = np.empty(av.shape[0])
    cdef double[::1] ov = out
    cdef double bw = bandwidth
    cdef Py_ssize_t i
    for i in range(av.shape[0]):
        ov[i] = _rate(av[i], sv[i], bw)
    return out.reshape(a_arr.shape)


def primal_map(lam, double mu, double nu, bits, wcoef, snr, bl, double bandwidth):
    cdef double[::1] lv = np.ascontiguousarray(lam, dtype=np.float64)
    cdef double[::1] iv = np.ascontiguousarray(bits, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wcoef, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(snr, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bl, dtype=np.float64)
    cdef Py_ssize_t n = lv.shape[0], i
    tau = np.empty(n)
    a = np.empty(n)
    fc = np.zeros(bv.shape[0])
    cdef double[::1] tv = tau, av = a, fv = fc
    for i in range(n):
        tv[i] = sqrt(lv[i] * iv[i] / wv[i])
        av[i] = _frac(lv[i], mu, sv[i], bandwidth)
    if nu > 0:
        for i in range(bv.shape[0]):
            fv[i] = sqrt(bv[i] / nu)
    return tau, a, fc


def dual_ascent(bits, wcoef, snr, bl, double bandwidth, double cpu_budget, scale,
                double radius, double stop_tol, long max_iter):
    cdef double[::1] iv = np.ascontiguousarray(bits, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wcoef, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(snr, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bl, dtype=np.float64)
    cdef double[::1] scv = np.ascontiguousarray(scale, dtype=np.float64)
    cdef Py_ssize_t n = iv.shape[0], n0 = bv.shape[0]
    cdef bint use_mu = n > 0
    cdef bint use_nu = False
    cdef Py_ssize_t i, j, r, m
    for i in range(n0):
        if bv[i] > 0:
            use_nu = True
    m = n + (1 if use_mu else 0) + (1 if use_nu else 0)

    center_arr = np.ones(m)
    P_arr = np.eye(m) * radius * radius
    g_arr = np.zeros(m)
    Pg_arr = np.zeros(m)
    cdef double[::1] c = center_arr, g = g_arr, Pg = Pg_arr
    cdef double[:, ::1] P = P_arr

    cdef double gap = INFINITY, gmax, gPg, gam, lam, mu = 0.0, nu = 0.0, tau, a, asum, fsum
    cdef double fm = <double>m, expand, shrink, step
    cdef bint objective_cut
    cdef long it
    cdef int status = 1
    cdef Py_ssize_t jmin

    if m > 1:
        expand = fm * fm / (fm * fm - 1.0)
        shrink = 2.0 / (fm + 1.0)
        step = 1.0 / (fm + 1.0)

    it = 0
    with nogil:
        while it < max_iter:
            jmin = 0
            for j in range(1, m):
                if c[j] < c[jmin]:
                    jmin = j
            for j in range(m):
                g[j] = 0.0
            if c[jmin] <= 0.0:
                g[jmin] = -1.0
                objective_cut = False
            else:
                if use_mu:
                    mu = (c[n] if c[n] > DUAL_FLOOR else DUAL_FLOOR) * scv[n]
                if use_nu:
                    nu = (c[m - 1] if c[m - 1] > DUAL_FLOOR else DUAL_FLOOR) * scv[m - 1]
                asum = 0.0
                for i in range(n):
                    lam = (c[i] if c[i] > DUAL_FLOOR else DUAL_FLOOR) * scv[i]
                    tau = sqrt(lam * iv[i] / wv[i])
                    a = _frac(lam, mu, sv[i], bandwidth)
                    asum += a
                    g[i] = -(iv[i] / tau - _rate(a, sv[i], bandwidth)) * scv[i]
                if use_mu:
                    g[n] = -(asum - 1.0) * scv[n]
                if use_nu:
                    fsum = 0.0
                    for i in range(n0):
                        fsum += sqrt(bv[i] / nu)
                    g[m - 1] = -(fsum - cpu_budget) * scv[m - 1]
                objective_cut = True
                gmax = 0.0
                for r in range(m):
                    gmax = max(gmax, fabs(g[r]))
                if gmax == 0.0:
                    # the centre is an exact maximiser
                    gap = 0.0
                    status = 0
                    break
            gPg = 0.0
            for r in range(m):
                Pg[r] = 0.0
                for j in range(m):
                    Pg[r] += P[r, j] * g[j]
                gPg += g[r] * Pg[r]
            if not gPg > 0.0:
                status = 2
                break
            gam = sqrt(gPg)
            if objective_cut:
                gap = gam
                if gam <= stop_tol:
                    status = 0
                    break
            for r in range(m):
                Pg[r] /= gam
            if m == 1:
                c[0] -= 0.5 * Pg[0]
                P[0, 0] *= 0.25
            else:
                for r in range(m):
                    c[r] -= step * Pg[r]
                for r in range(m):
                    for j in range(r, m):
                        P[r, j] = expand * (P[r, j] - shrink * Pg[r] * Pg[j])
                        P[j, r] = P[r, j]
            it += 1
    return center_arr, it, status, gap


cdef double _bisect_x(double wI, double snr, double bw, double rho, double c, double a) noexcept nogil:
    cdef double lo = 1e-9, hi, mid, d
    cdef int k
    hi = 2.0 * (a + fabs(rho) / c)
    if hi < 1.0:
        hi = 1.0
    for k in range(64):
        if _dx(hi, wI, snr, bw, rho, c, a) > 0.0:
            break
        hi *= 2.0
    if _dx(lo, wI, snr, bw, rho, c, a) >= 0.0:
        return lo
    for k in range(200):
        if hi - lo <= 1e-13 * (hi if hi > 1.0 else 1.0):
            break
        mid = 0.5 * (lo + hi)
        if _dx(mid, wI, snr, bw, rho, c, a) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


cdef inline double _dx(double x, double wI, double snr, double bw, double rho, double c, double a) noexcept nogil:
    cdef double lt = log1p(snr / x)
    cdef double r = bw * x * lt / LN2
    cdef double dr = bw / LN2 * (lt - snr / (x + snr))
    return -wI * dr / (r * r) + rho + c * (x - a)


cdef inline double _dy(double y, double bl, double phi, double c, double f) noexcept nogil:
    return -bl / (y * y) + phi + c * (y - f)


cdef double _bisect_y(double bl, double phi, double c, double f) noexcept nogil:
    cdef double lo = 1e-12, hi, mid
    cdef int k
    hi = 2.0 * (f + fabs(phi) / c)
    if hi < 1.0:
        hi = 1.0
    for k in range(64):
        if _dy(hi, bl, phi, c, f) > 0.0:
            break
        hi *= 2.0
    if _dy(lo, bl, phi, c, f) >= 0.0:
        return lo
    for k in range(200):
        if hi - lo <= 1e-13 * (hi if hi > 1.0 else 1.0):
            break
        mid = 0.5 * (lo + hi)
        if _dy(mid, bl, phi, c, f) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def admm_local(a, fc, double tau0, rho, phi, vphi, double c, bits, wcoef, snr,
               double bandwidth, bl, local_cost, zcoef, zmin):
    cdef double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[::1] fv = np.ascontiguousarray(fc, dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(rho, dtype=np.float64)
    cdef double[::1] pv = np.ascontiguousarray(phi, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(vphi, dtype=np.float64)
    cdef double[::1] iv = np.ascontiguousarray(bits, dtype=np.float64)
    cdef double[::1] wv = np.ascontiguousarray(wcoef, dtype=np.float64)
    cdef double[::1] sv = np.ascontiguousarray(snr, dtype=np.float64)
    cdef double[::1] bv = np.ascontiguousarray(bl, dtype=np.float64)
    cdef double[::1] lv = np.ascontiguousarray(local_cost, dtype=np.float64)
    cdef double[::1] zc = np.ascontiguousarray(zcoef, dtype=np.float64)
    cdef double[::1] zm = np.ascontiguousarray(zmin, dtype=np.float64)
    cdef Py_ssize_t K = av.shape[0], k
    b_arr = np.zeros(K, dtype=np.int64)
    x_arr = np.empty(K)
    y_arr = np.empty(K)
    z_arr = np.empty(K)
    o_arr = np.empty(K)
    cdef long long[::1] bo = b_arr
    cdef double[::1] xo = x_arr, yo = y_arr, zo = z_arr, oo = o_arr
    cdef double x1, y1, z1, x0, y0, z0, obj1, obj0, t
    with nogil:
        for k in range(K):
            x1 = av[k] - rv[k] / c
            if x1 < 0.0:
                x1 = 0.0
            y1 = fv[k] - pv[k] / c
            if y1 < 0.0:
                y1 = 0.0
            z1 = tau0 - (zc[k] + vv[k]) / c
            if z1 < zm[k]:
                z1 = zm[k]
            obj1 = (lv[k] + zc[k] * z1 + rv[k] * x1 + pv[k] * y1 + vv[k] * z1
                    + 0.5 * c * ((x1 - av[k]) * (x1 - av[k]) + (y1 - fv[k]) * (y1 - fv[k])
                                 + (z1 - tau0) * (z1 - tau0)))
            z0 = tau0 - vv[k] / c
            if z0 < 0.0:
                z0 = 0.0
            obj0 = 0.0
            if iv[k] > 0.0:
                x0 = _bisect_x(wv[k] * iv[k], sv[k], bandwidth, rv[k], c, av[k])
                obj0 += wv[k] * iv[k] / _rate(x0, sv[k], bandwidth)
            else:
                x0 = x1
            if bv[k] > 0.0:
                y0 = _bisect_y(bv[k], pv[k], c, fv[k])
                obj0 += bv[k] / y0
            else:
                y0 = y1
            obj0 += (rv[k] * x0 + pv[k] * y0 + vv[k] * z0
                     + 0.5 * c * ((x0 - av[k]) * (x0 - av[k]) + (y0 - fv[k]) * (y0 - fv[k])
                                  + (z0 - tau0) * (z0 - tau0)))
            if obj1 < obj0:
                bo[k] = 1
                xo[k] = x1
                yo[k] = y1
                zo[k] = z1
                oo[k] = obj1
            else:
                bo[k] = 0
                xo[k] = x0
                yo[k] = y0
                zo[k] = z0
                oo[k] = obj0
    return b_arr, x_arr, y_arr, z_arr, o_arr


cdef double _shifted_sum(double[::1] v, double shift, double c) noexcept nogil:
    cdef double s = 0.0, t
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        t = v[i] - shift / c
        if t > 0.0:
            s += t
    return s


def capped_shift(v, double c, double budget, double cap, double tol=1e-15, int max_iter=400):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef double lo = 0.0, hi = cap, mid
    cdef int k
    out = np.maximum(np.asarray(vv), 0.0)
    if _shifted_sum(vv, 0.0, c) <= budget:
        return out, 0.0
    with nogil:
        while _shifted_sum(vv, hi, c) > budget:
            hi *= 2.0
        for k in range(max_iter):
            if hi - lo <= tol * (hi if hi > 1.0 else 1.0):
                break
            mid = 0.5 * (lo + hi)
            if _shifted_sum(vv, mid, c) < budget:
                hi = mid
            else:
                lo = mid
    return np.maximum(np.asarray(vv) - hi / c, 0.0), hi
