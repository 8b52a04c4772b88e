"""Pure-Python/numpy implementations of the hot kernels.

These mirror ``_core.pyx`` operation for operation; the compiled module is
preferred when it is importable.  Conventions shared by both backends:

* ``snr`` is the uplink SNR at full bandwidth, ``p*g / (W_U*N0)``, so the
  rate at fraction ``a`` is ``W_U * a * log2(1 + snr/a)``.
* ``wcoef`` is ``beta_T + beta_E * p`` (TEC weight of one second of upload).
* ``bl`` is ``beta_T * L`` (edge-compute weight).
"""
from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)
INV_E = math.exp(-1.0)
E = math.e

CONVERGED = 0
MAX_ITER = 1
DEGENERATE = 2

DUAL_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# Lambert W, principal branch on [-1/e, 0]


def lambert_w0(x: float) -> float:
    """Principal-branch Lambert W for ``x`` in ``[-1/e, 0]`` (no domain check)."""
    if x >= 0.0:
        return 0.0
    ep = (x + INV_E) * E
    if ep <= 0.0:
        return -1.0
    if ep < 0.3:
        p = math.sqrt(2.0 * ep)
        w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * 769.0 / 17280.0))))
        if p < 1e-4:
            return w
    else:
        w = math.log1p(x)
    for _ in range(32):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        denom = ew * wp1 - (wp1 + 1.0) * f / (2.0 * wp1)
        if denom == 0.0:
            break
        dw = f / denom
        w -= dw
        if abs(dw) <= 1e-16 * (1.0 + abs(w)):
            break
    return min(0.0, max(-1.0, w))


def lambert_w0_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    ep = (x + INV_E) * E
    neg = x < 0.0
    near = neg & (ep < 0.3)
    far = neg & ~near
    p = np.sqrt(2.0 * np.maximum(ep, 0.0))
    w = np.where(
        near,
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * 769.0 / 17280.0)))),
        np.log1p(np.where(far, x, 0.0)),
    )
    active = neg & (p >= 1e-4)
    for _ in range(32):
        if not active.any():
            break
        ew = np.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = ew * wp1 - (wp1 + 1.0) * f / (2.0 * wp1)
            dw = np.where(active & (denom != 0.0), f / denom, 0.0)
        w = w - dw
        active = active & (np.abs(dw) > 1e-16 * (1.0 + np.abs(w)))
    out[neg] = np.clip(w[neg], -1.0, 0.0)
    return out


# ---------------------------------------------------------------------------
# Inner-problem dual map and ellipsoid ascent


def rate_frac(a, snr, bandwidth):
    """Uplink rate at bandwidth fraction ``a`` (vectorised, 0 at ``a=0``)."""
    a = np.asarray(a, dtype=float)
    safe = np.where(a > 0.0, a, 1.0)
    with np.errstate(over="ignore"):
        ratio = snr / safe
    # a denormal fraction overflows snr/a; a*log(snr/a) still tends to 0
    log_term = np.where(np.isfinite(ratio), np.log1p(ratio), np.log(snr) - np.log(safe))
    return np.where(a > 0.0, bandwidth * a * log_term / LN2, 0.0)


def primal_map(lam, mu, nu, bits, wcoef, snr, bl, bandwidth):
    """Lagrangian minimisers ``(tau_u, a, f_c)`` for strictly positive duals."""
    lam = np.asarray(lam, dtype=float)
    tau = np.sqrt(lam * bits / wcoef)
    q = mu * LN2 / (lam * bandwidth)
    w = lambert_w0_array(-np.exp(-(q + 1.0)))
    a = snr * (-w) / (1.0 + w)
    fc = np.sqrt(bl / nu) if nu > 0 else np.zeros_like(bl)
    return tau, a, fc


def dual_ascent(bits, wcoef, snr, bl, bandwidth, cpu_budget, scale, radius, stop_tol, max_iter):
    """Central-cut ellipsoid maximisation of the allocation dual.

    Coordinates are ``[lambda_1..lambda_n, mu, nu]`` divided by ``scale``;
    ``mu`` is present when ``n > 0`` and ``nu`` when any ``bl > 0``.  Returns
    ``(center, iterations, status, gap)`` with ``center`` in scaled units and
    ``gap`` the last ``sqrt(g'Pg)`` from an objective cut.
    """
    bits = np.asarray(bits, dtype=float)
    n = bits.size
    use_mu = n > 0
    use_nu = bool(np.any(np.asarray(bl) > 0))
    m = n + int(use_mu) + int(use_nu)
    scale = np.asarray(scale, dtype=float)
    center = np.ones(m)
    P = np.eye(m) * radius * radius
    gap = math.inf
    g = np.zeros(m)
    for it in range(max_iter):
        j = int(np.argmin(center))
        g[:] = 0.0
        if center[j] <= 0.0:
            g[j] = -1.0
            objective_cut = False
        else:
            duals = np.maximum(center, DUAL_FLOOR) * scale
            lam = duals[:n]
            mu = duals[n] if use_mu else 0.0
            nu = duals[m - 1] if use_nu else 0.0
            if n:
                tau, a, _ = primal_map(lam, mu, 1.0, bits, wcoef, snr, np.zeros(n), bandwidth)
                g[:n] = -(bits / tau - rate_frac(a, snr, bandwidth))
                g[n] = -(a.sum() - 1.0)
            if use_nu:
                g[m - 1] = -(np.sqrt(np.asarray(bl) / nu).sum() - cpu_budget)
            g *= scale
            objective_cut = True
            if not g.any():
                # the centre is an exact maximiser
                return center, it, CONVERGED, 0.0
        Pg = P @ g
        gPg = float(g @ Pg)
        if not gPg > 0.0:
            return center, it, DEGENERATE, gap
        gam = math.sqrt(gPg)
        if objective_cut:
            gap = gam
            if gam <= stop_tol:
                return center, it, CONVERGED, gap
        Pg /= gam
        if m == 1:
            center -= 0.5 * Pg
            P *= 0.25
        else:
            center -= Pg / (m + 1.0)
            P = (m * m / (m * m - 1.0)) * (P - (2.0 / (m + 1.0)) * np.outer(Pg, Pg))
    return center, max_iter, MAX_ITER, gap


# ---------------------------------------------------------------------------
# ADMM per-user step and global projection


def _bisect_increasing(deriv, lo, hi, tol=1e-13, max_iter=200):
    """Vectorised bisection for the zero of elementwise non-decreasing ``deriv``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(64):
        grow = deriv(hi) <= 0.0
        if not grow.any():
            break
        hi = np.where(grow, 2.0 * hi, hi)
    at_lo = deriv(lo) >= 0.0
    for _ in range(max_iter):
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
        mid = 0.5 * (lo + hi)
        pos = deriv(mid) > 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return np.where(at_lo, lo, 0.5 * (lo + hi))


def admm_local(a, fc, tau0, rho, phi, vphi, c, bits, wcoef, snr, bandwidth,
               bl, local_cost, zcoef, zmin):
    """Solve both branches of every per-user subproblem.

    ``fc``/``y`` are in some CPU unit ``U`` and ``bl`` is ``beta_T*L/U``
    accordingly; ``tau0``/``z``/``zmin`` share one time unit.  ``local_cost`` is the fixed local-compute
    TEC at the optimal local frequency.  Returns ``(b, x, y, z, obj)``.
    """
    a = np.asarray(a, dtype=float)
    fc = np.asarray(fc, dtype=float)
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    vphi = np.asarray(vphi, dtype=float)
    bits = np.asarray(bits, dtype=float)
    bl = np.asarray(bl, dtype=float)

    # b = 1
    x1 = np.maximum(0.0, a - rho / c)
    y1 = np.maximum(0.0, fc - phi / c)
    z1 = np.maximum(zmin, tau0 - (zcoef + vphi) / c)
    obj1 = (local_cost + zcoef * z1 + rho * x1 + phi * y1 + vphi * z1
            + 0.5 * c * ((x1 - a) ** 2 + (y1 - fc) ** 2 + (z1 - tau0) ** 2))

    # b = 0
    z0 = np.maximum(0.0, tau0 - vphi / c)
    wI = wcoef * bits
    has_bits = bits > 0.0

    def dx(x):
        x = np.maximum(x, 1e-300)
        log_term = np.log1p(snr / x)
        r = bandwidth * x * log_term / LN2
        dr = bandwidth / LN2 * (log_term - snr / (x + snr))
        with np.errstate(divide="ignore", invalid="ignore"):
            tec = np.where(has_bits, -wI * dr / (r * r), 0.0)
        return tec + rho + c * (x - a)

    x0 = _bisect_increasing(dx, np.full_like(a, 1e-9), np.maximum(1.0, 2.0 * (a + np.abs(rho) / c)))
    x0 = np.where(has_bits, x0, np.maximum(0.0, a - rho / c))

    has_cpu = bl > 0.0

    def dy(y):
        y = np.maximum(y, 1e-300)
        return np.where(has_cpu, -bl / (y * y), 0.0) + phi + c * (y - fc)

    y0 = _bisect_increasing(dy, np.full_like(fc, 1e-12), np.maximum(1.0, 2.0 * (fc + np.abs(phi) / c)))
    y0 = np.where(has_cpu, y0, np.maximum(0.0, fc - phi / c))

    upload = np.where(has_bits, wI / np.where(has_bits, rate_frac(x0, snr, bandwidth), 1.0), 0.0)
    compute = np.where(has_cpu, bl / np.where(has_cpu, y0, 1.0), 0.0)
    obj0 = (upload + compute + rho * x0 + phi * y0 + vphi * z0
            + 0.5 * c * ((x0 - a) ** 2 + (y0 - fc) ** 2 + (z0 - tau0) ** 2))

    b = (obj1 < obj0).astype(np.int64)
    pick = b == 1
    return (
        b,
        np.where(pick, x1, x0),
        np.where(pick, y1, y0),
        np.where(pick, z1, z0),
        np.where(pick, obj1, obj0),
    )


def capped_shift(v, c, budget, cap, tol=1e-15, max_iter=400):
    """Return ``(out, shift)`` with ``out = (v - shift/c)^+`` and ``sum(out) <= budget``.

    ``shift`` is zero when the budget is inactive, otherwise found by bisection
    on ``[0, cap]`` (``cap`` doubles until the budget is met).
    """
    v = np.asarray(v, dtype=float)
    if np.maximum(v, 0.0).sum() <= budget:
        return np.maximum(v, 0.0), 0.0
    hi = cap
    while np.maximum(v - hi / c, 0.0).sum() > budget:
        hi *= 2.0
    lo = 0.0
    for _ in range(max_iter):
        if hi - lo <= tol * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if np.maximum(v - mid / c, 0.0).sum() < budget:
            hi = mid
        else:
            lo = mid
    return np.maximum(v - hi / c, 0.0), hi
