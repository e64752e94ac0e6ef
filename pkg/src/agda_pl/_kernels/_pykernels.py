"""Reference (pure Python/numpy) versions of the hot loops.

Signatures match the compiled module exactly; ``agda_pl._kernels`` picks one
at import time.
"""
import math

import numpy as np


def _scalar_grad(code, x, y):
    if code == 0:
        sy = math.sin(y)
        gx = 2.0 * x + 3.0 * sy * sy * math.sin(2.0 * x)
        sx = math.sin(x)
        gy = -8.0 * y + 3.0 * sx * sx * math.sin(2.0 * y) - 10.0 * math.sin(2.0 * y)
        return gx, gy
    if code == 1:
        return 0.5 * (1.0 + math.tanh(0.5 * x)) + 3.0 * y, 3.0 * x - 0.5 * (1.0 + math.tanh(0.5 * y))
    raise ValueError(f"unknown scalar problem code {code}")


def scalar_gda(code, x0, y0, tau1, tau2, nx, ny, alternating, limit):
    """Run ``len(tau1)`` GDA steps on a 1-d/1-d problem.

    Returns the trajectory ``(xs, ys)`` of length ``T + 1`` and the number of
    completed steps; the run stops early once ``|x|`` or ``|y|`` exceeds
    ``limit`` (entries past the stop are left as NaN).
    """
    T = len(tau1)
    xs = np.full(T + 1, np.nan)
    ys = np.full(T + 1, np.nan)
    x, y = float(x0), float(y0)
    xs[0], ys[0] = x, y
    for t in range(T):
        gx, gy = _scalar_grad(code, x, y)
        xn = x - tau1[t] * (gx + nx[t])
        if alternating:
            gy = _scalar_grad(code, xn, y)[1]
        y = y + tau2[t] * (gy + ny[t])
        x = xn
        if not (abs(x) <= limit and abs(y) <= limit):
            return xs, ys, t
        xs[t + 1], ys[t + 1] = x, y
    return xs, ys, T


def rls_stoc_agda(B, C, y0, lam, x, y, tau1, tau2, i1, i2, limit):
    """Component-sampled AGDA on robust least squares, updating ``x, y`` in place.

    Returns the number of completed steps (< len(i1) on divergence, in which
    case ``x, y`` hold the last in-bounds iterate).
    """
    n = B.shape[0]
    for t in range(len(i1)):
        i, j = i1[t], i2[t]
        r = B[i] @ x - C[i] @ y
        xn = x - tau1[t] * (2.0 * n * r) * B[i]
        r2 = B[j] @ xn - C[j] @ y
        s2 = C[j] @ y - C[j] @ y0
        yn = y + tau2[t] * (-2.0 * n * (r2 + lam * s2)) * C[j]
        if not (np.max(np.abs(xn)) <= limit and np.max(np.abs(yn)) <= limit):
            return t
        x[:] = xn
        y[:] = yn
    return len(i1)


def rls_vr_inner(B, C, y0, lam, x, y, rsnap, ssnap, gx_full, gy_full,
                 tau1, tau2, i1, i2, sel, out_x, out_y, limit):
    """Variance-reduced inner loop on robust least squares (in place).

    ``rsnap[i] = b_i'x~ - c_i'y~`` and ``ssnap[i] = c_i'(y~ - y0)`` cache the
    snapshot residuals, so the snapshot component gradients cost nothing.
    The iterate held just before step ``sel`` is copied into ``out_x, out_y``.
    """
    n = B.shape[0]
    for t in range(len(i1)):
        if t == sel:
            out_x[:] = x
            out_y[:] = y
        i, j = i1[t], i2[t]
        r = B[i] @ x - C[i] @ y
        xn = x - tau1 * ((2.0 * n * (r - rsnap[i])) * B[i] + gx_full)
        r2 = B[j] @ xn - C[j] @ y
        s2 = C[j] @ y - C[j] @ y0
        coef = -2.0 * n * ((r2 - rsnap[j]) + lam * (s2 - ssnap[j]))
        yn = y + tau2 * (coef * C[j] + gy_full)
        if not (np.max(np.abs(xn)) <= limit and np.max(np.abs(yn)) <= limit):
            return t
        x[:] = xn
        y[:] = yn
    return len(i1)
