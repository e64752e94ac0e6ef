"""Potential-function metrics, numerical PL certificates and bound checkers."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import Iterate, TraceRecord
from .problems import MinimaxProblem, UnsupportedOperation

NONNEG_TOL = 1e-10


@dataclass(frozen=True)
class PlEstimate:
    mu1_hat: float
    mu2_hat: float
    argmin_witness: tuple[tuple[float, ...], tuple[float, ...]]
    grid_spec: dict

    def to_dict(self) -> dict:
        return {
            "mu1_hat": self.mu1_hat,
            "mu2_hat": self.mu2_hat,
            "argmin_witness": {"mu1": list(self.argmin_witness[0]), "mu2": list(self.argmin_witness[1])},
            "grid_spec": self.grid_spec,
        }


@dataclass(frozen=True)
class RateFit:
    rho_hat: float
    r_squared: float
    window: tuple[int, int]


def potential(p: MinimaxProblem, x, y, weight: float) -> tuple[float, float, float]:
    """Return ``(a, b, a + weight * b)`` with ``a = g(x) - g*`` and ``b = g(x) - f(x, y)``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    gx = p.g_value(x)
    a = gx - p.g_star()
    b = gx - p.value(x, y)
    if a < -NONNEG_TOL * max(1.0, abs(gx)) or b < -NONNEG_TOL * max(1.0, abs(gx)):
        raise ArithmeticError(f"negative potential component a={a}, b={b}; oracle is inconsistent")
    return a, b, a + weight * b


def measure(p: MinimaxProblem, x, y, it: int, grad_evals: int, weight: float) -> TraceRecord:
    """Checkpoint metrics at ``(x, y)``; potential fields are NaN when ``g`` is unavailable."""
    gx, gy = p.grad(x, y)
    try:
        a, b, P = potential(p, x, y, weight)
    except UnsupportedOperation:
        a = b = P = math.nan
    dist = None
    if p.saddle is not None:
        dist = float(np.sum((x - p.saddle.x) ** 2) + np.sum((y - p.saddle.y) ** 2))
    return TraceRecord(
        iter=int(it),
        grad_evals=int(grad_evals),
        a=float(a),
        b=float(b),
        potential=float(P),
        grad_x_norm=float(np.linalg.norm(gx)),
        grad_y_norm=float(np.linalg.norm(gy)),
        dist_to_saddle_sq=dist,
    )


def _max_y_value(p: MinimaxProblem, x) -> float:
    return p.g_value(x)


def pl_estimate_grid(
    p: MinimaxProblem,
    region: Sequence[tuple[float, float]],
    resolution: int,
    cutoff: float = 1e-12,
    max_points: int = 5_000_000,
) -> PlEstimate:
    """Smallest PL ratios over a tensor grid on ``region`` (one ``(lo, hi)`` per coordinate of ``(x, y)``).

    ``mu1_hat = min ||grad_x f||^2 / (2 (f - min_x f))``, ``mu2_hat`` likewise
    with ``max_y f - f``; points whose gap is below ``cutoff`` are skipped.
    """
    d = p.d1 + p.d2
    region = [tuple(map(float, r)) for r in region]
    if len(region) != d:
        raise ValueError(f"region needs {d} intervals, got {len(region)}")
    if any(not hi > lo for lo, hi in region):
        raise ValueError("degenerate region")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if resolution**d > max_points:
        raise ValueError(f"grid of {resolution}^{d} points is too large")
    # fail fast on problems without the inner optima
    p.min_x_value(np.zeros(p.d2))
    p.g_value(np.zeros(p.d1))

    axes = [np.linspace(lo, hi, resolution) for lo, hi in region]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=1)

    best1 = (math.inf, None)
    best2 = (math.inf, None)
    minx_cache: dict = {}
    maxy_cache: dict = {}
    for z in pts:
        x, y = z[: p.d1], z[p.d1 :]
        f = p.value(x, y)
        gx, gy = p.grad(x, y)
        ky, kx = y.tobytes(), x.tobytes()
        if ky not in minx_cache:
            minx_cache[ky] = p.min_x_value(y)
        if kx not in maxy_cache:
            maxy_cache[kx] = p.g_value(x)
        gap1 = f - minx_cache[ky]
        gap2 = maxy_cache[kx] - f
        if gap1 >= cutoff:
            r = float(gx @ gx) / (2.0 * gap1)
            if r < best1[0]:
                best1 = (r, z)
        if gap2 >= cutoff:
            r = float(gy @ gy) / (2.0 * gap2)
            if r < best2[0]:
                best2 = (r, z)

    def witness(z):
        return tuple(float(v) for v in z) if z is not None else ()

    return PlEstimate(
        mu1_hat=best1[0],
        mu2_hat=best2[0],
        argmin_witness=(witness(best1[1]), witness(best2[1])),
        grid_spec={"region": [list(r) for r in region], "resolution": resolution},
    )


def _check_trace(trace: Sequence[TraceRecord]) -> None:
    if len(trace) < 2:
        raise ValueError("trace needs at least two records")


def contraction_check(trace: Sequence[TraceRecord], rho: float, delta: float) -> list[int]:
    """Indices ``t`` where ``P_{t+1} > rho * P_t + delta + 1e-12``."""
    _check_trace(trace)
    P = np.array([r.potential for r in trace])
    bad = P[1:] > rho * P[:-1] + delta + 1e-12
    return [int(t) for t in np.nonzero(bad)[0]]


def stoc_constant_delta(l, mu1, mu2, tau1, tau2, sigma2) -> float:
    """Neighbourhood radius for constant-step Stoc-AGDA with gradient variance ``sigma2``."""
    L = l + l * l / mu2
    return ((1 - mu2 * tau2) * (L + l) * tau1**2 + l * tau2**2 + 10 * L * tau1**2) * sigma2 / (10 * mu1 * tau1)


def estimate_nu(trace: Sequence[TraceRecord], gamma: float, tail: float = 0.2) -> float:
    """``max P_t (gamma + t)`` over the last ``tail`` fraction of the trace."""
    _check_trace(trace)
    k = max(1, int(math.ceil(tail * len(trace))))
    return max(r.potential * (gamma + r.iter) for r in trace[-k:])


def sublinear_check(
    trace: Sequence[TraceRecord], nu: Optional[float], gamma: float, slack: float = 0.05
) -> list[int]:
    """Positions where ``P_t > nu/(gamma + t) * (1 + slack)``; ``nu=None`` estimates it from the tail."""
    _check_trace(trace)
    if nu is None:
        nu = estimate_nu(trace, gamma)
    return [k for k, r in enumerate(trace) if r.potential > nu / (gamma + r.iter) * (1 + slack)]


def stationarity_of_g(p: MinimaxProblem, x) -> float:
    """``||grad g(x)|| = ||grad_x f(x, y*(x))||``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    gx, _ = p.grad(x, p.best_response_y(x))
    return float(np.linalg.norm(gx))


def _unit_ball(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return v * rng.uniform() ** (1.0 / d)


def saddle_probe(p: MinimaxProblem, it: Iterate, epsilon: float, n_probes: int, seed: int = 0) -> bool:
    """Randomised test of ``f(x*, y) <= f(x*, y*) <= f(x, y*)`` on the unit ball around ``it``."""
    rng = np.random.default_rng(seed)
    x, y = it.x, it.y
    f0 = p.value(x, y)
    for _ in range(n_probes):
        dz = _unit_ball(rng, p.d1 + p.d2)
        if p.value(x, y + dz[p.d1 :]) > f0 + epsilon:
            return False
        if p.value(x + dz[: p.d1], y) < f0 - epsilon:
            return False
    return True


def rate_fit(trace: Sequence[TraceRecord], window: Optional[tuple[int, int]] = None) -> RateFit:
    """Least-squares fit of ``log P_t`` against ``t`` over ``window`` (inclusive iteration range)."""
    recs = [r for r in trace if window is None or window[0] <= r.iter <= window[1]]
    if len(recs) < 10:
        raise ValueError(f"rate fit needs at least 10 points, got {len(recs)}")
    t = np.array([r.iter for r in recs], dtype=np.float64)
    P = np.array([r.potential for r in recs])
    if not np.all(P > 0):
        raise ValueError("rate fit needs strictly positive potentials")
    logP = np.log(P)
    slope, intercept = np.polyfit(t, logP, 1)
    resid = logP - (slope * t + intercept)
    ss_tot = float(np.sum((logP - logP.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    # flat sequence: exact fit
    r2 = 1.0 if ss_tot <= 1e-300 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(float(np.exp(slope)), r2, (int(t[0]), int(t[-1])))


def fit_window(trace: Sequence[TraceRecord], floor: float = 1e-13) -> Optional[tuple[int, int]]:
    """Longest prefix window whose potentials stay above ``floor`` (None if under 10 points)."""
    end = None
    for k, r in enumerate(trace):
        if not r.potential > floor:
            break
        end = k
    if end is None or end < 9:
        return None
    return trace[0].iter, trace[end].iter


def fd_gradient_check(p: MinimaxProblem, it: Iterate, h: float = 1e-5) -> float:
    """Worst per-coordinate error of central differences against ``grad``.

    The error is scaled by ``max(|grad_i|, 1)``.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    z = np.concatenate([it.x, it.y])
    d1 = p.d1
    gx, gy = p.grad(it.x, it.y)
    g = np.concatenate([gx, gy])
    worst = 0.0
    for k in range(z.size):
        e = np.zeros_like(z)
        e[k] = h
        zp, zm = z + e, z - e
        fd = (p.value(zp[:d1], zp[d1:]) - p.value(zm[:d1], zm[d1:])) / (2.0 * h)
        worst = max(worst, abs(fd - g[k]) / max(abs(g[k]), 1.0))
    return worst
