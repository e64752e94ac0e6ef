"""Gradient descent ascent solvers: AGDA, SGDA, Stoc-AGDA, VR-AGDA and the
randomised-output AGDA for one-sided PL games.

Run loops dispatch to the compiled kernels in :mod:`agda_pl._kernels` for the
built-in problems and fall back to a generic oracle loop otherwise
(``backend="generic"`` forces the latter).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from . import _kernels
from .core import (
    AGDA_WEIGHT,
    VR_WEIGHT,
    Iterate,
    ScheduleKind,
    SolverConfig,
    StepSchedule,
    TraceRecord,
    g_smoothness,
    schedule_arrays,
)
from .diagnostics import measure
from .problems import MinimaxProblem

LIMIT = _kernels.DIVERGENCE_LIMIT


class Status(str, Enum):
    COMPLETED = "Completed"
    DIVERGED = "Diverged"


@dataclass
class RunResult:
    final: Iterate
    trace: list[TraceRecord]
    rng_draws: int = 0
    selected: Optional[Iterate] = None
    status: Status = Status.COMPLETED
    iterates: Optional[list[Iterate]] = None
    selected_index: Optional[int] = None


@dataclass(frozen=True)
class GaussianNoise:
    """Additive isotropic noise of standard deviation ``sigma`` on every gradient query."""

    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class ComponentSampling:
    """Uniform component index per half-step (finite-sum problems)."""


NoiseModel = Union[GaussianNoise, ComponentSampling]


def _vec(v) -> np.ndarray:
    return np.array(v, dtype=np.float64).reshape(-1)


def _in_bounds(x, y) -> bool:
    return bool(np.max(np.abs(x), initial=0.0) <= LIMIT and np.max(np.abs(y), initial=0.0) <= LIMIT)


def agda_step(p: MinimaxProblem, it: Iterate, tau1: float, tau2: float) -> Iterate:
    """One alternating step: the ascent uses the freshly updated ``x``."""
    gx, _ = p.grad(it.x, it.y)
    x = it.x - tau1 * gx
    _, gy = p.grad(x, it.y)
    return Iterate(x, it.y + tau2 * gy)


def sgda_step(p: MinimaxProblem, it: Iterate, tau1: float, tau2: float) -> Iterate:
    """One simultaneous step: both gradients at the old iterate."""
    gx, gy = p.grad(it.x, it.y)
    return Iterate(it.x - tau1 * gx, it.y + tau2 * gy)


def vr_grad_x(p: MinimaxProblem, i: int, x, y, snap: Iterate, full_gx) -> np.ndarray:
    """SVRG-corrected x-gradient for component ``i``."""
    return p.component_grad(i, x, y)[0] - p.component_grad(i, snap.x, snap.y)[0] + full_gx


def vr_grad_y(p: MinimaxProblem, i: int, x_new, y, snap: Iterate, full_gy) -> np.ndarray:
    """SVRG-corrected y-gradient for component ``i`` at the updated ``x``."""
    return p.component_grad(i, x_new, y)[1] - p.component_grad(i, snap.x, snap.y)[1] + full_gy


class _Recorder:
    def __init__(self, p, weight, stop_potential):
        self.p = p
        self.weight = weight
        self.stop = stop_potential
        self.trace: list[TraceRecord] = []

    def add(self, x, y, it, evals) -> bool:
        """Record a checkpoint; True when the stop threshold is reached."""
        rec = measure(self.p, x, y, it, evals, self.weight)
        self.trace.append(rec)
        return self.stop is not None and rec.potential <= self.stop


def _check_schedule(p: MinimaxProblem, schedule: StepSchedule) -> None:
    if schedule.kind is not ScheduleKind.DIMINISHING:
        return
    l, mu2 = p.analytic_l, p.analytic_mu2
    if l is None or mu2 is None:
        raise ValueError(f"{p.name}: diminishing schedule needs analytic l and mu2")
    tau1, tau2 = schedule.tau1_base / schedule.gamma_offset, schedule.tau2_base / schedule.gamma_offset
    cap = min(1.0 / g_smoothness(l, mu2), mu2**2 / (18 * l**2))
    if tau1 > cap * (1 + 1e-12) or tau2 > (1 + 1e-12) / l:
        raise ValueError(
            f"initial stepsizes ({tau1:.3g}, {tau2:.3g}) exceed the caps ({cap:.3g}, {1 / l:.3g})"
        )


def _draw_noise(rng, noise, count, d1, d2):
    if isinstance(noise, GaussianNoise) and noise.sigma > 0:
        z = rng.standard_normal((count, d1 + d2)) * noise.sigma
        return z[:, :d1], z[:, d1:], count * (d1 + d2)
    return np.zeros((count, d1)), np.zeros((count, d2)), 0


def _gda_loop(
    p: MinimaxProblem,
    schedule: StepSchedule,
    x0,
    y0,
    cfg: SolverConfig,
    alternating: bool,
    noise: NoiseModel,
    weight: float,
    backend: Optional[str],
    keep_iterates: bool = False,
) -> RunResult:
    x, y = _vec(x0), _vec(y0)
    p._check(x, y)
    rng = np.random.default_rng(cfg.seed)
    sampling = isinstance(noise, ComponentSampling)
    if sampling and not alternating:
        raise ValueError("component sampling is only defined for the alternating scheme")
    n = p.n_components
    evals_per_step = 2 if (sampling or n == 1) else 2 * n
    kern = None
    if backend != "generic":
        kern = _kernels.get_backend(backend) if backend else _kernels
    use_scalar = kern is not None and p.kernel_kind == "scalar" and not sampling
    use_rls = kern is not None and p.kernel_kind == "rls" and sampling

    rec = _Recorder(p, weight, cfg.stop_potential)
    iterates = [Iterate(x, y)] if keep_iterates else None
    draws = 0
    status = Status.COMPLETED
    stopped = rec.add(x, y, 0, 0)
    t = 0
    while t < cfg.max_iters and not stopped:
        count = min(cfg.metrics_every, cfg.max_iters - t)
        tau1, tau2 = schedule_arrays(schedule, t, count)
        if sampling:
            idx = rng.integers(0, n, size=(count, 2))
            draws += 2 * count
        else:
            nx, ny, d = _draw_noise(rng, noise, count, p.d1, p.d2)
            draws += d

        if use_scalar:
            xs, ys, done = kern.scalar_gda(
                p.kernel_code, x[0], y[0], tau1, tau2,
                np.ascontiguousarray(nx[:, 0]), np.ascontiguousarray(ny[:, 0]), alternating, LIMIT,
            )
            x, y = xs[done : done + 1].copy(), ys[done : done + 1].copy()
            if keep_iterates:
                iterates.extend(Iterate(xs[k : k + 1], ys[k : k + 1]) for k in range(1, done + 1))
        elif use_rls:
            i1 = np.ascontiguousarray(idx[:, 0])
            i2 = np.ascontiguousarray(idx[:, 1])
            if keep_iterates:
                done = 0
                for k in range(count):
                    ok = kern.rls_stoc_agda(p.B, p.Cc, p.y0, p.lam, x, y, tau1[k : k + 1],
                                            tau2[k : k + 1], i1[k : k + 1], i2[k : k + 1], LIMIT)
                    if not ok:
                        break
                    done += 1
                    iterates.append(Iterate(x, y))
            else:
                done = kern.rls_stoc_agda(p.B, p.Cc, p.y0, p.lam, x, y, tau1, tau2, i1, i2, LIMIT)
        else:
            done = count
            for k in range(count):
                if sampling:
                    gx = p.component_grad(int(idx[k, 0]), x, y)[0]
                else:
                    gx = p.grad(x, y)[0] + nx[k]
                xn = x - tau1[k] * gx
                xg = xn if alternating else x
                if sampling:
                    gy = p.component_grad(int(idx[k, 1]), xg, y)[1]
                else:
                    gy = p.grad(xg, y)[1] + ny[k]
                yn = y + tau2[k] * gy
                if not (_in_bounds(xn, yn) and np.all(np.isfinite(xn)) and np.all(np.isfinite(yn))):
                    done = k
                    break
                x, y = xn, yn
                if keep_iterates:
                    iterates.append(Iterate(x, y))

        t += done
        if done < count:
            status = Status.DIVERGED
        stopped = rec.add(x, y, t, t * evals_per_step)
        if status is Status.DIVERGED:
            break

    return RunResult(Iterate(x, y), rec.trace, draws, None, status, iterates)


def _default_noise(p: MinimaxProblem) -> NoiseModel:
    return ComponentSampling() if p.is_finite_sum else GaussianNoise(0.0)


def agda_run(p, schedule: StepSchedule, x0, y0, cfg: SolverConfig, *, backend=None) -> RunResult:
    """Deterministic AGDA with full gradients."""
    _check_schedule(p, schedule)
    return _gda_loop(p, schedule, x0, y0, cfg, True, GaussianNoise(0.0), cfg.weight(AGDA_WEIGHT), backend)


def sgda_run(p, schedule: StepSchedule, x0, y0, cfg: SolverConfig, *, backend=None) -> RunResult:
    """Deterministic simultaneous GDA with full gradients."""
    _check_schedule(p, schedule)
    return _gda_loop(p, schedule, x0, y0, cfg, False, GaussianNoise(0.0), cfg.weight(AGDA_WEIGHT), backend)


def stoc_agda_run(
    p, schedule: StepSchedule, x0, y0, cfg: SolverConfig, noise: Optional[NoiseModel] = None, *, backend=None
) -> RunResult:
    """Stoc-AGDA: two independent samples per iteration, one per half-step.

    ``noise`` defaults to component sampling for finite-sum problems and to
    noiseless gradients otherwise (which reproduces AGDA exactly).
    """
    _check_schedule(p, schedule)
    noise = _default_noise(p) if noise is None else noise
    if isinstance(noise, ComponentSampling) and p.n_components < 1:
        raise ValueError("component sampling needs a finite-sum problem")
    return _gda_loop(p, schedule, x0, y0, cfg, True, noise, cfg.weight(AGDA_WEIGHT), backend)


def stoc_sgda_run(
    p, schedule: StepSchedule, x0, y0, cfg: SolverConfig, noise: GaussianNoise = GaussianNoise(0.0), *, backend=None
) -> RunResult:
    """Simultaneous counterpart of :func:`stoc_agda_run` with additive noise."""
    _check_schedule(p, schedule)
    return _gda_loop(p, schedule, x0, y0, cfg, False, noise, cfg.weight(AGDA_WEIGHT), backend)


def vr_agda_run(
    p: MinimaxProblem,
    tau1: float,
    tau2: float,
    x0,
    y0,
    cfg: SolverConfig,
    *,
    backend=None,
) -> RunResult:
    """VR-AGDA with ``N = cfg.vr_inner_N``, ``T = cfg.vr_outer_T`` and ``K = cfg.vr_epochs_K``.

    Each epoch runs ``T`` outer iterations of ``N`` variance-reduced inner
    steps and restarts from an inner iterate drawn uniformly out of the
    ``N*T`` visited ones. The selection index is drawn when the epoch starts;
    it is independent of the trajectory, so this is the same distribution.

    Accounting: a full gradient pair costs ``2n`` evaluations, an inner step
    costs 2 (snapshot component terms are cached residuals).
    """
    if not p.is_finite_sum and p.n_components != 1:
        raise ValueError("VR-AGDA needs a finite-sum problem")
    if not (tau1 > 0 and tau2 > 0):
        raise ValueError("stepsizes must be positive")
    n = p.n_components
    N, T, K = cfg.vr_inner_N, cfg.vr_outer_T, cfg.vr_epochs_K
    x, y = _vec(x0), _vec(y0)
    p._check(x, y)
    rng = np.random.default_rng(cfg.seed)
    kern = None
    if backend != "generic":
        kern = _kernels.get_backend(backend) if backend else _kernels
    use_rls = kern is not None and p.kernel_kind == "rls"

    rec = _Recorder(p, cfg.weight(VR_WEIGHT), cfg.stop_potential)
    draws = 0
    evals = 0
    inner_total = 0
    status = Status.COMPLETED
    selected = None
    stopped = rec.add(x, y, 0, 0)

    for _ in range(K):
        if stopped:
            break
        sel = int(rng.integers(0, N * T))
        draws += 1
        sel_x = np.empty_like(x)
        sel_y = np.empty_like(y)
        for t in range(T):
            snap = Iterate(x, y)
            if use_rls:
                rsnap = p.B @ x - p.Cc @ y
                ssnap = p.Cc @ (y - p.y0)
                full_gx = 2.0 * (p.B.T @ rsnap)
                full_gy = -2.0 * (p.Cc.T @ rsnap) - 2.0 * p.lam * (p.Cc.T @ ssnap)
            else:
                full_gx, full_gy = p.grad(x, y)
            evals += 2 * n
            j = 0
            while j < N:
                count = min(cfg.metrics_every, N - j)
                idx = rng.integers(0, n, size=(count, 2))
                draws += 2 * count
                local_sel = sel - t * N - j
                if use_rls:
                    done = kern.rls_vr_inner(
                        p.B, p.Cc, p.y0, p.lam, x, y, rsnap, ssnap, full_gx, full_gy, tau1, tau2,
                        np.ascontiguousarray(idx[:, 0]), np.ascontiguousarray(idx[:, 1]),
                        local_sel if 0 <= local_sel < count else -1, sel_x, sel_y, LIMIT,
                    )
                else:
                    done = count
                    for k in range(count):
                        if k == local_sel:
                            sel_x[:], sel_y[:] = x, y
                        xn = x - tau1 * vr_grad_x(p, int(idx[k, 0]), x, y, snap, full_gx)
                        yn = y + tau2 * vr_grad_y(p, int(idx[k, 1]), xn, y, snap, full_gy)
                        if not (_in_bounds(xn, yn) and np.all(np.isfinite(xn)) and np.all(np.isfinite(yn))):
                            done = k
                            break
                        x, y = xn, yn
                j += done
                inner_total += done
                evals += 2 * done
                if done < count:
                    status = Status.DIVERGED
                stopped = rec.add(x, y, inner_total, evals)
                if stopped or status is Status.DIVERGED:
                    break
            if stopped or status is Status.DIVERGED:
                break
        if stopped or status is Status.DIVERGED:
            break
        x, y = sel_x.copy(), sel_y.copy()
        selected = Iterate(x, y)
        stopped = rec.add(x, y, inner_total, evals)

    return RunResult(Iterate(x, y), rec.trace, draws, selected, status, selected_index=None if selected is None else sel)


def one_sided_defaults(p: MinimaxProblem) -> tuple[float, float]:
    """``tau1 = 1/(20 kappa^2 l)``, ``tau2 = 1/l`` with ``kappa = l / mu2``."""
    l, mu2 = p.analytic_l, p.analytic_mu2
    if l is None or mu2 is None:
        raise ValueError(f"{p.name}: default stepsizes need analytic l and mu2")
    kappa = l / mu2
    return 1.0 / (20.0 * kappa**2 * l), 1.0 / l


def one_sided_agda_run(
    p: MinimaxProblem,
    T: int,
    x0,
    y0,
    seed: int = 0,
    tau1: Optional[float] = None,
    tau2: Optional[float] = None,
    *,
    weight: float = AGDA_WEIGHT,
    backend=None,
) -> RunResult:
    """``T`` AGDA steps, then output one of the ``T + 1`` iterates uniformly at random."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    if tau1 is None or tau2 is None:
        d1, d2 = one_sided_defaults(p)
        tau1 = d1 if tau1 is None else tau1
        tau2 = d2 if tau2 is None else tau2
    cfg = SolverConfig(max_iters=T, seed=seed, metrics_every=1, potential_weight=weight)
    res = _gda_loop(
        p, StepSchedule.constant(tau1, tau2), x0, y0, cfg, True, GaussianNoise(0.0), weight, backend,
        keep_iterates=True,
    )
    rng = np.random.default_rng(seed)
    pick = int(rng.integers(0, len(res.iterates)))
    res.selected = res.iterates[pick]
    res.selected_index = pick
    res.rng_draws = 1
    return res
