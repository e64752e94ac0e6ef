"""Shared value types, stepsize schedules and theory-driven parameter presets."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    DIMINISHING = "diminishing"


class VrRegime(str, Enum):
    AUTO = "auto"
    REGIME1 = "regime1"
    REGIME2 = "regime2"


@dataclass(frozen=True, eq=False)
class Iterate:
    """Primal-dual pair ``(x, y)``; both stored as read-only float64 vectors."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64).reshape(-1)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("iterate has non-finite entries")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def dims(self) -> tuple[int, int]:
        return self.x.size, self.y.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Iterate):
            return NotImplemented
        return bool(np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y))

    __hash__ = None


@dataclass(frozen=True)
class StepSchedule:
    """Stepsize pair as a function of the iteration counter.

    For the diminishing kind ``tau1_base`` and ``tau2_base`` are numerators:
    ``tau_i^t = tau_i_base / (gamma_offset + t)``.
    """

    kind: ScheduleKind
    tau1_base: float
    tau2_base: float
    gamma_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if not (self.tau1_base > 0 and self.tau2_base > 0):
            raise ValueError("stepsizes must be strictly positive")
        if not (math.isfinite(self.tau1_base) and math.isfinite(self.tau2_base)):
            raise ValueError("stepsizes must be finite")
        if self.kind is ScheduleKind.DIMINISHING and not self.gamma_offset > 0:
            raise ValueError("diminishing schedule needs gamma_offset > 0")

    @classmethod
    def constant(cls, tau1: float, tau2: float) -> "StepSchedule":
        return cls(ScheduleKind.CONSTANT, tau1, tau2)

    @classmethod
    def diminishing(cls, beta: float, tau2_numerator: float, gamma: float) -> "StepSchedule":
        return cls(ScheduleKind.DIMINISHING, beta, tau2_numerator, gamma)


def schedule_at(s: StepSchedule, t: int) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be nonnegative")
    if s.kind is ScheduleKind.CONSTANT:
        return s.tau1_base, s.tau2_base
    denom = s.gamma_offset + t
    return s.tau1_base / denom, s.tau2_base / denom


def schedule_arrays(s: StepSchedule, start: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``schedule_at`` for ``t = start, ..., start + count - 1``."""
    if s.kind is ScheduleKind.CONSTANT:
        return np.full(count, s.tau1_base), np.full(count, s.tau2_base)
    denom = s.gamma_offset + np.arange(start, start + count, dtype=np.float64)
    return s.tau1_base / denom, s.tau2_base / denom


@dataclass(frozen=True)
class SolverConfig:
    """Run-loop settings.

    ``potential_weight`` left as ``None`` resolves to 1/10 for the AGDA family
    and 1/20 for VR-AGDA. ``stop_potential`` ends a run early once a
    checkpoint reaches that potential.
    """

    max_iters: int = 1000
    seed: int = 0
    metrics_every: int = 1
    potential_weight: Optional[float] = None
    vr_inner_N: int = 1
    vr_outer_T: int = 1
    vr_epochs_K: int = 1
    stop_potential: Optional[float] = None

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.metrics_every < 1:
            raise ValueError("metrics_every must be positive")
        w = self.potential_weight
        if w is not None and not 0 < w <= 1:
            raise ValueError("potential_weight must lie in (0, 1]")
        for name in ("vr_inner_N", "vr_outer_T", "vr_epochs_K"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    def weight(self, default: float) -> float:
        return default if self.potential_weight is None else self.potential_weight


AGDA_WEIGHT = 1.0 / 10.0
VR_WEIGHT = 1.0 / 20.0


@dataclass(frozen=True)
class TraceRecord:
    iter: int
    grad_evals: int
    a: float
    b: float
    potential: float
    grad_x_norm: float
    grad_y_norm: float
    dist_to_saddle_sq: Optional[float] = None


def _check_constants(l: float, mu1: float, mu2: float) -> None:
    if not (l > 0 and mu1 > 0 and mu2 > 0):
        raise ValueError("smoothness and PL constants must be positive")
    if mu1 > l or mu2 > l:
        # PL with l-smoothness forces mu <= l
        raise ValueError(f"inconsistent constants: mu1={mu1}, mu2={mu2} exceed l={l}")


def g_smoothness(l: float, mu2: float) -> float:
    """Smoothness modulus of ``g(x) = max_y f(x, y)``."""
    return l + l * l / mu2


def condition_number(l: float, mu1: float, mu2: float) -> float:
    return l / min(mu1, mu2)


def preset_agda_theoretical(l: float, mu1: float, mu2: float) -> StepSchedule:
    _check_constants(l, mu1, mu2)
    return StepSchedule.constant(mu2**2 / (18.0 * l**3), 1.0 / l)


def stoc_diminishing_min_gamma(l: float, mu1: float, mu2: float, beta: float) -> float:
    """Smallest offset keeping the initial stepsizes under their caps.

    Caps: ``tau1^0 <= min(1/L, mu2^2/(18 l^2))`` and ``tau2^0 <= 1/l``; the
    last one is what the one-step contraction needs on the ascent side.
    """
    cap1 = min(1.0 / g_smoothness(l, mu2), mu2**2 / (18.0 * l**2))
    tau2_num = 18.0 * l**2 * beta / mu2**2
    return max(beta / cap1, tau2_num * l)


def preset_stoc_diminishing(
    l: float, mu1: float, mu2: float, beta: float, gamma: Optional[float] = None
) -> StepSchedule:
    """Diminishing Stoc-AGDA stepsizes ``beta/(gamma+t)`` and ``18 l^2 beta / (mu2^2 (gamma+t))``.

    ``gamma=None`` picks the minimal admissible offset.
    """
    _check_constants(l, mu1, mu2)
    if not beta > 2.0 / mu1:
        raise ValueError(f"beta={beta} must exceed 2/mu1={2.0 / mu1}")
    gmin = stoc_diminishing_min_gamma(l, mu1, mu2, beta)
    if gamma is None:
        gamma = gmin
    elif gamma < gmin * (1 - 1e-12):
        raise ValueError(f"gamma={gamma} violates the initial stepsize cap (needs >= {gmin})")
    return StepSchedule.diminishing(beta, 18.0 * l**2 * beta / mu2**2, gamma)


@dataclass(frozen=True)
class VrParams:
    tau1: float
    tau2: float
    N: int
    T: int
    regime: VrRegime
    kappa: float


def _vr_side_conditions(k3: float, kappa: float, alpha: float) -> list[str]:
    failed = []
    if math.sqrt(k3) + k3**2 > 1:
        failed.append("k3^(1/2) + k3^2 <= 1")
    if k3**2 * (k3 / 28.0 + 28.0 / math.sqrt(k3)) / kappa**2 > 0.25:
        failed.append("k3^2 (k3/28 + 28 k3^(-1/2)) / kappa^2 <= 1/4")
    if 2.0 * math.expm1(alpha) * k3 > VR_WEIGHT:
        failed.append("2 (e^alpha - 1) k3 <= 1/20")
    return failed


def preset_vr_agda(
    n: int,
    l: float,
    mu1: float,
    mu2: float,
    alpha: float = 0.05,
    beta: float = 0.05,
    regime: VrRegime | str = VrRegime.AUTO,
) -> VrParams:
    _check_constants(l, mu1, mu2)
    if n < 1:
        raise ValueError("n must be positive")
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    regime = VrRegime(regime)
    kappa = condition_number(l, mu1, mu2)
    small_n = n <= kappa**9
    if regime is VrRegime.AUTO:
        regime = VrRegime.REGIME2 if small_n else VrRegime.REGIME1
    if regime is VrRegime.REGIME2 and not small_n:
        raise ValueError(f"regime2 needs n <= kappa^9 (n={n}, kappa={kappa:.4g})")

    if regime is VrRegime.REGIME1:
        k3 = beta * kappa**-6
        tau1 = beta / (28.0 * kappa**8 * l)
        tau2 = beta / (l * kappa**6)
        N = math.floor(alpha * beta ** (-2.0 / 3.0) * kappa**9 / (2.0 + 4.0 * math.sqrt(beta) * kappa**-3))
        T = 1
    else:
        n23 = n ** (2.0 / 3.0)
        k3 = beta / n23
        tau1 = beta / (28.0 * kappa**2 * l * n23)
        tau2 = beta / (l * n23)
        N = math.floor(alpha * beta ** (-2.0 / 3.0) * n / (2.0 + 4.0 * math.sqrt(beta) * n ** (-1.0 / 3.0)))
        # tolerate float noise right at n == kappa^9
        T = math.ceil(kappa**3 * n ** (-1.0 / 3.0) - 1e-9)
    failed = _vr_side_conditions(k3, kappa, alpha)
    if failed:
        raise ValueError("alpha/beta too large: " + "; ".join(failed))
    return VrParams(tau1, tau2, max(N, 1), max(T, 1), regime, kappa)
