"""Feedback input-selection policies and the scalar shape functions they use.

A controller sees the history only through the running sum of centered
information densities, ``sum_j [i*(x_j, y_j) - C]``, and the step index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, normal
from .errors import DomainError, HorizonExceeded, IncompatibleController


def _check_open_unit(name, value):
    if not 0.0 < value < 1.0:
        raise DomainError(f"{name}={value!r} must lie in (0, 1)")


def _breakpoint(beta: float) -> float:
    return beta / (1.0 + beta)


def s_of_eps(eps: float, beta: float) -> float:
    """Starting point of the normalized controlled walk for target error ``eps``."""
    _check_open_unit("eps", eps)
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta={beta!r} must lie in (0, 1]")
    if eps <= _breakpoint(beta):
        return -beta * normal.ppf(eps * (1.0 + beta) / (2.0 * beta))
    return -normal.ppf(0.5 * (eps * (1.0 + beta) + (1.0 - beta)))


def r_of_eps(a: float, v_min: float, v_max: float) -> float:
    """Two-branch second-order rate function; zero at ``a = beta / (1 + beta)``."""
    _check_open_unit("a", a)
    if not 0.0 < v_min <= v_max:
        raise DomainError(f"need 0 < v_min <= v_max, got {v_min!r}, {v_max!r}")
    beta = math.sqrt(v_min / v_max)
    if a <= _breakpoint(beta):
        return math.sqrt(v_min) * normal.ppf(a * (1.0 + beta) / (2.0 * beta))
    return math.sqrt(v_max) * normal.ppf(0.5 * (a * (1.0 + beta) + (1.0 - beta)))


def alpha_delta(x: float, delta: float, beta: float) -> float:
    """Weight of the unit-variance law inside the band ``[0, delta]``.

    Chosen so the mixture variance ``beta**2 + (1 - beta**2) * alpha``
    equals ``sigma_delta(x)**2``.
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta={delta!r} must lie in (0, 1]")
    if not 0.0 <= x <= delta:
        raise DomainError(f"x={x!r} outside [0, {delta}]")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta={beta!r} must lie in (0, 1]")
    return float(_kernels.alpha_delta(x, delta, beta))


def sigma_delta(x, delta: float, beta: float):
    """Diffusion coefficient ramping linearly from 1 (x <= 0) to beta (x >= delta)."""
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta={delta!r} must lie in (0, 1]")
    x = np.asarray(x, dtype=float)
    out = np.clip(1.0 - x * (1.0 - beta) / delta, beta, 1.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# controller specifications


@dataclass(frozen=True)
class ConstantController:
    q: np.ndarray

    def descriptor(self) -> str:
        return "constant"


@dataclass(frozen=True)
class CoarseController:
    """Timid for the first half; then timid iff the first half went well."""

    n: int
    alpha: float
    eps: float
    q_min: np.ndarray
    q_max: np.ndarray

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise IncompatibleController(f"coarse controller needs an even horizon, got n={self.n}")
        _check_open_unit("eps", self.eps)
        if not 1.0 < self.alpha < 1.0 / (2.0 * self.eps):
            raise IncompatibleController(
                f"alpha={self.alpha!r} must lie in (1, {1.0 / (2.0 * self.eps):g})"
            )

    def descriptor(self) -> str:
        return f"coarse(alpha={self.alpha:.12g};eps={self.eps:g})"


@dataclass(frozen=True)
class RefinedController:
    """Per-step timid/bold mixing across a band of width ``sqrt(n V_max) / ell``."""

    ell: int
    eps: float
    kappa: float
    q_min: np.ndarray
    q_max: np.ndarray

    def descriptor(self) -> str:
        return f"refined(ell={self.ell};eps={self.eps:g};kappa={self.kappa:.6g})"


def default_kappa(eps: float, beta: float) -> float:
    kappa = eps / 4.0
    if eps > _breakpoint(beta):
        kappa = min(kappa, (eps - _breakpoint(beta)) / 4.0)
    return kappa


def refined_controller(analysis, eps: float, ell: int = 20, kappa: float | None = None):
    _check_open_unit("eps", eps)
    if ell < 1:
        raise IncompatibleController(f"ell={ell} must be a positive integer")
    beta = analysis.beta
    if kappa is None:
        kappa = default_kappa(eps, beta)
    if not 0.0 < kappa < eps / 2.0:
        raise IncompatibleController(f"kappa={kappa!r} must lie in (0, eps/2)")
    if eps > _breakpoint(beta) and kappa > (eps - _breakpoint(beta)) / 4.0 + 1e-15:
        raise IncompatibleController(
            f"kappa={kappa!r} exceeds (eps - beta/(1+beta))/4 = {(eps - _breakpoint(beta)) / 4:g}"
        )
    return RefinedController(int(ell), eps, kappa, analysis.q_min, analysis.q_max)


def coarse_controller(analysis, n: int, eps: float, alpha: float | None = None):
    if alpha is None:
        from .bounds import find_alpha

        alpha = find_alpha(eps, analysis.beta)
    return CoarseController(int(n), float(alpha), eps, analysis.q_min, analysis.q_max)


def controller_from_dict(obj: dict, analysis, n: int):
    """Build a controller from its JSON form, e.g. ``{"variant": "refined", "ell": 20, "eps": 0.1}``."""
    variant = str(obj.get("variant", "")).lower()
    if variant == "constant":
        which = obj.get("which", "min")
        if "q" in obj:
            q = np.asarray(obj["q"], dtype=float)
            if q.shape != (analysis.channel.input_size,) or np.any(q < 0) or abs(q.sum() - 1) > 1e-9:
                raise IncompatibleController("constant controller 'q' is not an input distribution")
        elif which in ("min", "timid"):
            q = analysis.q_min
        elif which in ("max", "bold"):
            q = analysis.q_max
        else:
            raise IncompatibleController(f"unknown constant law {which!r}")
        return ConstantController(q)
    if variant == "coarse":
        return coarse_controller(analysis, n, float(obj["eps"]), obj.get("alpha"))
    if variant == "refined":
        return refined_controller(
            analysis, float(obj["eps"]), int(obj.get("ell", 20)), obj.get("kappa")
        )
    raise IncompatibleController(f"unknown controller variant {variant!r}")


# --------------------------------------------------------------------------
# policy evaluation


@dataclass(frozen=True)
class ControllerState:
    """History statistic seen by a controller before channel use ``step + 1``.

    ``latched_sum`` freezes ``drift_sum`` once ``n // 2`` uses have been
    made; only the coarse controller reads it.
    """

    step: int = 0
    drift_sum: float = 0.0
    latched_sum: float | None = None

    def advance(self, increment: float, n: int) -> ControllerState:
        step = self.step + 1
        total = self.drift_sum + increment
        latched = total if step == n // 2 else self.latched_sum
        return ControllerState(step, total, latched)


def policy_parameters(controller, analysis, n: int):
    """Flatten a controller into ``(mode, p0, p1, p2, beta)`` for the compiled walk."""
    if isinstance(controller, ConstantController):
        return _kernels.MODE_CONSTANT, 0.0, 0.0, 1.0, 1.0
    if analysis.v_min <= 0:
        raise IncompatibleController("timid/bold controllers need v_min > 0")
    if isinstance(controller, CoarseController):
        if controller.n != n:
            raise IncompatibleController(f"controller built for n={controller.n}, run uses n={n}")
        nu = math.sqrt(2.0) * normal.ppf(controller.alpha * controller.eps)
        threshold = nu * math.sqrt(n * analysis.v_min / 2.0)
        return _kernels.MODE_HALF, threshold, 0.0, 1.0, analysis.beta
    if isinstance(controller, RefinedController):
        r = r_of_eps(controller.eps - controller.kappa, analysis.v_min, analysis.v_max)
        scale = math.sqrt(n * analysis.v_max)
        return _kernels.MODE_BAND, math.sqrt(n) * r, scale / controller.ell, scale, analysis.beta
    raise IncompatibleController(f"unsupported controller {controller!r}")


def _mixture(controller, w_bold):
    return w_bold * controller.q_max + (1.0 - w_bold) * controller.q_min


def coarse_next_input(controller: CoarseController, state: ControllerState, analysis):
    """Input law for channel use ``state.step + 1``."""
    n = controller.n
    if state.step >= n:
        raise HorizonExceeded(f"step {state.step} >= horizon {n}")
    mode, p0, p1, p2, beta = policy_parameters(controller, analysis, n)
    latched = state.drift_sum if state.latched_sum is None else state.latched_sum
    w = _kernels.bold_weight(mode, state.step, n, state.drift_sum, latched, p0, p1, p2, beta)
    return _mixture(controller, w)


def refined_next_input(controller: RefinedController, state: ControllerState, analysis, n: int):
    if state.step >= n:
        raise HorizonExceeded(f"step {state.step} >= horizon {n}")
    mode, p0, p1, p2, beta = policy_parameters(controller, analysis, n)
    w = _kernels.bold_weight(mode, state.step, n, state.drift_sum, state.drift_sum, p0, p1, p2, beta)
    return _mixture(controller, w)


def next_input(controller, state: ControllerState, analysis, n: int):
    if isinstance(controller, ConstantController):
        if state.step >= n:
            raise HorizonExceeded(f"step {state.step} >= horizon {n}")
        return controller.q
    if isinstance(controller, CoarseController):
        return coarse_next_input(controller, state, analysis)
    return refined_next_input(controller, state, analysis, n)
