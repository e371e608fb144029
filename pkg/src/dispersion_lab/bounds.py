"""Second-order rate formulas, the timid/bold condition, and rate curves.

All rates are in nats per square-root channel use.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import normal
from .channel import SIMPLE, info_density_matrix
from .controllers import r_of_eps
from .errors import DomainError, NotFound, NotSimpleDispersion

CURVE_HEADER = "eps,no_feedback,thm1,thm2_lower,thm4_upper"


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps={eps!r} must lie in (0, 1)")


def strassen_rate(eps: float, analysis) -> float:
    """``sqrt(V_eps) * Phi^-1(eps)``, the rate without feedback."""
    _check_eps(eps)
    v = analysis.v_eps(eps)
    if v <= 0:
        raise DomainError("V_eps = 0")
    return math.sqrt(v) * normal.ppf(eps)


def thm1_f(alpha: float, eps: float, beta: float) -> float:
    """Timid/bold condition; any ``alpha > 1`` with a negative value improves on Strassen."""
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps={eps!r} must lie in (0, 1/2)")
    if not 1.0 <= alpha < 1.0 / (2.0 * eps):
        raise DomainError(f"alpha={alpha!r} outside [1, 1/(2 eps))")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta={beta!r} must lie in (0, 1]")
    return float(_f(alpha, eps, beta))


def _f(alpha, eps, beta):
    z = normal.ppf(alpha * eps)
    bump = normal.pdf(2.0 * math.sqrt(2.0) * z) * (1.0 / normal.SQRT_2PI - normal.pdf(math.sqrt(2.0) * z))
    return eps * (alpha - 1.0) - (1.0 - beta) * bump


def find_alpha(eps: float, beta: float, tol: float | None = None, grid: int = 4000) -> float:
    """Largest ``alpha`` in ``(1, 1/(2 eps))`` with ``thm1_f(alpha) <= -tol``.

    Scans a grid that is geometric in ``alpha - 1`` (so roots near 1 are
    resolved) and bisects the last sign change.  The default ``tol`` is
    ``min(1e-12, 1e-3 |f(1)|)`` so that small ``eps``, where ``f(1)`` itself
    is tiny, still has a solution.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta={beta!r} must lie in (0, 1)")
    if tol is None:
        tol = min(1e-12, 1e-3 * abs(thm1_f(1.0, eps, beta)))
    hi = 1.0 / (2.0 * eps)
    span = (hi - 1.0) * (1.0 - 1e-9)
    alphas = 1.0 + span * np.logspace(-14, 0, grid)
    vals = _f(alphas, eps, beta)
    ok = np.flatnonzero(vals <= -tol)
    if ok.size == 0:
        raise NotFound(f"no alpha with f <= -{tol} for eps={eps}, beta={beta}")
    k = ok[-1]
    if k == grid - 1:
        return float(alphas[k])
    a, b = alphas[k], alphas[k + 1]
    for _ in range(200):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if thm1_f(m, eps, beta) <= -tol:
            a = m
        else:
            b = m
    return float(a)


def thm1_rate(eps: float, analysis, alpha: float | None = None) -> float:
    """``sqrt(V_min) * Phi^-1(alpha * eps)`` for the coarse timid/bold scheme."""
    if alpha is None:
        alpha = find_alpha(eps, analysis.beta)
    return math.sqrt(analysis.v_min) * normal.ppf(alpha * eps)


class GammaBound(NamedTuple):
    kappa_lo: float
    kappa_hi: float
    bound: float
    n0: int


def _third_moment_ratio(analysis, q, v) -> float:
    dens = info_density_matrix(analysis.channel, analysis.q_star)
    w = analysis.channel.w
    dev = np.where(w > 0, np.abs(np.where(w > 0, dens, 0.0) - analysis.capacity_nats) ** 3, 0.0)
    return float(q @ (w * dev).sum(axis=1)) / v ** 1.5 + 1.0


def thm1_finite_n_gamma_bound(alpha: float, eps: float, analysis, n: int) -> GammaBound:
    """Berry-Esseen style bound on the coarse scheme's tail at blocklength ``n``.

    ``n0`` is the smallest even blocklength at which the bound drops below ``eps``.
    """
    if n < 2 or n % 2:
        raise DomainError(f"n={n} must be a positive even integer")
    if analysis.v_min <= 0:
        raise DomainError("V_min = 0")
    f = thm1_f(alpha, eps, analysis.beta)
    k_lo = _third_moment_ratio(analysis, analysis.q_min, analysis.v_min)
    k_hi = _third_moment_ratio(analysis, analysis.q_max, analysis.v_max)
    c = 4.0 * k_lo + k_hi
    bound = f + eps + c / math.sqrt(2.0 * n)
    if f >= 0:
        n0 = -1
    else:
        n0 = math.floor(0.5 * (c / f) ** 2) + 1
        n0 += n0 % 2
        for _ in range(8):
            if f + c / math.sqrt(2.0 * n0) < 0:
                break
            n0 += 2
    return GammaBound(k_lo, k_hi, bound, n0)


def thm2_rate(eps: float, analysis) -> float:
    """Feedback achievability via the refined timid/bold scheme."""
    if analysis.v_min <= 0:
        raise DomainError("V_min = 0")
    return r_of_eps(eps, analysis.v_min, analysis.v_max)


def thm3_rate(eps: float, analysis) -> float:
    """Converse for simple-dispersion channels: feedback does not help."""
    if analysis.dispersion_class != SIMPLE:
        raise NotSimpleDispersion("channel has compound dispersion")
    return strassen_rate(eps, analysis)


def thm4_rate(eps: float, analysis) -> float:
    """Converse for compound-dispersion channels, in terms of ``nu_min`` and ``nu_max``."""
    if analysis.nu_min <= 0:
        raise DomainError("nu_min = 0")
    return r_of_eps(eps, analysis.nu_min, analysis.nu_max)


def converse_offset(eps: float, delta_n: float, nu_min: float, nu_max: float) -> float:
    """``r_n - kappa``: the converse threshold offset for slack ``delta_n``."""
    return r_of_eps(eps + 2.0 * delta_n, nu_min, nu_max)


@dataclass(frozen=True)
class RateCurve:
    eps_grid: np.ndarray
    no_feedback: np.ndarray
    thm1_lower: np.ndarray
    fb_lower: np.ndarray
    fb_upper: np.ndarray

    def positive_range_enlarged(self) -> bool:
        """True when ``fb_lower > 0`` on strictly more grid points than ``no_feedback > 0``."""
        fb = self.fb_lower > 0
        nf = self.no_feedback > 0
        return bool(np.all(fb >= nf) and np.any(fb & ~nf))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CURVE_HEADER + "\n")
        for row in zip(self.eps_grid, self.no_feedback, self.thm1_lower, self.fb_lower, self.fb_upper):
            buf.write(",".join(f"{v:.12g}" for v in row) + "\n")
        return buf.getvalue()


def build_rate_curve(analysis, eps_grid) -> RateCurve:
    """Evaluate every rate formula on ``eps_grid``; ``thm1`` is NaN where undefined."""
    eps_grid = np.asarray(eps_grid, dtype=float)
    if eps_grid.ndim != 1 or eps_grid.size == 0:
        raise DomainError("eps grid must be a nonempty vector")
    if np.any(np.diff(eps_grid) <= 0):
        raise DomainError("eps grid must be increasing")
    for e in eps_grid:
        _check_eps(e)
    nf = np.array([strassen_rate(e, analysis) for e in eps_grid])
    lo = np.array([thm2_rate(e, analysis) for e in eps_grid])
    up = np.array([thm4_rate(e, analysis) for e in eps_grid])
    t1 = np.full(eps_grid.size, np.nan)
    if analysis.beta < 1.0:
        for i, e in enumerate(eps_grid):
            if e < 0.5:
                try:
                    t1[i] = thm1_rate(e, analysis)
                except NotFound:
                    pass
    return RateCurve(eps_grid, nf, t1, lo, up)


def parse_eps_grid(spec: str) -> np.ndarray:
    """``"a:step:b"`` (inclusive) or a comma list like ``"0.1,0.5"``."""
    spec = spec.strip()
    if ":" in spec:
        parts = [float(p) for p in spec.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise DomainError(f"bad grid spec {spec!r}")
        a, step, b = parts
        count = int(math.floor((b - a) / step + 1e-9)) + 1
        return np.round(a + step * np.arange(count), 12)
    return np.array([float(p) for p in spec.split(",") if p.strip()])
