"""Zero-drift diffusions whose coefficient switches at the origin.

Closed forms (transition density, terminal sign probabilities, the optimal
bang-bang control value) sit next to an Euler-Maruyama simulator and
quadrature routines used to cross-check them.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _kernels, normal
from .errors import DomainError, NonpositiveTime
from .walk import Z95, run_chunked

QUAD_TAIL_SD = 12.0


@dataclass(frozen=True)
class BangBangDiffusion:
    """``dX = sigma(X) dB`` with ``sigma = 1`` on ``x <= 0`` and ``beta`` on ``x > 0``."""

    beta: float
    x0: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise DomainError(f"beta={self.beta!r} must lie in (0, 1]")


def transition_density(d: BangBangDiffusion, t: float, x, y):
    """``P_t(x, y)``; points with ``x = 0`` or ``y = 0`` use the negative-axis formulas."""
    if t <= 0:
        raise NonpositiveTime(f"t={t!r}")
    b = d.beta
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    pos_x, pos_y = x > 0, y > 0
    g = 1.0 / math.sqrt(2.0 * math.pi * t)
    bt = 2.0 * b * b * t
    with np.errstate(over="ignore", under="ignore"):
        pp = np.exp(-(x - y) ** 2 / bt) / b - (b - 1) / (b * (b + 1)) * np.exp(-(x + y) ** 2 / bt)
        pn = 2 * b / (b + 1) * np.exp(-(x - b * y) ** 2 / bt)
        np_ = 2 / (b * (b + 1)) * np.exp(-(b * x - y) ** 2 / bt)
        nn = np.exp(-(x - y) ** 2 / (2 * t)) + (b - 1) / (b + 1) * np.exp(-(x + y) ** 2 / (2 * t))
    out = g * np.where(pos_x, np.where(pos_y, pp, pn), np.where(pos_y, np_, nn))
    return float(out) if out.ndim == 0 else out


def prob_nonpositive(d: BangBangDiffusion, t: float = 1.0) -> float:
    """``P(X_t <= 0)`` started from ``d.x0``."""
    if t <= 0:
        raise NonpositiveTime(f"t={t!r}")
    b, x0 = d.beta, d.x0 / math.sqrt(t)
    if x0 > 0:
        return 2 * b / (b + 1) * normal.sf(x0 / b)
    return normal.cdf(-x0) + (b - 1) / (b + 1) * normal.cdf(x0)


def prob_nonpositive_at_1(d: BangBangDiffusion) -> float:
    return prob_nonpositive(d, 1.0)


# --------------------------------------------------------------------------
# quadrature cross-checks


def _quad_halfline(f, lo, hi, tol):
    val, _ = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=400)
    return val


def _quad_line(f, centre, spread, tol):
    """Integrate over the real line split at 0 and at ``centre``, truncated at 12 sd."""
    lo, hi = centre - QUAD_TAIL_SD * spread, centre + QUAD_TAIL_SD * spread
    cuts = sorted({lo, hi, min(max(0.0, lo), hi), min(max(centre, lo), hi)})
    return sum(_quad_halfline(f, a, b, tol) for a, b in zip(cuts[:-1], cuts[1:]) if b > a)


def density_mass(d: BangBangDiffusion, t: float, x: float, tol: float = 1e-12) -> float:
    return _quad_line(lambda y: transition_density(d, t, x, y), x, math.sqrt(t), tol)


def prob_nonpositive_quadrature(d: BangBangDiffusion, t: float = 1.0, tol: float = 1e-12) -> float:
    lo = min(d.x0, 0.0) - QUAD_TAIL_SD * math.sqrt(t)
    return _quad_halfline(lambda y: transition_density(d, t, d.x0, y), lo, 0.0, tol)


def chapman_kolmogorov(d: BangBangDiffusion, s: float, t: float, x: float, y: float,
                       tol: float = 1e-12) -> float:
    """``int P_s(x, z) P_t(z, y) dz``; should equal ``P_{s+t}(x, y)``."""
    f = lambda z: transition_density(d, s, x, z) * transition_density(d, t, z, y)
    return _quad_line(f, 0.5 * (x + y), math.sqrt(s + t), tol)


# --------------------------------------------------------------------------
# optimal bang-bang control


def mcnamara_opt_prob(nu_min: float, nu_max: float, start_offset: float) -> float:
    """``P(xi_1 >= 0)`` for ``xi_0 = -start_offset`` under the optimal bang-bang coefficient.

    The coefficient is ``sqrt(nu_min)`` above the origin and ``sqrt(nu_max)``
    at or below it, which maximizes the probability of ending nonnegative
    among coefficients valued in ``[sqrt(nu_min), sqrt(nu_max)]``.
    """
    if not 0.0 < nu_min <= nu_max:
        raise DomainError(f"need 0 < nu_min <= nu_max, got {nu_min!r}, {nu_max!r}")
    lam = math.sqrt(nu_min / nu_max)
    if start_offset <= 0:
        return 1.0 - 2.0 * lam / (1.0 + lam) * normal.cdf(start_offset / math.sqrt(nu_min))
    return 2.0 / (1.0 + lam) * normal.sf(start_offset / math.sqrt(nu_max))


# --------------------------------------------------------------------------
# Euler-Maruyama


@dataclass(frozen=True)
class SigmaField:
    """``lower`` for x <= 0, ``upper`` for x >= width, linear ramp between.

    ``width = 0`` gives the two-level coefficient switching at the origin.
    """

    lower: float
    upper: float
    width: float = 0.0

    def __post_init__(self):
        if min(self.lower, self.upper) <= 0:
            raise DomainError("diffusion levels must be positive")
        if self.width < 0:
            raise DomainError("ramp width must be nonnegative")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.width == 0:
            out = np.where(x <= 0, self.lower, self.upper)
        else:
            out = self.lower + (self.upper - self.lower) * np.clip(x / self.width, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    @classmethod
    def ramp(cls, beta: float, delta: float) -> SigmaField:
        """The Lipschitz ramp from 1 down to ``beta`` over ``[0, delta]``."""
        return cls(1.0, beta, delta)

    @classmethod
    def bang_bang(cls, below: float, above: float) -> SigmaField:
        return cls(below, above, 0.0)


@dataclass(frozen=True)
class SdeConfig:
    sigma: SigmaField
    x0: float
    steps: int = 4096
    trials: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.steps < 100:
            raise DomainError(f"steps={self.steps} < 100")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")


def euler_maruyama(config: SdeConfig, threads: int | None = None) -> np.ndarray:
    """Terminal values ``X_1`` of independent Euler-Maruyama paths."""
    sig = config.sigma
    seed = int(config.seed) & 0xFFFFFFFFFFFFFFFF

    def fill(out, lo):
        _kernels.euler_chunk(out, lo, seed, float(config.x0), config.steps,
                             sig.lower, sig.upper, sig.width)

    return run_chunked(fill, config.trials, threads)


def empirical_prob(samples: np.ndarray, nonnegative: bool = False) -> tuple[float, float]:
    """Fraction of samples ``<= 0`` (or ``>= 0``) with its 95% normal-approximation radius."""
    hits = samples >= 0 if nonnegative else samples <= 0
    p = float(np.count_nonzero(hits)) / samples.size
    return p, Z95 * math.sqrt(p * (1 - p) / samples.size)


def delta_sweep(beta: float, eps: float, deltas, steps: int = 4096, trials: int = 100_000,
                seed: int = 0, threads: int | None = None):
    """``P(X_1 <= 0)`` for the ramp coefficient started at ``s(eps)``, one row per delta."""
    from .controllers import s_of_eps

    x0 = s_of_eps(eps, beta)
    rows = []
    for delta in deltas:
        cfg = SdeConfig(SigmaField.ramp(beta, delta), x0, steps, trials, seed)
        p, ci = empirical_prob(euler_maruyama(cfg, threads))
        rows.append((float(delta), p, ci))
    return rows


def density_grid_csv(d: BangBangDiffusion, t: float, xs, ys) -> str:
    buf = io.StringIO()
    buf.write("x,y,density\n")
    for x in xs:
        for y in ys:
            buf.write(f"{x:.12g},{y:.12g},{transition_density(d, t, x, y):.12g}\n")
    return buf.getvalue()


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    buf.write("delta,estimate,ci_radius\n")
    for delta, p, ci in rows:
        buf.write(f"{delta:.12g},{p:.12g},{ci:.12g}\n")
    return buf.getvalue()
