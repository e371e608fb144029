"""Very noisy channels ``W_zeta(y|x) = Gamma(y) (1 + zeta * lam(x, y))``.

As ``zeta -> 0`` capacity and both dispersion extremes scale like
``zeta**2``; the scaling report measures the third-order remainders.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .channel import Dmc, analyze, validate_channel
from .errors import ChannelError, DomainError, NegativeProbability, NoConvergence

REPORT_HEADER = "zeta,C,boldC_zeta2,ratio_C,Vmin,Vmax,ratio_Vmin,ratio_Vmax,Vratio"


def _check_gamma(gamma) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size == 0:
        raise ChannelError("gamma must be a nonempty vector")
    if np.any(gamma <= 0):
        raise ChannelError("gamma must have full support")
    if abs(gamma.sum() - 1.0) > 1e-9:
        raise ChannelError(f"gamma sums to {gamma.sum()!r}")
    return gamma / gamma.sum()


def center_lambda(gamma, raw_lam) -> np.ndarray:
    """Subtract the ``gamma``-weighted mean from every row."""
    gamma = _check_gamma(gamma)
    lam = np.asarray(raw_lam, dtype=float)
    if lam.ndim != 2 or lam.shape[1] != gamma.size:
        raise ChannelError(f"lambda shape {lam.shape} does not match gamma of size {gamma.size}")
    return lam - (lam @ gamma)[:, None]


def bold_c(gamma, lam, restarts: int = 10, tol: float = 1e-10, seed: int = 0,
           max_iter: int = 200_000) -> tuple[float, np.ndarray]:
    """Maximize ``(1/2) sum_y gamma(y) Var_P[lam(., y)]`` over input distributions.

    Exponentiated-gradient ascent from the uniform start and ``restarts - 1``
    random Dirichlet starts; stops when the Frank-Wolfe gap drops below ``tol``.
    Returns the best value and its maximizer.
    """
    gamma = _check_gamma(gamma)
    lam = np.asarray(lam, dtype=float)
    nx = lam.shape[0]
    sq = (lam ** 2) @ gamma

    def value(p):
        m = p @ lam
        return 0.5 * (p @ sq - gamma @ (m * m))

    def grad(p):
        return 0.5 * sq - lam @ (gamma * (p @ lam))

    if nx == 1:
        return 0.0, np.ones(1)
    rng = np.random.default_rng(seed)
    scale = max(float(np.abs(lam).max()) ** 2, 1e-300)
    best_val, best_p = -np.inf, None
    for r in range(restarts):
        p = np.full(nx, 1.0 / nx) if r == 0 else rng.dirichlet(np.ones(nx))
        eta = 1.0 / scale
        gap = np.inf
        for _ in range(max_iter):
            g = grad(p)
            gap = float(g.max() - p @ g)
            if gap < tol:
                break
            p = p * np.exp(eta * (g - g.max()))
            p /= p.sum()
        else:
            raise NoConvergence(f"bold_c: Frank-Wolfe gap {gap:.3g} after {max_iter} iterations")
        v = value(p)
        if v > best_val:
            best_val, best_p = v, p
    return float(best_val), best_p


@dataclass(frozen=True)
class VncSpec:
    gamma: np.ndarray
    lam: np.ndarray
    zeta: float

    def __post_init__(self):
        gamma = _check_gamma(self.gamma)
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim != 2 or lam.shape[1] != gamma.size:
            raise ChannelError(f"lambda shape {lam.shape} does not match gamma of size {gamma.size}")
        resid = np.abs(lam @ gamma).max()
        if resid > 1e-12:
            raise ChannelError(f"lambda rows are not gamma-centered (residual {resid:.3g})")
        if self.zeta < 0:
            raise DomainError(f"zeta={self.zeta!r} must be nonnegative")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "lam", lam)

    @property
    def lam_max(self) -> float:
        return float(np.abs(self.lam).max())


def realize(spec: VncSpec) -> Dmc:
    factor = 1.0 + spec.zeta * spec.lam
    if np.any(factor <= 0):
        x, y = np.argwhere(factor <= 0)[0]
        raise NegativeProbability(f"1 + zeta*lambda({x},{y}) = {factor[x, y]:.6g} <= 0")
    return validate_channel(spec.gamma[None, :] * factor)


def random_centered_lambda(gamma, inputs: int, seed: int) -> np.ndarray:
    """Gaussian rows, centered, then scaled so ``max |lam| = 1``."""
    rng = np.random.default_rng(seed)
    lam = center_lambda(gamma, rng.standard_normal((inputs, len(gamma))))
    return lam / np.abs(lam).max()


@dataclass(frozen=True)
class ScalingRow:
    zeta: float
    capacity: float
    bold_c_zeta2: float
    ratio_c: float
    v_min: float
    v_max: float
    ratio_v_min: float
    ratio_v_max: float
    v_ratio: float
    lam_star: np.ndarray
    psi: np.ndarray


def scaling_report(gamma, lam, zeta_list) -> list[ScalingRow]:
    """Analyze ``W_zeta`` for each zeta and report the third-order remainders."""
    zetas = [float(z) for z in zeta_list]
    if not zetas:
        raise DomainError("empty zeta list")
    if any(z <= 0 for z in zetas):
        raise DomainError("zeta values must be positive")
    if any(b >= a for a, b in zip(zetas, zetas[1:])):
        raise DomainError("zeta list must be strictly decreasing")
    gamma = _check_gamma(gamma)
    lam = np.asarray(lam, dtype=float)
    big_c, _ = bold_c(gamma, lam)
    if big_c <= 0:
        raise DomainError("bold C = 0: every W_zeta has zero capacity")
    rows = []
    for z in zetas:
        an = analyze(realize(VncSpec(gamma, lam, z)))
        cap = an.capacity_nats
        lam_star = an.q_min @ lam
        psi = 0.5 * ((lam - lam_star[None, :]) ** 2) @ gamma
        rows.append(ScalingRow(
            zeta=z,
            capacity=cap,
            bold_c_zeta2=big_c * z * z,
            ratio_c=abs(cap - big_c * z * z) / z ** 3,
            v_min=an.v_min,
            v_max=an.v_max,
            ratio_v_min=abs(an.v_min - 2 * cap) / z ** 3,
            ratio_v_max=abs(an.v_max - 2 * cap) / z ** 3,
            v_ratio=an.v_min / an.v_max,
            lam_star=lam_star,
            psi=psi,
        ))
    return rows


def report_csv(rows) -> str:
    buf = io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    for r in rows:
        vals = (r.zeta, r.capacity, r.bold_c_zeta2, r.ratio_c, r.v_min, r.v_max,
                r.ratio_v_min, r.ratio_v_max, r.v_ratio)
        buf.write(",".join(f"{v:.12g}" for v in vals) + "\n")
    return buf.getvalue()


def load_gamma(path) -> np.ndarray:
    """JSON list, or an object with key ``gamma``."""
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        if "gamma" not in obj:
            raise ChannelError("gamma JSON object must have key 'gamma'")
        obj = obj["gamma"]
    try:
        return _check_gamma(np.asarray(obj, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ChannelError(f"gamma is not numeric: {exc}") from exc


def load_lambda(path) -> np.ndarray:
    """JSON list of rows, or an object with key ``lambda``."""
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        if "lambda" not in obj:
            raise ChannelError("lambda JSON object must have key 'lambda'")
        obj = obj["lambda"]
    try:
        lam = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelError(f"lambda is not numeric: {exc}") from exc
    if lam.ndim != 2:
        raise ChannelError("lambda must be a 2-D array")
    return lam
