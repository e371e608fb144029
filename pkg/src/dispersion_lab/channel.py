"""Discrete memoryless channels: capacity, information density, dispersion.

All quantities are in nats.  The capacity-achieving input distributions of a
channel form a polytope; the dispersion extremes ``v_min``/``v_max`` are the
optimum values of a linear functional over it and are computed with the
in-house simplex solver.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    AllZeroColumn,
    ChannelError,
    EmptySupport,
    InfeasiblePolytope,
    NegativeEntry,
    NoConvergence,
    NonStochasticRow,
    ZeroOutputProbability,
)
from .simplex import Infeasible, Unbounded, linprog_eq

#: information density of a pair (x, y) with W(y|x) = 0
NO_SUPPORT = -math.inf

SIMPLE = "SIMPLE"
COMPOUND = "COMPOUND"

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Dmc:
    """Row-stochastic channel matrix ``w[x, y] = W(y|x)``."""

    w: np.ndarray

    @property
    def input_size(self) -> int:
        return self.w.shape[0]

    @property
    def output_size(self) -> int:
        return self.w.shape[1]

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "output_size": self.output_size,
            "w": self.w.tolist(),
        }


def validate_channel(w) -> Dmc:
    """Check ``w`` and return it as a :class:`Dmc` with rows renormalized."""
    try:
        w = np.array(w, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelError(f"channel matrix is not numeric: {exc}") from exc
    if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
        raise ChannelError(f"channel matrix must be a non-empty 2-D array, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ChannelError("channel matrix has non-finite entries")
    if np.any(w < 0):
        x, y = np.argwhere(w < 0)[0]
        raise NegativeEntry(f"W({y}|{x}) = {w[x, y]} < 0")
    sums = w.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise NonStochasticRow(f"row {bad[0]} sums to {sums[bad[0]]!r}")
    zero_cols = np.flatnonzero(w.sum(axis=0) == 0)
    if zero_cols.size:
        raise AllZeroColumn(f"output symbol {zero_cols[0]} is never produced")
    w = w / sums[:, None]
    w.setflags(write=False)
    return Dmc(w)


def channel_from_dict(obj: dict) -> Dmc:
    if not isinstance(obj, dict) or "w" not in obj:
        raise ChannelError("channel JSON must be an object with key 'w'")
    ch = validate_channel(obj["w"])
    for key, actual in (("input_size", ch.input_size), ("output_size", ch.output_size)):
        if key in obj and int(obj[key]) != actual:
            raise ChannelError(f"{key}={obj[key]} does not match matrix shape {ch.w.shape}")
    return ch


def load_channel(path) -> Dmc:
    with open(path) as fh:
        return channel_from_dict(json.load(fh))


# --------------------------------------------------------------------------
# capacity


class CapacityResult(NamedTuple):
    capacity: float
    q_star: np.ndarray
    input_dist: np.ndarray
    divergences: np.ndarray
    gap: float
    iterations: int


def _divergences(w: np.ndarray, q: np.ndarray) -> np.ndarray:
    """D(W(.|x) || q) for every input x."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w > 0, w * np.log(w / q), 0.0)
    return terms.sum(axis=1)


def _mutual_information(w: np.ndarray, p: np.ndarray) -> float:
    return float(p @ _divergences(w, p @ w))


def _newton_polish(w: np.ndarray, p: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Active-set Newton ascent of ``I(p; W)`` over the simplex, started at ``p``.

    Blahut-Arimoto converges slowly when an input is unused at the optimum
    by a small margin; this finishes the job once the iterate is close.
    """
    p = p.copy()
    free = p > 0
    for _ in range(max_iter):
        idx = np.flatnonzero(free)
        q = p @ w
        d = _divergences(w, q)
        ws = w[idx]
        h = -(ws / np.where(q > 0, q, 1.0)) @ ws.T
        k = idx.size
        kkt = np.zeros((k + 1, k + 1))
        kkt[:k, :k] = h
        kkt[:k, k] = kkt[k, :k] = 1.0
        rhs = np.concatenate([-d[idx], [0.0]])
        step = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
        ps = p[idx]
        neg = step < 0
        t = 1.0
        if np.any(neg):
            t = min(1.0, float(np.min(-ps[neg] / step[neg])))
        base = _mutual_information(w, p)
        while True:
            cand = p.copy()
            cand[idx] = np.maximum(ps + t * step, 0.0)
            if t < 1.0:
                cand[idx[np.argmin(np.where(neg, ps + t * step, np.inf))]] = 0.0
            cand /= cand.sum()
            if _mutual_information(w, cand) >= base - 1e-15 or t < 1e-12:
                break
            t *= 0.5
        p = cand
        free = p > 0
        if t >= 1.0 and np.abs(step).max() < 1e-14:
            d = _divergences(w, p @ w)
            c = float(p @ d)
            out = (~free) & (d > c + 1e-15)
            if not np.any(out):
                break
            free[np.argmax(np.where(out, d, -np.inf))] = True
            p[free & (p == 0)] = 1e-12
            p /= p.sum()
    return p


def blahut_arimoto(ch: Dmc, tol: float = 1e-12, max_iter: int = 10**6) -> CapacityResult:
    """Alternating maximization, stopped on the duality gap.

    ``I(p; W) <= C <= max_x D(W(.|x) || pW)`` holds for every iterate, so the
    loop ends once the two bounds are closer than ``tol``.  A Newton polish
    is attempted periodically; it is accepted only if it closes the gap.
    """
    w = ch.w
    p = np.full(ch.input_size, 1.0 / ch.input_size)
    for it in range(1, max_iter + 1):
        q = p @ w
        d = _divergences(w, q)
        lower = float(p @ d)
        upper = float(d.max())
        if upper - lower < tol:
            return CapacityResult(lower, q / q.sum(), p, d, upper - lower, it)
        if it % 256 == 0:
            cand = _newton_polish(w, p)
            cq = cand @ w
            cd = _divergences(w, cq)
            clo = float(cand @ cd)
            if cd.max() - clo < tol:
                return CapacityResult(clo, cq / cq.sum(), cand, cd, float(cd.max() - clo), it)
        p = p * np.exp(d - upper)
        p /= p.sum()
    raise NoConvergence(f"duality gap {upper - lower:.3e} after {max_iter} iterations")


def capacity(ch: Dmc, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Return ``(C, q_star)``: capacity in nats and the capacity-achieving output law."""
    res = blahut_arimoto(ch, tol)
    if np.any(res.q_star <= 0):
        raise ZeroOutputProbability("capacity-achieving output law is not fully supported")
    return res.capacity, res.q_star


# --------------------------------------------------------------------------
# information density


def info_density_matrix(ch: Dmc, q_star) -> np.ndarray:
    """``log W(y|x) / q*(y)`` with :data:`NO_SUPPORT` where ``W(y|x) = 0``."""
    q_star = np.asarray(q_star, dtype=float)
    if np.any(q_star <= 0):
        raise ZeroOutputProbability(f"q*(y) = 0 for y in {np.flatnonzero(q_star <= 0).tolist()}")
    with np.errstate(divide="ignore"):
        return np.where(ch.w > 0, np.log(ch.w) - np.log(q_star), NO_SUPPORT)


def info_density(ch: Dmc, q_star, x: int, y: int) -> float:
    q_star = np.asarray(q_star, dtype=float)
    if q_star[y] <= 0:
        raise ZeroOutputProbability(f"q*({y}) = 0")
    wxy = ch.w[x, y]
    if wxy == 0:
        return NO_SUPPORT
    return math.log(wxy) - math.log(q_star[y])


def max_abs_info_density(ch: Dmc, q_star) -> float:
    dens = info_density_matrix(ch, q_star)
    return float(np.abs(dens[ch.w > 0]).max())


def conditional_variances(ch: Dmc, q_star) -> np.ndarray:
    """Vector of ``Var[i*(X, Y) | X = x]`` over all inputs."""
    dens = info_density_matrix(ch, q_star)
    dens = np.where(ch.w > 0, dens, 0.0)
    mean = (ch.w * dens).sum(axis=1)
    second = (ch.w * dens**2).sum(axis=1)
    return np.maximum(second - mean**2, 0.0)


def conditional_variance(ch: Dmc, q_star, x: int) -> float:
    return float(conditional_variances(ch, q_star)[x])


# --------------------------------------------------------------------------
# capacity-achieving polytope


@dataclass(frozen=True)
class CapacityPolytope:
    """``{P : P >= 0, P = 0 off support, P W = q*, sum P = 1}``.

    ``a_eq``/``b_eq`` act on the coordinates listed in ``support`` only and
    are reduced to full row rank, so the system is always consistent.
    """

    input_size: int
    support: tuple
    a_eq: np.ndarray
    b_eq: np.ndarray
    feasible_point: np.ndarray

    def embed(self, x_support) -> np.ndarray:
        full = np.zeros(self.input_size)
        full[list(self.support)] = x_support
        return full


def capacity_achieving_set(
    ch: Dmc,
    cap: float,
    q_star,
    divergences=None,
    input_dist=None,
    tol: float = 1e-9,
) -> CapacityPolytope:
    """Build the polytope of capacity-achieving input laws.

    An input belongs to the support set iff ``D(W(.|x) || q*) >= C - tol``.
    ``input_dist`` (an approximately optimal input law, e.g. the final
    Blahut-Arimoto iterate) anchors the right-hand side; without it the
    output-marginal equations use ``q_star`` directly.
    """
    q_star = np.asarray(q_star, dtype=float)
    d = _divergences(ch.w, q_star) if divergences is None else np.asarray(divergences)
    support = tuple(int(x) for x in np.flatnonzero(d >= cap - tol))
    if not support:
        raise EmptySupport(f"no input within {tol:g} of capacity")
    ws = ch.w[list(support)]
    a = np.vstack([ws.T, np.ones(len(support))])
    if input_dist is not None:
        p = np.asarray(input_dist, dtype=float)[list(support)]
        p = p / p.sum()
        b = a @ p
    else:
        p = None
        b = np.append(q_star, 1.0)
    # reduce to a full-row-rank system spanning the same row space
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    rank = int(np.sum(s > s[0] * 1e-10))
    a_red = u[:, :rank].T @ a
    b_red = u[:, :rank].T @ b
    if p is None:
        try:
            p = linprog_eq(np.zeros(len(support)), a_red, b_red).x
        except Infeasible as exc:
            raise InfeasiblePolytope(str(exc)) from exc
    feasible = np.zeros(ch.input_size)
    feasible[list(support)] = p
    return CapacityPolytope(ch.input_size, support, a_red, b_red, feasible)


def dispersion_extremes(polytope: CapacityPolytope, nu, lp_tol: float = 1e-10):
    """Minimize and maximize ``sum_x P(x) nu_x`` over the polytope.

    Returns ``(v_min, v_max, p_min, p_max)`` with full-length distributions.
    """
    nu_s = np.asarray(nu, dtype=float)[list(polytope.support)]
    try:
        lo = linprog_eq(nu_s, polytope.a_eq, polytope.b_eq, tol=lp_tol)
        hi = linprog_eq(-nu_s, polytope.a_eq, polytope.b_eq, tol=lp_tol)
    except Infeasible as exc:
        raise InfeasiblePolytope(str(exc)) from exc
    except Unbounded as exc:  # cannot happen on a bounded polytope
        raise InfeasiblePolytope(f"unbounded LP over a simplex face: {exc}") from exc
    p_min = polytope.embed(lo.x)
    p_max = polytope.embed(hi.x)
    return float(nu_s @ lo.x), float(nu_s @ hi.x), p_min, p_max


# --------------------------------------------------------------------------
# full analysis


@dataclass(frozen=True)
class Tolerances:
    capacity: float = 1e-12
    support: float = 1e-9
    lp: float = 1e-10
    dispersion_class: float = 1e-9


@dataclass(frozen=True)
class ChannelAnalysis:
    channel: Dmc
    capacity_nats: float
    q_star: np.ndarray
    x_star: tuple
    nu: np.ndarray
    nu_min: float
    nu_max: float
    v_min: float
    v_max: float
    beta: float
    lam: float
    i_max: float
    dispersion_class: str
    q_min: np.ndarray
    q_max: np.ndarray
    polytope: CapacityPolytope = field(repr=False)
    tolerances: Tolerances = Tolerances()

    @property
    def positive_dispersion(self) -> bool:
        """True when ``v_min > 0``, the standing assumption of the feedback results."""
        return self.v_min > 0

    def v_eps(self, eps: float) -> float:
        """Dispersion used at error level ``eps``: ``v_min`` below 1/2, ``v_max`` otherwise."""
        return self.v_min if eps < 0.5 else self.v_max

    def to_dict(self) -> dict:
        warnings = []
        if self.nu_min <= 0:
            warnings.append("nu_min = 0: converse for compound channels does not apply")
        if self.v_min <= 0:
            warnings.append("v_min = 0: feedback rate results do not apply")
        return {
            "capacity_nats": self.capacity_nats,
            "q_star": self.q_star.tolist(),
            "x_star": list(self.x_star),
            "nu": self.nu.tolist(),
            "nu_min": self.nu_min,
            "nu_max": self.nu_max,
            "v_min": self.v_min,
            "v_max": self.v_max,
            "beta": self.beta,
            "lambda": self.lam,
            "i_max": self.i_max,
            "dispersion_class": self.dispersion_class,
            "q_min": self.q_min.tolist(),
            "q_max": self.q_max.tolist(),
            "tolerances": vars(self.tolerances).copy(),
            "warnings": warnings,
        }

    def summary(self) -> str:
        if self.dispersion_class == SIMPLE:
            return f"SIMPLE, C={self.capacity_nats:.6g}, V={self.v_min:.3g}"
        return (
            f"COMPOUND, C={self.capacity_nats:.6g}, "
            f"V_min≈{self.v_min:.3g}, V_max≈{self.v_max:.3g}"
        )


def _ratio_sqrt(lo: float, hi: float) -> float:
    if hi <= 0:
        return 1.0
    return math.sqrt(max(lo, 0.0) / hi)


def analyze(ch: Dmc, tolerances: Tolerances | None = None) -> ChannelAnalysis:
    tol = tolerances or Tolerances()
    ba = blahut_arimoto(ch, tol.capacity)
    q_star = ba.q_star
    if np.any(q_star <= 0):
        raise ZeroOutputProbability("capacity-achieving output law is not fully supported")
    polytope = capacity_achieving_set(
        ch, ba.capacity, q_star, _divergences(ch.w, q_star), ba.input_dist, tol.support
    )
    nu = conditional_variances(ch, q_star)
    v_min, v_max, p_min, p_max = dispersion_extremes(polytope, nu, tol.lp)
    nu_min, nu_max = float(nu.min()), float(nu.max())
    klass = SIMPLE if abs(v_max - v_min) <= tol.dispersion_class else COMPOUND
    nu.setflags(write=False)
    return ChannelAnalysis(
        channel=ch,
        capacity_nats=ba.capacity,
        q_star=q_star,
        x_star=polytope.support,
        nu=nu,
        nu_min=nu_min,
        nu_max=nu_max,
        v_min=v_min,
        v_max=v_max,
        beta=_ratio_sqrt(v_min, v_max),
        lam=_ratio_sqrt(nu_min, nu_max),
        i_max=max_abs_info_density(ch, q_star),
        dispersion_class=klass,
        q_min=p_min,
        q_max=p_max,
        polytope=polytope,
        tolerances=tol,
    )


# --------------------------------------------------------------------------
# reference channels


def binary_entropy(r: float) -> float:
    if r <= 0 or r >= 1:
        return 0.0
    return -r * math.log(r) - (1 - r) * math.log(1 - r)


def bsc(p: float) -> Dmc:
    return validate_channel([[1 - p, p], [p, 1 - p]])


def compound_example_q(p: float = 0.8) -> float:
    """Solve ``h(p) + (1 - p) log 2 = h(q)`` for ``q`` in (0, 1/2)."""
    from scipy.optimize import brentq

    target = binary_entropy(p) + (1 - p) * math.log(2)
    if target >= math.log(2):
        raise ValueError(f"no q in (0, 1/2) for p={p}")
    return brentq(lambda q: binary_entropy(q) - target, 1e-15, 0.5, xtol=1e-15, rtol=1e-15)


def compound_example(p: float = 0.8, q: float | None = None) -> Dmc:
    """Six-input, three-output compound-dispersion channel.

    Inputs 0-2 are ternary symmetric rows with crossover ``1-p``; inputs
    3-5 are cyclic shifts of ``(q, 1-q, 0)``.  With ``q`` chosen so both
    groups have the same output entropy, every input is capacity-achieving
    but the two groups have different conditional variances.
    """
    if q is None:
        q = compound_example_q(p)
    a = 0.5 * (1 - p)
    return validate_channel(
        [
            [p, a, a],
            [a, p, a],
            [a, a, p],
            [q, 1 - q, 0.0],
            [0.0, q, 1 - q],
            [1 - q, 0.0, q],
        ]
    )
