"""Monte Carlo estimation of tail probabilities of controlled random walks.

Three walks share one compiled engine: the information-density walk driven by
a feedback controller on a real channel, the abstract two-law chain whose
diffusion limit is the bang-bang SDE, and the two-coin betting game.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .controllers import (
    CoarseController,
    ConstantController,
    RefinedController,
    policy_parameters,
    s_of_eps,
)
from .errors import DomainError, IncompatibleController, VacuousBound

Z95 = 1.959963984540054
CHUNK = 2048
THREADS_ENV = "DISPERSION_LAB_THREADS"


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def run_chunked(fill, trials: int, threads: int | None = None) -> np.ndarray:
    """Call ``fill(out_view, first_trial)`` over fixed-size chunks of trials.

    Each trial draws from its own stream, so the result does not depend on
    ``threads`` or on how chunks are scheduled.
    """
    out = np.empty(trials)
    starts = range(0, trials, CHUNK)
    threads = resolve_threads(threads)
    if threads == 1:
        for lo in starts:
            fill(out[lo:lo + CHUNK], lo)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda lo: fill(out[lo:lo + CHUNK], lo), starts))
    return out


def ci_radius(estimate: float, trials: int) -> float:
    return Z95 * math.sqrt(estimate * (1.0 - estimate) / trials)


@dataclass(frozen=True)
class IncrementLaw:
    """Finite-support law, atoms sorted ascending so inverse-CDF draws are monotone."""

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        order = np.argsort(self.values, kind="stable")
        values = np.asarray(self.values, dtype=float)[order]
        probs = np.asarray(self.probs, dtype=float)[order]
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise DomainError("increment probabilities must be a distribution")
        keep = probs > 0
        values, probs = values[keep], probs[keep]
        # merge coincident atoms
        uniq, inverse = np.unique(values, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, probs)
        object.__setattr__(self, "values", uniq)
        object.__setattr__(self, "probs", merged / merged.sum())

    @property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    @property
    def mean(self) -> float:
        return float(self.probs @ self.values)

    @property
    def variance(self) -> float:
        return float(self.probs @ (self.values - self.mean) ** 2)

    @property
    def bound(self) -> float:
        return float(np.abs(self.values).max())


def two_point_law(scale: float) -> IncrementLaw:
    """``+-scale`` with probability 1/2 each."""
    return IncrementLaw(np.array([-scale, scale]), np.array([0.5, 0.5]))


def increment_law(analysis, q) -> IncrementLaw:
    """Law of ``i*(X, Y) - C`` when ``X ~ q`` and ``Y ~ W(.|X)``."""
    from .channel import info_density_matrix

    w = analysis.channel.w
    dens = info_density_matrix(analysis.channel, analysis.q_star)
    joint = np.asarray(q, dtype=float)[:, None] * w
    mask = joint > 0
    return IncrementLaw(dens[mask] - analysis.capacity_nats, joint[mask])


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class WalkResult:
    estimate: float
    ci_radius: float
    trials: int
    seed: int
    mean_final_sum: float
    var_final_sum: float
    n: int = 0
    threshold: float = 0.0
    descriptor: str = ""
    final_sums: np.ndarray | None = field(default=None, repr=False, compare=False)

    CSV_HEADER = "estimate,ci_radius,trials,seed,n,threshold_nats,controller"

    def csv_row(self) -> str:
        return (
            f"{self.estimate:.12g},{self.ci_radius:.12g},{self.trials},{self.seed},"
            f"{self.n},{self.threshold:.12g},{self.descriptor}"
        )

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "ci_radius": self.ci_radius,
            "trials": self.trials,
            "seed": self.seed,
            "n": self.n,
            "threshold_nats": self.threshold,
            "mean_final_sum": self.mean_final_sum,
            "var_final_sum": self.var_final_sum,
            "controller": self.descriptor,
        }


def _result(finals, hits, seed, n, threshold, descriptor) -> WalkResult:
    trials = finals.size
    est = float(np.count_nonzero(hits)) / trials
    return WalkResult(
        estimate=est,
        ci_radius=ci_radius(est, trials),
        trials=trials,
        seed=seed,
        mean_final_sum=float(np.mean(finals)),
        var_final_sum=float(np.var(finals)),
        n=n,
        threshold=threshold,
        descriptor=descriptor,
        final_sums=finals,
    )


def tail_estimate(result: WalkResult, threshold: float, upper: bool = False) -> WalkResult:
    """Re-threshold a stored run: ``P(S <= threshold)`` or ``P(S >= threshold)``."""
    finals = result.final_sums
    hits = finals >= threshold if upper else finals <= threshold
    return _result(finals, hits, result.seed, result.n, threshold, result.descriptor)


def paired_difference(a: WalkResult, b: WalkResult) -> tuple[float, float]:
    """Estimate and 95% radius of ``P_a - P_b`` for runs on common random numbers.

    Both runs must have been made with the same seed and trial count, so
    trial ``t`` of each saw the same random stream.
    """
    if a.seed != b.seed or a.trials != b.trials:
        raise ValueError("paired comparison needs identical seed and trial count")
    ha = a.final_sums <= a.threshold
    hb = b.final_sums <= b.threshold
    d = ha.astype(float) - hb.astype(float)
    return float(d.mean()), Z95 * float(d.std()) / math.sqrt(d.size)


# --------------------------------------------------------------------------
# walks


@dataclass(frozen=True)
class SimConfig:
    n: int
    trials: int
    seed: int
    controller: object
    threshold_nats: float

    def __post_init__(self):
        if self.n < 1:
            raise IncompatibleController(f"horizon n={self.n} must be >= 1")
        if self.trials < 1:
            raise IncompatibleController(f"trials={self.trials} must be >= 1")


def _walk(n, trials, seed, start, law0, law1, mode, p0, p1, p2, beta, threads):
    v0, c0 = law0.values, law0.cdf
    v1, c1 = law1.values, law1.cdf
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def fill(out, lo):
        _kernels.walk_chunk(out, lo, seed, n, start, v0, c0, v1, c1, mode, p0, p1, p2, beta)

    return run_chunked(fill, trials, threads)


def simulate_gamma_n(analysis, config: SimConfig, threads: int | None = None, upper: bool = False):
    """Estimate ``P(sum_k i*(X_k, Y_k) <= threshold)`` under the controlled law.

    With ``upper=True`` the complementary-direction tail ``P(sum >= threshold)``
    is estimated instead.  The returned ``final_sums`` are the un-centered sums.
    """
    ctrl = config.controller
    mode, p0, p1, p2, beta = policy_parameters(ctrl, analysis, config.n)
    if isinstance(ctrl, ConstantController):
        law0 = law1 = increment_law(analysis, ctrl.q)
    elif isinstance(ctrl, (CoarseController, RefinedController)):
        law0 = increment_law(analysis, ctrl.q_min)
        law1 = increment_law(analysis, ctrl.q_max)
    else:
        raise IncompatibleController(f"unsupported controller {ctrl!r}")
    drift = _walk(config.n, config.trials, config.seed, 0.0, law0, law1,
                  mode, p0, p1, p2, beta, threads)
    finals = drift + config.n * analysis.capacity_nats
    thr = config.threshold_nats
    hits = finals >= thr if upper else finals <= thr
    return _result(finals, hits, config.seed, config.n, thr, ctrl.descriptor())


@dataclass(frozen=True)
class AbstractWalkSpec:
    """Chain that steps with ``z1_law`` at or below 0, ``z0_law`` above ``delta*sqrt(n)``
    and a variance-interpolating mixture of the two in between."""

    z1_law: IncrementLaw
    z0_law: IncrementLaw
    delta: float
    eps: float
    n: int

    def __post_init__(self):
        for name, law in (("z1_law", self.z1_law), ("z0_law", self.z0_law)):
            if abs(law.mean) > 1e-12:
                raise DomainError(f"{name} has mean {law.mean!r}, expected 0")
        if abs(self.z1_law.variance - 1.0) > 1e-12:
            raise DomainError(f"z1_law variance {self.z1_law.variance!r}, expected 1")
        if not 0.0 < self.z0_law.variance <= 1.0 + 1e-12:
            raise DomainError("z0_law variance must lie in (0, 1]")
        if not 0.0 < self.delta <= 1.0:
            raise DomainError(f"delta={self.delta!r} must lie in (0, 1]")
        if not 0.0 < self.eps < 1.0:
            raise DomainError(f"eps={self.eps!r} must lie in (0, 1)")
        if self.n < 1:
            raise DomainError("n must be >= 1")

    @property
    def beta(self) -> float:
        return min(1.0, math.sqrt(self.z0_law.variance))

    @property
    def start(self) -> float:
        return s_of_eps(self.eps, self.beta) * math.sqrt(self.n)


def two_point_spec(beta: float, delta: float, eps: float, n: int) -> AbstractWalkSpec:
    return AbstractWalkSpec(two_point_law(1.0), two_point_law(beta), delta, eps, n)


def simulate_abstract_chain(spec: AbstractWalkSpec, trials: int, seed: int,
                            threads: int | None = None) -> WalkResult:
    """Estimate ``P(S_n / sqrt(n) <= 0)`` for the chain started at ``s(eps) sqrt(n)``."""
    root_n = math.sqrt(spec.n)
    finals = _walk(spec.n, trials, seed, spec.start, spec.z0_law, spec.z1_law,
                   _kernels.MODE_BAND, 0.0, spec.delta * root_n, root_n, spec.beta, threads)
    finals = finals / root_n
    desc = f"abstract(beta={spec.beta:.6g};delta={spec.delta:g};eps={spec.eps:g})"
    return _result(finals, finals <= 0.0, seed, spec.n, 0.0, desc)


def sample_band_increments(spec: AbstractWalkSpec, x: float, count: int, seed: int) -> np.ndarray:
    """Draws of the chain's increment when ``S_k / sqrt(n) = x`` lies in the band."""
    if not 0.0 <= x <= spec.delta:
        raise DomainError(f"x={x!r} outside the band [0, {spec.delta}]")
    out = np.empty(count)
    _kernels.band_increments(out, int(seed), x, spec.delta, spec.beta,
                             spec.z0_law.values, spec.z0_law.cdf,
                             spec.z1_law.values, spec.z1_law.cdf)
    return out


COIN_STRATEGIES = ("timid", "bold", "half-switch")


def coin_game(w0: float, n: int, strategy: str, trials: int, seed: int,
              threads: int | None = None) -> WalkResult:
    """Probability of ending with wealth <= 0 after ``n`` fair +-1 / +-2 bets.

    Wealth starts at ``w0 * sqrt(n)``.  ``half-switch`` bets 1 for the first
    half, then keeps betting 1 if ahead and switches to 2 otherwise.
    """
    timid, bold = two_point_law(1.0), two_point_law(2.0)
    if strategy == "timid":
        mode, p0 = _kernels.MODE_CONSTANT, 0.0
    elif strategy == "bold":
        mode, p0 = _kernels.MODE_CONSTANT, 1.0
    elif strategy == "half-switch":
        if n % 2:
            raise DomainError("half-switch strategy needs an even number of rounds")
        mode, p0 = _kernels.MODE_HALF, 0.0
    else:
        raise DomainError(f"unknown strategy {strategy!r}; choose from {COIN_STRATEGIES}")
    finals = _walk(n, trials, seed, w0 * math.sqrt(n), timid, bold, mode, p0, 0.0, 1.0, 0.5, threads)
    return _result(finals, finals <= 0.0, seed, n, 0.0, f"coin({strategy};w0={w0:g})")


# --------------------------------------------------------------------------
# error-probability bounds from simulated tails


def achievability_error_bound(gamma_hat: WalkResult, n: int, rate: float, theta: float) -> float:
    """Upper confidence value for the average error probability at ``rate`` with feedback.

    ``gamma_hat`` must estimate ``P(sum i* <= n (rate + theta))`` for some
    controller; the random-coding ensemble built from that controller then
    has average error at most the tail plus ``exp(-n theta)``.
    """
    if theta <= 0:
        raise DomainError("theta must be positive")
    expected = n * (rate + theta)
    if gamma_hat.final_sums is not None and not math.isclose(
        gamma_hat.threshold, expected, rel_tol=1e-9, abs_tol=1e-9
    ):
        raise DomainError(
            f"tail was estimated at threshold {gamma_hat.threshold:g}, expected n(R+theta)={expected:g}"
        )
    return min(1.0, gamma_hat.estimate + gamma_hat.ci_radius + math.exp(-n * theta))


def converse_bound_eval(tail_hat: WalkResult, eps: float, log_rho: float) -> float:
    """``log rho - log(1 - eps - P(sum i* >= log rho))`` with the tail at its upper confidence value.

    This evaluates the product-output-law converse for the simulated
    controller only; it is not a supremum over controllers.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps={eps!r} must lie in (0, 1)")
    slack = 1.0 - eps - (tail_hat.estimate + tail_hat.ci_radius)
    if slack <= 0:
        raise VacuousBound(f"1 - eps - tail = {slack:.3g} <= 0")
    return log_rho - math.log(slack)
