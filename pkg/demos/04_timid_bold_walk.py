"""Feedback controllers driving the information-density random walk.

We estimate Gamma_n = P(sum of information densities <= nC + sqrt(n V_min)
Phi^-1(alpha eps)) under three encoders: constant timid input law, the
half-block timid/bold switch, and the refined per-step controller.
"""
import math

from dispersion_lab import normal
from dispersion_lab.bounds import find_alpha
from dispersion_lab.channel import analyze, compound_example
from dispersion_lab.controllers import (
    ConstantController,
    coarse_controller,
    r_of_eps,
    refined_controller,
)
from dispersion_lab.walk import SimConfig, paired_difference, simulate_gamma_n

an = analyze(compound_example())
eps, n, trials, seed = 0.1, 4000, 40_000, 7
alpha = find_alpha(eps, an.beta)
thr = n * an.capacity_nats + math.sqrt(n * an.v_min) * normal.ppf(alpha * eps)
print(f"alpha = {alpha:.7f}, threshold = {thr:.3f} nats")

const = simulate_gamma_n(an, SimConfig(n, trials, seed, ConstantController(an.q_min), thr))
coarse = simulate_gamma_n(an, SimConfig(n, trials, seed, coarse_controller(an, n, eps, alpha), thr))
print(f"constant timid : {const.estimate:.5f}  (tends to alpha*eps = {alpha * eps:.5f})")
print(f"half-block     : {coarse.estimate:.5f}")
d, ci = paired_difference(const, coarse)
print(f"paired gain    : {d:.5f} +- {ci:.5f}")

# the refined controller aims straight at eps from a higher rate
ctrl = refined_controller(an, eps)
r = r_of_eps(eps - ctrl.kappa, an.v_min, an.v_max)
thr2 = n * an.capacity_nats + math.sqrt(n) * r
ref = simulate_gamma_n(an, SimConfig(n, trials, seed, ctrl, thr2))
print(f"refined at rate r(eps - kappa) = {r:.4f}: P = {ref.estimate:.5f} (target < {eps})")
