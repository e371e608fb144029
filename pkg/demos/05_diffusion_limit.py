"""The diffusion behind the refined controller.

Rescaled, the controlled walk becomes dX = sigma(X) dB with sigma = 1 below 0
and beta above. Started at s(eps) it ends below 0 with probability exactly
eps. We check that against quadrature, Euler-Maruyama with a smoothed
coefficient, and the discrete chain for shrinking band widths.
"""
import numpy as np

from dispersion_lab import diffusion, walk
from dispersion_lab.controllers import s_of_eps

beta, eps = 0.5, 0.2
x0 = s_of_eps(eps, beta)
d = diffusion.BangBangDiffusion(beta, x0)
print(f"s(eps) = {x0:.6f}")
print("closed form  :", diffusion.prob_nonpositive_at_1(d))
print("quadrature   :", diffusion.prob_nonpositive_quadrature(d))
print("density mass :", diffusion.density_mass(d, 1.0, x0))

for delta in (0.2, 0.05, 0.01):
    cfg = diffusion.SdeConfig(diffusion.SigmaField.ramp(beta, delta), x0, 2048, 40_000, 1)
    p, ci = diffusion.empirical_prob(diffusion.euler_maruyama(cfg))
    chain = walk.simulate_abstract_chain(walk.two_point_spec(beta, delta, eps, 2500), 40_000, 1)
    print(f"delta={delta:<5} SDE {p:.4f} +- {ci:.4f}   chain {chain.estimate:.4f} +- {chain.ci_radius:.4f}")

# the optimal control of the converse: bang-bang between sqrt(nu_min) and sqrt(nu_max)
for off in (-0.3, 0.0, 0.3):
    print(f"offset {off:+.1f}: P(xi >= 0) = {diffusion.mcnamara_opt_prob(0.102, 0.692, off):.5f}")

xs = np.linspace(-2, 2, 5)
print(diffusion.density_grid_csv(diffusion.BangBangDiffusion(beta), 1.0, xs, [0.0, 1.0]))
