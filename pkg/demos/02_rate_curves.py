"""Second-order rates with and without feedback on the compound example.

Without feedback the best rate is sqrt(V_eps) Phi^-1(eps). With feedback the
encoder can switch between the low- and high-variance input laws depending
on how the transmission is going, and the rate becomes a two-branch curve
that is strictly larger at every eps.
"""
import numpy as np

from dispersion_lab.bounds import build_rate_curve, find_alpha
from dispersion_lab.channel import analyze, compound_example

an = analyze(compound_example())
grid = np.array([0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.7, 0.9, 0.99])
curve = build_rate_curve(an, grid)

print(f"{'eps':>6} {'no fb':>10} {'half-block':>11} {'feedback':>10} {'converse':>10}")
for row in zip(grid, curve.no_feedback, curve.thm1_lower, curve.fb_lower, curve.fb_upper):
    print("{:6.2f} {:10.5f} {:11.5f} {:10.5f} {:10.5f}".format(*row))

# the achievability and converse columns coincide for this channel
print("max |lower - upper| =", np.abs(curve.fb_lower - curve.fb_upper).max())

# eps at which each rate crosses zero
b = an.beta
print(f"no feedback crosses 0 at eps = 0.5, feedback at beta/(1+beta) = {b / (1 + b):.4f}")
print("alpha for the half-block scheme at eps = 0.1:", find_alpha(0.1, an.beta))
