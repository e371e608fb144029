"""A channel whose capacity-achieving inputs disagree about dispersion.

Six inputs, three outputs. Inputs 0-2 are nearly noiseless ternary symbols,
inputs 3-5 are noisier ones chosen so that every input sits exactly at
capacity. Any mixture over the six is capacity achieving, but the variance
of the information density depends on which mixture is used.
"""
import numpy as np

from dispersion_lab.channel import analyze, compound_example, compound_example_q

q = compound_example_q(0.8)
print(f"crossover of the noisy inputs: q = {q:.6f}")

ch = compound_example(0.8, q)
print(np.round(ch.w, 4))

an = analyze(ch)
print(an.summary())
print("per-input conditional variances nu_x:", np.round(an.nu, 5))
print("support of the capacity polytope:", an.x_star)

# the extremes over the polytope are attained at the two uniform laws
print("argmin:", np.round(an.q_min, 6), " V_min =", round(an.v_min, 6))
print("argmax:", np.round(an.q_max, 6), " V_max =", round(an.v_max, 6))
print(f"beta = sqrt(V_min / V_max) = {an.beta:.6f}")
