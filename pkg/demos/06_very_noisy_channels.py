"""Very noisy channels W(y|x) = Gamma(y)(1 + zeta lam(x, y)).

Capacity and dispersion both shrink like zeta^2, and V_min and V_max merge,
so feedback stops helping in the second-order sense.
"""
import numpy as np

from dispersion_lab.vnc import bold_c, random_centered_lambda, report_csv, scaling_report

gamma = np.array([0.2, 0.3, 0.1, 0.4])
lam = random_centered_lambda(gamma, inputs=3, seed=0)
val, p = bold_c(gamma, lam)
print("bold C =", val, "attained at", np.round(p, 6))

rows = scaling_report(gamma, lam, [0.2, 0.1, 0.05, 0.025, 0.0125])
print(report_csv(rows))
print("C / (zeta^2 bold C):", [round(r.capacity / r.bold_c_zeta2, 5) for r in rows])
