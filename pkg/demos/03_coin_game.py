"""Two fair coins: one pays +-1, the other +-2.

Starting with wealth sqrt(n), always using the timid coin leaves you broke
after n rounds with probability about Phi(-1), always bold about Phi(-0.5).
Looking at your wealth halfway through and switching to bold only when
behind does better than either.
"""
from scipy.stats import norm

from dispersion_lab.walk import coin_game, paired_difference

n, trials, seed = 4000, 100_000, 3
runs = {s: coin_game(1.0, n, s, trials, seed) for s in ("timid", "bold", "half-switch")}
for name, r in runs.items():
    print(f"{name:12s} P(broke) = {r.estimate:.5f} +- {r.ci_radius:.5f}")
print(f"Phi(-1) = {norm.cdf(-1):.5f}, Phi(-0.5) = {norm.cdf(-0.5):.5f}")

# all three runs used the same random numbers, so the difference is sharp
gap, ci = paired_difference(runs["timid"], runs["half-switch"])
print(f"half-switch gain over timid: {gap:.5f} +- {ci:.5f}")
