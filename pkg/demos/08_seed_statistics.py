"""
Seed-level statistics on five margins
=====================================

Five per-seed margins, two of them well above zero: summary, Welch test
against a control arm, effect sizes and the bimodality split.
"""

import numpy as np

from ca3sim.metrics import bimodality_report, cohens_d, seed_stats, theoretical_capacity, welch_t

treatment = [0.216, 0.101, 0.013, -0.008, 0.014]
s = seed_stats(treatment)
print(f"treatment: {s.mean:+.4f} +/- {s.std:.4f} (n={s.n})")

# a control arm with mean -0.003 and sd 0.035
z = np.linspace(-1, 1, 5)
control = list(-0.003 + 0.035 * (z - z.mean()) / z.std(ddof=1))
c = seed_stats(control)
print(f"control:   {c.mean:+.4f} +/- {c.std:.4f}")

w = welch_t(treatment, control)
print(f"Welch t={w.t:.3f}, df={w.df:.2f}, one-sided p={w.p_one_sided:.3f}")
d = cohens_d(treatment, control)
print(f"Cohen's d: pooled {d.pooled:.3f}, control sd {d.control_sd:.3f}, treatment sd {d.treatment_sd:.3f}")
above, below, _ = bimodality_report(treatment, 0.10)
print(f"seeds above +0.10: {above}, below: {below}")

for N, a in ((16, 0.25), (64, 0.25), (256, 0.15)):
    print(f"capacity N={N:3d}, a={a}: {theoretical_capacity(N, a):7.1f}")
