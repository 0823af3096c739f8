"""
Plasticity rules and their acetylcholine gates
===============================================

Each rule is a pure function of weights, rates and traces.
"""

import numpy as np

from ca3sim import plasticity as pl

p = pl.RuleParams()

# The bipolar gate flips Hebbian learning into anti-Hebbian learning
for ach in (1.0, 0.5, 0.0):
    w = pl.hebb_update(np.ones((1, 1)), [1.0], [1.0], ach, p)
    print(f"ACh={ach:.1f}  gate={pl.ach_gate_bipolar(ach):+.4f}  Hebb dw={w[0, 0] - 1:+.2e}")

# BCM: the threshold slides toward r^2
theta = np.array([0.01])
for step in range(40):
    w, theta = pl.bcm_update(np.ones((1, 1)), theta, [1.0], [0.5], 1.0, p)
print(f"\nBCM threshold after 40 windows at r=0.5: {theta[0]:.4f} (r^2 = 0.25)")

# STP: a spike train depletes resources, quiet ticks restore them
u, x = p.U, 1.0
print("\nSTP effective weight along a 6-spike train:")
for _ in range(6):
    u, x = pl.stp_advance(u, x, True, p)
    print(f"  u={u:.3f} x={x:.3f} w_eff={pl.stp_effective_weight(u, x, p, 1.0):.4f}")
for _ in range(200):
    u, x = pl.stp_advance(u, x, False, p)
print(f"after 200 quiet ticks: u={u:.6f} x={x:.6f}")

# iLTD: steady eCB pulls inhibition down to a fixed point below baseline
w_base = np.full((1, 1), 0.8)
ecb = np.array([1.0])
w = w_base.copy()
for _ in range(300):
    w = pl.iltd_update(w, ecb, w_base, 1.0, p)
print(f"\niLTD steady state {w[0, 0]:.4f}; closed form {0.8 - p.eta_iltd / p.eta_rec * 1.0:.4f}")
