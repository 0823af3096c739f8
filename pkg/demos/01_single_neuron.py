"""
A single leaky integrate-and-fire compartment
=============================================

Drive one compartment with constant current and watch the soft reset.
"""

import numpy as np

from ca3sim.lif import CompartmentState, LIFParams, detect_bursts, step_compartment

params = LIFParams(beta=0.9, v_thr=1.0)
state = CompartmentState.initial(1, params)

# constant drive of 0.4 per tick: the potential climbs to threshold,
# spikes, drops by exactly v_thr and climbs again
print("tick   V       spike")
for t in range(15):
    state, spikes = step_compartment(state, np.array([0.4]), params)
    print(f"{t:4d}  {state.v[0]:6.3f}  {spikes[0]}")

# the spike is read from the potential before the update, so a unit
# pushed past threshold this tick fires on the next one
state = CompartmentState.initial(1, params)
state, s0 = step_compartment(state, np.array([3.0]), params)
state, s1 = step_compartment(state, np.zeros(1), params)
print("\nkick of 3.0: spike on kick tick", s0[0], "| spike one tick later", s1[0])

# burst flags: two or more spikes in the last three ticks
history = np.array([[0, 1], [1, 0], [1, 0], [0, 1]])
print("burst flags for units (0, 1):", detect_bursts(history, window=3, min_spikes=2))
