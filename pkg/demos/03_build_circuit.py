"""
The ten-population circuit
==========================

Build the full circuit, list its populations and wiring, then rescale
inhibition from the canonical 57% to 25%.
"""

from ca3sim.circuit import CircuitConfig, build_circuit, inhibitory_proportion, scale_inhibition

cfg = CircuitConfig(variant="full", n_pyrs=16)
circuit = build_circuit(cfg, seed=42)

print(f"{'population':10s} {'units':>5s} {'comp':>5s}  polarity     firing")
for name, pop in circuit.populations.items():
    s = pop.spec
    print(f"{name:10s} {s.n_units:5d} {s.n_compartments:5d}  {s.polarity:12s} {s.firing_type}")
print(f"\ninhibitory proportion: {inhibitory_proportion(cfg.counts):.3f}")

print("\nprojections (source -> target @ compartment, rules):")
for proj in circuit.projections:
    sign = "+" if proj.sign > 0 else "-"
    rules = ",".join(proj.spec.rules) or "static"
    print(f"  {sign} {proj.key:18s} @ {proj.spec.target_role:9s} {rules}")

low = scale_inhibition(cfg, 0.25)
print(f"\nscaled counts: { {k: v for k, v in low.counts.items()} }")
print(f"scaled inhibitory proportion: {inhibitory_proportion(low.counts):.3f}")
