"""
Pattern completion in the minimal circuit
=========================================

Store three sparse patterns in the PyrS-only circuit, then recall each from
a half-masked cue and compare against an untrained copy.
"""

from ca3sim.circuit import build_circuit
from ca3sim.config import ExperimentConfig
from ca3sim.harness import run_recall_trial, run_store_phase
from ca3sim.metrics import chance_prototype
from ca3sim.patterns import gen_orthogonal_sparse, mask_cue

cfg = ExperimentConfig(variant="minimal", n_pyrs=16, K_list=[3], a=0.25, exposures=60)
pset = gen_orthogonal_sparse(16, 3, 0.25, seed=42)
for k, p in enumerate(pset.patterns):
    print(f"pattern {k}: {''.join(map(str, p.bits))}")

trained = build_circuit(cfg.circuit_config("minimal"), seed=42)
untrained = trained.copy()
run_store_phase(trained, pset, cfg, seed=42)

print("\nitem  cue               recalled          Jaccard  (untrained)  Pearson margin")
for k, target in enumerate(pset.patterns):
    cue = mask_cue(target, 0.5, seed=k)
    chance = chance_prototype(pset, k)
    a = run_recall_trial(trained, cue, target, chance, pset.budget, cfg)
    b = run_recall_trial(untrained, cue, target, chance, pset.budget, cfg)
    print(f"{k:4d}  {''.join(map(str, cue.bits))}  {''.join(map(str, a.recalled))}  "
          f"{a.margins['jaccard']['target']:.3f}    ({b.margins['jaccard']['target']:.3f})"
          f"      {a.margin('pearson'):+.3f}")
