"""
Full versus minimal architecture
================================

Run the auto-associative benchmark on both variants with shared seeds and
classify the outcome into the pre-declared scenarios.
"""

from ca3sim.config import ExperimentConfig
from ca3sim.harness import run_experiment

cfg = ExperimentConfig(regime="auto", variant="both", n_pyrs=16, K_list=[3], seeds=[42, 43, 44])
report, _ = run_experiment(cfg)

for cell in report["cells"]:
    agg = cell["aggregates"]
    print(f"{cell['variant']:8s} Jaccard margin {agg['jaccard']['mean']:+.3f} +/- {agg['jaccard']['std']:.3f}"
          f"   Pearson margin {agg['pearson']['mean']:+.3f}   PyrS rate {agg['pyrs_rate_recall']['mean']:.3f}")

row = report["comparisons"][0]
print(f"\nJaccard diff (full - minimal) {row['diff']['jaccard']:+.3f}, sigma {row['sigma']:.3f}"
      f" -> scenario {row['scenario']}")
print(f"Welch t={row['t']:.2f}, one-sided p={row['p_one_sided']:.3f}, Cohen's d={row['cohens_d_pooled']:.2f}")
