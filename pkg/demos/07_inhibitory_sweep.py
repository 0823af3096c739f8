"""
Total inhibitory proportion: 57% versus 25%
===========================================

Same seeds, same patterns; only the interneuron counts differ. N=32 has no exact
25% configuration (one unit minimum per class); N=64 does.
"""

from ca3sim.config import ExperimentConfig
from ca3sim.harness import run_experiment

cfg = ExperimentConfig(regime="inhib_sweep", variant="full", n_pyrs=64, K_list=[5],
                       inhib_proportions=[0.57, 0.25], seeds=[42, 43, 44, 45, 46])
report, _ = run_experiment(cfg)

for cell in report["cells"]:
    agg = cell["aggregates"]
    margins = ", ".join(f"{v:+.3f}" for v in agg["jaccard"]["values"])
    print(f"proportion {cell['proportion']:.2f}: Jaccard margins [{margins}]"
          f"  PyrS rate {agg['pyrs_rate_recall']['mean']:.3f}"
          f"  above 0.10: {cell['bimodality']['n_above']}/{len(agg['jaccard']['values'])}")

row = report["comparisons"][0]
print(f"\n0.25 vs 0.57: mean diff {row['mean_diff']:+.3f}, Welch t={row['t']:.2f}, p={row['p_one_sided']:.3f}")
print(f"Cohen's d: pooled {row['cohens_d_pooled']:.2f}, control sd {row['cohens_d_control_sd']:.2f},"
      f" treatment sd {row['cohens_d_treatment_sd']:.2f}")
