"""Multi-population CA3 spiking network: LIF units, local plasticity, recall harness."""

from .circuit import CircuitConfig, build_circuit, default_projections, tick
from .config import ExperimentConfig, load_config
from .errors import ConfigError, UndefinedRateError, UndefinedStatisticError
from .harness import run_experiment, run_recall_trial, run_store_phase
from .lif import LIFParams, step_compartment
from .metrics import cosine, jaccard, pearson, theoretical_capacity
from .patterns import gen_orthogonal_sparse, gen_paired, gen_sequence, mask_cue
from .plasticity import RuleParams, apply_all
from .scheduler import AChSchedule

__version__ = "0.1.0"
