"""Experiment configuration: YAML file <-> :class:`ExperimentConfig`.

Every key is named after the quantity it sets. A minimal file::

    regime: auto            # auto | paired | temporal | inhib_sweep
    variant: both           # full | minimal | both
    n_pyrs: 16
    K_list: [3]
    a: 0.25
    seeds: [42, 43, 44]

Everything else falls back to the defaults below; see ``docs/config.md`` for
the full schema.
"""

from dataclasses import asdict, dataclass, field, fields

import yaml

from . import plasticity as pl
from .circuit import FULL, MINIMAL, CircuitConfig, scale_inhibition
from .errors import ConfigError
from .scheduler import AChSchedule

REGIMES = ("auto", "paired", "temporal", "inhib_sweep")
VARIANTS = (FULL, MINIMAL, "both")


@dataclass(frozen=True)
class Injection:
    mode: str = "dc"
    amplitude: float = 1.5
    p_high: float = 1.0
    p_low: float = 0.0

    def __post_init__(self):
        if self.mode not in ("dc", "bernoulli"):
            raise ConfigError(f"unknown mode {self.mode!r}", "injection.mode")
        for name in ("p_high", "p_low"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError("probability must lie in [0, 1]", f"injection.{name}")


@dataclass(frozen=True)
class TemporalSpec:
    frames: int = 4
    shift: int = 2

    def __post_init__(self):
        if self.frames < 2:
            raise ConfigError("a sequence needs at least two frames", "temporal.frames")


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    report: str = "report.json"
    table: str = "trials.csv"


@dataclass
class ExperimentConfig:
    regime: str = "auto"
    variant: str = "both"
    n_pyrs: int = 16
    K_list: list = field(default_factory=lambda: [5])
    a: float = 0.25
    mask_frac: float = 0.5
    exposures: int = 60
    t_present: int = 10
    t_recall: int = 20
    seeds: list = field(default_factory=lambda: [42, 43, 44])
    ach: AChSchedule = field(default_factory=AChSchedule)
    rules: pl.RuleParams = field(default_factory=pl.RuleParams)
    circuit: dict = field(default_factory=dict)
    inhib_proportions: list = field(default_factory=lambda: [0.57, 0.25])
    injection: Injection = field(default_factory=Injection)
    temporal: TemporalSpec = field(default_factory=TemporalSpec)
    shuffle: bool = False
    reset_between_presentations: bool = True
    plastic_recall: bool = False
    untrained_control: bool = False
    bimodality_threshold: float = 0.10
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        # nested blocks may be given as plain mappings
        if isinstance(self.ach, dict):
            self.ach = AChSchedule.from_dict(self.ach)
        if isinstance(self.rules, dict):
            self.rules = _nested("rules", pl.RuleParams.from_dict, self.rules)
        for name, typ in (("injection", Injection), ("temporal", TemporalSpec), ("output", OutputSpec)):
            if isinstance(getattr(self, name), dict):
                setattr(self, name, _nested(name, lambda d, typ=typ: typ(**d), getattr(self, name)))
        if self.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.regime!r}", "regime")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}", "variant")
        for name in ("n_pyrs", "t_present", "t_recall"):
            if getattr(self, name) < 1:
                raise ConfigError("must be at least 1", name)
        if self.exposures < 0:
            raise ConfigError("must be non-negative", "exposures")
        if not self.K_list or any(k < 1 for k in self.K_list):
            raise ConfigError("every K must be at least 1", "K_list")
        if not 0.0 < self.a <= 1.0:
            raise ConfigError("sparsity must lie in (0, 1]", "a")
        if not 0.0 <= self.mask_frac <= 1.0:
            raise ConfigError("must lie in [0, 1]", "mask_frac")
        if not self.seeds:
            raise ConfigError("at least one seed is required", "seeds")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct", "seeds")
        for i, prop in enumerate(self.inhib_proportions):
            if not 0.0 < prop < 1.0:
                raise ConfigError("proportion must lie in (0, 1)", f"inhib_proportions[{i}]")
        if self.regime == "inhib_sweep" and self.variant == MINIMAL:
            raise ConfigError("the inhibitory sweep needs the full variant", "variant")
        # surface circuit errors, unreachable proportions included, at load time
        for variant in self.variants():
            ccfg = self.circuit_config(variant)
            if ccfg.inhib_proportion is not None:
                try:
                    scale_inhibition(ccfg, ccfg.inhib_proportion)
                except ConfigError as exc:
                    raise ConfigError(exc.message, "circuit.inhib_proportion") from None
        if self.regime == "inhib_sweep":
            for i, prop in enumerate(self.inhib_proportions):
                try:
                    scale_inhibition(self.circuit_config(FULL), prop)
                except ConfigError as exc:
                    raise ConfigError(exc.message, f"inhib_proportions[{i}]") from None

    def variants(self):
        if self.regime == "inhib_sweep":
            return [FULL]
        return [FULL, MINIMAL] if self.variant == "both" else [self.variant]

    def circuit_config(self, variant, inhib_proportion=None):
        data = dict(self.circuit)
        data.setdefault("n_pyrs", self.n_pyrs)
        data["variant"] = variant
        if data["n_pyrs"] != self.n_pyrs:
            raise ConfigError("circuit.n_pyrs disagrees with n_pyrs", "circuit.n_pyrs")
        if variant == MINIMAL:
            # population overrides describe the full circuit
            data.pop("counts", None)
            data.pop("projections", None)
            data.pop("inhib_proportion", None)
        if inhib_proportion is not None:
            data["inhib_proportion"] = inhib_proportion
        return CircuitConfig.from_dict(data, rules=self.rules)

    def with_seed_offset(self, offset):
        if not offset:
            return self
        data = self.to_dict()
        data["seeds"] = [s + offset for s in self.seeds]
        return ExperimentConfig.from_dict(data)

    def to_dict(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "ach":
                value = value.to_dict()
            elif f.name in ("rules", "injection", "temporal", "output"):
                value = asdict(value)
            elif isinstance(value, list):
                value = list(value)
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("top level must be a mapping")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", key)
        kwargs = dict(data)
        for name in ("ach", "rules", "injection", "temporal", "output"):
            if name in kwargs and kwargs[name] is None:
                kwargs[name] = {}
        if "circuit" in kwargs:
            kwargs["circuit"] = dict(kwargs["circuit"] or {})
        try:
            for name in ("K_list", "seeds"):
                if name in kwargs:
                    kwargs[name] = [int(v) for v in kwargs[name]]
            if "inhib_proportions" in kwargs:
                kwargs["inhib_proportions"] = [float(v) for v in kwargs["inhib_proportions"]]
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return cls(**kwargs)


def _nested(prefix, build, data):
    try:
        return build(data)
    except TypeError as exc:
        raise ConfigError(str(exc), prefix) from None
    except ConfigError as exc:
        if exc.field and exc.field.startswith(prefix + "."):
            raise
        raise ConfigError(exc.message, f"{prefix}.{exc.field}" if exc.field else prefix) from None


def load_config(path):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}", str(path)) from None
    return ExperimentConfig.from_dict(data or {})


def dump_config(cfg):
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
