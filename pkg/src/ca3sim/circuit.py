"""Ten-population CA3 circuit and the PyrS-only minimal variant.

Populations are banks of multi-compartment LIF units. Synapses land on a named
compartment role; every non-soma compartment passes its synaptic current on to
the soma through a passive coupling coefficient, so dendrites and the AIS are
integrators with their own potential but no active propagation.

The external pattern drive is modelled as a pseudo-population ``"MF"`` (mossy
fibres) with one line per PyrS unit. Its current is injected directly into the
PyrS proximal dendrites and its spikes (``current > 0``) reach PyrD and the
feedforward interneurons through short-term-plastic projections.
"""

import copy
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import plasticity as pl
from .errors import ConfigError
from .lif import (
    DEFAULT_HISTORY,
    EXCITATORY,
    INHIBITORY,
    INTERNEURON_NAMES,
    INTRINSIC_BURSTING,
    POPULATION_NAMES,
    BURST_MIN_SPIKES,
    BURST_WINDOW,
    CompartmentState,
    LIFParams,
    PopulationSpec,
    detect_bursts,
    step_compartment,
)

MF = "MF"
FULL = "full"
MINIMAL = "minimal"

# Interneuron units per 16 PyrS in the canonical high-inhibition variant. With
# PyrD = PyrS / 2 this gives 32 / 56 = 0.571 inhibitory.
CANONICAL_INTERNEURONS_PER_16 = {
    "BC-PV+": 6,
    "CC": 3,
    "O-LM": 4,
    "BSC": 4,
    "SL-INT": 3,
    "R/L-M": 3,
    "CCK+": 5,
    "VIP+": 4,
}


@dataclass(frozen=True)
class ProjectionSpec:
    source: str
    target: str
    target_role: str
    connectivity: float = 1.0
    init_mean: float = 0.0
    init_std: float = 0.05
    rules: tuple = ()
    allow_self: bool = False

    @property
    def key(self):
        return f"{self.source}->{self.target}"

    @property
    def mossy(self):
        return pl.STP in self.rules

    def validate(self):
        if not 0.0 < self.connectivity <= 1.0:
            raise ConfigError(f"connectivity must lie in (0, 1], got {self.connectivity}",
                              f"projections.{self.key}.connectivity")
        if self.init_std < 0:
            raise ConfigError("init_std must be non-negative", f"projections.{self.key}.init_std")
        for rule in self.rules:
            if rule not in pl.RULE_NAMES:
                raise ConfigError(f"unknown rule {rule!r}", f"projections.{self.key}.rules")
        if pl.STP in self.rules and self.source != MF:
            raise ConfigError("short-term plasticity is only bound to mossy-fibre projections",
                              f"projections.{self.key}.rules")


@dataclass(frozen=True)
class SynapseMatrix:
    weights: np.ndarray
    mask: np.ndarray
    target_role: str

    def with_weights(self, w):
        return SynapseMatrix(w, self.mask, self.target_role)


def _w(source, target, role, std=0.05, rules=(), **kw):
    return ProjectionSpec(source, target, role, init_std=std, rules=tuple(rules), **kw)


INHIB_STD = 0.05
# Pyramidal drive onto interneurons; at 0.05 the interneurons stay silent once
# currents are size-normalized.
FEEDBACK_STD = 0.1


def default_projections(variant):
    if variant == MINIMAL:
        return [_w("PyrS", "PyrS", "basal", rules=(pl.HEBB,))]
    projs = [
        _w("PyrS", "PyrS", "basal", rules=(pl.HEBB, pl.BCM)),
        _w("PyrS", "PyrD", "basal", rules=(pl.BURST_HEBB,)),
        _w(MF, "PyrD", "proximal", rules=(pl.STP,)),
        _w(MF, "SL-INT", "dendrite", rules=(pl.STP,)),
        _w(MF, "R/L-M", "dendrite", rules=(pl.STP,)),
    ]
    for inter in ("BC-PV+", "CC", "O-LM", "BSC", "CCK+", "VIP+"):
        projs.append(_w("PyrS", inter, "dendrite", FEEDBACK_STD))
    for pyr in ("PyrS", "PyrD"):
        projs += [
            _w("BC-PV+", pyr, "soma", INHIB_STD),
            _w("CCK+", pyr, "soma", INHIB_STD, rules=(pl.ILTD,)),
            _w("CC", pyr, "ais", INHIB_STD),
            _w("O-LM", pyr, "distal", INHIB_STD),
            _w("BSC", pyr, "proximal", INHIB_STD),
        ]
    projs += [
        _w("SL-INT", "PyrS", "proximal", INHIB_STD),
        _w("R/L-M", "PyrS", "distal", INHIB_STD),
        _w("VIP+", "O-LM", "soma", INHIB_STD),
        _w("VIP+", "CCK+", "soma", INHIB_STD),
    ]
    return projs


def canonical_counts(n_pyrs):
    counts = {"PyrS": n_pyrs, "PyrD": max(1, n_pyrs // 2)}
    for name, per16 in CANONICAL_INTERNEURONS_PER_16.items():
        counts[name] = max(1, int(np.floor(per16 * n_pyrs / 16 + 0.5)))
    return counts


@dataclass
class CircuitConfig:
    variant: str = FULL
    n_pyrs: int = 16
    counts: dict = None
    projections: list = None
    lif: dict = field(default_factory=dict)
    delay: int = 1
    coupling: dict = field(default_factory=dict)
    rules: pl.RuleParams = field(default_factory=pl.RuleParams)
    inhib_proportion: float = None
    history_len: int = DEFAULT_HISTORY
    reference_pyrs: int = 16

    def __post_init__(self):
        if self.variant not in (FULL, MINIMAL):
            raise ConfigError(f"unknown variant {self.variant!r}", "circuit.variant")
        if self.n_pyrs < 1:
            raise ConfigError("n_pyrs must be positive", "circuit.n_pyrs")
        if self.counts is None:
            counts = canonical_counts(self.n_pyrs)
            self.counts = {"PyrS": self.n_pyrs} if self.variant == MINIMAL else counts
        if self.projections is None:
            self.projections = default_projections(self.variant)
        if self.counts.get("PyrS") != self.n_pyrs:
            raise ConfigError("counts['PyrS'] must equal n_pyrs", "circuit.counts.PyrS")
        if self.delay < 1:
            raise ConfigError("synaptic delay must be at least one tick", "circuit.delay")
        if self.reference_pyrs < 1:
            raise ConfigError("reference_pyrs must be positive", "circuit.reference_pyrs")

    @property
    def current_scale(self):
        """Global synaptic gain; keeps per-unit drive comparable as n_pyrs grows."""
        return self.reference_pyrs / self.n_pyrs

    def lif_for(self, name):
        return self.lif.get(name, LIFParams())

    def to_dict(self):
        return {
            "variant": self.variant,
            "n_pyrs": self.n_pyrs,
            "counts": dict(self.counts),
            "projections": [
                {
                    "source": p.source,
                    "target": p.target,
                    "target_role": p.target_role,
                    "connectivity": p.connectivity,
                    "init_mean": p.init_mean,
                    "init_std": p.init_std,
                    "rules": list(p.rules),
                    "allow_self": p.allow_self,
                }
                for p in self.projections
            ],
            "lif": {k: {"beta": v.beta, "v_thr": v.v_thr, "v_init": v.v_init} for k, v in self.lif.items()},
            "delay": self.delay,
            "coupling": {k: dict(v) for k, v in self.coupling.items()},
            "inhib_proportion": self.inhib_proportion,
            "history_len": self.history_len,
            "reference_pyrs": self.reference_pyrs,
        }

    @classmethod
    def from_dict(cls, data, rules=None):
        data = dict(data)
        known = {"variant", "n_pyrs", "counts", "projections", "lif", "delay", "coupling",
                 "inhib_proportion", "history_len", "reference_pyrs"}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown key {key!r}", f"circuit.{key}")
        projections = data.get("projections")
        if projections is not None:
            parsed = []
            for i, p in enumerate(projections):
                try:
                    p = dict(p)
                    p["rules"] = tuple(p.get("rules", ()))
                    parsed.append(ProjectionSpec(**p))
                except TypeError as exc:
                    raise ConfigError(str(exc), f"circuit.projections[{i}]") from None
            projections = parsed
        lif = {}
        for name, params in (data.get("lif") or {}).items():
            try:
                lif[name] = LIFParams(**params)
            except (TypeError, ConfigError) as exc:
                raise ConfigError(str(exc), f"circuit.lif.{name}") from None
        return cls(
            variant=data.get("variant", FULL),
            n_pyrs=int(data.get("n_pyrs", 16)),
            counts={k: int(v) for k, v in data["counts"].items()} if data.get("counts") else None,
            projections=projections,
            lif=lif,
            delay=int(data.get("delay", 1)),
            coupling=data.get("coupling") or {},
            rules=rules or pl.RuleParams(),
            inhib_proportion=data.get("inhib_proportion"),
            history_len=int(data.get("history_len", DEFAULT_HISTORY)),
            reference_pyrs=int(data.get("reference_pyrs", 16)),
        )


def inhibitory_proportion(counts):
    total = sum(counts.values())
    inhib = sum(n for name, n in counts.items() if name in INTERNEURON_NAMES)
    return inhib / total


def _round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(int)


def scale_inhibition(config, target_proportion, tol=0.02):
    """Rescale interneuron counts by a common factor to hit ``target_proportion``.

    Pyramidal counts are left alone; each interneuron class is rounded and
    floored at one unit, so the reachable proportions form a discrete set.
    Among candidate factors the closest proportion wins, ties going to the
    factor nearest one.
    """
    if not 0.0 < target_proportion < 1.0:
        raise ConfigError(f"target proportion must lie in (0, 1), got {target_proportion}",
                          "inhib_proportion")
    inter = [n for n in INTERNEURON_NAMES if n in config.counts]
    if not inter:
        raise ConfigError("no interneuron populations to scale", "inhib_proportion")
    base = np.array([config.counts[n] for n in inter], dtype=float)
    n_exc = sum(v for k, v in config.counts.items() if k not in INTERNEURON_NAMES)
    needed = target_proportion * n_exc / (1.0 - target_proportion)
    top = int(np.ceil(max(needed, base.sum()) * 2)) + len(inter)
    best = None
    reachable = set()
    for total in range(1, top + 1):
        factor = total / base.sum()
        scaled = np.maximum(_round_half_up(base * factor), 1)
        prop = scaled.sum() / (scaled.sum() + n_exc)
        reachable.add(round(float(prop), 3))
        score = (abs(prop - target_proportion), abs(factor - 1.0))
        if best is None or score < best[0]:
            best = (score, scaled, prop)
    (err, _), scaled, prop = best
    if err > tol:
        below = max((r for r in reachable if r <= target_proportion), default=None)
        above = min((r for r in reachable if r >= target_proportion), default=None)
        raise ConfigError(
            f"target {target_proportion:.3f} unreachable; nearest achievable proportions "
            f"{below} and {above} (achievable range {min(reachable):.3f} to {max(reachable):.3f}, "
            f"one unit minimum per interneuron class)",
            "inhib_proportion",
        )
    counts = dict(config.counts)
    counts.update({n: int(c) for n, c in zip(inter, scaled)})
    return replace(config, counts=counts, inhib_proportion=None)


def restrict(config, keep):
    """Drop every population not in ``keep`` and every projection touching one."""
    keep = set(keep)
    counts = {k: v for k, v in config.counts.items() if k in keep}
    projections = [p for p in config.projections
                   if p.target in keep and (p.source in keep or p.source == MF)]
    return replace(config, counts=counts, projections=projections,
                   variant=MINIMAL if keep == {"PyrS"} else config.variant)


def _stable_seed(*parts):
    return zlib.crc32("|".join(str(p) for p in parts).encode())


@dataclass
class Population:
    spec: PopulationSpec
    lif: LIFParams
    state: CompartmentState
    role_columns: dict

    @property
    def n(self):
        return self.spec.n_units

    def soma_history(self):
        hist = self.state.spike_history
        if hist.shape[0] == 0:
            return np.zeros((0, self.n), dtype=np.int8)
        return hist.reshape(hist.shape[0], self.n, self.spec.n_compartments)[:, :, self.spec.soma_index]


@dataclass
class Projection:
    spec: ProjectionSpec
    synapses: SynapseMatrix
    sign: int

    @property
    def key(self):
        return self.spec.key


@dataclass
class SpikeRecord:
    tick: int
    spikes: dict
    bursts: dict


class Circuit:
    """A built circuit: populations, projections, plasticity traces and clock."""

    def __init__(self, config, populations, projections, plasticity_state):
        self.config = config
        self.rules = config.rules
        self.populations = populations
        self.projections = projections
        self.plasticity = plasticity_state
        self.tick_counter = 0
        self._pending = []
        self.reset_dynamics()

    @property
    def n_pyrs(self):
        return self.populations["PyrS"].n

    def projection(self, source, target):
        for proj in self.projections:
            if proj.spec.source == source and proj.spec.target == target:
                return proj
        raise KeyError(f"{source}->{target}")

    def reset_dynamics(self):
        """Zero potentials, spike buffers and STP state; weights are untouched."""
        for pop in self.populations.values():
            n = pop.spec.n_units * pop.spec.n_compartments
            pop.state = CompartmentState.initial(n, pop.lif, self.config.history_len)
        sizes = {name: pop.n for name, pop in self.populations.items()}
        sizes[MF] = self.config.n_pyrs
        zero = {name: np.zeros(n, dtype=np.int8) for name, n in sizes.items()}
        self._pending = [dict(zero) for _ in range(self.config.delay)]
        self.plasticity.reset_stp(self.rules)

    def weights_checksum(self):
        total = 0.0
        for i, proj in enumerate(self.projections):
            w = proj.synapses.weights
            total += (i + 1) * float(np.sum(w * np.arange(1, w.size + 1).reshape(w.shape)))
        return total

    def snapshot_weights(self):
        return {p.key: p.synapses.weights.copy() for p in self.projections}

    def copy(self):
        return copy.deepcopy(self)


def build_circuit(config, seed):
    """Instantiate populations and draw initial weights deterministically from ``seed``.

    Each projection draws from its own generator keyed on (seed, source, target),
    so removing unrelated populations leaves the remaining weights unchanged.
    """
    if config.inhib_proportion is not None:
        config = scale_inhibition(config, config.inhib_proportion)
    populations = {}
    for name, n_units in config.counts.items():
        if name not in POPULATION_NAMES:
            raise ConfigError(f"unknown population {name!r}", f"circuit.counts.{name}")
        spec = PopulationSpec.canonical(name, int(n_units), config.coupling.get(name))
        params = config.lif_for(name)
        roles = {}
        for i, role in enumerate(spec.compartment_roles):
            roles.setdefault(role, []).append(i)
        populations[name] = Population(
            spec, params,
            CompartmentState.initial(spec.n_units * spec.n_compartments, params, config.history_len),
            {k: np.array(v) for k, v in roles.items()},
        )
    if "PyrS" not in populations:
        raise ConfigError("a circuit needs a PyrS population", "circuit.counts.PyrS")

    rules = config.rules
    state = pl.PlasticityState()
    projections = []
    seen = set()
    for spec in config.projections:
        spec.validate()
        if spec.key in seen:
            raise ConfigError("duplicate projection", f"projections.{spec.key}")
        seen.add(spec.key)
        if spec.source != MF and spec.source not in populations:
            raise ConfigError(f"unknown source population {spec.source!r}", f"projections.{spec.key}.source")
        if spec.target not in populations:
            raise ConfigError(f"unknown target population {spec.target!r}", f"projections.{spec.key}.target")
        target = populations[spec.target]
        if spec.target_role not in target.role_columns:
            raise ConfigError(f"{spec.target} has no {spec.target_role!r} compartment",
                              f"projections.{spec.key}.target_role")
        n_src = config.n_pyrs if spec.source == MF else populations[spec.source].n
        n_tgt = target.n
        polarity = EXCITATORY if spec.source == MF else populations[spec.source].spec.polarity
        sign = 1 if polarity == EXCITATORY else -1

        rng = np.random.default_rng([seed, _stable_seed(spec.source, spec.target)])
        mask = (rng.random((n_src, n_tgt)) < spec.connectivity).astype(float)
        if spec.source == spec.target and not spec.allow_self:
            np.fill_diagonal(mask, 0.0)
        w = np.abs(rng.normal(spec.init_mean, spec.init_std, size=(n_src, n_tgt)))
        w = np.clip(w, 0.0, rules.w_max) * mask
        projections.append(Projection(spec, SynapseMatrix(w, mask, spec.target_role), sign))

        if pl.BCM in spec.rules:
            state.theta[spec.key] = np.full(n_tgt, rules.theta_init_rate**2)
        if pl.STP in spec.rules:
            state.stp_u[spec.key] = np.full(n_src, rules.U)
            state.stp_x[spec.key] = np.ones(n_src)
            state.w_base[spec.key] = w.copy()
        if pl.ILTD in spec.rules:
            if target.spec.polarity != EXCITATORY or sign != -1:
                raise ConfigError("iLTD needs an inhibitory source and a pyramidal target",
                                  f"projections.{spec.key}.rules")
            state.w_base[spec.key] = w.copy()
            state.ecb.setdefault(spec.target, np.zeros(n_tgt))
        if pl.BURST_HEBB in spec.rules and target.spec.firing_type != INTRINSIC_BURSTING:
            raise ConfigError("burst-gated Hebb needs an intrinsically bursting target",
                              f"projections.{spec.key}.rules")
    return Circuit(config, populations, projections, state)


def tick(circuit, external_current, ach=1.0):
    """Advance the circuit one synchronous step and return its :class:`SpikeRecord`.

    ``external_current`` is either the PyrS drive vector or a mapping of
    population name to drive; populations other than PyrS take their drive on
    the soma. Synaptic currents use spikes emitted ``delay`` ticks ago.
    """
    if not isinstance(external_current, dict):
        external_current = {"PyrS": external_current}
    rules = circuit.rules
    pyrs_drive = np.asarray(external_current.get("PyrS", np.zeros(circuit.n_pyrs)), dtype=float)
    if pyrs_drive.shape != (circuit.n_pyrs,):
        raise ConfigError(f"PyrS drive has shape {pyrs_drive.shape}, expected ({circuit.n_pyrs},)",
                          "external_current.PyrS")

    delayed = circuit._pending[0]
    currents = {name: np.zeros((pop.n, pop.spec.n_compartments)) for name, pop in circuit.populations.items()}
    gate = pl.ach_gate_attenuation(ach, rules)
    scale = circuit.config.current_scale
    for proj in circuit.projections:
        src_spikes = delayed[proj.spec.source]
        if not src_spikes.any():
            if proj.spec.mossy:
                _advance_stp(circuit, proj, src_spikes)
            continue
        w = proj.synapses.weights
        if proj.spec.mossy:
            key = proj.key
            eff = rules.U * (circuit.plasticity.stp_u[key] * circuit.plasticity.stp_x[key])[:, None]
            w = eff * circuit.plasticity.w_base[key] * gate
            _advance_stp(circuit, proj, src_spikes)
        drive = (proj.sign * scale) * (src_spikes @ w)
        cols = circuit.populations[proj.spec.target].role_columns[proj.spec.target_role]
        currents[proj.spec.target][:, cols] += drive[:, None] / len(cols)

    proximal = circuit.populations["PyrS"].role_columns["proximal"]
    currents["PyrS"][:, proximal] += pyrs_drive[:, None] / len(proximal)
    for name, drive in external_current.items():
        if name == "PyrS":
            continue
        if name not in circuit.populations:
            raise ConfigError(f"unknown population {name!r}", f"external_current.{name}")
        pop = circuit.populations[name]
        currents[name][:, pop.spec.soma_index] += np.asarray(drive, dtype=float)

    spikes, bursts = {}, {}
    for name, pop in circuit.populations.items():
        cur = currents[name]
        soma = pop.spec.soma_index
        total = cur[:, soma].copy()
        for c, role in enumerate(pop.spec.compartment_roles):
            if c != soma:
                total += pop.spec.coupling_for(role) * cur[:, c]
        cur[:, soma] = total
        pop.state, comp_spikes = step_compartment(pop.state, cur.reshape(-1), pop.lif)
        spikes[name] = comp_spikes.reshape(pop.n, pop.spec.n_compartments)[:, soma]
        if pop.spec.firing_type == INTRINSIC_BURSTING:
            hist = pop.soma_history()
            window = min(BURST_WINDOW, circuit.config.history_len)
            bursts[name] = detect_bursts(hist, window, BURST_MIN_SPIKES, circuit.config.history_len)
        else:
            bursts[name] = np.zeros(pop.n, dtype=np.int8)
    spikes[MF] = (pyrs_drive > 0).astype(np.int8)

    circuit._pending = circuit._pending[1:] + [spikes]
    record = SpikeRecord(circuit.tick_counter, spikes, bursts)
    circuit.tick_counter += 1
    return record


def _advance_stp(circuit, proj, src_spikes):
    key = proj.key
    state = circuit.plasticity
    state.stp_u[key], state.stp_x[key] = pl.stp_advance(
        state.stp_u[key], state.stp_x[key], src_spikes.astype(bool), circuit.rules
    )
