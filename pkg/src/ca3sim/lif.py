"""Discrete-time leaky integrate-and-fire compartments.

Every compartment follows

    V(t+1) = beta * V(t) + I(t) - S(t) * v_thr,    S(t) = 1[V(t) >= v_thr]

i.e. the spike is read off the potential *before* the update and the reset is a
soft subtraction of the threshold. There is no refractory period and no floor on
the potential, so strong inhibition can drive V below zero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UndefinedRateError

EXCITATORY = "excitatory"
INHIBITORY = "inhibitory"
REGULAR_SPIKING = "regular-spiking"
INTRINSIC_BURSTING = "intrinsic-bursting"

DEFAULT_HISTORY = 4
BURST_WINDOW = 3
BURST_MIN_SPIKES = 2


@dataclass(frozen=True)
class LIFParams:
    beta: float = 0.9
    v_thr: float = 1.0
    v_init: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}", "beta")
        if not self.v_thr > 0.0:
            raise ConfigError(f"v_thr must be positive, got {self.v_thr}", "v_thr")


@dataclass
class CompartmentState:
    """Potentials and recent spikes of a bank of compartments.

    ``spike_history`` holds at most ``history_len`` rows, oldest first; each row
    is the spike vector emitted on one tick.
    """

    v: np.ndarray
    last_spikes: np.ndarray
    spike_history: np.ndarray
    history_len: int = DEFAULT_HISTORY

    @classmethod
    def initial(cls, n, params=None, history_len=DEFAULT_HISTORY):
        v_init = 0.0 if params is None else params.v_init
        return cls(
            v=np.full(n, v_init, dtype=float),
            last_spikes=np.zeros(n, dtype=np.int8),
            spike_history=np.zeros((0, n), dtype=np.int8),
            history_len=history_len,
        )

    @property
    def n(self):
        return self.v.shape[0]


def step_compartment(state, input_current, params):
    """Advance ``state`` by one tick. Returns ``(new_state, spikes)``."""
    current = np.asarray(input_current, dtype=float)
    if current.shape != state.v.shape:
        raise ConfigError(
            f"input current has shape {current.shape}, state has {state.v.shape}",
            "input_current",
        )
    spikes = (state.v >= params.v_thr).astype(np.int8)
    v_next = params.beta * state.v + current - spikes * params.v_thr
    history = np.vstack([state.spike_history, spikes[None, :]])
    if history.shape[0] > state.history_len:
        history = history[-state.history_len:]
    new_state = CompartmentState(v_next, spikes, history, state.history_len)
    return new_state, spikes


def detect_bursts(history, window=BURST_WINDOW, min_spikes=BURST_MIN_SPIKES, history_len=None):
    """Flag units that fired at least ``min_spikes`` times in the last ``window`` ticks.

    ``history`` is a (ticks, units) spike array, oldest row first. ``history_len``
    is the capacity of the ring buffer it came from; when omitted the number of
    rows stands in for it.
    """
    history = np.asarray(history)
    capacity = history.shape[0] if history_len is None else history_len
    if window > capacity:
        raise ConfigError(f"burst window {window} exceeds history length {capacity}", "window")
    if window < 1:
        raise ConfigError("burst window must be at least one tick", "window")
    counts = history[-window:].sum(axis=0) if history.shape[0] else np.zeros(history.shape[1])
    return (counts >= min_spikes).astype(np.int8)


def population_rate(history, window=None):
    """Mean spike probability per unit per tick over the last ``window`` ticks."""
    history = np.asarray(history)
    if history.ndim != 2 or history.shape[0] == 0 or history.shape[1] == 0:
        raise UndefinedRateError("cannot compute a rate from an empty spike history")
    if window is None:
        window = history.shape[0]
    if window < 1:
        raise ConfigError("rate window must be at least one tick", "window")
    recent = history[-window:]
    return float(recent.sum()) / recent.size


def unit_rates(history, window=None):
    """Per-unit spike counts over the window divided by the window length."""
    history = np.asarray(history)
    if history.ndim != 2 or history.shape[0] == 0:
        raise UndefinedRateError("cannot compute a rate from an empty spike history")
    recent = history[-window:] if window else history
    return recent.sum(axis=0) / recent.shape[0]


# Compartment layout per population, soma first. Lengths follow the canonical
# compartment counts; they sum to 47 across the ten classes.
_PYR_ROLES = ("soma", "ais", "basal", "basal", "proximal", "proximal", "distal", "distal")

CANONICAL_LAYOUT = {
    "PyrS": (EXCITATORY, REGULAR_SPIKING, _PYR_ROLES),
    "PyrD": (EXCITATORY, INTRINSIC_BURSTING, _PYR_ROLES),
    "BC-PV+": (INHIBITORY, REGULAR_SPIKING, ("soma", "ais", "dendrite", "dendrite", "dendrite")),
    "CC": (INHIBITORY, REGULAR_SPIKING, ("soma", "ais", "dendrite", "dendrite")),
    "O-LM": (INHIBITORY, REGULAR_SPIKING, ("soma", "dendrite", "dendrite")),
    "BSC": (INHIBITORY, REGULAR_SPIKING, ("soma", "dendrite", "dendrite")),
    "SL-INT": (INHIBITORY, REGULAR_SPIKING, ("soma", "ais", "dendrite", "dendrite")),
    "R/L-M": (INHIBITORY, REGULAR_SPIKING, ("soma", "dendrite", "dendrite")),
    "CCK+": (INHIBITORY, REGULAR_SPIKING, ("soma", "ais", "dendrite", "dendrite", "dendrite")),
    "VIP+": (INHIBITORY, REGULAR_SPIKING, ("soma", "ais", "dendrite", "dendrite")),
}

POPULATION_NAMES = tuple(CANONICAL_LAYOUT)
INTERNEURON_NAMES = tuple(n for n, spec in CANONICAL_LAYOUT.items() if spec[0] == INHIBITORY)


@dataclass(frozen=True)
class PopulationSpec:
    name: str
    polarity: str
    n_units: int
    n_compartments: int
    firing_type: str = REGULAR_SPIKING
    compartment_roles: tuple = ("soma",)
    coupling: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_units < 1:
            raise ConfigError(f"population {self.name} needs at least one unit", f"populations.{self.name}")
        if len(self.compartment_roles) != self.n_compartments:
            raise ConfigError(
                f"{self.n_compartments} compartments but {len(self.compartment_roles)} roles",
                f"populations.{self.name}",
            )
        if self.compartment_roles.count("soma") != 1:
            raise ConfigError("exactly one soma compartment per unit", f"populations.{self.name}")
        if self.polarity not in (EXCITATORY, INHIBITORY):
            raise ConfigError(f"unknown polarity {self.polarity!r}", f"populations.{self.name}")

    @property
    def soma_index(self):
        return self.compartment_roles.index("soma")

    def coupling_for(self, role):
        return self.coupling.get(role, 1.0)

    @classmethod
    def canonical(cls, name, n_units, coupling=None):
        try:
            polarity, firing, roles = CANONICAL_LAYOUT[name]
        except KeyError:
            raise ConfigError(f"unknown population {name!r}", "populations") from None
        return cls(name, polarity, n_units, len(roles), firing, roles, dict(coupling or {}))
