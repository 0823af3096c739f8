"""Local plasticity rules and their acetylcholine gates.

Weights are stored as non-negative magnitudes (the sign of a projection is
applied at transmission time), so every rule ends with a clip to [0, w_max]
followed by the connectivity mask.

Rules operating on window rates (Hebb, BCM, burst-gated Hebb, iLTD) are applied
once per presentation window by :func:`apply_all`. Short-term plasticity is
time-indexed and is advanced every tick by the circuit.
"""

from dataclasses import dataclass, field, fields

import numpy as np

from .errors import ConfigError

HEBB = "hebb"
BCM = "bcm"
BURST_HEBB = "burst_hebb"
ILTD = "iltd"
STP = "stp"

RULE_NAMES = (HEBB, BCM, BURST_HEBB, ILTD, STP)
# Order in which window rules run on a projection.
RULE_ORDER = (HEBB, BCM, BURST_HEBB, ILTD)


@dataclass(frozen=True)
class RuleParams:
    eta_hebb: float = 1e-3
    eta_bcm: float = 1e-4
    tau_bcm: float = 0.1
    theta_init_rate: float = 0.1
    U: float = 0.5
    tau_f: float = 0.9
    tau_d: float = 0.93
    eta_iltd: float = 1e-2
    eta_rec: float = 0.05
    ecb_decay: float = 0.9
    ecb_gain: float = 1.0
    ecb_r_thresh: float = 0.5
    eta_burst: float = 1e-3
    ach_gate_center: float = 0.5
    ach_gate_width: float = 0.2
    ach_floor: float = 0.2
    w_max: float = 5.0

    def __post_init__(self):
        for name in ("eta_hebb", "eta_bcm", "eta_iltd", "eta_rec", "eta_burst", "ecb_gain"):
            if getattr(self, name) < 0:
                raise ConfigError(f"must be non-negative, got {getattr(self, name)}", name)
        if not 0.0 < self.tau_bcm < 1.0:
            raise ConfigError(f"must lie in (0, 1), got {self.tau_bcm}", "tau_bcm")
        if not 0.0 < self.U <= 1.0:
            raise ConfigError(f"must lie in (0, 1], got {self.U}", "U")
        for name in ("tau_f", "tau_d", "ecb_decay"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ConfigError(f"must lie in [0, 1), got {getattr(self, name)}", name)
        if self.ach_gate_width <= 0:
            raise ConfigError("must be positive", "ach_gate_width")
        if self.w_max <= 0:
            raise ConfigError("must be positive", "w_max")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown rule parameter {key!r}", f"rules.{key}")
        return cls(**{k: float(v) for k, v in data.items()})


# -- gates -------------------------------------------------------------------

def ach_gate_bipolar(ach, p=None):
    """Bipolar cholinergic gate tanh((ACh - 0.5) / 0.2); sign flips at ACh = 0.5."""
    center = 0.5 if p is None else p.ach_gate_center
    width = 0.2 if p is None else p.ach_gate_width
    return float(np.tanh((ach - center) / width))


def ach_gate_attenuation(ach, p=None):
    floor = 0.2 if p is None else p.ach_floor
    return float(max(ach, floor))


def _clip(w, p, mask=None):
    w = np.clip(w, 0.0, p.w_max)
    if mask is not None:
        w = w * mask
    return w


def _check_dims(w, r_pre, r_post):
    if w.shape != (len(r_pre), len(r_post)):
        raise ConfigError(
            f"weight matrix {w.shape} does not match rates ({len(r_pre)}, {len(r_post)})",
            "rates",
        )


# -- window rules ------------------------------------------------------------

def hebb_update(w, r_pre, r_post, ach, p, mask=None):
    r_pre = np.asarray(r_pre, dtype=float)
    r_post = np.asarray(r_post, dtype=float)
    _check_dims(w, r_pre, r_post)
    gain = ach_gate_bipolar(ach, p)
    if gain == 0.0:
        return _clip(w, p, mask)
    return _clip(w + p.eta_hebb * gain * np.outer(r_pre, r_post), p, mask)


def bcm_update(w, theta, r_pre, r_post, ach, p, mask=None):
    """BCM step with a sliding threshold; returns ``(w', theta')``.

    The weight change uses the threshold from before this step. The attenuation
    gate scales the weight change only, not the threshold update.
    """
    r_pre = np.asarray(r_pre, dtype=float)
    r_post = np.asarray(r_post, dtype=float)
    theta = np.asarray(theta, dtype=float)
    _check_dims(w, r_pre, r_post)
    if theta.shape != r_post.shape:
        raise ConfigError(f"theta has shape {theta.shape}, expected {r_post.shape}", "theta")
    gain = ach_gate_attenuation(ach, p)
    dw = p.eta_bcm * gain * np.outer(r_pre, r_post * (r_post - theta))
    theta_next = (1.0 - p.tau_bcm) * theta + p.tau_bcm * r_post**2
    return _clip(w + dw, p, mask), theta_next


def burst_hebb_update(w, r_pre, r_post, burst_flags, ach, p, mask=None):
    r_pre = np.asarray(r_pre, dtype=float)
    r_post = np.asarray(r_post, dtype=float)
    flags = np.asarray(burst_flags)
    _check_dims(w, r_pre, r_post)
    if flags.shape != r_post.shape:
        raise ConfigError(f"burst flags shape {flags.shape}, expected {r_post.shape}", "burst_flags")
    if not np.isin(flags, (0, 1)).all():
        raise ConfigError("burst flags must be binary", "burst_flags")
    gain = ach_gate_bipolar(ach, p)
    dw = p.eta_burst * gain * np.outer(r_pre, r_post * flags)
    return _clip(w + dw, p, mask)


def ecb_trace_update(ecb, r_post, p):
    """Thresholded leaky integration of postsynaptic pyramidal rate."""
    drive = np.maximum(np.asarray(r_post, dtype=float) - p.ecb_r_thresh, 0.0)
    return np.maximum(p.ecb_decay * np.asarray(ecb, dtype=float) + p.ecb_gain * drive, 0.0)


def iltd_update(w, ecb, w_base, ach, p, mask=None):
    """eCB-driven depression of inhibitory synapses with recovery toward baseline.

    ``ecb`` is indexed by postsynaptic unit (columns of ``w``).
    """
    ecb = np.asarray(ecb, dtype=float)
    if w.shape != w_base.shape or ecb.shape != (w.shape[1],):
        raise ConfigError(
            f"iLTD shapes disagree: w {w.shape}, w_base {w_base.shape}, ecb {ecb.shape}", "iltd"
        )
    gain = ach_gate_attenuation(ach, p)
    depress = -p.eta_iltd * np.maximum(ecb, 0.0)[None, :]
    recover = p.eta_rec * np.maximum(w_base - w, 0.0)
    w_next = w + (depress + recover) * gain
    # recovery alone never carries a synapse past its baseline
    w_next = np.where((w <= w_base) & (w_next > w_base), np.maximum(w_base, w), w_next)
    return _clip(w_next, p, mask)


# -- short-term plasticity -----------------------------------------------------

def stp_advance(u, x, spiked, p):
    """One tick of facilitation/depression. Works elementwise on arrays too."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    spiked = np.asarray(spiked, dtype=bool)
    u_spk = u + p.U * (1.0 - u)
    x_spk = x - u_spk * x
    u_rest = p.U + (u - p.U) * p.tau_f
    x_rest = 1.0 - (1.0 - x) * p.tau_d
    u_next = np.clip(np.where(spiked, u_spk, u_rest), 0.0, 1.0)
    x_next = np.clip(np.where(spiked, x_spk, x_rest), 0.0, 1.0)
    if u_next.ndim == 0:
        return float(u_next), float(x_next)
    return u_next, x_next


def stp_effective_weight(u, x, p, w_base):
    return p.U * np.asarray(u) * np.asarray(x) * w_base


# -- orchestration -------------------------------------------------------------

@dataclass
class PlasticityState:
    """Slow traces carried between presentation windows.

    theta: projection key -> BCM threshold per postsynaptic unit.
    stp_u, stp_x: projection key -> per-source-unit facilitation and resources.
    ecb: pyramidal population name -> eCB trace per unit.
    w_base: projection key -> baseline magnitudes (iLTD recovery target, STP base).
    """

    theta: dict = field(default_factory=dict)
    stp_u: dict = field(default_factory=dict)
    stp_x: dict = field(default_factory=dict)
    ecb: dict = field(default_factory=dict)
    w_base: dict = field(default_factory=dict)

    def copy(self):
        return PlasticityState(
            theta={k: v.copy() for k, v in self.theta.items()},
            stp_u={k: v.copy() for k, v in self.stp_u.items()},
            stp_x={k: v.copy() for k, v in self.stp_x.items()},
            ecb={k: v.copy() for k, v in self.ecb.items()},
            w_base={k: v.copy() for k, v in self.w_base.items()},
        )

    def reset_stp(self, p):
        for key in self.stp_u:
            self.stp_u[key] = np.full_like(self.stp_u[key], p.U)
            self.stp_x[key] = np.ones_like(self.stp_x[key])


def apply_all(circuit, state, window_rates, burst_flags, ach):
    """Apply every bound window rule once. Returns ``(circuit, state)``.

    ``window_rates`` maps population name to the per-unit rate over the
    presentation that just ended (the external mossy-fibre source included);
    ``burst_flags`` maps population name to binary flags for that window.
    Each projection gets a fresh weight matrix; the arrays it held before are
    never written to, so earlier snapshots stay valid.
    """
    p = circuit.rules
    state = state.copy()
    for pop, trace in state.ecb.items():
        state.ecb[pop] = ecb_trace_update(trace, window_rates[pop], p)

    for proj in circuit.projections:
        key = proj.key
        rules = [r for r in RULE_ORDER if r in proj.spec.rules]
        if not rules:
            continue
        syn = proj.synapses
        w = syn.weights
        r_pre = window_rates[proj.spec.source]
        r_post = window_rates[proj.spec.target]
        for rule in rules:
            if rule == HEBB:
                w = hebb_update(w, r_pre, r_post, ach, p, syn.mask)
            elif rule == BCM:
                if key not in state.theta:
                    raise ConfigError("BCM bound without a threshold trace", f"projections.{key}")
                w, state.theta[key] = bcm_update(w, state.theta[key], r_pre, r_post, ach, p, syn.mask)
            elif rule == BURST_HEBB:
                if proj.spec.target not in burst_flags:
                    raise ConfigError("burst-gated Hebb bound without burst flags", f"projections.{key}")
                w = burst_hebb_update(w, r_pre, r_post, burst_flags[proj.spec.target], ach, p, syn.mask)
            elif rule == ILTD:
                if proj.spec.target not in state.ecb or key not in state.w_base:
                    raise ConfigError("iLTD bound without eCB/baseline traces", f"projections.{key}")
                w = iltd_update(w, state.ecb[proj.spec.target], state.w_base[key], ach, p, syn.mask)
        proj.synapses = syn.with_weights(w)
    return circuit, state
