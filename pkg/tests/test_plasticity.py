import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ca3sim import plasticity as pl
from ca3sim.circuit import CircuitConfig, build_circuit
from ca3sim.errors import ConfigError
from oracles import ECB_LIMIT, TANH_2_5

P = pl.RuleParams()
unit = st.floats(0.0, 1.0)


def test_bipolar_gate_examples():
    assert pl.ach_gate_bipolar(0.5) == 0.0
    assert pl.ach_gate_bipolar(1.0) == pytest.approx(TANH_2_5, rel=1e-12)
    assert pl.ach_gate_bipolar(0.0) == pytest.approx(-TANH_2_5, rel=1e-12)


@pytest.mark.parametrize("ach, g", [(0.0, 0.2), (1.0, 1.0), (0.2, 0.2)])
def test_attenuation_gate_examples(ach, g):
    assert pl.ach_gate_attenuation(ach) == g


@given(st.floats(0.0, 0.5))
def test_bipolar_gate_odd_symmetry(x):
    assert pl.ach_gate_bipolar(0.5 + x) == pytest.approx(-pl.ach_gate_bipolar(0.5 - x), abs=1e-15)


def test_hebb_examples():
    w = np.full((1, 1), 1.0)
    assert np.array_equal(pl.hebb_update(w, [0.7], [0.3], 0.5, P), w)
    up = pl.hebb_update(w, [1.0], [1.0], 1.0, P)
    down = pl.hebb_update(w, [1.0], [1.0], 0.0, P)
    assert up[0, 0] - 1.0 == pytest.approx(1e-3 * TANH_2_5, rel=1e-9)
    assert down[0, 0] - 1.0 == pytest.approx(-1e-3 * TANH_2_5, rel=1e-9)


def test_hebb_dimension_mismatch():
    with pytest.raises(ConfigError):
        pl.hebb_update(np.zeros((2, 3)), [1, 1, 1], [1, 1], 1.0, P)


def test_bcm_examples():
    p = pl.RuleParams(eta_bcm=1e-3, tau_bcm=0.1)
    w, theta = pl.bcm_update(np.ones((1, 1)), np.array([0.3]), [1.0], [0.3], 1.0, p)
    assert w[0, 0] == 1.0
    assert theta[0] == pytest.approx(0.9 * 0.3 + 0.1 * 0.09)
    _, theta = pl.bcm_update(np.ones((1, 1)), np.array([0.04]), [1.0], [0.2], 1.0, p)
    assert theta[0] == pytest.approx(0.04, abs=1e-15)
    w, _ = pl.bcm_update(np.ones((1, 1)), np.array([0.25]), [1.0], [0.5], 1.0, p)
    assert w[0, 0] - 1.0 == pytest.approx(1.25e-4, rel=1e-9)


def test_bcm_gate_scales_weight_not_threshold():
    p = pl.RuleParams(eta_bcm=1e-3)
    args = (np.ones((1, 1)), np.array([0.1]), [1.0], [0.8])
    w1, th1 = pl.bcm_update(*args, 1.0, p)
    w0, th0 = pl.bcm_update(*args, 0.0, p)
    assert (w0[0, 0] - 1.0) == pytest.approx(0.2 * (w1[0, 0] - 1.0))
    assert np.array_equal(th0, th1)


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 60))
def test_bcm_threshold_closed_form(tau, r, theta0, n):
    p = pl.RuleParams(tau_bcm=tau)
    theta = np.array([theta0])
    for _ in range(n):
        _, theta = pl.bcm_update(np.zeros((1, 1)), theta, [0.0], [r], 1.0, p)
    assert abs(theta[0] - r * r) == pytest.approx((1 - tau) ** n * abs(theta0 - r * r), abs=1e-12)


def test_stp_examples():
    assert pl.stp_advance(P.U, 1.0, False, P) == (P.U, 1.0)
    u, x = pl.stp_advance(0.5, 1.0, True, P)
    assert (u, x) == (0.75, 0.25)
    u, x = 0.9, 0.1
    for _ in range(1000):
        u, x = pl.stp_advance(u, x, False, P)
    assert u == pytest.approx(P.U, abs=1e-9) and x == pytest.approx(1.0, abs=1e-9)


def test_stp_effective_weight_examples():
    assert pl.stp_effective_weight(1.0, 1.0, pl.RuleParams(U=1.0), 2.0) == 2.0
    assert pl.stp_effective_weight(0.5, 1.0, P, 1.0) == 0.25


def test_stp_depression_dominates():
    u1, x1 = pl.stp_advance(P.U, 1.0, True, P)
    u, x = P.U, 1.0
    for _ in range(10):
        u, x = pl.stp_advance(u, x, True, P)
    assert pl.stp_effective_weight(u, x, P, 1.0) < pl.stp_effective_weight(u1, x1, P, 1.0)


@given(unit, unit, st.lists(st.booleans(), max_size=50), st.floats(0.01, 1.0))
def test_stp_bounded(u, x, train, U):
    p = pl.RuleParams(U=U)
    for s in train:
        u, x = pl.stp_advance(u, x, s, p)
        assert 0.0 <= u <= 1.0 and 0.0 <= x <= 1.0
        assert 0.0 <= pl.stp_effective_weight(u, x, p, 1.0) <= U


def test_ecb_examples():
    assert pl.ecb_trace_update(np.zeros(1), [0.3], P)[0] == 0.0
    assert pl.ecb_trace_update(np.zeros(1), [1.0], P)[0] == 0.5
    ecb = np.zeros(1)
    for _ in range(500):
        ecb = pl.ecb_trace_update(ecb, [1.0], P)
    assert ecb[0] == pytest.approx(ECB_LIMIT, rel=1e-9)


def test_iltd_examples():
    wb = np.full((2, 2), 0.8)
    assert np.array_equal(pl.iltd_update(wb.copy(), np.zeros(2), wb, 1.0, P), wb)
    w = 0.5 * wb
    prev = w
    for _ in range(300):
        w = pl.iltd_update(w, np.zeros(2), wb, 1.0, P)
        assert (w >= prev).all() and (w <= wb).all()
        prev = w
    out = pl.iltd_update(wb.copy(), np.array([0.5, 0.5]), wb, 1.0, P)
    assert out - wb == pytest.approx(np.full((2, 2), -5e-3))


@given(st.floats(0.01, 1.0), st.floats(0.0, 3.0), st.floats(0.0, 0.5))
def test_iltd_recovery_never_overshoots(wb, frac, ecb):
    p = pl.RuleParams(eta_rec=0.9)
    w_base = np.array([[wb]])
    w = np.array([[wb * frac]])
    out = pl.iltd_update(w, np.array([ecb]), w_base, 1.0, p)
    assert out[0, 0] <= max(wb, w[0, 0]) + 1e-15


def test_burst_hebb_examples():
    w = np.ones((1, 2))
    assert np.array_equal(pl.burst_hebb_update(w, [1.0], [1.0, 1.0], [0, 0], 1.0, P), w)
    out = pl.burst_hebb_update(w, [1.0], [1.0, 1.0], [0, 1], 1.0, P)
    assert out[0, 0] == 1.0
    assert out[0, 1] - 1.0 == pytest.approx(1e-3 * TANH_2_5, rel=1e-9)
    assert np.array_equal(pl.burst_hebb_update(w, [1.0], [1.0, 1.0], [1, 1], 0.5, P), w)


def test_burst_flags_must_be_binary():
    with pytest.raises(ConfigError):
        pl.burst_hebb_update(np.ones((1, 1)), [1.0], [1.0], [2], 1.0, P)


@given(arrays(float, (3, 4), elements=st.floats(0, 5)), arrays(float, 3, elements=unit),
       arrays(float, 4, elements=unit), unit)
def test_zero_rates_no_rate_rule_change(w, r_pre, r_post, ach):
    z3, z4 = np.zeros(3), np.zeros(4)
    assert np.array_equal(pl.hebb_update(w, z3, r_post, ach, P), w)
    assert np.array_equal(pl.hebb_update(w, r_pre, z4, ach, P), w)
    assert np.array_equal(pl.bcm_update(w, np.full(4, 0.01), r_pre, z4, ach, P)[0], w)
    assert np.array_equal(pl.burst_hebb_update(w, z3, r_post, np.ones(4), ach, P), w)


def test_rule_params_validation():
    with pytest.raises(ConfigError):
        pl.RuleParams(tau_bcm=1.0)
    with pytest.raises(ConfigError):
        pl.RuleParams(U=0.0)
    with pytest.raises(ConfigError):
        pl.RuleParams.from_dict({"eta_hebbb": 1.0})


def _rates(circuit, value=0.8):
    rates = {name: np.full(pop.n, value) for name, pop in circuit.populations.items()}
    rates["MF"] = np.full(circuit.n_pyrs, value)
    flags = {name: np.ones(pop.n, dtype=np.int8) for name, pop in circuit.populations.items()}
    return rates, flags


def test_apply_all_minimal_touches_only_recurrent():
    c = build_circuit(CircuitConfig(variant="minimal"), 1)
    before = c.snapshot_weights()
    rates, flags = _rates(c)
    c, _ = pl.apply_all(c, c.plasticity, rates, flags, 1.0)
    assert list(before) == ["PyrS->PyrS"]
    assert not np.array_equal(before["PyrS->PyrS"], c.projection("PyrS", "PyrS").synapses.weights)


def test_apply_all_gate_zero_freezes_bipolar_rules():
    c = build_circuit(CircuitConfig(variant="full"), 1)
    rates, flags = _rates(c)
    c.plasticity.ecb["PyrS"][:] = 1.0
    before = c.snapshot_weights()
    c, _ = pl.apply_all(c, c.plasticity, rates, flags, 0.5)
    changed = {k for k, w in c.snapshot_weights().items() if not np.array_equal(w, before[k])}
    rules = {p.key: set(p.spec.rules) for p in c.projections}
    assert changed
    for key in changed:
        assert rules[key] & {pl.BCM, pl.ILTD}


def test_apply_all_reproducible_checksum():
    sums = []
    for _ in range(2):
        c = build_circuit(CircuitConfig(variant="full"), 7)
        rates, flags = _rates(c, 0.6)
        c, _ = pl.apply_all(c, c.plasticity, rates, flags, 1.0)
        sums.append(c.weights_checksum())
    assert sums[0] == sums[1]


def test_apply_all_missing_trace_is_config_error():
    c = build_circuit(CircuitConfig(variant="full"), 1)
    rates, flags = _rates(c)
    c.plasticity.theta.clear()
    with pytest.raises(ConfigError):
        pl.apply_all(c, c.plasticity, rates, flags, 1.0)


def test_apply_all_does_not_mutate_input_state():
    c = build_circuit(CircuitConfig(variant="full"), 1)
    rates, flags = _rates(c)
    theta = c.plasticity.theta["PyrS->PyrS"].copy()
    old_state = c.plasticity
    _, new_state = pl.apply_all(c, c.plasticity, rates, flags, 1.0)
    assert np.array_equal(old_state.theta["PyrS->PyrS"], theta)
    assert not math.isclose(new_state.theta["PyrS->PyrS"][0], theta[0])
