"""Store/recall protocols, the four experiment regimes, and report assembly.

Each (cell, seed) pair is an independent job: it builds its own circuit and
pattern set from the seed and returns one row. Rows are assembled in canonical
order (cell, then seed) so the report does not depend on execution order.
"""

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import metrics as mt
from . import plasticity as pl
from .circuit import FULL, MF, MINIMAL, build_circuit, tick
from .config import ExperimentConfig
from .patterns import (
    PatternSet,
    gen_orthogonal_sparse,
    gen_paired,
    gen_sequence,
    mask_cue,
    to_currents,
)
from .scheduler import ENCODE, ach_at, phase_at

log = logging.getLogger(__name__)

FORMAT_VERSION = "1.0"

# Sub-stream tags for seed derivation; each consumer gets an independent stream.
_PATTERNS, _CUES, _INJECTION, _ORDER, _RECALL = 1, 2, 3, 4, 5


def derive_seed(seed, *tags):
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


# -- presentation windows ---------------------------------------------------------

def _run_window(circuit, currents, schedule, clock):
    """Run ``len(currents)`` ticks; return per-unit rates, burst flags and mean ACh."""
    counts = {name: np.zeros(pop.n) for name, pop in circuit.populations.items()}
    counts[MF] = np.zeros(circuit.n_pyrs)
    bursts = {name: np.zeros(pop.n, dtype=np.int8) for name, pop in circuit.populations.items()}
    levels = []
    for t, row in enumerate(currents):
        ach = ach_at(schedule, clock + t)
        levels.append(ach)
        rec = tick(circuit, row, ach)
        for name in counts:
            counts[name] += rec.spikes[name]
        for name in bursts:
            bursts[name] |= rec.bursts[name]
    T = len(currents)
    return {k: v / T for k, v in counts.items()}, bursts, float(np.mean(levels))


def _store_items(pset):
    if pset.kind == "paired":
        return [np.maximum(a.bits, b.bits) for a, b in pset.pairs]
    return [p.bits for p in pset.patterns]


def run_store_phase(circuit, pset, cfg, seed=0, rate_log=None):
    """Present every stored item ``cfg.exposures`` times with plasticity on.

    Items go round-robin in a fixed order (shuffled per round when
    ``cfg.shuffle``). Under a bimodal ACh schedule, windows that start in the
    consolidation phase run with zero input and do not count as exposures.
    Returns ``(circuit, plasticity_state)``; the circuit is updated in place.
    """
    items = _store_items(pset)
    if items[0].shape[0] != circuit.n_pyrs:
        from .errors import ConfigError

        raise ConfigError(f"patterns have {items[0].shape[0]} units, PyrS has {circuit.n_pyrs}", "n_pyrs")
    order_rng = np.random.default_rng(derive_seed(seed, _ORDER))
    inj = cfg.injection
    clock = 0
    presented = 0
    silence = np.zeros((cfg.t_present, circuit.n_pyrs))
    for exposure in range(cfg.exposures):
        order = order_rng.permutation(len(items)) if cfg.shuffle else range(len(items))
        for k in order:
            while phase_at(cfg.ach, clock) != ENCODE:
                if cfg.reset_between_presentations:
                    circuit.reset_dynamics()
                rates, bursts, ach = _run_window(circuit, silence, cfg.ach, clock)
                circuit, circuit.plasticity = pl.apply_all(circuit, circuit.plasticity, rates, bursts, ach)
                clock += cfg.t_present
            if cfg.reset_between_presentations:
                circuit.reset_dynamics()
            currents = to_currents(items[k], cfg.t_present, inj.mode, inj.amplitude, inj.p_high, inj.p_low,
                                   seed=derive_seed(seed, _INJECTION, exposure, int(k)))
            rates, bursts, ach = _run_window(circuit, currents, cfg.ach, clock)
            if rate_log is not None:
                rate_log.append(float(rates["PyrS"].mean()))
            circuit, circuit.plasticity = pl.apply_all(circuit, circuit.plasticity, rates, bursts, ach)
            clock += cfg.t_present
            presented += 1
    log.debug("stored %d presentations over %d ticks", presented, clock)
    return circuit, circuit.plasticity


def _recall_rates(circuit, cue_bits, cfg, seed, ticks, free_after=None):
    """Drive PyrS with the cue and return its (ticks, N) spike raster."""
    inj = cfg.injection
    currents = to_currents(cue_bits, ticks, inj.mode, inj.amplitude, inj.p_high, inj.p_low,
                           seed=derive_seed(seed, _RECALL))
    if free_after is not None:
        currents[free_after:] = 0.0
    circuit.reset_dynamics()
    raster = np.zeros((ticks, circuit.n_pyrs), dtype=np.int8)
    counts = {name: np.zeros(pop.n) for name, pop in circuit.populations.items()}
    counts[MF] = np.zeros(circuit.n_pyrs)
    bursts = {name: np.zeros(pop.n, dtype=np.int8) for name, pop in circuit.populations.items()}
    for t in range(ticks):
        rec = tick(circuit, currents[t], ach_at(cfg.ach, t))
        raster[t] = rec.spikes["PyrS"]
        for name in counts:
            counts[name] += rec.spikes[name]
        for name in bursts:
            bursts[name] |= rec.bursts[name]
    if cfg.plastic_recall:
        rates = {k: v / ticks for k, v in counts.items()}
        level = float(np.mean([ach_at(cfg.ach, t) for t in range(ticks)]))
        circuit, circuit.plasticity = pl.apply_all(circuit, circuit.plasticity, rates, bursts, level)
    return raster


def run_recall_trial(circuit, cue, target, chance, budget, cfg, seed=0):
    """Recall from ``cue`` for ``cfg.t_recall`` ticks and score it.

    Plasticity stays frozen unless ``cfg.plastic_recall``; potentials, spike
    buffers and STP state are reset first so trials do not interact.
    """
    cue_bits = cue.bits if hasattr(cue, "bits") else np.asarray(cue)
    target_bits = target.bits if hasattr(target, "bits") else np.asarray(target)
    raster = _recall_rates(circuit, cue_bits, cfg, seed, cfg.t_recall)
    return mt.evaluate_recall(raster.mean(axis=0), target_bits, chance, budget)


# -- per-job runners ---------------------------------------------------------------

@dataclass(frozen=True)
class Job:
    regime: str
    variant: str
    K: int
    proportion: float
    seed: int
    arm: int = 0

    @property
    def cell(self):
        return (self.variant, self.K, self.proportion, self.arm)


def _margin_values(rr, prefix=""):
    return {f"{prefix}{m}": rr.margins[m]["margin"] for m in mt.METRICS}


def _trial_record(job, item, frame, rr, rate):
    row = {"regime": job.regime, "variant": job.variant, "K": job.K, "proportion": job.proportion,
           "arm": job.arm, "seed": job.seed, "item": item, "frame": frame, "pyrs_rate": rate}
    for m in mt.METRICS:
        for part in ("target", "chance", "margin"):
            row[f"{m}_{part}"] = rr.margins[m][part]
    return row


def _mean_over(records, key):
    vals = [r[key] for r in records if not _isnan(r[key])]
    return float(np.mean(vals)) if vals else math.nan


def _isnan(v):
    return v is None or (isinstance(v, float) and math.isnan(v))


def _prepare(cfg, job):
    ccfg = cfg.circuit_config(job.variant, job.proportion)
    circuit = build_circuit(ccfg, job.seed)
    return circuit


def _run_auto_job(cfg, job):
    pset = gen_orthogonal_sparse(cfg.n_pyrs, job.K, cfg.a, derive_seed(job.seed, _PATTERNS))
    circuit = _prepare(cfg, job)
    control = circuit.copy() if cfg.untrained_control else None
    rate_log = []
    run_store_phase(circuit, pset, cfg, job.seed, rate_log)
    trials, control_jac = [], []
    for k, target in enumerate(pset.patterns):
        cue = mask_cue(target, cfg.mask_frac, derive_seed(job.seed, _CUES, k))
        chance = mt.chance_prototype(pset, k)
        rr = run_recall_trial(circuit, cue, target, chance, pset.budget, cfg, job.seed)
        trials.append(_trial_record(job, k, 0, rr, float(rr.rates.mean())))
        if control is not None:
            cr = run_recall_trial(control, cue, target, chance, pset.budget, cfg, job.seed)
            control_jac.append(cr.margins["jaccard"]["target"])
    values = {m: _mean_over(trials, f"{m}_margin") for m in mt.METRICS}
    values["jaccard_target"] = _mean_over(trials, "jaccard_target")
    if control is not None:
        values["control_jaccard_target"] = float(np.mean(control_jac))
    values["pyrs_rate_recall"] = _mean_over(trials, "pyrs_rate")
    values["pyrs_rate_store"] = float(np.mean(rate_log)) if rate_log else 0.0
    return values, trials


def _run_paired_job(cfg, job):
    pset = gen_paired(cfg.n_pyrs, job.K, cfg.a, derive_seed(job.seed, _PATTERNS))
    circuit = _prepare(cfg, job)
    rate_log = []
    run_store_phase(circuit, pset, cfg, job.seed, rate_log)
    trials = []
    jac_a, jac_b = [], []
    for k, (a_pat, b_pat) in enumerate(pset.pairs):
        cue = mask_cue(a_pat, cfg.mask_frac, derive_seed(job.seed, _CUES, k))
        chance = mt.chance_prototype(pset, k)
        rr = run_recall_trial(circuit, cue, b_pat, chance, pset.budget, cfg, job.seed)
        rec = _trial_record(job, k, 0, rr, float(rr.rates.mean()))
        rec["jac_a"] = mt.jaccard(rr.recalled, a_pat.bits)
        rec["jac_b"] = mt.jaccard(rr.recalled, b_pat.bits)
        jac_a.append(rec["jac_a"])
        jac_b.append(rec["jac_b"])
        trials.append(rec)
    values = {m: _mean_over(trials, f"{m}_margin") for m in mt.METRICS}
    values["jac_b"] = float(np.mean(jac_b))
    values["jac_a"] = float(np.mean(jac_a))
    values["selectivity"] = values["jac_b"] - values["jac_a"]
    values["pyrs_rate_recall"] = _mean_over(trials, "pyrs_rate")
    values["pyrs_rate_store"] = float(np.mean(rate_log)) if rate_log else 0.0
    return values, trials


def _run_temporal_job(cfg, job):
    """Store one sequence per item index (K sequences), recall each from its first frame."""
    sequences = [
        gen_sequence(cfg.n_pyrs, cfg.temporal.frames, cfg.a, cfg.temporal.shift,
                     derive_seed(job.seed, _PATTERNS, k))
        for k in range(job.K)
    ]
    circuit = _prepare(cfg, job)
    rate_log = []
    for seq in sequences:
        run_store_phase(circuit, seq, cfg, job.seed, rate_log)
    trials = []
    m_t2 = {m: [] for m in mt.METRICS}
    m_traj = {m: [] for m in mt.METRICS}
    frames = cfg.temporal.frames
    for k, seq in enumerate(sequences):
        first = seq.patterns[0]
        cue = mask_cue(first, cfg.mask_frac, derive_seed(job.seed, _CUES, k))
        ticks = frames * cfg.t_present
        raster = _recall_rates(circuit, cue.bits, cfg, job.seed, ticks, free_after=cfg.t_present)
        per_frame = []
        for f in range(frames):
            rates = raster[f * cfg.t_present:(f + 1) * cfg.t_present].mean(axis=0)
            rr = mt.evaluate_recall(rates, seq.patterns[f].bits, mt.chance_prototype(seq, f), seq.budget)
            trials.append(_trial_record(job, k, f, rr, float(rates.mean())))
            per_frame.append(rr)
        for m in mt.METRICS:
            m_t2[m].append(per_frame[1].margin(m))
            m_traj[m].append(_nanmean([rr.margin(m) for rr in per_frame[1:]]))
    values = {}
    for m in mt.METRICS:
        values[f"{m}_t2"] = _nanmean(m_t2[m])
        values[f"{m}_traj"] = _nanmean(m_traj[m])
        values[m] = values[f"{m}_traj"]
    for f in range(frames):
        frame_trials = [t for t in trials if t["frame"] == f]
        for m in mt.METRICS:
            values[f"{m}_frame{f}"] = _mean_over(frame_trials, f"{m}_margin")
    values["pyrs_rate_recall"] = _mean_over(trials, "pyrs_rate")
    values["pyrs_rate_store"] = float(np.mean(rate_log)) if rate_log else 0.0
    return values, trials


def _nanmean(values):
    vals = [v for v in values if not _isnan(v)]
    return float(np.mean(vals)) if vals else math.nan


_RUNNERS = {
    "auto": _run_auto_job,
    "inhib_sweep": _run_auto_job,
    "paired": _run_paired_job,
    "temporal": _run_temporal_job,
}


def run_job(cfg_dict, job):
    cfg = ExperimentConfig.from_dict(cfg_dict)
    values, trials = _RUNNERS[job.regime](cfg, job)
    return job, values, trials


# -- report assembly ----------------------------------------------------------------

def plan_jobs(cfg):
    jobs = []
    proportions = cfg.inhib_proportions if cfg.regime == "inhib_sweep" else [None]
    for variant in cfg.variants():
        for arm, prop in enumerate(proportions):
            for K in cfg.K_list:
                for seed in cfg.seeds:
                    jobs.append(Job(cfg.regime, variant, K, prop, seed, arm))
    return jobs


def _execute(cfg, jobs, n_jobs=1):
    cfg_dict = cfg.to_dict()
    if n_jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run_job, [cfg_dict] * len(jobs), jobs))
    else:
        results = [run_job(cfg_dict, job) for job in jobs]
    return results


def _json_float(v):
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def aggregate_rows(rows):
    """SeedStats for every scalar in the rows, keyed by value name."""
    keys = list(rows[0]["values"])
    out = {}
    for key in keys:
        vals = [math.nan if r["values"][key] is None else r["values"][key] for r in rows]
        try:
            out[key] = mt.seed_stats(vals).to_dict()
        except mt.UndefinedStatisticError:
            out[key] = {"mean": None, "std": None, "n": 0, "values": [None] * len(vals),
                        "n_undefined": len(vals)}
        out[key]["values"] = [_json_float(v) for v in out[key]["values"]]
    return out


def _cell_key(cell):
    variant, K, prop, arm = cell
    return {"variant": variant, "K": K, "proportion": prop, "arm": arm}


def _find_cell(cells, variant, K, arm=0):
    for c in cells:
        if c["variant"] == variant and c["K"] == K and c["arm"] == arm:
            return c
    raise KeyError((variant, K, arm))


def compare_cells(treatment, control):
    """Welch t and Cohen's d on per-seed Jaccard margins (treatment minus control)."""
    xs = [r["values"]["jaccard"] for r in treatment["seeds"] if r["values"]["jaccard"] is not None]
    ys = [r["values"]["jaccard"] for r in control["seeds"] if r["values"]["jaccard"] is not None]
    out = {"metric": "jaccard", "mean_diff": _json_float(np.mean(xs) - np.mean(ys)) if xs and ys else None}
    try:
        w = mt.welch_t(xs, ys)
        out.update(t=w.t, df=w.df, p_one_sided=w.p_one_sided)
    except mt.UndefinedStatisticError as exc:
        out.update(t=None, df=None, p_one_sided=None, note=str(exc))
    try:
        d = mt.cohens_d(xs, ys)
        out.update(cohens_d_pooled=d.pooled, cohens_d_control_sd=_json_float(d.control_sd),
                   cohens_d_treatment_sd=_json_float(d.treatment_sd))
    except mt.UndefinedStatisticError:
        out.update(cohens_d_pooled=None, cohens_d_control_sd=None, cohens_d_treatment_sd=None)
    return out


def build_comparisons(cfg, cells):
    comparisons = []
    if cfg.regime == "inhib_sweep":
        base = cfg.inhib_proportions[0]
        for K in cfg.K_list:
            control = _find_cell(cells, FULL, K, 0)
            for arm, prop in enumerate(cfg.inhib_proportions[1:], start=1):
                treatment = _find_cell(cells, FULL, K, arm)
                row = {"K": K, "control_proportion": base, "treatment_proportion": prop}
                row.update(compare_cells(treatment, control))
                row["control_pyrs_rate"] = control["aggregates"]["pyrs_rate_recall"]["mean"]
                row["treatment_pyrs_rate"] = treatment["aggregates"]["pyrs_rate_recall"]["mean"]
                comparisons.append(row)
    elif cfg.variant == "both":
        for K in cfg.K_list:
            full = _find_cell(cells, FULL, K)
            mini = _find_cell(cells, MINIMAL, K)
            row = {"K": K, "diff": {}}
            for m in mt.METRICS:
                a, b = full["aggregates"][m]["mean"], mini["aggregates"][m]["mean"]
                row["diff"][m] = None if a is None or b is None else a - b
            s_full = full["aggregates"]["jaccard"]["std"] or 0.0
            s_mini = mini["aggregates"]["jaccard"]["std"] or 0.0
            sigma = math.sqrt((s_full**2 + s_mini**2) / 2.0)
            row["sigma"] = sigma
            jd = row["diff"]["jaccard"]
            row["scenario"] = mt.classify_scenario(jd, sigma) if jd is not None else "indeterminate"
            row.update(compare_cells(full, mini))
            comparisons.append(row)
    return comparisons


def assemble_report(cfg, results):
    by_cell = {}
    for job, values, trials in results:
        by_cell.setdefault(job.cell, []).append((job, values, trials))
    order = {job.cell: i for i, job in enumerate(plan_jobs(cfg))}
    cells = []
    all_trials = []
    for cell in sorted(by_cell, key=lambda c: order[c]):
        entries = sorted(by_cell[cell], key=lambda e: cfg.seeds.index(e[0].seed))
        rows = [{"seed": job.seed, "values": {k: _json_float(v) for k, v in values.items()}}
                for job, values, _ in entries]
        cell_out = _cell_key(cell)
        cell_out["seeds"] = rows
        cell_out["aggregates"] = aggregate_rows(rows)
        jac = [r["values"]["jaccard"] for r in rows if r["values"]["jaccard"] is not None]
        above, below, sorted_vals = mt.bimodality_report(jac, cfg.bimodality_threshold)
        cell_out["bimodality"] = {"threshold": cfg.bimodality_threshold, "n_above": above,
                                  "n_below": below, "sorted": sorted_vals}
        cells.append(cell_out)
        for _, _, trials in entries:
            all_trials.extend(trials)
    report = {
        "format_version": FORMAT_VERSION,
        "regime": cfg.regime,
        "config": cfg.to_dict(),
        "conventions": {
            "jaccard_empty": 1.0,
            "cosine_zero_vector": 0.0,
            "pearson_zero_variance": None,
            "chance_prototype": "mean of non-target stored items",
            "binarization_budget": "active count of the target",
            "margin": "metric vs target minus metric vs chance prototype",
            "sigma": "root mean square of the two arms' per-seed sd",
        },
        "cells": cells,
        "comparisons": build_comparisons(cfg, cells),
    }
    return report, all_trials


def run_experiment(cfg, n_jobs=1):
    """Run every (cell, seed) job of ``cfg``; returns ``(report, trial_rows)``."""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    results = _execute(cfg, plan_jobs(cfg), n_jobs)
    report, trials = assemble_report(cfg, results)
    report["runtime"] = {"started_utc": started.isoformat(timespec="seconds"),
                         "elapsed_s": round(time.perf_counter() - t0, 3)}
    return report, trials


def run_auto_regime(cfg, n_jobs=1):
    return run_experiment(_with_regime(cfg, "auto"), n_jobs)[0]


def run_paired_regime(cfg, n_jobs=1):
    return run_experiment(_with_regime(cfg, "paired"), n_jobs)[0]


def run_temporal_regime(cfg, n_jobs=1):
    return run_experiment(_with_regime(cfg, "temporal"), n_jobs)[0]


def run_inhib_sweep(cfg, n_jobs=1):
    return run_experiment(_with_regime(cfg, "inhib_sweep"), n_jobs)[0]


def _with_regime(cfg, regime):
    if cfg.regime == regime:
        return cfg
    data = cfg.to_dict()
    data["regime"] = regime
    return ExperimentConfig.from_dict(data)


# -- serialization --------------------------------------------------------------------

TRIAL_COLUMNS = (
    "regime", "variant", "proportion", "arm", "K", "seed", "item", "frame",
    "jaccard_target", "jaccard_chance", "jaccard_margin",
    "cosine_target", "cosine_chance", "cosine_margin",
    "pearson_target", "pearson_chance", "pearson_margin",
    "pyrs_rate",
)


def report_body(report):
    """The report minus its runtime block, serialized canonically."""
    body = {k: v for k, v in report.items() if k != "runtime"}
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False)


def dumps_report(report):
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def trials_csv(trials):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for t in trials:
        writer.writerow(["" if _isnan(t.get(c)) else t.get(c) for c in TRIAL_COLUMNS])
    return buf.getvalue()


def verify_report(report, tol=1e-12):
    """Recompute every aggregate from the per-seed rows; return a list of discrepancies."""
    problems = []
    for cell in report.get("cells", []):
        label = f"{cell['variant']}/K={cell['K']}/p={cell['proportion']}/arm={cell.get('arm', 0)}"
        fresh = aggregate_rows(cell["seeds"])
        stored = cell.get("aggregates", {})
        for key, agg in fresh.items():
            if key not in stored:
                problems.append(f"{label}: aggregate {key!r} missing")
                continue
            for field in ("mean", "std", "n"):
                a, b = stored[key].get(field), agg[field]
                if (a is None) != (b is None) or (a is not None and abs(a - b) > tol * max(1.0, abs(b))):
                    problems.append(f"{label}: {key}.{field} stored {a} but per-seed rows give {b}")
        for key in stored:
            if key not in fresh:
                problems.append(f"{label}: aggregate {key!r} has no per-seed rows")
        jac = [r["values"]["jaccard"] for r in cell["seeds"] if r["values"].get("jaccard") is not None]
        bim = cell.get("bimodality")
        if bim is not None:
            above, below, _ = mt.bimodality_report(jac, bim["threshold"])
            if (above, below) != (bim["n_above"], bim["n_below"]):
                problems.append(f"{label}: bimodality counts stored {bim['n_above']}/{bim['n_below']}, "
                                f"rows give {above}/{below}")
    return problems
