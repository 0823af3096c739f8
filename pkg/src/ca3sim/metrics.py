"""Recall similarity metrics, margins against a chance prototype, and seed statistics.

Conventions for degenerate inputs:

* ``jaccard`` of two all-zero vectors is 1.0;
* ``cosine`` involving a zero vector is 0.0;
* ``pearson`` with a constant input is undefined and returns NaN. NaN margins
  are dropped from aggregates and counted separately.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sps

from .errors import UndefinedStatisticError

METRICS = ("jaccard", "cosine", "pearson")
SCENARIO_A_THRESHOLD = 0.15


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def jaccard(a, b):
    a, b = _pair(a, b)
    a, b = a > 0, b > 0
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def cosine(a, b):
    a, b = _pair(a, b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def pearson(a, b):
    a, b = _pair(a, b)
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(da @ da), np.sqrt(db @ db)
    if sa == 0 or sb == 0:
        return math.nan
    return float(np.clip(da @ db / (sa * sb), -1.0, 1.0))


METRIC_FUNCS = {"jaccard": jaccard, "cosine": cosine, "pearson": pearson}


def binarize_rates(rates, budget, active_only=False):
    """Mark the ``budget`` highest-rate units; ties go to the lower index.

    With ``active_only`` units at rate <= 0 are never marked, so a silent
    recall binarizes to all zeros instead of to the lowest indices.
    """
    rates = np.asarray(rates, dtype=float)
    out = np.zeros(rates.shape[0], dtype=np.int8)
    if active_only:
        budget = min(budget, int((rates > 0).sum()))
    if budget <= 0:
        return out
    order = np.lexsort((np.arange(rates.shape[0]), -rates))
    out[order[:budget]] = 1
    return out


def chance_prototype(pset, target_index):
    """Mean of the stored targets other than ``target_index``.

    Items identical to the target are skipped, so a degenerate set (a single
    item, or a sequence that never moves) yields the zero vector.
    """
    targets = pset.targets()
    target = targets[target_index]
    others = [p.bits for i, p in enumerate(targets) if i != target_index and p != target]
    if not others:
        return np.zeros(target.n)
    return np.mean(np.vstack(others).astype(float), axis=0)


def binarize_prototype(proto, budget):
    """Top-``budget`` units of the prototype, restricted to its positive entries."""
    return binarize_rates(proto, budget, active_only=True)


def margin(metric, recall, target, chance):
    func = METRIC_FUNCS[metric] if isinstance(metric, str) else metric
    return func(recall, target) - func(recall, chance)


@dataclass
class RecallResult:
    rates: np.ndarray
    recalled: np.ndarray
    margins: dict = field(default_factory=dict)

    def margin(self, metric):
        return self.margins[metric]["margin"]


def evaluate_recall(rates, target_bits, chance, budget):
    """Score a recall: Jaccard on binarized vectors, cosine/Pearson on rates.

    The recall is binarized among units that fired, so it holds ``budget``
    units unless fewer were active.
    """
    rates = np.asarray(rates, dtype=float)
    recalled = binarize_rates(rates, budget, active_only=True)
    chance_bits = binarize_prototype(chance, budget)
    margins = {}
    for metric in METRICS:
        if metric == "jaccard":
            vs_target = jaccard(recalled, target_bits)
            vs_chance = jaccard(recalled, chance_bits)
        else:
            vs_target = METRIC_FUNCS[metric](rates, target_bits)
            vs_chance = METRIC_FUNCS[metric](rates, chance)
        margins[metric] = {"target": vs_target, "chance": vs_chance, "margin": vs_target - vs_chance}
    return RecallResult(rates, recalled, margins)


# -- seed-level statistics -------------------------------------------------------

@dataclass
class SeedStats:
    mean: float
    std: float
    n: int
    values: list
    n_undefined: int = 0

    def to_dict(self):
        return {"mean": self.mean, "std": self.std, "n": self.n, "values": list(self.values),
                "n_undefined": self.n_undefined}


def seed_stats(values):
    """Mean and sample (n - 1) standard deviation; NaN entries are excluded and counted."""
    values = [float(v) for v in values]
    finite = [v for v in values if not math.isnan(v)]
    if not finite:
        raise UndefinedStatisticError("seed statistics need at least one defined value")
    arr = np.array(finite)
    std = float(arr.std(ddof=1)) if arr.size >= 2 else 0.0
    return SeedStats(float(arr.mean()), std, int(arr.size), values, len(values) - len(finite))


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_one_sided: float


def welch_t(xs, ys):
    """Welch's unequal-variance t statistic for mean(xs) > mean(ys)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 2 or y.size < 2:
        raise UndefinedStatisticError("Welch's t needs at least two values per sample")
    vx = x.var(ddof=1) / x.size
    vy = y.var(ddof=1) / y.size
    if vx + vy == 0:
        raise UndefinedStatisticError("both samples have zero variance")
    t = (x.mean() - y.mean()) / math.sqrt(vx + vy)
    df = (vx + vy) ** 2 / (vx**2 / (x.size - 1) + vy**2 / (y.size - 1))
    p = float(_sps.t.sf(t, df))
    return WelchResult(float(t), float(df), p)


@dataclass(frozen=True)
class CohensD:
    pooled: float
    control_sd: float
    treatment_sd: float


def cohens_d(xs, ys):
    """Standardized mean difference (xs - ys) under three scale conventions.

    ``pooled`` divides by the pooled sample sd; ``control_sd`` and
    ``treatment_sd`` divide by the sd of ``ys`` and ``xs`` respectively.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 2 or y.size < 2:
        raise UndefinedStatisticError("Cohen's d needs at least two values per sample")
    sx, sy = x.std(ddof=1), y.std(ddof=1)
    pooled = math.sqrt(((x.size - 1) * sx**2 + (y.size - 1) * sy**2) / (x.size + y.size - 2))
    if pooled == 0:
        raise UndefinedStatisticError("zero pooled variance")
    diff = x.mean() - y.mean()

    def _ratio(scale):
        return float(diff / scale) if scale > 0 else math.nan

    return CohensD(float(diff / pooled), _ratio(sy), _ratio(sx))


def bimodality_report(values, threshold):
    vals = sorted(float(v) for v in values)
    above = sum(v >= threshold for v in vals)
    return above, len(vals) - above, vals


def classify_scenario(jaccard_diff, sigma):
    """Map a full-minus-minimal Jaccard margin difference to A, B, C or indeterminate.

    Checked in order A, C, B: a difference above +0.15 is A even when it also
    sits within one sigma of zero.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if jaccard_diff > SCENARIO_A_THRESHOLD:
        return "A"
    if jaccard_diff < 0 and abs(jaccard_diff) >= sigma:
        return "C"
    if abs(jaccard_diff) < sigma:
        return "B"
    return "indeterminate"


def theoretical_capacity(N, a):
    """Classical sparse-coding capacity N / (a ln(1/a))."""
    if not 0.0 < a < 1.0:
        raise ValueError(f"sparsity must lie strictly between 0 and 1, got {a}")
    return N / (a * math.log(1.0 / a))
