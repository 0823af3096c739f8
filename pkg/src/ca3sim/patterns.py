"""Synthetic sparse binary patterns, partial cues and current injection.

Text format for pattern sets: optional ``#`` header lines followed by one
pattern per line written as ``0``/``1`` characters. The first header line is
``# kind=<auto|paired|sequence> K=<items> N=<length>``. Paired sets list A_1,
B_1, A_2, B_2, ... on consecutive lines.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

AUTO = "auto"
PAIRED = "paired"
SEQUENCE = "sequence"
KINDS = (AUTO, PAIRED, SEQUENCE)


@dataclass(frozen=True)
class Pattern:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
            raise ValueError("pattern bits must be a binary vector")
        object.__setattr__(self, "bits", bits.astype(np.int8))

    @property
    def n(self):
        return self.bits.shape[0]

    @property
    def active(self):
        return int(self.bits.sum())

    @property
    def sparsity(self):
        return self.active / self.n

    @property
    def support(self):
        return set(np.flatnonzero(self.bits).tolist())

    def __eq__(self, other):
        return isinstance(other, Pattern) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())


@dataclass
class PatternSet:
    kind: str
    patterns: list = field(default_factory=list)
    pairs: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown pattern-set kind {self.kind!r}", "kind")
        items = self.all_patterns()
        if not items:
            raise ValueError("a pattern set holds at least one item")
        if len({p.n for p in items}) != 1:
            raise ValueError("all patterns in a set must have the same length")

    @property
    def K(self):
        return len(self.pairs) if self.kind == PAIRED else len(self.patterns)

    @property
    def n(self):
        return self.all_patterns()[0].n

    @property
    def budget(self):
        """Active count used to binarize recalls (per stored target)."""
        targets = [b for _, b in self.pairs] if self.kind == PAIRED else self.patterns
        return max(p.active for p in targets)

    def all_patterns(self):
        if self.kind == PAIRED:
            return [p for pair in self.pairs for p in pair]
        return list(self.patterns)

    def targets(self):
        return [b for _, b in self.pairs] if self.kind == PAIRED else list(self.patterns)


def active_count(n, a):
    return int(math.ceil(a * n - 1e-12))


def gen_orthogonal_sparse(N, K, a, seed):
    """K patterns of exactly ceil(aN) active bits with minimal mutual overlap.

    Units are assigned greedily: each new bit goes to the unit that keeps the
    worst overlap with earlier patterns lowest, then to the least-used unit,
    then by a seeded random priority. When K * ceil(aN) <= N the supports come
    out pairwise disjoint.
    """
    m = active_count(N, a)
    if m < 1:
        raise ConfigError(f"sparsity {a} gives zero active bits at N={N}", "a")
    if m > N:
        raise ConfigError(f"sparsity {a} asks for more than N={N} active bits", "a")
    if K < 1:
        raise ConfigError("K must be at least one", "K")
    rng = np.random.default_rng(seed)
    members = np.zeros((0, N), dtype=np.int16)
    usage = np.zeros(N, dtype=np.int64)
    patterns = []
    for _ in range(K):
        priority = rng.permutation(N)
        overlap = np.zeros(members.shape[0], dtype=np.int64)
        chosen = np.zeros(N, dtype=bool)
        for _ in range(m):
            if members.shape[0]:
                worst = (overlap[:, None] + members).max(axis=0)
            else:
                worst = np.zeros(N, dtype=np.int64)
            worst = np.where(chosen, np.iinfo(np.int64).max, worst)
            unit = np.lexsort((priority, usage, worst))[0]
            chosen[unit] = True
            usage[unit] += 1
            if members.shape[0]:
                overlap += members[:, unit]
        bits = chosen.astype(np.int8)
        members = np.vstack([members, bits[None, :].astype(np.int16)])
        patterns.append(Pattern(bits))
    return PatternSet(AUTO, patterns=patterns)


def gen_paired(N, K, a, seed):
    """K (A, B) pairs; A lives on the first half of the units, B on the second."""
    half = N // 2
    if half < 1:
        raise ConfigError("paired sets need N >= 2", "N")
    ss = np.random.SeedSequence([seed, 2])
    seed_a, seed_b = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    set_a = gen_orthogonal_sparse(half, K, a, seed_a)
    set_b = gen_orthogonal_sparse(N - half, K, a, seed_b)
    pairs = []
    for pa, pb in zip(set_a.patterns, set_b.patterns):
        bits_a = np.concatenate([pa.bits, np.zeros(N - half, dtype=np.int8)])
        bits_b = np.concatenate([np.zeros(half, dtype=np.int8), pb.bits])
        pairs.append((Pattern(bits_a), Pattern(bits_b)))
    return PatternSet(PAIRED, pairs=pairs)


def gen_sequence(N, frames, a, shift, seed, support=None):
    """Frames whose support shifts circularly by ``shift`` units per step."""
    if frames < 2:
        raise ConfigError("a sequence needs at least two frames", "frames")
    rng = np.random.default_rng(seed)
    if support is None:
        m = active_count(N, a)
        if m < 1:
            raise ConfigError(f"sparsity {a} gives zero active bits at N={N}", "a")
        support = rng.choice(N, size=m, replace=False)
    bits = np.zeros(N, dtype=np.int8)
    bits[np.asarray(list(support), dtype=int)] = 1
    return PatternSet(SEQUENCE, patterns=[Pattern(np.roll(bits, shift * t)) for t in range(frames)])


def mask_cue(pattern, mask_frac, seed):
    """Silence floor(mask_frac * active) of the active bits, chosen by ``seed``."""
    if not 0.0 <= mask_frac <= 1.0:
        raise ConfigError(f"mask_frac must lie in [0, 1], got {mask_frac}", "mask_frac")
    active = np.flatnonzero(pattern.bits)
    n_drop = int(math.floor(mask_frac * active.size + 1e-12))
    rng = np.random.default_rng(seed)
    drop = rng.choice(active, size=n_drop, replace=False) if n_drop else []
    bits = pattern.bits.copy()
    bits[drop] = 0
    return Pattern(bits)


def to_currents(pattern, T, mode="dc", amplitude=1.5, p_high=1.0, p_low=0.0, seed=0):
    """Expand a pattern into a (T, N) current array.

    ``dc`` repeats ``amplitude * bits`` every tick; ``bernoulli`` emits
    ``amplitude`` on each unit and tick with probability ``p_high`` for active
    bits and ``p_low`` for silent ones.
    """
    if T < 1:
        raise ConfigError("T must be at least one tick", "T")
    bits = pattern.bits if isinstance(pattern, Pattern) else np.asarray(pattern)
    if mode == "dc":
        return np.tile(amplitude * bits.astype(float), (T, 1))
    if mode == "bernoulli":
        rng = np.random.default_rng(seed)
        prob = np.where(bits == 1, p_high, p_low)
        return amplitude * (rng.random((T, bits.shape[0])) < prob).astype(float)
    raise ConfigError(f"unknown injection mode {mode!r}", "injection.mode")


def format_pattern_set(pset):
    lines = [f"# kind={pset.kind} K={pset.K} N={pset.n}"]
    lines += ["".join("1" if b else "0" for b in p.bits) for p in pset.all_patterns()]
    return "\n".join(lines) + "\n"


def parse_pattern_set(text):
    kind = AUTO
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if token.startswith("kind="):
                    kind = token.split("=", 1)[1]
            continue
        if set(line) - {"0", "1"}:
            raise ValueError(f"line {lineno}: only '0' and '1' are allowed")
        rows.append(Pattern(np.array([c == "1" for c in line], dtype=np.int8)))
    if kind == PAIRED:
        if len(rows) % 2:
            raise ValueError("paired set needs an even number of rows")
        return PatternSet(PAIRED, pairs=list(zip(rows[::2], rows[1::2])))
    return PatternSet(kind, patterns=rows)


def write_pattern_set(pset, path):
    with open(path, "w") as fh:
        fh.write(format_pattern_set(pset))


def read_pattern_set(path):
    with open(path) as fh:
        return parse_pattern_set(fh.read())
