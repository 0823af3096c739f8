"""Acetylcholine schedules: a constant level or an encode/consolidate cycle."""

from dataclasses import asdict, dataclass

from .errors import ConfigError

CONSTANT = "constant"
BIMODAL = "bimodal"
ENCODE = "encode"
CONSOLIDATE = "consolidate"


@dataclass(frozen=True)
class AChSchedule:
    mode: str = CONSTANT
    level: float = 1.0
    encode_level: float = 1.0
    consolidate_level: float = 0.0
    t_encode: int = 10
    t_consolidate: int = 10
    start_phase: str = ENCODE

    def __post_init__(self):
        if self.mode not in (CONSTANT, BIMODAL):
            raise ConfigError(f"unknown ACh mode {self.mode!r}", "ach.mode")
        for name in ("level", "encode_level", "consolidate_level"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"must lie in [0, 1], got {value}", f"ach.{name}")
        if self.t_encode < 1 or self.t_consolidate < 1:
            raise ConfigError("phase durations must be at least one tick", "ach")
        if self.start_phase not in (ENCODE, CONSOLIDATE):
            raise ConfigError(f"unknown phase {self.start_phase!r}", "ach.start_phase")

    @property
    def period(self):
        return self.t_encode + self.t_consolidate

    @classmethod
    def constant(cls, level):
        return cls(mode=CONSTANT, level=level)

    @classmethod
    def bimodal(cls, t_encode=10, t_consolidate=10, encode_level=1.0, consolidate_level=0.0,
                start_phase=ENCODE):
        return cls(BIMODAL, 1.0, encode_level, consolidate_level, t_encode, t_consolidate, start_phase)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc), "ach") from None


def phase_at(schedule, tick):
    if tick < 0:
        raise ValueError(f"tick must be non-negative, got {tick}")
    if schedule.mode == CONSTANT:
        return ENCODE
    t = tick % schedule.period
    if schedule.start_phase == CONSOLIDATE:
        return CONSOLIDATE if t < schedule.t_consolidate else ENCODE
    return ENCODE if t < schedule.t_encode else CONSOLIDATE


def ach_at(schedule, tick):
    if schedule.mode == CONSTANT:
        if tick < 0:
            raise ValueError(f"tick must be non-negative, got {tick}")
        return schedule.level
    if phase_at(schedule, tick) == ENCODE:
        return schedule.encode_level
    return schedule.consolidate_level
