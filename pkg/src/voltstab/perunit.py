"""Per-unit base quantities.

Voltage and power bases are primary; current and impedance bases are
derived from them, so ``z_base * i_base == v_base`` always holds.
"""
from dataclasses import dataclass, field

# Phasors are plain Python complex numbers in per-unit.
Phasor = complex


class InvalidBaseError(ValueError):
    pass


@dataclass(frozen=True)
class BaseValues:
    v_base: float
    s_base: float
    i_base: float = field(init=False)
    z_base: float = field(init=False)

    def __post_init__(self):
        if not (self.v_base > 0 and self.s_base > 0):
            raise InvalidBaseError(
                f"bases must be positive, got v_base={self.v_base}, s_base={self.s_base}")
        object.__setattr__(self, "i_base", self.s_base / self.v_base)
        object.__setattr__(self, "z_base", self.v_base ** 2 / self.s_base)


def make_base(v_base, s_base):
    """Build a :class:`BaseValues` from base voltage [V] and base power [W]."""
    return BaseValues(float(v_base), float(s_base))


_KINDS = {
    "voltage": "v_base",
    "power": "s_base",
    "current": "i_base",
    "impedance": "z_base",
}


def _base_for(kind, base):
    try:
        return getattr(base, _KINDS[kind])
    except KeyError:
        raise ValueError(f"unknown quantity kind {kind!r}; expected one of {sorted(_KINDS)}") from None


def to_pu(value, base, kind):
    """Convert a physical value (V, W/var/VA, A or ohm) to per-unit."""
    return value / _base_for(kind, base)


def from_pu(value, base, kind):
    return value * _base_for(kind, base)
