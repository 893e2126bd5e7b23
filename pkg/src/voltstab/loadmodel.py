"""Quadratic (ZIP) voltage-dependent load models.

Active and reactive power are both written as

    P = alpha * p_scale * (p_z * u**2 + p_i * u + p_p),   u = v / v_ref

and analogously for Q.  The same form covers the fitted air-conditioner
polynomials and the linear comparison loads.
"""
import csv
import json
import math
import sys
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

# Nominals of the single device whose reactive/active ratio scales the
# aircon preset, in W and var.
AIRCON_P_NOMINAL_W = 494.79
AIRCON_Q_NOMINAL_VAR = 39.31
AIRCON_P_COEFFS = (2.175, -3.521, 2.347)
AIRCON_Q_COEFFS = (81.870, -143.147, 62.270)
AIRCON_VALIDITY = (0.60, 1.06)

# Linear loads hold at every positive voltage.
UNBOUNDED = (sys.float_info.min, math.inf)

CSV_HEADER = ("voltage_V", "active_power_W", "reactive_power_var")


class LoadDomainError(ValueError):
    pass


class RankDeficiencyError(ValueError):
    pass


@dataclass(frozen=True)
class LoadModel:
    p_z: float
    p_i: float
    p_p: float
    p_scale: float
    q_z: float
    q_i: float
    q_p: float
    q_scale: float
    v_ref: float = 1.0
    validity: tuple = UNBOUNDED
    name: str = "custom"
    # Physical nominals, only carried for model files.
    p_nominal_w: float | None = field(default=None, compare=False)
    q_nominal_var: float | None = field(default=None, compare=False)
    v_nominal_v: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.v_ref > 0:
            raise ValueError(f"v_ref must be positive, got {self.v_ref}")
        lo, hi = self.validity
        if not 0 < lo <= hi:
            raise ValueError(f"invalid validity interval {self.validity}")

    @property
    def p_coeffs(self):
        return (self.p_z, self.p_i, self.p_p)

    @property
    def q_coeffs(self):
        return (self.q_z, self.q_i, self.q_p)

    def packed(self):
        """Coefficients in the flat order used by the kernels."""
        return (self.p_z, self.p_i, self.p_p, self.p_scale,
                self.q_z, self.q_i, self.q_p, self.q_scale, self.v_ref)

    def unit_power(self, v):
        """(P, Q) at loading factor 1; vectorised over ``v``."""
        u = np.asarray(v, dtype=float) / self.v_ref
        p = self.p_scale * ((self.p_z * u + self.p_i) * u + self.p_p)
        q = self.q_scale * ((self.q_z * u + self.q_i) * u + self.q_p)
        return p, q

    def unit_power_derivative(self, v):
        u = np.asarray(v, dtype=float) / self.v_ref
        dp = self.p_scale * (2.0 * self.p_z * u + self.p_i) / self.v_ref
        dq = self.q_scale * (2.0 * self.q_z * u + self.q_i) / self.v_ref
        return dp, dq

    def normalized(self):
        """Same shape with ``p_scale = 1``; alpha absorbs the magnitude."""
        if self.p_scale == 0:
            return self
        return replace(self, p_scale=1.0, q_scale=self.q_scale / self.p_scale)


class LoadPower(NamedTuple):
    p: float
    q: float
    extrapolated: bool


def eval_load(model, v, alpha=1.0):
    """Evaluate the load at voltage magnitude ``v`` [pu] and loading ``alpha``.

    Outside ``model.validity`` the polynomial is extrapolated and the
    result is flagged.
    """
    if not v > 0:
        raise LoadDomainError(f"load voltage must be positive, got {v}")
    if alpha < 0:
        raise LoadDomainError(f"loading factor must be non-negative, got {alpha}")
    p, q = model.unit_power(v)
    lo, hi = model.validity
    return LoadPower(alpha * float(p), alpha * float(q), not (lo <= v <= hi))


def preset(name):
    """Return one of the built-in load models.

    ``aircon`` is the identified air-conditioner model; ``resistive`` and
    ``inductive_095`` are constant-impedance loads; the ``constant_power_*``
    presets exist for analytic checks.
    """
    key = name.replace("-", "_").lower()
    tan_phi = math.tan(math.acos(0.95))
    if key == "aircon":
        return LoadModel(*AIRCON_P_COEFFS, 1.0,
                         *AIRCON_Q_COEFFS, AIRCON_Q_NOMINAL_VAR / AIRCON_P_NOMINAL_W,
                         validity=AIRCON_VALIDITY, name="aircon",
                         p_nominal_w=AIRCON_P_NOMINAL_W,
                         q_nominal_var=AIRCON_Q_NOMINAL_VAR, v_nominal_v=230.0)
    if key == "resistive":
        return LoadModel(1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, name="resistive")
    if key == "inductive_095":
        return LoadModel(1.0, 0.0, 0.0, 1.0, tan_phi, 0.0, 0.0, 1.0, name="inductive_095")
    if key == "constant_power_unity":
        return LoadModel(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, name="constant_power_unity")
    if key == "constant_power_095":
        return LoadModel(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, tan_phi, 1.0, name="constant_power_095")
    raise KeyError(f"unknown load preset {name!r}")


PRESETS = ("aircon", "resistive", "inductive_095", "constant_power_unity", "constant_power_095")


@dataclass(frozen=True)
class MeasurementSample:
    voltage: float
    active_power: float
    reactive_power: float

    def __post_init__(self):
        if not self.voltage > 0:
            raise ValueError(f"sample voltage must be positive, got {self.voltage}")


@dataclass
class FitReport:
    p_coeffs: tuple
    q_coeffs: tuple
    p_nominal_w: float
    q_nominal_var: float
    v_nominal_v: float
    validity: tuple
    rms_p: float
    rms_q: float
    n_samples: int
    anchor_voltage_v: float | None = None

    def lines(self, crossings=()):
        fmt = lambda c: ", ".join(f"{x:.9g}" for x in c)
        out = [
            f"samples: {self.n_samples}",
            f"P_n = {self.p_nominal_w:.9g} W, Q_n = {self.q_nominal_var:.9g} var, V_n = {self.v_nominal_v:.9g} V",
            f"p coefficients (z, i, p): {fmt(self.p_coeffs)}",
            f"q coefficients (z, i, p): {fmt(self.q_coeffs)}",
            f"rms residual P/P_n: {self.rms_p:.3e}, Q/Q_n: {self.rms_q:.3e}",
            f"validity: [{self.validity[0]:.6g}, {self.validity[1]:.6g}] pu",
            "Q sign crossings: " + (fmt(crossings) + " pu" if len(crossings) else "none"),
        ]
        if self.anchor_voltage_v is not None:
            out.insert(2, f"nominals taken from sample at {self.anchor_voltage_v:.6g} V")
        return out


def fit_quadratic(samples, v_nominal, p_nominal=None, q_nominal=None):
    """Least-squares fit of P/P_n and Q/Q_n against (u**2, u, 1), u = V/V_n.

    Without explicit nominals, P_n and Q_n are the measured values at the
    sample nearest ``v_nominal``.  Returns ``(LoadModel, FitReport)``.
    """
    if not v_nominal > 0:
        raise ValueError(f"v_nominal must be positive, got {v_nominal}")
    volts = np.array([s.voltage for s in samples], dtype=float)
    p_w = np.array([s.active_power for s in samples], dtype=float)
    q_var = np.array([s.reactive_power for s in samples], dtype=float)
    if len(np.unique(volts)) < 3:
        raise RankDeficiencyError(
            f"need at least 3 distinct voltages, got {len(np.unique(volts))}")

    anchor = None
    if p_nominal is None or q_nominal is None:
        k = int(np.argmin(np.abs(volts - v_nominal)))
        anchor = float(volts[k])
        p_nominal = float(p_w[k]) if p_nominal is None else p_nominal
        q_nominal = float(q_var[k]) if q_nominal is None else q_nominal

    u = volts / v_nominal
    design = np.column_stack([u ** 2, u, np.ones_like(u)])

    def solve(y, scale):
        if scale == 0:
            # A channel that is identically zero fits as the zero polynomial.
            return np.zeros(3), float(np.sqrt(np.mean(y ** 2)))
        target = y / scale
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        rms = float(np.sqrt(np.mean((design @ coef - target) ** 2)))
        return coef, rms

    pc, rms_p = solve(p_w, p_nominal)
    qc, rms_q = solve(q_var, q_nominal)
    validity = (float(u.min()), float(u.max()))
    q_ratio = q_nominal / p_nominal if p_nominal else 0.0
    model = LoadModel(*map(float, pc), 1.0, *map(float, qc), q_ratio,
                      validity=validity, name="fitted",
                      p_nominal_w=float(p_nominal), q_nominal_var=float(q_nominal),
                      v_nominal_v=float(v_nominal))
    report = FitReport(tuple(map(float, pc)), tuple(map(float, qc)), float(p_nominal),
                       float(q_nominal), float(v_nominal), validity, rms_p, rms_q,
                       len(samples), anchor)
    return model, report


def reactive_sign_crossings(model):
    """Positive real voltages [pu] where the reactive polynomial changes sign."""
    a, b, c = model.q_coeffs
    if a == 0 and b == 0:
        return []
    if a == 0:
        roots = [-c / b]
    else:
        disc = b * b - 4 * a * c
        if disc <= 0:
            # A double root touches zero without a sign change.
            return []
        sq = math.sqrt(disc)
        # Numerically stable pair.
        t = -0.5 * (b + math.copysign(sq, b))
        roots = [t / a, c / t] if t != 0 else [0.0]
    return sorted(r * model.v_ref for r in roots if r > 0)


def read_measurements(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [MeasurementSample(float(row["voltage_V"]), float(row["active_power_W"]),
                                  float(row["reactive_power_var"]))
                for row in reader]


def write_measurements(path, samples):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for s in samples:
            w.writerow([f"{s.voltage:.17g}", f"{s.active_power:.17g}", f"{s.reactive_power:.17g}"])


def model_to_dict(model):
    p_w = model.p_nominal_w if model.p_nominal_w is not None else model.p_scale
    q_var = model.q_nominal_var if model.q_nominal_var is not None else model.q_scale
    lo, hi = model.validity
    return {
        "p_coeffs": list(model.p_coeffs),
        "q_coeffs": list(model.q_coeffs),
        "p_scale_W": p_w,
        "q_scale_var": q_var,
        "v_nominal_V": model.v_nominal_v if model.v_nominal_v is not None else 1.0,
        "validity_pu": [lo if lo > UNBOUNDED[0] else None, hi if math.isfinite(hi) else None],
    }


def model_from_dict(data, name="file"):
    """Load a model file; scales are normalized so that ``p_scale = 1``."""
    pc = [float(x) for x in data["p_coeffs"]]
    qc = [float(x) for x in data["q_coeffs"]]
    if len(pc) != 3 or len(qc) != 3:
        raise ValueError("p_coeffs and q_coeffs must each have three entries")
    p_w = float(data["p_scale_W"])
    q_var = float(data["q_scale_var"])
    lo, hi = data.get("validity_pu", [None, None])
    validity = (UNBOUNDED[0] if lo is None else float(lo),
                math.inf if hi is None else float(hi))
    q_ratio = q_var / p_w if p_w else q_var
    return LoadModel(*pc, 1.0 if p_w else 0.0, *qc, q_ratio, validity=validity, name=name,
                     p_nominal_w=p_w, q_nominal_var=q_var,
                     v_nominal_v=float(data.get("v_nominal_V", 1.0)))


def save_model(path, model):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh), name=str(path))
