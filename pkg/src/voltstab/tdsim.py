"""Time-domain simulation of the tap-changer DAE.

The tap ratio is integrated with classical RK4; at every stage the
network equations are re-solved by Newton, warm-started from the most
recent algebraic state.  Losing the solution (or jumping to another
branch) ends the run as a voltage collapse.
"""
import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .modal import OltcParams
from .network import NetworkError, Params, SystemState, pack, solve_newton

MAX_STAGE_JUMP = 0.05
TRAJECTORY_HEADER = ["t_s", "n_tap", "v_l_pu", "p_pu", "q_pu"]


class InvalidStartError(RuntimeError):
    pass


class NotMeasurableError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    alpha: float
    n_initial: float
    oltc: OltcParams
    t_end: float
    dt: float | None = None
    guess: SystemState | None = None

    def __post_init__(self):
        dt = self.oltc.tau / 100.0 if self.dt is None else self.dt
        object.__setattr__(self, "dt", dt)
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        if not self.t_end >= dt:
            raise ValueError(f"t_end ({self.t_end}) must be at least dt ({dt})")
        if self.oltc.v_ref is None:
            raise ValueError("simulation needs an explicit regulation target oltc.v_ref")


class TrajectoryPoint(NamedTuple):
    t: float
    n_tap: float
    v_l: float
    p_load: float
    q_load: float


@dataclass
class Trajectory:
    t: np.ndarray
    n_tap: np.ndarray
    v_l: np.ndarray
    p_load: np.ndarray
    q_load: np.ndarray
    collapsed: bool = False
    final_state: SystemState | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.t)

    def __getitem__(self, i):
        return TrajectoryPoint(float(self.t[i]), float(self.n_tap[i]), float(self.v_l[i]),
                               float(self.p_load[i]), float(self.q_load[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def t_collapse(self):
        if not self.collapsed:
            return None
        return float(self.t[-1]) if len(self.t) else 0.0


def simulate(cfg, net, load):
    """Integrate the OLTC dynamics at fixed loading ``cfg.alpha``."""
    guess = cfg.guess if cfg.guess is not None else SystemState.flat(net.v1_mag / cfg.n_initial)
    try:
        start = solve_newton(Params(cfg.alpha, cfg.n_initial), net, load, guess)
    except NetworkError as exc:
        raise InvalidStartError(f"initial network solve failed: {exc}") from exc
    if start.vl.real <= 0:
        raise InvalidStartError("initial solve reached a non-physical load voltage")
    nsteps = int(math.floor(cfg.t_end / cfg.dt + 1e-9))
    t, n, v, p, q, status, z = kernels.rk4_oltc(
        start.to_vector(), cfg.n_initial, cfg.alpha, cfg.oltc.tau, cfg.oltc.v_ref, cfg.dt,
        nsteps, pack(net, load), max_jump=MAX_STAGE_JUMP)
    return Trajectory(t, n, v, p, q, status == kernels.COLLAPSED, SystemState.from_vector(z))


def measure_decay_rate(trajectory, n_eq, lo=1e-8, hi=1e-2, min_points=10):
    """Exponential rate [1/s] of |N(t) - n_eq| from a log-linear fit.

    Only samples with deviation in ``[lo, hi]`` are used, and only the
    leading run of them, so the fit sees the linear regime.  Negative
    means decay.
    """
    dev = np.abs(np.asarray(trajectory.n_tap) - n_eq)
    t = np.asarray(trajectory.t)
    inside = (dev >= lo) & (dev <= hi)
    idx = np.flatnonzero(inside)
    if len(idx) == 0:
        raise NotMeasurableError("no samples in the linear regime")
    # First contiguous run of in-range samples.
    breaks = np.flatnonzero(np.diff(idx) != 1)
    run = idx[: breaks[0] + 1] if len(breaks) else idx
    if len(run) < min_points:
        raise NotMeasurableError(f"only {len(run)} samples in the linear regime")
    slope, _ = np.polyfit(t[run], np.log(dev[run]), 1)
    return float(slope)


def write_trajectory(fh, trajectory):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TRAJECTORY_HEADER)
    for row in zip(trajectory.t, trajectory.n_tap, trajectory.v_l,
                   trajectory.p_load, trajectory.q_load):
        w.writerow([f"{x:.9g}" for x in row])
    if trajectory.collapsed:
        fh.write(f"# collapsed at t={trajectory.t_collapse:.9g}\n")


def trajectory_to_csv(trajectory):
    buf = io.StringIO()
    write_trajectory(buf, trajectory)
    return buf.getvalue()
