"""Radial source - line - ideal OLTC - load circuit.

The steady state is a square system of twelve real equations in the real
and imaginary parts of six phasors (source, primary, primary current,
secondary, secondary current, load).  Complex power is ``S = V conj(I)``,
so a lagging load absorbs positive Q.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .perunit import BaseValues, make_base, to_pu

NEWTON_TOL = 1e-10
NEWTON_MAXIT = 50

# Index layout of the real state vector.
RE, IM = 0, 6
V1, VP, IP, VS, IS, VL = range(6)
VL_RE = RE + VL
VL_IM = IM + VL


class NetworkError(RuntimeError):
    pass


class NonConvergenceError(NetworkError):
    def __init__(self, message, state=None, residual_norm=math.nan):
        super().__init__(message)
        self.state = state
        self.residual_norm = residual_norm


class NearNoseError(NetworkError):
    """The network Jacobian is numerically singular (maximum-loading point)."""


class SingularLoadVoltageError(NetworkError):
    pass


@dataclass(frozen=True)
class NetworkParams:
    v1_mag: float = 1.0
    x_line: float = 0.4
    base: BaseValues = field(default_factory=lambda: make_base(100e3, 100e6))

    def __post_init__(self):
        if not (self.v1_mag > 0 and self.x_line > 0):
            raise ValueError(f"v1_mag and x_line must be positive, got {self.v1_mag}, {self.x_line}")

    @classmethod
    def from_physical(cls, x_ohm=40.0, v_base=100e3, s_base=100e6, v1_pu=1.0):
        base = make_base(v_base, s_base)
        return cls(v1_pu, to_pu(x_ohm, base, "impedance"), base)


@dataclass(frozen=True)
class Params:
    alpha: float
    n_tap: float = 1.0

    def __post_init__(self):
        if not self.n_tap > 0:
            raise ValueError(f"tap ratio must be positive, got {self.n_tap}")
        if self.alpha < 0:
            raise ValueError(f"loading factor must be non-negative, got {self.alpha}")


@dataclass(frozen=True)
class SystemState:
    v1: complex
    vp: complex
    ip: complex
    vs: complex
    is_: complex
    vl: complex

    def phasors(self):
        return (self.v1, self.vp, self.ip, self.vs, self.is_, self.vl)

    def to_vector(self):
        ph = self.phasors()
        return np.array([c.real for c in ph] + [c.imag for c in ph])

    @classmethod
    def from_vector(cls, z):
        z = np.asarray(z, dtype=float)
        return cls(*(complex(z[k], z[k + 6]) for k in range(6)))

    @classmethod
    def flat(cls, v=1.0):
        """Unloaded guess: every voltage ``v``, no current."""
        return cls(v, v, 0j, v, 0j, v)

    @property
    def load_power(self):
        return self.vl * self.is_.conjugate()


def pack(net, load):
    return np.array((net.v1_mag, net.x_line) + tuple(load.packed()), dtype=float)


def _vector(z):
    return z.to_vector() if isinstance(z, SystemState) else np.asarray(z, dtype=float)


def residual(z, p, net, load):
    """Twelve steady-state mismatches at state ``z`` and parameters ``p``.

    Order: source magnitude, line KVL (re, im), transformer voltage (re,
    im), transformer current (re, im), secondary/load KVL (re, im), load
    active power, load reactive power, load angle reference.
    """
    return kernels.residual(_vector(z), p.alpha, p.n_tap, pack(net, load))


def jacobian(z, p, net, load):
    """Analytic ``dF/dz`` (12x12) and ``dF/dN`` (12,)."""
    zv = _vector(z)
    if zv[VL_RE] == 0.0 and zv[VL_IM] == 0.0:
        raise SingularLoadVoltageError("load voltage is zero; load derivative undefined")
    return kernels.jacobian(zv, p.alpha, p.n_tap, pack(net, load))


def state_from_voltage(v_l, alpha, n_tap, net, load):
    """Expand a load voltage and loading into the full consistent state."""
    pu, qu = load.unit_power(v_l)
    s = complex(alpha * float(pu), alpha * float(qu))
    is_ = s.conjugate() / v_l
    ip = is_ / n_tap
    vp = complex(n_tap * v_l, 0.0)
    v1 = vp + 1j * net.x_line * ip
    return SystemState(v1, vp, ip, complex(v_l, 0.0), is_, complex(v_l, 0.0))


def alpha_quadratic(v_l, n_tap, net, load):
    """Coefficients (a, b, c) of the loading quadratic at fixed load voltage."""
    pu, qu = (float(t) for t in load.unit_power(v_l))
    x = net.x_line
    w2 = (n_tap * v_l) ** 2
    return x * x * (pu * pu + qu * qu) / w2, 2.0 * x * qu, w2 - net.v1_mag ** 2


def solve_alpha_closed_form(v_l, n_tap, net, load, roots_only=False):
    """All loadings ``alpha >= 0`` that place the load voltage at ``v_l``.

    Eliminating the network equations at fixed real load voltage leaves
    ``a alpha**2 + b alpha + c = 0``.  Returns ascending
    ``[(alpha, SystemState), ...]`` with zero, one or two entries.
    """
    if not v_l > 0:
        raise ValueError(f"load voltage must be positive, got {v_l}")
    a, b, c = alpha_quadratic(v_l, n_tap, net, load)
    if a == 0.0:
        roots = [0.0] if (b == 0.0 and c == 0.0) else ([-c / b] if b != 0.0 else [])
    else:
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            roots = []
        else:
            sq = math.sqrt(disc)
            t = -0.5 * (b + math.copysign(sq, b))
            roots = [t / a, c / t] if t != 0.0 else [0.0]
    # Roundoff at the unloaded point can leave a root at -1e-17.
    tol = 1e-12 * max(1.0, abs(c))
    roots = sorted({max(r, 0.0) for r in roots if r >= -tol})
    if roots_only:
        return roots
    return [(r, state_from_voltage(v_l, r, n_tap, net, load)) for r in roots]


def solve_voltage_roots(p, net, load):
    """Positive real load-voltage magnitudes solving the network at ``p``.

    Uses the degree-six polynomial in v obtained from the loading quadratic;
    returned in descending order (upper-branch solution first).
    """
    vr = load.v_ref
    pp = np.array([load.p_z / vr ** 2, load.p_i / vr, load.p_p]) * load.p_scale
    qq = np.array([load.q_z / vr ** 2, load.q_i / vr, load.q_p]) * load.q_scale
    n2 = p.n_tap ** 2
    x, a = net.x_line, p.alpha
    poly = np.zeros(7)
    poly[2] += n2 * n2                                  # N^4 v^4
    poly[-5:] += 2.0 * x * a * n2 * np.convolve(qq, [1.0, 0.0, 0.0])
    poly[-5:] += (x * a) ** 2 * (np.convolve(pp, pp) + np.convolve(qq, qq))
    poly[4] -= net.v1_mag ** 2 * n2                     # V1^2 N^2 v^2
    nz = np.flatnonzero(np.abs(poly) > 0)
    if len(nz) == 0:
        return []
    roots = np.roots(poly[nz[0]:])
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-7 * max(1.0, abs(r)) and r.real > 0:
            out.append(float(r.real))
    return sorted(out, reverse=True)


def solve_newton(p, net, load, guess, tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    """Damped Newton solve of the steady state from ``guess``."""
    z0 = _vector(guess)
    if not np.all(np.isfinite(z0)):
        raise ValueError("initial guess must be finite")
    z, status, iters, norm = kernels.newton(z0, p.alpha, p.n_tap, pack(net, load), tol, maxit)
    if status == kernels.SINGULAR:
        raise NearNoseError(f"singular Jacobian after {iters} iterations (residual {norm:.3e})")
    if status != kernels.OK:
        raise NonConvergenceError(
            f"Newton did not converge in {maxit} iterations (residual {norm:.3e})",
            SystemState.from_vector(z), norm)
    return SystemState.from_vector(z)


def upper_branch_state(p, net, load):
    """Solve for the highest-voltage equilibrium at ``p``; None if infeasible."""
    for v in solve_voltage_roots(p, net, load):
        guess = state_from_voltage(v, p.alpha, p.n_tap, net, load)
        try:
            return solve_newton(p, net, load, guess)
        except NetworkError:
            continue
    return None


def solve_newton_at_voltage(v_l, n_tap, net, load, guess, alpha_guess,
                            tol=NEWTON_TOL, maxit=NEWTON_MAXIT):
    """Newton solve with the load voltage fixed and the loading free.

    The twelve network equations are bordered by ``Re(vl) = v_l``, and
    ``alpha`` joins the unknowns.  This is the corrector for voltage-
    parametrised tracing; returns ``(alpha, SystemState)``.
    """
    x = np.append(_vector(guess), float(alpha_guess))
    if not np.all(np.isfinite(x)):
        raise ValueError("initial guess must be finite")
    lp = pack(net, load)

    def full(x):
        f = kernels.residual(x[:12], x[12], n_tap, lp)
        return np.append(f, x[VL_RE] - v_l)

    f = full(x)
    for _ in range(maxit):
        if np.max(np.abs(f)) < tol:
            return float(x[12]), SystemState.from_vector(x[:12])
        J, _ = kernels.jacobian(x[:12], x[12], n_tap, lp)
        pu, qu = load.unit_power(math.hypot(x[VL_RE], x[VL_IM]))
        A = np.zeros((13, 13))
        A[:12, :12] = J
        A[9, 12], A[10, 12] = -float(pu), -float(qu)
        A[12, VL_RE] = 1.0
        dx, ok = _dense_solve(A, -f)
        if not ok:
            raise NearNoseError(f"singular bordered Jacobian at v_l={v_l:.6g}")
        x = x + dx
        f = full(x)
    norm = float(np.max(np.abs(f)))
    if norm < tol:
        return float(x[12]), SystemState.from_vector(x[:12])
    raise NonConvergenceError(f"voltage-fixed Newton did not converge (residual {norm:.3e})",
                              SystemState.from_vector(x[:12]), norm)


def _dense_solve(A, b):
    try:
        return np.linalg.solve(A, b), True
    except np.linalg.LinAlgError:
        return None, False
