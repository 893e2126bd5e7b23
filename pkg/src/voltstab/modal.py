"""Modal analysis of the tap-changer dynamics.

The only dynamic state is the tap ratio, driven by
``dN/dt = (V_l(z, N) - V_ref) / tau``.  Eliminating the algebraic
network equations gives a scalar linear system whose eigenvalue is
``tau**-1 * dV_l/dN`` at fixed loading.
"""
import math
from dataclasses import dataclass, replace

from . import kernels
from .network import (VL_RE, NearNoseError, NetworkError, Params, jacobian, solve_newton,
                      state_from_voltage)

DEFAULT_TAU = 10.0
FD_STEP = 1e-6

STABLE = "stable"
UNSTABLE = "unstable"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class OltcParams:
    tau: float = DEFAULT_TAU
    # None: each classified point is its own equilibrium.
    v_ref: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")


def _state(point, net, load):
    if point.state is not None:
        return point.state
    return state_from_voltage(point.v_l, point.alpha, point.n_tap, net, load)


def tap_sensitivity(point, net, load):
    """dV_l/dN at fixed loading via the implicit-function theorem."""
    p = Params(point.alpha, point.n_tap)
    J, dfdn = jacobian(_state(point, net, load), p, net, load)
    dz, ok = kernels.lu_solve(J, -dfdn)
    if not ok:
        raise NearNoseError(f"singular network Jacobian at v_l={point.v_l:.6g}")
    return float(dz[VL_RE])


def tap_sensitivity_fd(point, net, load, step=FD_STEP):
    """dV_l/dN by re-solving the network at N +/- step (centred)."""
    state = _state(point, net, load)
    vals = []
    for n in (point.n_tap + step, point.n_tap - step):
        s = solve_newton(Params(point.alpha, n), net, load, state)
        vals.append(abs(s.vl))
    return (vals[0] - vals[1]) / (2.0 * step)


def oltc_eigenvalue(point, net, load, oltc=OltcParams(), method="implicit"):
    """Eigenvalue [1/s] of the reduced tap-changer dynamics at ``point``."""
    if method == "implicit":
        return tap_sensitivity(point, net, load) / oltc.tau
    if method == "fd":
        return tap_sensitivity_fd(point, net, load) / oltc.tau
    raise ValueError(f"unknown method {method!r}")


def classify(eigenvalue, tau):
    eps = 1e-9 / tau
    if eigenvalue is None or math.isnan(eigenvalue):
        return INDETERMINATE
    if eigenvalue < -eps:
        return STABLE
    if eigenvalue > eps:
        return UNSTABLE
    return INDETERMINATE


def classify_curve(manifold, net=None, load=None, oltc=OltcParams()):
    """Annotate every point of ``manifold`` with its eigenvalue and stability.

    Points where the network Jacobian is singular are ``indeterminate``
    and do not abort the sweep.
    """
    net = manifold.net if net is None else net
    load = manifold.load if load is None else load
    out = []
    for pt in manifold.points:
        try:
            lam = oltc_eigenvalue(pt, net, load, oltc)
        except NetworkError:
            lam = math.nan
        out.append(replace(pt, eigenvalue=lam, stability=classify(lam, oltc.tau)))
    return replace(manifold, points=tuple(out), net=net, load=load)


def classify_family(manifolds, oltc=OltcParams()):
    return [classify_curve(m, oltc=oltc) for m in manifolds]
