"""P-V manifolds by load-voltage continuation.

Sweeping the load voltage instead of the loading factor keeps every step
well defined through the maximum-power point: at fixed voltage the
loadings follow from a quadratic, so the nose needs no special handling.
"""
import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .network import Params, residual, solve_alpha_closed_form, state_from_voltage

VERIFY_TOL = 1e-9
DEFAULT_V_MIN = 0.05
DEFAULT_V_STEP = 1e-3
DEFAULT_TAPS = (0.85, 0.90, 0.95, 1.00, 1.05, 1.10)

CURVE_HEADER = ["n_tap", "v_l_pu", "alpha", "p_pu", "q_pu", "branch"]
MODAL_COLUMNS = ["eigenvalue_per_s", "stable"]


class EmptyManifoldError(ValueError):
    pass


@dataclass(frozen=True)
class CurvePoint:
    v_l: float
    alpha: float
    p_load: float
    q_load: float
    n_tap: float
    branch: str = "upper"
    eigenvalue: float | None = None
    stability: str | None = None
    state: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Manifold:
    points: tuple
    n_tap: float
    load_name: str
    nose: tuple
    net: object = field(default=None, compare=False, repr=False)
    load: object = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.points)

    def branch(self, name):
        return [pt for pt in self.points if pt.branch == name]

    def column(self, attr):
        return np.array([getattr(pt, attr) for pt in self.points], dtype=float)

    @property
    def p_max(self):
        return self.nose[0]

    @property
    def v_crit(self):
        return self.nose[1]


def default_grid(net, n_tap, v_min=DEFAULT_V_MIN, v_max=None, step=DEFAULT_V_STEP):
    """Descending voltages from just below the unloaded voltage to ``v_min``."""
    hi = 0.999 * net.v1_mag / n_tap if v_max is None else v_max
    if not (step > 0 and v_min > 0 and hi >= v_min):
        raise ValueError(f"bad grid bounds: v_min={v_min}, v_max={hi}, step={step}")
    count = int(math.floor((hi - v_min) / step + 1e-9)) + 1
    return hi - step * np.arange(count)


def _make_point(v, alpha, state, n_tap, net, load, branch="upper"):
    r = residual(state, Params(alpha, n_tap), net, load)
    err = float(np.max(np.abs(r)))
    if not err < VERIFY_TOL:
        raise ArithmeticError(f"manifold point v={v} failed verification (residual {err:.3e})")
    pu, qu = load.unit_power(v)
    return CurvePoint(float(v), float(alpha), alpha * float(pu), alpha * float(qu),
                      float(n_tap), branch, state=state)


def _p_on_root(v, idx, n_tap, net, load):
    roots = solve_alpha_closed_form(v, n_tap, net, load, roots_only=True)
    if idx >= len(roots):
        return -math.inf
    return roots[idx] * float(load.unit_power(v)[0])


def _refine_nose(points, k, n_tap, net, load):
    """Maximise P along the root branch of point ``k`` between its neighbours."""
    pt = points[k]
    roots = solve_alpha_closed_form(pt.v_l, n_tap, net, load, roots_only=True)
    idx = int(np.argmin([abs(r - pt.alpha) for r in roots]))
    volts = sorted({p.v_l for p in points})
    j = volts.index(pt.v_l)
    lo = volts[max(j - 1, 0)]
    hi = volts[min(j + 1, len(volts) - 1)]
    if lo == hi:
        return pt
    res = minimize_scalar(lambda v: -_p_on_root(v, idx, n_tap, net, load),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-11, "maxiter": 500})
    if not (res.success and -res.fun > pt.p_load):
        return pt
    v = float(res.x)
    alpha = solve_alpha_closed_form(v, n_tap, net, load, roots_only=True)[idx]
    state = state_from_voltage(v, alpha, n_tap, net, load)
    return _make_point(v, alpha, state, n_tap, net, load, "nose")


def _order(points):
    return sorted(points, key=lambda p: (-p.v_l, p.alpha))


def _label(points):
    k = int(np.argmax([p.p_load for p in points]))
    out = []
    for i, p in enumerate(points):
        branch = "upper" if i < k else ("lower" if i > k else "nose")
        out.append(replace(p, branch=branch))
    return out, k


def trace_manifold(net, load, n_tap=1.0, v_grid=None):
    """Trace the steady-state manifold for one tap ratio.

    Every non-negative loading root at each grid voltage becomes a point.
    The refined maximum-power point is inserted with branch ``"nose"``;
    points above it in voltage are ``"upper"``, below it ``"lower"``.
    """
    if not n_tap > 0:
        raise ValueError(f"tap ratio must be positive, got {n_tap}")
    grid = default_grid(net, n_tap) if v_grid is None else np.asarray(v_grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("grid voltages must be positive")
    d = np.diff(grid)
    if len(grid) > 1 and not (np.all(d < 0) or np.all(d > 0)):
        raise ValueError("grid voltages must be strictly ordered")

    pts = []
    for v in grid:
        for alpha, state in solve_alpha_closed_form(float(v), n_tap, net, load):
            pts.append(_make_point(float(v), alpha, state, n_tap, net, load))
    if not pts:
        raise EmptyManifoldError(f"no steady state on the grid for tap {n_tap}")
    pts = _order(pts)

    k = int(np.argmax([p.p_load for p in pts]))
    nose = _refine_nose(pts, k, n_tap, net, load)
    if nose is not pts[k]:
        pts = _order(pts + [nose])
    pts, k = _label(pts)
    return Manifold(tuple(pts), float(n_tap), load.name, (pts[k].p_load, pts[k].v_l), net, load)


def trace_family(net, load, taps=DEFAULT_TAPS, v_grid=None):
    taps = list(taps)
    if not taps:
        raise ValueError("at least one tap ratio is required")
    if any(not t > 0 for t in taps):
        raise ValueError(f"tap ratios must be positive, got {taps}")
    return [trace_manifold(net, load, t, v_grid) for t in taps]


def nose_point(manifold):
    """Maximum-power point ``(p_max, v_crit)`` of a manifold.

    Refines around the best point when the manifold carries its network
    and load; a single-point manifold returns that point.
    """
    pts = manifold.points
    if not pts:
        raise EmptyManifoldError("empty manifold")
    k = int(np.argmax([p.p_load for p in pts]))
    if len(pts) == 1 or manifold.net is None or manifold.load is None:
        return pts[k].p_load, pts[k].v_l
    best = _refine_nose(list(pts), k, manifold.n_tap, manifold.net, manifold.load)
    return best.p_load, best.v_l


def _fmt(x):
    if x is None:
        return ""
    return f"{x:.9g}"


def write_curves(fh, manifolds, modal=False):
    """Write curve rows grouped by tap, descending voltage."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CURVE_HEADER + (MODAL_COLUMNS if modal else []))
    for m in manifolds:
        for p in m.points:
            row = [_fmt(p.n_tap), _fmt(p.v_l), _fmt(p.alpha), _fmt(p.p_load), _fmt(p.q_load), p.branch]
            if modal:
                row += [_fmt(p.eigenvalue), p.stability or ""]
            w.writerow(row)


def curves_to_csv(manifolds, modal=False):
    buf = io.StringIO()
    write_curves(buf, manifolds, modal)
    return buf.getvalue()


def read_curves(fh):
    """Parse a curve CSV back into plain dict rows (numbers as floats)."""
    rows = []
    for row in csv.DictReader(fh):
        out = {}
        for k, v in row.items():
            if k in ("branch", "stable"):
                out[k] = v
            else:
                out[k] = float(v) if v != "" else None
        rows.append(out)
    return rows
