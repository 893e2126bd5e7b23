"""Minimal self-contained SVG line plots."""
import math
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=70, right=130, top=30, bottom=55)
PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]
MAX_GLYPHS = 120


def _ticks(lo, hi, count=6):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    x = start
    while x <= hi + 1e-12 * span:
        out.append(round(x, 12))
        x += step
    return out


class Figure:
    """Accumulates series and renders them to one SVG document."""

    def __init__(self, title="", xlabel="", ylabel=""):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.series = []
        self.glyphs = []

    def line(self, xs, ys, label):
        self.series.append((list(map(float, xs)), list(map(float, ys)), label))

    def marks(self, xs, ys, kinds):
        """Per-point glyphs: ``stable`` dot, ``unstable`` cross, anything else a ring."""
        self.glyphs.extend((float(x), float(y), k) for x, y, k in zip(xs, ys, kinds))

    def _bounds(self):
        xs = [x for s in self.series for x in s[0]] + [g[0] for g in self.glyphs]
        ys = [y for s in self.series for y in s[1]] + [g[1] for g in self.glyphs]
        xs = [x for x in xs if math.isfinite(x)] or [0.0, 1.0]
        ys = [y for y in ys if math.isfinite(y)] or [0.0, 1.0]
        x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        return x0, x1, y0, y1

    def render(self):
        x0, x1, y0, y1 = self._bounds()
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
        sx = lambda x: MARGIN["left"] + (x - x0) / (x1 - x0) * pw
        sy = lambda y: MARGIN["top"] + (y1 - y) / (y1 - y0) * ph
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'font-family="sans-serif" font-size="11">',
               f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
               f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
               'fill="none" stroke="black"/>']
        for t in _ticks(x0, x1):
            x = sx(t)
            out.append(f'<line x1="{x:.2f}" y1="{MARGIN["top"] + ph}" x2="{x:.2f}" '
                       f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{MARGIN["top"] + ph + 18}" '
                       f'text-anchor="middle">{t:g}</text>')
        for t in _ticks(y0, y1):
            y = sy(t)
            out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{y:.2f}" x2="{MARGIN["left"]}" '
                       f'y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 8}" y="{y + 4:.2f}" '
                       f'text-anchor="end">{t:g}</text>')
        out.append(f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 12}" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        if self.title:
            out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" '
                       f'font-size="13">{escape(self.title)}</text>')
        for i, (xs, ys, label) in enumerate(self.series):
            color = PALETTE[i % len(PALETTE)]
            pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys)
                           if math.isfinite(x) and math.isfinite(y))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            ly = MARGIN["top"] + 14 * i + 8
            lx = WIDTH - MARGIN["right"] + 10
            out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" '
                       'stroke-width="2"/>')
            out.append(f'<text x="{lx + 22}" y="{ly + 4}">{escape(label)}</text>')
        stride = max(1, len(self.glyphs) // (MAX_GLYPHS * max(1, len(self.series))))
        g = self.glyphs
        for i, (x, y, kind) in enumerate(g):
            # Thin out dense runs but keep every point where the class changes.
            edge = (i > 0 and g[i - 1][2] != kind) or (i + 1 < len(g) and g[i + 1][2] != kind)
            if i % stride and not edge:
                continue
            if not (math.isfinite(x) and math.isfinite(y)):
                continue
            cx, cy = sx(x), sy(y)
            if kind == "stable":
                out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="green"/>')
            elif kind == "unstable":
                out.append(f'<path d="M{cx - 3:.2f},{cy - 3:.2f}L{cx + 3:.2f},{cy + 3:.2f}'
                           f'M{cx - 3:.2f},{cy + 3:.2f}L{cx + 3:.2f},{cy - 3:.2f}" stroke="red"/>')
            else:
                out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="2.5" fill="none" stroke="gray"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.render())


def pv_figure(manifolds, title="P-V manifolds", modal=False):
    fig = Figure(title, "P [pu]", "V_l [pu]")
    for m in manifolds:
        fig.line(m.column("p_load"), m.column("v_l"), f"N = {m.n_tap:g}")
        if modal:
            fig.marks(m.column("p_load"), m.column("v_l"), [p.stability for p in m.points])
    return fig


def trajectory_figure(traj, title="OLTC trajectory"):
    fig = Figure(title, "t [s]", "[pu]")
    fig.line(traj.t, traj.v_l, "V_l")
    fig.line(traj.t, traj.n_tap, "N")
    return fig
