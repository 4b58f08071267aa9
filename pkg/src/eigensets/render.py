"""Figures for planar clouds and norm balls: hand-written SVG and matplotlib PNG."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import InvalidInputError

SIZE = 600.0
MARGIN = 0.05


@dataclass(frozen=True)
class Viewport:
    """Affine map from data coordinates to SVG user units (y flipped)."""

    xmin: float
    ymin: float
    scale: float
    size: float = SIZE

    @classmethod
    def fit(cls, pts: np.ndarray, size: float = SIZE) -> "Viewport":
        if len(pts) == 0:
            lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        else:
            lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
        inner = size * (1 - 2 * MARGIN)
        scale = inner / span
        center = 0.5 * (lo + hi)
        xmin = center[0] - 0.5 * size / scale
        ymin = center[1] - 0.5 * size / scale
        return cls(float(xmin), float(ymin), float(scale), size)

    def to_svg(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        u = (pts[:, 0] - self.xmin) * self.scale
        v = self.size - (pts[:, 1] - self.ymin) * self.scale
        return np.column_stack([u, v])

    def from_svg(self, uv) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=float))
        x = uv[:, 0] / self.scale + self.xmin
        y = (self.size - uv[:, 1]) / self.scale + self.ymin
        return np.column_stack([x, y])


def _planar(obj) -> tuple[np.ndarray, bool]:
    """Points of a cloud, a norm approximation, or a raw array; flag for closed outline."""
    from .reach import PointCloud
    from .spectral import NormApprox

    if isinstance(obj, PointCloud):
        pts, outline = obj.points, False
    elif isinstance(obj, NormApprox):
        pts, outline = obj.ball_points(), True
    else:
        pts, outline = np.asarray(obj, dtype=float), False
        if pts.size == 0:
            pts = pts.reshape(0, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError("only planar (d = 2) objects can be rendered")
    return pts, outline


def _clip_line(direction, vp: Viewport) -> tuple[np.ndarray, np.ndarray] | None:
    """Segment of the line through the origin along `direction` inside the viewport."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    lo = np.array([vp.xmin, vp.ymin])
    hi = lo + vp.size / vp.scale
    tmin, tmax = -np.inf, np.inf
    for k in range(2):
        if abs(d[k]) < 1e-15:
            if not lo[k] <= 0 <= hi[k]:
                return None
            continue
        a, b = sorted((lo[k] / d[k], hi[k] / d[k]))
        tmin, tmax = max(tmin, a), min(tmax, b)
    if tmin >= tmax:
        return None
    return tmin * d, tmax * d


def svg_text(obj, lines=(), title: str = "") -> str:
    """Deterministic SVG of a planar cloud or norm ball.

    `lines` are directions of reference lines through the origin, drawn dashed.
    """
    pts, outline = _planar(obj)
    vp = Viewport.fit(pts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE:g}" height="{SIZE:g}" '
        f'viewBox="0 0 {SIZE:g} {SIZE:g}">',
        f'<!-- viewport xmin={vp.xmin!r} ymin={vp.ymin!r} scale={vp.scale!r} -->',
    ]
    if title:
        out.append(f"<title>{title}</title>")
    out.append('<rect x="0" y="0" width="100%" height="100%" fill="white"/>')
    for axis in ((1.0, 0.0), (0.0, 1.0)):
        seg = _clip_line(axis, vp)
        if seg is not None:
            (x1, y1), (x2, y2) = vp.to_svg(np.vstack(seg))
            out.append(f'<line class="axis" x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" '
                       f'y2="{y2:.3f}" stroke="#999" stroke-width="1"/>')
    for direction in lines:
        seg = _clip_line(direction, vp)
        if seg is not None:
            (x1, y1), (x2, y2) = vp.to_svg(np.vstack(seg))
            out.append(f'<line class="reference" x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" '
                       f'y2="{y2:.3f}" stroke="#c33" stroke-width="1" stroke-dasharray="6,4"/>')
    if len(pts):
        uv = vp.to_svg(pts)
        if outline:
            order = np.argsort(np.arctan2(pts[:, 1], pts[:, 0]), kind="stable")
            path = " ".join(f"{u:.3f},{v:.3f}" for u, v in uv[order])
            out.append(f'<polygon class="ball" points="{path}" fill="none" stroke="#246" stroke-width="1"/>')
        out.extend(f'<circle cx="{u:.3f}" cy="{v:.3f}" r="1.5" fill="#246"/>' for u, v in uv)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(obj, path, lines=(), title: str = "") -> Path:
    """Write the SVG of a planar cloud or norm ball to `path`."""
    path = Path(path)
    path.write_text(svg_text(obj, lines, title))
    return path


def render_png(obj, path, lines=(), title: str = "") -> Path:
    """Scatter plot of a planar cloud or norm ball via matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts, outline = _planar(obj)
    fig, ax = plt.subplots(figsize=(5, 5))
    if len(pts):
        if outline:
            order = np.argsort(np.arctan2(pts[:, 1], pts[:, 0]), kind="stable")
            loop = pts[np.append(order, order[0])]
            ax.plot(loop[:, 0], loop[:, 1], lw=1.2)
        else:
            ax.scatter(pts[:, 0], pts[:, 1], s=1, lw=0)
    vp = Viewport.fit(pts)
    for direction in lines:
        seg = _clip_line(direction, vp)
        if seg is not None:
            a, b = seg
            ax.plot([a[0], b[0]], [a[1], b[1]], "--", color="tab:red", lw=0.8)
    ax.axhline(0, color="0.6", lw=0.6)
    ax.axvline(0, color="0.6", lw=0.6)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path
