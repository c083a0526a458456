"""Flag plots of sampled poses and their SVG rendering.

A flag stands on the sampled position; its pole points along the rotated
z-axis and its pennant along the rotated x-axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

import numpy as np

from .mixture import MPG
from .quaternion import rotate_point

VIEWS = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}
PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b")


@dataclass
class FlagSet:
    foot: np.ndarray  # (n, 3)
    pole_tip: np.ndarray
    pennant_tip: np.ndarray
    color: str = PALETTE[0]

    def __len__(self):
        return self.foot.shape[0]

    @property
    def pole_mid(self):
        return 0.5 * (self.foot + self.pole_tip)

    def to_dict(self):
        return {
            "color": self.color,
            "flags": [
                {"foot": [float(v) for v in f], "pole_tip": [float(v) for v in p],
                 "pennant_tip": [float(v) for v in t]}
                for f, p, t in zip(self.foot, self.pole_tip, self.pennant_tip)
            ],
        }


def flags_from_motions(motions, scale=1.0, color=PALETTE[0]) -> FlagSet:
    motions = np.atleast_2d(motions)
    q = motions[:, :4]
    foot = motions[:, 4:7].copy()
    z = rotate_point(q, np.broadcast_to([0.0, 0.0, 1.0], foot.shape))
    x = rotate_point(q, np.broadcast_to([1.0, 0.0, 0.0], foot.shape))
    pole_tip = foot + scale * z
    pennant_tip = foot + 0.5 * scale * z + 0.5 * scale * x
    return FlagSet(foot, pole_tip, pennant_tip, color)


def export_flags(mpg: MPG, n: int, seed=0, scale=1.0, color=PALETTE[0]) -> FlagSet:
    if n < 1:
        raise ValueError("n must be at least 1")
    return flags_from_motions(mpg.sample_array(n, np.random.default_rng(seed)), scale, color)


def _fmt(v):
    return f"{v:.3f}"


def render_svg(flagsets, view="xy", size=600, margin=20) -> str:
    """Orthographic projection of flag sets onto an axis pair, as an SVG document."""
    if view not in VIEWS:
        raise ValueError(f"view must be one of {sorted(VIEWS)}")
    ia, ib = VIEWS[view]
    flagsets = list(flagsets)
    pts = [np.concatenate([fs.foot, fs.pole_tip, fs.pennant_tip]) for fs in flagsets if len(fs)]
    if pts:
        allp = np.concatenate(pts)[:, [ia, ib]]
        lo, hi = allp.min(axis=0), allp.max(axis=0)
    else:
        lo, hi = np.zeros(2), np.ones(2)
    span = max(float(np.max(hi - lo)), 1e-12)
    k = (size - 2 * margin) / span

    def to_px(p):
        u = margin + (p[ia] - lo[0]) * k
        v = size - margin - (p[ib] - lo[1]) * k  # SVG y grows downward
        return f"{_fmt(u)},{_fmt(v)}"

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
    ]
    for fs in flagsets:
        color = quoteattr(fs.color)
        out.append(f'<g stroke={color} fill="none" stroke-width="1">')
        for foot, tip, pen, mid in zip(fs.foot, fs.pole_tip, fs.pennant_tip, fs.pole_mid):
            out.append(f'<polyline points="{to_px(foot)} {to_px(tip)}"/>')
            out.append(f'<polyline points="{to_px(tip)} {to_px(pen)} {to_px(mid)}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
