"""Fold projections: SVG (x/y plane, depth shown by shading) and ASCII."""

from __future__ import annotations

from typing import List

from .lattice import Fold, contacts

SCALE = 40
MARGIN = 30


def _shade(z: int, zmin: int, zmax: int) -> str:
    if zmax == zmin:
        return "#3060c0"
    t = (z - zmin) / (zmax - zmin)
    g = int(60 + 150 * t)
    return f"#30{g:02x}c0"


def to_svg(fold: Fold, P=None, title: str = "") -> str:
    """Byte-deterministic SVG of the fold projected on the x/y plane.

    Backbone bonds are solid, contacts with nonzero energy dashed; residues
    further along +z are drawn lighter.
    """
    xs = [c[0] for c in fold.coords]
    ys = [c[1] for c in fold.coords]
    zs = [c[2] for c in fold.coords]
    x0, y1 = min(xs), max(ys)
    w = (max(xs) - x0) * SCALE + 2 * MARGIN
    h = (y1 - min(ys)) * SCALE + 2 * MARGIN + (16 if title else 0)
    top = 16 if title else 0

    def px(c):
        return MARGIN + (c[0] - x0) * SCALE + c[2] * 6, top + MARGIN + (y1 - c[1]) * SCALE - c[2] * 6

    out: List[str] = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w + 12}" height="{h + 12}" viewBox="0 0 {w + 12} {h + 12}">'
    ]
    if title:
        out.append(f'<text x="4" y="12" font-family="monospace" font-size="11">{title}</text>')
    if P is not None and fold.is_valid:
        for i, j, e in contacts(fold, P):
            (ax, ay), (bx, by) = px(fold.coords[i]), px(fold.coords[j])
            out.append(
                f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="#c03030" stroke-dasharray="4 3"/>'
            )
    for a, b in zip(fold.coords, fold.coords[1:]):
        (ax, ay), (bx, by) = px(a), px(b)
        out.append(f'<line x1="{ax}" y1="{ay}" x2="{bx}" y2="{by}" stroke="#202020" stroke-width="3"/>')
    for i, c in enumerate(fold.coords):
        x, y = px(c)
        col = _shade(c[2], min(zs), max(zs))
        out.append(f'<circle cx="{x}" cy="{y}" r="11" fill="{col}" stroke="#101010"/>')
        label = fold.sequence[i] if i < len(fold.sequence) else "?"
        out.append(
            f'<text x="{x}" y="{y + 4}" text-anchor="middle" font-family="monospace" '
            f'font-size="11" fill="#ffffff">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def to_text(fold: Fold) -> str:
    """ASCII projection on the x/y plane, one layer per distinct z."""
    blocks = []
    for z in sorted({c[2] for c in fold.coords}):
        pts = {(c[0], c[1]): i for i, c in enumerate(fold.coords) if c[2] == z}
        xs = [c[0] for c in fold.coords]
        ys = [c[1] for c in fold.coords]
        rows = [f"z={z}"]
        for y in range(max(ys), min(ys) - 1, -1):
            row = ""
            for x in range(min(xs), max(xs) + 1):
                i = pts.get((x, y))
                row += f"{fold.sequence[i] if i is not None else '.'}{i % 10 if i is not None else ' '} "
            rows.append(row.rstrip())
        blocks.append("\n".join(rows))
    return "\n\n".join(blocks) + "\n"
