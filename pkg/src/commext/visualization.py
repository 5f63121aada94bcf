import html
from typing import List, Optional

import fsspec
import numpy as np
from matplotlib import cm

from commext.cubature.rule import CubatureRule
from commext.moments import (
    GAUSSIAN_PLANE,
    INTERVAL,
    REMOVED_SQUARE_CENTER,
    SQUARE,
    SQUARE_MINUS_SQUARE,
    UNIT_DISK,
    WeightedDomain,
)


SVG_SIZE = 800
MARGIN = 40
MAX_RADIUS = 16.0


class _Canvas:
    def __init__(self, lo: float, hi: float):
        self.lo = lo
        self.hi = hi
        self.scale = (SVG_SIZE - 2 * MARGIN) / (hi - lo)

    def x(self, v: float) -> float:
        return MARGIN + (v - self.lo) * self.scale

    def y(self, v: float) -> float:
        return SVG_SIZE - MARGIN - (v - self.lo) * self.scale


def _extent(rule: CubatureRule, domain: Optional[WeightedDomain]) -> float:
    reach = float(np.max(np.abs(rule.nodes))) if rule.num_nodes else 1.0
    if domain is not None and domain.kind == INTERVAL:
        reach = max(reach, abs(domain.a), abs(domain.b))
    elif domain is not None and domain.kind != GAUSSIAN_PLANE:
        reach = max(reach, 1.0)
    return 1.1 * max(reach, 1e-12)


def _outline(domain: Optional[WeightedDomain], canvas: _Canvas) -> List[str]:
    if domain is None:
        return []
    style = "fill='none' stroke='black' stroke-width='2'"
    if domain.kind in (SQUARE, SQUARE_MINUS_SQUARE):
        side = 2 * canvas.scale
        out = [f"<rect x='{canvas.x(-1):.3f}' y='{canvas.y(1):.3f}' width='{side:.3f}' height='{side:.3f}' {style}/>"]
        if domain.kind == SQUARE_MINUS_SQUARE and domain.r > 0:
            cx, cy = REMOVED_SQUARE_CENTER
            inner = 2 * domain.r * canvas.scale
            out.append(
                f"<rect x='{canvas.x(cx - domain.r):.3f}' y='{canvas.y(cy + domain.r):.3f}' "
                f"width='{inner:.3f}' height='{inner:.3f}' fill='#dddddd' stroke='black' stroke-width='2'/>"
            )
        return out
    if domain.kind == UNIT_DISK:
        return [f"<circle cx='{canvas.x(0):.3f}' cy='{canvas.y(0):.3f}' r='{canvas.scale:.3f}' {style}/>"]
    if domain.kind == INTERVAL:
        return [
            f"<line x1='{canvas.x(domain.a):.3f}' y1='{canvas.y(0):.3f}' x2='{canvas.x(domain.b):.3f}' "
            f"y2='{canvas.y(0):.3f}' stroke='black' stroke-width='2'/>"
        ]
    # the Gaussian weight has no boundary; draw the axes instead
    return [
        f"<line x1='{MARGIN}' y1='{canvas.y(0):.3f}' x2='{SVG_SIZE - MARGIN}' y2='{canvas.y(0):.3f}' "
        "stroke='#999999'/>",
        f"<line x1='{canvas.x(0):.3f}' y1='{MARGIN}' x2='{canvas.x(0):.3f}' y2='{SVG_SIZE - MARGIN}' "
        "stroke='#999999'/>",
    ]


def nodes_svg(rule: CubatureRule, domain: Optional[WeightedDomain] = None, title: Optional[str] = None) -> str:
    """
    A static scatter plot of the nodes over the domain outline. Marker area is proportional to the weight and the
    colour encodes the weight relative to the largest one.
    """
    domain = domain if domain is not None else rule.domain
    reach = _extent(rule, domain)
    canvas = _Canvas(-reach, reach)

    parts = [
        f"<svg xmlns='http://www.w3.org/2000/svg' width='{SVG_SIZE}' height='{SVG_SIZE}' "
        f"viewBox='0 0 {SVG_SIZE} {SVG_SIZE}'>",
        f"<rect width='{SVG_SIZE}' height='{SVG_SIZE}' fill='white'/>",
    ]
    parts.extend(_outline(domain, canvas))

    w_max = float(np.max(rule.weights)) if rule.num_nodes else 1.0
    norm = cm.colors.Normalize(vmin=0.0, vmax=w_max)
    for node, w in zip(rule.nodes, rule.weights):
        x = float(node[0])
        y = float(node[1]) if rule.d > 1 else 0.0
        radius = MAX_RADIUS * np.sqrt(max(float(w), 0.0) / w_max)
        color = (255 * np.array(cm.plasma(norm(float(w))))).astype(int)
        parts.append(
            f"<circle cx='{canvas.x(x):.3f}' cy='{canvas.y(y):.3f}' r='{radius:.3f}' "
            f"fill='rgb({color[0]}, {color[1]}, {color[2]})' fill-opacity='0.8' stroke='black' stroke-width='0.5'>"
            f"<title>({x:.6g}, {y:.6g}) w={float(w):.6g}</title></circle>"
        )

    if title:
        label = html.escape(title, quote=False)
        parts.append(f"<text x='{MARGIN}' y='{MARGIN // 2}' font-family='monospace' font-size='16'>{label}</text>")
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_nodes_svg(path: str, rule: CubatureRule, domain: Optional[WeightedDomain] = None, title=None) -> None:
    with fsspec.open(path, "w") as f:
        f.write(nodes_svg(rule, domain, title))
