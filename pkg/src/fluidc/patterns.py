"""Inverse design of inflatable-airbag heat-seal patterns.

Five target shapes are supported: sphere, cylinder and box map a target
geometry onto flat-sheet dimensions; fold and bend additionally lay out
crease seal pairs whose central gap ``d`` follows the empirical line
d = (theta - 51.50) / (-0.65 * 60 / W).  All dimensions are millimeters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional


class PatternError(ValueError):
    pass


class NonPositiveDimension(PatternError):
    def __init__(self, name, value):
        super().__init__(f"{name} must be positive, got {value}")


class AngleOutOfRange(PatternError):
    pass


class SheetTooShort(PatternError):
    pass


@dataclass(frozen=True)
class PatternResult:
    kind: str  # sphere | cylinder | box | fold | bend
    length: float  # sheet length L
    width: float  # sheet width W
    height: Optional[float] = None  # box / cylinder
    tab_spacing: Optional[float] = None  # d
    seal_inset: Optional[float] = None  # a
    crease_pitch: Optional[float] = None  # D
    end_margin: Optional[float] = None  # j (fold)
    crease_count: Optional[int] = None  # n
    crease_angle: Optional[float] = None  # theta, degrees

    def to_json(self, ndigits: int = 2) -> dict:
        def r(v):
            return round(v, ndigits)

        out: dict = {"shape": self.kind, "L": r(self.length), "W": r(self.width)}
        if self.height is not None:
            out["H"] = r(self.height)
        if self.seal_inset is not None:
            out["a"] = r(self.seal_inset)
        if self.tab_spacing is not None:
            out["d"] = r(self.tab_spacing)
        if self.crease_pitch is not None:
            out["D"] = r(self.crease_pitch)
        if self.end_margin is not None:
            out["j"] = r(self.end_margin)
        if self.crease_count is not None:
            out["n"] = self.crease_count
        if self.crease_angle is not None:
            out["theta"] = r(self.crease_angle)
        return out


def _require_positive(**dims) -> None:
    for name, value in dims.items():
        if value is None or value <= 0:
            raise NonPositiveDimension(name, value)


def calc_sphere(radius: float) -> PatternResult:
    """Sheet for a spherical airbag: L = 2*pi*r, W = pi*r, d = L/16."""
    _require_positive(radius=radius)
    length = 2.0 * math.pi * radius
    width = math.pi * radius
    return PatternResult(
        kind="sphere", length=length, width=width, tab_spacing=length / 16.0
    )


def calc_cylinder(radius: float, height: float) -> PatternResult:
    """Sheet for a solid cylinder: L = 2*pi*r, the width dim is pi*r."""
    _require_positive(radius=radius, height=height)
    return PatternResult(
        kind="cylinder",
        length=2.0 * math.pi * radius,
        width=math.pi * radius,
        height=height,
    )


def calc_box(length: float, width: float, height: float) -> PatternResult:
    """Box dimensions pass through unchanged."""
    _require_positive(length=length, width=width, height=height)
    return PatternResult(kind="box", length=length, width=width, height=height)


def _crease_gap(theta: float, width: float) -> float:
    return (theta - 51.50) / (-0.65 * 60.0 / width)


def calc_fold(length: float, width: float, angle: float) -> PatternResult:
    """Folding strip: creases centered on the sheet at pitch D = W.

    The fold angle is split over n creases (n chosen so each crease bends
    at most 45 degrees); j is the margin before the first crease.
    """
    _require_positive(length=length, width=width)
    if not 0 < angle <= 180:
        raise AngleOutOfRange(f"fold angle must lie in (0, 180], got {angle}")
    n = math.ceil(angle / 45.0)
    theta = angle / n
    pitch = width
    gap = _crease_gap(theta, width)
    margin = (length - (n - 1) * pitch) / 2.0
    if margin <= 0:
        raise SheetTooShort(
            f"sheet length {length} cannot host {n} creases at pitch {pitch}"
        )
    return PatternResult(
        kind="fold",
        length=length,
        width=width,
        seal_inset=width / 3.0,
        tab_spacing=gap,
        crease_pitch=pitch,
        end_margin=margin,
        crease_count=n,
        crease_angle=theta,
    )


def calc_bend(length: float, width: float, angle: float) -> PatternResult:
    """Bending strip approximated by 20-degree creases: n = floor(angle/20)."""
    _require_positive(length=length, width=width)
    if angle < 20:
        raise AngleOutOfRange(
            f"bend angle must be at least 20 degrees (one crease), got {angle}"
        )
    if angle > 180:
        raise AngleOutOfRange(f"bend angle must be at most 180 degrees, got {angle}")
    n = int(angle / 20.0)
    return PatternResult(
        kind="bend",
        length=length,
        width=width,
        seal_inset=width / 3.0,
        tab_spacing=_crease_gap(20.0, width),
        crease_pitch=length / (n + 1),
        crease_count=n,
        crease_angle=20.0,
    )


def calc_shape(shape: str, **kwargs) -> PatternResult:
    """Dispatch by shape name; keyword names follow the request JSON."""
    shape = shape.lower()
    if shape == "sphere":
        return calc_sphere(kwargs["radius"])
    if shape == "cylinder":
        return calc_cylinder(kwargs["radius"], kwargs["height"])
    if shape == "box":
        return calc_box(kwargs["length"], kwargs["width"], kwargs["height"])
    if shape == "fold":
        return calc_fold(kwargs["length"], kwargs["width"], kwargs["angle"])
    if shape == "bend":
        return calc_bend(kwargs["length"], kwargs["width"], kwargs["angle"])
    raise PatternError(f"unknown shape {shape!r}")


def _svg_header(width: float, height: float) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2f}mm" '
        f'height="{height:.2f}mm" viewBox="0 0 {width:.2f} {height:.2f}">',
    ]


def pattern_svg(result: PatternResult) -> str:
    """Render the seal geometry as a standalone SVG (millimeter units).

    The sheet outline spans L x W; fold/bend creases appear as opposing
    seal-tab pairs of depth ``a`` leaving a central gap ``d``; sphere
    sheets carry the 16 evenly spaced tab marks.
    """
    length, width = result.length, result.width
    margin = 2.0
    lines = _svg_header(length + 2 * margin, width + 2 * margin)
    lines.append(f'<g transform="translate({margin:.2f} {margin:.2f})" '
                 'fill="none" stroke="black" stroke-width="0.4">')
    lines.append(
        f'<rect x="0" y="0" width="{length:.2f}" height="{width:.2f}"/>'
    )

    if result.kind == "sphere":
        pitch = result.tab_spacing or length / 16.0
        depth = width / 8.0
        for i in range(1, 17):
            x = i * pitch
            if x > length + 1e-9:
                break
            lines.append(
                f'<line class="tab" x1="{x:.2f}" y1="0" x2="{x:.2f}" y2="{depth:.2f}"/>'
            )
            lines.append(
                f'<line class="tab" x1="{x:.2f}" y1="{width:.2f}" '
                f'x2="{x:.2f}" y2="{width - depth:.2f}"/>'
            )
    elif result.kind in ("fold", "bend"):
        n = result.crease_count or 0
        depth = result.seal_inset or width / 3.0
        gap = result.tab_spacing or 0.0
        pitch = result.crease_pitch or 0.0
        seal_w = min(2.0, pitch / 4.0)
        if result.kind == "fold":
            centers = [result.end_margin + i * pitch for i in range(n)]
        else:
            centers = [(i + 1) * pitch for i in range(n)]
        for cx in centers:
            x0 = cx - seal_w / 2.0
            top = (width - gap) / 2.0
            lines.append(
                f'<rect class="seal" x="{x0:.2f}" y="0" '
                f'width="{seal_w:.2f}" height="{top:.2f}"/>'
            )
            lines.append(
                f'<rect class="seal" x="{x0:.2f}" y="{(width + gap) / 2.0:.2f}" '
                f'width="{seal_w:.2f}" height="{top:.2f}"/>'
            )
        # unused inset marker: depth == a, drawn as guide lines
        lines.append(
            f'<line class="inset" x1="0" y1="{depth:.2f}" '
            f'x2="{length:.2f}" y2="{depth:.2f}" stroke-dasharray="1 1"/>'
        )
        lines.append(
            f'<line class="inset" x1="0" y1="{width - depth:.2f}" '
            f'x2="{length:.2f}" y2="{width - depth:.2f}" stroke-dasharray="1 1"/>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines)


def seal_geometry(result: PatternResult) -> list[list[tuple[float, float]]]:
    """Seal polylines in sheet coordinates (mm), one polyline per segment."""
    polylines: list[list[tuple[float, float]]] = [
        [(0.0, 0.0), (result.length, 0.0), (result.length, result.width),
         (0.0, result.width), (0.0, 0.0)]
    ]
    if result.kind in ("fold", "bend") and result.crease_count:
        n = result.crease_count
        pitch = result.crease_pitch or 0.0
        gap = result.tab_spacing or 0.0
        if result.kind == "fold":
            centers = [result.end_margin + i * pitch for i in range(n)]
        else:
            centers = [(i + 1) * pitch for i in range(n)]
        top = (result.width - gap) / 2.0
        for cx in centers:
            polylines.append([(cx, 0.0), (cx, top)])
            polylines.append([(cx, result.width), (cx, result.width - top)])
    return polylines
