"""Self-contained SVG rendering of a scene and (optionally) a route plan."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .constraints import LinkParams, coverage_radius_km
from .errors import ValidationError
from .instance import DeliveryInstance, Isc3Demands, to_planar
from .plan import RoutePlan

SVG_NS = "http://www.w3.org/2000/svg"
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22")


@dataclass(frozen=True)
class RenderSpec:
    output: Path | None = None
    size_px: int = 800
    stations: bool = True
    depot: bool = True
    trips: bool = True
    coverage: bool = True
    no_fly_zones: bool = True

    def __post_init__(self):
        if self.size_px < 100:
            raise ValidationError(f"canvas must be at least 100 px, got {self.size_px}")


def render_svg(instance: DeliveryInstance, plan: RoutePlan | None = None, spec: RenderSpec | None = None,
               demands: Isc3Demands | None = None, link: LinkParams | None = None) -> str:
    spec = spec or RenderSpec()
    demands = demands or Isc3Demands()
    link = link or LinkParams()
    scene = to_planar(instance)
    pts = [scene.depot] + [s.location for s in scene.stations] + [b.location for b in scene.base_stations]
    xs = [p.x for p in pts] + [z.center.x + d for z in scene.no_fly_zones for d in (-z.radius_km, z.radius_km)]
    ys = [p.y for p in pts] + [z.center.y + d for z in scene.no_fly_zones for d in (-z.radius_km, z.radius_km)]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    span = max(x1 - x0, y1 - y0) or 1.0
    margin = 0.05 * spec.size_px
    scale = (spec.size_px - 2 * margin) / span

    def px(x: float, y: float) -> tuple[float, float]:
        # north up
        return round(margin + (x - x0) * scale, 3), round(spec.size_px - margin - (y - y0) * scale, 3)

    ET.register_namespace("", SVG_NS)
    root = ET.Element(f"{{{SVG_NS}}}svg", {
        "width": str(spec.size_px), "height": str(spec.size_px),
        "viewBox": f"0 0 {spec.size_px} {spec.size_px}",
    })
    ET.SubElement(root, f"{{{SVG_NS}}}rect", {"width": "100%", "height": "100%", "fill": "white"})

    if spec.coverage:
        for b in scene.base_stations:
            r = coverage_radius_km(b, demands.min_data_rate, link)
            cx, cy = px(b.location.x, b.location.y)
            if math.isfinite(r):
                ET.SubElement(root, f"{{{SVG_NS}}}circle", {
                    "class": "coverage", "cx": str(cx), "cy": str(cy), "r": str(round(r * scale, 3)),
                    "fill": "none", "stroke": "#999999", "stroke-dasharray": "4 4"})
            ET.SubElement(root, f"{{{SVG_NS}}}rect", {
                "class": "base-station", "x": str(cx - 4), "y": str(cy - 4), "width": "8", "height": "8",
                "fill": "#555555"})
    if spec.no_fly_zones:
        for z in scene.no_fly_zones:
            cx, cy = px(z.center.x, z.center.y)
            ET.SubElement(root, f"{{{SVG_NS}}}circle", {
                "class": "no-fly", "cx": str(cx), "cy": str(cy), "r": str(round(z.radius_km * scale, 3)),
                "fill": "#ff000022", "stroke": "#cc0000"})
    if spec.trips and plan is not None:
        loc = {s.id: s.location for s in scene.stations}
        for k, trip in enumerate(plan.trips):
            route = [scene.depot] + [loc[sid] for sid in trip.stations] + [scene.depot]
            ET.SubElement(root, f"{{{SVG_NS}}}polyline", {
                "class": "trip", "data-trip": str(k),
                "points": " ".join(f"{a},{b}" for a, b in (px(p.x, p.y) for p in route)),
                "fill": "none", "stroke": PALETTE[k % len(PALETTE)], "stroke-width": "2"})
    if spec.stations:
        for s in scene.stations:
            cx, cy = px(s.location.x, s.location.y)
            ET.SubElement(root, f"{{{SVG_NS}}}circle", {
                "class": "station", "cx": str(cx), "cy": str(cy), "r": "5", "fill": "#000000"})
            label = ET.SubElement(root, f"{{{SVG_NS}}}text", {
                "x": str(cx + 6), "y": str(cy - 6), "font-size": "11", "font-family": "sans-serif"})
            label.text = f"{s.id} ({s.demand})"
    if spec.depot:
        cx, cy = px(scene.depot.x, scene.depot.y)
        ET.SubElement(root, f"{{{SVG_NS}}}polygon", {
            "class": "depot", "points": f"{cx},{cy - 9} {cx - 8},{cy + 6} {cx + 8},{cy + 6}", "fill": "#e6a100"})
    return ET.tostring(root, encoding="unicode") + "\n"


def write_svg(path: str | Path, *args, **kwargs) -> None:
    Path(path).write_text(render_svg(*args, **kwargs), encoding="utf-8")
