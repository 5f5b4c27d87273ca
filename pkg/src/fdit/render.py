"""Static SVG rendering of a planner snapshot, projected onto two axes.

Obstacles are gray, valid samples black, invalid samples red, tree edges
thin gray lines and the incumbent path a thick blue polyline.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .environment import Environment

SVG_NS = "http://www.w3.org/2000/svg"
SIZE = 600
MARGIN = 20


class ProjectionError(ValueError):
    pass


def check_axes(dimension: int, axes) -> tuple:
    if axes is None:
        if dimension != 2:
            raise ProjectionError(f"a {dimension}-D problem needs an explicit pair of axes")
        return 0, 1
    try:
        a, b = (int(v) for v in axes)
    except (TypeError, ValueError):
        raise ProjectionError(f"axes must be two integers, got {axes!r}") from None
    if a == b or not (0 <= a < dimension and 0 <= b < dimension):
        raise ProjectionError(f"axes {axes!r} invalid for dimension {dimension}")
    return a, b


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_svg(snapshot: dict, out_path=None, env: Environment | None = None, axes=None) -> str:
    """Write the drawing to ``out_path`` (if given) and return the SVG text."""
    if env is None:
        env = Environment.from_dict(snapshot["environment"])
    a, b = check_axes(env.dimension, axes)
    scale = SIZE - 2 * MARGIN

    def px(state) -> tuple:
        # unit square to canvas, y up
        return MARGIN + state[a] * scale, SIZE - MARGIN - state[b] * scale

    ET.register_namespace("", SVG_NS)
    root = ET.Element(f"{{{SVG_NS}}}svg", {
        "width": str(SIZE), "height": str(SIZE), "viewBox": f"0 0 {SIZE} {SIZE}"})
    ET.SubElement(root, f"{{{SVG_NS}}}rect", {
        "class": "bounds", "x": str(MARGIN), "y": str(MARGIN), "width": str(scale), "height": str(scale),
        "fill": "white", "stroke": "black"})

    layer = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": "obstacles"})
    for box in env.obstacles:
        x0, y1 = px(box.min_corner)
        x1, y0 = px(box.max_corner)
        ET.SubElement(layer, f"{{{SVG_NS}}}rect", {
            "class": "obstacle", "x": _num(x0), "y": _num(y0),
            "width": _num(x1 - x0), "height": _num(y1 - y0), "fill": "gray"})

    states = {v["id"]: v["state"] for v in snapshot.get("vertices", [])}
    layer = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": "tree"})
    for p, v in snapshot.get("edges", []):
        (x0, y0), (x1, y1) = px(states[p]), px(states[v])
        ET.SubElement(layer, f"{{{SVG_NS}}}line", {
            "class": "edge", "x1": _num(x0), "y1": _num(y0), "x2": _num(x1), "y2": _num(y1),
            "stroke": "#888888", "stroke-width": "0.5"})

    for key, cls, colour in (("valid_samples", "valid", "black"), ("invalid_samples", "invalid", "red")):
        layer = ET.SubElement(root, f"{{{SVG_NS}}}g", {"id": cls})
        for s in snapshot.get(key, []):
            x, y = px(s)
            ET.SubElement(layer, f"{{{SVG_NS}}}circle", {
                "class": cls, "cx": _num(x), "cy": _num(y), "r": "1.5", "fill": colour})

    solutions = snapshot.get("solutions", [])
    if solutions:
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in map(px, solutions[-1]["path"]))
        ET.SubElement(root, f"{{{SVG_NS}}}polyline", {
            "class": "path", "points": pts, "fill": "none", "stroke": "blue", "stroke-width": "2.5"})

    for state, cls, colour in ((env.start, "start", "green"), (env.goal, "goal", "orange")):
        x, y = px(state)
        ET.SubElement(root, f"{{{SVG_NS}}}circle", {
            "class": cls, "cx": _num(x), "cy": _num(y), "r": "6", "fill": colour, "stroke": "black"})

    text = ET.tostring(root, encoding="unicode", xml_declaration=True)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return text
