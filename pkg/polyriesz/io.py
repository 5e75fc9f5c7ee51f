"""
Reading and writing polygons, reports and drawings.

Polygon files are JSON, either ``{"vertices": [[x, y], ...]}`` or a bare list
of pairs. Every writer goes through a temporary file in the target directory
followed by an atomic rename.
"""
import csv
import io as _io
import json
import logging
import os
import tempfile

import numpy as np

from .errors import PolygonFileError, PolygonValidationError
from .geometry import Polygon, validate_polygon

logger = logging.getLogger(__name__)

SVG_SIZE = 800
SVG_MARGIN = 0.05


# ─── Atomic writes ───────────────────────────────────────────────────────────

def atomic_write_text(path, text):
    path = os.path.abspath(path)
    directory = os.path.dirname(path)
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.splitext(path)[1])
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps(obj):
    """Stable JSON: sorted keys, numpy scalars and arrays converted."""
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"{type(o).__name__} is not JSON serializable")


def write_json(path, obj):
    return atomic_write_text(path, dumps(obj))


def csv_text(rows, fieldnames):
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def write_csv(path, rows, fieldnames):
    return atomic_write_text(path, csv_text(rows, fieldnames))


def append_csv(path, rows, fieldnames):
    """Append rows to a CSV file (header written on creation), atomically."""
    existing = ""
    if os.path.isfile(path):
        with open(path, encoding="utf-8") as f:
            existing = f.read()
    text = csv_text(rows, fieldnames)
    if existing:
        text = existing + text.split("\n", 1)[1]
    return atomic_write_text(path, text)


# ─── Polygon JSON ────────────────────────────────────────────────────────────

def parse_polygon(text, source="<string>"):
    """Polygon from JSON text; diagnostics name the source and the reason."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise PolygonFileError(f"{source}:{e.lineno}: invalid JSON: {e.msg}") from None
    if isinstance(data, dict):
        if "vertices" not in data:
            raise PolygonFileError(f"{source}: missing 'vertices' field")
        data = data["vertices"]
    try:
        pts = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise PolygonFileError(f"{source}: 'vertices' must be a list of [x, y] pairs") from None
    try:
        return Polygon(pts)
    except PolygonValidationError as e:
        raise PolygonValidationError(f"{source}: {e}", e.issues) from None


def read_polygon(path):
    if not os.path.isfile(path):
        raise PolygonFileError(f"{path}: file not found")
    with open(path, encoding="utf-8") as f:
        return parse_polygon(f.read(), source=path)


def polygon_issues(text):
    """Validation records for polygon JSON text, without raising."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        return [{"severity": "error", "rule": "json", "location": f"line {e.lineno}",
                 "message": e.msg}]
    if isinstance(data, dict):
        data = data.get("vertices")
    if data is None:
        return [{"severity": "error", "rule": "json", "location": "vertices",
                 "message": "missing 'vertices' field"}]
    return validate_polygon(data)


def write_polygon(path, P, **extra):
    return write_json(path, {**P.to_dict(), **extra})


# ─── SVG ─────────────────────────────────────────────────────────────────────

def svg_text(P, disc=None, label=None):
    """Polygon (and optional disc (x, y, r)) fitted to an 800x800 viewport."""
    pts = P.vertices
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    if disc is not None:
        cx, cy, r = disc
        lo = np.minimum(lo, [cx - r, cy - r])
        hi = np.maximum(hi, [cx + r, cy + r])
    span = max(float((hi - lo).max()), 1e-12)
    margin = SVG_MARGIN * SVG_SIZE
    scale = (SVG_SIZE - 2 * margin) / span
    offset = 0.5 * (SVG_SIZE - 2 * margin - (hi - lo) * scale)

    def to_px(x, y):
        # flip Y
        return (margin + offset[0] + (x - lo[0]) * scale,
                SVG_SIZE - (margin + offset[1] + (y - lo[1]) * scale))

    path = " ".join(f"{px:.4f},{py:.4f}" for px, py in (to_px(x, y) for x, y in pts))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}" '
        f'width="{SVG_SIZE}" height="{SVG_SIZE}">',
        '  <rect width="100%" height="100%" fill="white"/>',
        f'  <polygon points="{path}" fill="#d8e4f0" stroke="black" stroke-width="1.5"/>',
    ]
    if disc is not None:
        px, py = to_px(cx, cy)
        out.append(f'  <circle cx="{px:.4f}" cy="{py:.4f}" r="{r * scale:.4f}" '
                   'fill="none" stroke="#c03030" stroke-width="1"/>')
    if label:
        out.append(f'  <text x="{margin:.1f}" y="{margin:.1f}" font-family="monospace" '
                   f'font-size="14">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, P, disc=None, label=None):
    return atomic_write_text(path, svg_text(P, disc, label))


# ─── DXF ─────────────────────────────────────────────────────────────────────

def write_dxf(path, P, disc=None, units="m"):
    """Closed LWPOLYLINE on layer POLYGON and an optional CIRCLE on layer DISC."""
    import ezdxf

    units_map = {"in": 1, "ft": 2, "mm": 4, "cm": 5, "m": 6}
    doc = ezdxf.new(dxfversion="R2010")
    doc.header["$INSUNITS"] = units_map.get(units, 6)
    msp = doc.modelspace()
    doc.layers.add("POLYGON", color=7)
    pline = msp.add_lwpolyline([tuple(map(float, v)) for v in P.vertices],
                               dxfattribs={"layer": "POLYGON"})
    pline.close()
    entities = 1
    if disc is not None:
        cx, cy, r = map(float, disc)
        doc.layers.add("DISC", color=1)
        msp.add_circle((cx, cy), r, dxfattribs={"layer": "DISC"})
        entities += 1

    abs_path = os.path.abspath(path)
    os.makedirs(os.path.dirname(abs_path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(abs_path), prefix=".tmp-", suffix=".dxf")
    os.close(fd)
    try:
        doc.saveas(tmp)
        os.replace(tmp, abs_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug("wrote %s (%d entities)", abs_path, entities)
    return abs_path


def parse_disc(text):
    """Parse "x,y,r" into (x, y, r) with r > 0."""
    try:
        x, y, r = (float(p) for p in text.split(","))
    except ValueError:
        raise ValueError(f"disc must be 'x,y,r', got {text!r}") from None
    if not r > 0:
        raise ValueError(f"disc radius must be positive, got {r}")
    return x, y, r
