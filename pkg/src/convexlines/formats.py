"""Sample files and the SVG plotter.

JSONL, one object per sample:

    {"edges": [[x1, x2, k], ...], "endpoint": [e1, e2], "tries": t, "stream": s}

with edges in slope order.  The SVG output is a pure function of its inputs:
fixed float formatting, no timestamps, so identical samples give identical
bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .geometry import PolygonalLine, from_multiplicities
from .sampler import SampleBatch, SampleMeta

PARABOLA_POINTS = 512


def sample_record(line: PolygonalLine, meta: SampleMeta | None = None) -> dict:
    """The JSONL object for one sample; free draws count as one try."""
    e1, e2 = line.endpoint
    return {
        "edges": [[d.x1, d.x2, k] for d, k in line.edges],
        "endpoint": [e1, e2],
        "tries": meta.tries if meta is not None else 1,
        "stream": meta.stream_id if meta is not None else 0,
    }


def write_samples(path, batch: SampleBatch) -> int:
    """Write a batch as JSONL; returns the number of lines written."""
    metas = list(batch.meta) or [None] * len(batch.lines)
    if len(metas) != len(batch.lines):
        raise ParseError(f"{len(metas)} meta entries for {len(batch.lines)} lines")
    with open(path, "w", encoding="utf-8") as fh:
        for line, meta in zip(batch.lines, metas):
            fh.write(json.dumps(sample_record(line, meta), separators=(",", ":")))
            fh.write("\n")
    return len(batch.lines)


def _parse_record(obj, lineno: int) -> tuple[PolygonalLine, dict]:
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", lineno)
    for key in ("edges", "endpoint"):
        if key not in obj:
            raise ParseError(f"missing key {key!r}", lineno)
    edges = obj["edges"]
    if not isinstance(edges, list):
        raise ParseError("edges must be a list", lineno)
    pairs = []
    for item in edges:
        if not (isinstance(item, list) and len(item) == 3):
            raise ParseError(f"edge entry {item!r} is not [x1, x2, k]", lineno)
        x1, x2, k = item
        if not all(isinstance(v, int) for v in (x1, x2, k)):
            raise ParseError(f"edge entry {item!r} has non-integer fields", lineno)
        pairs.append(((x1, x2), k))
    try:
        line = from_multiplicities(pairs)
    except Exception as exc:
        raise ParseError(str(exc), lineno) from exc
    recorded = obj["endpoint"]
    if list(line.endpoint) != list(recorded):
        raise ParseError(
            f"recorded endpoint {recorded} but edges sum to {list(line.endpoint)}", lineno
        )
    return line, obj


def read_samples(path) -> list[tuple[PolygonalLine, dict]]:
    """Parse a JSONL sample file; malformed lines raise ParseError with the line number."""
    out: list[tuple[PolygonalLine, dict]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", lineno) from exc
            out.append(_parse_record(obj, lineno))
    return out


# ---------------------------------------------------------------------------
# SVG


_SIZE = 560.0  # plot square, px
_MARGIN = 48.0
_CAPTION = 34.0


def _px(x: float, y: float) -> tuple[float, float]:
    # unit square to pixels, y up
    return _MARGIN + x * _SIZE, _MARGIN + _SIZE - y * _SIZE


def _fmt_pt(x: float, y: float) -> str:
    px, py = _px(x, y)
    return f"{px:.2f},{py:.2f}"


def render_svg(
    samples: list[PolygonalLine],
    n: tuple[int, int],
    r: float | None = None,
) -> str:
    """Deterministic SVG: scaled sample lines over the limit parabola.

    Samples are drawn through S_n, so conditioned samples end at (1,1); the
    empty line renders as a dot at the origin.
    """
    n1, n2 = int(n[0]), int(n[1])
    if n1 < 0 or n2 < 0 or (n1 == 0 and n2 == 0):
        raise ParseError(f"target endpoint {(n1, n2)} outside Z^2_+ \\ {{0}}")
    w = _MARGIN * 2 + _SIZE
    h = _MARGIN * 2 + _SIZE + _CAPTION
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
        f'viewBox="0 0 {w:.0f} {h:.0f}">',
        f'<rect x="0" y="0" width="{w:.0f}" height="{h:.0f}" fill="white"/>',
    ]
    # unit-square frame with end-tick labels
    corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)]
    frame = " ".join(_fmt_pt(*c) for c in corners)
    parts.append(f'<polyline points="{frame}" fill="none" stroke="#888888" stroke-width="1"/>')
    x0, y0 = _px(0.0, 0.0)
    x1, _ = _px(1.0, 0.0)
    _, y1 = _px(0.0, 1.0)
    parts.append(
        f'<text x="{x0:.2f}" y="{y0 + 16:.2f}" font-size="11" font-family="monospace">0</text>'
    )
    parts.append(
        f'<text x="{x1 - 4:.2f}" y="{y0 + 16:.2f}" font-size="11" font-family="monospace">1</text>'
    )
    parts.append(
        f'<text x="{x0 - 14:.2f}" y="{y1 + 4:.2f}" font-size="11" font-family="monospace">1</text>'
    )
    for line in samples:
        verts = [(a / n1 if n1 else 0.0, b / n2 if n2 else 0.0) for a, b in line.vertices()]
        if len(verts) == 1:
            px, py = _px(*verts[0])
            parts.append(
                f'<circle cx="{px:.2f}" cy="{py:.2f}" r="2.5" fill="#4682b4" fill-opacity="0.6"/>'
            )
            continue
        pts = " ".join(_fmt_pt(*v) for v in verts)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#4682b4" '
            f'stroke-width="1" stroke-opacity="0.35"/>'
        )
    # limit arc sqrt(1-x1) + sqrt(x2) = 1 via u -> (1-(1-u)^2, u^2)
    u = np.linspace(0.0, 1.0, PARABOLA_POINTS)
    arc = np.stack([1.0 - (1.0 - u) ** 2, u**2], axis=1)
    d = "M " + " L ".join(_fmt_pt(float(a), float(b)) for a, b in arc)
    parts.append(f'<path d="{d}" fill="none" stroke="#c1121f" stroke-width="2"/>')
    r_label = "unspecified" if r is None else f"{r:g}"
    caption = f"n=({n1},{n2})  r={r_label}  count={len(samples)}"
    parts.append(
        f'<text x="{_MARGIN:.2f}" y="{_MARGIN * 2 + _SIZE + 20:.2f}" font-size="13" '
        f'font-family="monospace">{caption}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, samples, n, r: float | None = None) -> Path:
    path = Path(path)
    path.write_text(render_svg(samples, n, r), encoding="utf-8")
    return path
