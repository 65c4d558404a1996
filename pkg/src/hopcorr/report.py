"""File output: sweep CSV, PPM heatmaps and JSON, all written atomically."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .phases import PhasePoint, SweepGrid


def fmt(x) -> str:
    """Fixed 17-significant-digit float formatting for byte-stable output."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def atomic_write(path, data: bytes | str) -> None:
    """Write to a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _clean(o):
    # JSON has no inf/nan; emit them as strings
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False, default=_json_default) + "\n"


def write_json(path, obj) -> None:
    atomic_write(path, to_json(obj))


def sweep_csv(points: list[PhasePoint], P: int, meta: dict | None = None) -> str:
    """Sweep table, one row per cell.  ``meta`` is echoed as ``# key=value``
    comment lines ahead of the header."""
    lines = [f"# {k}={v}" for k, v in (meta or {}).items()]
    cols = ["T", "a", "label", "sublabel", "pressure", "converged"]
    cols += [f"M_{k + 1}" for k in range(P)] + ["max_abs_M"]
    lines.append(",".join(cols))
    for p in points:
        row = [fmt(p.T), fmt(p.a), p.label.value, p.sublabel or "", fmt(p.best.pressure),
               "true" if p.best.converged else "false"]
        row += [fmt(v) for v in p.best.M] + [fmt(p.max_abs_M)]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def heatmap_ppm(points: list[PhasePoint], grid: SweepGrid) -> bytes:
    """Binary P6 image, one pixel per cell.

    Row r holds T_values[r] (T increasing downward), column c holds
    a_values[c] (a increasing rightward).  Gray level
    ``round(255 * clip(max|M|, 0, 1))`` in all three channels; cells with no
    finite value are black.
    """
    rows, cols = grid.T_steps, grid.a_steps
    if len(points) != rows * cols:
        raise ValueError(f"{len(points)} points for a {rows}x{cols} grid")
    vals = np.array([p.max_abs_M for p in points], dtype=float).reshape(rows, cols)
    vals = np.where(np.isfinite(vals), np.clip(vals, 0.0, 1.0), 0.0)
    gray = np.rint(255.0 * vals).astype(np.uint8)
    rgb = np.repeat(gray[:, :, None], 3, axis=2)
    header = (
        "P6\n"
        f"# rows: T {fmt(grid.T_min)}..{fmt(grid.T_max)} increasing downward ({rows})\n"
        f"# cols: a {fmt(grid.a_min)}..{fmt(grid.a_max)} increasing rightward ({cols})\n"
        "# gray = round(255 * clip(max|M_mu|, 0, 1))\n"
        f"{cols} {rows}\n255\n"
    )
    return header.encode("ascii") + rgb.tobytes()


def read_ppm(data: bytes) -> np.ndarray:
    """Parse a P6 image (comments allowed) into a ``rows x cols x 3`` array."""
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    body = data[pos + 1:]
    return np.frombuffer(body, dtype=np.uint8, count=w * h * 3).reshape(h, w, 3)


def region_counts(points: list[PhasePoint]) -> dict:
    """Cell counts per label, with retrieval split by sublabel when present."""
    out: dict = {}
    for p in points:
        key = p.label.value
        if p.sublabel:
            key = f"{key}/{p.sublabel}"
        out[key] = out.get(key, 0) + 1
    return dict(sorted(out.items()))
