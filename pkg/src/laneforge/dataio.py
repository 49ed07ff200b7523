"""CULane / TuSimple annotation parsing and prediction serialization.

CULane ``*.lines.txt``: one lane per line, whitespace-separated
``x1 y1 x2 y2 ...`` in pixels.

TuSimple: one JSON object per line with ``lanes`` (x per h_sample, -2 for
absent), ``h_samples`` and ``raw_file``.

Both parsers accept ``str`` or UTF-8 ``bytes`` and LF or CRLF endings, and
report every failure as a :class:`~laneforge.errors.ParseError` subclass.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    EncodingError,
    LengthMismatch,
    MalformedJson,
    MissingKey,
    NonNumericToken,
    OddTokenCount,
    TypeMismatch,
    UnsupportedFormat,
)
from .geometry import Lane

TUSIMPLE_ABSENT = -2
CULANE_SIZE = (1640, 590)
TUSIMPLE_SIZE = (1280, 720)

Polyline = List[Tuple[float, float]]


@dataclass
class AnnotatedImage:
    image_path: str
    lanes: List[Polyline]
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        for lane in self.lanes:
            for x, y in lane:
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise ValueError("annotation coordinates must be finite")


def _text(data: Union[str, bytes]) -> str:
    if isinstance(data, (bytes, bytearray)):
        try:
            return bytes(data).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"input is not valid UTF-8 ({exc.reason})") from None
    return data


def _float_token(tok: str, line: int, col: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise NonNumericToken(f"not a number: {tok[:32]!r}", line, col) from None
    if not math.isfinite(v):
        raise NonNumericToken(f"non-finite value: {tok[:32]!r}", line, col)
    return v


def parse_culane_lines(text: Union[str, bytes]) -> List[Polyline]:
    lanes = []
    for lineno, raw in enumerate(_text(text).split("\n"), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) % 2:
            raise OddTokenCount(f"odd number of coordinates ({len(tokens)})", lineno)
        vals = [_float_token(t, lineno, i) for i, t in enumerate(tokens, start=1)]
        lanes.append(list(zip(vals[0::2], vals[1::2])))
    return lanes


def _number(v, what: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise TypeMismatch(f"{what} must be a finite number, got {type(v).__name__}")
    return float(v)


def parse_tusimple_json(line: Union[str, bytes]):
    """Return (h_samples, lanes, raw_file); absent points become NaN."""
    text = _text(line)
    try:
        obj = json.loads(text)
    except (ValueError, RecursionError) as exc:
        raise MalformedJson(f"invalid JSON: {str(exc)[:80]}") from None
    if not isinstance(obj, dict):
        raise TypeMismatch("record must be a JSON object")
    for key in ("lanes", "h_samples", "raw_file"):
        if key not in obj:
            raise MissingKey(f"missing key {key!r}")
    if not isinstance(obj["raw_file"], str):
        raise TypeMismatch("raw_file must be a string")
    if not isinstance(obj["h_samples"], list) or not isinstance(obj["lanes"], list):
        raise TypeMismatch("lanes and h_samples must be arrays")
    h = np.array([_number(v, "h_sample") for v in obj["h_samples"]], dtype=np.float64)
    lanes = []
    for n, lane in enumerate(obj["lanes"]):
        if not isinstance(lane, list):
            raise TypeMismatch(f"lane {n} must be an array")
        if len(lane) != len(h):
            raise LengthMismatch(f"lane {n} has {len(lane)} points for {len(h)} h_samples")
        xs = np.array([_number(v, f"lane {n} x") for v in lane], dtype=np.float64)
        xs[xs == TUSIMPLE_ABSENT] = np.nan
        lanes.append(xs)
    return h, lanes, obj["raw_file"]


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _json_num(v: float):
    r = round(float(v), 4)
    return int(r) if r == int(r) else r


def _lane_xs(lane) -> np.ndarray:
    return lane.xs if isinstance(lane, Lane) else np.asarray(lane, dtype=np.float64)


def serialize_predictions(lanes: Sequence, format: str, *, ys: Optional[Sequence[float]] = None,
                          raw_file: str = "") -> str:
    """Inverse of the matching parser.

    ``culane``: ``lanes`` are polylines of (x, y), or Lane/x-arrays when
    ``ys`` gives the slice rows; absent slices are omitted.
    ``tusimple``: ``lanes`` are Lane/x-arrays on ``ys`` (the h_samples);
    absent slices become -2. Emits a single JSON line.
    """
    if format == "culane":
        out = []
        for lane in lanes:
            if isinstance(lane, Lane) or (ys is not None and np.ndim(lane) == 1):
                if ys is None:
                    raise ValueError("ys is required to serialize slice lanes")
                xs = _lane_xs(lane)
                pts = [(x, y) for x, y in zip(xs, ys) if not math.isnan(x)]
            else:
                pts = list(lane)
            if pts:
                out.append(" ".join(f"{_fmt(x)} {_fmt(y)}" for x, y in pts))
        return "".join(line + "\n" for line in out)
    if format == "tusimple":
        if ys is None:
            raise ValueError("tusimple output needs the h_samples")
        rows = []
        for lane in lanes:
            xs = _lane_xs(lane)
            if len(xs) != len(ys):
                raise LengthMismatch(f"lane has {len(xs)} points for {len(ys)} h_samples")
            rows.append([TUSIMPLE_ABSENT if math.isnan(x) else _json_num(x) for x in xs])
        rec = {"lanes": rows, "h_samples": [_json_num(y) for y in ys], "raw_file": raw_file}
        return json.dumps(rec) + "\n"
    raise UnsupportedFormat(f"unsupported format {format!r}")


def read_tusimple_file(path: Union[str, Path]):
    """All records of a TuSimple label file, keyed by nothing (file order)."""
    records = []
    text = Path(path).read_bytes()
    for lineno, line in enumerate(_text(text).split("\n"), start=1):
        if not line.strip():
            continue
        try:
            records.append(parse_tusimple_json(line))
        except Exception as exc:
            if hasattr(exc, "line"):
                exc.line = lineno
            raise
    return records


def write_pgm16(path: Union[str, Path], grid: np.ndarray) -> None:
    """Binary 16-bit PGM, values in [0, 1] scaled by 65535, row-major."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2:
        raise ValueError("PGM grid must be 2-D")
    vals = np.rint(np.clip(grid, 0.0, 1.0) * 65535).astype(">u2")
    h, w = grid.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(vals.tobytes(order="C"))


def read_pgm16(path: Union[str, Path]) -> np.ndarray:
    """Read back a file written by :func:`write_pgm16` as values in [0, 1]."""
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end].decode("ascii"))
        pos = end
    if fields[0] != "P5" or fields[3] != "65535":
        raise ValueError("not a 16-bit binary PGM")
    w, h = int(fields[1]), int(fields[2])
    raw = np.frombuffer(data[pos + 1 : pos + 1 + 2 * w * h], dtype=">u2")
    return raw.reshape(h, w).astype(np.float64) / 65535.0
