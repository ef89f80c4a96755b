"""Label maps as PGM, palettes as JSON / comma-separated text, colour renders as PPM.

A label map's ``maxval`` header field is always ``C - 1`` so the class count
travels with the file. All writers are byte-deterministic.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import (
    LabelOutOfRangeError,
    MalformedHeaderError,
    NotNormalizedError,
    TruncatedPayloadError,
)
from .layout import HardLayout, validate_palette

_WS = b" \t\n\r\v\f"


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last one (where a P5 raster starts).
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise MalformedHeaderError("unexpected end of data inside the header")
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    if pos >= n or data[pos] not in _WS:
        raise MalformedHeaderError("header must end with a whitespace byte")
    return tokens, pos + 1


def read_label_map(data: bytes, num_classes: int | None = None) -> HardLayout:
    """Parse a P2 or P5 PGM into a :class:`HardLayout`.

    The class count defaults to ``maxval + 1``. Passing ``num_classes``
    overrides it (values must still fit under both bounds).
    """
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise MalformedHeaderError("not a P2/P5 PGM file")
    magic = data[:2]
    tokens, offset = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MalformedHeaderError(f"non-integer header field: {exc}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad dimensions {width}x{height}")
    if not 1 <= maxval <= 65535:
        raise MalformedHeaderError(f"maxval must be in [1, 65535], got {maxval}")
    classes = maxval + 1 if num_classes is None else num_classes
    count = width * height

    if magic == b"P5":
        if maxval > 255:
            raise MalformedHeaderError("binary label maps are limited to 256 classes")
        payload = data[offset : offset + count]
        if len(payload) < count:
            raise TruncatedPayloadError(f"expected {count} bytes, found {len(payload)}")
        values = np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
    else:
        text = re.sub(rb"#[^\r\n]*", b" ", data[offset:])
        fields = text.split()
        if len(fields) < count:
            raise TruncatedPayloadError(f"expected {count} values, found {len(fields)}")
        try:
            values = np.array([int(v) for v in fields[:count]], dtype=np.int64)
        except ValueError as exc:
            raise MalformedHeaderError(f"non-integer pixel value: {exc}") from None

    bound = min(maxval + 1, classes)
    if values.min() < 0 or values.max() >= bound:
        raise LabelOutOfRangeError(f"label {values.max()} out of range for {bound} classes")
    return HardLayout(values.reshape(height, width), classes)


def write_label_map(layout: HardLayout, binary: bool = False) -> bytes:
    """Encode a layout as PGM (P2 by default, P5 when ``binary``)."""
    height, width = layout.shape
    maxval = layout.num_classes - 1
    if maxval < 1:
        raise MalformedHeaderError("a PGM label map needs at least 2 classes")
    if binary:
        if maxval > 255:
            raise MalformedHeaderError("binary label maps are limited to 256 classes")
        header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
        return header + layout.labels.astype(np.uint8).tobytes()
    rows = "\n".join(" ".join(str(v) for v in row) for row in layout.labels.tolist())
    return f"P2\n{width} {height}\n{maxval}\n{rows}\n".encode("ascii")


def load_label_map(path, num_classes: int | None = None) -> HardLayout:
    return read_label_map(Path(path).read_bytes(), num_classes)


def save_label_map(path, layout: HardLayout, binary: bool = False) -> None:
    Path(path).write_bytes(write_label_map(layout, binary=binary))


def parse_palettes(text: str) -> list[np.ndarray]:
    """Parse palettes from a JSON array (or array of arrays), or CSV lines.

    Blank lines are ignored. Each palette is validated.
    """
    text = text.strip()
    if not text:
        raise NotNormalizedError("no palette found")
    if text.startswith("["):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            # one JSON array per line
            obj = [json.loads(line) for line in text.splitlines() if line.strip()]
        if obj and isinstance(obj[0], list):
            return [validate_palette(p) for p in obj]
        return [validate_palette(obj)]
    palettes = []
    for line in text.splitlines():
        if line.strip():
            palettes.append(validate_palette([float(x) for x in line.split(",")]))
    return palettes


def format_palette(p) -> str:
    """A palette as a compact JSON array; ``repr`` floats keep it lossless."""
    return "[" + ",".join(repr(float(x)) for x in p) + "]"


def format_palette_csv(p) -> str:
    return ",".join(repr(float(x)) for x in p)


def voc_colormap(n: int = 256) -> np.ndarray:
    """The PASCAL VOC colour table (bit-interleaved label index)."""
    cmap = np.zeros((n, 3), dtype=np.uint8)
    for i in range(n):
        r = g = b = 0
        c = i
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        cmap[i] = (r, g, b)
    return cmap


def render(layout: HardLayout) -> bytes:
    """Render a layout as an ASCII PPM (P3) with the VOC colour table.

    Classes beyond 255 wrap around the table.
    """
    cmap = voc_colormap()
    rgb = cmap[layout.labels % len(cmap)]
    height, width = layout.shape
    rows = "\n".join(" ".join(str(v) for v in row) for row in rgb.reshape(height, -1).tolist())
    return f"P3\n{width} {height}\n255\n{rows}\n".encode("ascii")
