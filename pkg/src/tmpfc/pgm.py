"""Minimal PGM (P2/P5) reader and writer.

Mask frames travel as 8-bit PGM: any toolchain can emit it and it parses
with no imaging dependency. Only maxval <= 255 is supported.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import MaskLoadError

_WHITESPACE = b" \t\r\n\x0b\x0c"


def _header_tokens(data: bytes, path, count: int) -> tuple[list[bytes], int]:
    """Read `count` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the offset one byte past the last token's
    trailing whitespace byte (where a P5 raster begins).
    """
    tokens: list[bytes] = []
    i = 0
    n = len(data)
    while len(tokens) < count and i < n:
        c = data[i : i + 1]
        if c in (b"#",):
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
        elif c in _WHITESPACE:
            i += 1
        else:
            j = i
            while j < n and data[j : j + 1] not in _WHITESPACE and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < count:
        raise MaskLoadError("FORMAT_ERROR", f"{path}: truncated PGM header")
    # exactly one whitespace byte separates the maxval from a binary raster
    return tokens, i + 1


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM file into a uint8 array of shape (height, width)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MaskLoadError("IO_ERROR", f"{path}: {exc}") from exc

    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise MaskLoadError("FORMAT_ERROR", f"{path}: not a PGM file (magic {magic!r})")

    tokens, raster_start = _header_tokens(data, path, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise MaskLoadError("FORMAT_ERROR", f"{path}: non-numeric PGM header") from exc
    if width <= 0 or height <= 0:
        raise MaskLoadError("FORMAT_ERROR", f"{path}: bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise MaskLoadError("FORMAT_ERROR", f"{path}: unsupported maxval {maxval}")

    npix = width * height
    if magic == b"P5":
        raster = data[raster_start : raster_start + npix]
        if len(raster) < npix:
            raise MaskLoadError("FORMAT_ERROR", f"{path}: raster truncated")
        arr = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = data[raster_start - 1 :]
        if b"#" in body:
            body = b"\n".join(
                line.split(b"#", 1)[0] for line in body.splitlines()
            )
        values = body.split()
        if len(values) < npix:
            raise MaskLoadError("FORMAT_ERROR", f"{path}: raster truncated")
        try:
            arr = np.array([int(v) for v in values[:npix]], dtype=np.int64)
        except ValueError as exc:
            raise MaskLoadError("FORMAT_ERROR", f"{path}: non-numeric raster") from exc
        if arr.min() < 0 or arr.max() > maxval:
            raise MaskLoadError("FORMAT_ERROR", f"{path}: sample out of range")
        arr = arr.astype(np.uint8)
    return arr.reshape(height, width)


def write_pgm(path, image: np.ndarray) -> None:
    """Write a uint8 (or boolean, mapped to 0/255) array as binary P5."""
    image = np.asarray(image)
    if image.dtype == bool:
        image = image.astype(np.uint8) * 255
    if image.dtype != np.uint8:
        raise ValueError(f"expected uint8 or bool image, got {image.dtype}")
    if image.ndim != 2:
        raise ValueError(f"expected 2-D image, got shape {image.shape}")
    height, width = image.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.tobytes())
