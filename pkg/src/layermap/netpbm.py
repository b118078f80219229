"""Reading and writing PGM/PPM images (P2, P3, P5, P6)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MalformedHeader, MaxvalOutOfRange, TruncatedData, UnsupportedFormat

_WHITESPACE = b" \t\n\r\v\f"


@dataclass(eq=False)
class GrayImage:
    """8-bit gray image; ``pixels`` has shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"gray pixels must be a non-empty 2-D array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))


@dataclass(eq=False)
class RgbImage:
    """8-bit color image; ``pixels`` has shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"rgb pixels must have shape (h, w, 3), got {px.shape}")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise ValueError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))


class _Tokens:
    """Header tokenizer that skips whitespace and '#' comments."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def next(self, what: str) -> bytes:
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos:self.pos + 1]
            if ch in _WHITESPACE:
                self.pos += 1
            elif ch == b"#":
                while self.pos < n and data[self.pos] not in (10, 13):
                    self.pos += 1
            else:
                break
        start = self.pos
        while self.pos < n and data[self.pos:self.pos + 1] not in _WHITESPACE and data[self.pos] != 35:
            self.pos += 1
        if start == self.pos:
            raise MalformedHeader(f"missing {what}")
        return data[start:self.pos]

    def int(self, what: str) -> int:
        tok = self.next(what)
        if not tok.isdigit():
            raise MalformedHeader(f"{what} is not a non-negative integer: {tok!r}")
        return int(tok)


def read_image(data: bytes) -> GrayImage | RgbImage:
    """Parse a netpbm byte string.

    P2/P5 give a GrayImage and P3/P6 an RgbImage. Sample values are kept as
    stored even when maxval < 255.
    """
    magic = data[:2]
    if magic not in (b"P2", b"P3", b"P5", b"P6"):
        raise UnsupportedFormat(f"unsupported magic number {magic!r}")
    toks = _Tokens(data)
    toks.pos = 2
    if len(data) > 2 and data[2:3] not in _WHITESPACE and data[2:3] != b"#":
        raise UnsupportedFormat(f"unsupported magic number {data[:3]!r}")
    width = toks.int("width")
    height = toks.int("height")
    maxval = toks.int("maxval")
    if width < 1 or height < 1:
        raise MalformedHeader(f"image dimensions must be positive, got {width}x{height}")
    if maxval < 1:
        raise MalformedHeader("maxval must be at least 1")
    if maxval > 255:
        raise MaxvalOutOfRange(f"maxval {maxval} > 255 (16-bit samples are not supported)")

    channels = 3 if magic in (b"P3", b"P6") else 1
    count = width * height * channels
    if magic in (b"P5", b"P6"):
        # exactly one whitespace byte separates maxval from the raster
        start = toks.pos + 1
        raster = data[start:start + count]
        if len(raster) < count:
            raise TruncatedData(f"expected {count} samples, found {len(raster)}")
        samples = np.frombuffer(raster, dtype=np.uint8)
    else:
        body = data[toks.pos:].split()
        if len(body) < count:
            raise TruncatedData(f"expected {count} samples, found {len(body)}")
        try:
            samples = np.array([int(t) for t in body[:count]], dtype=np.int64)
        except ValueError as exc:
            raise MalformedHeader(f"non-numeric sample in raster: {exc}") from None
    if samples.max(initial=0) > maxval:
        raise MalformedHeader(f"sample value exceeds maxval {maxval}")

    if channels == 1:
        return GrayImage(samples.reshape(height, width).astype(np.uint8))
    return RgbImage(samples.reshape(height, width, 3).astype(np.uint8))


def write_image(img: GrayImage | RgbImage, encoding: str = "binary") -> bytes:
    """Serialize ``img`` with maxval 255 and a single-space header."""
    if encoding not in ("ascii", "binary"):
        raise ValueError(f"encoding must be 'ascii' or 'binary', got {encoding!r}")
    color = isinstance(img, RgbImage)
    if encoding == "binary":
        magic = "P6" if color else "P5"
    else:
        magic = "P3" if color else "P2"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    if encoding == "binary":
        return header + img.pixels.tobytes()
    per_row = img.width * (3 if color else 1)
    rows = img.pixels.reshape(img.height, per_row)
    lines = [" ".join(map(str, row)) for row in rows.tolist()]
    return header + ("\n".join(lines) + "\n").encode("ascii")


def load(path) -> GrayImage | RgbImage:
    with open(path, "rb") as fh:
        return read_image(fh.read())


def save(path, img: GrayImage | RgbImage, encoding: str = "binary") -> None:
    with open(path, "wb") as fh:
        fh.write(write_image(img, encoding))
