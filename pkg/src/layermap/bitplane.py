"""Bit-plane decomposition of 8-bit channels.

A binary image is a 2-D uint8 array of 0/1 values. A layer stack is a
(K, height, width) uint8 array; ``stack[k - 1]`` is plane k, with plane 1
holding the most significant bit.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .netpbm import GrayImage, RgbImage

K = 8
_MASK_RE = re.compile(r"^[01]{8}$")


def as_binary(bits) -> np.ndarray:
    """Validate and return a 2-D {0, 1} uint8 array."""
    arr = np.asarray(bits)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"binary image must be a non-empty 2-D array, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        arr = arr.astype(np.uint8)
    if arr.max() > 1:
        raise ValueError("binary image values must be 0 or 1")
    return arr


@dataclass(frozen=True)
class PlaneMask:
    """Set of selected plane indices in 1..K."""

    selected: frozenset = frozenset(range(1, K + 1))

    def __post_init__(self):
        sel = frozenset(int(k) for k in self.selected)
        bad = [k for k in sel if not 1 <= k <= K]
        if bad:
            raise ValueError(f"plane indices out of range 1..{K}: {sorted(bad)}")
        object.__setattr__(self, "selected", sel)

    @classmethod
    def parse(cls, text: str) -> PlaneMask:
        """Parse an 8-character 0/1 string, most significant plane first."""
        if not _MASK_RE.match(text):
            raise ValueError(f"plane mask must match [01]{{8}}, got {text!r}")
        return cls(frozenset(i + 1 for i, ch in enumerate(text) if ch == "1"))

    @classmethod
    def all(cls) -> PlaneMask:
        return cls(frozenset(range(1, K + 1)))

    @classmethod
    def none(cls) -> PlaneMask:
        return cls(frozenset())

    def __contains__(self, k) -> bool:
        return k in self.selected

    def __iter__(self):
        return iter(sorted(self.selected))

    def __len__(self):
        return len(self.selected)

    def is_prefix(self) -> bool:
        return self.selected == frozenset(range(1, len(self.selected) + 1))

    def __str__(self):
        return "".join("1" if k in self.selected else "0" for k in range(1, K + 1))


def decompose(img: GrayImage) -> np.ndarray:
    """Split a gray image into 8 binary planes, plane 1 = MSB."""
    px = img.pixels
    shifts = np.arange(K - 1, -1, -1, dtype=np.uint8).reshape(K, 1, 1)
    return ((px[None, :, :] >> shifts) & 1).astype(np.uint8)


def recompose(stack: np.ndarray) -> GrayImage:
    """Inverse of :func:`decompose`: pixel = sum_k bit_k * 2**(8 - k)."""
    stack = np.asarray(stack)
    if stack.ndim != 3 or stack.shape[0] != K:
        raise DimensionMismatch(f"expected a ({K}, h, w) layer stack, got shape {stack.shape}")
    weights = (1 << np.arange(K - 1, -1, -1, dtype=np.uint16)).reshape(K, 1, 1)
    return GrayImage((stack.astype(np.uint16) * weights).sum(axis=0).astype(np.uint8))


def split_channels(img: RgbImage) -> tuple[GrayImage, GrayImage, GrayImage]:
    px = img.pixels
    return GrayImage(px[:, :, 0].copy()), GrayImage(px[:, :, 1].copy()), GrayImage(px[:, :, 2].copy())


def merge_channels(r: GrayImage, g: GrayImage, b: GrayImage) -> RgbImage:
    if not r.pixels.shape == g.pixels.shape == b.pixels.shape:
        raise DimensionMismatch(
            f"channel shapes differ: {r.pixels.shape}, {g.pixels.shape}, {b.pixels.shape}")
    return RgbImage(np.stack([r.pixels, g.pixels, b.pixels], axis=-1))
