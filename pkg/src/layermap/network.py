"""Capacitated grid networks whose minimum cuts are per-layer MAP estimates.

Pixel i is joined to the source with capacity alpha when y_i = 1 and to the
sink otherwise; every pair of 4-neighbours is joined by a pair of opposite
arcs of capacity 1. All capacities are integers in units of 1/scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitplane import as_binary
from .errors import AlphaNonPositive, DimensionMismatch, EmptySampleList

DEFAULT_SCALE = 10000


@dataclass(eq=False)
class GridNetwork:
    """Capacities of a 4-connected grid with source and sink arcs.

    ``edge_right[r, c]`` joins (r, c) and (r, c + 1); ``edge_down[r, c]``
    joins (r, c) and (r + 1, c). The last column of ``edge_right`` and the
    last row of ``edge_down`` are always zero (free boundary).
    """

    source_cap: np.ndarray
    sink_cap: np.ndarray
    edge_right: np.ndarray
    edge_down: np.ndarray
    scale: int = DEFAULT_SCALE

    def __post_init__(self):
        arrays = [np.ascontiguousarray(a, dtype=np.int64) for a in
                  (self.source_cap, self.sink_cap, self.edge_right, self.edge_down)]
        shape = arrays[0].shape
        if len(shape) != 2 or any(a.shape != shape for a in arrays):
            raise DimensionMismatch("all capacity arrays must share one 2-D shape")
        if any((a < 0).any() for a in arrays):
            raise ValueError("capacities must be non-negative")
        if arrays[2][:, -1].any() or arrays[3][-1, :].any():
            raise ValueError("boundary pixels cannot have out-of-range edges")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        self.source_cap, self.sink_cap, self.edge_right, self.edge_down = arrays

    @property
    def shape(self) -> tuple[int, int]:
        return self.source_cap.shape

    @property
    def width(self) -> int:
        return self.shape[1]

    @property
    def height(self) -> int:
        return self.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GridNetwork):
            return NotImplemented
        return self.scale == other.scale and all(
            np.array_equal(a, b) for a, b in zip(
                (self.source_cap, self.sink_cap, self.edge_right, self.edge_down),
                (other.source_cap, other.sink_cap, other.edge_right, other.edge_down)))


@dataclass(eq=False)
class CutResult:
    labeling: np.ndarray  # 1 = source side
    flow_value: int
    cut_capacity: int


def scaled(value: float, scale: int) -> int:
    """Round value * scale to the nearest integer, halves away from zero."""
    x = value * scale
    return int(np.floor(x + 0.5)) if x >= 0 else -int(np.floor(-x + 0.5))


def _uniform_edges(shape, scale: int):
    h, w = shape
    right = np.full((h, w), scale, dtype=np.int64)
    right[:, -1] = 0
    down = np.full((h, w), scale, dtype=np.int64)
    down[-1, :] = 0
    return right, down


def _check_alpha(alpha: float):
    if not alpha > 0:
        raise AlphaNonPositive(f"alpha must be positive, got {alpha}")


def build_network(y, alpha: float, scale: int = DEFAULT_SCALE) -> GridNetwork:
    y = as_binary(y)
    _check_alpha(alpha)
    a = scaled(alpha, scale)
    right, down = _uniform_edges(y.shape, scale)
    return GridNetwork(source_cap=a * y.astype(np.int64), sink_cap=a * (1 - y.astype(np.int64)),
                       edge_right=right, edge_down=down, scale=scale)


def build_multisample_network(samples, alpha: float, scale: int = DEFAULT_SCALE) -> GridNetwork:
    """Network for N independent observations of the same binary layer.

    The terminal capacity of pixel i is alpha * |m_i| on the side given by the
    sign of the vote margin m_i = sum_n (2 y_ni - 1).
    """
    samples = [as_binary(s) for s in samples]
    if not samples:
        raise EmptySampleList("at least one sample is required")
    shape = samples[0].shape
    if any(s.shape != shape for s in samples):
        raise DimensionMismatch("all samples must have the same dimensions")
    _check_alpha(alpha)
    margin = sum(2 * s.astype(np.int64) - 1 for s in samples)
    # round per distinct margin so N = 1 matches build_network exactly
    src = np.zeros(shape, dtype=np.int64)
    snk = np.zeros(shape, dtype=np.int64)
    for m in np.unique(np.abs(margin)):
        if m == 0:
            continue
        cap = scaled(alpha * int(m), scale)
        src[margin == m] = cap
        snk[margin == -m] = cap
    right, down = _uniform_edges(shape, scale)
    return GridNetwork(src, snk, right, down, scale)


def build_hierarchical_network(y_k, prev, alpha: float, scale: int = DEFAULT_SCALE) -> GridNetwork:
    """Network for layer k given the restored layers 1..k-1.

    Neighbours stay coupled only if they agree on every previous layer.
    """
    net = build_network(y_k, alpha, scale)
    shape = net.shape
    agree_right = np.ones(shape, dtype=bool)
    agree_down = np.ones(shape, dtype=bool)
    for z in prev:
        z = as_binary(z)
        if z.shape != shape:
            raise DimensionMismatch(f"previous layer has shape {z.shape}, expected {shape}")
        agree_right[:, :-1] &= z[:, :-1] == z[:, 1:]
        agree_down[:-1, :] &= z[:-1, :] == z[1:, :]
    net.edge_right = np.where(agree_right, net.edge_right, 0)
    net.edge_down = np.where(agree_down, net.edge_down, 0)
    return net


def cut_capacity(net: GridNetwork, x) -> int:
    """Capacity of the arcs leaving {s} + {i : x_i = 1}."""
    x = as_binary(x)
    if x.shape != net.shape:
        raise DimensionMismatch(f"labeling shape {x.shape} does not match network {net.shape}")
    one = x == 1
    total = int(net.sink_cap[one].sum()) + int(net.source_cap[~one].sum())
    total += int(net.edge_right[:, :-1][x[:, :-1] != x[:, 1:]].sum())
    total += int(net.edge_down[:-1, :][x[:-1, :] != x[1:, :]].sum())
    return total


def _counts(y, x) -> tuple[int, int]:
    y = as_binary(y)
    x = as_binary(x)
    if x.shape != y.shape:
        raise DimensionMismatch(f"shapes differ: {y.shape} vs {x.shape}")
    agree = int((x == y).sum())
    smooth = int((x[:, :-1] == x[:, 1:]).sum() + (x[:-1, :] == x[1:, :]).sum())
    return agree, smooth


def objective(y, x, alpha: float) -> float:
    """alpha * #{i : x_i = y_i} + #{neighbour pairs with x_i = x_j}."""
    agree, smooth = _counts(y, x)
    return alpha * agree + smooth


def scaled_objective(y, x, alpha: float, scale: int = DEFAULT_SCALE) -> int:
    """:func:`objective` in integer units of 1/scale, with alpha rounded as in the networks."""
    agree, smooth = _counts(y, x)
    return scaled(alpha, scale) * agree + scale * smooth
