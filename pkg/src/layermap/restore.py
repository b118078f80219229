"""Layer-by-layer MAP restoration of gray and color images.

Each bit plane k of the observation is restored independently as the
maximizer of alpha_k * #agreements-with-data + #equal-neighbour-pairs, found
exactly as a minimum cut. Variants: hierarchical coupling (neighbours are
only smoothed in plane k if they agree on all restored planes above it),
multiple independent observations, and iterated restoration.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .bitplane import K, PlaneMask, as_binary, decompose, merge_channels, recompose, split_channels
from .errors import (AlphaNonPositive, AlphaScheduleDecreasing, DimensionMismatch,
                     EmptySampleList, InstanceTooLarge, NonPrefixMask)
from .maxflow import max_flow, min_cut_labeling
from .netpbm import GrayImage, RgbImage
from .network import (DEFAULT_SCALE, build_hierarchical_network, build_multisample_network,
                      build_network, scaled)
from .noise import h_from_epsilon

UNIFORM = "uniform"
LAYERED = "layered"
BRUTE_FORCE_MAX_PIXELS = 20


@dataclass(frozen=True)
class RestoreParams:
    """Prior strength ``beta``, data strength ``h`` and which planes to restore.

    ``weighting="uniform"`` uses alpha = h / beta on every plane;
    ``"layered"`` uses (h / beta) * 2**k, i.e. a smoothing weight beta / 2**k
    on plane k.
    """

    beta: float
    h: float
    mask: PlaneMask = field(default_factory=PlaneMask.all)
    weighting: str = UNIFORM
    scale: int = DEFAULT_SCALE

    def __post_init__(self):
        if self.weighting not in (UNIFORM, LAYERED):
            raise ValueError(f"weighting must be {UNIFORM!r} or {LAYERED!r}, got {self.weighting!r}")
        if self.scale <= 0:
            raise ValueError("scale must be a positive integer")
        if len(self.mask) and not (self.beta > 0 and self.h > 0 and math.isfinite(self.h / self.beta)):
            raise AlphaNonPositive(f"need beta > 0 and h > 0, got beta={self.beta}, h={self.h}")

    @classmethod
    def from_epsilon(cls, beta: float, epsilon: float, **kw) -> RestoreParams:
        return cls(beta=beta, h=h_from_epsilon(epsilon), **kw)

    @property
    def base_alpha(self) -> float:
        return self.h / self.beta


def _plane_alpha(base: float, k: int, weighting: str) -> float:
    if not 1 <= k <= K:
        raise ValueError(f"plane index must be in 1..{K}, got {k}")
    return base * 2.0 ** k if weighting == LAYERED else base


def effective_alpha(params: RestoreParams, k: int) -> float:
    if not (params.beta > 0 and params.h > 0):
        raise AlphaNonPositive(f"need beta > 0 and h > 0, got beta={params.beta}, h={params.h}")
    return _plane_alpha(params.base_alpha, k, params.weighting)


@dataclass(frozen=True)
class PlaneReport:
    """Per-plane bookkeeping for restore runs (flow in units of 1/scale)."""

    plane: int
    alpha: float
    flow: int
    seconds: float


def restore_layer(y, alpha: float, scale: int = DEFAULT_SCALE) -> np.ndarray:
    """Canonical maximizer of alpha * agreements + smooth pairs for one layer."""
    return min_cut_labeling(build_network(y, alpha, scale)).labeling


def _solve(net, k, alpha):
    t0 = time.perf_counter()
    state = max_flow(net)
    labeling = min_cut_labeling(net, state).labeling
    return labeling, PlaneReport(k, alpha, state.total_flow, time.perf_counter() - t0)


def restore_stack(stack: np.ndarray, params: RestoreParams, threads: int = 1,
                  base_alpha: float | None = None) -> tuple[np.ndarray, list[PlaneReport]]:
    """Restore the selected planes of a layer stack; others are copied.

    Planes are independent, so up to ``threads`` of them are solved at once.
    """
    base = params.base_alpha if base_alpha is None else base_alpha
    out = np.array(stack, dtype=np.uint8, copy=True)
    planes = list(params.mask)
    if not planes:
        return out, []
    alphas = {k: _plane_alpha(base, k, params.weighting) for k in planes}

    def job(k):
        return _solve(build_network(out[k - 1], alphas[k], params.scale), k, alphas[k])

    if threads > 1 and len(planes) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(planes))) as pool:
            results = list(pool.map(job, planes))
    else:
        results = [job(k) for k in planes]
    reports = []
    for k, (labeling, report) in zip(planes, results):
        out[k - 1] = labeling
        reports.append(report)
    return out, reports


def restore_image(y: GrayImage, params: RestoreParams, threads: int = 1) -> GrayImage:
    stack, _ = restore_stack(decompose(y), params, threads)
    return recompose(stack)


def restore_rgb(y: RgbImage, params: RestoreParams, threads: int = 1) -> RgbImage:
    return merge_channels(*(restore_image(c, params, threads) for c in split_channels(y)))


def restore_hierarchical_stack(stack: np.ndarray, params: RestoreParams
                               ) -> tuple[np.ndarray, list[PlaneReport]]:
    if not params.mask.is_prefix():
        raise NonPrefixMask(f"hierarchical mode needs planes 1..m selected, got {params.mask}")
    out = np.array(stack, dtype=np.uint8, copy=True)
    reports = []
    for k in params.mask:
        alpha = effective_alpha(params, k)
        net = build_hierarchical_network(out[k - 1], out[:k - 1], alpha, params.scale)
        out[k - 1], report = _solve(net, k, alpha)
        reports.append(report)
    return out, reports


def restore_hierarchical(y: GrayImage, params: RestoreParams) -> GrayImage:
    stack, _ = restore_hierarchical_stack(decompose(y), params)
    return recompose(stack)


def restore_multisample_stacks(stacks: list[np.ndarray], params: RestoreParams
                               ) -> tuple[np.ndarray, list[PlaneReport]]:
    """Joint restoration from several layer stacks of the same scene.

    Unselected planes are taken from the first observation.
    """
    if not stacks:
        raise EmptySampleList("at least one sample is required")
    shape = stacks[0].shape
    if any(s.shape != shape for s in stacks):
        raise DimensionMismatch("all samples must have the same dimensions")
    out = np.array(stacks[0], dtype=np.uint8, copy=True)
    reports = []
    for k in params.mask:
        alpha = effective_alpha(params, k)
        net = build_multisample_network([s[k - 1] for s in stacks], alpha, params.scale)
        out[k - 1], report = _solve(net, k, alpha)
        reports.append(report)
    return out, reports


def restore_multisample(samples: list[GrayImage], params: RestoreParams) -> GrayImage:
    if not samples:
        raise EmptySampleList("at least one sample is required")
    stack, _ = restore_multisample_stacks([decompose(s) for s in samples], params)
    return recompose(stack)


def check_schedule(alphas) -> list[float]:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("alpha schedule must not be empty")
    if any(not a > 0 for a in alphas):
        raise AlphaNonPositive(f"schedule contains a non-positive alpha: {alphas}")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise AlphaScheduleDecreasing(f"alpha schedule must be nondecreasing: {alphas}")
    return alphas


def iterate_restore(y: GrayImage, alphas, params: RestoreParams) -> list[GrayImage]:
    """Restore ``y`` with alphas[0], the result with alphas[1], and so on.

    The alphas replace h / beta; plane weighting still applies. Returns every
    intermediate image.
    """
    alphas = check_schedule(alphas)
    out = []
    current = decompose(y)
    for a in alphas:
        current, _ = restore_stack(current, params, base_alpha=a)
        out.append(recompose(current))
    return out


@dataclass(eq=False)
class BruteForceResult:
    max_value: float
    max_scaled: int
    maximizers: np.ndarray  # (count, h, w)


@lru_cache(maxsize=32)
def _smooth_counts(h: int, w: int) -> np.ndarray:
    n = h * w
    codes = np.arange(1 << n, dtype=np.int64)
    smooth = np.zeros(1 << n, dtype=np.int64)
    for r in range(h):
        for c in range(w):
            i = r * w + c
            for j in ((i + 1) if c + 1 < w else None, (i + w) if r + 1 < h else None):
                if j is not None:
                    smooth += 1 - (((codes >> i) ^ (codes >> j)) & 1)
    smooth.flags.writeable = False
    return smooth


def brute_force_map(y, alpha: float, scale: int = DEFAULT_SCALE) -> BruteForceResult:
    """Exhaustive maximization of the layer objective over all 2**(h*w) labelings.

    Values are compared in integer units of 1/scale with alpha rounded exactly
    as the networks round it; ``max_value`` is the float objective of the
    maximizers.
    """
    y = as_binary(y)
    h, w = y.shape
    n = h * w
    if n > BRUTE_FORCE_MAX_PIXELS:
        raise InstanceTooLarge(f"{n} pixels exceeds the brute-force limit of {BRUTE_FORCE_MAX_PIXELS}")
    ycode = int((y.reshape(-1).astype(np.int64) << np.arange(n, dtype=np.int64)).sum())
    codes = np.arange(1 << n, dtype=np.int64)
    agree = n - np.bitwise_count(codes ^ ycode).astype(np.int64)
    smooth = _smooth_counts(h, w)
    values = scaled(alpha, scale) * agree + scale * smooth
    best = int(values.max())
    winners = np.flatnonzero(values == best)
    bits = ((winners[:, None] >> np.arange(n)) & 1).astype(np.uint8).reshape(-1, h, w)
    i0 = winners[0]
    return BruteForceResult(max_value=alpha * int(agree[i0]) + int(smooth[i0]),
                            max_scaled=best, maximizers=bits)
