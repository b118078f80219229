"""Per-bit binary symmetric noise and the epsilon <-> h conversion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitplane import K, PlaneMask
from .errors import EpsilonDegenerate


@dataclass(frozen=True)
class NoiseModel:
    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def h_from_epsilon(epsilon: float) -> float:
    """Field strength h = ln((1 - eps) / eps)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon == 0.0 or epsilon == 1.0:
        raise EpsilonDegenerate(f"h is infinite for epsilon = {epsilon}")
    return math.log1p(-epsilon) - math.log(epsilon)


def epsilon_from_h(h: float) -> float:
    """Flip probability 1 / (1 + e^h), the inverse of :func:`h_from_epsilon`."""
    if not math.isfinite(h):
        raise ValueError(f"h must be finite, got {h}")
    # written via expit to stay finite for large |h|
    if h >= 0:
        e = math.exp(-h)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(h))


def plane_uniforms(seed: int, plane_id: int, n: int) -> np.ndarray:
    """Uniforms in [0, 1) for pixel indices 0..n-1 of one plane.

    Philox is counter based: the key is (seed, plane_id) and the i-th draw
    depends only on the counter, so every plane's stream is reproducible no
    matter in which order planes are processed.
    """
    key = (int(plane_id) << 64) | int(seed)
    return np.random.Generator(np.random.Philox(key=key)).random(n)


def flip_indicator(shape, epsilon: float, seed: int, plane_id: int) -> np.ndarray:
    n = int(np.prod(shape))
    if epsilon == 0.0:
        return np.zeros(shape, dtype=np.uint8)
    if epsilon == 1.0:
        return np.ones(shape, dtype=np.uint8)
    return (plane_uniforms(seed, plane_id, n) < epsilon).astype(np.uint8).reshape(shape)


def corrupt(stack: np.ndarray, model: NoiseModel, mask: PlaneMask | None = None,
            channel: int = 0) -> np.ndarray:
    """Flip each bit of the selected planes independently with probability epsilon.

    ``channel`` offsets the plane keys so the three channels of a color image
    receive independent noise.
    """
    mask = PlaneMask.all() if mask is None else mask
    out = np.array(stack, dtype=np.uint8, copy=True)
    for k in mask:
        out[k - 1] ^= flip_indicator(out.shape[1:], model.epsilon, model.seed, channel * K + k)
    return out
