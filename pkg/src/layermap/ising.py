"""Estimation of (beta, epsilon) for a binary layer from the layer itself.

The original layer is modelled as a sample of the 2-D Ising model at inverse
temperature beta, seen through a binary symmetric channel with flip
probability epsilon. Noise multiplies every two-point correlation by
(1 - 2 epsilon)**2, so the ratio of the nearest-neighbour to the diagonal
correlation depends on beta alone. Matching the empirical ratio G1/G2 to the
infinite-volume ratio phi(beta) = r(1)/r(sqrt 2) gives beta_hat, and
G1 / r(1) at beta_hat gives epsilon_hat.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.optimize import brentq
from scipy.special import ellipe, ellipkm1

from .bitplane import as_binary, decompose
from .errors import BetaOutOfRange, DegenerateSample, InteriorEmpty, RatioNotAboveOne
from .netpbm import GrayImage

BETA_C = 0.5 * math.log(1.0 + math.sqrt(2.0))
BETA_MIN = 0.05
BETA_MAX = 1.5
BETA_STEP = 0.005

CLAMPED_RATIO = "ClampedRatio"
CLAMPED_EPSILON = "ClampedEpsilon"
DEGENERATE = "DegenerateSample"


def to_spins(bits) -> np.ndarray:
    """Map a {0, 1} layer to {-1, +1} spins."""
    return 2 * as_binary(bits).astype(np.int8) - 1


def from_spins(spins) -> np.ndarray:
    s = np.asarray(spins)
    if not np.isin(s, (-1, 1)).all():
        raise ValueError("spins must be -1 or +1")
    return ((s + 1) // 2).astype(np.uint8)


def g_statistic(spins, a: int) -> float:
    """Mean spin product over the 4 offsets of class ``a`` from interior sites.

    Class 1 uses the lattice neighbours (+-1, 0), (0, +-1); class 2 the
    diagonal neighbours (+-1, +-1). Each interior site contributes 4 ordered
    pairs, so the result is the average of 4 |interior| products.
    """
    s = np.asarray(spins, dtype=np.int64)
    h, w = s.shape
    if h < 3 or w < 3:
        raise InteriorEmpty(f"a {h}x{w} image has no interior sites")
    if a == 1:
        offsets = ((0, 1), (0, -1), (1, 0), (-1, 0))
    elif a == 2:
        offsets = ((1, 1), (1, -1), (-1, 1), (-1, -1))
    else:
        raise ValueError(f"a must be 1 or 2, got {a}")
    core = s[1:-1, 1:-1]
    total = 0
    for dr, dc in offsets:
        total += int((core * s[1 + dr:h - 1 + dr, 1 + dc:w - 1 + dc]).sum())
    return total / (4 * core.size)


def _check_beta(beta: float):
    if not BETA_MIN <= beta <= BETA_MAX:
        raise BetaOutOfRange(f"beta = {beta} outside [{BETA_MIN}, {BETA_MAX}]")


def _nn_exact(beta: float) -> float:
    t = math.tanh(2.0 * beta)
    coeff = 2.0 * t * t - 1.0
    if coeff == 0.0:
        # coeff * K(kappa) -> 0 at beta_c since K diverges only logarithmically
        return 0.5 / t
    # 1 - kappa**2 == coeff**2, so K is evaluated from its complementary parameter
    return 0.5 / t * (1.0 + (2.0 / math.pi) * coeff * float(ellipkm1(coeff * coeff)))


def _diag_exact(beta: float) -> float:
    k = math.sinh(2.0 * beta) ** 2
    if k < 1.0:
        p = (1.0 - k) * (1.0 + k)
        return 2.0 / (math.pi * k) * (float(ellipe(1.0 - p)) - p * float(ellipkm1(p)))
    return 2.0 / math.pi * float(ellipe(1.0 / (k * k)))


def nn_correlation(beta: float) -> float:
    """Infinite-volume E[S_0 S_1] for nearest neighbours.

    Uses the closed form coth(2b)/2 * (1 + (2/pi)(2 tanh^2(2b) - 1) K(kappa))
    with kappa = 2 sinh(2b) / cosh^2(2b); it is the same on both sides of
    the critical point.
    """
    _check_beta(beta)
    return _nn_exact(beta)


def diag_correlation(beta: float) -> float:
    """Infinite-volume E[S_(0,0) S_(1,1)] along a lattice diagonal.

    With k = sinh^2(2b): (2 / (pi k)) (E(k) - (1 - k^2) K(k)) below the
    critical coupling and (2/pi) E(1/k) above it (moduli, not parameters).
    """
    _check_beta(beta)
    return _diag_exact(beta)


def phi(beta: float) -> float:
    """Ratio r(1) / r(sqrt 2); strictly decreasing towards 1."""
    _check_beta(beta)
    return _nn_exact(beta) / _diag_exact(beta)


@dataclass(frozen=True)
class CorrelationTable:
    beta_grid: np.ndarray
    r1: np.ndarray
    r_sqrt2: np.ndarray
    accuracy: float = 1e-3

    @property
    def phi(self) -> np.ndarray:
        return self.r1 / self.r_sqrt2

    def check(self) -> None:
        """Raise if the tabulated values break the expected orderings."""
        r1, r2 = self.r1, self.r_sqrt2
        if not (np.all(r2 >= 0) and np.all(r1 >= r2) and np.all(r1 <= 1)):
            raise ValueError("correlation table must satisfy 1 >= r1 >= r_sqrt2 >= 0")
        if not (np.all(np.diff(r1) >= 0) and np.all(np.diff(r2) >= 0)):
            raise ValueError("correlations must be nondecreasing in beta")
        if not np.all(np.diff(self.phi) < 0):
            raise ValueError("phi must be strictly decreasing in beta")


def correlation_table(beta_min: float = BETA_MIN, beta_max: float = BETA_MAX,
                      step: float = BETA_STEP) -> CorrelationTable:
    n = int(round((beta_max - beta_min) / step)) + 1
    grid = np.linspace(beta_min, beta_max, n)
    table = CorrelationTable(beta_grid=grid,
                             r1=np.array([_nn_exact(b) for b in grid]),
                             r_sqrt2=np.array([_diag_exact(b) for b in grid]))
    table.check()
    return table


PHI_MIN = _nn_exact(BETA_MAX) / _diag_exact(BETA_MAX)
PHI_MAX = _nn_exact(BETA_MIN) / _diag_exact(BETA_MIN)


class ClampedRatioWarning(UserWarning):
    pass


def _phi_inverse(ratio: float, xtol: float) -> tuple[float, bool]:
    if not ratio > 1.0:
        raise RatioNotAboveOne(f"ratio {ratio} must exceed 1")
    if ratio >= PHI_MAX:
        return BETA_MIN, ratio > PHI_MAX
    if ratio <= PHI_MIN:
        return BETA_MAX, ratio < PHI_MIN
    beta = brentq(lambda b: _nn_exact(b) / _diag_exact(b) - ratio, BETA_MIN, BETA_MAX,
                  xtol=xtol, rtol=4 * np.finfo(float).eps)
    return float(beta), False


def phi_inverse(ratio: float, xtol: float = 1e-8) -> float:
    """Solve phi(beta) = ratio for beta in [BETA_MIN, BETA_MAX].

    Ratios beyond the range of phi are clamped to the nearest end of the beta
    range with a ClampedRatioWarning.
    """
    beta, clamped = _phi_inverse(ratio, xtol)
    if clamped:
        warnings.warn(f"ratio {ratio} outside [{PHI_MIN:.6g}, {PHI_MAX:.6g}]; beta clamped to {beta}",
                      ClampedRatioWarning, stacklevel=2)
    return beta


@dataclass(frozen=True)
class EstimateResult:
    beta_hat: float
    epsilon_hat: float
    g1: float
    g2: float
    warnings: frozenset = field(default_factory=frozenset)

    @property
    def degenerate(self) -> bool:
        return DEGENERATE in self.warnings


def estimate_parameters(plane) -> EstimateResult:
    """Estimate (beta, epsilon) for one observed binary layer."""
    spins = to_spins(plane)
    g1 = g_statistic(spins, 1)
    g2 = g_statistic(spins, 2)
    if g1 <= 0 or g2 <= 0 or g1 / g2 <= 1.0:
        raise DegenerateSample(f"G1 = {g1:.6g}, G2 = {g2:.6g}: need 0 < G2 < G1")
    beta_hat, clamped = _phi_inverse(g1 / g2, 1e-8)
    flags = {CLAMPED_RATIO} if clamped else set()
    r1 = _nn_exact(beta_hat)
    if g1 > r1:
        flags.add(CLAMPED_EPSILON)
        eps_hat = 0.0
    else:
        eps_hat = 0.5 * (1.0 - math.sqrt(g1 / r1))
    return EstimateResult(beta_hat, eps_hat, g1, g2, frozenset(flags))


def estimate_image(img: GrayImage) -> list[EstimateResult]:
    """One estimate per bit plane; degenerate planes get NaN estimates."""
    results = []
    for plane in decompose(img):
        try:
            results.append(estimate_parameters(plane))
        except DegenerateSample:
            spins = to_spins(plane)
            results.append(EstimateResult(math.nan, math.nan, g_statistic(spins, 1),
                                          g_statistic(spins, 2), frozenset({DEGENERATE})))
    return results


@numba.njit(cache=True)
def _heat_bath_sweep(s, u, beta):
    h, w = s.shape
    for r in range(h):
        up = (r - 1) % h
        dn = (r + 1) % h
        for c in range(w):
            field_ = s[up, c] + s[dn, c] + s[r, (c - 1) % w] + s[r, (c + 1) % w]
            p_up = 1.0 / (1.0 + math.exp(-2.0 * beta * field_))
            s[r, c] = 1 if u[r, c] < p_up else -1


def gibbs_sample(side: int, beta: float, sweeps: int, seed: int) -> np.ndarray:
    """Heat-bath sample of the Ising model on a side x side torus, as a {0, 1} layer.

    Starts from i.i.d. fair spins and performs ``sweeps`` raster-order sweeps.
    """
    if side < 8:
        raise ValueError("side must be at least 8")
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    rng = np.random.default_rng(seed)
    s = np.where(rng.random((side, side)) < 0.5, -1, 1).astype(np.int8)
    for _ in range(sweeps):
        _heat_bath_sweep(s, rng.random((side, side)), float(beta))
    return from_spins(s)
