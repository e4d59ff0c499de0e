"""
The cascade oracle.

Exact application of the refinement operator V on CPwL functions, binary
digit extraction, and the transfer-matrix product form of V^n g. Everything
the compiled networks are checked against lives here, and none of it
depends on the network code.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from cascadenet.conf import settings
from cascadenet.cpwl import CPwL, dilate_shift, linear_combine, support, sup_distance
from cascadenet.exceptions import ValidationError
from cascadenet.masks import Mask, transfer_matrices

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class BitTrace:
    x: float
    bits: Tuple[int, ...]
    residuals: Tuple[float, ...]

    def reconstruct(self) -> float:
        """sum B_k 2^-k + 2^-n R_n."""
        n = len(self.bits)
        head = sum(b * 2.0 ** -(k + 1) for k, b in enumerate(self.bits))
        tail = self.residuals[-1] if n else self.x
        return head + 2.0 ** -n * tail


@dataclass
class RateFit:
    """Least-squares fit of log(values) against n over a trusted suffix."""

    lam: Optional[float] = None
    intercept: Optional[float] = None
    max_residual: Optional[float] = None
    used: Tuple[int, ...] = field(default_factory=tuple)


@dataclass
class IterationHistory:
    increments: List[Tuple[int, float]]
    fit: RateFit


def apply_V(mask: Mask, g: CPwL) -> CPwL:
    """Vg(x) = sum_j c_j g(2x - j), exactly."""
    terms = [dilate_shift(g, 2.0, float(j)) for j in range(mask.N + 1)]
    return linear_combine(mask.coefficients, terms)


def apply_Vn(mask: Mask, g: CPwL, n: int) -> CPwL:
    if n < 0:
        raise ValidationError(f"n must be non-negative, got {n}.")
    if n > settings.MAX_ORACLE_N:
        logger.warning("Oracle asked for n=%d; breakpoint count grows like N*2^n.", n)
    result = g
    for _ in range(n):
        result = apply_V(mask, result)
    logger.debug("V^%d g has %d breakpoints", n, len(result))
    return result


def bit_trace(x: float, n: int) -> BitTrace:
    """Binary digits B_j = Q(R_{j-1}) and residuals R_j = 2R_{j-1} - B_j."""
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"bit_trace needs x in [0, 1], got {x!r}.")
    bits: List[int] = []
    residuals: List[float] = []
    r = float(x)
    for _ in range(n):
        b = 1 if r >= 0.5 else 0
        r = 2.0 * r - b
        bits.append(b)
        residuals.append(r)
    return BitTrace(float(x), tuple(bits), tuple(residuals))


def bits_and_residual(x: ArrayLike, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized bit_trace: bits of shape (len(x), n) and R^n(x)."""
    r = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if np.any((r < 0) | (r > 1)):
        raise ValidationError("Bits are defined for x in [0, 1] only.")
    bits = np.zeros((r.size, n), dtype=np.int8)
    for j in range(n):
        b = r >= 0.5
        bits[:, j] = b
        r = 2.0 * r - b
    return bits, r


def residual_R(x: ArrayLike) -> Union[float, np.ndarray]:
    """R(x) = 2x - Q(x) on [0, 1], 0 for x <= 0 and 1 for x >= 1."""
    y = np.asarray(x, dtype=float)
    inner = 2.0 * y - (y >= 0.5)
    out = np.where(y <= 0, 0.0, np.where(y >= 1, 1.0, inner))
    return float(out) if out.ndim == 0 else out


def residual_Rn(x: ArrayLike, n: int) -> Union[float, np.ndarray]:
    """R^n by n-fold iteration."""
    y = x
    for _ in range(n):
        y = residual_R(y)
    if np.ndim(y) == 0:
        return float(y)
    return np.asarray(y, dtype=float)


def residual_Rn_closed(x: ArrayLike, n: int) -> Union[float, np.ndarray]:
    """R^n(x) = 2^n x - floor(2^n x) on [0, 1), with the tail convention."""
    y = np.asarray(x, dtype=float)
    scaled = y * 2.0 ** n
    inner = scaled - np.floor(scaled)
    out = np.where(y <= 0, 0.0, np.where(y >= 1, 1.0, inner))
    return float(out) if out.ndim == 0 else out


def _check_seed(g: CPwL, N: int) -> None:
    hull = support(g)
    if g.left_tail != 0 or g.right_tail != 0:
        raise ValidationError("Seed must vanish outside [0, N].")
    if hull is not None and (hull[0] < -settings.MERGE_TOL or hull[1] > N + settings.MERGE_TOL):
        raise ValidationError(f"Seed support {hull} is not inside [0, {N}].")


def seed_vector(g: CPwL, N: int, y: ArrayLike) -> np.ndarray:
    """G(y) = (g(y), g(y+1), ..., g(y+N-1)), shape (len(y), N)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return np.stack([g(y + k) for k in range(N)], axis=-1)


def cascade_Gn(mask: Mask, g: CPwL, x: ArrayLike, n: int) -> np.ndarray:
    """G_n(x) = T_{B_1} ... T_{B_n} G(R^n(x)).

    Returns shape (N,) for scalar x and (len(x), N) otherwise.
    """
    N = mask.N
    _check_seed(g, N)
    pair = transfer_matrices(mask)
    bits, r = bits_and_residual(x, n)
    v = seed_vector(g, N, r)
    for j in range(n - 1, -1, -1):
        v0 = v @ pair.T0.T
        v1 = v @ pair.T1.T
        v = np.where(bits[:, j:j + 1] == 1, v1, v0)
    return v[0] if np.isscalar(x) else v


def fit_rate(ns: Sequence[int], values: Sequence[float],
             floor: Optional[float] = None) -> RateFit:
    """Fit values ~ C * lam^n on the last contiguous run above ``floor``."""
    floor = settings.FIT_FLOOR if floor is None else floor
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    above = np.flatnonzero(values > floor)
    if above.size == 0:
        return RateFit()
    end = int(above[-1])
    start = end
    while start > 0 and values[start - 1] > floor:
        start -= 1
    if end - start + 1 < 2:
        return RateFit(used=(int(ns[end]),))
    x = ns[start:end + 1]
    y = np.log(values[start:end + 1])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return RateFit(
        lam=float(np.exp(slope)),
        intercept=float(intercept),
        max_residual=residual,
        used=tuple(int(v) for v in x),
    )


def fixed_point_iterate(mask: Mask, phi0: CPwL, n_max: int) -> IterationHistory:
    """Exact increments sup|V^{n+1} phi0 - V^n phi0| for n = 0..n_max."""
    _check_seed(phi0, mask.N)
    increments: List[Tuple[int, float]] = []
    current = phi0
    for n in range(n_max + 1):
        following = apply_V(mask, current)
        increments.append((n, sup_distance(following, current)))
        current = following
    fit = fit_rate([n for n, _ in increments], [d for _, d in increments])
    if fit.lam is not None and fit.lam >= 1:
        logger.warning("Cascade increments for %r do not decay (lambda=%.4g)", mask, fit.lam)
    logger.info("Cascade increments for %r: fitted lambda=%s", mask, fit.lam)
    return IterationHistory(increments, fit)


def vanishing_set(n: int) -> List[Tuple[float, float]]:
    """The intervals [j 2^-n - 2^-n-3, j 2^-n + 2^-n-3] clipped to [0, 1]."""
    h = 2.0 ** -n
    r = 2.0 ** (-n - 3)
    return [(max(0.0, j * h - r), min(1.0, j * h + r)) for j in range(2 ** n + 1)]


def in_vanishing_set(x: ArrayLike, n: int) -> np.ndarray:
    y = np.asarray(x, dtype=float)
    scaled = y * 2.0 ** n
    distance = np.abs(scaled - np.round(scaled)) * 2.0 ** -n
    return (y >= 0) & (y <= 1) & (distance <= 2.0 ** (-n - 3))


def omega_mask(x: ArrayLike, n: int, alpha: float) -> np.ndarray:
    """Membership in [0,1] minus the left buffers of width (1/2-alpha) 2^{-j+1}."""
    y = np.asarray(x, dtype=float)
    delta = 0.5 - alpha
    inside = (y >= 0) & (y <= 1)
    for j in range(1, n + 1):
        scale = 2.0 ** j
        i = np.ceil(y * scale)
        gap = i / scale - y
        hit = (i > 0) & (i < scale) & (gap <= delta * 2.0 ** (-j + 1))
        inside &= ~hit
    return inside


def tight_bound(mask: Mask, g: CPwL, n: int) -> float:
    """Largest |T_b^T F^j| over the cascade trajectories on a 2^{-n-4} grid."""
    N = mask.N
    _check_seed(g, N)
    pair = transfer_matrices(mask)
    xs = np.linspace(0.0, 1.0, 2 ** (n + 4) + 1)
    bits, r = bits_and_residual(xs, n)
    gr = g(r)
    best = float(np.max(np.abs(gr)))
    for k in range(N):
        F = np.zeros((xs.size, N))
        F[:, k] = gr
        for j in range(n):
            y0 = F @ pair.T0
            y1 = F @ pair.T1
            best = max(best, float(np.max(np.abs(y0))), float(np.max(np.abs(y1))))
            F = np.where(bits[:, j:j + 1] == 1, y1, y0)
    return best
