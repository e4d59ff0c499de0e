"""
Continuous piecewise-linear functions of one variable with constant tails.

A ``CPwL`` is stored as strictly increasing breakpoints and the values
there. Between breakpoints it interpolates linearly; left of the first
breakpoint and right of the last it is constant, equal to the endpoint
value. Compactly supported functions are the special case of zero tails.

All the library's construction constants are dyadic rationals, so sums,
dilations and shifts of the functions built here stay exact in binary
floating point at desk scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cascadenet.conf import settings
from cascadenet.exceptions import DimensionMismatch, ValidationError


ArrayLike = Union[float, Sequence[float], np.ndarray]

# Slope differences below this are treated as parallel segments.
PARALLEL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CPwL:
    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs = np.array(self.breakpoints, dtype=float).reshape(-1)
        ys = np.array(self.values, dtype=float).reshape(-1)
        if xs.size == 0:
            raise ValidationError("A CPwL needs at least one breakpoint.")
        if xs.shape != ys.shape:
            raise DimensionMismatch(
                f"{xs.size} breakpoints but {ys.size} values."
            )
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValidationError("Breakpoints and values must be finite.")
        if np.any(np.diff(xs) <= 0):
            raise ValidationError("Breakpoints must be strictly increasing.")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, 'breakpoints', xs)
        object.__setattr__(self, 'values', ys)

    @property
    def left_tail(self) -> float:
        return float(self.values[0])

    @property
    def right_tail(self) -> float:
        return float(self.values[-1])

    def __len__(self) -> int:
        return int(self.breakpoints.size)

    def __call__(self, x: ArrayLike) -> Union[float, np.ndarray]:
        return evaluate(self, x)

    def __repr__(self) -> str:
        return (
            f"CPwL({len(self)} breakpoints on "
            f"[{self.breakpoints[0]!r}, {self.breakpoints[-1]!r}])"
        )

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            "breakpoints": [float(x) for x in self.breakpoints],
            "values": [float(y) for y in self.values],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CPwL':
        try:
            xs = np.asarray(data["breakpoints"], dtype=float)
            ys = np.asarray(data["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Invalid CPwL object: {e}")
        if xs.shape != ys.shape or xs.ndim != 1:
            raise DimensionMismatch("breakpoints and values must be equal-length lists.")
        order = np.argsort(xs, kind="stable")
        xs, ys = xs[order], ys[order]
        keep = _merge_mask(xs, settings.MERGE_TOL)
        # Every dropped abscissa must agree with the one it merged into.
        anchor = np.maximum.accumulate(np.where(keep, np.arange(xs.size), 0))
        if np.any(np.abs(ys - ys[anchor]) > settings.VALUE_TOL):
            raise ValidationError("Duplicate breakpoints carry different values.")
        return cls(xs[keep], ys[keep])

    @classmethod
    def load(cls, path: str) -> 'CPwL':
        try:
            with open(path, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise ValidationError(f"Could not read CPwL file '{path}': {e}")
        if not isinstance(data, dict):
            raise ValidationError(f"CPwL file '{path}' must contain a JSON object.")
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class VecFunction:
    """The components g_1..g_N of a vectorized function, each on [0, 1]."""

    components: Tuple[CPwL, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValidationError("A VecFunction needs at least one component.")
        for k in range(len(comps) - 1):
            if abs(comps[k](1.0) - comps[k + 1](0.0)) > settings.VALUE_TOL:
                raise ValidationError(
                    f"Components {k + 1} and {k + 2} do not match at the seam."
                )
        object.__setattr__(self, 'components', comps)

    def __len__(self) -> int:
        return len(self.components)

    def __call__(self, x: ArrayLike) -> np.ndarray:
        """Evaluate all components; returns shape (N,) or (len(x), N)."""
        columns = [comp(x) for comp in self.components]
        return np.stack(columns, axis=-1)


def evaluate(f: CPwL, x: ArrayLike) -> Union[float, np.ndarray]:
    """Linear interpolation inside the breakpoint span, tail constants outside."""
    if np.isscalar(x):
        return float(np.interp(float(x), f.breakpoints, f.values))
    return np.interp(np.asarray(x, dtype=float), f.breakpoints, f.values)


def _merge_mask(xs: np.ndarray, tol: float) -> np.ndarray:
    """Mask keeping the first of every run of sorted abscissae closer than tol."""
    keep = np.ones(xs.size, dtype=bool)
    last = None
    for i, x in enumerate(xs):
        if last is not None and x - last < tol:
            keep[i] = False
        else:
            last = x
    return keep


def merge_abscissae(*arrays: np.ndarray, tol: Optional[float] = None) -> np.ndarray:
    """Sorted union of abscissae with near-duplicates merged."""
    tol = settings.MERGE_TOL if tol is None else tol
    xs = np.unique(np.concatenate([np.asarray(a, dtype=float).reshape(-1) for a in arrays]))
    if xs.size < 2 or np.all(np.diff(xs) >= tol):
        return xs
    return xs[_merge_mask(xs, tol)]


def linear_combine(coeffs: Sequence[float], fs: Sequence[CPwL]) -> CPwL:
    """Exact pointwise linear combination on the union of breakpoints."""
    coeffs = list(coeffs)
    fs = list(fs)
    if len(coeffs) != len(fs):
        raise DimensionMismatch(
            f"{len(coeffs)} coefficients for {len(fs)} functions."
        )
    if not fs:
        raise ValidationError("linear_combine needs at least one function.")
    xs = merge_abscissae(*(f.breakpoints for f in fs))
    ys = np.zeros_like(xs)
    for c, f in zip(coeffs, fs):
        if c != 0:
            ys += float(c) * np.interp(xs, f.breakpoints, f.values)
    return CPwL(xs, ys)


def dilate_shift(f: CPwL, a: float, b: float) -> CPwL:
    """The function x -> f(a*x - b)."""
    if not a > 0:
        raise ValidationError(f"Dilation factor must be positive, got {a!r}.")
    return CPwL((f.breakpoints + b) / a, f.values)


def shift(f: CPwL, delta: float) -> CPwL:
    """The function x -> f(x - delta)."""
    return CPwL(f.breakpoints + delta, f.values)


def pointwise_min(f: CPwL, g: CPwL) -> CPwL:
    """Exact pointwise minimum, inserting crossings inside shared segments."""
    xs = merge_abscissae(f.breakpoints, g.breakpoints)
    d = np.interp(xs, f.breakpoints, f.values) - np.interp(xs, g.breakpoints, g.values)
    if xs.size > 1:
        x0, x1 = xs[:-1], xs[1:]
        d0, d1 = d[:-1], d[1:]
        slope_diff = (d1 - d0) / (x1 - x0)
        cross = (d0 * d1 < 0) & (np.abs(slope_diff) >= PARALLEL_TOL)
        if np.any(cross):
            xc = x0[cross] + (x1 - x0)[cross] * d0[cross] / (d0 - d1)[cross]
            xs = merge_abscissae(xs, xc)
    ys = np.minimum(
        np.interp(xs, f.breakpoints, f.values),
        np.interp(xs, g.breakpoints, g.values),
    )
    return CPwL(xs, ys)


def sup_distance(f: CPwL, g: CPwL) -> float:
    """Exact uniform distance; a CPwL attains its sup at a breakpoint or tail."""
    diff = linear_combine([1.0, -1.0], [f, g])
    return float(np.max(np.abs(diff.values)))


def hat(left: float, right: float, peak: float = 1.0) -> CPwL:
    """Hat on [left, right] with the given peak at the midpoint."""
    if not right > left:
        raise ValidationError(f"Hat needs left < right, got [{left}, {right}].")
    return CPwL([left, 0.5 * (left + right), right], [0.0, peak, 0.0])


def special_hat(step: float = 0.125) -> CPwL:
    """Hat centred at 1/2 with half-width ``step``; ``special_hat(1/8)`` is H."""
    if not 0 < step <= 0.375:
        raise ValidationError(f"Special hat half-width must lie in (0, 3/8], got {step!r}.")
    return hat(0.5 - step, 0.5 + step)


def zero() -> CPwL:
    return CPwL([0.0], [0.0])


def restrict(f: CPwL, lo: float, hi: float) -> CPwL:
    """f on [lo, hi] with constant tails beyond the window."""
    if not hi > lo:
        raise ValidationError(f"Empty window [{lo}, {hi}].")
    inside = f.breakpoints[(f.breakpoints > lo) & (f.breakpoints < hi)]
    xs = np.concatenate([[lo], inside, [hi]])
    return CPwL(xs, np.interp(xs, f.breakpoints, f.values))


def vec(g: CPwL, N: int) -> VecFunction:
    """Vec(g) = (g_1, ..., g_N) with g_k(x) = g(x + k - 1) on [0, 1]."""
    if N < 1:
        raise ValidationError(f"N must be at least 1, got {N}.")
    return VecFunction(tuple(restrict(shift(g, -(k - 1)), 0.0, 1.0) for k in range(1, N + 1)))


def iterate(f: CPwL, x: ArrayLike, n: int) -> Union[float, np.ndarray]:
    """The n-fold composition f(f(...f(x)))."""
    y = x if np.isscalar(x) else np.asarray(x, dtype=float)
    for _ in range(n):
        y = evaluate(f, y)
    return y


def slopes(f: CPwL) -> np.ndarray:
    """Slopes of the len(f)+1 pieces, tails included."""
    if len(f) == 1:
        return np.zeros(2)
    inner = np.diff(f.values) / np.diff(f.breakpoints)
    return np.concatenate([[0.0], inner, [0.0]])


def kinks(f: CPwL, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """Breakpoints where the slope changes, and the slope jumps there."""
    jumps = np.diff(slopes(f))
    keep = np.abs(jumps) > tol
    return f.breakpoints[keep], jumps[keep]


def support(f: CPwL) -> Optional[Tuple[float, float]]:
    """Closed hull of {f != 0}, None for the zero function."""
    nz = np.flatnonzero(f.values != 0)
    if nz.size == 0:
        return None
    first, last = int(nz[0]), int(nz[-1])
    lo = -math.inf if first == 0 else float(f.breakpoints[first - 1])
    hi = math.inf if last == len(f) - 1 else float(f.breakpoints[last + 1])
    return lo, hi


def is_special(g: CPwL, tol: float = 0.0) -> bool:
    """Non-negative with support inside [1/8, 7/8]."""
    if np.any(g.values < -tol):
        return False
    hull = support(g)
    return hull is None or (hull[0] >= 0.125 and hull[1] <= 0.875)


def _on_grid(xs: np.ndarray, step: float, tol: float = 1e-9) -> bool:
    q = xs / step
    return bool(np.all(np.abs(q - np.round(q)) <= tol))


def support_length(g0: CPwL) -> int:
    """Smallest integer N >= 1 with g0 supported in [0, N]."""
    hull = support(g0)
    if hull is None:
        return 1
    if hull[0] < -settings.MERGE_TOL or not math.isfinite(hull[1]):
        raise ValidationError(f"Seed is not supported in [0, N]: support is {hull}.")
    return max(1, int(math.ceil(hull[1] - settings.MERGE_TOL)))


def refine_grid_step(g0: CPwL, N: int) -> float:
    """Dyadic hat step fine enough that every kink of g0 lies on the grid."""
    xs, _ = kinks(g0)
    xs = xs[(xs > 0) & (xs < N)]
    if _on_grid(xs, 1.0):
        return 0.125
    points = merge_abscissae(xs, np.array([0.0, float(N)]))
    gap_min = float(np.min(np.diff(points)))
    step = 2.0 ** (-math.ceil(math.log2(1.0 / gap_min)) - 3)
    while not _on_grid(xs, step):
        step /= 2.0
        if step < 2.0 ** -30:
            raise ValidationError("Seed breakpoints are not dyadic; no hat grid reproduces it.")
    return step


def hat_decompose(g0: CPwL, grid_step: Optional[float] = None,
                  N: Optional[int] = None) -> List[Tuple[float, float]]:
    """Write g0 as a combination of shifted special hats.

    Returns ``(coefficient, shift)`` pairs such that
    ``g0(x) = sum(c * special_hat(step)(x - shift))`` with
    ``coefficient = g0(j * step)`` and ``shift = j * step - 1/2``
    for ``j = 1 .. N/step - 1``.
    """
    if g0.left_tail != 0 or g0.right_tail != 0:
        raise ValidationError("Seed must vanish outside [0, N].")
    inferred = support_length(g0)
    if N is None:
        N = inferred
    elif inferred > N:
        raise ValidationError(f"Seed is not supported in [0, {N}].")
    hull = support(g0)
    if hull is not None and hull[1] > N + settings.MERGE_TOL:
        raise ValidationError(f"Seed is not supported in [0, {N}].")
    if grid_step is None:
        step = refine_grid_step(g0, N)
    else:
        step = float(grid_step)
        if not 0 < step <= 0.375:
            raise ValidationError(f"Grid step must lie in (0, 3/8], got {grid_step!r}.")
        if not _on_grid(np.array([float(N)]), step):
            raise ValidationError(f"Grid step {step!r} does not divide [0, {N}].")
        xs, _ = kinks(g0)
        if not _on_grid(xs, step):
            raise ValidationError(f"Grid step {step!r} is too coarse for the seed's breakpoints.")
    count = int(round(N / step)) - 1
    js = np.arange(1, count + 1, dtype=float)
    coefficients = np.interp(js * step, g0.breakpoints, g0.values)
    return [(float(c), float(j * step - 0.5)) for c, j in zip(coefficients, js)]


def hat_step(decomposition: Sequence[Tuple[float, float]]) -> float:
    """Recover the grid step from a hat decomposition's shifts."""
    if not decomposition:
        raise ValidationError("Empty hat decomposition.")
    return float(decomposition[0][1] + 0.5)


def reconstruct(decomposition: Sequence[Tuple[float, float]], step: float) -> CPwL:
    """Inverse of hat_decompose."""
    base = special_hat(step)
    if not decomposition:
        return zero()
    return linear_combine(
        [c for c, _ in decomposition],
        [shift(base, s) for _, s in decomposition],
    )


def compose_eval(outer: CPwL, inner: CPwL, x: ArrayLike) -> Union[float, np.ndarray]:
    """outer(inner(x))."""
    return evaluate(outer, evaluate(inner, x))
