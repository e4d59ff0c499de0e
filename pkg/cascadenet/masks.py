"""
Refinement masks and their transfer matrices.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from cascadenet.exceptions import ValidationError


SQRT3 = math.sqrt(3.0)

BUILTIN_MASKS: Dict[str, Tuple[float, ...]] = {
    'haar': (1.0, 1.0),
    'hat': (0.5, 1.0, 0.5),
    'bspline3': (0.25, 0.75, 0.75, 0.25),
    'd4': (
        (1 + SQRT3) / 4,
        (3 + SQRT3) / 4,
        (3 - SQRT3) / 4,
        (1 - SQRT3) / 4,
    ),
}


@dataclass(frozen=True, eq=False)
class Mask:
    coefficients: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).reshape(-1)
        if c.size < 2:
            raise ValidationError("A mask needs at least two coefficients c_0..c_N.")
        if not np.all(np.isfinite(c)):
            raise ValidationError("Mask coefficients must be finite.")
        if c[0] == 0 or c[-1] == 0:
            raise ValidationError("First and last mask coefficients must be non-zero.")
        c.setflags(write=False)
        object.__setattr__(self, 'coefficients', c)

    @property
    def N(self) -> int:
        return int(self.coefficients.size - 1)

    def c(self, j: int) -> float:
        """c_j, zero outside 0..N."""
        return float(self.coefficients[j]) if 0 <= j <= self.N else 0.0

    def __repr__(self) -> str:
        label = self.name or 'custom'
        return f"Mask({label}, N={self.N})"

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "coefficients": [float(c) for c in self.coefficients]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Mask':
        if not isinstance(data, dict) or "coefficients" not in data:
            raise ValidationError("Mask JSON must be an object with 'coefficients'.")
        try:
            coefficients = [float(c) for c in data["coefficients"]]
        except (TypeError, ValueError) as e:
            raise ValidationError(f"Invalid mask coefficients: {e}")
        return cls(coefficients, data.get("name"))

    @classmethod
    def load(cls, spec: str) -> 'Mask':
        """A builtin mask by name, or a mask JSON file by path."""
        if spec in BUILTIN_MASKS:
            return builtin(spec)
        if not os.path.isfile(spec):
            raise ValidationError(
                f"Unknown mask '{spec}'. Builtins: {', '.join(sorted(BUILTIN_MASKS))}."
            )
        try:
            with open(spec, 'r', encoding='utf-8') as fh:
                data = json.load(fh)
        except (OSError, ValueError) as e:
            raise ValidationError(f"Could not read mask file '{spec}': {e}")
        return cls.from_dict(data)


@dataclass(frozen=True, eq=False)
class TransferPair:
    T0: np.ndarray
    T1: np.ndarray

    def __getitem__(self, bit: int) -> np.ndarray:
        return self.T1 if bit else self.T0


def builtin(name: str) -> Mask:
    try:
        return Mask(BUILTIN_MASKS[name], name)
    except KeyError:
        raise ValidationError(
            f"Unknown mask '{name}'. Builtins: {', '.join(sorted(BUILTIN_MASKS))}."
        )


def transfer_matrices(mask: Mask) -> TransferPair:
    """T0[i][j] = c_{2i-j}, T1[i][j] = c_{2i-j+1}, indices from 0."""
    N = mask.N
    i = np.arange(N)[:, None]
    j = np.arange(N)[None, :]
    padded = np.concatenate([mask.coefficients, [0.0]])

    def pick(index: np.ndarray) -> np.ndarray:
        valid = (index >= 0) & (index <= N)
        return np.where(valid, padded[np.clip(index, 0, N + 1)], 0.0)

    T0 = pick(2 * i - j)
    T1 = pick(2 * i - j + 1)
    T0.setflags(write=False)
    T1.setflags(write=False)
    return TransferPair(T0, T1)


def sum_rules(mask: Mask) -> Tuple[float, float, float]:
    """(sum of c_j, sum of even-index c_j, sum of odd-index c_j)."""
    c = mask.coefficients
    return float(np.sum(c)), float(np.sum(c[0::2])), float(np.sum(c[1::2]))


def operator_norm_bound(pair: TransferPair) -> float:
    """Largest infinity-norm of T0^T and T1^T (max absolute column sum)."""
    return float(max(np.max(np.sum(np.abs(T), axis=0)) for T in (pair.T0, pair.T1)))


def wavelet_combo(mask: Mask) -> List[Tuple[float, int]]:
    """Quadrature-mirror combination ((-1)^j c_{1-j}, j) for j = 1-N .. 1."""
    return [((-1.0) ** (j % 2) * mask.c(1 - j), j) for j in range(1 - mask.N, 2)]
