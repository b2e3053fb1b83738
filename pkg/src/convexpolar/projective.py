"""Homogeneous coordinates for points of the projective space P^{n+1}.

A point of R^{n+1} is lifted to the vector (v_1, ..., v_{n+1}, 1) of length
n + 2.  Two coordinate vectors describe the same projective point when one
is a nonzero multiple of the other; a vector whose last entry is zero is an
ideal point (a direction at infinity).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from convexpolar.errors import IdealPoint

DEFAULT_TOL = 1e-9


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProjectivePoint:
    """Homogeneous coordinate vector of length n + 2."""

    coords: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.coords)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError(f"coords must be a vector of length >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coords must be finite")
        if not np.any(arr):
            raise ValueError("the zero vector is not a projective point")
        object.__setattr__(self, "coords", arr)

    @property
    def n(self) -> int:
        return self.coords.size - 2

    @property
    def is_ideal(self) -> bool:
        return self.coords[-1] == 0.0

    def is_nearly_ideal(self, rtol: float = 1e-12) -> bool:
        return abs(self.coords[-1]) <= rtol * np.linalg.norm(self.coords)

    def normalized(self) -> "ProjectivePoint":
        """Canonical representative.

        Finite points are scaled to last coordinate 1.  Ideal points are
        scaled to unit norm with their first nonzero entry positive.
        """
        c = self.coords
        if c[-1] != 0.0:
            return ProjectivePoint(c / c[-1])
        c = c / np.linalg.norm(c)
        first = c[np.flatnonzero(c)[0]]
        return ProjectivePoint(c if first > 0 else -c)

    def scaled(self, factor: float) -> "ProjectivePoint":
        return ProjectivePoint(factor * self.coords)

    def to_list(self) -> list[float]:
        return [float(x) for x in self.normalized().coords]

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "ProjectivePoint":
        return cls(np.asarray(values, dtype=float))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __len__(self) -> int:
        return self.coords.size

    def __repr__(self) -> str:
        inner = ", ".join(f"{x:.6g}" for x in self.coords)
        return f"ProjectivePoint([{inner}])"


def as_coords(p) -> np.ndarray:
    """Coordinate array of a ProjectivePoint or of any array-like."""
    if isinstance(p, ProjectivePoint):
        return p.coords
    return np.asarray(p, dtype=float)


def lift(v: Sequence[float]) -> ProjectivePoint:
    """Embed a point of R^{n+1} in the affine chart where the last coordinate is 1."""
    v = np.asarray(v, dtype=float).reshape(-1)
    return ProjectivePoint(np.append(v, 1.0))


def dehomogenize(p) -> np.ndarray:
    """Affine coordinates (a_1 / a_{n+2}, ..., a_{n+1} / a_{n+2}).

    Raises
    ------
    IdealPoint
        If the last coordinate is zero.
    """
    c = as_coords(p)
    if c[-1] == 0.0:
        raise IdealPoint(f"cannot dehomogenize ideal point {c.tolist()}")
    return c[:-1] / c[-1]


def line_sine(p, q) -> float:
    """Sine of the angle between the lines spanned by two coordinate vectors."""
    u = as_coords(p)
    v = as_coords(q)
    u = u / np.linalg.norm(u)
    v = v / np.linalg.norm(v)
    if np.dot(u, v) < 0:
        v = -v
    # |u - v| |u + v| / 2 = sin(angle); avoids the cancellation in sqrt(1 - cos^2)
    return float(np.linalg.norm(u - v) * np.linalg.norm(u + v) / 2.0)


def projectively_equal(p, q, tol: float = DEFAULT_TOL) -> bool:
    """True iff p and q agree up to a nonzero scalar, to within ``tol`` on the line angle sine."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if len(as_coords(p)) != len(as_coords(q)):
        return False
    return line_sine(p, q) < tol
