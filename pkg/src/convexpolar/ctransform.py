"""Quadratic-cost c-transforms and their polarity matrices.

F^c(eta) = min_theta c(theta, eta) + F(theta) for the quadratic coupling

    c(theta, eta) = theta^T Cn theta + d |eta|^2 + e <theta, eta>
                    + <f, theta> + <g, eta> + h.

With c = -<theta, eta> this is -F*(eta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from convexpolar.errors import DimensionMismatch, SingularMatrix
from convexpolar.legendre import SampledFunction, _resolve_eta
from convexpolar.polarity import CostMatrix

_CHUNK = 2_000_000


@dataclass(frozen=True, eq=False)
class QuadraticCost:
    Cn: np.ndarray
    d: float = 0.0
    e: float = 0.0
    f_coef: np.ndarray = None
    g_coef: np.ndarray = None
    h: float = 0.0

    def __post_init__(self):
        Cn = np.atleast_2d(np.array(self.Cn, dtype=float))
        if Cn.shape[0] != Cn.shape[1]:
            raise DimensionMismatch(f"Cn must be square, got {Cn.shape}")
        n = Cn.shape[0]
        f = np.zeros(n) if self.f_coef is None else np.broadcast_to(np.asarray(self.f_coef, dtype=float), (n,)).copy()
        g = np.zeros(n) if self.g_coef is None else np.broadcast_to(np.asarray(self.g_coef, dtype=float), (n,)).copy()
        values = [Cn, f, g, np.array([self.d, self.e, self.h], dtype=float)]
        if not all(np.all(np.isfinite(v)) for v in values):
            raise ValueError("cost coefficients must be finite")
        object.__setattr__(self, "Cn", Cn)
        object.__setattr__(self, "f_coef", f)
        object.__setattr__(self, "g_coef", g)
        for name in ("d", "e", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.Cn.shape[0]

    @classmethod
    def legendre(cls, n: int) -> "QuadraticCost":
        """c(theta, eta) = -<theta, eta>."""
        return cls(np.zeros((n, n)), e=-1.0)

    def __call__(self, theta, eta) -> np.ndarray:
        """Cost matrix c(theta_i, eta_j) for point arrays theta (m, n) and eta (k, n)."""
        theta = np.asarray(theta, dtype=float).reshape(-1, self.n)
        eta = np.asarray(eta, dtype=float).reshape(-1, self.n)
        rows = np.einsum("ij,jk,ik->i", theta, self.Cn, theta) + theta @ self.f_coef
        cols = self.d * np.einsum("ij,ij->i", eta, eta) + eta @ self.g_coef + self.h
        return rows[:, None] + cols[None, :] + self.e * (theta @ eta.T)

    def to_json(self) -> dict:
        return {
            "Cn": self.Cn.tolist(),
            "d": self.d,
            "e": self.e,
            "f_coef": self.f_coef.tolist(),
            "g_coef": self.g_coef.tolist(),
            "h": self.h,
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadraticCost":
        return cls(
            data["Cn"],
            d=data.get("d", 0.0),
            e=data.get("e", 0.0),
            f_coef=data.get("f_coef"),
            g_coef=data.get("g_coef"),
            h=data.get("h", 0.0),
        )


def c_transform(f: SampledFunction, cost: QuadraticCost, eta_grid=None) -> SampledFunction:
    """min_i c(theta_i, eta_j) + F_i per dual point; ties to the smallest index, argmin in ``argopt``."""
    if cost.n != f.n:
        raise DimensionMismatch("cost and function dimensions differ")
    fin = f.finite
    if not np.any(fin):
        raise ValueError("c-transform needs a finite sample")
    theta = f.grid[fin]
    F = f.values[fin]
    eta, axes = _resolve_eta(f, eta_grid)
    k = eta.shape[0]
    values = np.empty(k)
    arg = np.empty(k, dtype=int)
    step = max(1, _CHUNK // theta.shape[0])
    for start in range(0, k, step):
        block = cost(theta, eta[start:start + step]).T + F
        j = np.argmin(block, axis=1)
        arg[start:start + step] = j
        values[start:start + step] = block[np.arange(j.size), j]
    idx = np.flatnonzero(fin)[arg]
    return SampledFunction(eta, values, axes=axes, argopt=idx)


def cost_to_polarity_matrix(cost) -> CostMatrix:
    """Block matrix [[Cn, 0, 0], [0, 0, 1], [0, 1, 0]] from a quadratic block.

    Only the primal quadratic block Cn enters the embedding; the remaining
    coefficients of a QuadraticCost have no place in this block form.
    """
    Cn = cost.Cn if isinstance(cost, QuadraticCost) else np.atleast_2d(np.asarray(cost, dtype=float))
    n = Cn.shape[0]
    if Cn.shape != (n, n):
        raise DimensionMismatch(f"Cn must be square, got {Cn.shape}")
    s = np.linalg.svd(Cn, compute_uv=False)
    if s[0] == 0 or s[-1] / s[0] < 1e-14:
        raise SingularMatrix("quadratic block Cn is singular")
    C = np.zeros((n + 2, n + 2))
    C[:n, :n] = Cn
    C[n, n + 1] = C[n + 1, n] = 1.0
    return CostMatrix(C)
