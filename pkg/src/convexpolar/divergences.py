"""Fenchel-Young, Bregman and polar (total) Fenchel-Young divergences.

The polar Fenchel-Young divergence of a primal point [a] and a dual point
[b] is the Legendre pairing [a]^T C_L [b] taken on last-coordinate-1
representatives.  For a = (theta, F(theta), 1) and b = (eta, F*(eta), 1) it
is F(theta) + F*(eta) - <theta, eta>.  Dividing by the affine norm of the
polar hyperplane normal gives the total variants.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional, Union

import numpy as np

from convexpolar.errors import DimensionMismatch, IdealPoint, MissingGradient
from convexpolar.legendre import SampledFunction
from convexpolar.projective import as_coords

VARIANTS = ("sqrt", "paper_tb")


def _normalized(p) -> np.ndarray:
    c = np.asarray(as_coords(p), dtype=float)
    if c.ndim != 1 or c.size < 3:
        raise DimensionMismatch(f"expected a homogeneous vector of length >= 3, got shape {c.shape}")
    if c[-1] == 0.0:
        raise IdealPoint("divergences need finite points")
    return c / c[-1]


def fenchel_young(F_theta: float, Fstar_eta: float, theta, eta) -> float:
    """F(theta) + F*(eta) - <theta, eta>."""
    return float(F_theta + Fstar_eta - np.dot(np.atleast_1d(theta), np.atleast_1d(eta)))


def _lookup(f: SampledFunction, theta) -> int:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    hits = np.flatnonzero(np.all(f.grid == theta, axis=1))
    if hits.size == 0:
        raise KeyError(f"{theta.tolist()} is not a grid node")
    return int(hits[0])


def bregman(
    f: Union[SampledFunction, Callable],
    theta1,
    theta2,
    grad: Optional[Callable] = None,
) -> float:
    """F(theta1) - F(theta2) - <theta1 - theta2, grad F(theta2)>.

    ``f`` is either a callable (then ``grad`` is required) or a
    SampledFunction carrying gradients, with theta1 and theta2 grid nodes.
    """
    t1 = np.atleast_1d(np.asarray(theta1, dtype=float))
    t2 = np.atleast_1d(np.asarray(theta2, dtype=float))
    if isinstance(f, SampledFunction):
        if f.gradients is None:
            raise MissingGradient("bregman needs gradients at theta2")
        i, j = _lookup(f, t1), _lookup(f, t2)
        F1, F2, g2 = f.values[i], f.values[j], f.gradients[j]
    else:
        if grad is None:
            raise MissingGradient("bregman needs a gradient callable")
        F1, F2 = float(f(theta1)), float(f(theta2))
        g2 = np.atleast_1d(np.asarray(grad(theta2), dtype=float))
    return float(F1 - F2 - np.dot(t1 - t2, g2))


def conformal_factor(gradient, variant: str = "sqrt") -> float:
    """1 / sqrt(1 + |g|^2), or 1 / (1 + |g|^2) for the ``paper_tb`` variant."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    g2 = float(np.dot(np.atleast_1d(gradient), np.atleast_1d(gradient)))
    return 1.0 / np.sqrt(1.0 + g2) if variant == "sqrt" else 1.0 / (1.0 + g2)


def total_bregman(
    f: Union[SampledFunction, Callable],
    theta1,
    theta2,
    variant: str = "sqrt",
    grad: Optional[Callable] = None,
) -> float:
    """kappa(theta2) * B_F(theta1 : theta2)."""
    if isinstance(f, SampledFunction):
        if f.gradients is None:
            raise MissingGradient("total_bregman needs gradients at theta2")
        g2 = f.gradients[_lookup(f, theta2)]
    else:
        if grad is None:
            raise MissingGradient("total_bregman needs a gradient callable")
        g2 = grad(theta2)
    return conformal_factor(g2, variant) * bregman(f, theta1, theta2, grad=grad)


def polar_fenchel_young(a, b) -> float:
    """[a]^T C_L [b] on last-coordinate-1 representatives."""
    a = _normalized(a)
    b = _normalized(b)
    if a.size != b.size:
        raise DimensionMismatch(f"points have lengths {a.size} and {b.size}")
    n = a.size - 2
    # C_L b = (-eta_b, 1, y_b) without forming the matrix
    return float(-a[:n] @ b[:n] + a[n] * b[n + 1] + a[n + 1] * b[n])


def kappa(b) -> float:
    """Affine norm sqrt(1 + |eta_b|^2) of the polar hyperplane normal C_L [b]."""
    b = _normalized(b)
    return float(np.sqrt(1.0 + b[:-2] @ b[:-2]))


def kappa_star(a) -> float:
    """sqrt(1 + |theta_a|^2)."""
    return kappa(a)


def polar_total_fenchel_young(a, b) -> float:
    """D(a : b) / kappa(b)."""
    return polar_fenchel_young(a, b) / kappa(b)


def polar_total_fenchel_young_dual(b, a) -> float:
    """D(b : a) / kappa*(a), the total divergence for the dual polarity."""
    return polar_fenchel_young(b, a) / kappa_star(a)


@dataclass(frozen=True)
class SwapCheck:
    plain_lhs: float
    plain_rhs: float
    total_lhs: float
    total_rhs: float

    def max_relative_gap(self) -> float:
        gaps = [
            abs(self.plain_lhs - self.plain_rhs) / max(1.0, abs(self.plain_lhs)),
            abs(self.total_lhs - self.total_rhs) / max(1.0, abs(self.total_lhs)),
        ]
        return max(gaps)


def swap_check(a, b) -> SwapCheck:
    """Both sides of D(a:b) = D(b:a) and of tD(a:b) / kappa*(a) = tD*(b:a) / kappa(b)."""
    return SwapCheck(
        plain_lhs=polar_fenchel_young(a, b),
        plain_rhs=polar_fenchel_young(b, a),
        total_lhs=polar_total_fenchel_young(a, b) / kappa_star(a),
        total_rhs=polar_total_fenchel_young_dual(b, a) / kappa(b),
    )


@dataclass(frozen=True)
class DivergenceReport:
    fy: float
    bregman: float
    polar_fy: float
    total_sqrt: float
    total_paper: float
    kappa_b: float
    kappa_star_a: float

    def to_json(self) -> dict:
        return asdict(self)


def report_from_points(a, b) -> DivergenceReport:
    """Divergences between a = (theta, F(theta), 1) and b = (eta, F*(eta), 1).

    The Fenchel-Young gap is read off the coordinates; with b on the graph
    of F* at eta = grad F(theta2) it equals B_F(theta : theta2), which fills
    the Bregman entries.
    """
    a = _normalized(a)
    b = _normalized(b)
    n = a.size - 2
    theta, eta = a[:n], b[:n]
    fy = fenchel_young(a[n], b[n], theta, eta)
    return DivergenceReport(
        fy=fy,
        bregman=fy,
        polar_fy=polar_fenchel_young(a, b),
        total_sqrt=conformal_factor(eta, "sqrt") * fy,
        total_paper=conformal_factor(eta, "paper_tb") * fy,
        kappa_b=kappa(b),
        kappa_star_a=kappa_star(a),
    )
