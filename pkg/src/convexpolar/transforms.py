"""Generalized Legendre-Fenchel transforms and deformed Legendre polarities.

Any invertible cost matrix C factors through the Legendre matrix C_L in two
ways:

    C = C_L M_T^{-1},  M_T = C^{-1} C_L   (deform the Legendre polar)
    C = M_S^T C_L,     M_S = C_L C^T      (deform the primal body)

so that the C-polar of a body A equals M_T applied to its Legendre polar,
and also the Legendre polar of M_S applied to A.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from convexpolar.errors import DimensionMismatch, MissingGradients, SingularMatrix
from convexpolar.legendre import SampledFunction, conjugate_bruteforce, interpolate_sampled
from convexpolar.polarity import (
    ConvexBody,
    CostMatrix,
    EnvelopeResult,
    envelope_points,
    legendre_matrix,
    polar_boundary_envelope,
)
from convexpolar.projective import ProjectivePoint


def _invertible(M: np.ndarray, what: str) -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{what} must be square, got shape {M.shape}")
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0 or s[-1] / s[0] < 1e-14:
        raise SingularMatrix(f"{what} is singular")
    M.setflags(write=False)
    return M


def _cost(C) -> CostMatrix:
    return C if isinstance(C, CostMatrix) else CostMatrix(np.asarray(C, dtype=float))


@dataclass(frozen=True)
class DualSideParams:
    """Parameters of (TF)(eta) = mu F*(E eta + f) + <eta, g> + h."""

    mu: float
    E: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        E = _invertible(np.atleast_2d(self.E), "E")
        n = E.shape[0]
        f = np.broadcast_to(np.asarray(self.f, dtype=float), (n,)).copy()
        g = np.broadcast_to(np.asarray(self.g, dtype=float), (n,)).copy()
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @classmethod
    def identity(cls, n: int) -> "DualSideParams":
        return cls(1.0, np.eye(n), np.zeros(n), np.zeros(n), 0.0)

    @classmethod
    def from_json(cls, data: dict) -> "DualSideParams":
        return cls(data["mu"], data["E"], data["f"], data["g"], data.get("h", 0.0))

    def to_json(self) -> dict:
        return {"mu": self.mu, "E": self.E.tolist(), "f": self.f.tolist(), "g": self.g.tolist(), "h": self.h}


@dataclass(frozen=True)
class PrimalSideParams:
    """Parameters of (TF)(eta) = (mu F(A theta + b))*(eta) + <eta, c> + d."""

    mu: float
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        A = _invertible(np.atleast_2d(self.A), "A")
        n = A.shape[0]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", np.broadcast_to(np.asarray(self.b, dtype=float), (n,)).copy())
        object.__setattr__(self, "c", np.broadcast_to(np.asarray(self.c, dtype=float), (n,)).copy())
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "d", float(self.d))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def identity(cls, n: int) -> "PrimalSideParams":
        return cls(1.0, np.eye(n), np.zeros(n), np.zeros(n), 0.0)

    @classmethod
    def from_json(cls, data: dict) -> "PrimalSideParams":
        return cls(data["mu"], data["A"], data["b"], data["c"], data.get("d", 0.0))

    def to_json(self) -> dict:
        return {"mu": self.mu, "A": self.A.tolist(), "b": self.b.tolist(), "c": self.c.tolist(), "d": self.d}


@dataclass(frozen=True, eq=False)
class AffineDeformation:
    """Invertible matrix acting on homogeneous coordinates."""

    M: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "M", _invertible(self.M, "deformation matrix"))

    @property
    def inverse(self) -> "AffineDeformation":
        return AffineDeformation(np.linalg.inv(self.M))

    def __matmul__(self, other):
        return self.M @ other


def decompose_T(C) -> AffineDeformation:
    """M_T = C^{-1} C_L, so that the C-polar is M_T applied to the Legendre polar."""
    C = _cost(C)
    return AffineDeformation(C.C_inv @ legendre_matrix(C.n).C)


def decompose_S(C) -> AffineDeformation:
    """M_S = C_L C^T, so that the C-polar is the Legendre polar of M_S applied to the body."""
    C = _cost(C)
    return AffineDeformation(legendre_matrix(C.n).C @ C.C.T)


def decomposition_residuals(C) -> tuple[float, float]:
    """Relative residuals of C = C_L M_T^{-1} and C = M_S^T C_L."""
    C = _cost(C)
    L = legendre_matrix(C.n).C
    Mt = decompose_T(C).M
    Ms = decompose_S(C).M
    scale = np.linalg.norm(C.C)
    r_t = np.linalg.norm(C.C - L @ np.linalg.inv(Mt)) / scale
    r_s = np.linalg.norm(C.C - Ms.T @ L) / scale
    return float(r_t), float(r_s)


def relate_T_S(Mt, Ms) -> tuple[float, float]:
    """Relative residuals of M_T = C_L M_S^{-T} C_L and M_S = C_L M_T^{-T} C_L."""
    Mt = Mt.M if isinstance(Mt, AffineDeformation) else _invertible(Mt, "M_T")
    Ms = Ms.M if isinstance(Ms, AffineDeformation) else _invertible(Ms, "M_S")
    if Mt.shape != Ms.shape:
        raise DimensionMismatch("M_T and M_S have different sizes")
    L = legendre_matrix(Mt.shape[0] - 2).C
    r_t = np.linalg.norm(Mt - L @ np.linalg.inv(Ms).T @ L) / np.linalg.norm(Mt)
    r_s = np.linalg.norm(Ms - L @ np.linalg.inv(Mt).T @ L) / np.linalg.norm(Ms)
    return float(r_t), float(r_s)


def _matrix_of(M) -> np.ndarray:
    return M.M if isinstance(M, AffineDeformation) else _invertible(M, "deformation matrix")


def apply_deformation(M, obj, ideal_rtol: float = 1e-12):
    """Map homogeneous data through M.

    ``obj`` may be a ProjectivePoint, an (m, n+2) array of points (returns
    ``(points, ideal_mask)`` with finite rows normalized to last coordinate
    1), an EnvelopeResult, or a ConvexBody (tangents are mapped too; raises
    IdealPoint if a sample goes to infinity).
    """
    M = _matrix_of(M)
    if isinstance(obj, ProjectivePoint):
        if obj.coords.size != M.shape[0]:
            raise DimensionMismatch("point and deformation sizes differ")
        return ProjectivePoint(M @ obj.coords).normalized()
    if isinstance(obj, ConvexBody):
        if obj.samples.shape[1] != M.shape[0]:
            raise DimensionMismatch("body and deformation sizes differ")
        samples = obj.samples @ M.T
        tangents = np.einsum("ij,mjk->mik", M, obj.tangents)
        return ConvexBody(samples, tangents, axes=obj.axes)
    if isinstance(obj, EnvelopeResult):
        pts = obj.points @ M.T
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        ideal = obj.ideal.copy()
        ok = ~obj.skipped
        ideal[ok] = np.abs(pts[ok, -1]) <= 1e-10
        return EnvelopeResult(pts, obj.skipped, obj.degenerate, ideal, obj.reasons)
    pts = np.atleast_2d(np.asarray(obj, dtype=float))
    if pts.shape[1] != M.shape[0]:
        raise DimensionMismatch("points and deformation sizes differ")
    out = pts @ M.T
    ideal = np.abs(out[:, -1]) <= ideal_rtol * np.linalg.norm(out, axis=1)
    out[~ideal] = out[~ideal] / out[~ideal, -1:]
    return out, ideal


def dual_side_matrix(p: DualSideParams) -> AffineDeformation:
    """Homogeneous matrix sending graph points (eta, F*(eta), 1) to graph points of TF.

    Derived from the coordinate map eta' = E^{-1}(eta - f) and
    TF(eta') = mu F*(eta) + <eta', g> + h, i.e.
    TF = mu F* + <eta, E^{-T} g> + h - <E^{-1} f, g>.
    """
    n = p.n
    Ei = np.linalg.inv(p.E)
    M = np.zeros((n + 2, n + 2))
    M[:n, :n] = Ei
    M[:n, n + 1] = -Ei @ p.f
    M[n, :n] = Ei.T @ p.g
    M[n, n] = p.mu
    M[n, n + 1] = p.h - (Ei @ p.f) @ p.g
    M[n + 1, n + 1] = 1.0
    return AffineDeformation(M)


def _sorted_1d(grid: np.ndarray, values: np.ndarray, gradients=None):
    order = np.argsort(grid[:, 0])
    grads = None if gradients is None else gradients[order]
    return grid[order], values[order], grads


def generalized_lft_dual_side(fstar: SampledFunction, p: DualSideParams, eta_grid=None) -> SampledFunction:
    """(TF)(eta) = mu F*(E eta + f) + <eta, g> + h by multilinear interpolation of F*.

    The default target grid is the preimage E^{-1}(eta_i - f) of the nodes
    of ``fstar``.  Raises OutOfGrid when E eta + f leaves the sampled box.
    """
    if p.n != fstar.n:
        raise DimensionMismatch("parameter and function dimensions differ")
    if eta_grid is None:
        eta = (fstar.grid - p.f) @ np.linalg.inv(p.E).T
    else:
        eta = np.asarray(eta_grid, dtype=float).reshape(-1, p.n)
    src = eta @ p.E.T + p.f
    values = p.mu * interpolate_sampled(fstar, src) + eta @ p.g + p.h
    if p.n == 1:
        eta, values, _ = _sorted_1d(eta, values)
    return SampledFunction(eta, values)


def generalized_lft_primal_side(
    f: SampledFunction,
    p: PrimalSideParams,
    eta_grid=None,
    theta_grid=None,
) -> SampledFunction:
    """(mu F(A theta + b))* + <eta, c> + d.

    G(theta) = mu F(A theta + b) is sampled exactly at theta_i = A^{-1}(x_i - b)
    for the nodes x_i of ``f``, or by interpolation on ``theta_grid`` when
    given, then conjugated by brute force.  The additive linear term is
    applied in the variable of the conjugate.
    """
    if p.n != f.n:
        raise DimensionMismatch("parameter and function dimensions differ")
    Ai = np.linalg.inv(p.A)
    grads = None
    if theta_grid is None:
        fin = f.finite
        theta = (f.grid[fin] - p.b) @ Ai.T
        values = p.mu * f.values[fin]
        try:
            grads = p.mu * f.gradient_estimate()[fin] @ p.A
        except MissingGradients:
            grads = None
    else:
        theta = np.asarray(theta_grid, dtype=float).reshape(-1, p.n)
        values = p.mu * interpolate_sampled(f, theta @ p.A.T + p.b)
    if p.n == 1:
        theta, values, grads = _sorted_1d(theta, values, grads)
    G = SampledFunction(theta, values, gradients=grads)
    Gstar = conjugate_bruteforce(G, eta_grid)
    out = Gstar.values + Gstar.grid @ p.c + p.d
    return SampledFunction(Gstar.grid, out, axes=Gstar.axes if p.n > 1 else None, argopt=Gstar.argopt)


def _max_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """Max distance between matched affine points, relative once a point lies beyond norm 1.

    Envelope points close to infinity carry rounding error proportional to
    their magnitude; the relative form keeps those comparable to the rest.
    """
    use = np.all(np.isfinite(P), axis=1) & np.all(np.isfinite(Q), axis=1)
    if not np.any(use):
        return float("nan")
    scale = np.maximum(1.0, np.linalg.norm(P[use], axis=1))
    return float(np.max(np.linalg.norm(P[use] - Q[use], axis=1) / scale))


def verify_thm_T(C, body: ConvexBody) -> float:
    """Max distance between the C-polar boundary and M_T applied to the Legendre-polar boundary."""
    C = _cost(C)
    direct = polar_boundary_envelope(C, body, flat_check=False)
    legendre = polar_boundary_envelope(legendre_matrix(C.n), body, flat_check=False)
    mapped = apply_deformation(decompose_T(C), legendre)
    return _max_distance(direct.dehomogenized(), mapped.dehomogenized())


def verify_thm_S(C, body: ConvexBody) -> float:
    """Max distance between the C-polar boundary and the Legendre-polar boundary of M_S(body)."""
    C = _cost(C)
    direct = polar_boundary_envelope(C, body, flat_check=False)
    Ms = decompose_S(C).M
    # S(body) may contain ideal points, so stay in raw homogeneous coordinates
    samples = body.samples @ Ms.T
    tangents = np.einsum("ij,mjk->mik", Ms, body.tangents)
    deformed = envelope_points(legendre_matrix(C.n), samples, tangents, flat_check=False)
    return _max_distance(direct.dehomogenized(), deformed.dehomogenized())


def decomposition_report(C) -> dict:
    """JSON-ready {M_T, M_S, residuals}."""
    C = _cost(C)
    Mt = decompose_T(C)
    Ms = decompose_S(C)
    r_t, r_s = decomposition_residuals(C)
    rel_t, rel_s = relate_T_S(Mt, Ms)
    return {
        "M_T": Mt.M.tolist(),
        "M_S": Ms.M.tolist(),
        "residuals": {
            "decompose_T": r_t,
            "decompose_S": r_s,
            "relate_T": rel_t,
            "relate_S": rel_s,
        },
    }
