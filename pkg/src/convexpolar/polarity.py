"""Quadratic polarities driven by an invertible cost matrix.

A cost matrix C of size (n+2) x (n+2) pairs a primal point [a] with a dual
point [b] through p(a, b) = [a]^T C [b].  The polar of a set A is the set of
[b] with p(a, b) >= 0 for every [a] in A.  Polar sets are handled
extensionally: a convex body is a list of boundary samples with tangent
frames, and the boundary of its polar is computed sample by sample as the
envelope of the polar hyperplanes (incidence + tangency null space).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from convexpolar._numerics import RANK_RTOL, cofactor_vectors, column_rank_ratio, fd_derivative, null_vectors
from convexpolar.errors import (
    DimensionMismatch,
    IdealPoint,
    NullSpaceAmbiguous,
    RankDeficient,
    SingularMatrix,
)
from convexpolar.projective import ProjectivePoint, as_coords

MEMBERSHIP_RTOL = 1e-9
IDEAL_RTOL = 1e-10
FLAT_RTOL = 1e-9


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Invertible (n+2) x (n+2) matrix defining the pairing [a]^T C [b]."""

    C: np.ndarray
    C_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        C = _readonly(self.C)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] < 3:
            raise DimensionMismatch(f"cost matrix must be square of size >= 3, got {C.shape}")
        if not np.all(np.isfinite(C)):
            raise ValueError("cost matrix must be finite")
        s = np.linalg.svd(C, compute_uv=False)
        if s[0] == 0 or s[-1] / s[0] < 1e-14:
            raise SingularMatrix(f"cost matrix is singular (condition {s[0] / max(s[-1], 1e-300):.3g})")
        C_inv = np.linalg.inv(C)
        err = np.linalg.norm(C_inv @ C - np.eye(C.shape[0])) / np.sqrt(C.shape[0])
        if err > 1e-10:
            raise SingularMatrix(f"inverse check failed (residual {err:.3g})")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "C_inv", _readonly(C_inv))

    @property
    def n(self) -> int:
        return self.C.shape[0] - 2

    @property
    def T(self) -> "CostMatrix":
        return CostMatrix(self.C.T)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.C, 2))

    def condition(self) -> float:
        return float(np.linalg.cond(self.C))

    def to_json(self) -> dict:
        return {"n": self.n, "C": self.C.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "CostMatrix":
        C = np.asarray(data["C"], dtype=float)
        if "n" in data and C.shape != (data["n"] + 2, data["n"] + 2):
            raise DimensionMismatch(f"C has shape {C.shape} but n = {data['n']}")
        return cls(C)


def legendre_matrix(n: int) -> CostMatrix:
    """The Legendre cost matrix [[-I_n, 0, 0], [0, 0, 1], [0, 1, 0]]."""
    C = np.zeros((n + 2, n + 2))
    C[:n, :n] = -np.eye(n)
    C[n, n + 1] = C[n + 1, n] = 1.0
    return CostMatrix(C)


def parabola_to_sphere_matrix(n: int) -> CostMatrix:
    """Cost matrix sending epi Q to the unit ball."""
    r = 1.0 / np.sqrt(2.0)
    C = np.eye(n + 2)
    C[n:, n:] = [[r, r], [-r, r]]
    return CostMatrix(C)


def _matrix(C) -> np.ndarray:
    return C.C if isinstance(C, CostMatrix) else np.asarray(C, dtype=float)


def pairing(C, a, b) -> float:
    """[a]^T C [b]."""
    M = _matrix(C)
    a = as_coords(a)
    b = as_coords(b)
    if a.shape != (M.shape[0],) or b.shape != (M.shape[1],):
        raise DimensionMismatch(f"cannot pair vectors of length {a.size}, {b.size} through {M.shape}")
    return float(a @ M @ b)


@dataclass(frozen=True, eq=False)
class Halfspace:
    """{[x] : normal^T [x] >= 0}."""

    normal: np.ndarray

    def __post_init__(self):
        nu = _readonly(self.normal)
        if not np.any(nu):
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", nu)

    def value(self, x) -> float:
        return float(self.normal @ as_coords(x))

    def contains(self, x, tol: float = MEMBERSHIP_RTOL) -> bool:
        x = as_coords(x)
        return self.value(x) >= -tol * np.linalg.norm(self.normal) * np.linalg.norm(x)


def polar_halfspace(C, a) -> Halfspace:
    """Polar of a single point: {[b] : [a]^T C [b] >= 0}."""
    return Halfspace(_matrix(C).T @ as_coords(a))


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Sampled boundary of a closed convex subset of R^{n+1}.

    ``samples`` holds homogeneous boundary points (m, n+2), stored with last
    coordinate 1.  ``tangents`` holds, per sample, the n tangent directions
    as columns (m, n+2, n).  ``axes`` optionally gives the parameter values
    of a rectangular sampling grid (samples in C order); it is used to
    rebuild tangents of derived curves by finite differences.
    """

    samples: np.ndarray
    tangents: np.ndarray
    axes: Optional[tuple] = None
    degenerate: np.ndarray = field(init=False, repr=False)
    source: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        a = np.array(self.samples, dtype=float)
        if a.ndim != 2 or a.shape[1] < 3:
            raise DimensionMismatch(f"samples must have shape (m, n+2), got {a.shape}")
        m, k = a.shape
        n = k - 2
        t = np.array(self.tangents, dtype=float)
        if n == 1 and t.ndim == 2:
            t = t[:, :, None]
        if t.shape != (m, k, n):
            raise DimensionMismatch(f"tangents must have shape {(m, k, n)}, got {t.shape}")
        if np.any(a[:, -1] == 0):
            raise IdealPoint("convex body samples must be finite points")
        a = a / a[:, -1:]
        axes = self.axes
        if axes is not None:
            axes = tuple(_readonly(np.asarray(ax, dtype=float).reshape(-1)) for ax in axes)
            if len(axes) != n or int(np.prod([ax.size for ax in axes])) != m:
                raise DimensionMismatch("axes do not match the number of samples")
        if m:
            frames = np.concatenate([a[:, :, None], t], axis=2)
            degenerate = column_rank_ratio(frames) < RANK_RTOL
        else:
            degenerate = np.zeros(0, dtype=bool)
        object.__setattr__(self, "samples", _readonly(a))
        object.__setattr__(self, "tangents", _readonly(t))
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "degenerate", _readonly(degenerate).astype(bool))

    @property
    def n(self) -> int:
        return self.samples.shape[1] - 2

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def grid_shape(self) -> tuple:
        if self.axes is None:
            return (len(self),) if self.n == 1 else ()
        return tuple(ax.size for ax in self.axes)

    def points(self) -> list:
        return [ProjectivePoint(s) for s in self.samples]

    @classmethod
    def from_affine(cls, points, tangents, axes=None, source=None) -> "ConvexBody":
        """Build from affine boundary points (m, n+1) and affine tangents (m, n+1, n)."""
        points = np.asarray(points, dtype=float)
        tangents = np.asarray(tangents, dtype=float)
        m = points.shape[0]
        if tangents.ndim == 2:
            tangents = tangents[:, :, None]
        a = np.hstack([points, np.ones((m, 1))])
        t = np.concatenate([tangents, np.zeros((m, 1, tangents.shape[2]))], axis=1)
        return cls(a, t, axes=axes, source=source)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "samples": self.samples.tolist(),
            "tangents": self.tangents.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvexBody":
        samples = np.asarray(data["samples"], dtype=float)
        tangents = np.asarray(data["tangents"], dtype=float)
        if "n" in data and samples.ndim == 2 and samples.shape[1] != data["n"] + 2:
            raise DimensionMismatch(f"samples have length {samples.shape[1]} but n = {data['n']}")
        return cls(samples, tangents, axes=data.get("axes"))


def disk_body(angles: Sequence[float], radius: float = 1.0, center=(0.0, 0.0)) -> ConvexBody:
    """Boundary of a disk in R^2 sampled at the given angles."""
    phi = np.asarray(angles, dtype=float)
    pts = np.column_stack([np.cos(phi), np.sin(phi)]) * radius + np.asarray(center)
    tan = np.column_stack([-np.sin(phi), np.cos(phi)]) * radius
    return ConvexBody.from_affine(pts, tan[:, :, None], axes=(phi,))


def sphere_body(n: int, count: int = 400) -> ConvexBody:
    """Unit sphere of R^{n+1}; only n = 1 (the circle) is sampled on a grid."""
    if n != 1:
        raise NotImplementedError("sphere_body samples the circle only")
    return disk_body(np.linspace(0.0, 2 * np.pi, count, endpoint=False))


def _membership_scale(points: np.ndarray, normal: np.ndarray) -> float:
    if points.size == 0:
        return 0.0
    return float(np.max(np.linalg.norm(points, axis=1)) * np.linalg.norm(normal))


def polar_membership(C, body, b, tol: Optional[float] = None) -> bool:
    """True iff [a_i]^T C [b] >= -tol for every boundary sample a_i.

    ``tol`` defaults to 1e-9 times the scale of the pairing terms.  ``b`` is
    brought to its canonical representative first, so the answer does not
    depend on the homogeneous scale chosen for it.
    """
    samples = body.samples if isinstance(body, ConvexBody) else np.atleast_2d(np.asarray(body, dtype=float))
    if samples.shape[0] == 0:
        raise ValueError("body has no boundary samples")
    b = ProjectivePoint(as_coords(b)).normalized().coords
    normal = _matrix(C) @ b
    values = samples @ normal
    if tol is None:
        tol = MEMBERSHIP_RTOL * _membership_scale(samples, normal)
    return bool(np.all(values >= -tol))


def dual_polar_membership(C, dual_body_samples, a, tol: Optional[float] = None) -> bool:
    """True iff [b_j]^T C^T [a] >= -tol for every dual sample b_j (vacuous when empty)."""
    if len(dual_body_samples) == 0:
        return True
    samples = np.array([ProjectivePoint(as_coords(s)).normalized().coords for s in dual_body_samples])
    a = ProjectivePoint(as_coords(a)).normalized().coords
    normal = _matrix(C) @ a
    values = samples @ normal
    if tol is None:
        tol = MEMBERSHIP_RTOL * _membership_scale(samples, normal)
    return bool(np.all(values >= -tol))


@dataclass(frozen=True, eq=False)
class EnvelopeResult:
    """Per-sample envelope points of a polar boundary.

    ``points`` are homogeneous, unit norm, and oriented so that the body lies
    on the nonnegative side of their polar hyperplanes.  Skipped samples hold
    NaN rows and a reason string.
    """

    points: np.ndarray
    skipped: np.ndarray
    degenerate: np.ndarray
    ideal: np.ndarray
    reasons: tuple

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def ok(self) -> np.ndarray:
        return ~self.skipped

    @property
    def finite(self) -> np.ndarray:
        return ~self.skipped & ~self.ideal

    def as_points(self) -> list:
        """ProjectivePoint (normalized) per sample, None where skipped."""
        return [None if s else ProjectivePoint(p).normalized() for p, s in zip(self.points, self.skipped)]

    def dehomogenized(self) -> np.ndarray:
        """Affine coordinates of every sample; NaN where skipped or ideal."""
        out = np.full((len(self), self.points.shape[1] - 1), np.nan)
        f = self.finite
        out[f] = self.points[f, :-1] / self.points[f, -1:]
        return out


def envelope_points(M, samples, tangents, reference=None, flat_check: bool = True) -> EnvelopeResult:
    """Envelope of polar hyperplanes of (possibly non-affine) homogeneous samples.

    For each sample a with tangent columns t_1..t_n solve, up to scale,
    a^T M b = 0 and t_k^T M b = 0.  ``reference`` is a homogeneous point that
    must land on the nonnegative side; it defaults to the sum of samples.
    """
    M = _matrix(M)
    a = np.asarray(samples, dtype=float)
    t = np.asarray(tangents, dtype=float)
    m, k = a.shape
    if M.shape != (k, k):
        raise DimensionMismatch(f"cost matrix {M.shape} does not match samples of length {k}")
    if m == 0:
        empty = np.zeros(0, dtype=bool)
        return EnvelopeResult(np.zeros((0, k)), empty, empty, empty, ())

    frames = np.concatenate([a[:, :, None], t], axis=2)
    valid = np.all(np.isfinite(frames), axis=(1, 2))
    reasons: list = [None] * m
    skipped = ~valid
    for i in np.flatnonzero(~valid):
        reasons[i] = "non-finite frame"

    points = np.full((m, k), np.nan)
    idx = np.flatnonzero(valid)
    if idx.size:
        frame_ratio = column_rank_ratio(frames[idx])
        system = np.swapaxes(frames[idx], 1, 2) @ M
        vecs, ratio = null_vectors(system)
        for j, i in enumerate(idx):
            if frame_ratio[j] < RANK_RTOL:
                skipped[i] = True
                reasons[i] = RankDeficient.__name__
            elif ratio[j] < RANK_RTOL:
                skipped[i] = True
                reasons[i] = NullSpaceAmbiguous.__name__
            else:
                points[i] = vecs[j]

    good = ~skipped
    if reference is None:
        reference = np.nansum(a[valid] / np.linalg.norm(a[valid], axis=1, keepdims=True), axis=0)
    side = (reference @ M) @ points[good].T
    signs = np.where(side < 0, -1.0, 1.0)
    # reference on a polar hyperplane: fall back to a positive last coordinate
    tiny = np.abs(side) <= 1e-12 * np.linalg.norm(reference) * np.linalg.norm(M, 2)
    signs[tiny] = np.where(points[good][tiny, -1] < 0, -1.0, 1.0)
    points[good] *= signs[:, None]

    degenerate = skipped.copy()
    if flat_check and np.count_nonzero(good) > 1:
        unit = a[valid] / np.linalg.norm(a[valid], axis=1, keepdims=True)
        valid_idx = np.flatnonzero(valid)
        for i in np.flatnonzero(good):
            vals = np.abs(unit @ (M @ points[i])) / np.linalg.norm(M, 2)
            vals[valid_idx == i] = np.inf
            if np.min(vals) <= FLAT_RTOL:
                degenerate[i] = True
                reasons[i] = "flat"

    ideal = np.zeros(m, dtype=bool)
    ideal[good] = np.abs(points[good, -1]) <= IDEAL_RTOL
    return EnvelopeResult(
        _readonly(points),
        _readonly(skipped).astype(bool),
        _readonly(degenerate).astype(bool),
        _readonly(ideal).astype(bool),
        tuple(reasons),
    )


def polar_boundary_envelope(C, body: ConvexBody, flat_check: bool = True) -> EnvelopeResult:
    """Boundary of the polar set of ``body`` as the envelope of polar hyperplanes.

    Each non-degenerate sample a(theta) yields the point [b] spanning the
    null space of the stacked incidence and tangency conditions
    a^T C b = 0, t_k^T C b = 0.  Rank-deficient samples are skipped and
    reported rather than raised.
    """
    if body.n != _matrix(C).shape[0] - 2:
        raise DimensionMismatch(f"body dimension {body.n} does not match cost matrix")
    return envelope_points(C, body.samples, body.tangents, flat_check=flat_check)


def _grid_tangents(points: np.ndarray, shape: tuple, axes, order: int = 6) -> np.ndarray:
    m, k = points.shape
    n = len(shape)
    grid = points.reshape(*shape, k)
    out = np.empty((m, k, n))
    for d in range(n):
        x = axes[d] if axes is not None else np.arange(shape[d], dtype=float)
        out[:, :, d] = fd_derivative(grid, x, axis=d, order=order).reshape(m, k)
    return out


def involution_check(C, body: ConvexBody, fd_order: int = 6) -> float:
    """Max distance between the body and its image under the dual polarity of its polar.

    The polar boundary is computed with C, tangents of the image curve are
    rebuilt by finite differences over the sampling grid, and the dual
    envelope is taken with C^T.  Samples that are skipped on either pass do
    not contribute.

    The differences are taken on the cofactor representative of each image
    point rather than the unit-norm one.  It is a polynomial in the sample
    frame, whereas normalizing turns sharply wherever the image passes near
    infinity and spoils the difference stencils there.
    """
    M = _matrix(C)
    shape = body.grid_shape
    if not shape or int(np.prod(shape)) != len(body):
        raise ValueError("involution_check needs a body sampled on a grid (set axes)")
    first = polar_boundary_envelope(M, body, flat_check=False)
    b = first.points
    frames = np.concatenate([body.samples[:, :, None], body.tangents], axis=2)
    cof = cofactor_vectors(np.swapaxes(frames, 1, 2) @ M)
    rep = np.sum(cof * b, axis=1, keepdims=True) * b
    b_tan = _grid_tangents(rep, shape, body.axes, order=fd_order)
    ref = np.nansum(b, axis=0)
    second = envelope_points(M.T, rep, b_tan, reference=ref, flat_check=False)
    use = second.finite & first.ok
    if not np.any(use):
        raise RankDeficient("no sample survived the round trip")
    back = second.points[use, :-1] / second.points[use, -1:]
    orig = body.samples[use, :-1]
    return float(np.max(np.linalg.norm(back - orig, axis=1)))
