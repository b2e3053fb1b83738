"""Legendre-Fenchel conjugation of sampled and smooth convex functions.

The discrete conjugate of samples (theta_i, F_i) is

    F*(eta) = max_i <theta_i, eta> - F_i,

evaluated by brute force in any dimension, or in linear time for n = 1 by
merging the slopes of the lower convex hull with a sorted dual grid.  Smooth
conjugates solve grad F(theta) = eta.  The epigraph of a sampled function is
exposed as a ConvexBody so that its Legendre polar can be compared with the
conjugate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from convexpolar.errors import MissingGradients, NoConvergence, OutOfGrid, OutOfRange
from convexpolar.polarity import ConvexBody, legendre_matrix, polar_boundary_envelope

MAX_ITER = 100
_CHUNK = 2_000_000


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def grid_from_axes(axes: Sequence) -> np.ndarray:
    """Rectangular grid points (C order) from per-axis node arrays."""
    axes = [np.asarray(ax, dtype=float).reshape(-1) for ax in axes]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.reshape(-1) for g in mesh])


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values (and optionally gradients) of a function on a grid of points.

    ``grid`` has shape (m, n).  For n = 1 it must be strictly increasing; for
    n >= 2 it is usually a rectangular grid described by ``axes``.  Nodes
    flagged in ``infinite`` stand for +inf and are ignored by suprema.
    ``argopt`` records, for a computed conjugate, the index of the primal
    node attaining the optimum at each grid point.
    """

    grid: np.ndarray
    values: np.ndarray
    gradients: Optional[np.ndarray] = None
    infinite: Optional[np.ndarray] = None
    axes: Optional[tuple] = None
    argopt: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        if grid.ndim == 1:
            grid = grid[:, None]
        if grid.ndim != 2:
            raise ValueError(f"grid must have shape (m, n), got {grid.shape}")
        m, n = grid.shape
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != m:
            raise ValueError(f"{values.size} values for {m} grid points")
        if not np.all(np.isfinite(grid)):
            raise ValueError("grid points must be finite")
        infinite = np.zeros(m, dtype=bool) if self.infinite is None else np.array(self.infinite, dtype=bool).reshape(-1)
        if infinite.size != m:
            raise ValueError("infinite mask does not match grid")
        infinite = infinite | np.isposinf(values)
        if not np.all(np.isfinite(values[~infinite])):
            raise ValueError("values must be finite (mark +inf nodes with the infinite mask)")
        if n == 1:
            if m > 1 and not np.all(np.diff(grid[:, 0]) > 0):
                raise ValueError("a 1-d grid must be strictly increasing")
        elif m > 1 and np.unique(grid, axis=0).shape[0] != m:
            raise ValueError("grid points must be pairwise distinct")
        gradients = self.gradients
        if gradients is not None:
            gradients = np.array(gradients, dtype=float).reshape(m, n)
            gradients = _readonly(gradients)
        axes = self.axes
        if axes is None and n == 1:
            axes = (grid[:, 0],)
        if axes is not None:
            axes = tuple(_readonly(np.asarray(ax, dtype=float).reshape(-1)) for ax in axes)
            if len(axes) != n or int(np.prod([ax.size for ax in axes])) != m:
                raise ValueError("axes do not describe the grid")
        object.__setattr__(self, "grid", _readonly(grid))
        object.__setattr__(self, "values", _readonly(values))
        object.__setattr__(self, "gradients", gradients)
        object.__setattr__(self, "infinite", _readonly(infinite, bool))
        object.__setattr__(self, "axes", axes)
        if self.argopt is not None:
            object.__setattr__(self, "argopt", _readonly(self.argopt, int))

    @property
    def n(self) -> int:
        return self.grid.shape[1]

    def __len__(self) -> int:
        return self.grid.shape[0]

    @property
    def finite(self) -> np.ndarray:
        return ~self.infinite

    @property
    def shape(self) -> tuple:
        return tuple(ax.size for ax in self.axes) if self.axes is not None else (len(self),)

    @classmethod
    def from_callable(cls, F: Callable, axes, grad: Optional[Callable] = None) -> "SampledFunction":
        """Sample ``F`` (and ``grad``) on the rectangular grid spanned by ``axes``.

        ``axes`` is a 1-d array for n = 1 or a sequence of n arrays.  F and
        grad are called on single points of R^n (scalars when n = 1).
        """
        axes = _as_axes(axes)
        grid = grid_from_axes(axes)
        pts = grid[:, 0] if grid.shape[1] == 1 else grid
        values = np.array([F(p) for p in pts], dtype=float)
        gradients = None
        if grad is not None:
            gradients = np.array([np.atleast_1d(grad(p)) for p in pts], dtype=float)
        return cls(grid, values, gradients=gradients, axes=tuple(axes))

    def with_values(self, values, gradients=None) -> "SampledFunction":
        return SampledFunction(self.grid, values, gradients=gradients, axes=self.axes)

    def gradient_estimate(self) -> np.ndarray:
        """Analytic gradients when present, otherwise finite differences on the grid."""
        if self.gradients is not None:
            return np.asarray(self.gradients)
        if np.any(self.infinite):
            raise MissingGradients("finite differences need a function finite on the whole grid")
        if self.n == 1:
            if len(self) < 3:
                raise MissingGradients("finite-difference gradients need at least 3 points")
            return np.gradient(self.values, self.grid[:, 0])[:, None]
        if self.axes is None or any(ax.size < 3 for ax in self.axes):
            raise MissingGradients("finite-difference gradients need a rectangular grid with >= 3 nodes per axis")
        vals = self.values.reshape(self.shape)
        parts = np.gradient(vals, *self.axes)
        return np.column_stack([p.reshape(-1) for p in parts])

    def interpolate(self, points) -> np.ndarray:
        """Piecewise multilinear interpolation at ``points`` (k, n).

        Raises OutOfGrid outside the sampled box.
        """
        return interpolate_sampled(self, points)


def interpolate_sampled(f: SampledFunction, points, rtol: float = 1e-12) -> np.ndarray:
    """Multilinear interpolation of a rectangular-grid function.

    Points within ``rtol`` (relative to the box size) outside the grid are
    clamped onto it; anything further out raises OutOfGrid.
    """
    if f.axes is None:
        raise OutOfGrid("interpolation needs a rectangular grid")
    if np.any(f.infinite):
        raise OutOfGrid("interpolation of extended-valued samples is not supported")
    pts = _eta_points(points, f.n)
    lo = np.array([ax[0] for ax in f.axes])
    hi = np.array([ax[-1] for ax in f.axes])
    slack = rtol * np.maximum(hi - lo, 1.0)
    if np.any(pts < lo - slack) or np.any(pts > hi + slack):
        raise OutOfGrid(f"points outside the sampled box [{lo.tolist()}, {hi.tolist()}]")
    pts = np.clip(pts, lo, hi)
    if f.n == 1:
        return np.interp(pts[:, 0], f.axes[0], f.values)
    interp = RegularGridInterpolator(f.axes, f.values.reshape(f.shape), method="linear")
    return interp(pts)


def _as_axes(axes) -> list:
    if isinstance(axes, np.ndarray) and axes.ndim == 1:
        return [axes.astype(float)]
    if len(axes) and np.ndim(axes[0]) == 0:
        return [np.asarray(axes, dtype=float)]
    return [np.asarray(ax, dtype=float).reshape(-1) for ax in axes]


def _eta_points(eta_grid, n: int) -> np.ndarray:
    eta = np.asarray(eta_grid, dtype=float)
    if eta.ndim == 0:
        eta = eta.reshape(1, 1)
    elif eta.ndim == 1:
        eta = eta[:, None] if n == 1 else eta[None, :]
    if eta.shape[1] != n:
        raise ValueError(f"dual grid points must have dimension {n}")
    return eta


def slope_range(f: SampledFunction) -> np.ndarray:
    """(n, 2) array of [min, max] slopes per coordinate."""
    fin = f.finite
    if np.count_nonzero(fin) < 2:
        raise ValueError("an automatic dual grid needs at least two finite samples")
    if f.n == 1:
        x = f.grid[fin, 0]
        s = np.diff(f.values[fin]) / np.diff(x)
        return np.array([[s.min(), s.max()]])
    g = f.gradient_estimate()[fin]
    return np.column_stack([g.min(axis=0), g.max(axis=0)])


def auto_eta_grid(f: SampledFunction):
    """Dual grid spanning the slope range with the primal cardinality.

    Returns ``(points, axes)``.
    """
    rng = slope_range(f)
    counts = [len(f)] if f.n == 1 else list(f.shape)
    # a collapsed slope range (affine data) gives a single dual node
    axes = [np.unique(np.linspace(lo, hi, c)) for (lo, hi), c in zip(rng, counts)]
    return grid_from_axes(axes), tuple(axes)


def _resolve_eta(f: SampledFunction, eta_grid):
    if eta_grid is None or (isinstance(eta_grid, str) and eta_grid == "auto"):
        return auto_eta_grid(f)
    eta = _eta_points(eta_grid, f.n)
    if f.n == 1:
        # 1-d dual grids are returned sorted and without repeats
        e = np.unique(eta[:, 0])
        return e[:, None], (e,)
    return eta, None


def _make_dual(eta, axes, values, idx, f: SampledFunction) -> SampledFunction:
    return SampledFunction(eta, values, gradients=f.grid[idx], axes=axes, argopt=idx)


def conjugate_bruteforce(f: SampledFunction, eta_grid=None) -> SampledFunction:
    """Discrete conjugate max_i <theta_i, eta_j> - F_i at every dual point.

    Ties go to the smallest primal index.  The returned function carries the
    maximizing index in ``argopt`` and the maximizer theta as its gradient.
    """
    fin = f.finite
    if not np.any(fin):
        raise ValueError("conjugation needs a finite sample")
    theta = f.grid[fin]
    F = f.values[fin]
    eta, axes = _resolve_eta(f, eta_grid)
    k = eta.shape[0]
    values = np.empty(k)
    arg = np.empty(k, dtype=int)
    step = max(1, _CHUNK // theta.shape[0])
    for start in range(0, k, step):
        block = eta[start:start + step] @ theta.T - F
        j = np.argmax(block, axis=1)
        arg[start:start + step] = j
        values[start:start + step] = block[np.arange(j.size), j]
    return _make_dual(eta, axes, values, np.flatnonzero(fin)[arg], f)


def lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull vertices of points sorted by x.

    Collinear interior points are dropped.
    """
    hull: list[int] = []
    for i in range(x.size):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            # drop k unless it lies strictly below the chord j -> i
            if (y[k] - y[j]) * (x[i] - x[j]) >= (y[i] - y[j]) * (x[k] - x[j]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def conjugate_fast_1d(f: SampledFunction, eta_grid=None) -> SampledFunction:
    """Linear-time discrete conjugate for n = 1.

    The maximizer of theta * eta - F over the samples is a lower-hull vertex
    whose incoming slope is below eta and outgoing slope at least eta; a
    single pass over the sorted dual grid advances through the hull.
    """
    if f.n != 1:
        raise ValueError("conjugate_fast_1d needs n = 1")
    fin = f.finite
    if not np.any(fin):
        raise ValueError("conjugation needs a finite sample")
    x = f.grid[fin, 0]
    y = f.values[fin]
    eta, axes = _resolve_eta(f, eta_grid)
    e = eta[:, 0]
    order = np.argsort(e, kind="stable")
    hull = lower_hull(x, y)
    hx, hy = x[hull], y[hull]
    slopes = np.diff(hy) / np.diff(hx)
    values = np.empty(e.size)
    arg = np.empty(e.size, dtype=int)
    v = 0
    last = hull.size - 1
    for j in order:
        while v < last and slopes[v] < e[j]:
            v += 1
        values[j] = hx[v] * e[j] - hy[v]
        arg[j] = hull[v]
    return _make_dual(eta, axes, values, np.flatnonzero(fin)[arg], f)


def conjugate_smooth(
    F: Callable,
    gradF: Callable,
    eta,
    theta0=None,
    hessF: Optional[Callable] = None,
    max_iter: int = MAX_ITER,
):
    """Conjugate of a Legendre-type function at ``eta``.

    Solves grad F(theta) = eta and returns ``(theta_star, value)`` with
    value = <theta_star, eta> - F(theta_star).  Scalar problems use a
    bracketing root finder on the monotone derivative; vector problems use
    damped Newton on F(theta) - <theta, eta>.

    Raises
    ------
    OutOfRange
        When no bracket for grad F - eta is found (eta outside the gradient range).
    NoConvergence
        When the residual ||grad F(theta) - eta|| <= 1e-10 (1 + ||eta||) is
        not reached within ``max_iter`` iterations.
    """
    eta_arr = np.asarray(eta, dtype=float)
    tol = 1e-10 * (1.0 + np.linalg.norm(eta_arr))
    if eta_arr.size == 1:
        # scalar eta: F and gradF take floats; length-1 eta: they take arrays
        wrap = (lambda t: t) if eta_arr.ndim == 0 else (lambda t: np.array([t]))
        e = float(eta_arr.reshape(-1)[0])
        t0 = 0.0 if theta0 is None else float(np.asarray(theta0, dtype=float).reshape(-1)[0])

        def g(t):
            return float(np.asarray(gradF(wrap(t))).reshape(-1)[0]) - e

        t = _solve_monotone(g, t0, tol, max_iter)
        value = t * e - float(np.asarray(F(wrap(t))).reshape(-1)[0])
        return wrap(t), float(value)

    theta = np.zeros_like(eta_arr) if theta0 is None else np.array(theta0, dtype=float)
    theta = _damped_newton(F, gradF, hessF, eta_arr, theta, tol, max_iter)
    return theta, float(theta @ eta_arr - F(theta))


def _solve_monotone(g: Callable, t0: float, tol: float, max_iter: int) -> float:
    g0 = g(t0)
    if abs(g0) <= tol:
        return t0
    step = max(1.0, abs(t0))
    lo = hi = t0
    glo = ghi = g0
    for _ in range(max_iter):
        if g0 > 0:
            lo = hi - step
            try:
                glo = g(lo)
            except (ValueError, ArithmeticError, FloatingPointError):
                step /= 4.0
                continue
            if not np.isfinite(glo):
                step /= 4.0
                continue
            if glo <= 0:
                break
            hi, ghi = lo, glo
        else:
            hi = lo + step
            try:
                ghi = g(hi)
            except (ValueError, ArithmeticError, FloatingPointError):
                step /= 4.0
                continue
            if not np.isfinite(ghi):
                step /= 4.0
                continue
            if ghi >= 0:
                break
            lo, glo = hi, ghi
        step *= 2.0
    else:
        raise OutOfRange("could not bracket the target slope; eta may lie outside the gradient range")
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    try:
        t = brentq(g, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    except RuntimeError as exc:
        raise NoConvergence(str(exc)) from exc
    if abs(g(t)) > tol:
        raise NoConvergence(f"gradient residual {abs(g(t)):.3g} above {tol:.3g}")
    return t


def _fd_hessian(gradF: Callable, theta: np.ndarray) -> np.ndarray:
    n = theta.size
    H = np.empty((n, n))
    for k in range(n):
        h = 1e-5 * (1.0 + abs(theta[k]))
        e = np.zeros(n)
        e[k] = h
        H[:, k] = (np.asarray(gradF(theta + e)) - np.asarray(gradF(theta - e))) / (2 * h)
    return 0.5 * (H + H.T)


def _damped_newton(F, gradF, hessF, eta, theta, tol, max_iter):
    def phi(t):
        return float(F(t) - t @ eta)

    g = np.asarray(gradF(theta), dtype=float) - eta
    for _ in range(max_iter):
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            return theta
        H = np.asarray(hessF(theta), dtype=float) if hessF is not None else _fd_hessian(gradF, theta)
        try:
            p = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            p = -g
        if not np.all(np.isfinite(p)) or p @ g >= 0:
            p = -g
        f0 = phi(theta)
        t = 1.0
        for _ in range(60):
            cand = theta + t * p
            try:
                fc = phi(cand)
                gc = np.asarray(gradF(cand), dtype=float) - eta
            except (ValueError, ArithmeticError, FloatingPointError):
                t /= 2.0
                continue
            if np.isfinite(fc) and (fc <= f0 + 1e-4 * t * (p @ g) or np.linalg.norm(gc) < gnorm):
                break
            t /= 2.0
        else:
            raise NoConvergence("line search failed")
        theta, g = cand, gc
    if np.linalg.norm(g) <= tol:
        return theta
    raise NoConvergence(f"Newton did not converge in {max_iter} iterations (residual {np.linalg.norm(g):.3g})")


def hull_slopes(f: SampledFunction) -> np.ndarray:
    """Slopes of the lower convex hull edges of the finite samples (n = 1).

    These are the breakpoints of the sampled conjugate.
    """
    fin = f.finite
    x = f.grid[fin, 0]
    y = f.values[fin]
    h = lower_hull(x, y)
    return np.unique(np.diff(y[h]) / np.diff(x[h]))


def biconjugate(f: SampledFunction, eta_grid=None) -> SampledFunction:
    """F** evaluated back on the primal grid.

    For n = 1 the default dual grid is the set of lower-hull slopes, where
    the sampled conjugate has its breakpoints, so F** equals the lower convex
    envelope of the samples at every node.
    """
    if eta_grid is None and f.n == 1:
        eta_grid = hull_slopes(f)
    fstar = conjugate_bruteforce(f, eta_grid)
    back = conjugate_bruteforce(fstar, f.grid)
    return SampledFunction(f.grid, back.values, gradients=back.gradients, axes=f.axes, argopt=back.argopt)


def epigraph_body(f: SampledFunction) -> ConvexBody:
    """Boundary samples (theta_i, F_i, 1) of epi F with tangents (e_k, dF/dtheta_k, 0)."""
    grads = f.gradient_estimate()
    fin = f.finite
    n = f.n
    pts = np.column_stack([f.grid[fin], f.values[fin]])
    m = pts.shape[0]
    tangents = np.zeros((m, n + 1, n))
    tangents[:, :n, :] = np.eye(n)
    tangents[:, n, :] = grads[fin]
    axes = f.axes if np.all(fin) else None
    return ConvexBody.from_affine(pts, tangents, axes=axes, source=f)


def legendre_envelope(f: SampledFunction):
    """Dehomogenized Legendre-polar boundary of epi F, one row (eta, y) per sample."""
    body = epigraph_body(f)
    env = polar_boundary_envelope(legendre_matrix(f.n), body)
    return env.dehomogenized(), env


def verify_legendre_polarity(
    f: SampledFunction,
    F: Optional[Callable] = None,
    gradF: Optional[Callable] = None,
) -> float:
    """Max |y - F*(eta)| over the envelope points (eta, y) of the Legendre polar of epi F.

    F* is evaluated by ``conjugate_smooth`` when callables are supplied,
    otherwise by brute force over the samples of ``f``.
    """
    pts, env = legendre_envelope(f)
    use = env.finite
    if not np.any(use):
        return 0.0
    eta = pts[use, :-1]
    y = pts[use, -1]
    if F is not None and gradF is not None:
        theta0 = f.grid[f.finite][use]
        scalar = f.n == 1
        ref = np.array([
            conjugate_smooth(F, gradF, e[0] if scalar else e, t[0] if scalar else t)[1]
            for e, t in zip(eta, theta0)
        ])
    else:
        star = conjugate_bruteforce(f, eta)
        if f.n == 1:
            _, inverse = np.unique(eta[:, 0], return_inverse=True)
            ref = star.values[inverse]
        else:
            ref = star.values
    return float(np.max(np.abs(y - ref)))
