"""Small dense linear-algebra and finite-difference helpers."""

from __future__ import annotations

import numpy as np

RANK_RTOL = 1e-8


def fd_weights(x: np.ndarray, x0: float) -> np.ndarray:
    """Weights w with sum(w * y) ~ y'(x0) for samples y at nodes x.

    Exact for polynomials of degree < len(x).
    """
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(x - x0))
    s = (x - x0) / scale
    k = s.size
    V = np.vander(s, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs) / scale


def fd_derivative(y: np.ndarray, x: np.ndarray, axis: int = 0, order: int = 6) -> np.ndarray:
    """First derivative of samples ``y`` along ``axis`` with nodes ``x``.

    Uses centred stencils of ``order + 1`` points in the interior and shifted
    (one-sided) stencils of the same width near the ends.  Falls back to the
    widest stencil available on short axes.
    """
    y = np.moveaxis(np.asarray(y, dtype=float), axis, 0)
    x = np.asarray(x, dtype=float)
    m = x.size
    if m < 2:
        raise ValueError("need at least two nodes for a derivative")
    width = min(order + 1, m)
    half = width // 2
    out = np.empty_like(y)
    for i in range(m):
        lo = min(max(i - half, 0), m - width)
        idx = np.arange(lo, lo + width)
        w = fd_weights(x[idx], x[i])
        out[i] = np.tensordot(w, y[idx], axes=(0, 0))
    return np.moveaxis(out, 0, axis)


def null_vectors(M: np.ndarray, rtol: float = RANK_RTOL):
    """Null vector of each (k, k+1) matrix in a stack.

    Returns ``(vectors, ratio)`` where ``vectors[i]`` spans the right null
    space of ``M[i]`` when ``ratio[i] = s_min / s_max`` exceeds ``rtol``.
    """
    M = np.asarray(M, dtype=float)
    _, s, vt = np.linalg.svd(M, full_matrices=True)
    ratio = s[..., -1] / np.where(s[..., 0] > 0, s[..., 0], 1.0)
    return vt[..., -1, :], ratio


def column_rank_ratio(F: np.ndarray) -> np.ndarray:
    """s_min / s_max of each matrix in a stack after scaling columns to unit norm."""
    F = np.asarray(F, dtype=float)
    norms = np.linalg.norm(F, axis=-2, keepdims=True)
    G = F / np.where(norms > 0, norms, 1.0)
    s = np.linalg.svd(G, compute_uv=False)
    return s[..., -1] / np.where(s[..., 0] > 0, s[..., 0], 1.0)


def cofactor_vectors(M: np.ndarray) -> np.ndarray:
    """Generalized cross product of the rows of each (k, k+1) matrix in a stack.

    Entry j is (-1)^j times the determinant with column j removed.  The
    result spans the null space and is a polynomial in the entries of M.
    """
    M = np.asarray(M, dtype=float)
    k1 = M.shape[-1]
    out = np.empty(M.shape[:-2] + (k1,))
    for j in range(k1):
        minor = np.delete(M, j, axis=-1)
        out[..., j] = (-1) ** j * np.linalg.det(minor)
    return out
