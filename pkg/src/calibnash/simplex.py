"""Probability-vector arithmetic on the simplex.

Points of the simplex are plain 1-d float arrays. :func:`simplex_point`
validates and normalizes them; every other function here assumes valid
input unless it says otherwise. Joint distributions over ``[d] x [d]`` are
flat arrays of length ``d*d`` in row-major order, row = player 1's outcome.
"""

from __future__ import annotations

import math

import numpy as np

CLAMP_TOL = 1e-12
SUM_TOL = 1e-9


def simplex_point(x, copy: bool = True) -> np.ndarray:
    """Validate ``x`` as a probability vector and return it as a float array.

    Coordinates in ``[-1e-12, 0)`` are clamped to zero and the result is
    renormalized, so floating-point drift does not accumulate. With
    ``copy=False`` a valid float array is returned as is; the input is
    never modified, a repaired point is always a new array.

    Raises
    ------
    ValueError
        If ``x`` is not 1-d, has fewer than 2 entries, is non-finite, has a
        coordinate below ``-1e-12``, or does not sum to 1 within ``1e-9``.
    """
    p = np.array(x, dtype=float, copy=copy)
    if p.ndim != 1 or p.size < 2:
        raise ValueError(f"simplex point must be a 1-d vector of length >= 2, got shape {p.shape}")
    total = float(p.sum())
    # any nan or inf makes the sum non-finite
    if not math.isfinite(total):
        raise ValueError("simplex point has non-finite coordinates")
    low = float(p.min())
    if low < -CLAMP_TOL:
        raise ValueError(f"simplex point has negative coordinate {low:.3g}")
    if abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"simplex point sums to {total!r}, not 1")
    if low < 0.0:
        p = np.maximum(p, 0.0)
        total = float(p.sum())
    if total != 1.0:
        p = p / total
    return p


def uniform(dim: int) -> np.ndarray:
    return np.full(dim, 1.0 / dim)


def onehot(index: int, dim: int) -> np.ndarray:
    """Embed outcome ``index`` (0-based) as a basis vector of length ``dim``."""
    if not 0 <= index < dim:
        raise IndexError(f"outcome {index} out of range for dimension {dim}")
    e = np.zeros(dim)
    e[index] = 1.0
    return e


def l1_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())


def project_l2(x) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex.

    Sort-then-threshold, O(D log D). Points already on the simplex are
    returned unchanged.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError(f"expected a 1-d vector of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a non-finite vector")
    if v.min() >= 0.0 and abs(v.sum() - 1.0) <= CLAMP_TOL:
        return v.copy()
    return project_rows(v[None, :])[0]


def project_rows(X: np.ndarray) -> np.ndarray:
    """Project every row of a 2-d array onto the simplex."""
    X = np.asarray(X, dtype=float)
    n, dim = X.shape
    if dim == 2:
        # the nearest point of the segment, in closed form
        a = np.clip(0.5 * (1.0 + X[:, 0] - X[:, 1]), 0.0, 1.0)
        return np.stack([a, 1.0 - a], axis=1)
    u = -np.sort(-X, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, dim + 1)
    cond = u - css / ind > 0
    # cond is True on a prefix; the first column always qualifies
    rho = dim - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), rho] / (rho + 1)
    return np.maximum(X - theta[:, None], 0.0)


def joint_dim(p) -> int:
    n = np.asarray(p).size
    d = math.isqrt(n)
    if d * d != n or d < 2:
        raise ValueError(f"joint distribution length {n} is not a square d*d with d >= 2")
    return d


def marginals(p) -> tuple[np.ndarray, np.ndarray]:
    """Row and column marginals ``([p]_1, [p]_2)`` of a flat joint distribution."""
    p = np.asarray(p, dtype=float)
    d = joint_dim(p)
    P = p.reshape(d, d)
    return P.sum(axis=1), P.sum(axis=0)


def outer(u, v) -> np.ndarray:
    """Product distribution of ``u`` (rows) and ``v`` (columns), flattened."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return np.outer(u, v).ravel()


def pair_index(i: int, j: int, d: int) -> int:
    """Flat outcome index of the pure pair ``(i, j)``."""
    return i * d + j


def split_pair(index: int, d: int) -> tuple[int, int]:
    return divmod(index, d)


def random_point(rng: np.random.Generator, dim: int, size=None) -> np.ndarray:
    """Uniform draw(s) from the simplex (flat Dirichlet)."""
    return rng.dirichlet(np.ones(dim), size=size)
