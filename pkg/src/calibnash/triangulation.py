"""Grid triangulation of the simplex and its test functions.

The simplex of dimension ``D`` at resolution ``k`` has grid vertices
``y / k`` for non-negative integer vectors ``y`` with ``sum(y) == k``.
Cells come from the Kuhn (Freudenthal) triangulation of the cube, applied
in partial-sum coordinates ``s_m = k * (q_1 + ... + q_m)``, ``m < D``. In
those coordinates the simplex is ``0 <= s_1 <= ... <= s_{D-1} <= k``, which
is a union of Kuhn cells, so locating a point is a floor plus a sort of the
fractional parts.
"""

from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np

from .simplex import simplex_point


class TestWeights(NamedTuple):
    """Active vertices of a query point and their barycentric weights."""

    ids: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.ids)


def diameter_closed_form(dim: int, resolution: int) -> float:
    return 2.0 * math.ceil((dim - 1) / 2) / resolution


class GridTriangulation:
    """Kuhn triangulation of the simplex with a lazy vertex registry.

    Vertex ids are dense integers handed out in order of first touch by
    :meth:`locate` or :meth:`strong_indicator`. Registration mutates the
    instance and is not thread-safe; lookups on already-registered vertices
    are read-only.
    """

    # exhaustive diameter checks enumerate 2**(D-1) vertex offsets
    _EXHAUSTIVE_MAX_DIM = 18

    def __init__(self, dim: int, resolution: int):
        if dim < 2:
            raise ValueError(f"dimension must be >= 2, got {dim}")
        if resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {resolution}")
        self.dim = int(dim)
        self.resolution = int(resolution)
        self._ids: dict[tuple[int, ...], int] = {}
        self._keys: list[tuple[int, ...]] = []
        self._diameter: float | None = None
        self._offsets: np.ndarray | None = None

    @classmethod
    def from_precision(cls, dim: int, epsilon: float) -> GridTriangulation:
        """Coarsest grid whose cells have ell-1 diameter at most ``epsilon``."""
        if not epsilon > 0:
            raise ValueError(f"precision must be positive, got {epsilon}")
        k = max(1, math.ceil(2.0 / epsilon))
        while True:
            tri = cls(dim, k)
            if tri.cell_diameter_bound() <= epsilon:
                return tri
            k += 1

    def __repr__(self):
        return f"GridTriangulation(dim={self.dim}, resolution={self.resolution}, touched={len(self._keys)})"

    @property
    def precision(self) -> float:
        return self.cell_diameter_bound()

    @property
    def n_vertices(self) -> int:
        """Number of registered (touched) vertices."""
        return len(self._keys)

    def total_vertices(self) -> int:
        """Number of grid vertices in the whole simplex."""
        return math.comb(self.resolution + self.dim - 1, self.dim - 1)

    def key(self, vid: int) -> tuple[int, ...]:
        return self._keys[vid]

    def vertex(self, vid: int) -> np.ndarray:
        return np.array(self._keys[vid], dtype=float) / self.resolution

    def vertices(self, ids=None) -> np.ndarray:
        """Coordinates of the given (default: all registered) vertices, one per row."""
        if ids is None:
            ids = range(len(self._keys))
        keys = [self._keys[i] for i in ids]
        if not keys:
            return np.zeros((0, self.dim))
        return np.array(keys, dtype=float) / self.resolution

    def register(self, key) -> int:
        return self.register_tuple(tuple(int(c) for c in key))

    def register_tuple(self, key: tuple) -> int:
        """Id of an integer-tuple key, registering it on first sight."""
        vid = self._ids.get(key)
        if vid is None:
            if len(key) != self.dim or min(key) < 0 or sum(key) != self.resolution:
                raise ValueError(f"{key} is not a grid vertex of {self!r}")
            vid = len(self._keys)
            self._ids[key] = vid
            self._keys.append(key)
        return vid

    def lookup(self, key) -> int | None:
        return self._ids.get(tuple(int(c) for c in key))

    def _check(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}, got shape {q.shape}")
        return simplex_point(q, copy=False)

    def locate(self, q, check: bool = True) -> TestWeights:
        """Barycentric weights of ``q`` in its cell, zero weights dropped.

        Dropping zero weights makes the result the unique minimal face
        containing ``q``, so boundary points need no tie rule. Pass
        ``check=False`` only for points already known to be valid.
        """
        if check:
            q = self._check(q)
        if isinstance(q, np.ndarray):
            q = q.tolist()
        memo_key = tuple(q)
        memo = self.__dict__.get("_locate_memo")
        if memo is not None and memo[0] == memo_key:
            return memo[1]
        k = self.resolution
        D = self.dim
        fk = float(k)
        base = [0] * (D - 1)
        frac = [0.0] * (D - 1)
        acc = 0.0
        for m in range(D - 1):
            acc += q[m]
            s = min(k * acc, fk)
            a = math.floor(s)
            base[m] = a
            frac[m] = s - a
        order = sorted(range(D - 1), key=frac.__getitem__, reverse=True)
        # vertex j of the cell is base + e_{order[0]} + ... + e_{order[j-1]};
        # raising partial sum m moves one unit from coordinate m+1 to m
        y = [base[0]] + [base[m] - base[m - 1] for m in range(1, D - 1)] + [k - base[-1]]
        ids = []
        weights = []
        prev = 1.0
        for j in range(D):
            fj = frac[order[j]] if j < D - 1 else 0.0
            lam = prev - fj
            if lam > 0.0:
                ids.append(self.register_tuple(tuple(y)))
                weights.append(lam)
            if j < D - 1:
                m = order[j]
                y[m] += 1
                y[m + 1] -= 1
                prev = fj
        out = TestWeights(np.array(ids, dtype=np.int64), np.array(weights))
        # the same point is often located twice in a row (forecast, then update)
        self._locate_memo = (memo_key, out)
        return out

    def cell(self, q) -> tuple[np.ndarray, np.ndarray]:
        """All ``D`` vertices of a full cell containing ``q``.

        Returns ``(ids, coords)`` with one vertex per row of ``coords``.
        On the boundary, where the natural cell may poke outside the
        simplex, the point is nudged toward the barycenter first.
        """
        q = np.asarray(q, dtype=float)
        D = self.dim
        k = self.resolution
        for nudge in (0.0, 1e-9, 1e-6):
            x = (1.0 - nudge) * q + nudge / D
            s = np.minimum(k * np.cumsum(x[:-1]), float(k))
            a = np.floor(s)
            order = np.argsort(a - s, kind="stable")
            rank = np.argsort(order)
            cell_s = a[None, :] + (np.arange(D)[:, None] > rank[None, :])
            full = np.concatenate([np.zeros((D, 1)), cell_s, np.full((D, 1), float(k))], axis=1)
            ys = np.rint(np.diff(full, axis=1)).astype(np.int64)
            if ys.min() >= 0:
                ids = np.array([self.register_tuple(tuple(y)) for y in ys.tolist()], dtype=np.int64)
                return ids, ys / k
        raise RuntimeError(f"no valid cell found around {q}")

    # (D-1)! * D offset patterns per vertex; beyond this the star is too big
    STAR_MAX_DIM = 6

    def _star_offsets(self) -> np.ndarray:
        """Offsets, in partial-sum coordinates, of every cell through a vertex.

        A Kuhn cell with base ``a`` and order ``perm`` has vertices
        ``a + e_perm[0] + ... + e_perm[i-1]``. Placing a given vertex at
        position ``j`` fixes the base, so each (perm, j) pair is one cell.
        """
        if getattr(self, "_offsets", None) is None:
            m = self.dim - 1
            pats = []
            for perm in itertools.permutations(range(m)):
                chain = np.zeros((self.dim, m), dtype=np.int64)
                for i in range(1, self.dim):
                    chain[i] = chain[i - 1]
                    chain[i, perm[i - 1]] += 1
                for j in range(self.dim):
                    pats.append(chain - chain[j])
            self._offsets = np.array(pats)
        return self._offsets

    def star(self, vertex_ids) -> np.ndarray:
        """Ids of all valid cells having one of ``vertex_ids`` as a vertex.

        Returns an ``(n_cells, D)`` integer array, one cell per row.
        """
        if self.dim > self.STAR_MAX_DIM:
            raise ValueError(f"star enumeration is limited to dimension <= {self.STAR_MAX_DIM}")
        offsets = self._star_offsets()
        keys = np.array([self._keys[int(v)] for v in vertex_ids], dtype=np.int64)
        s = np.cumsum(keys[:, :-1], axis=1)
        cells = s[:, None, None, :] + offsets[None]
        cells = cells.reshape(-1, self.dim, self.dim - 1)
        k = self.resolution
        lo = np.concatenate([np.zeros(cells.shape[:2] + (1,), dtype=np.int64), cells], axis=2)
        hi = np.concatenate([cells, np.full(cells.shape[:2] + (1,), k, dtype=np.int64)], axis=2)
        ys = hi - lo
        valid = (ys >= 0).all(axis=(1, 2))
        ys = ys[valid]
        # vertices of a cell come out in chain order, so equal cells give equal rows
        flat = ys.reshape(len(ys), -1)
        _, first = np.unique(flat, axis=0, return_index=True)
        ys = ys[np.sort(first)]
        reg = self.register_tuple
        return np.array([[reg(tuple(y)) for y in cell] for cell in ys.tolist()], dtype=np.int64).reshape(-1, self.dim)

    def cell_inverse(self, cell) -> np.ndarray:
        """Cached inverse of the vertex matrix of a cell (rows = vertices)."""
        cache = self.__dict__.setdefault("_inverse_cache", {})
        key = tuple(int(v) for v in cell)
        inv = cache.get(key)
        if inv is None:
            inv = cache[key] = np.linalg.inv(self.vertices(key))
        return inv

    def vertex_star(self, vid: int) -> np.ndarray:
        """Cached :meth:`star` of a single vertex."""
        cache = self.__dict__.setdefault("_star_cache", {})
        cells = cache.get(vid)
        if cells is None:
            cells = cache[vid] = self.star([vid])
        return cells

    def strong_indicator(self, q) -> int:
        """Id of the grid vertex nearest to ``q`` in ell-1.

        Ties go to the lexicographically smallest integer coordinate tuple.
        """
        q = self._check(q).tolist()
        k = self.resolution
        # plain floats: this runs once per round on short vectors
        y = [math.floor(k * v) for v in q]
        f = [round(k * v - a, 12) for v, a in zip(q, y)]
        r = k - sum(y)
        if r > 0:
            # largest fractional parts round up; among equal ones the later
            # coordinates take the unit, which keeps the tuple smallest
            order = sorted(range(self.dim), key=lambda i: (-f[i], -i))
            for i in order[:r]:
                y[i] += 1
        return self.register_tuple(tuple(y))

    def cell_diameter_bound(self) -> float:
        """Upper bound on the ell-1 diameter of any cell.

        Any two vertices of a Kuhn cell differ in partial-sum coordinates by
        an indicator vector of some index set J. All such offsets are
        checked, which covers every vertex pair of every cell type.
        """
        if self._diameter is None:
            D = self.dim
            if D > self._EXHAUSTIVE_MAX_DIM:
                self._diameter = diameter_closed_form(D, self.resolution)
            else:
                best = 0
                for bits in itertools.product((0, 1), repeat=D - 1):
                    padded = (0,) + bits + (0,)
                    best = max(best, sum(abs(padded[m + 1] - padded[m]) for m in range(D)))
                self._diameter = best / self.resolution
        return self._diameter
