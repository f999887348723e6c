"""Projection and distance oracles for closed sets.

Every oracle is immutable after construction and exposes ``project``,
``sq_dist`` and ``contains``. Where the Euclidean projection is multivalued
(nonconvex sets) the returned point is selected deterministically: ties go
to the lowest index (member, point or coordinate).

Collections of sets (the ``D_i`` of a problem) are represented by
:class:`SetCollection` subclasses that can evaluate all projections at a
point in one pass. Linear systems get vectorised collections backed by the
kernels in :mod:`mfsc._kernels`.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from mfsc import _kernels

MEMBERSHIP_RTOL = 1e-12
BRUTE_FORCE_MAX_DIM = 12


class DimensionError(ValueError):
    """Raised when a point and a set live in different dimensions."""


def _as_point(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise DimensionError(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


def _halfspace_tol(b):
    return MEMBERSHIP_RTOL * (1.0 + np.abs(b))


class SetOracle:
    """Base class. Subclasses implement ``_project`` on validated input."""

    dim: int
    is_convex: bool = False
    is_bounded: bool = False

    def project(self, x) -> np.ndarray:
        return self._project(_as_point(x, self.dim))

    def sq_dist(self, x) -> float:
        x = _as_point(x, self.dim)
        d = x - self._project(x)
        return float(d @ d)

    def contains(self, x, tol: float | None = None) -> bool:
        raise NotImplementedError

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class Halfspace(SetOracle):
    """The closed halfspace ``{x : <a, x> <= b}``.

    Points whose violation is below ``1e-12 * (1 + |b|)`` are treated as
    members; this keeps the projection exactly idempotent.
    """

    is_convex = True

    def __init__(self, a, b: float):
        a = np.array(a, dtype=float)
        if a.ndim != 1:
            raise ValueError("halfspace normal must be a vector")
        norm2 = float(a @ a)
        if not norm2 > 0.0:
            raise ValueError("halfspace normal must be nonzero")
        a.setflags(write=False)
        self.a = a
        self.b = float(b)
        self.dim = a.shape[0]
        self._norm2 = norm2
        self._tol = float(_halfspace_tol(self.b))

    def _violation(self, x):
        return float(self.a @ x) - self.b

    def _project(self, x):
        v = self._violation(x)
        if v <= self._tol:
            return x.copy()
        return x - (v / self._norm2) * self.a

    def contains(self, x, tol=None):
        x = _as_point(x, self.dim)
        return self._violation(x) <= (self._tol if tol is None else tol)

    def to_dict(self):
        return {"type": "halfspace", "a": self.a.tolist(), "b": self.b}


class SparseBox(SetOracle):
    """``{x in [-r, r]^n : ||x||_0 <= s}``.

    The projection keeps the ``s`` entries of largest magnitude (ties to the
    lowest index), zeroes the rest and clamps the kept ones to ``[-r, r]``.
    Because the gain of keeping a coordinate is increasing in its magnitude,
    this is an exact projection.
    """

    is_bounded = True

    def __init__(self, n: int, r: float, s: int):
        n, s, r = int(n), int(s), float(r)
        if not r > 0:
            raise ValueError("box radius r must be positive")
        if not 1 <= s <= n:
            raise ValueError(f"sparsity s must satisfy 1 <= s <= n, got s={s}, n={n}")
        self.dim = self.n = n
        self.r = r
        self.s = s

    def _project(self, x):
        return _kernels.sparse_box_project(x, self.r, self.s)

    def contains(self, x, tol=None):
        x = _as_point(x, self.dim)
        return bool(np.count_nonzero(x) <= self.s and np.max(np.abs(x), initial=0.0) <= self.r)

    def to_dict(self):
        return {"type": "sparse_box", "n": self.n, "r": self.r, "s": self.s}


class FullSpace(SetOracle):
    is_convex = True

    def __init__(self, n: int):
        self.dim = self.n = int(n)

    def _project(self, x):
        return x.copy()

    def contains(self, x, tol=None):
        _as_point(x, self.dim)
        return True

    def to_dict(self):
        return {"type": "full_space", "n": self.n}


class UnionSet(SetOracle):
    """Finite union of closed sets; projects onto the nearest member."""

    def __init__(self, members: Sequence[SetOracle]):
        members = tuple(members)
        if not members:
            raise ValueError("a union needs at least one member")
        dims = {S.dim for S in members}
        if len(dims) != 1:
            raise DimensionError(f"union members have differing dimensions {sorted(dims)}")
        self.members = members
        self.dim = members[0].dim
        self.is_bounded = all(S.is_bounded for S in members)
        self.is_convex = len(members) == 1 and members[0].is_convex

    def _project(self, x):
        best, best_d = None, np.inf
        for S in self.members:
            p = S._project(x)
            d = float((x - p) @ (x - p))
            if d < best_d:
                best, best_d = p, d
        return best

    def contains(self, x, tol=None):
        return any(S.contains(x, tol) for S in self.members)

    def to_dict(self):
        return {"type": "union", "members": [S.to_dict() for S in self.members]}


class FinitePointSet(SetOracle):
    """A nonempty finite set of points (bounded and nonconvex)."""

    is_bounded = True

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty 2-d array")
        pts.setflags(write=False)
        self.points = pts
        self.dim = pts.shape[1]
        self.is_convex = pts.shape[0] == 1

    def _project(self, x):
        diff = self.points - x
        # argmin returns the first minimiser, which is the tie-break we want
        return self.points[int(np.argmin(np.einsum("ij,ij->i", diff, diff)))].copy()

    def contains(self, x, tol=None):
        x = _as_point(x, self.dim)
        tol = MEMBERSHIP_RTOL if tol is None else tol
        return bool(np.any(np.max(np.abs(self.points - x), axis=1) <= tol * (1.0 + np.abs(x).max())))

    def to_dict(self):
        return {"type": "points", "points": self.points.tolist()}


def project(S: SetOracle, x) -> np.ndarray:
    return S.project(x)


def sq_dist(S: SetOracle, x) -> float:
    return S.sq_dist(x)


def brute_force_project(S: SetOracle, x) -> np.ndarray:
    """Exact projection by exhaustive enumeration.

    Used as an independent check of :func:`project`. Supports ``SparseBox``
    (every support of size ``s``, only for ``n <= 12``), ``UnionSet`` (every
    member, with members projected by brute force where possible) and
    ``FinitePointSet`` (every point). The first strict minimiser in
    enumeration order wins, which reproduces the lowest-index tie-break.
    """
    x = _as_point(x, S.dim)
    if isinstance(S, SparseBox):
        if S.n > BRUTE_FORCE_MAX_DIM:
            raise ValueError(f"brute force enumeration limited to n <= {BRUTE_FORCE_MAX_DIM}")
        best, best_d = None, np.inf
        for support in itertools.combinations(range(S.n), S.s):
            p = np.zeros(S.n)
            idx = list(support)
            p[idx] = np.minimum(np.maximum(x[idx], -S.r), S.r)
            d = float(np.sum((x - p) ** 2))
            if d < best_d:
                best, best_d = p, d
        return best
    if isinstance(S, UnionSet):
        best, best_d = None, np.inf
        for member in S.members:
            try:
                p = brute_force_project(member, x)
            except TypeError:
                p = member.project(x)
            d = float(np.sum((x - p) ** 2))
            if d < best_d:
                best, best_d = p, d
        return best
    if isinstance(S, FinitePointSet):
        best, best_d = None, np.inf
        for pt in S.points:
            d = float(np.sum((x - pt) ** 2))
            if d < best_d:
                best, best_d = pt.copy(), d
        return best
    raise TypeError(f"brute force projection not supported for {type(S).__name__}")


def set_from_dict(data: dict) -> SetOracle:
    kind = data["type"]
    if kind == "halfspace":
        return Halfspace(data["a"], data["b"])
    if kind == "sparse_box":
        return SparseBox(data["n"], data["r"], data["s"])
    if kind == "full_space":
        return FullSpace(data["n"])
    if kind == "union":
        return UnionSet([set_from_dict(d) for d in data["members"]])
    if kind == "points":
        return FinitePointSet(data["points"])
    raise ValueError(f"unknown set type {kind!r}")


# ---------------------------------------------------------------------------
# collections of sets


class ProjectionPass:
    """Projections of one point onto every set of a collection.

    ``sq_dists[i]`` is the squared distance to set ``i``. The projections
    themselves are materialised lazily because the solver only needs the
    weighted sum of the offsets ``x - xi_i``.
    """

    def __init__(self, x: np.ndarray, sq_dists: np.ndarray):
        self.x = x
        self.sq_dists = sq_dists

    @property
    def projections(self) -> np.ndarray:
        raise NotImplementedError

    def offset_sum(self, weights: np.ndarray) -> np.ndarray:
        """``sum_i weights[i] * (x - xi_i)``."""
        raise NotImplementedError


class _DensePass(ProjectionPass):
    def __init__(self, x, projections):
        self._projections = projections
        offsets = x - projections
        self._offsets = offsets
        super().__init__(x, np.einsum("ij,ij->i", offsets, offsets))

    @property
    def projections(self):
        return self._projections

    def offset_sum(self, weights):
        return weights @ self._offsets


class _HalfspacePass(ProjectionPass):
    # x - xi_i = coef_i * a_i
    def __init__(self, x, sq_dists, coef, A):
        super().__init__(x, sq_dists)
        self.coef = coef
        self._A = A

    @property
    def projections(self):
        return self.x - self.coef[:, None] * self._A

    def offset_sum(self, weights):
        return _kernels.accumulate_rows(self._A, weights * self.coef)


class _UnionPass(ProjectionPass):
    # x - xi_i = coef_i * (a_i if choice_i == 0 else p_i)
    def __init__(self, x, sq_dists, coef, choice, A, P):
        super().__init__(x, sq_dists)
        self.coef = coef
        self.choice = choice
        self._A, self._P = A, P

    def _rows(self):
        return np.where(self.choice[:, None] == 0, self._A, self._P)

    @property
    def projections(self):
        return self.x - self.coef[:, None] * self._rows()

    def offset_sum(self, weights):
        return _kernels.accumulate_rows_choice(self._A, self._P, self.choice, weights * self.coef)


class SetCollection:
    """Ordered collection ``D_1, ..., D_m`` of sets of a common dimension."""

    dim: int

    def __len__(self) -> int:
        raise NotImplementedError

    def __getitem__(self, i: int) -> SetOracle:
        raise NotImplementedError

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def project_all(self, x: np.ndarray) -> ProjectionPass:
        raise NotImplementedError

    def contains_all(self, x, tol: float | None = None) -> np.ndarray:
        """Boolean membership mask over the collection."""
        return np.array([S.contains(x, tol) for S in self], dtype=bool)

    @property
    def all_convex(self) -> bool:
        return all(S.is_convex for S in self)

    @property
    def any_bounded(self) -> bool:
        return any(S.is_bounded for S in self)


class GenericCollection(SetCollection):
    def __init__(self, sets: Sequence[SetOracle]):
        sets = tuple(sets)
        if not sets:
            raise ValueError("collection must contain at least one set")
        dims = {S.dim for S in sets}
        if len(dims) != 1:
            raise DimensionError(f"sets have differing dimensions {sorted(dims)}")
        self.sets = sets
        self.dim = sets[0].dim

    def __len__(self):
        return len(self.sets)

    def __getitem__(self, i):
        return self.sets[i]

    def project_all(self, x):
        x = _as_point(x, self.dim)
        return _DensePass(x, np.array([S._project(x) for S in self.sets]))


class HalfspaceSystem(SetCollection):
    """The halfspaces ``<a_i, x> <= b_i`` given by the rows of ``A``."""

    def __init__(self, A, b):
        A = np.ascontiguousarray(A, dtype=float)
        b = np.ascontiguousarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],) or A.shape[0] == 0:
            raise ValueError("A must be m x n and b of length m, with m >= 1")
        norm2 = np.einsum("ij,ij->i", A, A)
        if np.any(norm2 <= 0):
            raise ValueError("halfspace normals must be nonzero")
        for arr in (A, b):
            arr.setflags(write=False)
        self.A, self.b = A, b
        self.dim = A.shape[1]
        self._inv_norm2 = 1.0 / norm2
        self._tol = _halfspace_tol(b)

    def __len__(self):
        return self.A.shape[0]

    def __getitem__(self, i):
        return Halfspace(self.A[i], self.b[i])

    @property
    def all_convex(self):
        return True

    @property
    def any_bounded(self):
        return False

    def project_all(self, x):
        x = _as_point(x, self.dim)
        sq, coef = _kernels.halfspace_pass(self.A, self.b, self._inv_norm2, self._tol, x)
        return _HalfspacePass(x, sq, coef, self.A)

    def contains_all(self, x, tol=None):
        x = _as_point(x, self.dim)
        return self.A @ x - self.b <= (self._tol if tol is None else tol)


class UnionHalfspaceSystem(SetCollection):
    """``D_i = {<a_i, x> <= b_i} ∪ {<p_i, x> <= q_i}``; ties pick the ``a`` member."""

    def __init__(self, A, b, P, q):
        self.first = HalfspaceSystem(A, b)
        self.second = HalfspaceSystem(P, q)
        if self.first.A.shape != self.second.A.shape:
            raise ValueError("A and P must have the same shape")
        self.dim = self.first.dim

    def __len__(self):
        return len(self.first)

    def __getitem__(self, i):
        return UnionSet([self.first[i], self.second[i]])

    @property
    def all_convex(self):
        return False

    @property
    def any_bounded(self):
        return False

    def project_all(self, x):
        x = _as_point(x, self.dim)
        h1, h2 = self.first, self.second
        sq, coef, choice = _kernels.union2_pass(
            h1.A, h1.b, h1._inv_norm2, h1._tol, h2.A, h2.b, h2._inv_norm2, h2._tol, x
        )
        return _UnionPass(x, sq, coef, choice, h1.A, h2.A)

    def contains_all(self, x, tol=None):
        return self.first.contains_all(x, tol) | self.second.contains_all(x, tol)


def as_collection(D) -> SetCollection:
    if isinstance(D, SetCollection):
        return D
    return GenericCollection(list(D))
