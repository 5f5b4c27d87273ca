"""Force-oriented ellipsoidal nearest-neighbour search over valid and invalid samples."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .forces import ChargeModel, resultant_force
from .space import as_state, euclidean_distance, unit_ball_volume

INDEX_MIN_POINTS = 200
CHARGE_RATIO_THRESHOLD = 0.1


class SpatialIndex:
    """Static index over a point array; exhaustive scan below ``INDEX_MIN_POINTS``."""

    def __init__(self, points: np.ndarray):
        self.points = points
        self._tree = cKDTree(points) if len(points) >= INDEX_MIN_POINTS else None

    def __len__(self):
        return len(self.points)

    def ball(self, centre: np.ndarray, radius: float) -> np.ndarray:
        """Row indices within ``radius`` of ``centre`` (a superset is fine for callers)."""
        if len(self.points) == 0:
            return np.empty(0, dtype=np.int64)
        if self._tree is None:
            d = self.points - centre
            return np.flatnonzero(np.einsum("ij,ij->i", d, d) <= radius * radius * (1 + 1e-12))
        return np.asarray(self._tree.query_ball_point(centre, radius * (1 + 1e-12)), dtype=np.int64)


class SampleSet:
    """Valid and invalid samples, each with a stable id given by insertion order."""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._next_id = 0
        self.valid_ids = np.empty(0, dtype=np.int64)
        self.valid_states = np.empty((0, dimension))
        self.invalid_ids = np.empty(0, dtype=np.int64)
        self.invalid_states = np.empty((0, dimension))
        self._row = {}
        self._valid_index = None
        self._invalid_index = None

    def __len__(self):
        return len(self.valid_ids) + len(self.invalid_ids)

    def add(self, states, valid_mask) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        valid_mask = np.asarray(valid_mask, dtype=bool).reshape(-1)
        ids = np.arange(self._next_id, self._next_id + len(states), dtype=np.int64)
        self._next_id += len(states)
        self.valid_ids = np.concatenate([self.valid_ids, ids[valid_mask]])
        self.valid_states = np.concatenate([self.valid_states, states[valid_mask]])
        self.invalid_ids = np.concatenate([self.invalid_ids, ids[~valid_mask]])
        self.invalid_states = np.concatenate([self.invalid_states, states[~valid_mask]])
        self._changed()
        return ids

    def add_valid(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        return self.add(states, np.ones(len(states), dtype=bool))

    def add_invalid(self, states) -> np.ndarray:
        states = np.atleast_2d(states)
        return self.add(states, np.zeros(len(states), dtype=bool))

    def keep_valid(self, mask) -> None:
        mask = np.asarray(mask, dtype=bool)
        self.valid_ids = self.valid_ids[mask]
        self.valid_states = self.valid_states[mask]
        self._changed()

    def keep_invalid(self, mask) -> None:
        mask = np.asarray(mask, dtype=bool)
        self.invalid_ids = self.invalid_ids[mask]
        self.invalid_states = self.invalid_states[mask]
        self._changed()

    def _changed(self):
        self._row = None
        self._valid_index = None
        self._invalid_index = None

    def _rows(self) -> dict:
        if self._row is None:
            row = {int(i): ("v", r) for r, i in enumerate(self.valid_ids)}
            row.update({int(i): ("i", r) for r, i in enumerate(self.invalid_ids)})
            self._row = row
        return self._row

    def __contains__(self, sid) -> bool:
        return int(sid) in self._rows()

    def is_valid(self, sid: int) -> bool:
        return self._rows()[int(sid)][0] == "v"

    def valid_row(self, sid: int) -> int:
        kind, r = self._rows()[int(sid)]
        if kind != "v":
            raise KeyError(f"sample {sid} is not valid")
        return r

    def state(self, sid: int) -> np.ndarray:
        kind, r = self._rows()[int(sid)]
        return self.valid_states[r] if kind == "v" else self.invalid_states[r]

    def states(self, ids) -> np.ndarray:
        rows = self._rows()
        out = np.empty((len(ids), self.dimension))
        for j, sid in enumerate(ids):
            kind, r = rows[int(sid)]
            out[j] = self.valid_states[r] if kind == "v" else self.invalid_states[r]
        return out

    @property
    def valid_index(self) -> SpatialIndex:
        if self._valid_index is None:
            self._valid_index = SpatialIndex(self.valid_states)
        return self._valid_index

    @property
    def invalid_index(self) -> SpatialIndex:
        if self._invalid_index is None:
            self._invalid_index = SpatialIndex(self.invalid_states)
        return self._invalid_index


def _frame(direction: np.ndarray) -> np.ndarray:
    """Orthogonal matrix whose first column is ``direction``."""
    n = direction.shape[0]
    e1 = np.zeros(n)
    e1[0] = 1.0
    v = e1 - direction
    vv = float(np.dot(v, v))
    if vv < 1e-30:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / vv


@dataclass(frozen=True)
class SearchEllipsoid:
    """Volume-preserving ellipsoid stretched along ``direction``.

    The major semi-axis is ``base_radius * (1 + gamma)`` and the ``n - 1``
    minor semi-axes are ``base_radius * (1 + gamma) ** (-1 / (n - 1))``.
    ``direction is None`` means a ball of radius ``base_radius``.
    """

    center: np.ndarray
    base_radius: float
    direction: np.ndarray | None = None
    gamma: float = 0.0

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @property
    def is_ball(self) -> bool:
        return self.direction is None or self.gamma == 0.0

    @property
    def major(self) -> float:
        return self.base_radius * (1.0 + self.gamma)

    @property
    def minor(self) -> float:
        return self.base_radius * (1.0 + self.gamma) ** (-1.0 / (self.dimension - 1))

    @property
    def axis_scales(self) -> np.ndarray:
        v = np.full(self.dimension, self.minor)
        v[0] = self.major
        return v

    @property
    def frame(self) -> np.ndarray:
        if self.direction is None:
            return np.eye(self.dimension)
        return _frame(self.direction)

    def volume(self) -> float:
        return unit_ball_volume(self.dimension) * float(np.prod(self.axis_scales))

    def scaled_distance(self, points: np.ndarray) -> np.ndarray:
        """Elliptical distance from the centre with the semi-axes as scale factors (1 on the boundary)."""
        d = np.atleast_2d(points) - self.center
        sq = np.einsum("ij,ij->i", d, d)
        if self.is_ball:
            return np.sqrt(sq) / self.base_radius
        p = d @ self.direction
        perp = np.maximum(sq - p * p, 0.0)
        return np.sqrt(p * p / self.major ** 2 + perp / self.minor ** 2)

    def contains(self, points: np.ndarray) -> np.ndarray:
        if self.is_ball:
            d = np.atleast_2d(points) - self.center
            return np.sqrt(np.einsum("ij,ij->i", d, d)) <= self.base_radius
        return self.scaled_distance(points) <= 1.0


def default_force_ref(base_radius: float, n: int, model: ChargeModel) -> float:
    """Typical pair-force magnitude at ``base_radius`` (median of the two charge magnitudes)."""
    return model.k_e * float(np.median([model.q_valid, model.q_invalid])) / base_radius ** (n - 1)


def build_ellipsoid(x, force, base_radius: float, gamma_max: float = 1.0,
                    force_ref: float | None = None, model: ChargeModel = ChargeModel()) -> SearchEllipsoid:
    """Ellipsoid around ``x`` whose elongation grows with the force magnitude."""
    if base_radius <= 0:
        raise ValueError("base_radius must be > 0")
    x = as_state(x)
    force = as_state(force)
    mag = float(np.linalg.norm(force))
    if not math.isfinite(mag) or mag <= 0.0 or gamma_max <= 0.0:
        return SearchEllipsoid(x, base_radius)
    ref = default_force_ref(base_radius, x.shape[0], model) if force_ref is None else force_ref
    gamma = gamma_max * min(1.0, mag / ref)
    return SearchEllipsoid(x, base_radius, force / mag, gamma)


def is_within_ellipse(x, xi, e: SearchEllipsoid) -> bool:
    xi = as_state(xi)
    if xi.shape[0] != e.dimension:
        raise ValueError("dimension mismatch")
    return bool(e.contains(xi[None, :])[0])


@dataclass
class EllipseNearest:
    """Result of an ellipsoid query.

    ``nearest_valid`` holds up to ``k`` valid ids ordered by elliptical
    distance (ties by id); ``valid_in_region`` / ``invalid_in_region`` hold
    every sample inside the region; ``invalid_nearest`` is the subset of
    invalid samples no farther than the last returned valid neighbour.
    """

    nearest_valid: np.ndarray
    valid_in_region: np.ndarray
    invalid_in_region: np.ndarray
    invalid_nearest: np.ndarray
    scanned: int = 0


def _ordered(ids: np.ndarray, dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((ids, dist))
    return ids[order], dist[order]


def query_ellipsoid(e: SearchEllipsoid, samples: SampleSet, k: int, exclude=()) -> EllipseNearest:
    if k < 1:
        raise ValueError("k must be >= 1")
    reach = max(e.major, e.base_radius)
    scanned = 0

    def region(index: SpatialIndex, ids: np.ndarray):
        nonlocal scanned
        rows = index.ball(e.center, reach)
        scanned += len(rows) if index._tree is not None else len(index)
        pts = index.points[rows]
        inside = e.contains(pts)
        rows = rows[inside]
        rid = ids[rows]
        if not len(rows):
            dist = np.empty(0)
        elif e.is_ball:
            d = index.points[rows] - e.center
            dist = np.sqrt(np.einsum("ij,ij->i", d, d))
        else:
            dist = e.scaled_distance(index.points[rows])
        if len(exclude):
            keep = ~np.isin(rid, np.asarray(list(exclude), dtype=np.int64))
            rid, dist = rid[keep], dist[keep]
        return _ordered(rid, dist)

    v_ids, v_dist = region(samples.valid_index, samples.valid_ids)
    i_ids, i_dist = region(samples.invalid_index, samples.invalid_ids)
    nearest = v_ids[:k]
    if len(v_ids) >= k:
        limit = v_dist[k - 1]
        near_invalid = i_ids[i_dist <= limit]
    else:
        near_invalid = i_ids
    return EllipseNearest(nearest, np.sort(v_ids), np.sort(i_ids), near_invalid, scanned)


def ellipse_nearest(x, samples: SampleSet, force, k: int, base_radius: float,
                    gamma_max: float = 1.0, force_ref: float | None = None,
                    model: ChargeModel = ChargeModel(), exclude=()) -> EllipseNearest:
    e = build_ellipsoid(x, force, base_radius, gamma_max, force_ref, model)
    return query_ellipsoid(e, samples, k, exclude)


@dataclass
class Neighborhood:
    """``valid``: the k nearest valid ids plus tree links; ``invalid``: invalid ids
    no farther than the k-th valid one. ``region_*`` hold everything inside the
    ellipsoid (before tree augmentation)."""

    valid: list
    invalid: list
    ellipsoid: SearchEllipsoid | None = None
    scanned: int = 0
    region_valid: list = field(default_factory=list)
    region_invalid: list = field(default_factory=list)

    @property
    def charge_ratio(self) -> float:
        total = len(self.valid) + len(self.invalid)
        return len(self.invalid) / total if total else 0.0


def ellipse_neighbors(x, k: int, force, samples: SampleSet, base_radius: float, *,
                      tree=None, vertex: int | None = None, gamma_max: float = 1.0,
                      force_ref: float | None = None, model: ChargeModel = ChargeModel()) -> Neighborhood:
    """Ellipsoid neighbours plus the vertex's tree parent/children, minus blacklisted edges."""
    e = build_ellipsoid(x, force, base_radius, gamma_max, force_ref, model)
    exclude = () if vertex is None else (vertex,)
    found = query_ellipsoid(e, samples, k, exclude)
    valid = [int(i) for i in found.nearest_valid]
    if tree is not None and vertex is not None and vertex in tree:
        have = set(valid)
        extra = []
        p = tree.parent_of(vertex)
        if p is not None:
            extra.append(p)
        extra.extend(sorted(tree.children_of(vertex)))
        for v in extra:
            if v not in have:
                valid.append(v)
                have.add(v)
        valid = [v for v in valid if not tree.is_blacklisted(vertex, v)]
    elif tree is not None and vertex is not None:
        valid = [v for v in valid if not tree.is_blacklisted(vertex, v)]
    return Neighborhood(valid, [int(i) for i in found.invalid_nearest], e, found.scanned,
                        [int(i) for i in found.valid_in_region], [int(i) for i in found.invalid_in_region])


@dataclass
class BestNeighbors:
    valid: list
    invalid: list
    iterations: int
    invalid_history: list = field(default_factory=list)
    ratio_history: list = field(default_factory=list)
    force: np.ndarray | None = None
    ellipsoid: SearchEllipsoid | None = None
    scanned: int = 0
    force_pairs: int = 0


def get_best_ellipse_k_nearest(x, k: int, samples: SampleSet, base_radius: float, *,
                               tree=None, vertex: int | None = None,
                               model: ChargeModel = ChargeModel(), gamma_max: float = 1.0,
                               loop_cap: int = 5, force_ref: float | None = None,
                               threshold: float = CHARGE_RATIO_THRESHOLD) -> BestNeighbors:
    """Refine the ellipsoid along the resultant force until fewer than 10% of neighbours are invalid.

    Starts from the all-ones force direction and stops after ``loop_cap``
    refinements at the latest.
    """
    if loop_cap < 1:
        raise ValueError("loop_cap must be >= 1")
    x = as_state(x)
    # all-ones axis weights: the first query is the isotropic ball
    force = np.ones(x.shape[0])
    kw = dict(tree=tree, vertex=vertex, gamma_max=gamma_max, force_ref=force_ref, model=model)
    hood = ellipse_neighbors(x, k, np.zeros_like(force), samples, base_radius, **kw)
    scanned = hood.scanned
    pairs = 0
    phi = hood.charge_ratio
    inv_hist = [len(hood.invalid)]
    phi_hist = [phi]
    it = 0
    while phi >= threshold and it < loop_cap:
        pos = samples.states(hood.valid) if hood.valid else None
        neg = samples.states(hood.invalid) if hood.invalid else None
        force = resultant_force(x, pos, neg, model).force
        pairs += len(hood.valid) + len(hood.invalid)
        hood = ellipse_neighbors(x, k, force, samples, base_radius, **kw)
        scanned += hood.scanned
        phi = hood.charge_ratio
        inv_hist.append(len(hood.invalid))
        phi_hist.append(phi)
        it += 1
    return BestNeighbors(hood.valid, hood.invalid, it, inv_hist, phi_hist, force,
                         hood.ellipsoid, scanned, pairs)


def brute_force_knn(x, points: Sequence, k: int, metric: Callable = euclidean_distance,
                    radius: float | None = None) -> list:
    """Exhaustive k-nearest indices into ``points``; ties broken by index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scored = []
    for i, p in enumerate(points):
        d = metric(x, p)
        if radius is None or d <= radius:
            scored.append((d, i))
    scored.sort()
    return [i for _, i in scored[:k]]
