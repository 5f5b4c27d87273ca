"""Anytime batch-informed planner with elliptical or spherical neighbour search.

Each batch prunes states that cannot improve the incumbent, draws informed
samples (invalid ones are kept as negative charges), recomputes a
collision-free-agnostic cost-to-go heuristic over the random geometric graph,
and runs an edge-queue forward search that lazily collision-checks edges.
The two neighbour modes share every other step.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .clock import make_clock
from .environment import Environment
from .forces import ChargeModel
from .knn import SampleSet, ellipse_neighbors, get_best_ellipse_k_nearest
from .space import (InformedSet, RggParams, euclidean_distance, informed_measure,
                    make_rng, rgg_k, rgg_radius, sample_informed_batch)
from .tree import ForwardTree, edge_key

NEIGHBOR_MODES = ("elliptical", "spherical")


@dataclass(frozen=True)
class PlannerConfig:
    batch_size: int = 200
    eta: float = 1.1
    rewire_factor: float = 1.001
    charge: ChargeModel = field(default_factory=ChargeModel)
    neighbor_mode: str = "elliptical"
    gamma_max: float = 1.0
    loop_cap: int = 5
    time_budget: float = 1.0
    seed: int = 0
    clock: str = "work"
    max_invalid_store: int | None = None
    effort_tiebreak: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.time_budget > 0:
            raise ValueError("time_budget must be > 0")
        if self.neighbor_mode not in NEIGHBOR_MODES:
            raise ValueError(f"neighbor_mode must be one of {NEIGHBOR_MODES}")
        if self.loop_cap < 1:
            raise ValueError("loop_cap must be >= 1")
        if self.gamma_max < 0:
            raise ValueError("gamma_max must be >= 0")

    @property
    def invalid_capacity(self) -> int:
        if self.max_invalid_store is None:
            return 50 * self.batch_size
        return self.max_invalid_store

    def rgg(self, dimension: int) -> RggParams:
        return RggParams(dimension, self.eta, self.rewire_factor)


@dataclass
class Solution:
    path: np.ndarray
    cost: float
    wall_time: float


class DisconnectedGoalError(KeyError):
    pass


def extract_path(tree: ForwardTree, samples: SampleSet, goal_vertex: int, wall_time: float = 0.0) -> Solution:
    """Walk parent links from ``goal_vertex`` to the root."""
    if goal_vertex not in tree:
        raise DisconnectedGoalError(f"vertex {goal_vertex} is not connected to the root")
    ids = tree.path_to(goal_vertex)
    path = samples.states(ids)
    cost = 0.0
    for a, b in zip(path, path[1:]):
        cost = cost + euclidean_distance(a, b)
    return Solution(path, cost, wall_time)


@dataclass
class ReverseHeuristic:
    """Cost-to-go over the RGG, ignoring collisions, keyed by valid sample id.

    ``edges`` is an ``(m, 3)`` array of ``(id_a, id_b, length)`` rows with
    ``id_a < id_b``.
    """

    h: dict
    edges: np.ndarray


def rgg_edges(states: np.ndarray, ids: np.ndarray, k: int, radius: float) -> np.ndarray:
    """Undirected k-nearest-within-radius edges as rows ``(id_a, id_b, length)``, sorted."""
    m = len(states)
    if m < 2:
        return np.empty((0, 3))
    kk = min(k + 1, m)
    dist, nbr = cKDTree(states).query(states, k=kk, distance_upper_bound=radius)
    dist = np.asarray(dist).reshape(m, kk)
    nbr = np.asarray(nbr).reshape(m, kk)
    rows = np.repeat(np.arange(m), kk).reshape(m, kk)
    ok = (nbr < m) & (nbr != rows)
    ia = ids[rows[ok]]
    ib = ids[nbr[ok]]
    lo, hi = np.minimum(ia, ib), np.maximum(ia, ib)
    key = lo * (int(ids.max()) + 1) + hi
    _, first = np.unique(key, return_index=True)
    return np.column_stack([lo[first], hi[first], dist[ok][first]])


def update_reverse_heuristic(samples: SampleSet, goal: int, k: int, radius: float,
                             blacklist=frozenset()) -> ReverseHeuristic:
    """Shortest RGG distance from every valid sample to ``goal``.

    Edges are not collision-checked; only known-invalid edges are removed.
    Unreachable samples get ``inf``.
    """
    ids = samples.valid_ids
    edges = rgg_edges(samples.valid_states, ids, k, radius)
    m = len(ids)
    if m == 0:
        return ReverseHeuristic({}, edges)
    if len(edges) and blacklist:
        width = int(ids.max()) + 1
        bad = np.array([a * width + b for a, b in blacklist if b < width], dtype=np.int64)
        keys = edges[:, 0].astype(np.int64) * width + edges[:, 1].astype(np.int64)
        edges = edges[~np.isin(keys, bad)]
    edges = edges[edges[:, 2] > 0.0] if len(edges) else edges
    rows = np.searchsorted(ids, goal)
    if len(edges):
        a = np.searchsorted(ids, edges[:, 0].astype(np.int64))
        b = np.searchsorted(ids, edges[:, 1].astype(np.int64))
        graph = coo_matrix((edges[:, 2], (a, b)), shape=(m, m)).tocsr()
        dist = dijkstra(graph, directed=False, indices=int(rows))
    else:
        dist = np.full(m, math.inf)
        dist[rows] = 0.0
    return ReverseHeuristic(dict(zip(ids.tolist(), dist.tolist())), edges)


class Planner:
    """One planner run. Not thread-safe; create one per run."""

    def __init__(self, env: Environment, config: PlannerConfig = PlannerConfig()):
        self.env = env
        self.config = config
        self.n = env.dimension
        self.rgg = config.rgg(self.n)
        self.rng = make_rng(config.seed)
        self.clock = make_clock(config.clock)
        self.samples = SampleSet(self.n)
        self.start_id, self.goal_id = (int(i) for i in self.samples.add_valid(np.stack([env.start, env.goal])))
        self.tree = ForwardTree(self.start_id)
        self.c_min = euclidean_distance(env.start, env.goal)
        self.c_best = math.inf
        self.solutions: list[Solution] = []
        self.known_valid = defaultdict(set)
        self._edge_ok: dict = {}
        self.heuristic = ReverseHeuristic({self.goal_id: 0.0}, np.empty((0, 3)))
        self.radius = math.inf
        self.k = 1
        self.batches = 0
        self.stats = defaultdict(int)
        self._neighbor_cache: dict = {}
        self.invalid_history: list = []

    # -- helpers ----------------------------------------------------------

    def _dist(self, a: int, b: int) -> float:
        return euclidean_distance(self.samples.state(a), self.samples.state(b))

    def expired(self) -> bool:
        return self.clock.now() >= self.config.time_budget

    def informed_set(self) -> InformedSet:
        c = self.c_best if math.isinf(self.c_best) else max(self.c_best, self.c_min)
        return InformedSet(self.env.start, self.env.goal, c)

    def check_edge(self, a: int, b: int) -> bool:
        key = edge_key(a, b)
        ok = self._edge_ok.get(key)
        if ok is not None:
            return ok
        sa, sb = self.samples.state(a), self.samples.state(b)
        length = euclidean_distance(sa, sb)
        self.clock.charge("state_check", math.ceil(length / self.env.check_resolution) + 1)
        self.stats["edge_checks"] += 1
        ok = self.env.segment_is_clear(sa, sb)
        self._edge_ok[key] = ok
        return ok

    # -- anytime loop -----------------------------------------------------

    def plan(self):
        """Yield every strictly improving solution until the budget runs out."""
        while not self.expired():
            for sol in self.run_batch():
                yield sol

    def run(self) -> list:
        return list(self.plan())

    @property
    def success(self) -> bool:
        return bool(self.solutions)

    def run_batch(self) -> list:
        self.batches += 1
        if not math.isinf(self.c_best):
            self._prune()
        self._draw_batch()
        self._refresh_connection_params()
        self.heuristic = update_reverse_heuristic(self.samples, self.goal_id, self.k, self.radius,
                                                  self.tree.invalid_edges)
        self.clock.charge("graph_edge", 2 * len(self.heuristic.edges))
        self.clock.charge("graph_edge_dim", 2 * len(self.heuristic.edges) * self.n * self.n)
        self._neighbor_cache = {}
        return self.forward_search()

    def _prune(self) -> None:
        bound = self.c_best + 1e-9
        s, g = self.env.start, self.env.goal

        def lower_bound(states):
            return np.linalg.norm(states - s, axis=1) + np.linalg.norm(states - g, axis=1)

        lb_valid = lower_bound(self.samples.valid_states)
        drop = set(int(i) for i, lb in zip(self.samples.valid_ids, lb_valid) if lb > bound)
        for v in sorted(drop):
            if v in self.tree and v != self.tree.root:
                self.tree.remove_subtree(v)
        self.samples.keep_valid(lb_valid <= bound)
        for v in drop:
            self.known_valid.pop(v, None)
            self.heuristic.h.pop(v, None)
        if len(self.samples.invalid_ids):
            self.samples.keep_invalid(lower_bound(self.samples.invalid_states) <= bound)

    def _draw_batch(self) -> None:
        m = self.config.batch_size
        states = sample_informed_batch(self.informed_set(), m, self.rng)
        valid = self.env.states_valid(states)
        self.clock.charge("sample", m)
        self.clock.charge("state_check", m)
        self.samples.add(states, valid)
        cap = self.config.invalid_capacity
        extra = len(self.samples.invalid_ids) - cap
        if extra > 0:
            keep = np.ones(len(self.samples.invalid_ids), dtype=bool)
            keep[:extra] = False
            self.samples.keep_invalid(keep)

    def _refresh_connection_params(self) -> None:
        q = max(2, len(self.samples.valid_ids))
        self.radius = rgg_radius(q, informed_measure(self.informed_set()), self.rgg)
        self.k = rgg_k(q, self.rgg)

    # -- neighbours -------------------------------------------------------

    def neighbors(self, v: int) -> list:
        """Valid neighbour ids of vertex ``v`` for edge expansion."""
        core = self._neighbor_cache.get(v)
        if core is None:
            x = self.samples.state(v)
            if self.config.neighbor_mode == "elliptical":
                best = get_best_ellipse_k_nearest(
                    x, self.k, self.samples, self.radius, tree=self.tree, vertex=v,
                    model=self.config.charge, gamma_max=self.config.gamma_max,
                    loop_cap=self.config.loop_cap)
                core = best.valid
                queries = best.iterations + 1
                self.clock.charge("force_pair", best.force_pairs)
                self.clock.charge("nn_point", best.scanned)
                self.invalid_history.append(best.invalid_history)
            else:
                hood = ellipse_neighbors(x, self.k, np.zeros(self.n), self.samples, self.radius,
                                         tree=self.tree, vertex=v)
                core = hood.valid
                queries = 1
                self.clock.charge("nn_point", hood.scanned)
            self.clock.charge("nn_query", queries)
            self.stats["neighbor_queries"] += queries
            self._neighbor_cache[v] = core
        out = list(core)
        have = set(out)
        p = self.tree.parent_of(v)
        extra = ([p] if p is not None else []) + sorted(self.tree.children_of(v))
        for w in extra:
            if w not in have:
                out.append(w)
                have.add(w)
        return [w for w in out if w in self.samples and not self.tree.is_blacklisted(v, w)]

    # -- forward search ---------------------------------------------------

    def _secondary_key(self, s: int, t: int, c: float) -> float:
        if self.config.effort_tiebreak:
            return c / self.env.check_resolution
        return self.heuristic.h.get(t, math.inf)

    def _expand(self, v: int, queue: list, expanded: set) -> None:
        expanded.add(v)
        gv = self.tree.cost(v)
        h = self.heuristic.h
        for t in self.neighbors(v):
            if t == v or t == self.tree.root:
                continue
            ht = h.get(t, math.inf)
            if math.isinf(ht):
                continue
            c = self._dist(v, t)
            if gv + c >= self.tree.cost(t) and self.tree.parent_of(t) != v:
                continue
            key = gv + c + ht
            if key >= self.c_best:
                continue
            self._seq += 1
            heapq.heappush(queue, (key, self._secondary_key(v, t, c), self._seq, v, t))
            self.clock.charge("queue_op")

    def forward_search(self) -> list:
        found = []
        queue: list = []
        expanded: set = set()
        self._seq = 0
        self._expand(self.tree.root, queue, expanded)
        while queue:
            if self.expired():
                break
            key, _, _, s, t = heapq.heappop(queue)
            self.clock.charge("queue_op")
            if key >= self.c_best:
                break
            if s not in self.tree:
                continue
            if self.tree.parent_of(t) == s:
                if t not in expanded:
                    self._expand(t, queue, expanded)
                continue
            gs = self.tree.cost(s)
            c = self._dist(s, t)
            g_new = gs + c
            if g_new >= self.tree.cost(t):
                continue
            if g_new + self.heuristic.h.get(t, math.inf) >= self.c_best:
                continue
            if self.tree.is_blacklisted(s, t):
                continue
            if not self.check_edge(s, t):
                self.tree.blacklist(s, t)
                continue
            self.known_valid[s].add(t)
            self.known_valid[t].add(s)
            self.tree.attach(t, s, g_new)
            self._propagate(t)
            self._expand(t, queue, expanded)
            sol = self._maybe_record()
            if sol is not None:
                found.append(sol)
        return found

    def _propagate(self, start: int) -> None:
        """Push a cost decrease at ``start`` through its subtree and known-valid edges."""
        tree = self.tree
        stack = [start]
        while stack:
            w = stack.pop()
            gw = tree.g.get(w)
            if gw is None:
                continue
            for c in sorted(tree.children_of(w)):
                new = gw + self._dist(w, c)
                if new != tree.g[c]:
                    tree.g[c] = new
                    stack.append(c)
            for v in sorted(self.known_valid.get(w, ())):
                if v == tree.root or v not in self.samples or tree.parent_of(v) == w:
                    continue
                new = gw + self._dist(w, v)
                if new < tree.cost(v) - 1e-12:
                    tree.attach(v, w, new)
                    stack.append(v)

    def _maybe_record(self):
        g_goal = self.tree.cost(self.goal_id)
        if g_goal < self.c_best:
            sol = extract_path(self.tree, self.samples, self.goal_id, self.clock.now())
            if sol.cost >= self.c_best:
                return None
            self.c_best = sol.cost
            self.solutions.append(sol)
            return sol
        return None

    # -- export -----------------------------------------------------------

    def snapshot(self) -> dict:
        """Plain-data view of the run for rendering and audits."""
        ids = sorted(self.tree.g)
        return {
            "schema": 1,
            "environment": self.env.to_dict(),
            "planner": self.config.neighbor_mode,
            "seed": self.config.seed,
            "vertices": [{"id": v, "state": self.samples.state(v).tolist(), "g": self.tree.g[v],
                          "parent": self.tree.parent[v]} for v in ids],
            "edges": [[p, v] for p, v in sorted(self.tree.edges())],
            "valid_samples": self.samples.valid_states.tolist(),
            "invalid_samples": self.samples.invalid_states.tolist(),
            "solutions": [{"cost": s.cost, "time": s.wall_time, "path": s.path.tolist()}
                          for s in self.solutions],
        }


def plan(env: Environment, config: PlannerConfig = PlannerConfig()):
    """Generator of strictly improving solutions for ``env``."""
    return Planner(env, config).plan()


def with_mode(config: PlannerConfig, mode: str) -> PlannerConfig:
    return replace(config, neighbor_mode=mode)


def save_snapshot(snapshot: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(snapshot, fh, allow_nan=False)
        fh.write("\n")


def load_snapshot(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        snap = json.load(fh)
    if snap.get("schema") != 1:
        raise ValueError(f"unsupported snapshot schema {snap.get('schema')!r}")
    return snap
