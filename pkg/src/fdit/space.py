"""State-space primitives: metrics, RGG connection parameters and sampling.

States are plain 1-D float64 numpy arrays living in the unit hypercube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def as_state(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64).reshape(-1)


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def euclidean_distance(a, b) -> float:
    a, b = as_state(a), as_state(b)
    _check_same_dim(a, b)
    d = a - b
    return float(math.sqrt(float(np.dot(d, d))))


def elliptical_distance(a, b, scales) -> float:
    """Axis-weighted distance sqrt(sum(((a_i - b_i) / v_i)^2))."""
    a, b, v = as_state(a), as_state(b), as_state(scales)
    _check_same_dim(a, b)
    _check_same_dim(a, v)
    if np.any(v <= 0):
        raise ValueError("scale factors must be strictly positive")
    d = (a - b) / v
    return float(math.sqrt(float(np.dot(d, d))))


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True)
class RggParams:
    """Random-geometric-graph connection constants.

    ``rewire_factor`` is carried for configuration parity with the RRT-family
    settings; the batch planner's connection rules depend on ``eta`` only.
    """

    dimension: int
    eta: float = 1.1
    rewire_factor: float = 1.001

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.eta <= 0:
            raise ValueError("eta must be > 0")
        if self.rewire_factor < 1:
            raise ValueError("rewire_factor must be >= 1")


def rgg_radius(q: int, informed_measure: float, params: RggParams) -> float:
    """Connection radius r(q) for ``q`` samples in a set of the given measure."""
    if q < 2:
        raise ValueError("rgg_radius needs q >= 2")
    if informed_measure <= 0:
        raise ValueError("informed measure must be > 0")
    n = params.dimension
    base = (1.0 + 1.0 / n) * (informed_measure / unit_ball_volume(n)) * (math.log(q) / q)
    return 2.0 * params.eta * base ** (1.0 / n)


def rgg_k(q: int, params: RggParams) -> int:
    """Neighbour count k(q), floored and clamped to at least one."""
    if q < 2:
        raise ValueError("rgg_k needs q >= 2")
    n = params.dimension
    k = params.eta * math.e * (1.0 + 1.0 / n) * math.log(q)
    return max(1, int(math.floor(k)))


@dataclass(frozen=True)
class InformedSet:
    """Prolate hyperspheroid {x : |x - a| + |x - b| <= c_best} clipped to the unit cube."""

    focus_a: np.ndarray
    focus_b: np.ndarray
    c_best: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "focus_a", as_state(self.focus_a))
        object.__setattr__(self, "focus_b", as_state(self.focus_b))
        _check_same_dim(self.focus_a, self.focus_b)

    @property
    def dimension(self) -> int:
        return self.focus_a.shape[0]

    @property
    def c_min(self) -> float:
        return euclidean_distance(self.focus_a, self.focus_b)

    def contains(self, x, tol: float = 1e-9) -> bool:
        if math.isinf(self.c_best):
            return True
        return euclidean_distance(x, self.focus_a) + euclidean_distance(x, self.focus_b) <= self.c_best + tol


MEASURE_FLOOR = 1e-12


def hyperspheroid_volume(c_best: float, c_min: float, n: int) -> float:
    transverse = c_best / 2.0
    conjugate = math.sqrt(max(c_best * c_best - c_min * c_min, 0.0)) / 2.0
    return unit_ball_volume(n) * transverse * conjugate ** (n - 1)


def informed_measure(informed: InformedSet) -> float:
    """Lebesgue measure of the informed set, clamped to the cube volume and a positive floor."""
    cube = 1.0
    if math.isinf(informed.c_best):
        return cube
    c_min = informed.c_min
    if informed.c_best < c_min - 1e-12:
        raise ValueError("c_best must be >= c_min")
    vol = hyperspheroid_volume(informed.c_best, c_min, informed.dimension)
    return max(MEASURE_FLOOR, min(cube, vol))


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def sample_uniform_batch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((count, n))


def sample_uniform(n: int, rng: np.random.Generator) -> np.ndarray:
    """One uniform state in the unit hypercube ``[0, 1]^n``."""
    return sample_uniform_batch(n, 1, rng)[0]


def _sample_unit_ball(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((count, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = rng.random(count) ** (1.0 / n)
    return g * radii[:, None]


def _householder_to(u: np.ndarray) -> np.ndarray:
    """Orthogonal matrix mapping e_1 onto the unit vector ``u``."""
    n = u.shape[0]
    e1 = np.zeros(n)
    e1[0] = 1.0
    v = e1 - u
    vv = float(np.dot(v, v))
    if vv < 1e-30:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / vv


def _in_bounds(x: np.ndarray) -> np.ndarray:
    return np.all((x >= 0.0) & (x <= 1.0), axis=1)


def sample_informed_batch(informed: InformedSet, count: int, rng: np.random.Generator,
                          max_rounds: int = 10_000) -> np.ndarray:
    """Draw ``count`` states uniformly from the informed set intersected with the cube.

    When the hyperspheroid is larger than the cube it is cheaper to sample the
    cube and reject against the hyperspheroid; otherwise the hyperspheroid is
    sampled directly and out-of-bounds draws are rejected. Both give the same
    distribution.
    """
    n = informed.dimension
    if math.isinf(informed.c_best):
        return sample_uniform_batch(n, count, rng)
    c_min = informed.c_min
    c_best = informed.c_best
    if c_best < c_min - 1e-12:
        raise ValueError("c_best must be >= c_min")
    c_best = max(c_best, c_min)

    a, b = informed.focus_a, informed.focus_b
    out = []
    have = 0
    if hyperspheroid_volume(c_best, c_min, n) >= 1.0:
        for _ in range(max_rounds):
            x = sample_uniform_batch(n, count, rng)
            keep = np.linalg.norm(x - a, axis=1) + np.linalg.norm(x - b, axis=1) <= c_best
            out.append(x[keep])
            have += int(keep.sum())
            if have >= count:
                break
    else:
        centre = 0.5 * (a + b)
        axis = (b - a) / c_min if c_min > 0 else np.eye(n)[0]
        rot = _householder_to(axis)
        radii = np.full(n, math.sqrt(c_best * c_best - c_min * c_min) / 2.0)
        radii[0] = c_best / 2.0
        for _ in range(max_rounds):
            ball = _sample_unit_ball(n, count, rng)
            x = (ball * radii) @ rot.T + centre
            keep = _in_bounds(x)
            out.append(x[keep])
            have += int(keep.sum())
            if have >= count:
                break
    if have < count:
        raise RuntimeError("informed sampling failed to fill the batch")
    return np.concatenate(out)[:count]


def sample_informed(informed: InformedSet, rng: np.random.Generator) -> np.ndarray:
    return sample_informed_batch(informed, 1, rng)[0]
