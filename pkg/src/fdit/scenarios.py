"""Scripted narrow-corridor neighbourhood scenario."""

from __future__ import annotations

import numpy as np

from .environment import Environment, HyperRectangle
from .knn import BestNeighbors, SampleSet, get_best_ellipse_k_nearest
from .space import RggParams, make_rng, rgg_k, rgg_radius

CORRIDOR_QUERY = (0.4, 0.5)


def corridor_environment(half_width: float = 0.05) -> Environment:
    """A block over ``x0 in [0.3, 0.7]`` cut by a horizontal corridor around ``x1 = 0.5``."""
    return Environment(2, (HyperRectangle([0.3, 0.0], [0.7, 0.5 - half_width]),
                           HyperRectangle([0.3, 0.5 + half_width], [0.7, 1.0])),
                       start=[0.1, 0.5], goal=[0.9, 0.5], name="corridor-2d")


def corridor_samples(env: Environment, count: int, seed: int) -> SampleSet:
    pts = make_rng(seed).random((count, env.dimension))
    samples = SampleSet(env.dimension)
    samples.add(pts, env.states_valid(pts))
    return samples


def corridor_trial(seed: int, count: int = 200, query=CORRIDOR_QUERY, loop_cap: int = 5,
                   env: Environment | None = None) -> BestNeighbors:
    """Refine the neighbourhood of a state inside the corridor among ``count`` uniform samples."""
    env = corridor_environment() if env is None else env
    samples = corridor_samples(env, count, seed)
    params = RggParams(env.dimension)
    k = rgg_k(count, params)
    radius = rgg_radius(count, 1.0, params)
    return get_best_ellipse_k_nearest(np.asarray(query, dtype=float), k, samples, radius, loop_cap=loop_cap)


def non_increasing(counts) -> bool:
    return all(b <= a for a, b in zip(counts, counts[1:]))
