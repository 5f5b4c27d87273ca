"""Obstacle worlds made of axis-aligned hyperrectangles inside the unit cube."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .space import as_state

ENV_SCHEMA_VERSION = 1

DEFAULT_RESOLUTION = 0.001

# (lower edge along axis 1, width); widths follow the labelled gaps of the
# reference dividing-wall drawing. Nothing covers x_1 = 0.5, so the straight
# start-goal segment is blocked.
DEFAULT_WALL_GAPS = (
    (0.05, 0.03),
    (0.15, 0.12),
    (0.32, 0.125),
    (0.56, 0.05),
    (0.66, 0.10),
    (0.80, 0.01),
    (0.88, 0.05),
)
DEFAULT_WALL_THICKNESS = 0.1


@dataclass(frozen=True)
class HyperRectangle:
    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo, hi = as_state(self.min_corner), as_state(self.max_corner)
        if lo.shape != hi.shape:
            raise ValueError("corner dimension mismatch")
        if np.any(lo > hi):
            raise ValueError("min_corner must be <= max_corner on every axis")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    def contains_strictly(self, x) -> bool:
        x = as_state(x)
        return bool(np.all(x > self.min_corner) and np.all(x < self.max_corner))

    def __eq__(self, other):
        if not isinstance(other, HyperRectangle):
            return NotImplemented
        return (np.array_equal(self.min_corner, other.min_corner)
                and np.array_equal(self.max_corner, other.max_corner))

    def __hash__(self):
        return hash((self.min_corner.tobytes(), self.max_corner.tobytes()))


@dataclass(frozen=True, eq=False)
class Environment:
    """Immutable planning problem in ``[0, 1]^n``.

    Validity follows closure semantics: a state is in collision only if it
    lies strictly inside an obstacle, so obstacle faces are traversable.
    """

    dimension: int
    obstacles: tuple = ()
    start: np.ndarray = None
    goal: np.ndarray = None
    check_resolution: float = DEFAULT_RESOLUTION
    name: str = "custom"
    _lo: np.ndarray = field(init=False, repr=False)
    _hi: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.dimension
        if n < 2:
            raise ValueError("dimension must be >= 2")
        if self.check_resolution <= 0:
            raise ValueError("check_resolution must be > 0")
        obstacles = tuple(self.obstacles)
        for box in obstacles:
            if box.min_corner.shape[0] != n:
                raise ValueError("obstacle dimension mismatch")
            if np.any(box.min_corner < 0) or np.any(box.max_corner > 1):
                raise ValueError("obstacles must lie inside the unit cube")
        object.__setattr__(self, "obstacles", obstacles)
        start = as_state(self.start if self.start is not None else np.full(n, 0.1))
        goal = as_state(self.goal if self.goal is not None else np.full(n, 0.9))
        if start.shape[0] != n or goal.shape[0] != n:
            raise ValueError("start/goal dimension mismatch")
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "goal", goal)
        if obstacles:
            lo = np.stack([b.min_corner for b in obstacles])
            hi = np.stack([b.max_corner for b in obstacles])
        else:
            lo = np.zeros((0, n))
            hi = np.zeros((0, n))
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)
        if not self.is_state_valid(start) or not self.is_state_valid(goal):
            raise ValueError("start and goal must be collision-free")

    # -- validity ---------------------------------------------------------

    def states_valid(self, states: np.ndarray) -> np.ndarray:
        """Vectorised validity for an ``(m, n)`` array of states."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        in_bounds = np.all((states >= 0.0) & (states <= 1.0), axis=1)
        if not len(self.obstacles):
            return in_bounds
        inside = np.all((states[:, None, :] > self._lo) & (states[:, None, :] < self._hi), axis=2)
        return in_bounds & ~inside.any(axis=1)

    def is_state_valid(self, x) -> bool:
        return bool(self.states_valid(as_state(x)[None, :])[0])

    def motion_states(self, a, b, resolution: float | None = None) -> np.ndarray:
        """Interpolated states along ``ab`` with spacing at most ``resolution``.

        The step count is a power of two, so halving the resolution yields a
        superset of the previous states.
        """
        a, b = as_state(a), as_state(b)
        res = self.check_resolution if resolution is None else resolution
        length = float(np.linalg.norm(b - a))
        steps = 1
        if length > res:
            steps = 1 << int(math.ceil(math.log2(length / res)))
            while length / steps > res:
                steps *= 2
        t = np.linspace(0.0, 1.0, steps + 1)
        return a + t[:, None] * (b - a)

    def is_motion_valid(self, a, b, resolution: float | None = None) -> bool:
        return bool(np.all(self.states_valid(self.motion_states(a, b, resolution))))

    def segment_is_clear(self, a, b) -> bool:
        """Exact test: the closed segment ``ab`` never enters an obstacle interior."""
        a, b = as_state(a), as_state(b)
        if not (np.all((a >= 0) & (a <= 1)) and np.all((b >= 0) & (b <= 1))):
            return False
        if not len(self.obstacles):
            return True
        d = b - a
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (self._lo - a) / d
            t1 = (self._hi - a) / d
        enter = np.minimum(t0, t1)
        leave = np.maximum(t0, t1)
        flat = d == 0.0
        if np.any(flat):
            # parallel axes: either always strictly between the faces, or never
            inside = (a > self._lo) & (a < self._hi)
            enter = np.where(flat, np.where(inside, -np.inf, np.inf), enter)
            leave = np.where(flat, np.where(inside, np.inf, -np.inf), leave)
        t_in = enter.max(axis=1)
        t_out = leave.min(axis=1)
        hit = (t_in < t_out) & (t_in < 1.0) & (t_out > 0.0)
        return not bool(hit.any())

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "schema": ENV_SCHEMA_VERSION,
            "name": self.name,
            "dimension": self.dimension,
            "start": self.start.tolist(),
            "goal": self.goal.tolist(),
            "resolution": self.check_resolution,
            "obstacles": [[b.min_corner.tolist(), b.max_corner.tolist()] for b in self.obstacles],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Environment":
        schema = data.get("schema", ENV_SCHEMA_VERSION)
        if schema != ENV_SCHEMA_VERSION:
            raise ValueError(f"unsupported environment schema {schema}")
        return cls(
            dimension=int(data["dimension"]),
            obstacles=tuple(HyperRectangle(lo, hi) for lo, hi in data["obstacles"]),
            start=data["start"],
            goal=data["goal"],
            check_resolution=float(data.get("resolution", DEFAULT_RESOLUTION)),
            name=data.get("name", "custom"),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Environment":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def same_as(self, other: "Environment") -> bool:
        return self.to_dict() == other.to_dict()


def is_state_valid(env: Environment, x) -> bool:
    return env.is_state_valid(x)


def is_motion_valid(env: Environment, a, b) -> bool:
    return env.is_motion_valid(a, b)


def make_free_space(n: int, start=None, goal=None) -> Environment:
    return Environment(dimension=n, start=start, goal=goal, name=f"free-{n}d")


def make_dividing_wall(n: int, gap_spec=DEFAULT_WALL_GAPS,
                       wall_thickness: float = DEFAULT_WALL_THICKNESS,
                       check_resolution: float = DEFAULT_RESOLUTION) -> Environment:
    """A wall slab across axis 0 at 0.5, pierced by gaps along axis 1.

    Each gap is a ``(position, width)`` pair: the interval
    ``[position, position + width]`` on axis 1 stays open across the whole
    slab and over every other axis.
    """
    gaps = sorted((float(p), float(w)) for p, w in gap_spec)
    for p, w in gaps:
        if w <= 0 or p < 0 or p + w > 1:
            raise ValueError(f"gap ({p}, {w}) is outside [0, 1]")
    for (p0, w0), (p1, _) in zip(gaps, gaps[1:]):
        if p0 + w0 > p1:
            raise ValueError("gaps overlap")
    if not 0 < wall_thickness < 0.8:
        raise ValueError("wall thickness must be in (0, 0.8)")

    lo0, hi0 = 0.5 - wall_thickness / 2, 0.5 + wall_thickness / 2
    pieces = []
    cursor = 0.0
    for p, w in gaps:
        if p > cursor:
            pieces.append((cursor, p))
        cursor = p + w
    if cursor < 1.0:
        pieces.append((cursor, 1.0))

    obstacles = []
    for a1, b1 in pieces:
        lo = np.zeros(n)
        hi = np.ones(n)
        lo[0], hi[0] = lo0, hi0
        lo[1], hi[1] = a1, b1
        obstacles.append(HyperRectangle(lo, hi))

    start = np.full(n, 0.5)
    goal = np.full(n, 0.5)
    start[0], goal[0] = 0.1, 0.9
    name = f"dw-{n}d" if gaps else f"dw0-{n}d"
    return Environment(dimension=n, obstacles=tuple(obstacles), start=start, goal=goal,
                       check_resolution=check_resolution, name=name)


def default_rectangle_widths(n: int) -> tuple:
    """Per-axis width range whose box volumes match (0.1, 0.3) squares in the plane."""
    return (0.1 ** (2.0 / n), 0.3 ** (2.0 / n))


def make_random_rectangles(n: int, count: int = 20, width_range=None, seed: int = 1,
                           check_resolution: float = DEFAULT_RESOLUTION,
                           max_attempts: int = 10_000) -> Environment:
    """``count`` random boxes; boxes covering the start or goal are redrawn."""
    if width_range is None:
        width_range = default_rectangle_widths(n)
    w_min, w_max = width_range
    if not 0 < w_min <= w_max < 1:
        raise ValueError("need 0 < w_min <= w_max < 1")
    rng = np.random.default_rng(seed)
    start = np.full(n, 0.1)
    goal = np.full(n, 0.9)
    obstacles = []
    for _ in range(count):
        for _attempt in range(max_attempts):
            widths = rng.uniform(w_min, w_max, n)
            centre = rng.random(n)
            lo = np.clip(centre - widths / 2, 0.0, 1.0)
            hi = np.clip(centre + widths / 2, 0.0, 1.0)
            box = HyperRectangle(lo, hi)
            if not box.contains_strictly(start) and not box.contains_strictly(goal):
                obstacles.append(box)
                break
        else:
            raise RuntimeError("could not place a rectangle clear of start and goal")
    return Environment(dimension=n, obstacles=tuple(obstacles), start=start, goal=goal,
                       check_resolution=check_resolution, name=f"rr-{n}d-s{seed}")
