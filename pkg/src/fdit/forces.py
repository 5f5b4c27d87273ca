"""Coulomb-style forces between a query state and charged samples.

Valid samples carry a positive charge and attract the query state; invalid
samples (those inside obstacles) carry a negative charge and repel it. In
``n`` dimensions the pair force decays as ``1 / r**(n - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import as_state

COINCIDENT_EPS = 1e-12


@dataclass(frozen=True)
class ChargedSample:
    state: np.ndarray
    valid: bool

    def __post_init__(self):
        object.__setattr__(self, "state", as_state(self.state))

    @classmethod
    def classify(cls, env, x) -> "ChargedSample":
        return cls(x, env.is_state_valid(x))


@dataclass(frozen=True)
class ChargeModel:
    """Charge magnitudes and coefficients. All default to one (equal charges).

    ``rho0`` left as ``None`` means "the current connection radius", which the
    caller passes to the repulsive functions.
    """

    k_e: float = 1.0
    q_valid: float = 1.0
    q_invalid: float = 1.0
    k_a: float = 1.0
    k_r: float = 1.0
    rho0: float | None = None

    def __post_init__(self):
        for name in ("k_e", "q_valid", "q_invalid", "k_a", "k_r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.rho0 is not None and not self.rho0 > 0:
            raise ValueError("rho0 must be > 0")


class CoincidentChargeError(ValueError):
    pass


def _offset(x, other) -> tuple[np.ndarray, float]:
    d = as_state(other) - as_state(x)
    r = float(np.linalg.norm(d))
    if r < COINCIDENT_EPS:
        raise CoincidentChargeError("query state coincides with a charge")
    return d, r


def pair_force(x, sample: ChargedSample, model: ChargeModel = ChargeModel(), n: int | None = None) -> np.ndarray:
    """Force a single charged sample exerts on ``x``."""
    d, r = _offset(x, sample.state)
    n = d.shape[0] if n is None else n
    unit = d / r
    if sample.valid:
        return model.k_e * model.q_valid / r ** (n - 1) * unit
    return -model.k_e * model.q_invalid / r ** (n - 1) * unit


@dataclass
class ForceResult:
    force: np.ndarray
    skipped: int = 0


def resultant_force(x: np.ndarray, positive: np.ndarray, negative: np.ndarray,
                    model: ChargeModel = ChargeModel()) -> ForceResult:
    """Vectorised resultant over arrays of positive and negative charge positions.

    Charges closer than ``COINCIDENT_EPS`` are skipped and counted.
    """
    x = as_state(x)
    n = x.shape[0]
    total = np.zeros(n)
    skipped = 0
    for states, sign, q in ((positive, 1.0, model.q_valid), (negative, -1.0, model.q_invalid)):
        if states is None or len(states) == 0:
            continue
        d = np.asarray(states, dtype=np.float64).reshape(-1, n) - x
        r = np.sqrt(np.einsum("ij,ij->i", d, d))
        ok = r >= COINCIDENT_EPS
        skipped += int((~ok).sum())
        if not ok.any():
            continue
        d, r = d[ok], r[ok]
        # (q / r^(n-1)) * (d / r)
        total += sign * model.k_e * q * (d / (r ** n)[:, None]).sum(axis=0)
    return ForceResult(total, skipped)


def compute_force_direction(x, neighbors: Sequence[ChargedSample],
                            model: ChargeModel = ChargeModel()) -> np.ndarray:
    """Resultant force of ``neighbors`` on ``x``; zero for no neighbours."""
    x = as_state(x)
    pos = [s.state for s in neighbors if s.valid]
    neg = [s.state for s in neighbors if not s.valid]
    return resultant_force(x, np.array(pos).reshape(-1, x.shape[0]),
                           np.array(neg).reshape(-1, x.shape[0]), model).force


def charge_ratio(neighbors: Sequence[ChargedSample]) -> float:
    """Fraction of invalid samples; 0 for an empty set."""
    total = len(neighbors)
    if total == 0:
        return 0.0
    return sum(1 for s in neighbors if not s.valid) / total


def attractive_potential(x, x_pos, model: ChargeModel = ChargeModel()) -> float:
    _, r = _offset(x, x_pos)
    return model.k_a / r ** 2


def attractive_force(x, x_pos, model: ChargeModel = ChargeModel()) -> np.ndarray:
    """``k_a (x - x_pos) / |x - x_pos|^3``: magnitude ``k_a / r^2``."""
    d, r = _offset(x, x_pos)
    return model.k_a * (-d) / r ** 3


def _cutoff(model: ChargeModel, rho0: float | None) -> float:
    rho = model.rho0 if rho0 is None else rho0
    if rho is None:
        raise ValueError("no repulsion range: set model.rho0 or pass rho0 (the connection radius)")
    if not rho > 0:
        raise ValueError("rho0 must be > 0")
    return rho


def repulsive_potential(x, x_neg, model: ChargeModel = ChargeModel(), rho0: float | None = None) -> float:
    rho = _cutoff(model, rho0)
    _, r = _offset(x, x_neg)
    if r > rho:
        return 0.0
    return -model.k_r / r ** 2


def repulsive_force(x, x_neg, model: ChargeModel = ChargeModel(), rho0: float | None = None) -> np.ndarray:
    """``-k_r (x - x_neg) / |x - x_neg|^3`` inside ``rho0``, zero beyond."""
    rho = _cutoff(model, rho0)
    d, r = _offset(x, x_neg)
    if r > rho:
        return np.zeros_like(d)
    return -model.k_r * (-d) / r ** 3


def _aggregate(x, states, model: ChargeModel, n: int | None, sign: float) -> np.ndarray:
    x = as_state(x)
    n = x.shape[0] if n is None else n
    total = np.zeros(x.shape[0])
    for s in states:
        diff = as_state(s) - x
        r = float(np.linalg.norm(diff))
        if r < COINCIDENT_EPS:
            continue
        # unit charges q1 = q2 = 1
        total += sign * model.k_e * diff / r ** n
    return total


def aggregate_attractive_force(x, valid_states, model: ChargeModel = ChargeModel(), n: int | None = None) -> np.ndarray:
    """``k_e * sum_i (x_i - x) / |x - x_i|^n`` over valid sample positions."""
    return _aggregate(x, valid_states, model, n, 1.0)


def aggregate_repulsive_force(x, invalid_states, model: ChargeModel = ChargeModel(), n: int | None = None) -> np.ndarray:
    """Mirror of :func:`aggregate_attractive_force` with the sign flipped."""
    return _aggregate(x, invalid_states, model, n, -1.0)
