import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdit.environment import make_dividing_wall
from fdit.forces import (ChargedSample, ChargeModel, CoincidentChargeError,
                         aggregate_attractive_force, aggregate_repulsive_force,
                         attractive_force, attractive_potential, charge_ratio,
                         compute_force_direction, pair_force, repulsive_force,
                         repulsive_potential, resultant_force)


def naive_sum(x, charges, n):
    """Independent scalar-loop resultant with unit charges."""
    total = [0.0] * n
    for state, valid in charges:
        diff = [state[i] - x[i] for i in range(n)]
        r = math.sqrt(sum(d * d for d in diff))
        mag = 1.0 / r ** (n - 1)
        sign = 1.0 if valid else -1.0
        for i in range(n):
            total[i] += sign * mag * diff[i] / r
    return np.array(total)


def test_pair_force_examples():
    assert np.allclose(pair_force([0, 0], ChargedSample([1, 0], True)), [1, 0])
    assert np.allclose(pair_force([0, 0], ChargedSample([0, 1], False)), [0, -1])
    f = pair_force(np.zeros(4), ChargedSample([2, 0, 0, 0], True))
    assert np.linalg.norm(f) == pytest.approx(0.125, rel=1e-15)


def test_pair_force_coincident():
    with pytest.raises(CoincidentChargeError):
        pair_force([0.2, 0.2], ChargedSample([0.2, 0.2], True))


def test_pair_force_charges_scale():
    m = ChargeModel(k_e=2.0, q_valid=3.0)
    assert np.allclose(pair_force([0, 0], ChargedSample([1, 0], True), m), [6, 0])


def test_charged_sample_classify():
    env = make_dividing_wall(2)
    assert ChargedSample.classify(env, [0.5, 0.3]).valid is False
    assert ChargedSample.classify(env, [0.2, 0.3]).valid is True


def test_resultant_examples():
    nb = [ChargedSample([1, 0], True), ChargedSample([-1, 0], True)]
    assert np.allclose(compute_force_direction([0, 0], nb), [0, 0])
    one = [ChargedSample([0.3, 0.9], False)]
    assert np.allclose(compute_force_direction([0.1, 0.1], one), pair_force([0.1, 0.1], one[0]))
    assert np.array_equal(compute_force_direction([0.5, 0.5], []), [0, 0])


def test_resultant_matches_naive_8d():
    rng = np.random.default_rng(8)
    x = rng.random(8)
    charges = [(rng.random(8), bool(rng.random() < 0.6)) for _ in range(50)]
    got = compute_force_direction(x, [ChargedSample(s, v) for s, v in charges])
    want = naive_sum(x, charges, 8)
    assert np.linalg.norm(got - want) <= 1e-12 * np.linalg.norm(want)


def test_resultant_skips_coincident():
    x = np.array([0.5, 0.5])
    res = resultant_force(x, np.array([[0.5, 0.5], [1.0, 0.5]]), np.empty((0, 2)))
    assert res.skipped == 1
    assert np.allclose(res.force, [2.0, 0.0])


def test_charge_ratio():
    mixed = [ChargedSample([0.1 * i, 0.0], i >= 2) for i in range(10)]
    assert charge_ratio(mixed) == pytest.approx(0.2)
    assert charge_ratio([ChargedSample([0, 0], True)]) == 0.0
    assert charge_ratio([]) == 0.0


def test_attractive_potential():
    assert attractive_potential([1, 0], [0, 0]) == 1.0
    assert attractive_potential([2, 0], [0, 0]) == 0.25
    assert attractive_potential([2, 0], [0, 0], ChargeModel(k_a=2)) == 0.5


def test_attractive_force_printed_direction():
    assert np.allclose(attractive_force([1, 0], [0, 0]), [1, 0])
    assert np.linalg.norm(attractive_force([2, 0], [0, 0])) == pytest.approx(0.25)
    f = attractive_force([0.3, 0.7, 0.2], [0.3, 0.1, 0.9])
    assert f[0] == 0.0


def test_repulsive_potential():
    m = ChargeModel(rho0=1.5)
    assert repulsive_potential([2, 0], [0, 0], m) == 0.0
    assert repulsive_potential([1, 0], [0, 0], m) == -1.0
    inside = repulsive_potential([1.5, 0], [0, 0], m)
    outside = repulsive_potential([1.5 + 1e-9, 0], [0, 0], m)
    assert inside == pytest.approx(-1 / 1.5 ** 2) and outside == 0.0


def test_repulsive_needs_range():
    with pytest.raises(ValueError):
        repulsive_potential([1, 0], [0, 0])
    assert repulsive_potential([1, 0], [0, 0], rho0=2.0) == -1.0


def test_repulsive_force():
    m = ChargeModel(rho0=2.0)
    assert np.array_equal(repulsive_force([3, 0], [0, 0], m), [0, 0])
    assert np.allclose(repulsive_force([1, 0], [0, 0], m), [-1, 0])
    rs = np.array([0.5, 1.0, 2.0])
    mags = [np.linalg.norm(repulsive_force([r, 0], [0, 0], m)) for r in rs]
    slope = np.polyfit(np.log(rs), np.log(mags), 1)[0]
    assert abs(slope + 2) <= 1e-9


def test_aggregates():
    x = np.array([0.2, 0.4, 0.1])
    assert np.array_equal(aggregate_attractive_force(x, []), np.zeros(3))
    assert np.array_equal(aggregate_repulsive_force(x, []), np.zeros(3))
    p = np.array([0.7, 0.1, 0.3])
    assert np.allclose(aggregate_attractive_force(x, [p]), pair_force(x, ChargedSample(p, True)), rtol=1e-13)
    assert np.allclose(aggregate_repulsive_force(x, [p]), -pair_force(x, ChargedSample(p, True)), rtol=1e-13)
    assert np.allclose(aggregate_attractive_force(x, [p], ChargeModel(k_e=3)),
                       3 * aggregate_attractive_force(x, [p]), rtol=1e-15)


def test_aggregate_sum_equals_resultant():
    rng = np.random.default_rng(21)
    for n in (2, 4, 8):
        x = rng.random(n)
        pos, neg = rng.random((7, n)), rng.random((5, n))
        agg = aggregate_attractive_force(x, pos) + aggregate_repulsive_force(x, neg)
        res = resultant_force(x, pos, neg).force
        assert np.linalg.norm(agg - res) <= 1e-12 * max(1.0, np.linalg.norm(res))


def test_attraction_and_repulsion_signs():
    rng = np.random.default_rng(5)
    for n in (2, 4, 8):
        for _ in range(100):
            x, y = rng.random(n), rng.random(n)
            rhat = (y - x) / np.linalg.norm(y - x)
            assert pair_force(x, ChargedSample(y, True)) @ rhat > 0
            assert pair_force(x, ChargedSample(y, False)) @ rhat < 0


def random_rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


@given(st.integers(0, 10_000), st.sampled_from([2, 4, 8]))
@settings(max_examples=60, deadline=None)
def test_rotation_equivariance_property(seed, n):
    rng = np.random.default_rng(seed)
    rot = random_rotation(rng, n)
    x, pos, neg = rng.random(n), rng.random((6, n)), rng.random((4, n))
    base = resultant_force(x, pos, neg).force
    turned = resultant_force(rot @ x, pos @ rot.T, neg @ rot.T).force
    assert np.linalg.norm(turned - rot @ base) <= 1e-9 * max(1.0, np.linalg.norm(base))


@given(st.integers(0, 10_000), st.sampled_from([2, 4, 8]))
@settings(max_examples=60, deadline=None)
def test_translation_invariance_property(seed, n):
    rng = np.random.default_rng(seed)
    x, pos, neg = rng.random(n), rng.random((6, n)), rng.random((4, n))
    shift = rng.uniform(-1, 1, n)
    a = resultant_force(x, pos, neg).force
    b = resultant_force(x + shift, pos + shift, neg + shift).force
    assert np.linalg.norm(a - b) <= 1e-12 * max(1.0, np.linalg.norm(a))


@pytest.mark.parametrize("n", [2, 3, 4, 8, 16])
def test_magnitude_power_law(n):
    rs = np.logspace(-1, 1, 25)
    mags = [np.linalg.norm(pair_force(np.zeros(n), ChargedSample(np.eye(n)[0] * r, True))) for r in rs]
    slope = np.polyfit(np.log(rs), np.log(mags), 1)[0]
    assert abs(slope + (n - 1)) <= 1e-6


def fd_potential_slope(r, h=1e-6):
    x_pos = np.zeros(2)
    up = attractive_potential([r + h, 0.0], x_pos)
    down = attractive_potential([r - h, 0.0], x_pos)
    return (up - down) / (2 * h)


def test_potential_gradient_shape():
    # d/dr (k_a / r^2) = -2 k_a / r^3, which the printed force magnitude k_a / r^2 meets only at r = 2
    for r in (0.5, 1.0, 2.0, 3.0):
        assert fd_potential_slope(r) == pytest.approx(-2.0 / r ** 3, rel=1e-6)
    assert abs(fd_potential_slope(2.0)) == pytest.approx(np.linalg.norm(attractive_force([2.0, 0], [0, 0])), rel=1e-6)

