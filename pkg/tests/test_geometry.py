import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lavgap.errors import ContainmentError, ParameterError
from lavgap.geometry import Ball, Domain, StarShape, graded_quadrature, graded_quadrature_multi, sample_balls


def test_domain_basics():
    d = Domain.interval(-1, 3)
    assert d.N == 1 and d.measure == 4.0 and d.diameter == 4.0
    assert np.allclose(d.center, [1.0])
    box = Domain.box((0, 1), (0, 2))
    assert box.measure == 2.0 and np.isclose(box.diameter, np.sqrt(5))
    disk = Domain.ball((0, 0), 1)
    assert np.isclose(disk.measure, np.pi)
    assert disk.contains([[0.5, 0.5]])[0] and not disk.contains([[0.8, 0.8]])[0]


def test_compact_containment():
    assert Domain.interval(-2, 2).compactly_contains(Domain.interval(-1, 1))
    assert not Domain.interval(-1, 1).compactly_contains(Domain.interval(-1, 1))
    assert Domain.ball((0, 0), 2).compactly_contains(Domain.box((-1, 1), (-1, 1)))


def test_star_shape_requires_inner_ball():
    StarShape(Domain.interval(-1, 1), (0.0,), 0.9)
    with pytest.raises(ContainmentError):
        StarShape(Domain.interval(-1, 1), (0.5,), 0.9)
    with pytest.raises(ParameterError):
        StarShape(Domain.interval(-1, 1), (0.0,), 0.0)


def test_sample_balls_single_ball_contained():
    (b,) = sample_balls(Domain.interval(-2, 2), Domain.interval(-1, 1), 1, seed=7)
    assert -2 <= b.center[0] - b.radius and b.center[0] + b.radius <= 2


def test_sample_balls_containment_error():
    with pytest.raises(ContainmentError):
        sample_balls(Domain.interval(-1, 1), Domain.interval(-1, 1), 3)


def test_sample_balls_radius_decades():
    balls = sample_balls(Domain.interval(-2, 2), Domain.interval(-1, 1), 10_000, seed=1)
    decades = np.floor(np.log10([2 * b.radius for b in balls]))
    assert len(np.unique(decades)) >= 4
    for b in balls:
        assert b.center[0] - b.radius >= -2 and b.center[0] + b.radius <= 2


def test_sample_balls_intersecting_mode():
    inner = Domain.interval(-1, 1)
    balls = sample_balls(Domain.interval(-2, 2), inner, 500, mode="intersecting-inner", seed=3)
    assert all(inner.distance_to_set(np.array(b.center))[0] < b.radius for b in balls)


def test_sample_balls_2d_contained():
    outer = Domain.box((-2, 2), (-1, 1))
    balls = sample_balls(outer, Domain.box((-1, 1), (-0.5, 0.5)), 300, seed=2)
    for b in balls:
        c = np.array(b.center)
        assert np.all(c - b.radius >= [-2, -1]) and np.all(c + b.radius <= [2, 1])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_sample_balls_reproducible(seed):
    a = sample_balls(Domain.interval(-2, 2), Domain.interval(-1, 1), 20, seed=seed)
    b = sample_balls(Domain.interval(-2, 2), Domain.interval(-1, 1), 20, seed=seed)
    assert a == b


def test_quadrature_constant():
    rule = graded_quadrature(Domain.interval(-1, 1), level=3)
    assert abs(rule.integrate(lambda t: np.ones_like(t)) - 2.0) <= 1e-12
    assert abs(rule.weights.sum() - rule.reference_measure) <= 1e-12 * rule.reference_measure


def test_quadrature_singular_sqrt():
    rule = graded_quadrature(Ball((0.5,), 0.5), singular_point=(0.0,), level=8)
    assert abs(rule.integrate(lambda t: t**-0.5) - 2.0) <= 1e-3


def test_quadrature_square():
    rule = graded_quadrature(Domain.interval(-1, 1), level=6)
    assert abs(rule.integrate(lambda t: t**2) - 2.0 / 3.0) <= 1e-6


def test_quadrature_error_monotone_in_level():
    errs = [abs(graded_quadrature(Domain.interval(-1, 1), level=L).integrate(lambda t: t**2) - 2 / 3)
            for L in range(2, 7)]
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_quadrature_2d_disk_area():
    rule = graded_quadrature(Ball((0.0, 0.0), 1.0), level=5)
    assert abs(rule.weights.sum() - 4.0) <= 1e-12
    assert abs(rule.region_measure - np.pi) < 2e-2


def test_quadrature_2d_singular():
    # closed form: integral of 1/|x| over the unit disk is 2 pi
    rule = graded_quadrature(Ball((0.0, 0.0), 1.0), singular_point=(0.0, 0.0), level=6)
    val = rule.integrate(lambda p: 1.0 / np.linalg.norm(p, axis=1))
    assert abs(val - 2 * np.pi) < 5e-2


def test_quadrature_node_count_grows():
    counts = [len(graded_quadrature(Ball((0.0,), 1.0), singular_point=(0.2,), level=L).nodes) for L in (1, 2, 3)]
    assert counts[0] < counts[1] < counts[2]


def test_quadrature_rejects_bad_input():
    with pytest.raises(ParameterError):
        graded_quadrature(Ball((0.0,), 1.0), level=0)
    with pytest.raises(ParameterError):
        graded_quadrature(Ball((0.0,), 1.0), singular_point=(2.0,), level=2)


def test_multi_anchor_matches_single_anchor():
    one = graded_quadrature(Ball((0.0,), 1.0), singular_point=(0.3,), level=3)
    multi = graded_quadrature_multi(-1.0, 1.0, [0.3], 3)
    assert np.array_equal(one.nodes, multi.nodes) and np.array_equal(one.weights, multi.weights)


def test_multi_anchor_two_singularities():
    # |t - 1/2|^{-1/2} + |t + 1/2|^{-1/2} on (-1, 1): 2 * (sqrt(2 * 1.5) + sqrt(2 * 0.5))
    rule = graded_quadrature_multi(-1.0, 1.0, [-0.5, 0.5], 8)
    val = rule.integrate(lambda t: np.abs(t - 0.5) ** -0.5 + np.abs(t + 0.5) ** -0.5)
    exact = 2 * (2 * np.sqrt(1.5) + 2 * np.sqrt(0.5))
    assert abs(val - exact) < 1e-3
