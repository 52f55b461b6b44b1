import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lavgap.classifiers import (
    classify_weight,
    exponent_gate,
    global_muckenhoupt_constant,
    local_minima,
    muckenhoupt_ball_value,
    muckenhoupt_constant,
    verdict_from_estimates,
    z_constant,
)
from lavgap.errors import ParameterError
from lavgap.geometry import Ball, Domain
from lavgap.weights import catalog_get

I = Domain.interval(-1, 1)
U = Domain.interval(-2, 2)


def flat(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t == 0, 0.0, np.exp(-1.0 / np.where(t == 0, 1.0, t) ** 2))


def nondecreasing(rep):
    vals = [e for _, e in rep.estimates]
    return all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("values, verdict", [
    ([1.0], "inconclusive"),
    ([1.0, 1.2], "bounded"),
    ([1.0, 1.25], "bounded"),
    ([1.0, 2.0], "inconclusive"),
    ([1.0, 10.0], "diverging"),
    ([1.0, np.inf], "diverging"),
    ([0.0, 0.0], "bounded"),
])
def test_verdict_rule(values, verdict):
    assert verdict_from_estimates(values) == verdict


def test_z_constant_one():
    rep = z_constant(lambda t: np.ones_like(t, dtype=float).reshape(-1), 1.5, I, levels=3)
    assert rep.verdict == "bounded" and max(e for _, e in rep.estimates) <= 1.0


def test_z_abs_kappa_one():
    rep = z_constant(np.abs, 1.0, I, levels=3)
    assert rep.verdict == "bounded" and rep.estimates[-1][1] <= 1.0 + 1e-12


def test_z_square_kappa_two_tends_to_two():
    rep = z_constant(np.square, 2.0, I, levels=3)
    assert rep.verdict == "bounded" and abs(rep.estimates[-1][1] - 2.0) <= 0.2
    assert rep.estimates[-1][1] <= 2.0 + 1e-12 and nondecreasing(rep)


def test_z_flat_function_any_kappa():
    assert z_constant(flat, 3.0, I, levels=3).verdict == "bounded"


def test_z_square_kappa_too_large_diverges():
    assert z_constant(np.square, 2.5, I, levels=3).verdict == "diverging"


def test_z_rejects_kappa():
    with pytest.raises(ParameterError):
        z_constant(np.abs, 0.0, I)


def test_muck_constant_weight():
    rep = muckenhoupt_constant(lambda t: np.full(np.shape(t)[0], 4.0), 2.5, I, U, levels=2)
    assert rep.verdict == "bounded" and abs(rep.estimates[-1][1] - 1.0) <= 1e-12


def test_muck_abs_centered_ball_closed_form():
    for h in (1.0, 0.1, 1e-3):
        val = muckenhoupt_ball_value(np.abs, 3.0, Ball((0.0,), h), level=8)
        assert abs(val - 2.0) <= 1e-3


def test_muck_square_thresholds():
    assert muckenhoupt_constant(np.square, 2.9, I, U, levels=3).verdict == "diverging"
    rep = muckenhoupt_constant(np.square, 3.5, I, U, levels=3)
    assert rep.verdict == "bounded" and nondecreasing(rep)


def test_muck_rejects_r():
    with pytest.raises(ParameterError):
        muckenhoupt_constant(np.abs, 1.0, I, U)


def test_global_constant_and_linear():
    J = Domain.interval(0, 1)
    one = global_muckenhoupt_constant(lambda t: np.ones(np.shape(t)[0]), 2.0, J, levels=2)
    assert one.verdict == "bounded" and abs(one.estimates[-1][1] - 1.0) <= 1e-12
    lin = global_muckenhoupt_constant(lambda t: np.abs(t).reshape(-1), 3.0, J, levels=3)
    assert lin.verdict == "bounded"


def test_global_flat_diverges():
    rep = global_muckenhoupt_constant(flat, 4.0, Domain.interval(0, 1), levels=3)
    assert rep.verdict == "diverging"


def test_muck_scaling_invariance():
    base = muckenhoupt_constant(np.abs, 3.0, I, U, levels=2, seed=4)
    scaled = muckenhoupt_constant(lambda t: 7.5 * np.abs(t), 3.0, I, U, levels=2, seed=4)
    for (_, a), (_, b) in zip(base.estimates, scaled.estimates):
        assert abs(a - b) <= 1e-10 * a


def test_z_scaling_bounded_by_factor():
    lam = 4.0
    base = z_constant(np.square, 2.0, I, levels=2, seed=2)
    scaled = z_constant(lambda t: lam * np.square(t), 2.0, I, levels=2, seed=2)
    for (_, a), (_, b) in zip(base.estimates, scaled.estimates):
        assert a / lam - 1e-12 <= b <= a * lam + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(1e-4, 0.5), st.floats(1.1, 4.0), st.floats(0.01, 3.0))
def test_ball_value_monotone_in_r(c, h, r1, dr):
    f = lambda t: np.abs(t) ** 1.5
    b = Ball((c,), h)
    assert muckenhoupt_ball_value(f, r1 + dr, b, 5) <= muckenhoupt_ball_value(f, r1, b, 5) * (1 + 1e-10)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000))
def test_seeded_reports_reproducible(seed):
    a = z_constant(np.square, 2.0, I, levels=2, seed=seed)
    b = z_constant(np.square, 2.0, I, levels=2, seed=seed)
    assert a.estimates == b.estimates and list(a.rows()) == list(b.rows())


def test_local_minima_of_square():
    m = local_minima(np.square, I)
    assert m.shape == (1, 1) and abs(m[0, 0]) < 1e-12


def test_exponent_gate():
    assert exponent_gate(2, 4, 2.0, 1)[0]
    assert not exponent_gate(1, 4, 2.0, 1)[0]
    assert exponent_gate(1, 4, 3.0, 1)[0]
    assert exponent_gate(4, 8, 2.0, 2)[0] and not exponent_gate(4, 8.5, 2.0, 2)[0]
    assert not exponent_gate(4, 6.5, 2.0, 4)[0]


def test_classify_power2n():
    rep = classify_weight(catalog_get("power2n(1)").weight, 2, 4, I, U, levels=3)
    assert rep.gate
    assert rep.sigma_report.verdict == "bounded" and rep.omega_report.verdict == "bounded"
    assert rep.omega_report.parameter == 4.0
    assert not classify_weight(catalog_get("power2n(1)").weight, 1, 4, I, U, levels=2).gate


def test_classify_rejects_exponents():
    with pytest.raises(ParameterError):
        classify_weight(catalog_get("power2n(1)").weight, 3, 2, I, U)
