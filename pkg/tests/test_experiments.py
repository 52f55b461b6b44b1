import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lavgap.energy import EnergySpec, energy
from lavgap.errors import ConfigError, GateRefused, ParameterError
from lavgap.experiments import (
    ConeConfig,
    _lattice_field,
    absence_experiment,
    angular_oracle,
    competitor_energy,
    cone_competitor,
    cone_weight,
    gap_experiment,
    mesh_axes,
    minimize_discrete,
)
from lavgap.geometry import Domain, StarShape
from lavgap.weights import catalog_get, constant_weight

SQUARE = Domain.box((0, 1), (0, 1))
UNIT = Domain.interval(0, 1)


def zero_2d(c=0.0):
    w = constant_weight(c)
    return type(w)(w.name, 2, 0, 1.0, lambda x: np.full(len(np.atleast_2d(x)), c), w.derivative, 0.0)


def test_linear_datum_is_harmonic():
    res = minimize_discrete(EnergySpec(2, 2, zero_2d(), SQUARE), 4, lambda x: x[:, 0])
    assert abs(res.energy - 1.0) <= 1e-10 and res.converged
    X = res.minimizer.points[:, 0]
    assert np.max(np.abs(res.minimizer.values.ravel() - X)) <= 1e-8


def test_unit_weight_doubles_energy():
    datum = lambda x: x[:, 0] ** 2 - x[:, 1] ** 3
    bare = minimize_discrete(EnergySpec(2, 2, zero_2d(), SQUARE), 4, datum)
    both = minimize_discrete(EnergySpec(2, 2, zero_2d(1.0), SQUARE), 4, datum)
    assert abs(both.energy - 2 * bare.energy) <= 1e-9 * both.energy
    assert np.max(np.abs(both.minimizer.values - bare.minimizer.values)) <= 1e-8


def test_power_weight_beats_linear_competitor():
    spec = EnergySpec(2, 4, catalog_get("power2n(1)").weight, UNIT)
    res = minimize_discrete(spec, 6, lambda t: t)
    assert res.energy <= 4 / 3 + 1e-12 and res.converged


@pytest.mark.parametrize("p, q, name", [(2, 4, "power2n(1)"), (1.5, 3, "sin6"), (2, 2, "constant(1)")])
def test_minima_nonincreasing_and_history_monotone(p, q, name):
    spec = EnergySpec(p, q, catalog_get(name).weight, Domain.interval(-1, 1))
    datum = lambda t: (t + 1) / 2
    minima, start = [], None
    for L in (3, 4, 5, 6):
        res = minimize_discrete(spec, L, datum, initial=start)
        start = res.minimizer
        minima.append(res.energy)
        assert all(b <= a for a, b in zip(res.history, res.history[1:]))
        assert abs(energy(res.minimizer, spec, mode="p1") - res.energy) <= 1e-9 * max(1.0, res.energy)
    assert all(b <= a + 1e-6 for a, b in zip(minima, minima[1:]))


def test_mesh_axes_nested_and_graded():
    box = Domain.box((-1, 1), (-1, 1))
    for g in (0, 3):
        coarse, fine = mesh_axes(box, 2, g)[0], mesh_axes(box, 3, g)[0]
        assert np.all(np.isin(coarse, fine))
    assert len(mesh_axes(UNIT, 4)[0]) == 17
    graded = mesh_axes(box, 0, 4)[0]
    assert np.allclose(graded, [-1, -0.5, -0.25, -0.125, -0.0625, 0, 0.0625, 0.125, 0.25, 0.5, 1])
    with pytest.raises(ParameterError):
        mesh_axes(Domain.ball((0, 0), 1), 2)


def test_cone_weight_and_competitor():
    theta = math.atan(0.5)
    w = cone_weight(theta, 0.5, 3.0)
    inside = np.array([[0.0, 0.5], [0.2, -0.8], [0.0, 0.0]])
    assert np.all(w(inside) == 0.0)
    # (1, 0) sits at angular distance pi/2 - theta from the cone
    assert np.isclose(w(np.array([[1.0, 0.0]]))[0], 3.0 * math.sin(math.pi / 2 - theta) ** 0.5)
    u0 = cone_competitor(theta)
    pts = np.array([[0.5, 1.0], [-0.5, 1.0], [0.25, -1.0], [1.0, 0.0], [0.0, 0.0]])
    assert np.allclose(u0(pts), [1.0, -1.0, 0.5, 1.0, 0.0])
    with pytest.raises(ConfigError):
        cone_weight(0.9, 0.5)
    with pytest.raises(ConfigError):
        cone_weight(theta, 1.5)


def test_cone_config_validation():
    with pytest.raises(ConfigError):
        ConeConfig(p=2.5)
    with pytest.raises(ConfigError):
        ConeConfig(levels=(3,))
    with pytest.raises(ConfigError):
        ConeConfig(theta=0.3)


def test_oracle_below_competitor():
    for cfg in (ConeConfig(), ConeConfig(single_phase=True), ConeConfig(kappa=1.0, scale=10.0, q=2.5)):
        assert angular_oracle(cfg) <= competitor_energy(cfg) * (1 + 1e-9)


def test_competitor_energy_converges_in_quadrature():
    cfg = ConeConfig()
    a, b = competitor_energy(cfg, 8), competitor_energy(cfg, 10)
    assert abs(a - b) <= 1e-9 * b


@pytest.mark.parametrize("cfg", [ConeConfig(single_phase=True, levels=(2, 3)),
                                 ConeConfig(kappa=1.0, scale=10.0, q=2.5, levels=(2, 3))])
def test_detector_specificity_on_controls(cfg):
    rep = gap_experiment(cfg)
    assert rep.verdict != "gap-consistent"
    assert all(b <= a * (1 + 1e-6) for a, b in zip(rep.minima, rep.minima[1:]))


def test_absence_power2n():
    rep = absence_experiment("power2n(1)", None, None, 2, 4, (8, 9, 10), StarShape(Domain.interval(-1, 1), (0.0,), 0.5))
    assert rep.verdict == "absence-consistent" and rep.trace_error < 0.02


def test_absence_constant():
    rep = absence_experiment("constant(1)", None, None, 1.5, 3, (6, 7), StarShape(Domain.interval(-1, 1), (0.0,), 0.5))
    assert rep.verdict == "absence-consistent"


def test_absence_refuses_gate():
    with pytest.raises(GateRefused):
        absence_experiment("power2n(1)", None, None, 1, 4, (6, 7), StarShape(Domain.interval(-1, 1), (0.0,), 0.5))


@settings(max_examples=15, deadline=None)
@given(st.floats(1.1, 3), st.floats(0, 3), st.integers(2, 6))
def test_minimizer_energy_nonnegative_and_below_datum(p, dq, level):
    spec = EnergySpec(p, p + dq, catalog_get("power2n(1)").weight, Domain.interval(-1, 1))
    datum = lambda t: np.sin(2 * t)
    res = minimize_discrete(spec, level, datum)
    start = _lattice_field(spec, [res.minimizer.axes[0]], datum)
    assert 0 <= res.energy <= energy(start, spec, mode="p1") + 1e-12
