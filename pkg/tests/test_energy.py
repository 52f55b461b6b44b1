import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lavgap.energy import (
    EnergySpec,
    approximate,
    energy,
    energy_terms,
    equiintegrability_index,
    luxembourg_norm,
    mode_gate,
    modular,
    truncate,
)
from lavgap.errors import ConfigError, GateRefused, ParameterError
from lavgap.geometry import Domain, StarShape
from lavgap.mollifier import ScalarField
from lavgap.weights import catalog_get, constant_weight

UNIT = Domain.interval(0, 1)
SYM = Domain.interval(-1, 1)
POWER = catalog_get("power2n(1)").weight


def sample(f, domain=UNIT, n=2001, vanish=False):
    return ScalarField.from_function(domain, n, f, vanish)


def hat(t):
    return np.maximum(0.0, 1.0 - np.abs(t))


def test_linear_field_constant_weight():
    spec = EnergySpec(2, 3, constant_weight(1.0), UNIT)
    assert abs(energy(sample(lambda t: t), spec) - 2.0) <= 1e-10


def test_zero_field():
    spec = EnergySpec(2, 4, POWER, UNIT)
    u = sample(lambda t: np.zeros_like(t))
    assert energy(u, spec) == 0.0 and energy(u, spec, mode="p1") == 0.0


def test_square_field_power_weight():
    spec = EnergySpec(2, 4, POWER, UNIT)
    assert abs(energy(sample(np.square), spec) - (4 / 3 + 16 / 7)) <= 1e-8


def test_p1_mode_matches_closed_form():
    spec = EnergySpec(2, 4, POWER, UNIT)
    # piecewise linear interpolant of x^2 converges at second order
    assert abs(energy(sample(np.square, n=4001), spec, mode="p1") - (4 / 3 + 16 / 7)) <= 1e-5


def test_terms_reported_separately():
    spec = EnergySpec(2, 4, POWER, UNIT)
    pt, qt = energy_terms(sample(np.square), spec)
    assert abs(pt - 4 / 3) <= 1e-8 and abs(qt - 16 / 7) <= 1e-8


def test_energy_monotone_in_weight():
    u = sample(lambda t: np.sin(3 * t))
    lo = energy(u, EnergySpec(2, 4, constant_weight(1.0), UNIT))
    hi = energy(u, EnergySpec(2, 4, constant_weight(2.0), UNIT))
    assert lo < hi


def test_spec_validation():
    with pytest.raises(ParameterError):
        EnergySpec(3, 2, POWER, UNIT)
    with pytest.raises(ParameterError):
        EnergySpec(0.5, 2, POWER, UNIT)
    with pytest.raises(ParameterError):
        energy(sample(np.square), EnergySpec(2, 2, POWER, UNIT), mode="spectral")


def test_luxembourg_examples():
    spec = EnergySpec(2, 2, constant_weight(0.0), UNIT)
    u = sample(lambda t: t)
    assert abs(luxembourg_norm(u, spec) - 1.0) <= 1e-9
    assert abs(luxembourg_norm(u.with_values(2 * u.values), spec) - 2.0) <= 1e-9
    assert luxembourg_norm(sample(lambda t: np.zeros_like(t)), spec) == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 20), st.floats(1, 3), st.floats(0, 2))
def test_modular_at_norm_is_one(amp, p, dq):
    spec = EnergySpec(p, p + dq, POWER, UNIT)
    u = sample(lambda t: amp * np.sin(2 * t), n=401)
    s = luxembourg_norm(u, spec, tol=1e-12)
    assert abs(modular(u, spec, s) - 1.0) <= 1e-8


def test_truncate_examples():
    u = sample(lambda t: 2 * t)
    assert np.array_equal(truncate(u, 5.0).values, u.values)
    spec = EnergySpec(1, 1, constant_weight(0.0), UNIT)
    assert abs(energy(u, spec) - 2.0) <= 1e-9
    assert abs(energy(truncate(u, 1.0), spec) - 1.0) <= 1e-3
    assert energy(truncate(u, 1e-9), spec) <= 1e-8
    with pytest.raises(ParameterError):
        truncate(u, 0.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 3), st.floats(0.5, 4), st.sampled_from(["central", "p1"]))
def test_truncation_never_increases_energy(M, freq, mode):
    spec = EnergySpec(1.5, 3, POWER, SYM)
    u = sample(lambda t: 2 * np.sin(freq * t) + t, SYM, 801)
    assert energy(truncate(u, M), spec, mode) <= energy(u, spec, mode) + 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0.5, 4), st.floats(-2, 2))
def test_energy_convex(theta, freq, shift):
    spec = EnergySpec(1.5, 3, POWER, SYM)
    u = sample(lambda t: np.sin(freq * t), SYM, 801)
    w = sample(lambda t: (t - shift) ** 2, SYM, 801)
    mix = u.with_values(theta * u.values + (1 - theta) * w.values)
    for mode in ("central", "p1"):
        lhs = energy(mix, spec, mode)
        rhs = theta * energy(u, spec, mode) + (1 - theta) * energy(w, spec, mode)
        assert lhs <= rhs + 1e-9 * max(1.0, rhs)


SCHEDULE = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001]


def test_approximation_converges_for_hat():
    spec = EnergySpec(2, 4, POWER, SYM)
    u = sample(hat, SYM, 8001, vanish=True)
    tr = approximate(u, spec, StarShape(SYM, (0.0,), 0.9), SCHEDULE)
    assert abs(tr.energies[-1] - energy(u, spec)) <= 0.02 * energy(u, spec)
    assert all(b < a for a, b in zip(tr.w11_errors, tr.w11_errors[1:]))
    assert tr.equi_by_fraction[1e-3] < 0.05
    assert len(list(tr.rows())) == len(SCHEDULE)


def test_gate_refusal_mode_i():
    spec = EnergySpec(1, 4, POWER, SYM)
    with pytest.raises(GateRefused) as err:
        approximate(sample(hat, SYM, 401, True), spec, StarShape(SYM, (0.0,), 0.9), [0.1])
    assert "4 <= 1 + 2" in str(err.value) and "False" in str(err.value)


def test_mode_ii_gate_admits():
    spec = EnergySpec(1, 5, POWER, SYM)
    assert mode_gate(spec, "ii", 0.5)[0] and not mode_gate(spec, "i")[0]
    assert not mode_gate(spec, "ii", 1.0)[0]
    tr = approximate(sample(hat, SYM, 2001, True), spec, StarShape(SYM, (0.0,), 0.9), [0.1, 0.05], mode="ii", gamma=0.5)
    assert tr.theta == 2.0 and all(np.isfinite(tr.energies))


def test_schedule_must_decrease():
    spec = EnergySpec(2, 4, POWER, SYM)
    with pytest.raises(ConfigError):
        approximate(sample(hat, SYM, 401, True), spec, StarShape(SYM, (0.0,), 0.9), [0.05, 0.1])


def test_equiintegrability_examples():
    for fr in (0.1, 0.01, 0.001):
        assert np.isclose(equiintegrability_index([np.ones(10_000)] * 3, fr), fr)
    spike = np.ones(10_000)
    spike[17] = spike.sum()
    for fr in (0.1, 0.01, 0.001):
        assert equiintegrability_index([np.ones(10_000), spike], fr) >= 0.5
    with pytest.raises(ParameterError):
        equiintegrability_index([np.ones(4)], 0.1)
