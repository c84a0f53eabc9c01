import numpy as np
import pytest

from demix.constitutive import (
    ArcsinDeGennes,
    ConstitutiveError,
    LinearCH,
    PowerGamma,
    model_from_string,
)
from oracles import extremal_f_constant


@pytest.fixture(params=["arcsin", "power:0.5", "power:0.7"])
def q_model(request):
    return model_from_string(request.param)


def test_arcsin_values():
    m = ArcsinDeGennes()
    assert m.f_eval(0.5) == 0.0
    assert m.f_eval(1.0) == pytest.approx(np.pi / 2, abs=1e-15)
    assert m.fprime_eval(0.5) == pytest.approx(2.0, abs=1e-14)
    assert m.fprime_eval(0.25) == pytest.approx(1.0 / np.sqrt(3.0 / 16.0), rel=1e-14)
    assert m.omega_eval(0.25) == 0.5
    assert m.omega_eval(0.0) == 0.0 and m.alpha_eval(0.0) == 0.0
    assert m.omega_eval(1.0) == 1.0 and m.alpha_eval(1.0) == 1.0


def test_power_gamma_values():
    m = PowerGamma(0.5)
    assert m.f_eval(0.25) == pytest.approx(0.5 - np.sqrt(3.0) / 2.0, rel=1e-14)
    assert m.f_eval(1.0) == 1.0


def test_linear_values():
    m = LinearCH()
    assert m.f_eval(0.3) == pytest.approx(-0.2)
    assert m.fprime_eval(0.123) == 1.0
    assert not m.supports_q
    with pytest.raises(ConstitutiveError):
        m.omega_eval(0.5)


def test_a_constant_closed_forms_vs_numeric_oracle():
    for spec, expected in (("arcsin", np.pi / 2), ("linear", 1.0), ("power:0.5", 1.0)):
        m = model_from_string(spec)
        assert m.a_constant() == pytest.approx(expected, rel=1e-12)
        assert m.a_constant() == pytest.approx(extremal_f_constant(m), rel=1e-5)
    m = model_from_string("power:0.8")
    assert m.a_constant() == pytest.approx(extremal_f_constant(m), rel=1e-5)


def test_point_symmetry(q_model, rng):
    r = rng.uniform(0.0, 1.0, 1000)
    assert np.max(np.abs(q_model.f_eval(r) + q_model.f_eval(1.0 - r))) <= 1e-14


def test_strictly_increasing(q_model):
    r = np.linspace(0.0, 1.0, 10_000)
    assert np.all(np.diff(q_model.f_eval(r)) > 0)


def test_inverse_fprime_sq_concave(q_model):
    r = np.linspace(1e-4, 1 - 1e-4, 10_000)
    w = 1.0 / q_model.fprime_unclamped(r) ** 2
    second = w[2:] - 2 * w[1:-1] + w[:-2]
    assert np.max(second) <= 1e-10


def test_omega_factorization(q_model):
    r = np.linspace(0.01, 0.99, 99)
    ident = q_model.fprime_eval(r) * q_model.omega_eval(r) * q_model.omega_eval(1 - r)
    assert np.max(np.abs(ident - 1.0)) <= 1e-12


def test_omega_alpha_structure(q_model):
    assert q_model.omega_eval(0.0) == 0.0
    assert q_model.alpha_eval(0.0) == 0.0
    r = np.linspace(1e-6, 1.0, 200)
    assert np.all(q_model.omega_eval(r) > 0)
    alpha = q_model.alpha_eval(r)
    assert np.allclose(alpha * q_model.omega_eval(r), r, rtol=1e-12, atol=1e-15)


def test_clamp_counter():
    m = ArcsinDeGennes()
    before = m.clamp_events
    m.fprime_eval(np.array([0.0, 0.5, 1.0]))
    assert m.clamp_events == before + 2
    m.fprime_eval(0.5)
    assert m.clamp_events == before + 2


def test_range_rejection():
    m = ArcsinDeGennes()
    with pytest.raises(ConstitutiveError):
        m.f_eval(1.1)
    # within 1e-12 slack: clamped, not rejected
    assert m.f_eval(1.0 + 5e-13) == pytest.approx(np.pi / 2)


def test_model_string_parsing():
    assert model_from_string("arcsin").kind == "arcsin"
    assert model_from_string("power:0.6").gamma == 0.6
    assert model_from_string("linear").kind == "linear"
    with pytest.raises(ConstitutiveError):
        model_from_string("power:1.5")
    with pytest.raises(ConstitutiveError):
        model_from_string("cubic")
