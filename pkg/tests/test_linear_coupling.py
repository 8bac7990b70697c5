import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlangevin.errors import DivergenceError, InvalidArgumentError
from qlangevin.linear_coupling import (FunctionRegulator, LinearCoupling, ModelFormFactor, TabulatedRegulator,
                                       abraham_lorentz_system, charge_force_commutator, charge_susceptibility,
                                       generic_force_commutator, generic_linear_susceptibility,
                                       half_curvature_at_zero, induced_mass_charge, load_regulator_csv,
                                       point_charge_system)


@pytest.fixture(scope="module")
def model_charge():
    return LinearCoupling(1.0, ModelFormFactor(1.0))


def test_form_factor_shape():
    W = ModelFormFactor(2.0)
    assert W(0.0) == 1.0
    assert W(2.0) == pytest.approx(0.25)
    with pytest.raises(InvalidArgumentError):
        ModelFormFactor(0.0)


def test_fdt_for_model_regulator(model_charge):
    w = np.linspace(-6, 6, 241)
    chi = charge_susceptibility(model_charge, w)
    xi = charge_force_commutator(model_charge, w)
    assert np.max(np.abs(chi.imag - xi)) <= 1e-8 * np.max(np.abs(xi))


def test_parities(model_charge):
    w = np.linspace(0.1, 4, 40)
    chi_p, chi_m = charge_susceptibility(model_charge, w), charge_susceptibility(model_charge, -w)
    assert np.allclose(chi_m, np.conj(chi_p), rtol=0, atol=1e-15)
    xi = charge_force_commutator(model_charge, w)
    assert np.allclose(charge_force_commutator(model_charge, -w), -xi, rtol=1e-15, atol=0)


@pytest.mark.parametrize("e2,W", [(1.0, 1.0), (0.3, 2.5), (2.0, 0.2)])
def test_induced_mass_closed_form(e2, W):
    c = LinearCoupling(e2, ModelFormFactor(W))
    assert induced_mass_charge(c) == pytest.approx(e2 * W / 3, rel=1e-8)


def test_induced_mass_equals_half_curvature(model_charge):
    assert half_curvature_at_zero(model_charge) == pytest.approx(induced_mass_charge(model_charge), rel=1e-6)


def test_quadrature_path_matches_closed_form(model_charge):
    # the same regulator wrapped as a plain callable is integrated numerically
    generic = LinearCoupling(1.0, FunctionRegulator(ModelFormFactor(1.0), scale=1.0))
    w = np.array([0.2, 0.9, 1.7, 3.5, 0.5 + 0.5j, 2j])
    a = charge_susceptibility(generic, w)
    b = charge_susceptibility(model_charge, w)
    assert np.max(np.abs(a - b) / np.abs(b)) < 1e-8


def test_tabulated_regulator(tmp_path):
    k = np.linspace(0, 3, 301)
    path = tmp_path / "reg.csv"
    np.savetxt(path, np.column_stack([k, np.clip(1 - k / 3, 0, 1)]), delimiter=",", header="k,value", comments="")
    reg = load_regulator_csv(path)
    c = LinearCoupling(1.0, reg)
    # int_0^3 (1 - k/3) dk = 3/2
    assert induced_mass_charge(c) == pytest.approx(4 / (3 * np.pi) * 1.5, rel=1e-8)
    assert half_curvature_at_zero(c) == pytest.approx(induced_mass_charge(c), rel=1e-5)
    w = np.array([0.5, 2.0])
    assert np.allclose(charge_susceptibility(c, w).imag, charge_force_commutator(c, w))
    with pytest.raises(InvalidArgumentError):
        TabulatedRegulator(np.array([0.0, 1.0]), np.array([1.0, 2.0]))


def test_unregulated_charge_diverges():
    c = LinearCoupling(1.0, FunctionRegulator(lambda k: np.ones_like(k)))
    with pytest.raises(DivergenceError):
        induced_mass_charge(c)


def test_point_charge_system_carries_bare_mass(model_charge):
    sysm = point_charge_system(1.0, model_charge)
    assert sysm.mass == pytest.approx(1.0 - 1.0 / 3.0, rel=1e-8)


def test_abraham_lorentz_system():
    s = abraham_lorentz_system(1.0, 1.0, 0.0)
    w = np.array([0.5, 2.0])
    assert np.allclose(s.susceptibility(w), 2j / 3 * w**3)
    assert "unbound" in abraham_lorentz_system(1.0, 1.0, -0.1).flags


def gaussian_coupling(w, k):
    return 1j * w * np.exp(-np.asarray(k) ** 2 / 2)


@pytest.mark.parametrize("w", [0.3, 1.0, 2.2])
def test_generic_coupling_fdt(w):
    chi = generic_linear_susceptibility(gaussian_coupling, w)
    assert chi.imag == pytest.approx(generic_force_commutator(gaussian_coupling, w), rel=1e-8)


def test_generic_coupling_rejects_complex_coupling():
    with pytest.raises(InvalidArgumentError):
        generic_linear_susceptibility(lambda w, k: 1j * np.ones_like(k) * (1 + 0j), 0.5)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.05, 10.0))
def test_fdt_property(W, w):
    c = LinearCoupling(1.0, ModelFormFactor(W))
    chi = charge_susceptibility(c, np.array([w]))[0]
    xi = charge_force_commutator(c, np.array([w]))[0]
    assert abs(chi.imag - xi) <= 1e-8 * abs(xi) + 1e-300
