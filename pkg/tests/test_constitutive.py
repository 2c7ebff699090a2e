import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elk.chemistry import Species
from elk.constitutive import (
    close_fluxes,
    drift_fluxes,
    drift_fluxes_potential_form,
    free_charge,
    free_current,
    grad_elchem_pot_mix,
    heat_flux,
    mobility,
    newtonian_stress,
    pnp_fluxes,
    total_stress,
    viscous_dissipation,
    viscous_dissipation_closed,
)
from elk.errors import DomainError
from elk.thermo import PhysicalConstants

U = PhysicalConstants.unit()
SP = [Species("a", 1.0, 1, 1.0), Species("b", 2.0, -1, 0.5), Species("W", 3.0, solvent=True)]
BETA = np.array([0.2, -0.1, 0.05])


def _fields(rng, n=7):
    ys = rng.uniform(0.01, 0.2, (2, n))
    y = np.vstack([ys, 1 - ys.sum(axis=0)])
    gys = rng.standard_normal((2, n)) * 0.1
    gy = np.vstack([gys, -gys.sum(axis=0)])
    return y, gy, rng.uniform(0.5, 2, n), rng.standard_normal(n), rng.uniform(0.5, 2, n), rng.standard_normal(n) * 0.1


def test_mobility():
    assert mobility(2.0, 4.0, U) == 0.5


def test_free_charge_and_current_by_hand():
    y = np.array([[0.1], [0.2], [0.7]])
    # rho_E = e (z/m) rho y = 1*0.1 - 0.5*0.2 = 0
    assert free_charge(y, 2.0, SP, U)[0] == pytest.approx(0.0, abs=1e-16)
    j = np.array([[1.0], [2.0], [-3.0]])
    assert free_current(j, SP, U)[0] == pytest.approx(1.0 - 1.0)


def test_close_fluxes_sums_to_zero():
    j = close_fluxes(np.array([[1.0, 2.0], [3.0, -1.0]]))
    np.testing.assert_array_equal(j[-1], [-4.0, -1.0])


def test_expanded_form_equals_potential_form():
    rng = np.random.default_rng(3)
    y, gy, rho, gphi, T, gT = _fields(rng)
    a = drift_fluxes(y, gy, rho, gphi, T, gT, SP, BETA, U)
    g = grad_elchem_pot_mix(y, gy, T, gT, gphi, SP, BETA, U)
    b = drift_fluxes_potential_form(y, rho, T, g, SP, U)
    np.testing.assert_allclose(a.j, b.j, rtol=1e-12, atol=1e-15)
    assert np.max(a.closure_error) <= 1e-15


def test_pnp_is_potential_form_without_solvent_gradient_at_uniform_T():
    rng = np.random.default_rng(4)
    y, gy, rho, gphi, T, _ = _fields(rng)
    T = np.full_like(T, 1.3)
    a = pnp_fluxes(y, gy, rho, gphi, T, SP, U)
    g = grad_elchem_pot_mix(y, gy, T, 0.0, gphi, SP, BETA, U)
    b = drift_fluxes_potential_form(y, rho, T, g, SP, U, solvent_gradient=False)
    np.testing.assert_allclose(a.j, b.j, rtol=1e-12, atol=1e-15)


def test_diffusion_dissipation_is_nonnegative():
    # -(1/T) sum grad chi_bar_l j_l >= 0 for the expanded fluxes
    rng = np.random.default_rng(5)
    for _ in range(50):
        y, gy, rho, gphi, T, gT = _fields(rng)
        f = drift_fluxes(y, gy, rho, gphi, T, gT, SP, BETA, U)
        g = grad_elchem_pot_mix(y, gy, T, gT, gphi, SP, BETA, U)
        d = -np.sum(g * f.j, axis=0) / T
        assert np.all(d >= -1e-13 * np.sum(np.abs(g * f.j), axis=0))


def test_degenerate_solvent_raises():
    y = np.array([[0.5], [0.5], [0.0]])
    with pytest.raises(DomainError):
        drift_fluxes(y, np.zeros((3, 1)), 1.0, 0.0, 1.0, 0.0, SP, BETA, U)


def test_stress_by_hand():
    G = np.array([[1.0, 2.0], [0.0, 3.0]])
    tau = newtonian_stress(G, 0.5, 0.25)
    np.testing.assert_allclose(tau, [[1.0 + 1.0, 1.0], [1.0, 3.0 + 1.0]])
    np.testing.assert_allclose(total_stress(2.0, tau), tau - 2.0 * np.eye(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.floats(0, 5), st.floats(-3, 3), st.integers(0, 10**6))
def test_dissipation_closed_form(n, eta, eta_v, seed):
    G = np.random.default_rng(seed).standard_normal((n, n))
    d = viscous_dissipation(newtonian_stress(G, eta, eta_v), G)
    assert d == pytest.approx(float(viscous_dissipation_closed(G, eta, eta_v)), rel=1e-12, abs=1e-12)


def test_heat_flux_scalar_and_tensor():
    q = heat_flux(np.array([2.0]), np.array([1.0]), np.array([3.0]), np.array([[1.0], [2.0]]),
                  np.array([[1.0], [-1.0]]), 0.5)
    # -0.5*2 - 1*3 + (1 - 2) = -5
    assert q[0] == pytest.approx(-5.0)
    K = np.array([[2.0, 0.0], [0.0, 1.0]])
    # one point, two species, vectors of length 2
    qt = heat_flux(np.ones((1, 2)), np.zeros(1), np.zeros((1, 2)), np.zeros((2, 1)), np.zeros((2, 1, 2)), K)
    np.testing.assert_allclose(qt, [[-2.0, -1.0]])
