import math

import numpy as np
import pytest

from elk.chemistry import ReactionNetwork, Species
from elk.errors import ConfigurationError, DomainError
from elk.thermo import (
    MaterialParams,
    PhysicalConstants,
    average_mass,
    chem_pot_mix,
    chem_pot_pure,
    chem_pot_total,
    drift_kinetic_energy,
    elchem_pot_mix,
    energy_mix_specific,
    entropy_mix,
    extended_dalton,
    extended_raoult,
    pure_energy,
    pure_entropy,
)

U = PhysicalConstants.unit()
SP = [Species("a", 1.0, 1), Species("b", 2.0, -1), Species("W", 4.0, solvent=True)]
BETA = np.array([0.3, -0.2, 0.1])


def test_si_constants_are_exact_values():
    c = PhysicalConstants()
    assert c.e == 1.602176634e-19
    assert c.k_B == 1.380649e-23


def test_material_checks():
    with pytest.raises(ConfigurationError):
        MaterialParams(shear_viscosity=-1.0)
    with pytest.raises(ConfigurationError):
        MaterialParams(kappa=np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ConfigurationError):
        MaterialParams(kappa=np.array([[1.0, 0.0], [0.0, -1.0]]))
    m = MaterialParams(shear_viscosity=1.5, bulk_viscosity=-1.0, space_dimension=3)
    assert m.viscous_margin() == pytest.approx(0.0)
    assert m.viscous_criterion_ok
    assert not MaterialParams(shear_viscosity=1.0, bulk_viscosity=-1.0).viscous_criterion_ok


def test_mixing_potentials_by_hand():
    y = np.array([0.1, 0.2, 0.7])
    T = 2.0
    chi = chem_pot_mix(y, T, SP, BETA, U)
    expected = [T / 1.0 * (0.3 + math.log(0.1)), T / 2.0 * (-0.2 + math.log(0.2)), T / 4.0 * (0.1 + math.log(0.7))]
    np.testing.assert_allclose(chi, expected, rtol=1e-14)
    chibar = elchem_pot_mix(y, T, 0.5, SP, BETA, U)
    np.testing.assert_allclose(chibar - chi, [0.5, -0.25, 0.0], rtol=1e-14)


def test_mixing_energy_and_entropy_are_consistent():
    rng = np.random.default_rng(1)
    y = rng.dirichlet([1, 1, 1], size=5).T
    T = 1.7
    u, parts = energy_mix_specific(y, T, SP, BETA, U)
    s = entropy_mix(y, T, SP, BETA, U)
    np.testing.assert_allclose(-T * s, u, rtol=1e-13)
    np.testing.assert_allclose(parts.sum(axis=0), u, rtol=1e-14)


def test_mixing_energy_derivative_is_chemical_potential():
    # d(y_l u_l)/d y_l = chi_mix_l, checked by central differences
    y = np.array([0.1, 0.2, 0.7])
    T = 1.3
    chi = chem_pot_mix(y, T, SP, BETA, U)
    h = 1e-6
    for l in range(3):
        yp, ym = y.copy(), y.copy()
        yp[l] += h
        ym[l] -= h
        d = (energy_mix_specific(yp, T, SP, BETA, U)[1][l] - energy_mix_specific(ym, T, SP, BETA, U)[1][l]) / (2 * h)
        assert d == pytest.approx(chi[l], rel=1e-8)


def test_zero_fraction_is_finite_and_negative_raises():
    y = np.array([0.0, 0.3, 0.7])
    assert np.isfinite(energy_mix_specific(y, 1.0, SP, BETA, U)[0])
    assert np.isfinite(chem_pot_mix(y, 1.0, SP, BETA, U)).all()
    with pytest.raises(DomainError):
        chem_pot_mix(np.array([-0.1, 0.4, 0.7]), 1.0, SP, BETA, U)


def test_pure_substance_relations():
    m_a = average_mass(SP)
    assert m_a == pytest.approx(7.0 / 3.0)
    T, p, nu, T_ref = 1.4, 2.0, 0.5, 1.0
    s = pure_entropy(T, m_a, T_ref, U)
    assert s == pytest.approx(math.log(1.4) / m_a)
    # u_hat(s_pure(T), nu) = k_B T / m_a + p nu
    assert pure_energy(s, nu, p, m_a, T_ref, U) == pytest.approx(T / m_a + p * nu, rel=1e-14)
    assert chem_pot_pure(T, p, nu, m_a, U) == pytest.approx(T / m_a + p * nu)
    y = np.array([0.1, 0.2, 0.7])
    np.testing.assert_allclose(chem_pot_total(y, T, p, nu, SP, BETA, U) - chem_pot_mix(y, T, SP, BETA, U),
                               T / m_a + p * nu, rtol=1e-14)
    with pytest.raises(DomainError):
        pure_entropy(0.0, m_a, T_ref, U)


def test_dalton_and_raoult():
    p_l = np.array([1.0, 2.0, 3.0])
    rho_l = np.array([0.5, 1.0, 2.0])
    assert extended_dalton(p_l, rho_l, np.zeros(3), 0.0, 1) == 6.0
    # 1-D drift: (1/1) * (0.5*1 + 1*4 + 2*0) = 4.5
    assert extended_dalton(p_l, rho_l, np.array([1.0, 2.0, 0.0]), 0.0, 1) == pytest.approx(10.5)
    p_star = np.array([10.0, 20.0, 30.0])
    y = np.array([0.1, 0.2, 0.7])
    assert extended_raoult(p_star, y, rho_l, np.zeros(3), 0.0, 3) == pytest.approx(1 + 4 + 21)
    with pytest.raises(ConfigurationError):
        extended_dalton(p_l, rho_l, np.zeros(3), 0.0, 4)


def test_drift_kinetic_energy():
    assert drift_kinetic_energy(np.array([3.0, 1.0]), 1.0).tolist() == [2.0, 0.0]
