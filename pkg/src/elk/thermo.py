"""Chemical and electrochemical potentials, energy and entropy ansatzes, pressure laws.

Species-resolved inputs carry the species axis first: ``y`` has shape
``(L,)`` or ``(L, N)``. Temperatures and potentials broadcast against the
trailing axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.constants as sc
from scipy.special import xlogy

from .chemistry import Y_MIN, Species, masses, valencies
from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    """Elementary charge, Boltzmann constant and vacuum permittivity (SI by default)."""

    e: float = sc.e
    k_B: float = sc.k
    eps0: float = sc.epsilon_0

    def __post_init__(self):
        for name in ("e", "k_B", "eps0"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigurationError(f"physical constant {name} must be > 0, got {v}")

    @classmethod
    def unit(cls) -> "PhysicalConstants":
        """e = k_B = eps0 = 1, for nondimensional runs."""
        return cls(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class MaterialParams:
    """Transport and reference parameters of the mixture.

    ``kappa`` may be a scalar or a symmetric positive semidefinite n x n
    tensor; ``eps_r`` a scalar or a per-cell array.
    """

    shear_viscosity: float = 0.0
    bulk_viscosity: float = 0.0
    kappa: float | np.ndarray = 0.0
    eps_r: float | np.ndarray = 1.0
    T_ref: float = 298.15
    space_dimension: int = 3

    def __post_init__(self):
        if self.shear_viscosity < 0:
            raise ConfigurationError("shear viscosity must be >= 0")
        if self.space_dimension not in (1, 2, 3):
            raise ConfigurationError("space dimension must be 1, 2 or 3")
        if np.any(np.asarray(self.eps_r) <= 0):
            raise ConfigurationError("relative permittivity must be > 0")
        if self.T_ref <= 0:
            raise ConfigurationError("reference temperature must be > 0")
        k = np.asarray(self.kappa, dtype=float)
        if k.ndim == 0:
            if k < 0:
                raise ConfigurationError("heat conductivity must be >= 0")
        else:
            if k.ndim != 2 or k.shape[0] != k.shape[1] or not np.allclose(k, k.T):
                raise ConfigurationError("heat conductivity tensor must be square and symmetric")
            if np.min(np.linalg.eigvalsh(k)) < -1e-14 * max(1.0, np.max(np.abs(k))):
                raise ConfigurationError("heat conductivity tensor must be positive semidefinite")

    def viscous_margin(self, n: int | None = None) -> float:
        """``2 eta / n + eta_v``; nonnegative for a thermodynamically consistent fluid."""
        n = self.space_dimension if n is None else n
        return 2.0 * self.shear_viscosity / n + self.bulk_viscosity

    @property
    def viscous_criterion_ok(self) -> bool:
        return self.viscous_margin() >= 0


def average_mass(species: Sequence[Species]) -> float:
    """m_a = (1/L) sum_l m_l."""
    return float(np.mean(masses(species)))


def _col(a, ndim):
    """Reshape a per-species vector to broadcast against an (L, ...) array."""
    return np.asarray(a, dtype=float).reshape((-1,) + (1,) * (ndim - 1))


def _log_fractions(y):
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise DomainError("mass fractions must be finite and nonnegative")
    return np.log(np.maximum(y, Y_MIN))


def chem_pot_mix(y, T, species: Sequence[Species], beta, constants: PhysicalConstants):
    """chi_mix_l = (k_B T / m_l)(beta_l + ln y_l), shape like ``y``."""
    y = np.asarray(y, dtype=float)
    nd = max(y.ndim, 1)
    m = _col(masses(species), nd)
    b = _col(beta, nd)
    return constants.k_B * np.asarray(T) / m * (b + _log_fractions(y))


def elchem_pot_mix(y, T, phi, species: Sequence[Species], beta, constants: PhysicalConstants):
    """chi_bar_mix_l = chi_mix_l + (e z_l / m_l) phi."""
    y = np.asarray(y, dtype=float)
    nd = max(y.ndim, 1)
    z = _col(valencies(species), nd)
    m = _col(masses(species), nd)
    return chem_pot_mix(y, T, species, beta, constants) + constants.e * z / m * np.asarray(phi)


def energy_mix_specific(y, T, species: Sequence[Species], beta, constants: PhysicalConstants):
    """Specific mixing energy.

    Returns
    -------
    u_mix : ndarray
        ``sum_l y_l u_mix_l``.
    parts : ndarray, shape like ``y``
        ``y_l u_mix_l = (k_B T/m_l)[y_l(beta_l - 1 + ln y_l) + exp(-beta_l)]``.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("mass fractions must be nonnegative")
    nd = max(y.ndim, 1)
    m = _col(masses(species), nd)
    b = _col(beta, nd)
    parts = constants.k_B * np.asarray(T) / m * (xlogy(y, y) + y * (b - 1.0) + np.exp(-b))
    return parts.sum(axis=0), parts


def entropy_mix(y, T, species: Sequence[Species], beta, constants: PhysicalConstants):
    """Specific mixing entropy s_mix = -u_mix / T.

    Evaluated without calling :func:`energy_mix_specific` so that the identity
    ``-T s_mix = u_mix`` can be checked between independent code paths.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("mass fractions must be nonnegative")
    total = 0.0
    for l, sp in enumerate(species):
        yl = y[l]
        bl = float(np.asarray(beta)[l])
        with np.errstate(divide="ignore", invalid="ignore"):
            ylogy = np.where(yl > 0, yl * np.log(np.where(yl > 0, yl, 1.0)), 0.0)
        total = total - (constants.k_B / sp.mass) * (ylogy + bl * yl - yl + np.exp(-bl))
    return total * np.ones_like(np.asarray(T, dtype=float))


def pure_entropy(T, m_a: float, T_ref: float, constants: PhysicalConstants):
    """s_pure = (k_B / m_a) ln(T / T_ref)."""
    T = np.asarray(T, dtype=float)
    if np.any(T <= 0):
        raise DomainError("temperature must be > 0")
    return constants.k_B / m_a * np.log(T / T_ref)


def pure_energy(s, nu, p, m_a: float, T_ref: float, constants: PhysicalConstants):
    """u_hat(s, nu) = (k_B T_ref / m_a) exp(m_a s / k_B) + p nu."""
    return constants.k_B * T_ref / m_a * np.exp(m_a * np.asarray(s) / constants.k_B) + np.asarray(p) * np.asarray(nu)


def chem_pot_pure(T, p, nu, m_a: float, constants: PhysicalConstants):
    """Species-independent chi_pure = u_hat evaluated at s_pure(T) = k_B T/m_a + p nu."""
    return constants.k_B * np.asarray(T, dtype=float) / m_a + np.asarray(p) * np.asarray(nu)


def chem_pot_total(y, T, p, nu, species: Sequence[Species], beta, constants: PhysicalConstants):
    """chi_l = chi_pure + chi_mix_l, shape like ``y``."""
    m_a = average_mass(species)
    return chem_pot_pure(T, p, nu, m_a, constants) + chem_pot_mix(y, T, species, beta, constants)


def _drift_sq(v_l, v, ref_ndim):
    rel = np.asarray(v_l, dtype=float) - np.asarray(v, dtype=float)
    if rel.ndim > ref_ndim:
        return np.sum(rel**2, axis=-1)
    return rel**2


def extended_dalton(p_l, rho_l, v_l, v, n: int):
    """p = sum_l p_l + (1/n) sum_l rho_l |v_l - v|^2.

    ``v_l`` may carry a trailing vector axis of length n; scalars are
    treated as one-component velocities.
    """
    if n not in (1, 2, 3):
        raise ConfigurationError("space dimension must be 1, 2 or 3")
    p_l = np.asarray(p_l, dtype=float)
    rho_l = np.asarray(rho_l, dtype=float)
    kin = rho_l * _drift_sq(v_l, v, rho_l.ndim)
    return p_l.sum(axis=0) + kin.sum(axis=0) / n


def extended_raoult(p_star, y, rho_l, v_l, v, n: int):
    """p = sum_l p*_l y_l + (1/n) sum_l rho_l |v_l - v|^2."""
    y = np.asarray(y, dtype=float)
    p_star = np.asarray(p_star, dtype=float).reshape((-1,) + (1,) * (y.ndim - 1))
    return extended_dalton(p_star * y, rho_l, v_l, v, n)


def drift_kinetic_energy(v_l, v):
    """The neglected per-species term 1/2 |v_l - v|^2, reported as a diagnostic."""
    v_l = np.asarray(v_l, dtype=float)
    return 0.5 * _drift_sq(v_l, v, np.ndim(v) + 1 if np.ndim(v) else 1)
