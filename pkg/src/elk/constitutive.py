"""Pointwise constitutive laws: mobilities, drift fluxes, free charge and current,
Newtonian stress, viscous dissipation and the extended Fourier heat flux.

Fluxes are one-dimensional: a gradient is a scalar per evaluation point, and
species-resolved arrays have shape ``(L, N)``. The stress routines are
dimension-generic and act on ``(..., n, n)`` tensors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chemistry import Y_MIN, Species, diffusivities, masses, valencies
from .errors import DomainError
from .thermo import PhysicalConstants


def mobility(D, T, constants: PhysicalConstants):
    """Einstein-Smoluchowski mobility M = D / (k_B T)."""
    return np.asarray(D, dtype=float) / (constants.k_B * np.asarray(T, dtype=float))


@dataclass
class FluxSet:
    """Drift mass fluxes ``j`` (shape (L, N)) and the free current ``i`` (shape (N,))."""

    j: np.ndarray
    i: np.ndarray

    @property
    def closure_error(self) -> np.ndarray:
        """|sum_l j_l| relative to sum_l |j_l|, per point."""
        scale = np.abs(self.j).sum(axis=0)
        return np.abs(self.j.sum(axis=0)) / np.where(scale > 0, scale, 1.0)


def _col(a):
    return np.asarray(a, dtype=float)[:, None]


def free_charge(y, rho, species: Sequence[Species], constants: PhysicalConstants):
    """rho_E = sum_l (e z_l / m_l) rho y_l."""
    y = np.asarray(y, dtype=float)
    w = constants.e * valencies(species) / masses(species)
    return np.tensordot(w, y, axes=1) * np.asarray(rho, dtype=float)


def free_current(j, species: Sequence[Species], constants: PhysicalConstants):
    """i = sum_l (e z_l / m_l) j_l."""
    w = constants.e * valencies(species) / masses(species)
    return np.tensordot(w, np.asarray(j, dtype=float), axes=1)


def close_fluxes(j_solutes):
    """Append the solvent flux j_L = -sum_{l<L} j_l."""
    j_solutes = np.asarray(j_solutes, dtype=float)
    return np.concatenate([j_solutes, -j_solutes.sum(axis=0, keepdims=True)], axis=0)


def drift_fluxes(
    y, grad_y, rho, grad_phi, T, grad_T, species: Sequence[Species], beta, constants: PhysicalConstants
) -> FluxSet:
    """Drift mass fluxes in expanded form.

    For l < L::

        j_l = - rho D_l dy_l + (m_l rho_l D_l / (m_L y_L)) dy_L
              + (e rho_l D_l / (k_B T)) (z_l - m_l z_L / m_L) E
              - rho_l D_l (beta_l + ln y_l) dlnT
              + (m_l rho_l D_l / m_L)(beta_L + ln y_L) dlnT

    with E = -dphi. The solvent flux closes the sum.

    Parameters
    ----------
    y, grad_y : array_like, shape (L, N)
    rho, grad_phi, T, grad_T : array_like, shape (N,)
    """
    y = np.asarray(y, dtype=float)
    grad_y = np.asarray(grad_y, dtype=float)
    if np.any(y[-1] <= 0):
        raise DomainError("degenerate solvent: y_L must be > 0")
    if np.any(y < 0):
        raise DomainError("mass fractions must be nonnegative")
    rho = np.asarray(rho, dtype=float)
    T = np.asarray(T, dtype=float)
    m = masses(species)
    z = valencies(species)
    D = diffusivities(species)
    beta = np.asarray(beta, dtype=float)
    E = -np.asarray(grad_phi, dtype=float)
    dlnT = np.asarray(grad_T, dtype=float) / T
    yc = np.maximum(y, Y_MIN)

    ys, Ds, ms, zs = yc[:-1], _col(D[:-1]), _col(m[:-1]), _col(z[:-1])
    rho_s = rho * y[:-1]
    mL, zL, yL = m[-1], z[-1], yc[-1]
    j = (
        -rho * Ds * grad_y[:-1]
        + ms * rho_s * Ds / (mL * yL) * grad_y[-1]
        + constants.e * rho_s * Ds / (constants.k_B * T) * (zs - ms * zL / mL) * E
        - rho_s * Ds * (_col(beta[:-1]) + np.log(ys)) * dlnT
        + ms * rho_s * Ds / mL * (beta[-1] + np.log(yL)) * dlnT
    )
    j = close_fluxes(j)
    return FluxSet(j, free_current(j, species, constants))


def grad_elchem_pot_mix(y, grad_y, T, grad_T, grad_phi, species: Sequence[Species], beta, constants: PhysicalConstants):
    """Gradient of chi_bar_mix_l by the chain rule.

    d chi_bar_l = (k_B / m_l)[(beta_l + ln y_l) dT + T dy_l / y_l] + (e z_l / m_l) dphi
    """
    y = np.maximum(np.asarray(y, dtype=float), Y_MIN)
    m = _col(masses(species))
    z = _col(valencies(species))
    b = _col(beta)
    T = np.asarray(T, dtype=float)
    return (
        constants.k_B / m * ((b + np.log(y)) * np.asarray(grad_T) + T * np.asarray(grad_y) / y)
        + constants.e * z / m * np.asarray(grad_phi)
    )


def drift_fluxes_potential_form(
    y, rho, T, grad_chibar, species: Sequence[Species], constants: PhysicalConstants, solvent_gradient=True
) -> FluxSet:
    """j_l = -m_l rho_l M_l d(chi_bar_l - chi_bar_L) for l < L, solvent closing the sum.

    ``grad_chibar`` holds the gradients of the electrochemical mixing
    potentials, shape (L, N). With ``solvent_gradient=False`` the solvent term
    is dropped (dilute reduction).
    """
    y = np.asarray(y, dtype=float)
    grad_chibar = np.asarray(grad_chibar, dtype=float)
    M = mobility(_col(diffusivities(species)[:-1]), T, constants)
    drive = grad_chibar[:-1] - (grad_chibar[-1] if solvent_gradient else 0.0)
    j = -_col(masses(species)[:-1]) * np.asarray(rho) * y[:-1] * M * drive
    j = close_fluxes(j)
    return FluxSet(j, free_current(j, species, constants))


def pnp_fluxes(y, grad_y, rho, grad_phi, T, species: Sequence[Species], constants: PhysicalConstants) -> FluxSet:
    """Dilute (Nernst-Planck) drift fluxes j_l = -D_l rho dy_l + (e z_l D_l/(k_B T)) rho_l E for solutes."""
    y = np.asarray(y, dtype=float)
    rho = np.asarray(rho, dtype=float)
    D = _col(diffusivities(species)[:-1])
    z = _col(valencies(species)[:-1])
    E = -np.asarray(grad_phi, dtype=float)
    j = -D * rho * np.asarray(grad_y, dtype=float)[:-1] + constants.e * z * D / (constants.k_B * np.asarray(T)) * rho * y[:-1] * E
    j = close_fluxes(j)
    return FluxSet(j, free_current(j, species, constants))


# --------------------------------------------------------------------------
# stress and heat


def newtonian_stress(grad_v, eta: float, eta_v: float):
    """tau = eta (grad v + grad v^T) + eta_v (div v) I for ``(..., n, n)`` tensors."""
    G = np.asarray(grad_v, dtype=float)
    n = G.shape[-1]
    div = np.trace(G, axis1=-2, axis2=-1)
    return eta * (G + np.swapaxes(G, -1, -2)) + eta_v * div[..., None, None] * np.eye(n)


def total_stress(p, tau):
    """sigma = -p I + tau."""
    tau = np.asarray(tau, dtype=float)
    n = tau.shape[-1]
    return -np.asarray(p, dtype=float)[..., None, None] * np.eye(n) + tau


def viscous_dissipation(tau, grad_v):
    """The double contraction tau : grad v."""
    return np.einsum("...ij,...ij->...", np.asarray(tau, dtype=float), np.asarray(grad_v, dtype=float))


def viscous_dissipation_closed(grad_v, eta: float, eta_v: float):
    """(eta/2)|grad v + grad v^T|^2 + eta_v |div v|^2."""
    G = np.asarray(grad_v, dtype=float)
    sym = G + np.swapaxes(G, -1, -2)
    div = np.trace(G, axis1=-2, axis2=-1)
    return 0.5 * eta * np.sum(sym**2, axis=(-2, -1)) + eta_v * div**2


def heat_flux(grad_T, phi, i, chibar_mix, j, kappa):
    """Extended Fourier law q = -kappa grad T - phi i + sum_l chi_bar_mix_l j_l.

    ``kappa`` is a scalar, or an n x n tensor when ``grad_T`` (and ``i``,
    ``j``) carry a trailing vector axis of length n.
    """
    grad_T = np.asarray(grad_T, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    chibar_mix = np.asarray(chibar_mix, dtype=float)
    j = np.asarray(j, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if kappa.ndim == 2:
        cond = -np.einsum("ij,...j->...i", kappa, grad_T)
        return cond - phi[..., None] * np.asarray(i) + np.sum(chibar_mix[..., None] * j, axis=0)
    return -kappa * grad_T - phi * np.asarray(i) + np.sum(chibar_mix * j, axis=0)
