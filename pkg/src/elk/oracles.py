"""Closed-form reference solutions.

Nothing here imports the solver or constitutive code; every formula is written
out from scratch so the references stay independent of what they check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

LINEAR_REGIME_LIMIT = 0.2


class OracleValidityWarning(UserWarning):
    """An oracle was evaluated outside the range where it is accurate."""


@dataclass(frozen=True)
class OracleSpec:
    """Tagged oracle parameters, as declared in a scenario."""

    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("heat_kernel", "boltzmann", "debye", "reaction_equilibrium")
    REQUIRED = {"heat_kernel": ("species", "sigma0"), "reaction_equilibrium": ("reactant", "product")}

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown oracle kind {self.kind!r}; expected one of {self.KINDS}")
        missing = [k for k in self.REQUIRED.get(self.kind, ()) if k not in self.params]
        if missing:
            raise ValueError(f"oracle {self.kind!r} needs parameter {missing[0]!r}")


def heat_kernel(x, t, D, sigma0, mass=1.0, center=0.0):
    """Gaussian of variance sigma0^2 + 2 D t and total integral ``mass``."""
    if t < 0 or D <= 0:
        raise ValueError("heat_kernel needs t >= 0 and D > 0")
    var = sigma0**2 + 2.0 * D * t
    if var <= 0:
        raise ValueError("zero variance: the kernel is a point mass")
    x = np.asarray(x, dtype=float)
    return mass / math.sqrt(2.0 * math.pi * var) * np.exp(-((x - center) ** 2) / (2.0 * var))


def heat_kernel_periodic(x, t, D, sigma0, length, mass=1.0, center=0.0, images=8):
    """Heat kernel on a periodic interval, summed over ``images`` copies each side."""
    out = np.zeros_like(np.asarray(x, dtype=float))
    for k in range(-images, images + 1):
        out += heat_kernel(x, t, D, sigma0, mass, center + k * length)
    return out


def boltzmann_profile(phi, z, T, y_inf, e=1.602176634e-19, k_B=1.380649e-23):
    """y(x) = y_inf exp(-e z phi(x) / (k_B T))."""
    return y_inf * np.exp(-e * z * np.asarray(phi, dtype=float) / (k_B * np.asarray(T, dtype=float)))


@dataclass(frozen=True)
class DebyeLayer:
    zeta: float
    debye_length: float
    linear: bool

    def potential(self, x):
        return self.zeta * np.exp(-np.asarray(x, dtype=float) / self.debye_length)


def debye_length(eps_r, T, valencies, n_inf, e=1.602176634e-19, k_B=1.380649e-23, eps0=8.8541878128e-12):
    """lambda_D = sqrt(eps_r eps0 k_B T / sum_l e^2 z_l^2 n_l)."""
    s = sum(e * e * zl * zl * nl for zl, nl in zip(valencies, n_inf))
    if s <= 0:
        raise ValueError("screening needs at least one charged species with n > 0")
    return math.sqrt(eps_r * eps0 * k_B * T / s)


def debye_layer(zeta, eps_r, T, valencies, n_inf, e=1.602176634e-19, k_B=1.380649e-23, eps0=8.8541878128e-12):
    """Linearized screened potential phi(x) = zeta exp(-x / lambda_D).

    Emits OracleValidityWarning when |e zeta / (k_B T)| exceeds 0.2.
    """
    lam = debye_length(eps_r, T, valencies, n_inf, e, k_B, eps0)
    linear = abs(e * zeta / (k_B * T)) <= LINEAR_REGIME_LIMIT
    if not linear:
        warnings.warn(
            f"|e zeta/(k_B T)| = {abs(e * zeta / (k_B * T)):.3g} is outside the linear regime",
            OracleValidityWarning,
            stacklevel=2,
        )
    return DebyeLayer(zeta, lam, linear)


@dataclass(frozen=True)
class BinaryEquilibrium:
    y_a: float
    y_b: float
    limit: bool = False


def reaction_equilibrium(K):
    """Equilibrium of A <=> B with y_B / y_A = K and y_A + y_B = 1.

    ``K = inf`` returns the limit (0, 1) with ``limit=True``.
    """
    if K <= 0 or math.isnan(K):
        raise ValueError("equilibrium constant must be > 0")
    if math.isinf(K):
        return BinaryEquilibrium(0.0, 1.0, True)
    y_a = 1.0 / (1.0 + K)
    return BinaryEquilibrium(y_a, K * y_a, False)


def fit_decay_length(x, phi, mask=None):
    """Least-squares fit of log|phi| against x; returns -1/slope."""
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sel = np.abs(phi) > 0 if mask is None else mask & (np.abs(phi) > 0)
    slope, _ = np.polyfit(x[sel], np.log(np.abs(phi[sel])), 1)
    return -1.0 / slope


def observed_order(h, err):
    """Least-squares slope of log(err) against log(h)."""
    slope, _ = np.polyfit(np.log(np.asarray(h, dtype=float)), np.log(np.asarray(err, dtype=float)), 1)
    return float(slope)
