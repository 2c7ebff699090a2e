"""Maxwell nondimensionalization and classification of the electrostatic limit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import scipy.constants as sc

from .errors import ConfigurationError, UnsupportedScalingError

DELTA_THRESHOLD = 1e-3


class Regime(str, Enum):
    ELECTROSTATIC = "Electrostatic"
    MAGNETICALLY_COUPLED = "MagneticallyCoupled"
    RELATIVISTIC = "Relativistic"


@dataclass(frozen=True)
class ScalingRegime:
    """Dimensionless groups of the scaled Maxwell equations.

    ``alpha`` is the exponent in delta_W = delta_V**alpha; it is recovered from
    the two deltas when not given explicitly.
    """

    delta_rho: float
    delta_i: float
    delta_V: float
    delta_W: float
    alpha: float
    regime: Regime
    threshold: float = DELTA_THRESHOLD

    @property
    def velocity_ratio(self) -> float:
        """delta_V / delta_W, reported but not asserted."""
        return self.delta_V / self.delta_W

    def as_dict(self) -> dict:
        return {
            "delta_rho": self.delta_rho,
            "delta_i": self.delta_i,
            "delta_V": self.delta_V,
            "delta_W": self.delta_W,
            "alpha": self.alpha,
            "regime": self.regime.value,
            "threshold": self.threshold,
            "delta_V_over_delta_W": self.velocity_ratio,
        }


def classify_limit(delta_V: float, alpha: float, threshold: float = DELTA_THRESHOLD) -> Regime:
    """Which limit system applies.

    delta_V above ``threshold`` is Relativistic. Otherwise alpha = 1 gives the
    magnetically coupled limit and alpha in [0, 1) the electrostatic one.
    """
    if not delta_V > 0:
        raise ConfigurationError(f"delta_V must be > 0, got {delta_V}")
    if alpha < 0:
        raise ConfigurationError(f"alpha must be >= 0, got {alpha}")
    if alpha > 1 and not math.isclose(alpha, 1.0, rel_tol=1e-12):
        raise UnsupportedScalingError(f"alpha = {alpha} > 1 is not treated")
    if delta_V > threshold:
        return Regime.RELATIVISTIC
    if math.isclose(alpha, 1.0, rel_tol=1e-12):
        return Regime.MAGNETICALLY_COUPLED
    return Regime.ELECTROSTATIC


def compute_deltas(
    E0: float,
    B0: float,
    length: float,
    tau: float,
    rho0: float | None = None,
    i0: float | None = None,
    alpha: float | None = None,
    threshold: float = DELTA_THRESHOLD,
) -> ScalingRegime:
    """Dimensionless groups from characteristic scales (SI).

    delta_V = l/(tau c0), delta_W = E0/(B0 c0); delta_rho = rho0 l/(eps0 E0) and
    delta_i = i0 l mu0 / B0 when rho0, i0 are given, else 1.
    """
    for name, val in (("E0", E0), ("B0", B0), ("length", length), ("tau", tau)):
        if not val > 0:
            raise ConfigurationError(f"{name} must be > 0, got {val}")
    c0 = sc.c
    dV = length / (tau * c0)
    dW = E0 / (B0 * c0)
    if rho0 is not None:
        if not rho0 > 0:
            raise ConfigurationError("rho0 must be > 0")
        d_rho = rho0 * length / (sc.epsilon_0 * E0)
    else:
        d_rho = 1.0
    if i0 is not None:
        if not i0 > 0:
            raise ConfigurationError("i0 must be > 0")
        d_i = i0 * length * sc.mu_0 / B0
    else:
        d_i = 1.0
    if alpha is None:
        # delta_W of order one or larger is the alpha = 0 case
        alpha = 0.0 if dV == 1.0 or dW >= 1.0 else max(math.log(dW) / math.log(dV), 0.0)
    regime = classify_limit(dV, alpha, threshold)
    return ScalingRegime(d_rho, d_i, dV, dW, alpha, regime, threshold)
