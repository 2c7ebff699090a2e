"""Grid, boundary conditions and the mixture state on a 1-D cell-centred mesh."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .chemistry import Y_MIN, Species, masses, valencies
from .errors import ConfigurationError, StateError
from .thermo import PhysicalConstants

log = logging.getLogger(__name__)

SUM_TOL = 1e-10
RENORM_TOL = 1e-6


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centred grid on [x0, x0 + length]."""

    n_cells: int
    length: float
    x0: float = 0.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ConfigurationError(f"cell count must be an integer >= 4, got {self.n_cells}")
        if not self.length > 0:
            raise ConfigurationError(f"domain length must be > 0, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def faces(self) -> np.ndarray:
        return self.x0 + np.arange(self.n_cells + 1) * self.dx


@dataclass(frozen=True)
class BoundaryCondition:
    """Condition at one end of one field."""

    kind: str
    value: float | tuple | None = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "noflux", "periodic"):
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and self.value is None:
            raise ConfigurationError("dirichlet boundary needs a value")

    @classmethod
    def dirichlet(cls, value) -> "BoundaryCondition":
        if np.ndim(value):
            value = tuple(float(v) for v in value)
        return cls("dirichlet", value)

    @classmethod
    def noflux(cls) -> "BoundaryCondition":
        return cls("noflux")

    @classmethod
    def periodic(cls) -> "BoundaryCondition":
        return cls("periodic")


@dataclass(frozen=True)
class FieldBC:
    """Left and right boundary conditions of a field."""

    left: BoundaryCondition
    right: BoundaryCondition

    def __post_init__(self):
        if (self.left.kind == "periodic") != (self.right.kind == "periodic"):
            raise ConfigurationError("periodic must be set on both ends or neither")

    @property
    def periodic(self) -> bool:
        return self.left.kind == "periodic"

    @property
    def closed(self) -> bool:
        """True if no mass can cross either end."""
        return all(b.kind in ("noflux", "periodic") for b in (self.left, self.right))

    @classmethod
    def both(cls, bc: BoundaryCondition) -> "FieldBC":
        return cls(bc, bc)


@dataclass(frozen=True)
class BoundarySet:
    """Boundary conditions of the potential and of the solute mass fractions.

    A Dirichlet value for ``species`` is a tuple of solute mass fractions
    (length L-1); the solvent follows from the sum condition.
    """

    phi: FieldBC = field(default_factory=lambda: FieldBC.both(BoundaryCondition.noflux()))
    species: FieldBC = field(default_factory=lambda: FieldBC.both(BoundaryCondition.noflux()))

    @property
    def periodic(self) -> bool:
        return self.phi.periodic or self.species.periodic

    def __post_init__(self):
        if self.phi.periodic != self.species.periodic:
            raise ConfigurationError("periodicity must agree between potential and species")


@dataclass
class MixtureState:
    """Per-cell fields.

    Attributes
    ----------
    rho : (N,) total density, kg/m^3
    y : (L, N) mass fractions, solvent last
    phi : (N,) electric potential, V
    v : (N,) barycentric velocity, m/s
    T : (N,) temperature, K
    p : (N,) pressure, J/m^3
    time : float
    """

    rho: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    T: np.ndarray
    p: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.y = np.array(self.y, dtype=float, ndmin=2)
        N = self.y.shape[1]
        for name in ("rho", "phi", "v", "T", "p"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim == 0:
                a = np.full(N, float(a))
            else:
                a = a.copy()
            if a.shape != (N,):
                raise StateError(f"field {name} has shape {a.shape}, expected ({N},)")
            setattr(self, name, a)

    @property
    def n_cells(self) -> int:
        return self.y.shape[1]

    @property
    def n_species(self) -> int:
        return self.y.shape[0]

    def copy(self) -> "MixtureState":
        return replace(self, y=self.y.copy())

    def check(self, tol: float = SUM_TOL) -> None:
        """Raise StateError if an invariant is violated."""
        for name in ("rho", "phi", "v", "T", "p"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise StateError(f"field {name} has non-finite values")
        if not np.all(np.isfinite(self.y)):
            raise StateError("mass fractions have non-finite values")
        if np.any(self.y < 0):
            raise StateError(f"negative mass fraction (min {self.y.min():.3e})")
        dev = np.max(np.abs(self.y.sum(axis=0) - 1.0))
        if dev > tol:
            raise StateError(f"mass fractions do not sum to 1 (max deviation {dev:.3e})")
        if np.any(self.rho <= 0):
            raise StateError("density must be > 0")
        if np.any(self.T <= 0):
            raise StateError("temperature must be > 0")


def derived_fields(state: MixtureState, species: Sequence[Species], constants: PhysicalConstants) -> dict:
    """Partial densities, number densities, free charge, specific volume and y_L from solutes."""
    state.check()
    m = masses(species)[:, None]
    rho_l = state.rho * state.y
    n_l = rho_l / m
    rho_E = constants.e * (valencies(species)[:, None] * n_l).sum(axis=0)
    return {
        "rho_l": rho_l,
        "n_l": n_l,
        "rho_E": rho_E,
        "nu": 1.0 / state.rho,
        "y_solvent": 1.0 - state.y[:-1].sum(axis=0),
    }


def renormalize(state: MixtureState, tol: float = RENORM_TOL) -> MixtureState:
    """Clamp mass fractions at Y_MIN and rescale each cell to sum 1.

    Raises StateError if a component is below ``-tol`` or a cell sum is off by
    more than ``tol``.
    """
    y = state.y
    if np.any(y < -tol):
        raise StateError(f"mass fraction {y.min():.3e} below -{tol:g}")
    dev = np.max(np.abs(y.sum(axis=0) - 1.0))
    if dev > tol:
        raise StateError(f"mass-fraction sum deviates by {dev:.3e} > {tol:g}")
    yc = np.maximum(y, Y_MIN)
    total = yc.sum(axis=0)
    # cells already normalized to roundoff are left alone, which keeps the map idempotent
    off = np.abs(total - 1.0) > 8 * np.finfo(float).eps * y.shape[0]
    yn = np.where(off, yc / total, yc)
    delta = np.max(np.abs(yn - y))
    if delta > 0:
        log.debug("renormalize: max change %.3e", delta)
    out = state.copy()
    out.y = yn
    return out
