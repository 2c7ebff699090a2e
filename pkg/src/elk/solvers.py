"""Numerical engines on the 1-D finite-volume grid.

Layout: unknowns live at cell centres, fluxes at the N+1 faces. Species
transport is backward Euler with exponentially fitted (Scharfetter-Gummel)
face fluxes; potential and transport are coupled by a Gummel fixed point
whose Poisson half-step uses a Boltzmann-predicted charge. Reactions are
Strang-split around the transport step and integrated by RK4.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import solve_banded

from .chemistry import ReactionNetwork, Species, check_species, diffusivities, masses, valencies
from .constitutive import free_charge
from .errors import ConfigurationError, IncompatibleBoundaryError, SolverError, StateError
from .state import BoundarySet, FieldBC, Grid1D, MixtureState, renormalize
from .thermo import MaterialParams, PhysicalConstants

log = logging.getLogger(__name__)

MODELS = ("general", "pnp", "dpnp")
FLUX_SCHEMES = ("exponential", "central")


@dataclass(frozen=True)
class NumericsConfig:
    """Time stepping and iteration controls."""

    dt: float = 1e-3
    t_end: float = 1.0
    gummel_tol: float = 1e-10
    gummel_max_iter: int = 100
    reaction_substeps: int = 4
    steady_tol: float = 1e-10
    steady_max_steps: int = 10000
    flux: str = "exponential"
    dt_min_factor: float = 2.0**-10
    output_every: int = 1

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end >= 0:
            raise ConfigurationError("dt must be > 0 and t_end >= 0")
        if not (self.gummel_tol > 0 and self.steady_tol > 0):
            raise ConfigurationError("tolerances must be > 0")
        if self.gummel_max_iter < 1 or self.reaction_substeps < 1 or self.output_every < 1:
            raise ConfigurationError("iteration counts must be >= 1")
        if self.flux not in FLUX_SCHEMES:
            raise ConfigurationError(f"flux scheme must be one of {FLUX_SCHEMES}")


@dataclass(frozen=True)
class VelocityClosure:
    """Barycentric velocity model: ``rest``, ``prescribed`` or ``darcy``.

    A prescribed velocity is a constant or a callable of time; 1-D
    incompressibility leaves no room for spatial variation.
    """

    kind: str = "rest"
    value: float | Callable[[float], float] = 0.0
    permeability: float = 1.0
    viscosity: float = 1.0
    porosity: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rest", "prescribed", "darcy"):
            raise ConfigurationError(f"unknown velocity closure {self.kind!r}")
        if self.kind == "darcy":
            if not self.viscosity > 0:
                raise ConfigurationError("darcy closure needs viscosity > 0")
            if not self.permeability > 0:
                raise ConfigurationError("darcy closure needs permeability > 0")
            if not 0 < self.porosity <= 1:
                raise ConfigurationError("porosity must lie in (0, 1]")

    def prescribed_at(self, t: float) -> float:
        return float(self.value(t)) if callable(self.value) else float(self.value)


@dataclass(frozen=True)
class Problem:
    """Everything except the state needed to advance a mixture."""

    grid: Grid1D
    species: tuple
    network: ReactionNetwork
    material: MaterialParams = field(default_factory=MaterialParams)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    bcs: BoundarySet = field(default_factory=BoundarySet)
    model: str = "pnp"
    closure: VelocityClosure = field(default_factory=VelocityClosure)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        check_species(self.species)
        if self.model not in MODELS:
            raise ConfigurationError(f"model must be one of {MODELS}")
        if self.network.n_species != len(self.species):
            raise ConfigurationError("reaction network and species list disagree in L")
        if self.model == "dpnp" and self.closure.kind != "darcy":
            raise ConfigurationError("the dpnp model needs the darcy velocity closure")
        sbc = self.bcs.species
        for b in (sbc.left, sbc.right):
            if b.kind == "dirichlet" and len(np.atleast_1d(b.value)) != len(self.species) - 1:
                raise ConfigurationError("species dirichlet values must list the L-1 solute fractions")

    @property
    def theta(self) -> float:
        return self.closure.porosity if self.model == "dpnp" else 1.0

    @property
    def masses(self) -> np.ndarray:
        return masses(self.species)

    @property
    def valencies(self) -> np.ndarray:
        return valencies(self.species)

    @property
    def diffusivities(self) -> np.ndarray:
        return diffusivities(self.species)

    @property
    def betas(self) -> np.ndarray:
        return self.network.betas

    def eps_cells(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.material.eps_r, dtype=float), (self.grid.n_cells,)).copy()


# --------------------------------------------------------------------------
# linear algebra helpers


def _solve_tridiagonal(lower, diag, upper, rhs, periodic: bool):
    """Solve a (cyclic) tridiagonal system.

    ``lower[k]`` couples row k to k-1 and ``upper[k]`` row k to k+1; in the
    periodic case ``lower[0]`` and ``upper[-1]`` are the wrap-around entries.
    """
    n = diag.size
    if not periodic:
        ab = np.zeros((3, n))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        try:
            return solve_banded((1, 1), ab, rhs)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError(f"tridiagonal solve failed: {exc}") from exc
    # Sherman-Morrison: split off the two corner entries as a rank-one update
    alpha, beta = upper[-1], lower[0]
    gamma = -diag[0] if diag[0] != 0 else -1.0
    d = diag.astype(float).copy()
    d[0] -= gamma
    d[-1] -= alpha * beta / gamma
    u = np.zeros(n)
    u[0], u[-1] = gamma, alpha
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = d
    ab[2, :-1] = lower[1:]
    try:
        sol = solve_banded((1, 1), ab, np.column_stack([rhs, u]))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"cyclic tridiagonal solve failed: {exc}") from exc
    yv, zv = sol[:, 0], sol[:, 1]
    vy = yv[0] + beta / gamma * yv[-1]
    vz = zv[0] + beta / gamma * zv[-1]
    x = yv - vy / (1.0 + vz) * zv
    if not np.all(np.isfinite(x)):
        raise SolverError("periodic solve produced non-finite values")
    return x


def _cyclic_matrix(lower, diag, upper):
    n = diag.size
    rows = np.concatenate([np.arange(n), np.arange(n), np.arange(n)])
    cols = np.concatenate([np.arange(n), (np.arange(n) - 1) % n, (np.arange(n) + 1) % n])
    vals = np.concatenate([diag, lower, upper])
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


def bernoulli(x):
    """B(x) = x / (exp(x) - 1), with B(0) = 1 and a series near zero."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small]
    out[small] = 1.0 - xs / 2.0 + xs * xs / 12.0
    xl = x[~small]
    with np.errstate(over="ignore"):
        out[~small] = xl / np.expm1(xl)
    return out


def face_coefficients(u, D, h, scheme: str = "exponential"):
    """Return (a, b) so that the face flux is F = a * c_left - b * c_right.

    ``u`` is the face transport velocity, ``D`` the diffusivity, ``h`` the
    distance between the two nodes.
    """
    u = np.asarray(u, dtype=float)
    if scheme == "central":
        return u / 2.0 + D / h, -u / 2.0 + D / h
    if D == 0:
        return np.maximum(u, 0.0), np.maximum(-u, 0.0)
    P = u * h / D
    return D / h * bernoulli(-P), D / h * bernoulli(P)


# --------------------------------------------------------------------------
# Poisson


def _face_eps(eps: np.ndarray, periodic: bool) -> np.ndarray:
    """Harmonic means at the N+1 faces; boundary faces take the adjacent cell value."""
    ef = np.empty(eps.size + 1)
    ef[1:-1] = 2.0 * eps[:-1] * eps[1:] / (eps[:-1] + eps[1:])
    if periodic:
        ef[0] = ef[-1] = 2.0 * eps[-1] * eps[0] / (eps[-1] + eps[0])
    else:
        ef[0], ef[-1] = eps[0], eps[-1]
    return ef


def poisson_operator(grid: Grid1D, eps_r, bc: FieldBC):
    """Assemble the three-point operator of -(eps_r phi')'.

    Returns ``(lower, diag, upper, rhs_bc, needs_gauge)`` where ``rhs_bc`` holds
    the Dirichlet contributions and ``needs_gauge`` flags a singular operator
    (periodic or no Dirichlet end).
    """
    n, h = grid.n_cells, grid.dx
    eps = np.broadcast_to(np.asarray(eps_r, dtype=float), (n,))
    ef = _face_eps(eps, bc.periodic)
    h2 = h * h
    lower = np.zeros(n)
    upper = np.zeros(n)
    diag = np.zeros(n)
    rhs = np.zeros(n)
    # interior faces
    w = ef[1:-1] / h2
    diag[:-1] += w
    diag[1:] += w
    upper[:-1] -= w
    lower[1:] -= w
    if bc.periodic:
        w0 = ef[0] / h2
        diag[0] += w0
        diag[-1] += w0
        lower[0] -= w0
        upper[-1] -= w0
    else:
        for end, b in ((0, bc.left), (-1, bc.right)):
            if b.kind == "dirichlet":
                wb = ef[end] / (h * h / 2.0)
                k = 0 if end == 0 else n - 1
                diag[k] += wb
                rhs[k] += wb * float(b.value)
    needs_gauge = bc.periodic or not any(b.kind == "dirichlet" for b in (bc.left, bc.right))
    return lower, diag, upper, rhs, needs_gauge


def _gauged_solve(lower, diag, upper, rhs, periodic):
    """Zero-mean solution of the singular operator (periodic or pure Neumann).

    The operator annihilates constants and has zero column sums, so the
    right-hand side is projected to zero mean (the Lagrange multiplier of the
    bordered system), one node is pinned, and the result is re-centred.
    """
    r = np.asarray(rhs, dtype=float) - np.mean(rhs)
    lo, d, up = lower.copy(), diag.copy(), upper.copy()
    lo[0] = 0.0
    up[0] = 0.0
    d[0] = 1.0
    r[0] = 0.0
    if periodic:
        x = _solve_tridiagonal(lo, d, up, r, True)
    else:
        x = _solve_tridiagonal(lo, d, up, r, False)
    return x - x.mean()


def check_compatibility(grid: Grid1D, rho_E, bc: FieldBC, rtol: float = 1e-10):
    """Raise IncompatibleBoundaryError if a gauge-fixed problem carries net charge."""
    _, _, _, _, needs_gauge = poisson_operator(grid, 1.0, bc)
    if needs_gauge:
        q = np.asarray(rho_E, dtype=float)
        net = abs(q.sum())
        if net > rtol * max(np.abs(q).sum(), np.finfo(float).tiny) and net > 0:
            raise IncompatibleBoundaryError(
                f"net charge {q.sum() * grid.dx:.3e} with no Dirichlet potential: Poisson problem has no solution"
            )


def poisson_solve(grid: Grid1D, rho_E, eps_r, bc: FieldBC, constants: PhysicalConstants, theta: float = 1.0):
    """Solve -(eps_r phi')' = theta rho_E / eps0 with cell-centred finite volumes.

    Dirichlet values sit on the boundary faces, half a cell from the first
    unknown. Without a Dirichlet end the solution is fixed to zero mean, and
    the total charge must vanish.
    """
    rho_E = np.asarray(rho_E, dtype=float)
    lower, diag, upper, rhs_bc, needs_gauge = poisson_operator(grid, eps_r, bc)
    rhs = theta * rho_E / constants.eps0 + rhs_bc
    if needs_gauge:
        check_compatibility(grid, rho_E, bc)
        return _gauged_solve(lower, diag, upper, rhs, bc.periodic)
    return _solve_tridiagonal(lower, diag, upper, rhs, False)


def poisson_residual(grid: Grid1D, phi, rho_E, eps_r, bc: FieldBC, constants: PhysicalConstants, theta: float = 1.0):
    """Relative residual of the assembled Poisson system."""
    lower, diag, upper, rhs_bc, needs_gauge = poisson_operator(grid, eps_r, bc)
    A = _cyclic_matrix(lower, diag, upper)
    if not bc.periodic:
        A = sp.diags([lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csc")
    rhs = theta * np.asarray(rho_E) / constants.eps0 + rhs_bc
    r = A @ phi - rhs
    if needs_gauge:
        r = r - r.mean()
    scale = np.abs(A) @ np.abs(phi) + np.abs(rhs)
    return float(np.max(np.abs(r) / np.where(scale > 0, scale, 1.0)))


def _nonlinear_poisson(problem: Problem, phi0, charge_weights, number, z_eff, T, blend: float = 1.0):
    """Newton solve of -(eps phi')' = theta/eps0 sum_l q_l n_l exp(-e z_l (phi - phi0)/(k_B T)).

    ``charge_weights`` q_l multiply the number densities ``number`` (L-1, N);
    the constant part from an electrically charged solvent enters through
    ``charge_weights`` too via the caller. ``blend`` in [0, 1] scales the
    predicted response: 1 is the equilibrium (Boltzmann) predictor, 0 plain
    lagged charge. Returns the new potential.
    """
    grid, c = problem.grid, problem.constants
    theta = problem.theta
    lower, diag, upper, rhs_bc, needs_gauge = poisson_operator(grid, problem.eps_cells(), problem.bcs.phi)
    kT = c.k_B * T
    phi = phi0 - phi0.mean() if needs_gauge else phi0.copy()
    phi0 = phi.copy()
    A = None
    for _ in range(50):
        expo = np.exp(np.clip(-c.e * z_eff[:, None] * (phi - phi0) / kT, -200.0, 200.0))
        base = charge_weights[:, None] * number
        rho = (base * (1.0 + blend * (expo - 1.0))).sum(axis=0)
        drho = (blend * base * expo * (-c.e * z_eff[:, None] / kT)).sum(axis=0)
        if A is None:
            A = _cyclic_matrix(lower, diag, upper) if problem.bcs.phi.periodic else sp.diags(
                [lower[1:], diag, upper[:-1]], [-1, 0, 1], format="csc"
            )
        F = A @ phi - rhs_bc - theta * rho / c.eps0
        jd = diag - theta * drho / c.eps0
        if needs_gauge:
            dphi = _gauged_solve(lower, jd, upper, -F + F.mean(), problem.bcs.phi.periodic)
        else:
            dphi = _solve_tridiagonal(lower, jd, upper, -F, False)
        # damp large updates to a few thermal voltages
        vt = float(np.min(kT)) / c.e
        big = np.max(np.abs(dphi)) / vt
        if big > 5.0:
            dphi *= 5.0 / big
        phi = phi + dphi
        if np.max(np.abs(dphi)) <= 1e-13 * vt + 1e-15 * np.max(np.abs(phi)):
            break
    return phi


# --------------------------------------------------------------------------
# transport


def _face_gradients(grid: Grid1D, f, bc_left, bc_right, periodic):
    """Face differences (N+1,) of a cell field; boundary faces use the BC (half cell)."""
    h = grid.dx
    g = np.zeros(f.shape[:-1] + (f.shape[-1] + 1,))
    g[..., 1:-1] = np.diff(f, axis=-1) / h
    if periodic:
        g[..., 0] = g[..., -1] = (f[..., 0] - f[..., -1]) / h
    else:
        if bc_left is not None:
            g[..., 0] = (f[..., 0] - bc_left) / (h / 2)
        if bc_right is not None:
            g[..., -1] = (bc_right - f[..., -1]) / (h / 2)
    return g


def _face_average(f, periodic, left=None, right=None):
    out = np.empty(f.shape[:-1] + (f.shape[-1] + 1,))
    out[..., 1:-1] = 0.5 * (f[..., :-1] + f[..., 1:])
    if periodic:
        out[..., 0] = out[..., -1] = 0.5 * (f[..., 0] + f[..., -1])
    else:
        out[..., 0] = f[..., 0] if left is None else left
        out[..., -1] = f[..., -1] if right is None else right
    return out


def face_electric_field(problem: Problem, phi) -> np.ndarray:
    """E at the N+1 faces; zero on no-flux potential ends."""
    bc = problem.bcs.phi
    lv = float(bc.left.value) if bc.left.kind == "dirichlet" else None
    rv = float(bc.right.value) if bc.right.kind == "dirichlet" else None
    return -_face_gradients(problem.grid, np.asarray(phi, dtype=float), lv, rv, bc.periodic)


def _species_boundary_values(problem: Problem):
    sbc = problem.bcs.species
    left = np.asarray(sbc.left.value, dtype=float) if sbc.left.kind == "dirichlet" else None
    right = np.asarray(sbc.right.value, dtype=float) if sbc.right.kind == "dirichlet" else None
    return left, right


def drift_velocities(problem: Problem, state: MixtureState, phi, y_lag) -> np.ndarray:
    """Face drift velocities w_l (L-1, N+1) so that the solute flux is
    F_l = (v + w_l) rho_l - D_l d rho_l.

    The general model lags the solvent and thermal terms at ``y_lag``.
    """
    c = problem.constants
    periodic = problem.bcs.periodic
    E = face_electric_field(problem, phi)
    T_face = _face_average(state.T, periodic)
    D = problem.diffusivities[:-1, None]
    z = problem.valencies
    m = problem.masses
    if problem.model in ("pnp", "dpnp"):
        return c.e * D * z[:-1, None] / (c.k_B * T_face) * E
    left, right = _species_boundary_values(problem)
    yl_left = None if left is None else 1.0 - left.sum()
    yl_right = None if right is None else 1.0 - right.sum()
    ys_lag = np.maximum(y_lag, 1e-300)
    yL = ys_lag[-1]
    yL_face = _face_average(yL, periodic, yl_left, yl_right)
    dyL = _face_gradients(problem.grid, yL, yl_left, yl_right, periodic)
    lnrho = np.log(state.rho)
    dlnrho = _face_gradients(problem.grid, lnrho, lnrho[0], lnrho[-1], periodic)
    dlnT = _face_gradients(problem.grid, np.log(state.T), np.log(state.T[0]), np.log(state.T[-1]), periodic)
    beta = problem.betas
    lny_face = _face_average(
        np.log(ys_lag[:-1]),
        periodic,
        None if left is None else np.log(np.maximum(left, 1e-300)),
        None if right is None else np.log(np.maximum(right, 1e-300)),
    )
    mr = m[:-1, None] / m[-1]
    w = D * (
        dlnrho
        + mr / yL_face * dyL
        + c.e / (c.k_B * T_face) * (z[:-1, None] - mr * z[-1]) * E
        - (beta[:-1, None] + lny_face) * dlnT
        + mr * (beta[-1] + np.log(yL_face)) * dlnT
    )
    return w


def transport_step(problem: Problem, state: MixtureState, dt: float, phi, v: float, y_lag=None) -> np.ndarray:
    """One backward-Euler transport step of the solute densities.

    Returns the new mass fractions (L, N) with the solvent closing the sum.
    Face fluxes use the drift velocities at ``phi`` (and lagged fractions for
    the general model).
    """
    grid, h = problem.grid, problem.grid.dx
    n = grid.n_cells
    periodic = problem.bcs.periodic
    theta = problem.theta
    y_lag = state.y if y_lag is None else y_lag
    w = drift_velocities(problem, state, phi, y_lag)
    u = v + w
    left, right = _species_boundary_values(problem)
    sbc = problem.bcs.species
    rho = state.rho
    D = problem.diffusivities
    y_new = np.empty_like(state.y)
    for l in range(problem.network.n_species - 1):
        a, b = face_coefficients(u[l], D[l], h, problem.numerics.flux)
        diag = np.full(n, theta * h / dt)
        lower = np.zeros(n)
        upper = np.zeros(n)
        rhs = theta * h / dt * rho * state.y[l]
        # interior faces i = 1..n-1 between cells i-1 and i
        diag[:-1] += a[1:-1]
        upper[:-1] -= b[1:-1]
        diag[1:] += b[1:-1]
        lower[1:] -= a[1:-1]
        if periodic:
            diag[-1] += a[0]
            upper[-1] -= b[0]
            diag[0] += b[0]
            lower[0] -= a[0]
        else:
            if sbc.left.kind == "dirichlet":
                al, bl = face_coefficients(u[l, :1], D[l], h / 2, problem.numerics.flux)
                diag[0] += bl[0]
                rhs[0] += al[0] * rho[0] * left[l]
            if sbc.right.kind == "dirichlet":
                ar, br = face_coefficients(u[l, -1:], D[l], h / 2, problem.numerics.flux)
                diag[-1] += ar[0]
                rhs[-1] += br[0] * rho[-1] * right[l]
        rho_l = _solve_tridiagonal(lower, diag, upper, rhs, periodic)
        y_new[l] = rho_l / rho
    y_new[-1] = 1.0 - y_new[:-1].sum(axis=0)
    return y_new


def face_fluxes(problem: Problem, state: MixtureState, phi=None, v=None) -> np.ndarray:
    """Solute face fluxes (L-1, N+1) of the discrete scheme, advective part included."""
    phi = state.phi if phi is None else phi
    v = float(np.mean(state.v)) if v is None else v
    h = problem.grid.dx
    periodic = problem.bcs.periodic
    u = v + drift_velocities(problem, state, phi, state.y)
    left, right = _species_boundary_values(problem)
    sbc = problem.bcs.species
    rho_l = state.rho * state.y[:-1]
    F = np.zeros_like(u)
    for l in range(rho_l.shape[0]):
        D = problem.diffusivities[l]
        a, b = face_coefficients(u[l], D, h, problem.numerics.flux)
        F[l, 1:-1] = a[1:-1] * rho_l[l, :-1] - b[1:-1] * rho_l[l, 1:]
        if periodic:
            F[l, 0] = F[l, -1] = a[0] * rho_l[l, -1] - b[0] * rho_l[l, 0]
        else:
            if sbc.left.kind == "dirichlet":
                al, bl = face_coefficients(u[l, :1], D, h / 2, problem.numerics.flux)
                F[l, 0] = al[0] * state.rho[0] * left[l] - bl[0] * rho_l[l, 0]
            if sbc.right.kind == "dirichlet":
                ar, br = face_coefficients(u[l, -1:], D, h / 2, problem.numerics.flux)
                F[l, -1] = ar[0] * rho_l[l, -1] - br[0] * state.rho[-1] * right[l]
    return F


# --------------------------------------------------------------------------
# reactions and velocity


def reaction_substep(
    problem: Problem,
    y,
    rho,
    dt: float,
    substeps: int | None = None,
    observer: Callable[[np.ndarray], None] | None = None,
    max_doublings: int = 20,
) -> np.ndarray:
    """RK4 integration of dy_l/dt = r_l(y) / rho over ``dt``.

    The substep count doubles while any fraction changes by more than 0.1
    in one substep or turns negative. ``observer`` sees every accepted
    substep's fractions.
    """
    from .chemistry import mass_production_rates

    if problem.network.n_reactions == 0 or dt == 0:
        return np.array(y, dtype=float)
    species, net = problem.species, problem.network
    rho = np.asarray(rho, dtype=float)
    n = problem.numerics.reaction_substeps if substeps is None else substeps

    def f(yy):
        return mass_production_rates(species, net, np.maximum(yy, 0.0)) / rho

    for _ in range(max_doublings):
        yk = np.array(y, dtype=float)
        h = dt / n
        ok = True
        accepted = []
        for _ in range(n):
            k1 = f(yk)
            k2 = f(yk + 0.5 * h * k1)
            k3 = f(yk + 0.5 * h * k2)
            k4 = f(yk + h * k3)
            step = h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            y_next = yk + step
            if np.max(np.abs(step)) > 0.1 or np.any(y_next < 0) or not np.all(np.isfinite(y_next)):
                ok = False
                break
            yk = y_next
            accepted.append(yk)
        if ok:
            if observer is not None:
                for a in accepted:
                    observer(a)
            return yk
        n *= 2
    raise SolverError("reaction substep did not resolve stiffness after repeated doubling")


def darcy_velocity(grad_p, rho_E, E, permeability: float, viscosity: float, project: bool = True):
    """v = K_H / mu (-grad p + rho_E E); the 1-D divergence-free projection is the mean."""
    if not viscosity > 0:
        raise ConfigurationError("dynamic viscosity must be > 0")
    raw = permeability / viscosity * (-np.asarray(grad_p, dtype=float) + np.asarray(rho_E) * np.asarray(E))
    return float(np.mean(raw)) if project else raw


def closure_velocity(problem: Problem, state: MixtureState, phi, t: float) -> float:
    cl = problem.closure
    if cl.kind == "rest":
        return 0.0
    if cl.kind == "prescribed":
        return cl.prescribed_at(t)
    h = problem.grid.dx
    edge = 2 if problem.grid.n_cells > 2 else 1
    if problem.bcs.periodic:
        gp = (np.roll(state.p, -1) - np.roll(state.p, 1)) / (2 * h)
        E = -(np.roll(phi, -1) - np.roll(phi, 1)) / (2 * h)
    else:
        gp = np.gradient(state.p, h, edge_order=edge)
        E = -np.gradient(phi, h, edge_order=edge)
    rho_E = free_charge(state.y, state.rho, problem.species, problem.constants)
    return darcy_velocity(gp, rho_E, E, cl.permeability, cl.viscosity)


# --------------------------------------------------------------------------
# coupling


@dataclass
class GummelInfo:
    iterations: int
    converged: bool
    dphi: float
    dy: float


def gummel_transport(problem: Problem, state: MixtureState, dt: float, t_new: float):
    """Couple Poisson and transport at t_new by Gummel fixed point.

    Returns ``(y, phi, v, info)``. Raises SolverError when the iteration does
    not converge within the configured iteration count.
    """
    c = problem.constants
    num = problem.numerics
    T = state.T
    vt = float(np.min(c.k_B * T / c.e))
    m, z = problem.masses, problem.valencies
    zL, mL = z[-1], m[-1]
    z_eff = z[:-1] - m[:-1] * zL / mL
    # rho_E = e z_L rho / m_L + sum_{l<L} e (z_l/m_l - z_L/m_L) rho y_l
    weights = c.e * (z[:-1] / m[:-1] - zL / mL)
    background = c.e * zL / mL * state.rho
    has_charge = np.any(z != 0)

    y_it = state.y.copy()
    phi = state.phi.copy()
    if has_charge:
        check_compatibility(problem.grid, free_charge(y_it, state.rho, problem.species, c), problem.bcs.phi)
        w_all = np.append(weights, 1.0)
        ze_all = np.append(z_eff, 0.0)
    linear = not has_charge and problem.model != "general" and problem.closure.kind != "darcy"
    hist_x, hist_g = [], []
    info = GummelInfo(0, False, np.inf, np.inf)
    for it in range(1, num.gummel_max_iter + 1):
        if has_charge:
            # solvent background is carried as an extra non-responding component
            n_all = np.vstack([state.rho * y_it[:-1], background[None, :]])
            tau = relaxation_time(problem, state.rho, y_it, T)
            g = _nonlinear_poisson(problem, phi, w_all, n_all, ze_all, T, blend=dt / (dt + tau))
            phi_new = _anderson(phi, g, hist_x, hist_g, ANDERSON_DEPTH)
        else:
            phi_new = phi if it > 1 else _linear_phi(problem, state, y_it)
        v = closure_velocity(problem, replace(state, y=y_it), phi_new, t_new)
        if v != 0.0 and np.ptp(state.rho) > 1e-12 * np.max(state.rho):
            raise ConfigurationError("a moving mixture needs uniform density in 1-D")
        y_new = transport_step(problem, state, dt, phi_new, v, y_lag=y_it)
        if not np.all(np.isfinite(y_new)):
            raise SolverError("transport produced non-finite values")
        dphi = float(np.max(np.abs(phi_new - phi))) / vt
        dy = float(np.max(np.abs(y_new - y_it)))
        phi, y_it = phi_new, y_new
        info = GummelInfo(it, False, dphi, dy)
        if (dphi <= num.gummel_tol and dy <= num.gummel_tol) or linear:
            info.converged = True
            return y_it, phi, v, info
    raise SolverError(
        f"Gummel iteration did not converge in {num.gummel_max_iter} iterations "
        f"(dphi/V_T={info.dphi:.3e}, dy={info.dy:.3e})"
    )


ANDERSON_DEPTH = 6


def _anderson(x, g, hist_x, hist_g, depth):
    """Anderson-accelerated update of the fixed point x = G(x), given g = G(x).

    ``hist_x`` and ``hist_g`` are updated in place.
    """
    hist_x.append(x.copy())
    hist_g.append(g.copy())
    if len(hist_x) > depth + 1:
        hist_x.pop(0)
        hist_g.pop(0)
    if len(hist_x) < 2:
        return g
    F = np.array(hist_g) - np.array(hist_x)
    dF = np.diff(F, axis=0).T
    dG = np.diff(np.array(hist_g), axis=0).T
    gamma, *_ = np.linalg.lstsq(dF, F[-1], rcond=None)
    out = g - dG @ gamma
    if not np.all(np.isfinite(out)):
        hist_x.clear()
        hist_g.clear()
        return g
    return out


def relaxation_time(problem: Problem, rho, y, T) -> float:
    """Dielectric relaxation time eps_r eps0 k_B T / sum_l e^2 z_l^2 n_l D_l (shortest over cells)."""
    c = problem.constants
    z, m, D = problem.valencies[:-1, None], problem.masses[:-1, None], problem.diffusivities[:-1, None]
    cond = (c.e**2 * z**2 * rho * y[:-1] / m * D).sum(axis=0) / (c.k_B * T)
    cond = np.max(cond)
    if cond <= 0:
        return np.inf
    return float(np.min(problem.eps_cells()) * c.eps0 / cond)


def _linear_phi(problem: Problem, state: MixtureState, y):
    rho_E = free_charge(y, state.rho, problem.species, problem.constants)
    return poisson_solve(problem.grid, rho_E, problem.eps_cells(), problem.bcs.phi, problem.constants, problem.theta)


def _single_step(problem: Problem, state: MixtureState, dt: float, observer=None) -> MixtureState:
    y = state.y
    if problem.network.n_reactions:
        y = reaction_substep(problem, y, state.rho, dt / 2, observer=observer)
    mid = replace(state, y=y)
    t_new = state.time + dt
    y, phi, v, _ = gummel_transport(problem, mid, dt, t_new)
    if np.min(y[-1]) <= 0:
        raise StateError("solvent fraction became nonpositive")
    if problem.network.n_reactions:
        y = reaction_substep(problem, y, state.rho, dt / 2, observer=observer)
    out = replace(state, y=y, phi=phi, v=np.full(problem.grid.n_cells, v), time=t_new)
    return renormalize(out)


def advance(problem: Problem, state: MixtureState, dt: float | None = None, observer=None, _depth: int = 0) -> MixtureState:
    """Advance by ``dt`` (default from numerics): reaction dt/2, Gummel transport dt, reaction dt/2.

    A failed step is retried as two half steps, recursively, until the step
    falls below ``dt_min_factor`` times the configured step; then SolverError.
    """
    dt = problem.numerics.dt if dt is None else dt
    try:
        return _single_step(problem, state, dt, observer)
    except (SolverError, StateError, FloatingPointError) as exc:
        if dt * 0.5 < problem.numerics.dt * problem.numerics.dt_min_factor:
            raise SolverError(f"step rejected down to dt={dt:.3e}: {exc}") from exc
        log.info("step of %.3e rejected (%s); halving", dt, exc)
        half = advance(problem, state, dt / 2, observer, _depth + 1)
        return advance(problem, half, dt / 2, observer, _depth + 1)


def simulate(problem: Problem, state: MixtureState, t_end: float | None = None, dt: float | None = None, observer=None):
    """Advance to ``t_end`` and return the list of states, the initial one included.

    Every ``output_every``-th state is kept; the final state always is.
    """
    num = problem.numerics
    t_end = num.t_end if t_end is None else t_end
    dt = num.dt if dt is None else dt
    n_steps = max(int(math.ceil((t_end - state.time) / dt - 1e-9)), 0)
    out = [state]
    cur = state
    for k in range(1, n_steps + 1):
        step = min(dt, t_end - cur.time) if k == n_steps else dt
        cur = advance(problem, cur, step, observer)
        if k % num.output_every == 0 or k == n_steps:
            out.append(cur)
    return out


@dataclass
class SteadyStateResult:
    state: MixtureState
    converged: bool
    steps: int
    residuals: list = field(default_factory=list)


def steady_state(problem: Problem, state: MixtureState, dt: float | None = None, tol: float | None = None,
                 max_steps: int | None = None) -> SteadyStateResult:
    """Iterate :func:`advance` until max(|dy|, |dphi|/V_T)/dt <= tol.

    Running out of steps is reported through ``converged=False``, not raised.
    """
    num = problem.numerics
    dt = num.dt if dt is None else dt
    tol = num.steady_tol if tol is None else tol
    max_steps = num.steady_max_steps if max_steps is None else max_steps
    vt = float(np.min(problem.constants.k_B * state.T / problem.constants.e))
    cur = state
    history = []
    for k in range(1, max_steps + 1):
        nxt = advance(problem, cur, dt)
        res = max(np.max(np.abs(nxt.y - cur.y)), np.max(np.abs(nxt.phi - cur.phi)) / vt) / dt
        history.append(float(res))
        cur = nxt
        if res <= tol:
            return SteadyStateResult(cur, True, k, history)
    return SteadyStateResult(cur, False, max_steps, history)
