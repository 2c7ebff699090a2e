"""Entropy budgets, conservation reports and consistency residuals.

The auditor works on cell-centred fields with its own centred differences
and chain-rule potential gradients; it never reuses the solver's face
stencils, so identities checked here do not inherit the solver's structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .chemistry import Species, mass_production_rates, masses, valencies
from .constitutive import (
    drift_fluxes,
    free_charge,
    grad_elchem_pot_mix,
    heat_flux,
    pnp_fluxes,
)
from .oracles import observed_order
from .state import MixtureState
from .thermo import (
    MaterialParams,
    PhysicalConstants,
    average_mass,
    chem_pot_mix,
    chem_pot_pure,
    elchem_pot_mix,
    energy_mix_specific,
)

#: Relative slack of the second-law check, applied to the per-cell magnitude.
EPS_AUDIT = 1e-12

#: Relative tolerance of the formulation identities.
IDENTITY_TOL = 1e-10


def centered_gradient(f, h: float, periodic: bool):
    """d/dx along the last axis by second-order centred differences."""
    f = np.asarray(f, dtype=float)
    if periodic:
        return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * h)
    return np.gradient(f, h, axis=-1, edge_order=2)


@dataclass
class AuditFields:
    """Point values and gradients the budget is evaluated from.

    ``y`` and ``grad_y`` have shape (L, N); every other field has shape (N,).
    ``grad_v`` is d v / d x, the only entry of the 1-D velocity gradient.
    """

    rho: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    T: np.ndarray
    v: np.ndarray
    p: np.ndarray
    grad_rho: np.ndarray
    grad_y: np.ndarray
    grad_phi: np.ndarray
    grad_T: np.ndarray
    grad_v: np.ndarray
    grad_p: np.ndarray

    def __post_init__(self):
        self.y = np.array(self.y, dtype=float, ndmin=2)
        self.grad_y = np.array(self.grad_y, dtype=float, ndmin=2)
        n = self.y.shape[1]
        for f in fields(self):
            if f.name in ("y", "grad_y"):
                continue
            a = np.asarray(getattr(self, f.name), dtype=float)
            setattr(self, f.name, np.broadcast_to(a, (n,)).astype(float))


def fields_from_state(state: MixtureState, dx: float, periodic: bool) -> AuditFields:
    g = lambda f: centered_gradient(f, dx, periodic)  # noqa: E731
    return AuditFields(
        rho=state.rho,
        y=state.y,
        phi=state.phi,
        T=state.T,
        v=state.v,
        p=state.p,
        grad_rho=g(state.rho),
        grad_y=g(state.y),
        grad_phi=g(state.phi),
        grad_T=g(state.T),
        grad_v=g(state.v),
        grad_p=g(state.p),
    )


# --------------------------------------------------------------------------
# entropy budget

_DISS1 = ("electrothermal", "viscous", "thermo_mixing", "electrochemical")
_DISS2 = ("entropic_flux", "viscous", "mixing", "electrochemical")
_CHEM = ("chem_heat", "viscous", "chem_mixing", "chem_reaction", "joule")
_MIX = ("mix_electrothermal", "mix_thermo_mixing", "mix_reaction", "mix_joule")
_PURE = ("pure_heat", "viscous", "pure_diffusion", "pure_reaction")


@dataclass
class EntropyBudget:
    """Per-cell entropy production in every formulation, W/(K m^3).

    Electrochemical form (the reference total ``total``)::

        electrothermal  -grad T (q + phi i) / T^2
        viscous         tau : grad v / T
        thermo_mixing   -sum grad(chi_bar_l / T) j_l
        electrochemical -sum chi_bar_l r_l / T

    Entropic-flux form: ``entropic_flux`` = -grad T . S / T and ``mixing`` =
    -(1/T) sum grad chi_bar_l j_l replace the first and third parts.

    Chemical form: ``chem_heat`` = -grad T q / T^2, ``chem_mixing`` =
    -sum grad(chi_l/T) j_l, ``chem_reaction`` = -sum chi_l r_l / T, plus the
    Joule coupling ``joule`` = E i / T, which the chemical potentials do not
    carry.

    Mixing and pure-substance split: ``mix_total`` + ``pure_total`` + ``joule``
    equals ``total``.

    Parts with a proven sign: ``heat`` = kappa |grad T|^2 / T^2,
    ``diffusion`` = -(1/T) sum grad chi_bar_mix_l j_l, ``mix_chem_reaction``
    = -sum chi_mix_l r_l / T and ``viscous`` are nonnegative; the pure
    diffusion and reaction parts vanish.
    """

    electrothermal: np.ndarray
    viscous: np.ndarray
    thermo_mixing: np.ndarray
    electrochemical: np.ndarray
    entropic_flux: np.ndarray
    mixing: np.ndarray
    chem_heat: np.ndarray
    chem_mixing: np.ndarray
    chem_reaction: np.ndarray
    joule: np.ndarray
    mix_electrothermal: np.ndarray
    mix_thermo_mixing: np.ndarray
    mix_reaction: np.ndarray
    mix_joule: np.ndarray
    pure_heat: np.ndarray
    pure_diffusion: np.ndarray
    pure_reaction: np.ndarray
    heat: np.ndarray
    diffusion: np.ndarray
    mix_chem_reaction: np.ndarray
    lie_flag: np.ndarray
    dx: float = 1.0
    summands: np.ndarray | None = None

    def _sum(self, names):
        return sum(getattr(self, n) for n in names)

    def _abs(self, names):
        return sum(np.abs(getattr(self, n)) for n in names)

    @property
    def total(self) -> np.ndarray:
        return self._sum(_DISS1)

    @property
    def total_entropic(self) -> np.ndarray:
        return self._sum(_DISS2)

    @property
    def total_chemical(self) -> np.ndarray:
        return self._sum(_CHEM)

    @property
    def mix_total(self) -> np.ndarray:
        return self._sum(_MIX)

    @property
    def pure_total(self) -> np.ndarray:
        return self._sum(_PURE)

    @property
    def scale(self) -> np.ndarray:
        """Per-cell magnitude for roundoff tolerances.

        The largest sum of absolute parts over the formulations, or of the
        absolute per-species summands when those are larger: species sums
        may cancel far below their terms.
        """
        parts = [self._abs(_DISS1), self._abs(_DISS2), self._abs(_CHEM), self._abs(_MIX) + self._abs(_PURE)]
        if self.summands is not None:
            parts.append(self.summands)
        return np.maximum.reduce(parts)

    @property
    def epsilon(self) -> np.ndarray:
        return EPS_AUDIT * self.scale

    def _rel(self, a, b):
        s = self.scale
        return np.abs(a - b) / np.where(s > 0, s, 1.0)

    def identity_residuals(self) -> dict:
        """Max relative mismatch of each formulation against ``total``."""
        t = self.total
        return {
            "chemical_vs_electrochemical": float(np.max(self._rel(self.total_chemical, t))),
            "entropic_vs_electrochemical": float(np.max(self._rel(self.total_entropic, t))),
            "pure_mix_joule_vs_total": float(np.max(self._rel(self.pure_total + self.mix_total + self.joule, t))),
        }

    def violations(self, identity_tol: float = IDENTITY_TOL) -> list[str]:
        """Human-readable list of broken second-law statements; empty if all hold."""
        eps = self.epsilon
        out = []
        checks = {
            "total": self.total,
            "heat": self.heat,
            "viscous": self.viscous,
            "diffusion": self.diffusion,
            "mix_chem_reaction": self.mix_chem_reaction,
            "mix_reaction": self.mix_reaction,
        }
        for name, arr in checks.items():
            bad = arr < -eps
            if np.any(bad):
                k = int(np.argmin(arr + eps))
                out.append(f"{name} < 0 at cell {k} ({arr[k]:.3e}, eps {eps[k]:.1e})")
        for name in ("pure_diffusion", "pure_reaction"):
            arr = getattr(self, name)
            bad = np.abs(arr) > eps
            if np.any(bad):
                k = int(np.argmax(np.abs(arr) - eps))
                out.append(f"{name} != 0 at cell {k} ({arr[k]:.3e})")
        for name, r in self.identity_residuals().items():
            if r > identity_tol:
                out.append(f"identity {name} off by {r:.3e} relative")
        return out

    def integrated(self) -> dict:
        """Domain integrals (sum times dx) of every part and total."""
        out = {f.name: float(np.sum(getattr(self, f.name)) * self.dx) for f in fields(self)
               if f.name not in ("lie_flag", "dx", "summands")}
        for name in ("total", "total_entropic", "total_chemical", "mix_total", "pure_total"):
            out[name] = float(np.sum(getattr(self, name)) * self.dx)
        return out

    def record(self) -> dict:
        """Summary suitable for one line of the audit log."""
        rec = {"integrated": self.integrated()}
        rec["min_total"] = float(np.min(self.total))
        rec["max_total"] = float(np.max(self.total))
        rec["min_total_over_eps"] = float(np.min(self.total / np.where(self.epsilon > 0, self.epsilon, 1.0)))
        rec["identities"] = self.identity_residuals()
        rec["lie_cells"] = int(np.count_nonzero(self.lie_flag))
        rec["violations"] = self.violations()
        return rec


@dataclass
class EntropyFluxes:
    """Entropy fluxes, W/(K m^2): electrochemical and chemical totals, mixing and pure parts."""

    electrochemical: np.ndarray
    chemical: np.ndarray
    mix: np.ndarray
    pure: np.ndarray


@dataclass
class _Pointwise:
    j: np.ndarray
    i: np.ndarray
    r: np.ndarray
    q: np.ndarray
    chi_mix: np.ndarray
    chibar_mix: np.ndarray
    chi_pure: np.ndarray
    g_chibar_mix: np.ndarray
    g_chi_pure: np.ndarray
    tau_grad_v: np.ndarray


def _pointwise(f: AuditFields, species, network, material, constants, model):
    c = constants
    beta = network.betas
    m = masses(species)[:, None]
    z = valencies(species)[:, None]
    m_a = average_mass(species)
    y = f.y
    if model == "general":
        flux = drift_fluxes(y, f.grad_y, f.rho, f.grad_phi, f.T, f.grad_T, species, beta, c)
    else:
        flux = pnp_fluxes(y, f.grad_y, f.rho, f.grad_phi, f.T, species, c)
    g_chibar = grad_elchem_pot_mix(y, f.grad_y, f.T, f.grad_T, f.grad_phi, species, beta, c)
    if model != "general":
        # the dilute reduction drops the solvent's mixing gradient from the flux law
        g_chibar[-1] = c.e * z[-1] / m[-1] * f.grad_phi
    chi_mix = chem_pot_mix(y, f.T, species, beta, c)
    chibar_mix = elchem_pot_mix(y, f.T, f.phi, species, beta, c)
    nu = 1.0 / f.rho
    chi_pure = chem_pot_pure(f.T, f.p, nu, m_a, c)
    g_nu = -f.grad_rho / f.rho**2
    g_chi_pure = c.k_B * f.grad_T / m_a + f.grad_p * nu + f.p * g_nu
    if network.n_reactions:
        r = mass_production_rates(species, network, y)
    else:
        r = np.zeros_like(y)
    kappa = np.asarray(material.kappa, dtype=float)
    k11 = float(kappa[0, 0]) if kappa.ndim == 2 else float(kappa)
    q = heat_flux(f.grad_T, f.phi, flux.i, chibar_mix, flux.j, k11)
    # 1-D velocity gradient embedded in n dimensions: only the xx entry
    tau_grad_v = (2.0 * material.shear_viscosity + material.bulk_viscosity) * f.grad_v**2
    return _Pointwise(flux.j, flux.i, r, q, chi_mix, chibar_mix, chi_pure, g_chibar, g_chi_pure, tau_grad_v), k11


def entropy_fluxes(
    f: AuditFields,
    species: Sequence[Species],
    network,
    material: MaterialParams,
    constants: PhysicalConstants,
    model: str = "general",
) -> EntropyFluxes:
    """Entropy fluxes from the pointwise closures.

    electrochemical: q/T - sum chi_bar_l j_l / T + phi i / T
    chemical:        q/T - sum chi_l j_l / T
    mix:             -sum chi_bar_mix_l j_l / T + phi i / T
    pure:            q/T - chi_pure sum_l j_l / T
    """
    pw, _ = _pointwise(f, species, network, material, constants, model)
    return _fluxes(pw, f)


def _fluxes(pw: _Pointwise, f: AuditFields) -> EntropyFluxes:
    T = f.T
    chibar = pw.chi_pure + pw.chibar_mix
    chi = pw.chi_pure + pw.chi_mix
    elchem = pw.q / T - np.sum(chibar * pw.j, axis=0) / T + f.phi * pw.i / T
    chem = pw.q / T - np.sum(chi * pw.j, axis=0) / T
    mix = -np.sum(pw.chibar_mix * pw.j, axis=0) / T + f.phi * pw.i / T
    pure = pw.q / T - pw.chi_pure * np.sum(pw.j, axis=0) / T
    return EntropyFluxes(elchem, chem, mix, pure)


def entropy_budget(
    f: AuditFields,
    species: Sequence[Species],
    network,
    material: MaterialParams,
    constants: PhysicalConstants,
    model: str = "general",
    dx: float = 1.0,
) -> EntropyBudget:
    """Evaluate every formulation of the entropy production from point fields.

    Each formulation is assembled from the potentials and their gradients on
    its own; only the closures (fluxes, rates, heat flux) are shared.
    """
    c = constants
    pw, kappa = _pointwise(f, species, network, material, constants, model)
    T, gT = f.T, f.grad_T
    m = masses(species)[:, None]
    z = valencies(species)[:, None]
    j, i, r, q = pw.j, pw.i, pw.r, pw.q
    E = -f.grad_phi

    # electrochemical form
    chibar = pw.chi_pure + pw.chibar_mix
    g_chibar = pw.g_chi_pure + pw.g_chibar_mix
    g_chibar_over_T = g_chibar / T - chibar * gT / T**2
    electrothermal = -gT * (q + f.phi * i) / T**2
    viscous = pw.tau_grad_v / T
    thermo_mixing = -np.sum(g_chibar_over_T * j, axis=0)
    electrochemical = -np.sum(chibar * r, axis=0) / T

    # entropic-flux form
    S = _fluxes(pw, f)
    lie = gT * S.electrochemical
    entropic_flux = -lie / T
    mixing = -np.sum(g_chibar * j, axis=0) / T

    # chemical form
    chi = pw.chi_pure + pw.chi_mix
    g_chi = pw.g_chi_pure + pw.g_chibar_mix - c.e * z / m * f.grad_phi
    chem_heat = -gT * q / T**2
    chem_mixing = -np.sum((g_chi / T - chi * gT / T**2) * j, axis=0)
    chem_reaction = -np.sum(chi * r, axis=0) / T
    joule = E * i / T

    # mixing part
    g_mix_over_T = pw.g_chibar_mix / T - pw.chibar_mix * gT / T**2
    mix_electrothermal = -f.phi * gT * i / T**2
    mix_thermo_mixing = -np.sum(g_mix_over_T * j, axis=0)
    mix_reaction = -np.sum(pw.chibar_mix * r, axis=0) / T
    mix_joule = -joule

    # pure-substance part, in factored form: chi_pure is species independent
    pure_heat = -gT * q / T**2
    g_pure_over_T = pw.g_chi_pure / T - pw.chi_pure * gT / T**2
    pure_diffusion = -g_pure_over_T * np.sum(j, axis=0)
    pure_reaction = -pw.chi_pure / T * np.sum(r, axis=0)

    summands = (
        np.sum(np.abs(g_chibar_over_T * j), axis=0)
        + np.sum(np.abs(chibar * r), axis=0) / T
        + np.abs(gT * q) / T**2
        + np.abs(f.phi * gT * i) / T**2
        + np.abs(joule)
        + viscous
    )

    heat = kappa * gT**2 / T**2
    diffusion = -np.sum(pw.g_chibar_mix * j, axis=0) / T
    mix_chem_reaction = -np.sum(pw.chi_mix * r, axis=0) / T

    return EntropyBudget(
        electrothermal=electrothermal,
        viscous=viscous,
        thermo_mixing=thermo_mixing,
        electrochemical=electrochemical,
        entropic_flux=entropic_flux,
        mixing=mixing,
        chem_heat=chem_heat,
        chem_mixing=chem_mixing,
        chem_reaction=chem_reaction,
        joule=joule,
        mix_electrothermal=mix_electrothermal,
        mix_thermo_mixing=mix_thermo_mixing,
        mix_reaction=mix_reaction,
        mix_joule=mix_joule,
        pure_heat=pure_heat,
        pure_diffusion=pure_diffusion,
        pure_reaction=pure_reaction,
        heat=heat,
        diffusion=diffusion,
        mix_chem_reaction=mix_chem_reaction,
        lie_flag=lie < 0,
        dx=dx,
        summands=summands,
    )


def entropy_production(problem, state: MixtureState) -> EntropyBudget:
    """Entropy budget of a solver state, gradients by centred differences."""
    f = fields_from_state(state, problem.grid.dx, problem.bcs.periodic)
    return entropy_budget(f, problem.species, problem.network, problem.material, problem.constants,
                          "general" if problem.model == "general" else "pnp", problem.grid.dx)


# --------------------------------------------------------------------------
# conservation


@dataclass
class ConservationReport:
    """Largest per-step relative drifts along a trajectory.

    Species masses are normalized by their own totals, the total mass by the
    mixture mass and the charge by the total absolute ionic charge.
    """

    species_drift: np.ndarray
    total_mass_drift: float
    charge_drift: float
    closed: bool
    reactive: bool
    steps: int
    note: str = ""

    def ok(self, species_tol: float = 1e-13, total_tol: float = 1e-12) -> bool:
        if not self.closed:
            return True
        if not self.reactive and np.any(self.species_drift > species_tol):
            return False
        return self.total_mass_drift <= total_tol and self.charge_drift <= total_tol

    def as_dict(self) -> dict:
        return {
            "species_drift": [float(d) for d in self.species_drift],
            "total_mass_drift": self.total_mass_drift,
            "charge_drift": self.charge_drift,
            "closed": self.closed,
            "reactive": self.reactive,
            "steps": self.steps,
            "note": self.note,
        }


def conservation_report(trajectory: Sequence[MixtureState], problem) -> ConservationReport:
    dx = problem.grid.dx
    w = problem.constants.e * problem.valencies / problem.masses
    species_mass, total_mass, charge, charge_scale = [], [], [], []
    for s in trajectory:
        rho_l = s.rho * s.y
        species_mass.append(rho_l.sum(axis=1) * dx)
        total_mass.append(rho_l.sum() * dx)
        charge.append(np.sum(free_charge(s.y, s.rho, problem.species, problem.constants)) * dx)
        charge_scale.append(np.sum(np.abs(w)[:, None] * rho_l) * dx)
    species_mass = np.array(species_mass)
    total_mass = np.array(total_mass)
    charge = np.array(charge)
    cs = np.max(charge_scale) if charge_scale else 0.0
    n = len(trajectory) - 1
    if n >= 1:
        sm = np.abs(np.diff(species_mass, axis=0)) / np.where(species_mass[:-1] > 0, species_mass[:-1], 1.0)
        species_drift = sm.max(axis=0)
        total_drift = float(np.max(np.abs(np.diff(total_mass)) / total_mass[:-1]))
        charge_drift = float(np.max(np.abs(np.diff(charge))) / cs) if cs > 0 else 0.0
    else:
        species_drift = np.zeros(species_mass.shape[1] if species_mass.size else 0)
        total_drift = charge_drift = 0.0
    closed = problem.bcs.species.closed
    note = "" if closed else "open system, drift not asserted"
    return ConservationReport(species_drift, total_drift, charge_drift, closed,
                              problem.network.n_reactions > 0, n, note)


# --------------------------------------------------------------------------
# momentum and first law


def momentum_residual(prev: MixtureState, cur: MixtureState, problem) -> np.ndarray:
    """Residual of the 1-D barycentric momentum balance at ``cur``.

    rho (dv/dt + v dv/dx) + dp/dx - d/dx((2 eta + eta_v) dv/dx) - rho_E E
    """
    h = problem.grid.dx
    per = problem.bcs.periodic
    dt = cur.time - prev.time
    dvdt = (cur.v - prev.v) / dt if dt > 0 else np.zeros_like(cur.v)
    g = lambda a: centered_gradient(a, h, per)  # noqa: E731
    mu = 2.0 * problem.material.shear_viscosity + problem.material.bulk_viscosity
    rho_E = free_charge(cur.y, cur.rho, problem.species, problem.constants)
    E = -g(cur.phi)
    return cur.rho * (dvdt + cur.v * g(cur.v)) + g(cur.p) - g(mu * g(cur.v)) - rho_E * E


def total_energy_density(state: MixtureState, problem) -> np.ndarray:
    """rho e = rho u + rho_E phi + rho |v|^2 / 2 with u = k_B T/m_a + p nu + u_mix."""
    c = problem.constants
    m_a = average_mass(problem.species)
    u_mix, _ = energy_mix_specific(state.y, state.T, problem.species, problem.betas, c)
    rho_u = state.rho * (c.k_B * state.T / m_a + u_mix) + state.p
    rho_E = free_charge(state.y, state.rho, problem.species, c)
    return rho_u + rho_E * state.phi + 0.5 * state.rho * state.v**2


def _energy_flux(state: MixtureState, problem) -> np.ndarray:
    """rho e v + q + phi i - tau_tot v in 1-D, tau_tot = -p + tau."""
    h = problem.grid.dx
    f = fields_from_state(state, h, problem.bcs.periodic)
    model = "general" if problem.model == "general" else "pnp"
    pw, _ = _pointwise(f, problem.species, problem.network, problem.material, problem.constants, model)
    mu = 2.0 * problem.material.shear_viscosity + problem.material.bulk_viscosity
    tau = mu * f.grad_v
    return total_energy_density(state, problem) * state.v + pw.q + state.phi * pw.i + (state.p - tau) * state.v


@dataclass
class FirstLawReport:
    """Per-step residual fields of the total-energy balance.

    ``raw`` is d(rho e)/dt + d/dx(energy flux). With the temperature held by
    a bath the produced heat T diss leaves the system, and a potential that
    moves in time adds rho_E dphi/dt; ``corrected`` removes both, and the work
    v times the momentum residual of a velocity that is imposed rather than
    computed.
    """

    raw: list
    corrected: list
    dx: float

    def norms(self, which: str = "corrected") -> np.ndarray:
        data = getattr(self, which)
        return np.array([np.sqrt(np.sum(r**2) * self.dx) for r in data])

    @property
    def max_raw(self) -> float:
        return float(max((np.max(np.abs(r)) for r in self.raw), default=0.0))

    @property
    def max_corrected(self) -> float:
        return float(max((np.max(np.abs(r)) for r in self.corrected), default=0.0))


def first_law_residual(trajectory: Sequence[MixtureState], problem) -> FirstLawReport:
    """Time-centred finite-difference residuals of the first law between snapshots."""
    h = problem.grid.dx
    per = problem.bcs.periodic
    raw, corr = [], []
    e_prev = total_energy_density(trajectory[0], problem)
    F_prev = _energy_flux(trajectory[0], problem)
    D_prev = entropy_production(problem, trajectory[0]).total * trajectory[0].T
    for a, b in zip(trajectory[:-1], trajectory[1:]):
        dt = b.time - a.time
        e_next = total_energy_density(b, problem)
        F_next = _energy_flux(b, problem)
        D_next = entropy_production(problem, b).total * b.T
        r = (e_next - e_prev) / dt + centered_gradient(0.5 * (F_prev + F_next), h, per)
        rho_E = 0.5 * (free_charge(a.y, a.rho, problem.species, problem.constants)
                       + free_charge(b.y, b.rho, problem.species, problem.constants))
        work = 0.5 * (a.v + b.v) * momentum_residual(a, b, problem)
        raw.append(r)
        corr.append(r + 0.5 * (D_prev + D_next) - rho_E * (b.phi - a.phi) / dt - work)
        e_prev, F_prev, D_prev = e_next, F_next, D_next
    return FirstLawReport(raw, corr, h)


def refinement_slope(h, residual_norms) -> float:
    """Observed order of a residual norm under grid refinement."""
    return observed_order(h, residual_norms)


# --------------------------------------------------------------------------
# time reversal


@dataclass
class TimeReversalResult:
    forward: float
    backward: float

    @property
    def ratio(self) -> float | None:
        """backward / forward; None ("undefined") when both vanish."""
        if self.forward == 0:
            return None if self.backward == 0 else np.inf
        return self.backward / self.forward

    def describe(self) -> str:
        r = self.ratio
        return "undefined" if r is None else f"{r:.6g}"


def _face_diff(f, periodic: bool):
    """Differences across faces along the last axis: f[k+1] - f[k]."""
    if periodic:
        return np.roll(f, -1, axis=-1) - f
    return np.diff(f, axis=-1)


def _face_mean(f, periodic: bool):
    if periodic:
        return 0.5 * (np.roll(f, -1, axis=-1) + f)
    return 0.5 * (f[..., 1:] + f[..., :-1])


def _np_residual(rho_l, phi, T, times, problem) -> float:
    """L2 norm of the Nernst-Planck residual over a trajectory.

    Fluxes live on faces (compact differences, arithmetic face averages) and
    their divergence on cells. The stencil is time-symmetric: forward
    difference in time against the average of the spatial terms at both
    levels, so the diagnostic has no arrow of time of its own.
    """
    h = problem.grid.dx
    per = problem.bcs.periodic
    c = problem.constants
    D = problem.diffusivities[:-1, None]
    z = problem.valencies[:-1, None]
    total = 0.0
    for n in range(len(times) - 1):
        dt = times[n + 1] - times[n]

        def flux(k):
            E = -_face_diff(phi[k], per) / h
            v = problem.closure.prescribed_at(times[k]) if problem.closure.kind == "prescribed" else 0.0
            rf = _face_mean(rho_l[k], per)
            mob = c.e * D * z / (c.k_B * _face_mean(T[k], per))
            return rf * v - D * _face_diff(rho_l[k], per) / h + mob * rf * E

        F = 0.5 * (flux(n) + flux(n + 1))
        if per:
            div = (F - np.roll(F, 1, axis=-1)) / h
            R = (rho_l[n + 1] - rho_l[n]) / dt + div
        else:
            # interior cells only: boundary faces carry the boundary conditions
            R = (rho_l[n + 1] - rho_l[n])[:, 1:-1] / dt + np.diff(F, axis=-1) / h
        total += np.sum(R**2) * dt * h
    return float(np.sqrt(total))


def time_reversal_residual(trajectory: Sequence[MixtureState], problem) -> TimeReversalResult:
    """Nernst-Planck residual of the trajectory and of its time-and-space reversal.

    The reversed trajectory is rho_b[n, k] = rho[Nt-1-n, Nx-1-k] on the same
    time levels. Diffusive dynamics is not invariant under this map, so the
    reversed residual is large; pure advection is, and the two agree.
    """
    times = np.array([s.time for s in trajectory])
    rho_l = np.array([s.rho * s.y[:-1] for s in trajectory])
    phi = np.array([s.phi for s in trajectory])
    T = np.array([s.T for s in trajectory])
    fwd = _np_residual(rho_l, phi, T, times, problem)
    rev_times = times[-1] + times[0] - times[::-1]
    bwd = _np_residual(rho_l[::-1, :, ::-1], phi[::-1, ::-1], T[::-1, ::-1], rev_times, problem)
    return TimeReversalResult(fwd, bwd)


# --------------------------------------------------------------------------
# constitutive probe


def constitutive_probe(material: MaterialParams, n: int | None = None, samples: int = 16, seed: int = 0) -> list[str]:
    """Evaluate tau : grad v on random and pure-compression probe gradients.

    Returns the violations of the viscous criterion; empty when the material
    is consistent. The probes are synthetic, so this flags inconsistent
    parameters even when the simulated flow never exercises them.
    """
    from .constitutive import newtonian_stress, viscous_dissipation

    n = material.space_dimension if n is None else n
    rng = np.random.default_rng(seed)
    probes = [np.eye(n)] + [rng.standard_normal((n, n)) for _ in range(samples)]
    out = []
    for G in probes:
        tau = newtonian_stress(G, material.shear_viscosity, material.bulk_viscosity)
        d = float(viscous_dissipation(tau, G))
        if d < -EPS_AUDIT * float(np.sum(np.abs(tau * G))):
            out.append(f"viscous-criterion: tau:grad v = {d:.3e} < 0 (2 eta/n + eta_v = {material.viscous_margin(n):.3e})")
            break
    return out
