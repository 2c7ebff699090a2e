import numpy as np
import pytest

from elk import oracles
from elk.chemistry import ReactionNetwork, Species
from elk.errors import ConfigurationError, IncompatibleBoundaryError, SolverError
from elk.solvers import (
    NumericsConfig,
    Problem,
    VelocityClosure,
    advance,
    bernoulli,
    darcy_velocity,
    face_coefficients,
    poisson_residual,
    poisson_solve,
    reaction_substep,
    simulate,
    steady_state,
)
from elk.state import BoundaryCondition, BoundarySet, FieldBC, Grid1D, MixtureState
from elk.thermo import MaterialParams, PhysicalConstants

U = PhysicalConstants.unit()
DIR0 = FieldBC.both(BoundaryCondition.dirichlet(0.0))
NOFLUX = FieldBC.both(BoundaryCondition.noflux())
PER = FieldBC.both(BoundaryCondition.periodic())


def electrolyte(n=40, length=10.0, bcs=None, dt=0.5, model="pnp"):
    sp = [Species("c", 1.0, 1, 1.0), Species("a", 1.0, -1, 1.0), Species("W", 1.0, solvent=True)]
    bcs = bcs or BoundarySet(FieldBC(BoundaryCondition.dirichlet(0.5), BoundaryCondition.dirichlet(0.0)), NOFLUX)
    pr = Problem(Grid1D(n, length), sp, ReactionNetwork.empty(3), MaterialParams(T_ref=1.0), U, bcs,
                 model=model, numerics=NumericsConfig(dt=dt, t_end=5.0))
    y = np.vstack([np.full(n, 0.01), np.full(n, 0.01), np.full(n, 0.98)])
    return pr, MixtureState(1.0, y, 0.0, 0.0, 1.0, 0.0)


def test_numerics_validation():
    with pytest.raises(ConfigurationError):
        NumericsConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        NumericsConfig(flux="upwind")
    with pytest.raises(ConfigurationError):
        VelocityClosure("darcy", viscosity=0.0)
    with pytest.raises(ConfigurationError):
        VelocityClosure("darcy", porosity=1.5)


def test_problem_validation():
    pr, _ = electrolyte()
    with pytest.raises(ConfigurationError):
        Problem(pr.grid, pr.species, pr.network, model="dpnp")
    with pytest.raises(ConfigurationError):
        Problem(pr.grid, pr.species, ReactionNetwork.empty(2))


def test_bernoulli_and_face_coefficients():
    assert bernoulli(np.array([0.0]))[0] == 1.0
    x = np.array([1e-5, 0.5, -3.0, 50.0])
    np.testing.assert_allclose(bernoulli(x), x / np.expm1(x), rtol=1e-12)
    # B(-x) - B(x) = x
    np.testing.assert_allclose(bernoulli(-x) - bernoulli(x), x, rtol=1e-12, atol=1e-15)
    a, b = face_coefficients(np.array([0.0]), 2.0, 0.5)
    assert a[0] == b[0] == 4.0
    a, b = face_coefficients(np.array([1.0, -1.0]), 0.0, 0.5)
    np.testing.assert_array_equal(a, [1.0, 0.0])
    np.testing.assert_array_equal(b, [0.0, 1.0])


def test_poisson_trivial_and_uniform_charge():
    g = Grid1D(50, 2.0)
    assert np.all(poisson_solve(g, np.zeros(50), 1.0, DIR0, U) == 0.0)
    c, eps0 = 3.0, 2.0
    const = PhysicalConstants(1.0, 1.0, eps0)
    phi = poisson_solve(g, np.full(50, c), 1.0, DIR0, const)
    x = g.centers
    exact = c / (2 * eps0) * x * (2.0 - x)
    assert np.max(np.abs(phi - exact)) <= 0.25 * g.dx**2 * c / eps0
    assert poisson_residual(g, phi, np.full(50, c), 1.0, DIR0, const) <= 1e-12


def test_poisson_manufactured_sine_order():
    errs, hs = [], []
    for n in (40, 80, 160):
        g = Grid1D(n, 1.0)
        x = g.centers
        phi = poisson_solve(g, np.pi**2 * np.sin(np.pi * x), 1.0, DIR0, U)
        errs.append(np.sqrt(np.sum((phi - np.sin(np.pi * x)) ** 2) * g.dx))
        hs.append(g.dx)
    assert oracles.observed_order(hs, errs) >= 1.9


def test_poisson_gauge_and_incompatibility():
    g = Grid1D(32, 1.0)
    x = g.centers
    q = np.cos(2 * np.pi * x)
    phi = poisson_solve(g, q, 1.0, PER, U)
    assert abs(phi.mean()) <= 1e-14
    np.testing.assert_allclose(phi, q / (2 * np.pi) ** 2, atol=5e-3 * np.max(np.abs(phi)))
    with pytest.raises(IncompatibleBoundaryError):
        poisson_solve(g, np.ones(32), 1.0, NOFLUX, U)
    with pytest.raises(SolverError):
        poisson_solve(g, np.ones(32), 1.0, PER, U)


def test_uniform_equilibrium_is_fixed_point():
    bcs = BoundarySet(DIR0, NOFLUX)
    pr, st = electrolyte(bcs=bcs)
    nxt = advance(pr, st)
    assert np.max(np.abs(nxt.y - st.y)) <= 1e-12
    assert np.max(np.abs(nxt.phi - st.phi)) <= 1e-12


def test_advance_is_deterministic():
    pr, st = electrolyte()
    a = simulate(pr, st, t_end=2.0)[-1]
    b = simulate(pr, st, t_end=2.0)[-1]
    assert np.array_equal(a.y, b.y) and np.array_equal(a.phi, b.phi)


def test_noflux_diffusion_relaxes_to_mean():
    sp = [Species("s", 1.0, 0, 1.0), Species("W", 1.0, solvent=True)]
    n = 20
    pr = Problem(Grid1D(n, 1.0), sp, ReactionNetwork.empty(2), MaterialParams(T_ref=1.0), U,
                 BoundarySet(DIR0, NOFLUX), numerics=NumericsConfig(dt=0.05, steady_tol=1e-11))
    y0 = 0.01 + 0.01 * np.linspace(0, 1, n)
    st = MixtureState(1.0, np.vstack([y0, 1 - y0]), 0.0, 0.0, 1.0, 0.0)
    res = steady_state(pr, st)
    assert res.converged
    np.testing.assert_allclose(res.state.y[0], y0.mean(), rtol=1e-9)
    again = steady_state(pr, res.state)
    assert again.converged and again.steps == 1


def test_steady_state_reports_nonconvergence():
    pr, st = electrolyte()
    res = steady_state(pr, st, max_steps=2)
    assert not res.converged and res.steps == 2 and len(res.residuals) == 2


def test_advection_translation_conserves_mass():
    sp = [Species("s", 1.0, 0, 0.0), Species("W", 1.0, solvent=True)]
    n = 50
    pr = Problem(Grid1D(n, 1.0), sp, ReactionNetwork.empty(2), MaterialParams(T_ref=1.0), U,
                 BoundarySet(PER, PER), closure=VelocityClosure("prescribed", 1.0),
                 numerics=NumericsConfig(dt=0.01, t_end=0.3))
    x = pr.grid.centers
    y0 = 0.01 + 0.01 * np.exp(-((x - 0.3) ** 2) / 0.005)
    st = MixtureState(1.0, np.vstack([y0, 1 - y0]), 0.0, 0.0, 1.0, 0.0)
    traj = simulate(pr, st)
    masses = [s.y[0].sum() for s in traj]
    assert max(abs(m - masses[0]) / masses[0] for m in masses) <= 1e-13
    # the peak moved right by about v t = 0.3
    assert abs(x[np.argmax(traj[-1].y[0])] - 0.6) <= 0.05


def test_boltzmann_steady_state_in_fixed_linear_potential():
    # neutral net charge is small: fix phi by Dirichlet walls, reservoirs on the right
    pr, st = electrolyte(bcs=BoundarySet(FieldBC(BoundaryCondition.dirichlet(0.2), BoundaryCondition.dirichlet(0.0)),
                                         NOFLUX), dt=2.0)
    res = steady_state(pr, st, tol=1e-12)
    s = res.state
    for l, z in ((0, 1.0), (1, -1.0)):
        shape = oracles.boltzmann_profile(s.phi, z, 1.0, 1.0, U.e, U.k_B)
        ref = shape * s.y[l].sum() / shape.sum()
        assert np.max(np.abs(s.y[l] / ref - 1)) <= 1e-9


def test_reaction_substep():
    sp = [Species("A", 1.0), Species("B", 1.0), Species("W", 1.0, solvent=True)]
    net = ReactionNetwork([[-1], [1], [0]], [4.0], [1.0])
    pr = Problem(Grid1D(4, 1.0), sp, net, MaterialParams(T_ref=1.0), U, numerics=NumericsConfig(reaction_substeps=4))
    y_eq = np.array([[0.1] * 4, [0.4] * 4, [0.5] * 4])
    assert np.max(np.abs(reaction_substep(pr, y_eq, 1.0, 1.0) - y_eq)) <= 1e-15
    y0 = np.array([[0.3] * 4, [0.2] * 4, [0.5] * 4])
    seen = []
    y1 = reaction_substep(pr, y0, 1.0, 10.0, observer=seen.append)
    # stiff request: substeps doubled until each changes y by <= 0.1
    assert len(seen) > 4
    np.testing.assert_allclose(y1.sum(axis=0), 1.0, atol=1e-13)
    np.testing.assert_allclose(y1[1] / y1[0], 4.0, rtol=1e-8)


def test_darcy_velocity_examples():
    assert darcy_velocity(np.zeros(5), np.zeros(5), np.ones(5), 1.0, 1.0) == 0.0
    assert darcy_velocity(np.full(5, 2.0), np.full(5, 1.0), np.full(5, 2.0), 1.0, 1.0) == 0.0
    raw = darcy_velocity(np.array([-2.0]), np.array([1.0]), np.array([1.0]), 1.0, 1.0, project=False)
    assert raw[0] == 3.0
    with pytest.raises(ConfigurationError):
        darcy_velocity(np.zeros(2), np.zeros(2), np.zeros(2), 1.0, 0.0)


def test_pathological_step_raises_solver_error():
    pr, st = electrolyte(n=40, length=10.0)
    bad = Problem(pr.grid, pr.species, pr.network, pr.material, pr.constants, pr.bcs,
                  numerics=NumericsConfig(dt=1.0, gummel_max_iter=1, gummel_tol=1e-16, dt_min_factor=0.25))
    with pytest.raises(SolverError):
        advance(bad, st)
