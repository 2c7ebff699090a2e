"""Electric double layer next to a charged wall.

A 1:1 electrolyte sits between a wall held at a small potential (left) and a
bulk reservoir (right). At steady state the potential should decay
exponentially with the Debye length computed from the bulk ion densities.
This script solves the steady problem, fits the decay length and prints a
coarse profile so the exponential is visible by eye.

Run with ``python3 demos/debye_layer.py``.
"""

from pathlib import Path

import numpy as np

from elk.cli import oracle_comparison
from elk.scenario import load_scenario
from elk.solvers import steady_state

HERE = Path(__file__).resolve().parent


def main():
    sc = load_scenario(HERE / "scenarios" / "debye_layer.json")
    problem, state = sc.build()
    res = steady_state(problem, state)
    print(f"steady state: converged={res.converged} after {res.steps} steps "
          f"(final residual {res.residuals[-1]:.2e})")

    ref = oracle_comparison(sc, problem, res.state)
    print(f"Debye length from bulk densities: {ref['debye_length']:.4f}")
    print(f"decay length fitted to phi(x):    {ref['fitted']:.4f}")
    print(f"relative difference:               {ref['relative_error']:.2e}")

    # the profile within a few Debye lengths, against the linearized law
    x = problem.grid.centers
    lam = ref["debye_length"]
    phi = res.state.phi
    zeta = float(phi[0] * np.exp(x[0] / lam))
    print("\n     x/lam     phi        zeta*exp(-x/lam)   y_cation   y_anion")
    for k in np.searchsorted(x, lam * np.array([0.0, 0.5, 1.0, 2.0, 3.0, 5.0])):
        print(f"  {x[k] / lam:8.3f}  {phi[k]:.6f}   {zeta * np.exp(-x[k] / lam):.6f}"
              f"           {res.state.y[0, k]:.6f}   {res.state.y[1, k]:.6f}")


if __name__ == "__main__":
    main()
