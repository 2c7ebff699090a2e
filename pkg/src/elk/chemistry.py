"""Species data, mass-action reaction networks and the mixing constants beta.

Mass fractions are arrays of shape ``(L,)`` or ``(L, N)``; the species axis is
always first so that a whole grid can be evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, NetworkValidationError

#: Floor applied to mass fractions before any logarithm or power.
Y_MIN = 1e-30

#: Tolerance of the weighted column sums (mass and charge criteria).
CRITERION_TOL = 1e-12


@dataclass(frozen=True)
class Species:
    """A chemical constituent.

    Parameters
    ----------
    name : str
    mass : float
        Molecular mass m_l in kg.
    valency : float
        Charge number z_l. Integer-valued in practice; real values are
        accepted so that perturbation studies can be expressed.
    diffusivity : float
        Diffusion coefficient D_l in m^2/s.
    solvent : bool
        Exactly one species of a mixture carries this flag, in last position.
    """

    name: str
    mass: float
    valency: float = 0
    diffusivity: float = 0.0
    solvent: bool = False

    def __post_init__(self):
        if not np.isfinite(self.mass) or self.mass <= 0:
            raise ConfigurationError(f"species {self.name!r}: mass must be > 0, got {self.mass}")
        if not np.isfinite(self.diffusivity) or self.diffusivity < 0:
            raise ConfigurationError(
                f"species {self.name!r}: diffusivity must be >= 0, got {self.diffusivity}"
            )


def check_species(species: Sequence[Species]) -> None:
    """Raise ConfigurationError unless exactly one solvent sits in last position."""
    if len(species) < 1:
        raise ConfigurationError("at least one species is required")
    flags = [s.solvent for s in species]
    if sum(flags) != 1:
        raise ConfigurationError(f"exactly one solvent species required, found {sum(flags)}")
    if not flags[-1]:
        raise ConfigurationError("the solvent species must be listed last")
    names = [s.name for s in species]
    if len(set(names)) != len(names):
        raise ConfigurationError(f"duplicate species names in {names}")


def masses(species: Sequence[Species]) -> np.ndarray:
    return np.array([s.mass for s in species], dtype=float)


def valencies(species: Sequence[Species]) -> np.ndarray:
    return np.array([s.valency for s in species], dtype=float)


def diffusivities(species: Sequence[Species]) -> np.ndarray:
    return np.array([s.diffusivity for s in species], dtype=float)


@dataclass(frozen=True, eq=False)
class ReactionNetwork:
    """Stoichiometric matrix with forward and backward rate constants.

    Parameters
    ----------
    stoich : array_like of int, shape (L, J)
        Column j holds the signed coefficients of reaction j (reactants < 0).
    k_forward, k_backward : array_like, shape (J,)
        Rate constants in 1/(m^3 s); both strictly positive for a valid network.
    """

    stoich: np.ndarray
    k_forward: np.ndarray
    k_backward: np.ndarray
    names: tuple = field(default=())

    def __post_init__(self):
        S = np.asarray(self.stoich)
        if S.ndim == 1:
            S = S.reshape(-1, 1)
        if S.ndim != 2:
            raise ConfigurationError(f"stoichiometric matrix must be 2-D, got shape {S.shape}")
        if S.size and not np.all(np.equal(np.mod(S, 1), 0)):
            raise ConfigurationError("stoichiometric coefficients must be integers")
        S = S.astype(np.int64)
        kf = np.atleast_1d(np.asarray(self.k_forward, dtype=float))
        kb = np.atleast_1d(np.asarray(self.k_backward, dtype=float))
        J = S.shape[1]
        if kf.shape != (J,) or kb.shape != (J,):
            raise ConfigurationError(
                f"rate vectors must have length J={J}, got {kf.shape} and {kb.shape}"
            )
        S.setflags(write=False)
        kf.setflags(write=False)
        kb.setflags(write=False)
        object.__setattr__(self, "stoich", S)
        object.__setattr__(self, "k_forward", kf)
        object.__setattr__(self, "k_backward", kb)

    @classmethod
    def empty(cls, n_species: int) -> "ReactionNetwork":
        """A network without reactions."""
        return cls(np.zeros((n_species, 0), dtype=int), np.zeros(0), np.zeros(0))

    @property
    def n_species(self) -> int:
        return self.stoich.shape[0]

    @property
    def n_reactions(self) -> int:
        return self.stoich.shape[1]

    @cached_property
    def equilibrium_constants(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.k_forward / self.k_backward

    @cached_property
    def betas(self) -> np.ndarray:
        return solve_betas(self)


# --------------------------------------------------------------------------
# validation


def integer_rank(matrix) -> int:
    """Exact rank of an integer matrix by fraction-free (Bareiss) elimination."""
    A = [[int(v) for v in row] for row in np.asarray(matrix)]
    if not A or not A[0]:
        return 0
    m, n = len(A), len(A[0])
    rank = 0
    prev = 1
    for col in range(n):
        if rank == m:
            break
        pivot = next((r for r in range(rank, m) if A[r][col] != 0), None)
        if pivot is None:
            continue
        A[rank], A[pivot] = A[pivot], A[rank]
        for r in range(rank + 1, m):
            for c in range(col + 1, n):
                # exact division is guaranteed by Sylvester's identity
                A[r][c] = (A[rank][col] * A[r][c] - A[r][col] * A[rank][c]) // prev
            A[r][col] = 0
        prev = A[rank][col]
        rank += 1
    return rank


@dataclass
class ValidationReport:
    """Outcome per criterion: ``checks[name] = (passed, message)``."""

    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def failures(self) -> list[str]:
        return [f"{name}: {msg}" for name, (ok, msg) in self.checks.items() if not ok]

    def failed_criteria(self) -> list[str]:
        return [name for name, (ok, _) in self.checks.items() if not ok]

    def raise_if_failed(self) -> None:
        if not self.passed:
            raise NetworkValidationError(self)


def _weighted_columns(weights, S):
    """Return the column sums of ``weights * S`` and their magnitude scale."""
    prod = weights[:, None] * S
    return prod.sum(axis=0), np.abs(prod).sum(axis=0)


def validate_network(species: Sequence[Species], network: ReactionNetwork) -> ValidationReport:
    """Check rank, mass criterion, charge criterion and rate positivity.

    Dimension mismatches raise ConfigurationError; all other problems are
    collected in the returned report.
    """
    L = len(species)
    S = network.stoich
    if S.shape[0] != L:
        raise ConfigurationError(
            f"stoichiometric matrix has {S.shape[0]} rows but there are {L} species"
        )
    J = S.shape[1]
    report = ValidationReport()

    if J == 0:
        report.checks["rank"] = (True, "no reactions")
    else:
        r = integer_rank(S)
        if J >= L:
            report.checks["rank"] = (False, f"J={J} reactions must be fewer than L={L} species")
        elif r != J:
            report.checks["rank"] = (False, f"linearly dependent reactions (rank {r} < J={J})")
        else:
            report.checks["rank"] = (True, f"rank {r}")

    def weighted(name, w):
        sums, scale = _weighted_columns(w, S)
        bad = [j for j in range(J) if abs(sums[j]) > CRITERION_TOL * max(scale[j], np.finfo(float).tiny)]
        if bad:
            detail = ", ".join(f"column {j} (sum {sums[j]:.6g})" for j in bad)
            report.checks[name] = (False, f"{name} criterion violated in {detail}")
        else:
            report.checks[name] = (True, "all columns balanced")

    weighted("mass", masses(species))
    weighted("charge", valencies(species))

    rates = np.concatenate([network.k_forward, network.k_backward])
    if np.all(np.isfinite(rates)) and np.all(rates > 0):
        report.checks["positivity"] = (True, "all rate constants > 0")
    else:
        bad = [j for j in range(J) if not (network.k_forward[j] > 0 and network.k_backward[j] > 0)]
        report.checks["positivity"] = (False, f"nonpositive rate constants in column(s) {bad}")
    return report


# --------------------------------------------------------------------------
# beta system


def solve_betas(network: ReactionNetwork) -> np.ndarray:
    """Minimum-norm solution of ``S^T beta = -ln K``.

    Returns ``S (S^T S)^{-1} (-ln K)``, the least-norm vector. Requires full
    column rank of S.
    """
    S = network.stoich.astype(float)
    L, J = S.shape
    if J == 0:
        return np.zeros(L)
    K = network.equilibrium_constants
    if not np.all(np.isfinite(K)) or np.any(K <= 0):
        raise ConfigurationError("equilibrium constants must be finite and positive")
    rhs = -np.log(K)
    gram = S.T @ S
    try:
        c = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError("linearly dependent reactions: S^T S is singular") from exc
    beta = S @ c
    # one step of iterative refinement keeps the residual at roundoff level
    resid = rhs - S.T @ beta
    beta = beta + S @ np.linalg.solve(gram, resid)
    resid = np.max(np.abs(S.T @ beta - rhs))
    scale = max(1.0, np.max(np.abs(rhs)))
    assert resid <= 1e-12 * scale, f"beta system residual {resid:.3e}"
    return beta


def beta_residual(network: ReactionNetwork, beta=None) -> float:
    """Infinity norm of ``S^T beta + ln K``."""
    beta = network.betas if beta is None else np.asarray(beta)
    return float(np.max(np.abs(network.stoich.T @ beta + np.log(network.equilibrium_constants)), initial=0.0))


# --------------------------------------------------------------------------
# kinetics


def _checked_fractions(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < 0) or not np.all(np.isfinite(y)):
        raise DomainError("mass fractions must be finite and nonnegative")
    return np.maximum(y, Y_MIN)


def reaction_rates(network: ReactionNetwork, y) -> np.ndarray:
    """Mass-action rates R_j = k_f prod y^{-s} (reactants) - k_b prod y^{s} (products).

    Parameters
    ----------
    y : array_like, shape (L,) or (L, N)

    Returns
    -------
    ndarray, shape (J,) or (J, N)
    """
    y = _checked_fractions(y)
    S = network.stoich
    logy = np.log(y)
    reac = np.where(S < 0, -S, 0).astype(float)
    prod = np.where(S > 0, S, 0).astype(float)
    fwd = np.exp(np.tensordot(reac.T, logy, axes=1))
    bwd = np.exp(np.tensordot(prod.T, logy, axes=1))
    kf = network.k_forward.reshape((-1,) + (1,) * (y.ndim - 1))
    kb = network.k_backward.reshape((-1,) + (1,) * (y.ndim - 1))
    return kf * fwd - kb * bwd


def mass_production_rates(species: Sequence[Species], network: ReactionNetwork, y) -> np.ndarray:
    """r_l = m_l sum_j s_lj R_j, shape like ``y``."""
    R = reaction_rates(network, y)
    m = masses(species).reshape((-1,) + (1,) * (np.ndim(y) - 1))
    return m * np.tensordot(network.stoich.astype(float), R, axes=1)


def equilibrium_residual(network: ReactionNetwork, y) -> np.ndarray:
    """Per reaction ``|prod_l y_l^{s_lj} - K_j|``."""
    y = _checked_fractions(y)
    q = np.exp(np.tensordot(network.stoich.T.astype(float), np.log(y), axes=1))
    K = network.equilibrium_constants.reshape((-1,) + (1,) * (y.ndim - 1))
    return np.abs(q - K)


def affinity(network: ReactionNetwork, y) -> np.ndarray:
    """``-sum_l s_lj (beta_l + ln y_l)``, which has the sign of R_j."""
    y = _checked_fractions(y)
    beta = network.betas.reshape((-1,) + (1,) * (y.ndim - 1))
    return -np.tensordot(network.stoich.T.astype(float), beta + np.log(y), axes=1)
