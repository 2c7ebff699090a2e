"""Scenario documents: parsing, validation, serialization and assembly.

A scenario is a JSON document. Parsing normalizes it (fills defaults,
expands presets) into a :class:`Scenario` of plain data, so that
``load(serialize(s)) == s``. Validation collects every violated rule
before reporting; ``build`` turns a valid scenario into a solver problem and
an initial state.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .chemistry import ReactionNetwork, Species, validate_network
from .errors import ConfigurationError, ScenarioParseError, ScenarioValidationError, UnsupportedScalingError
from .oracles import OracleSpec
from .scaling import DELTA_THRESHOLD, Regime, ScalingRegime, compute_deltas
from .solvers import MODELS, NumericsConfig, Problem, VelocityClosure
from .state import BoundaryCondition, BoundarySet, FieldBC, Grid1D, MixtureState
from .thermo import MaterialParams, PhysicalConstants

#: Solutes may make up at most this fraction of the solvent for the dilute reduction.
DILUTE_RATIO = 0.1

#: Marks a field without a default.
REQUIRED = object()

_CONSTANT_PRESETS = {
    "si": PhysicalConstants(),
    "unit": PhysicalConstants.unit(),
}

_SPECIES_KEYS = {"name": REQUIRED, "mass": REQUIRED, "valency": 0, "diffusivity": 0.0, "solvent": False}
_REACTION_KEYS = {"stoich": REQUIRED, "k_forward": REQUIRED, "k_backward": REQUIRED, "name": ""}
_DOMAIN_KEYS = {"length": REQUIRED, "cells": REQUIRED, "x0": 0.0}
_INITIAL_KEYS = {"rho": 1.0, "y": REQUIRED, "phi": 0.0, "v": 0.0, "T": 298.15, "p": 0.0}
_CLOSURE_KEYS = {"kind": "rest", "value": 0.0, "permeability": 1.0, "viscosity": 1.0, "porosity": 1.0}
_MATERIAL_KEYS = {
    "shear_viscosity": 0.0,
    "bulk_viscosity": 0.0,
    "kappa": 0.0,
    "eps_r": 1.0,
    "T_ref": 298.15,
    "space_dimension": 3,
}
_CONSTANT_KEYS = {"preset": "si", "e": None, "k_B": None, "eps0": None}
_NUMERICS_KEYS = {
    "dt": 1e-3,
    "t_end": 1.0,
    "gummel_tol": 1e-10,
    "gummel_max_iter": 100,
    "reaction_substeps": 4,
    "steady_tol": 1e-10,
    "steady_max_steps": 10000,
    "flux": "exponential",
    "dt_min_factor": 2.0**-10,
}
_AUDIT_KEYS = {"enabled": True, "every": 1, "first_law": False, "time_reversal": False}
_OUTPUT_KEYS = {"every": 1}
_SCALING_KEYS = {
    "E0": REQUIRED, "B0": REQUIRED, "length": REQUIRED, "tau": REQUIRED,
    "rho0": None, "i0": None, "alpha": None, "threshold": DELTA_THRESHOLD,
}
_ORACLE_KEYS = {"kind": REQUIRED, "params": {}}
_BC_KEYS = {"kind": REQUIRED, "value": None}
_TOP_KEYS = {
    "name": "scenario",
    "mode": "transient",
    "species": REQUIRED,
    "reactions": [],
    "domain": REQUIRED,
    "initial": REQUIRED,
    "boundaries": {},
    "model": "pnp",
    "closure": {},
    "material": {},
    "constants": {},
    "numerics": {},
    "audit": {},
    "output": {},
    "scaling": None,
    "oracle": None,
}
_FIELD_KINDS = {
    "constant": {"value": REQUIRED},
    "gaussian": {"amplitude": REQUIRED, "center": REQUIRED, "sigma": REQUIRED, "offset": 0.0},
    "linear": {"left": REQUIRED, "right": REQUIRED},
    "sine": {"amplitude": REQUIRED, "periods": 1.0, "phase": 0.0, "offset": 0.0},
    "table": {"x": REQUIRED, "values": REQUIRED},
}


# --------------------------------------------------------------------------
# parsing


def _fill(d, keys: dict, path: str) -> dict:
    """Check ``d`` against the allowed ``keys`` and fill defaults."""
    if not isinstance(d, dict):
        raise ScenarioParseError(f"{path}: expected an object, got {type(d).__name__}")
    unknown = sorted(set(d) - set(keys))
    if unknown:
        raise ScenarioParseError(f"unknown field {path}.{unknown[0]}" if path else f"unknown field {unknown[0]}")
    out = {}
    for k, default in keys.items():
        if k in d:
            out[k] = d[k]
        elif default is REQUIRED:
            raise ScenarioParseError(f"missing required field {path + '.' if path else ''}{k}")
        else:
            out[k] = copy.deepcopy(default)
    return out


def _number(x, path):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioParseError(f"{path}: expected a number, got {x!r}")
    return float(x)


def _field_spec(spec, path: str) -> dict:
    """Normalize a field description to {"kind": ..., params}."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return {"kind": "constant", "value": float(spec)}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ScenarioParseError(f"{path}: expected a number or an object with 'kind'")
    kind = spec["kind"]
    if kind not in _FIELD_KINDS:
        raise ScenarioParseError(f"{path}.kind: unknown field kind {kind!r}")
    rest = {k: v for k, v in spec.items() if k != "kind"}
    out = {"kind": kind, **_fill(rest, _FIELD_KINDS[kind], path)}
    for k, v in out.items():
        if k == "kind":
            continue
        if kind == "table":
            if not isinstance(v, list) or not v:
                raise ScenarioParseError(f"{path}.{k}: expected a non-empty list of numbers")
            out[k] = [_number(a, f"{path}.{k}") for a in v]
        else:
            out[k] = _number(v, f"{path}.{k}")
    return out


def _bc(spec, path: str) -> dict:
    out = _fill(spec, _BC_KEYS, path)
    if out["kind"] not in ("dirichlet", "noflux", "periodic"):
        raise ScenarioParseError(f"{path}.kind: unknown boundary kind {out['kind']!r}")
    v = out["value"]
    if isinstance(v, dict):
        out["value"] = {str(k): _number(x, f"{path}.value.{k}") for k, x in v.items()}
    elif v is not None:
        out["value"] = _number(v, f"{path}.value")
    return out


def _field_bc(spec, path: str) -> dict:
    spec = {} if spec is None else spec
    if isinstance(spec, dict) and "kind" in spec:
        # one condition for both sides
        return {side: _bc(spec, f"{path}") for side in ("left", "right")}
    out = _fill(spec, {"left": {"kind": "noflux"}, "right": {"kind": "noflux"}}, path)
    return {side: _bc(out[side], f"{path}.{side}") for side in ("left", "right")}


def parse_scenario(data: dict) -> "Scenario":
    """Normalize a decoded document; raises ScenarioParseError naming the field."""
    top = _fill(data, _TOP_KEYS, "")
    species = top["species"]
    if not isinstance(species, list) or not species:
        raise ScenarioParseError("species: expected a non-empty list")
    species = [_fill(s, _SPECIES_KEYS, f"species[{i}]") for i, s in enumerate(species)]
    for i, s in enumerate(species):
        s["mass"] = _number(s["mass"], f"species[{i}].mass")
        s["valency"] = _number(s["valency"], f"species[{i}].valency")
        s["diffusivity"] = _number(s["diffusivity"], f"species[{i}].diffusivity")
        s["name"] = str(s["name"])
        s["solvent"] = bool(s["solvent"])
    if not isinstance(top["reactions"], list):
        raise ScenarioParseError("reactions: expected a list")
    reactions = []
    for j, r in enumerate(top["reactions"]):
        r = _fill(r, _REACTION_KEYS, f"reactions[{j}]")
        if not isinstance(r["stoich"], dict):
            raise ScenarioParseError(f"reactions[{j}].stoich: expected an object species -> coefficient")
        r["stoich"] = {str(k): _number(v, f"reactions[{j}].stoich.{k}") for k, v in r["stoich"].items()}
        r["k_forward"] = _number(r["k_forward"], f"reactions[{j}].k_forward")
        r["k_backward"] = _number(r["k_backward"], f"reactions[{j}].k_backward")
        r["name"] = str(r["name"])
        reactions.append(r)
    domain = _fill(top["domain"], _DOMAIN_KEYS, "domain")
    domain["length"] = _number(domain["length"], "domain.length")
    domain["x0"] = _number(domain["x0"], "domain.x0")
    cells = domain["cells"]
    if isinstance(cells, bool) or not isinstance(cells, (int, float)) or int(cells) != cells:
        raise ScenarioParseError(f"domain.cells: expected an integer, got {cells!r}")
    domain["cells"] = int(cells)
    initial = _fill(top["initial"], _INITIAL_KEYS, "initial")
    for k in ("rho", "phi", "v", "T", "p"):
        initial[k] = _field_spec(initial[k], f"initial.{k}")
    if not isinstance(initial["y"], dict):
        raise ScenarioParseError("initial.y: expected an object solute -> field")
    initial["y"] = {str(k): _field_spec(v, f"initial.y.{k}") for k, v in initial["y"].items()}
    bnd = _fill(top["boundaries"], {"phi": {}, "species": {}}, "boundaries")
    boundaries = {k: _field_bc(bnd[k], f"boundaries.{k}") for k in ("phi", "species")}
    closure = _fill(top["closure"], _CLOSURE_KEYS, "closure")
    for k in ("value", "permeability", "viscosity", "porosity"):
        closure[k] = _number(closure[k], f"closure.{k}")
    material = _fill(top["material"], _MATERIAL_KEYS, "material")
    for k in ("shear_viscosity", "bulk_viscosity", "eps_r", "T_ref"):
        material[k] = _number(material[k], f"material.{k}")
    if isinstance(material["kappa"], list):
        material["kappa"] = [[_number(a, "material.kappa") for a in row] for row in material["kappa"]]
    else:
        material["kappa"] = _number(material["kappa"], "material.kappa")
    material["space_dimension"] = int(_number(material["space_dimension"], "material.space_dimension"))
    const = _fill(top["constants"], _CONSTANT_KEYS, "constants")
    if const["preset"] not in _CONSTANT_PRESETS:
        raise ScenarioParseError(f"constants.preset: unknown preset {const['preset']!r}")
    base = _CONSTANT_PRESETS[const["preset"]]
    constants = {
        k: _number(const[k], f"constants.{k}") if const[k] is not None else getattr(base, k)
        for k in ("e", "k_B", "eps0")
    }
    numerics = _fill(top["numerics"], _NUMERICS_KEYS, "numerics")
    for k in ("dt", "t_end", "gummel_tol", "steady_tol", "dt_min_factor"):
        numerics[k] = _number(numerics[k], f"numerics.{k}")
    for k in ("gummel_max_iter", "reaction_substeps", "steady_max_steps"):
        numerics[k] = int(_number(numerics[k], f"numerics.{k}"))
    audit = _fill(top["audit"], _AUDIT_KEYS, "audit")
    audit["every"] = int(_number(audit["every"], "audit.every"))
    for k in ("enabled", "first_law", "time_reversal"):
        audit[k] = bool(audit[k])
    output = _fill(top["output"], _OUTPUT_KEYS, "output")
    output["every"] = int(_number(output["every"], "output.every"))
    scaling = None
    if top["scaling"] is not None:
        scaling = _fill(top["scaling"], _SCALING_KEYS, "scaling")
        for k, v in scaling.items():
            if v is not None:
                scaling[k] = _number(v, f"scaling.{k}")
    oracle = None
    if top["oracle"] is not None:
        oracle = _fill(top["oracle"], _ORACLE_KEYS, "oracle")
        if not isinstance(oracle["params"], dict):
            raise ScenarioParseError("oracle.params: expected an object")
    if top["mode"] not in ("transient", "steady"):
        raise ScenarioParseError(f"mode: expected 'transient' or 'steady', got {top['mode']!r}")
    return Scenario(
        name=str(top["name"]),
        mode=top["mode"],
        species=species,
        reactions=reactions,
        domain=domain,
        initial=initial,
        boundaries=boundaries,
        model=str(top["model"]),
        closure=closure,
        material=material,
        constants=constants,
        numerics=numerics,
        audit=audit,
        output=output,
        scaling=scaling,
        oracle=oracle,
    )


def loads(text: str) -> "Scenario":
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_scenario(data)


def load_scenario(path, validate: bool = True) -> "Scenario":
    """Read, parse and (by default) validate a scenario file.

    Raises ScenarioParseError or ScenarioValidationError; the latter carries
    every violated rule.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from exc
    sc = loads(text)
    if validate:
        sc.validate()
    return sc


# --------------------------------------------------------------------------
# field evaluation


def evaluate_field(spec: dict, x: np.ndarray, x0: float, length: float) -> np.ndarray:
    kind = spec["kind"]
    if kind == "constant":
        return np.full_like(x, spec["value"])
    if kind == "gaussian":
        return spec["offset"] + spec["amplitude"] * np.exp(-((x - spec["center"]) ** 2) / (2 * spec["sigma"] ** 2))
    if kind == "linear":
        return spec["left"] + (spec["right"] - spec["left"]) * (x - x0) / length
    if kind == "sine":
        arg = 2 * math.pi * spec["periods"] * (x - x0) / length + spec["phase"]
        return spec["offset"] + spec["amplitude"] * np.sin(arg)
    if kind == "table":
        return np.interp(x, spec["x"], spec["values"])
    raise ConfigurationError(f"unknown field kind {kind!r}")


# --------------------------------------------------------------------------
# the scenario


@dataclass
class Scenario:
    """Normalized run description; every field is plain JSON data."""

    name: str
    mode: str
    species: list
    reactions: list
    domain: dict
    initial: dict
    boundaries: dict
    model: str
    closure: dict
    material: dict
    constants: dict
    numerics: dict
    audit: dict
    output: dict
    scaling: dict | None = None
    oracle: dict | None = None
    warnings: list = field(default_factory=list, compare=False, repr=False)

    # ---- serialization

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("warnings")
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    # ---- assembly

    def species_objects(self) -> list[Species]:
        return [Species(s["name"], s["mass"], s["valency"], s["diffusivity"], s["solvent"]) for s in self.species]

    def network(self) -> ReactionNetwork:
        names = [s["name"] for s in self.species]
        J = len(self.reactions)
        S = np.zeros((len(names), J))
        for j, r in enumerate(self.reactions):
            for k, v in r["stoich"].items():
                S[names.index(k), j] = v
        if J == 0:
            return ReactionNetwork.empty(len(names))
        return ReactionNetwork(
            S,
            [r["k_forward"] for r in self.reactions],
            [r["k_backward"] for r in self.reactions],
            tuple(r["name"] for r in self.reactions),
        )

    def grid(self) -> Grid1D:
        return Grid1D(self.domain["cells"], self.domain["length"], self.domain["x0"])

    def _bcs(self) -> BoundarySet:
        solutes = [s["name"] for s in self.species[:-1]]

        def one(b, is_species):
            if b["kind"] != "dirichlet":
                return BoundaryCondition(b["kind"])
            if is_species:
                vals = b["value"] if isinstance(b["value"], dict) else {}
                return BoundaryCondition.dirichlet([vals.get(n, 0.0) for n in solutes])
            return BoundaryCondition.dirichlet(b["value"])

        phi = FieldBC(one(self.boundaries["phi"]["left"], False), one(self.boundaries["phi"]["right"], False))
        sp = FieldBC(one(self.boundaries["species"]["left"], True), one(self.boundaries["species"]["right"], True))
        return BoundarySet(phi, sp)

    def material_params(self) -> MaterialParams:
        m = dict(self.material)
        if isinstance(m["kappa"], list):
            m["kappa"] = np.array(m["kappa"], dtype=float)
        return MaterialParams(**m)

    def physical_constants(self) -> PhysicalConstants:
        return PhysicalConstants(**self.constants)

    def numerics_config(self) -> NumericsConfig:
        return NumericsConfig(**self.numerics, output_every=self.output["every"])

    def velocity_closure(self) -> VelocityClosure:
        return VelocityClosure(**self.closure)

    def build_problem(self) -> Problem:
        return Problem(
            grid=self.grid(),
            species=self.species_objects(),
            network=self.network(),
            material=self.material_params(),
            constants=self.physical_constants(),
            bcs=self._bcs(),
            model=self.model,
            closure=self.velocity_closure(),
            numerics=self.numerics_config(),
        )

    def initial_state(self, grid: Grid1D | None = None) -> MixtureState:
        grid = self.grid() if grid is None else grid
        x = grid.centers
        ev = lambda spec: evaluate_field(spec, x, grid.x0, grid.length)  # noqa: E731
        solutes = [ev(self.initial["y"].get(s["name"], {"kind": "constant", "value": 0.0})) for s in self.species[:-1]]
        ys = np.array(solutes).reshape(len(self.species) - 1, grid.n_cells)
        y = np.vstack([ys, 1.0 - ys.sum(axis=0, keepdims=True)])
        return MixtureState(
            rho=ev(self.initial["rho"]),
            y=y,
            phi=ev(self.initial["phi"]),
            v=ev(self.initial["v"]),
            T=ev(self.initial["T"]),
            p=ev(self.initial["p"]),
        )

    def build(self):
        """(problem, initial state) of a validated scenario."""
        problem = self.build_problem()
        return problem, self.initial_state(problem.grid)

    # ---- regime

    def regime(self) -> ScalingRegime | None:
        if self.scaling is None:
            return None
        s = self.scaling
        return compute_deltas(s["E0"], s["B0"], s["length"], s["tau"], s["rho0"], s["i0"], s["alpha"], s["threshold"])

    def regime_report(self) -> dict:
        try:
            reg = self.regime()
        except (ConfigurationError, UnsupportedScalingError) as exc:
            return {"regime": None, "error": str(exc)}
        if reg is None:
            return {"regime": Regime.ELECTROSTATIC.value, "declared": False, "threshold": DELTA_THRESHOLD}
        return {**reg.as_dict(), "declared": True}

    # ---- validation

    def check(self) -> tuple[list, list]:
        """Return ``(errors, warnings)``, each a list of ``(rule, message)``."""
        errors: list = []
        warns: list = []
        names = [s["name"] for s in self.species]

        if len(self.species) < 2:
            errors.append(("species-count", "at least one solute and one solvent are required"))
        if len(set(names)) != len(names):
            errors.append(("species-names", "species names must be unique"))
        flags = [s["solvent"] for s in self.species]
        if sum(flags) != 1 or not flags[-1]:
            errors.append(("species-solvent", "exactly one species must be flagged solvent, and it must be last"))
        species = None
        try:
            species = self.species_objects()
        except ConfigurationError as exc:
            errors.append(("species-parameters", str(exc)))

        network = None
        bad_names = False
        for j, r in enumerate(self.reactions):
            for k, v in r["stoich"].items():
                if k not in names:
                    errors.append(("reaction-species", f"reaction {j} names unknown species {k!r}"))
                    bad_names = True
                if v != int(v):
                    errors.append(("reaction-stoich", f"reaction {j}: coefficient of {k!r} is not an integer"))
                    bad_names = True
        if not bad_names:
            try:
                network = self.network()
            except ConfigurationError as exc:
                errors.append(("reaction-network", str(exc)))
        if species is not None and network is not None:
            report = validate_network(species, network)
            rule = {"rank": "rank", "mass": "mass-criterion", "charge": "charge-criterion",
                    "positivity": "rate-positivity"}
            for name, (ok, msg) in report.checks.items():
                if not ok:
                    errors.append((rule[name], msg))

        grid = None
        try:
            grid = self.grid()
        except ConfigurationError as exc:
            errors.append(("domain", str(exc)))

        bcs = None
        try:
            bcs = self._bcs()
        except ConfigurationError as exc:
            errors.append(("boundary-periodic", str(exc)))
        solutes = set(names[:-1])
        for side in ("left", "right"):
            b = self.boundaries["species"][side]
            if b["kind"] == "dirichlet":
                if not isinstance(b["value"], dict):
                    errors.append(("boundary-species", f"species {side} dirichlet value must map solute names to fractions"))
                else:
                    extra = set(b["value"]) - solutes
                    if extra:
                        errors.append(("boundary-species", f"species {side} boundary names non-solutes {sorted(extra)}"))
                    vals = list(b["value"].values())
                    if any(v < 0 for v in vals) or sum(vals) >= 1:
                        errors.append(("boundary-species", f"species {side} boundary fractions must be >= 0 and sum below 1"))
            b = self.boundaries["phi"][side]
            if b["kind"] == "dirichlet" and not isinstance(b["value"], float):
                errors.append(("boundary-phi", f"potential {side} dirichlet value must be a number"))

        if self.model not in MODELS:
            errors.append(("model", f"model must be one of {MODELS}, got {self.model!r}"))
        closure = None
        if self.closure["kind"] == "darcy" and not 0 < self.closure["porosity"] <= 1:
            errors.append(("darcy-porosity", f"porosity must lie in (0, 1], got {self.closure['porosity']}"))
        else:
            try:
                closure = self.velocity_closure()
            except ConfigurationError as exc:
                errors.append(("closure", str(exc)))
        if self.model == "dpnp" and self.closure["kind"] != "darcy":
            errors.append(("dpnp-closure", "the dpnp model needs the darcy velocity closure"))
        material = None
        try:
            material = self.material_params()
        except (ConfigurationError, TypeError, ValueError) as exc:
            errors.append(("material", str(exc)))
        if material is not None and not material.viscous_criterion_ok:
            warns.append(("viscous-criterion",
                          f"2 eta/n + eta_v = {material.viscous_margin():.3e} < 0: the stress law can destroy entropy"))
        try:
            self.physical_constants()
        except ConfigurationError as exc:
            errors.append(("constants", str(exc)))
        try:
            self.numerics_config()
        except ConfigurationError as exc:
            errors.append(("numerics", str(exc)))
        if self.audit["every"] < 1 or self.output["every"] < 1:
            errors.append(("output", "audit.every and output.every must be >= 1"))

        unknown_y = set(self.initial["y"]) - solutes
        if unknown_y:
            errors.append(("initial-fields", f"initial.y names non-solutes {sorted(unknown_y)}"))
        state = None
        if grid is not None and not unknown_y and len(self.species) >= 2:
            try:
                state = self.initial_state(grid)
                state.check()
            except Exception as exc:  # noqa: BLE001 - every failure becomes a rule violation
                errors.append(("initial-fields", str(exc)))
                state = None
        if state is not None and closure is not None and closure.kind != "rest":
            if np.ptp(state.rho) > 1e-12 * np.max(state.rho):
                errors.append(("moving-density", "a moving mixture needs uniform density in 1-D"))
        if state is not None and bcs is not None and species is not None:
            z = np.array([s.valency for s in species])
            if bcs.phi.closed and np.any(z != 0):
                from .constitutive import free_charge
                c = self.physical_constants()
                q = np.sum(free_charge(state.y, state.rho, species, c))
                scale = np.sum(np.abs(c.e * z[:, None] / np.array([s.mass for s in species])[:, None] * state.rho * state.y))
                if abs(q) > 1e-10 * max(scale, np.finfo(float).tiny):
                    errors.append(("charge-compatibility",
                                   "no Dirichlet potential end: the initial net charge must vanish"))

        if self.scaling is not None:
            try:
                self.regime()
            except (ConfigurationError, UnsupportedScalingError) as exc:
                errors.append(("scaling", str(exc)))
        else:
            warns.append(("scaling-undeclared", "no characteristic scales given; the electrostatic limit is assumed"))

        if self.oracle is not None:
            try:
                OracleSpec(self.oracle["kind"], self.oracle["params"])
            except ValueError as exc:
                errors.append(("oracle", str(exc)))

        if self.model in ("pnp", "dpnp") and species is not None:
            warns.extend(self._pnp_warnings(species, network, state))
        return errors, warns

    def _pnp_warnings(self, species, network, state) -> list:
        out = []
        if state is not None and np.ptp(state.T) > 0:
            out.append(("pnp1", "the dilute model assumes a uniform temperature"))
        if state is not None and np.ptp(state.rho) > 0:
            out.append(("pnp2", "the dilute model assumes a constant density"))
        if species[-1].valency != 0:
            out.append(("pnp3", "the dilute model assumes a neutral solvent"))
        if network is not None and network.n_reactions and np.any(network.stoich[-1] != 0):
            out.append(("pnp4", "the dilute model assumes a nonreactive solvent"))
        if state is not None:
            ratio = float(np.max(state.y[:-1].sum(axis=0) / state.y[-1]))
            if ratio > DILUTE_RATIO:
                out.append(("pnp5", f"solutes reach {ratio:.3g} of the solvent fraction; the dilute limit needs <= {DILUTE_RATIO}"))
        return out

    def validate(self) -> "Scenario":
        """Raise ScenarioValidationError listing every error; keep warnings on the scenario."""
        errors, warns = self.check()
        self.warnings = warns
        if errors:
            raise ScenarioValidationError(errors)
        return self
