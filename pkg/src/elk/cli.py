"""Command line: ``elk run | report | validate | classify``.

Exit codes: 0 ok, 1 usage or scenario error, 2 solver failure, 3 audit
violation under ``--strict-audit``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_AUDIT = 3

log = logging.getLogger("elk")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def apply_thread_cap(env=os.environ) -> int | None:
    """Honour ELK_THREADS by capping the BLAS/OpenMP pools.

    Effective when set before numpy loads its BLAS, which is why the solver
    modules are imported lazily by the subcommands.
    """
    raw = env.get("ELK_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise SystemExit(f"ELK_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise SystemExit(f"ELK_THREADS must be a positive integer, got {raw!r}")
    for var in _THREAD_VARS:
        env[var] = str(n)
    return n


def _load(path):
    from .errors import ScenarioParseError, ScenarioValidationError
    from .scenario import load_scenario

    try:
        return load_scenario(path), None
    except ScenarioParseError as exc:
        return None, f"parse error: {exc}"
    except ScenarioValidationError as exc:
        return None, "validation failed:\n" + "\n".join(f"  [{r}] {m}" for r, m in exc.errors)


# --------------------------------------------------------------------------
# oracle comparison


def oracle_comparison(scenario, problem, state) -> dict | None:
    """Compare the final state with the declared closed-form reference."""
    import numpy as np

    from . import oracles

    if scenario.oracle is None:
        return None
    kind, par = scenario.oracle["kind"], scenario.oracle["params"]
    c = problem.constants
    x = problem.grid.centers - problem.grid.x0
    names = [s.name for s in problem.species]
    if kind == "debye":
        z = problem.valencies[:-1]
        n_inf = state.rho[-1] * state.y[:-1, -1] / problem.masses[:-1]
        lam = oracles.debye_length(float(np.mean(problem.eps_cells())), float(state.T[-1]), z, n_inf,
                                   c.e, c.k_B, c.eps0)
        far = float(state.phi[-1])
        window = float(par.get("fit_lengths", 5.0))
        mask = x < window * lam
        fit = oracles.fit_decay_length(x, state.phi - far, mask)
        return {"kind": kind, "debye_length": lam, "fitted": fit, "relative_error": abs(fit - lam) / lam}
    if kind == "boltzmann":
        out = {"kind": kind, "max_relative_error": 0.0}
        for l in range(len(names) - 1):
            vt = c.k_B * state.T / c.e
            ref = state.y[l, 0] * np.exp(problem.valencies[l] * state.phi[0] / vt[0])
            prof = oracles.boltzmann_profile(state.phi, problem.valencies[l], state.T, ref, c.e, c.k_B)
            err = float(np.max(np.abs(state.y[l] - prof) / prof))
            out["max_relative_error"] = max(out["max_relative_error"], err)
        return out
    if kind == "heat_kernel":
        l = names.index(par["species"])
        prof = oracles.heat_kernel_periodic(
            problem.grid.centers, state.time, problem.diffusivities[l], par["sigma0"],
            problem.grid.length, par.get("mass", 1.0), par.get("center", 0.0),
        )
        num = state.y[l] - par.get("offset", 0.0)
        err = float(np.sqrt(np.sum((num - prof) ** 2) / np.sum(prof**2)))
        return {"kind": kind, "relative_l2_error": err}
    if kind == "reaction_equilibrium":
        a, b = names.index(par["reactant"]), names.index(par["product"])
        K = float(problem.network.equilibrium_constants[0])
        ratio = state.y[b] / state.y[a]
        return {"kind": kind, "K": K, "max_relative_error": float(np.max(np.abs(ratio - K)) / K)}
    return {"kind": kind, "note": "no comparison implemented"}


# --------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    import numpy as np

    from . import audit, io
    from .errors import ElkError, SolverError, StateError
    from .scaling import Regime
    from .solvers import advance, steady_state

    sc, err = _load(args.scenario)
    if err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    regime = sc.regime_report()
    if regime.get("regime") != Regime.ELECTROSTATIC.value and not args.force:
        print(f"scenario is in the {regime.get('regime')} regime; the Poisson model applies only in the "
              "electrostatic limit (use --force to run anyway)", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sc.save(out / io.SCENARIO_COPY)
    problem, state = sc.build()
    warnings = [{"rule": r, "message": m} for r, m in sc.warnings]
    for w in warnings:
        log.warning("[%s] %s", w["rule"], w["message"])

    t0 = time.perf_counter()
    meta = {
        "version": io.version_string(),
        "scenario": sc.name,
        "regime": regime,
        "warnings": warnings,
        "threads": args.threads,
        "strict_audit": bool(args.strict_audit),
    }
    audit_violations: list = []
    probe = audit.constitutive_probe(problem.material)
    audit_violations.extend({"step": None, "message": m} for m in probe)

    drifts = {"species": np.zeros(len(problem.species)), "total": 0.0, "charge": 0.0}
    kept = [state]
    budget_min = [np.inf, -np.inf]
    writer = io.AuditWriter(out / io.AUDIT_LOG)

    def do_audit(step, st):
        if not sc.audit["enabled"]:
            return
        b = audit.entropy_production(problem, st)
        rec = {"step": step, "time": st.time, **b.record()}
        writer.write(rec)
        budget_min[0] = min(budget_min[0], rec["min_total"])
        budget_min[1] = max(budget_min[1], rec["max_total"])
        for v in rec["violations"]:
            audit_violations.append({"step": step, "message": v})

    def track(prev, cur):
        rep = audit.conservation_report([prev, cur], problem)
        drifts["species"] = np.maximum(drifts["species"], rep.species_drift)
        drifts["total"] = max(drifts["total"], rep.total_mass_drift)
        drifts["charge"] = max(drifts["charge"], rep.charge_drift)

    n_snap = 0
    io.write_snapshot(out / io.snapshot_name(n_snap), state, problem.grid, problem.species, problem.constants)
    n_snap += 1
    do_audit(0, state)
    status, code, steps = "completed", EXIT_OK, 0
    try:
        if sc.mode == "steady":
            res = steady_state(problem, state)
            steps = res.steps
            meta["steady"] = {"converged": res.converged, "steps": res.steps,
                              "final_residual": res.residuals[-1] if res.residuals else 0.0}
            track(state, res.state)
            state = res.state
            do_audit(steps, state)
            io.write_snapshot(out / io.snapshot_name(n_snap), state, problem.grid, problem.species, problem.constants)
            n_snap += 1
            kept.append(state)
        else:
            num = problem.numerics
            n_steps = max(int(np.ceil((num.t_end - state.time) / num.dt - 1e-9)), 0)
            for k in range(1, n_steps + 1):
                dt = min(num.dt, num.t_end - state.time) if k == n_steps else num.dt
                nxt = advance(problem, state, dt)
                track(state, nxt)
                state = nxt
                steps = k
                if k % sc.audit["every"] == 0 or k == n_steps:
                    do_audit(k, state)
                if k % sc.output["every"] == 0 or k == n_steps:
                    io.write_snapshot(out / io.snapshot_name(n_snap), state, problem.grid, problem.species,
                                      problem.constants)
                    n_snap += 1
                    if sc.audit["first_law"] or sc.audit["time_reversal"]:
                        kept.append(state)
    except (SolverError, StateError, ElkError, FloatingPointError) as exc:
        status, code = f"solver failure: {exc}", EXIT_SOLVER
        print(f"solver failure after {steps} steps at t={state.time:.6g}: {exc}", file=sys.stderr)
    finally:
        writer.close()

    closed = problem.bcs.species.closed
    meta["conservation"] = {
        "species_drift": [float(d) for d in drifts["species"]],
        "total_mass_drift": float(drifts["total"]),
        "charge_drift": float(drifts["charge"]),
        "closed": closed,
        "note": "" if closed else "open system, drift not asserted",
    }
    if code == EXIT_OK:
        if sc.audit["first_law"] and len(kept) > 1:
            fl = audit.first_law_residual(kept, problem)
            meta["first_law"] = {"max_raw": fl.max_raw, "max_corrected": fl.max_corrected}
        if sc.audit["time_reversal"] and len(kept) > 2:
            tr = audit.time_reversal_residual(kept, problem)
            meta["time_reversal"] = {"forward": tr.forward, "backward": tr.backward, "ratio": tr.describe()}
        meta["oracle"] = oracle_comparison(sc, problem, state)
    meta["entropy_production"] = {"min": budget_min[0], "max": budget_min[1]} if sc.audit["enabled"] else None
    meta["audit_violations"] = audit_violations
    if code == EXIT_OK and audit_violations:
        for v in audit_violations:
            print(f"audit: step {v['step']}: {v['message']}", file=sys.stderr)
        if args.strict_audit:
            status, code = "audit violation", EXIT_AUDIT
    meta.update({"status": status, "exit_code": code, "steps": steps, "snapshots": n_snap,
                 "final_time": state.time, "wall_time_s": time.perf_counter() - t0})
    io.write_json(out / io.RUN_META, meta)
    print(f"{sc.name}: {status} ({steps} steps, {n_snap} snapshots) -> {out}")
    return code


# --------------------------------------------------------------------------
# report, validate, classify


def cmd_report(args) -> int:
    import json

    import numpy as np

    from . import io

    d = Path(args.dir)
    meta_path = d / io.RUN_META
    snaps = sorted(d.glob(io.SNAPSHOT_GLOB))
    if not meta_path.exists() or not snaps:
        print(f"{d}: no run artifacts (need {io.RUN_META} and snapshots)", file=sys.stderr)
        return EXIT_USAGE
    meta = json.loads(meta_path.read_text())
    lines = [f"run: {meta.get('scenario')}  version {meta.get('version')}",
             f"status: {meta.get('status')} (exit {meta.get('exit_code')}), {meta.get('steps')} steps, "
             f"t = {meta.get('final_time')}, wall {meta.get('wall_time_s', 0):.3g} s",
             f"regime: {meta.get('regime', {}).get('regime')}"]
    for w in meta.get("warnings", []):
        lines.append(f"warning [{w['rule']}]: {w['message']}")
    cons = meta.get("conservation", {})
    lines.append("conservation (max relative drift per step):")
    lines.append(f"  species: {', '.join(f'{x:.3e}' for x in cons.get('species_drift', []))}")
    lines.append(f"  total mass: {cons.get('total_mass_drift', 0):.3e}   charge: {cons.get('charge_drift', 0):.3e}"
                 + (f"   ({cons['note']})" if cons.get("note") else ""))
    log_path = d / io.AUDIT_LOG
    if log_path.exists():
        recs = io.read_audit_log(log_path)
        if recs:
            mins = np.array([r["min_total"] for r in recs])
            maxs = np.array([r["max_total"] for r in recs])
            integ = np.array([r["integrated"]["total"] for r in recs])
            lines.append(f"entropy production: {len(recs)} audited steps, min {mins.min():.3e}, max {maxs.max():.3e}, "
                         f"integrated in [{integ.min():.3e}, {integ.max():.3e}]")
            worst = max(max(r["identities"].values()) for r in recs)
            lines.append(f"formulation identities: worst relative mismatch {worst:.3e}")
    viol = meta.get("audit_violations", [])
    lines.append(f"audit violations: {len(viol)}")
    for v in viol[:10]:
        lines.append(f"  step {v['step']}: {v['message']}")
    for key in ("first_law", "time_reversal"):
        if meta.get(key):
            lines.append(f"{key.replace('_', ' ')}: " + ", ".join(f"{k} {v}" for k, v in meta[key].items()))
    orc = meta.get("oracle")
    if orc:
        lines.append("oracle: " + ", ".join(f"{k} {v}" for k, v in orc.items()))
    lines.append(f"snapshots: {len(snaps)} ({snaps[0].name} .. {snaps[-1].name})")
    print("\n".join(lines))
    return EXIT_OK


def cmd_validate(args) -> int:
    sc, err = _load(args.scenario)
    if err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    for r, m in sc.warnings:
        print(f"warning [{r}] {m}")
    print(f"{sc.name}: valid")
    return EXIT_OK


def cmd_classify(args) -> int:
    import json

    from .errors import ScenarioParseError
    from .scenario import load_scenario

    try:
        sc = load_scenario(args.scenario, validate=False)
    except ScenarioParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    rep = sc.regime_report()
    print(json.dumps(rep, indent=2))
    return EXIT_USAGE if rep.get("regime") is None else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elk", description="1-D reactive electrolyte simulator with entropy audit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("scenario")
    r.add_argument("--strict-audit", action="store_true", help="exit 3 on any audit violation")
    r.add_argument("--force", action="store_true", help="run outside the electrostatic regime")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.set_defaults(func=cmd_run)
    rp = sub.add_parser("report", help="summarize a run directory")
    rp.add_argument("dir")
    rp.set_defaults(func=cmd_report)
    v = sub.add_parser("validate", help="parse and validate a scenario")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)
    c = sub.add_parser("classify", help="print the scaling regime of a scenario")
    c.add_argument("scenario")
    c.set_defaults(func=cmd_classify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        args.threads = apply_thread_cap()
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
