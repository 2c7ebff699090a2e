"""Run artifacts: snapshot CSVs, the JSON-lines audit log and run metadata."""

from __future__ import annotations

import json
import subprocess
from pathlib import Path

import numpy as np

from . import __version__
from .constitutive import free_charge
from .state import Grid1D, MixtureState

SNAPSHOT_FMT = "%.17g"
SNAPSHOT_GLOB = "snapshot_*.csv"
AUDIT_LOG = "audit.jsonl"
RUN_META = "run.json"
SCENARIO_COPY = "scenario.json"


def snapshot_header(n_species: int) -> list[str]:
    return ["x", "rho"] + [f"y_{l + 1}" for l in range(n_species)] + ["phi", "v", "T", "p", "rho_E"]


def write_snapshot(path, state: MixtureState, grid: Grid1D, species, constants) -> None:
    """One row per cell; '%.17g' round-trips every float64 exactly."""
    rho_E = free_charge(state.y, state.rho, species, constants)
    cols = [grid.centers, state.rho, *state.y, state.phi, state.v, state.T, state.p, rho_E]
    np.savetxt(path, np.column_stack(cols), fmt=SNAPSHOT_FMT, delimiter=",",
               header=",".join(snapshot_header(state.n_species)), comments="")


def read_snapshot(path) -> dict:
    """Columns of a snapshot file by header name, plus ``time`` when recorded in the name."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, k] for k, name in enumerate(header)}


def snapshot_to_state(cols: dict, time: float = 0.0) -> MixtureState:
    ys = sorted((k for k in cols if k.startswith("y_")), key=lambda k: int(k[2:]))
    return MixtureState(cols["rho"], np.array([cols[k] for k in ys]), cols["phi"], cols["v"], cols["T"], cols["p"], time)


def snapshot_name(index: int) -> str:
    return f"snapshot_{index:06d}.csv"


class AuditWriter:
    """Appends one JSON record per audited step."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w")

    def write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, allow_nan=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_audit_log(path) -> list[dict]:
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def version_string() -> str:
    """``git describe``-style version of the package source, else the release number."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=here, capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
        if out:
            return f"{__version__}+g{out}" if not out.startswith("v") else out
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_json(path, data: dict) -> None:
    Path(path).write_text(json.dumps(data, indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
