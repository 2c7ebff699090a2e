"""Command line behaviour and exit codes."""

import json

import pytest

from elk import io
from elk.cli import EXIT_AUDIT, EXIT_OK, EXIT_SOLVER, EXIT_USAGE, apply_thread_cap, main


def _write(tmp_path, data, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


@pytest.fixture
def diffusion(demos_dir):
    data = json.loads((demos_dir / "diffusion.json").read_text())
    data["numerics"]["t_end"] = 5e-4
    data["oracle"] = None
    return data


def test_run_writes_artifacts(tmp_path, demos_dir, capsys):
    out = tmp_path / "run"
    assert main(["run", str(demos_dir / "diffusion.json"), "--strict-audit", "--out", str(out)]) == EXIT_OK
    assert (out / io.RUN_META).exists() and (out / io.AUDIT_LOG).exists() and (out / io.SCENARIO_COPY).exists()
    assert len(list(out.glob(io.SNAPSHOT_GLOB))) == 21
    meta = json.loads((out / io.RUN_META).read_text())
    assert meta["status"] == "completed" and meta["audit_violations"] == []
    capsys.readouterr()
    assert main(["report", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    for section in ("conservation", "entropy production", "audit violations: 0", "oracle", "snapshots"):
        assert section in text


def test_report_without_run(tmp_path):
    assert main(["report", str(tmp_path)]) == EXIT_USAGE


def test_inconsistent_viscosity_exits_3(tmp_path, diffusion):
    diffusion["material"].update(shear_viscosity=1.0, bulk_viscosity=-1.0)
    p = _write(tmp_path, diffusion)
    assert main(["run", str(p), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["run", str(p), "--strict-audit", "--out", str(tmp_path / "b")]) == EXIT_AUDIT
    meta = json.loads((tmp_path / "b" / io.RUN_META).read_text())
    assert meta["audit_violations"]


def test_solver_failure_exits_2(tmp_path, demos_dir):
    data = json.loads((demos_dir / "migration.json").read_text())
    data["numerics"].update(gummel_max_iter=1, gummel_tol=1e-16, dt_min_factor=0.25)
    p = _write(tmp_path, data)
    assert main(["run", str(p), "--out", str(tmp_path / "o")]) == EXIT_SOLVER
    meta = json.loads((tmp_path / "o" / io.RUN_META).read_text())
    assert meta["status"].startswith("solver failure")


def test_usage_errors_exit_1(tmp_path, diffusion):
    assert main([]) == EXIT_USAGE
    assert main(["run", str(tmp_path / "missing.json")]) == EXIT_USAGE
    diffusion["bogus"] = 1
    assert main(["validate", str(_write(tmp_path, diffusion))]) == EXIT_USAGE


def test_validate_and_classify(tmp_path, demos_dir, capsys):
    assert main(["validate", str(demos_dir / "debye_layer.json")]) == EXIT_OK
    assert main(["classify", str(demos_dir / "debye_layer.json")]) == EXIT_OK
    assert '"regime"' in capsys.readouterr().out


def test_non_electrostatic_needs_force(tmp_path, diffusion):
    diffusion["scaling"].update(E0=1.0, B0=1e6)
    p = _write(tmp_path, diffusion)
    assert main(["run", str(p), "--out", str(tmp_path / "a")]) == EXIT_USAGE
    assert main(["run", str(p), "--force", "--out", str(tmp_path / "b")]) == EXIT_OK


def test_runs_are_reproducible(tmp_path, diffusion):
    p = _write(tmp_path, diffusion)
    for d in ("a", "b"):
        assert main(["run", str(p), "--out", str(tmp_path / d)]) == EXIT_OK
    snaps = sorted((tmp_path / "a").glob(io.SNAPSHOT_GLOB))
    assert snaps
    for s in snaps:
        assert s.read_bytes() == (tmp_path / "b" / s.name).read_bytes()


def test_thread_cap():
    env = {"ELK_THREADS": "2"}
    assert apply_thread_cap(env) == 2 and env["OMP_NUM_THREADS"] == "2"
    assert apply_thread_cap({}) is None
    with pytest.raises(SystemExit):
        apply_thread_cap({"ELK_THREADS": "0"})
