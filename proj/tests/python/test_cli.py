import hashlib
import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("FUSEDFIR_CLI", "fusedfir")
CONFIGS = Path(os.environ.get("FUSEDFIR_CONFIGS", Path(__file__).resolve().parents[2] / "configs"))


def cli(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)


def digest(folder):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(Path(folder).iterdir())}


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    r = cli("synth", "--config", CONFIGS / "two_groups.json", "--out", out)
    assert r.returncode == 0, r.stderr
    return out


def test_synth_writes_twelve_csvs_and_is_repeatable(scenario, tmp_path):
    assert len(list(scenario.glob("*.csv"))) == 12
    manifest = json.loads((scenario / "manifest.json").read_text())
    assert len(manifest) == 12
    assert "group" not in (scenario / "manifest.json").read_text()
    assert cli("synth", "--config", CONFIGS / "two_groups.json", "--out", tmp_path).returncode == 0
    assert digest(tmp_path) == digest(scenario)


def test_noiseless_sidecar(tmp_path):
    cfg = json.loads((CONFIGS / "two_groups.json").read_text())
    cfg["noise_sigma"] = 0.0
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert cli("synth", "--config", tmp_path / "cfg.json", "--out", tmp_path / "d").returncode == 0
    assert json.loads((tmp_path / "d" / "ground_truth.json").read_text())["noiseless"] is True


def test_bounds_ratio(scenario):
    r = cli("bounds", "--manifest", scenario / "manifest.json", "--taps", 5)
    assert r.returncode == 0, r.stderr
    b = json.loads(r.stdout)
    K = 6
    assert b["lambda1_sufficient"] / b["lambda1_max"] == pytest.approx(2 * (K - 1) / K, rel=1e-9)


def test_bounds_single_condition_exit_3(scenario, tmp_path):
    manifest = json.loads((scenario / "manifest.json").read_text())
    keep = [e for e in manifest if e["name"].startswith("BR30")]
    for e in keep:
        e["file"] = str(scenario / e["file"])
    (tmp_path / "m.json").write_text(json.dumps(keep))
    r = cli("bounds", "--manifest", tmp_path / "m.json", "--taps", 5)
    assert r.returncode == 3
    assert "fusion bound undefined" in r.stderr


def test_bounds_identical_conditions_zero(tmp_path):
    cfg = json.loads((CONFIGS / "two_groups.json").read_text())
    cfg["noise_sigma"] = 0.0
    cfg["conditions"] = [{"name": "BR30", "group": 0}, {"name": "BR40", "group": 0}]
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert cli("synth", "--config", tmp_path / "cfg.json", "--out", tmp_path / "d").returncode == 0
    r = cli("bounds", "--manifest", tmp_path / "d" / "manifest.json", "--taps", 5)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["lambda1_max"] <= 1e-9


def test_missing_manifest_exit_2(tmp_path):
    r = cli("run", "--manifest", tmp_path / "nope.json", "--taps", 5, "--out", tmp_path / "o")
    assert r.returncode == 2


def test_run_fit_eval_and_variant(scenario, tmp_path):
    m = scenario / "manifest.json"
    r = cli("run", "--manifest", m, "--taps", 5, "--k", 2, "--seed", 7, "--out", tmp_path / "a", "--trace")
    assert r.returncode == 0, r.stderr
    for stage in ("bounds", "grid_search", "joint_solve", "kmeans", "refit", "cross_evaluate"):
        assert f"[{stage}]" in r.stdout
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["schema"] == 1
    assert report["clusters"]["k"] == 2
    assert (tmp_path / "a" / "trace.csv").exists()

    again = cli("run", "--manifest", m, "--taps", 5, "--k", 2, "--seed", 7, "--out", tmp_path / "b", "--trace")
    assert again.returncode == 0
    assert digest(tmp_path / "a") == digest(tmp_path / "b")

    sq = cli("run", "--manifest", m, "--taps", 5, "--k", 2, "--seed", 7, "--out", tmp_path / "c",
             "--fusion-variant", "l2-squared")
    assert sq.returncode == 0, sq.stderr
    sq_report = json.loads((tmp_path / "c" / "report.json").read_text())
    assert sq_report["hyperparameters"]["fusion_variant"] == "l2-squared"
    assert sq_report["clusters"]["labels"] == report["clusters"]["labels"]

    assert cli("fit", "--manifest", m, "--taps", 5, "--out", tmp_path / "f").returncode == 0
    ev = cli("eval", "--manifest", m, "--taps", 5, "--thetas", tmp_path / "f" / "thetas.csv")
    assert ev.returncode == 0, ev.stderr
    assert ev.stdout.startswith("method,model,")
    assert len(ev.stdout.strip().splitlines()) == 1 + 6


def test_non_convergence_exit_4(scenario, tmp_path):
    r = cli("run", "--manifest", scenario / "manifest.json", "--taps", 5, "--max-iter", 2,
            "--out", tmp_path / "o")
    assert r.returncode == 4
