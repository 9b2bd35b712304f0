import json
import math
from pathlib import Path

import pytest

from nambuhj.cli import main

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


TOY = """
seed: 3
system: {coordinates: [x, y, z], hamiltonians: ["z", "y"]}
initial_conditions: [[0, 0, 0]]
verify: {samples: 20, section: "gamma3 = x2^2"}
hj_scan: {section: "lam", lambdas: [-1, 0, 1], base_grid: [[0, 0], [1, -1], [0.5, 2]]}
""".replace("x2", "y")


def test_list_systems(capsys):
    code, out, _ = run(capsys, "list-systems")
    assert code == 0
    assert [s["name"] for s in json.loads(out)["systems"]] == ["ks3", "riccati"]


def test_simulate_ks3(tmp_path, capsys):
    cfg = write(tmp_path, """
system: {preset: ks3, params: {c0: 0, b1: -1}}
integrator: {method: rk4-fixed, step: 1.0e-3, t_span: [0, 1]}
initial_conditions: [[0, 1, 0]]
""")
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 0
    lines = (tmp_path / "o" / "trajectory_0.csv").read_text().splitlines()
    assert lines[0] == "t,x,v,a,h,hbar,divergence"
    rows = [list(map(float, l.split(","))) for l in lines[1:]]
    h0, hb0 = rows[0][4], rows[0][5]
    assert max(max(abs(r[4] - h0), abs(r[5] - hb0)) for r in rows) <= 1e-7
    summary = json.loads(out)
    assert summary["system"] == "ks3" and all(c["pass"] for c in summary["checks"])


def test_simulate_riccati_closed_form(tmp_path, capsys):
    cfg = write(tmp_path, """
system: {preset: riccati, params: {n: 3, a0: 0, a1: 1, a2: 0}}
integrator: {method: rk45-adaptive, t_span: [0, 1], abs_tol: 1.0e-10, rel_tol: 1.0e-10}
initial_conditions: [[1, 2, 3]]
""")
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 0
    final = json.loads(out)["runs"][0]["final_state"]
    assert max(abs(v - k * math.e) for v, k in zip(final, (1, 2, 3))) <= 1e-8


def test_simulate_empty_ics_is_usage_error(tmp_path, capsys):
    cfg = write(tmp_path, "system: {preset: ks3}\ninitial_conditions: []\n")
    code, _, err = run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_simulate_domain_exit_is_runtime_error(tmp_path, capsys):
    cfg = write(tmp_path, TOY.replace('hamiltonians: ["z", "y"]', 'hamiltonians: ["z", "y"], domain: "1 + x"')
                + "integrator: {method: rk4-fixed, step: 0.01, t_span: [0, 3]}\n")
    code, _, err = run(capsys, "simulate", "--config", cfg, "--out", str(tmp_path))
    assert code == 3
    assert err.count("\n") == 1 and json.loads(err)["error"] == "runtime"


def test_verify_bracket_ks3(tmp_path, capsys):
    cfg = write(tmp_path, "seed: 1\nsystem: {preset: ks3}\nverify: {samples: 30}\n")
    code, out, _ = run(capsys, "verify", "bracket", "--config", cfg, "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0
    assert [c["name"] for c in rep["checks"]] == ["antisymmetry (exact)", "leibniz (relative)",
                                                   "conservation of generators (relative)"]
    assert json.loads((tmp_path / "verify_bracket.json").read_text()) == rep


def test_verify_hj_toy(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "hj", "--config", write(tmp_path, TOY), "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0
    det = next(c for c in rep["checks"] if c["name"] == "hj_det_residual")
    assert det["max_residual"] == 0.0 and det["pass"]


def test_verify_failure_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, TOY.replace("gamma3 = y^2", "x"))
    code, out, _ = run(capsys, "verify", "hj", "--config", cfg, "--out", str(tmp_path))
    assert code == 1 and not all(c["pass"] for c in json.loads(out)["checks"])


def test_verify_fi(tmp_path, capsys):
    cfg = write(tmp_path, "seed: 2\nsystem: {coordinates: [x, y, z], hamiltonians: [x, y]}\nverify: {samples: 20}\n")
    code, out, _ = run(capsys, "verify", "fi", "--config", cfg, "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["checks"][0]["max_residual"] <= 1e-6


def test_verify_lagrangian(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "lagrangian", "--config", write(tmp_path, TOY), "--out", str(tmp_path))
    assert code == 0


def test_verify_unknown_suite(tmp_path, capsys):
    code, _, err = run(capsys, "verify", "nope", "--config", write(tmp_path, TOY), "--out", str(tmp_path))
    assert code == 2 and "nope" in json.loads(err)["message"]


def test_hj_scan_constant_family(tmp_path, capsys):
    code, out, _ = run(capsys, "hj-scan", "--config", write(tmp_path, TOY), "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 0 and rep["complete_solution"] is True
    lines = (tmp_path / "hj_scan.csv").read_text().splitlines()
    assert lines[0] == "lambda,x,y,hj_det_residual,relatedness_residual"
    assert all(float(l.split(",")[3]) == 0.0 for l in lines[1:])


def test_hj_scan_linear_family(tmp_path, capsys):
    cfg = write(tmp_path, TOY.replace('section: "lam"', 'section: "lam*x"'))
    code, out, _ = run(capsys, "hj-scan", "--config", cfg, "--out", str(tmp_path))
    rep = json.loads(out)
    assert code == 1
    per = {c["name"]: c for c in rep["checks"] if c["name"].startswith("lambda=")}
    assert per["lambda=0.0: hj_det_residual"]["pass"]
    assert per["lambda=1.0: hj_det_residual"]["max_residual"] == 1.0
    assert per["lambda=-1.0: hj_det_residual"]["max_residual"] == 1.0


def test_hj_scan_empty_range(tmp_path, capsys):
    cfg = write(tmp_path, TOY.replace("lambdas: [-1, 0, 1]", "lambdas: []"))
    code, _, err = run(capsys, "hj-scan", "--config", cfg, "--out", str(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_hj_scan_parse_error(tmp_path, capsys):
    cfg = write(tmp_path, TOY.replace('section: "lam"', 'section: "lam +* x"'))
    code, _, err = run(capsys, "hj-scan", "--config", cfg, "--out", str(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "config"


def test_derive_density_ks3(tmp_path, capsys):
    cfg = write(tmp_path, "seed: 4\nsystem: {preset: ks3}\nderive_density: {samples: 100}\n")
    code, out, _ = run(capsys, "derive-density", "--config", cfg, "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "density.csv").read_text().splitlines()
    assert lines[0] == "x,v,a,rho_star,spread,printed_ratio" and len(lines) == 101


def test_derive_density_riccati4(tmp_path, capsys):
    cfg = write(tmp_path, "seed: 4\nsystem: {preset: riccati, params: {n: 4, a0: 1, a1: 0.5, a2: -0.3}}\n")
    code, out, _ = run(capsys, "derive-density", "--config", cfg, "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["checks"][0]["max_residual"] <= 1e-6


def test_derive_density_all_stationary(tmp_path, capsys):
    cfg = write(tmp_path, "system: {preset: riccati, params: {a0: 0, a1: 0, a2: 0}}\n")
    code, out, _ = run(capsys, "derive-density", "--config", cfg, "--out", str(tmp_path))
    rep = json.loads(out)
    assert rep["skipped"] == 100 and rep["checks"][0]["samples"] == 0


def test_bad_arguments(capsys):
    code, _, err = run(capsys, "simulate", "--format", "xml")
    assert code == 2 and json.loads(err)["error"] == "usage"
    code, _, err = run(capsys, "simulate")
    assert code == 2 and json.loads(err)["error"] == "config"


def test_seed_override_and_json_format(tmp_path, capsys):
    cfg = write(tmp_path, "seed: 4\nsystem: {preset: ks3}\nderive_density: {samples: 5}\n")
    run(capsys, "derive-density", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "99")
    run(capsys, "derive-density", "--config", cfg, "--out", str(tmp_path / "b"))
    run(capsys, "derive-density", "--config", cfg, "--out", str(tmp_path / "c"), "--format", "json")
    assert (tmp_path / "a" / "density.csv").read_bytes() != (tmp_path / "b" / "density.csv").read_bytes()
    assert len(json.loads((tmp_path / "c" / "density.json").read_text())["rows"]) == 5


def test_flags_accepted_before_subcommand(tmp_path, capsys):
    cfg = write(tmp_path, "seed: 4\nsystem: {preset: ks3}\nderive_density: {samples: 3}\n")
    code, _, _ = run(capsys, "--config", cfg, "--out", str(tmp_path), "derive-density")
    assert code == 0 and (tmp_path / "density.csv").exists()


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.yaml")))
def test_shipped_configs_load(name):
    from nambuhj.config import build_system, load_config
    cfg = load_config(CONFIGS / name)
    build_system(cfg.system)
