import json

import numpy as np
import pytest

from nambuhj.config import build_system, config_from_mapping, load_config
from nambuhj.errors import ConfigError
from nambuhj.report import Check, check_from, checks_report, fmt, write_csv, write_table
from nambuhj.sampling import make_rng, random_polynomial_text, sample_points


def test_rng_reproducible():
    a, b = make_rng(9), make_rng(9)
    assert np.array_equal(sample_points(a, 3, 5), sample_points(b, 3, 5))
    assert random_polynomial_text(make_rng(4), ["x", "y"], 3) == random_polynomial_text(make_rng(4), ["x", "y"], 3)


def test_sample_points_accept_and_box():
    pts = sample_points(make_rng(1), 2, 50, -1, 1, accept=lambda p: p[0] > 0)
    assert pts.shape == (50, 2) and np.all(pts[:, 0] > 0) and np.all(np.abs(pts) <= 1)


def test_check_records():
    assert Check("a", 3, 1e-10, 1e-9).passed
    c = check_from("b", [1e-3, -2e-3, 0.0], 1e-3)
    assert c.max_residual == 2e-3 and not c.passed and c.samples == 3
    assert check_from("c", [float("nan")], 1.0).max_residual == float("inf")
    d = c.as_dict()
    assert list(d) == ["name", "samples", "max_residual", "tolerance", "pass"]


def test_fmt_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt("t") == "t"


def test_csv_header_and_format(tmp_path):
    write_csv(tmp_path / "a.csv", ["t", "x"], [[0.0, 1 / 3]])
    assert (tmp_path / "a.csv").read_bytes() == b"t,x\r\n0,0.33333333333333331\r\n"
    p = write_table(tmp_path / "b", ["t"], [[1.0]], "json")
    assert json.loads(p.read_text()) == {"columns": ["t"], "rows": [[1.0]]}


def test_report_shape():
    rep = checks_report("ks3", [Check("a", 1, 0.0, 0.0)], suite="bracket")
    assert set(rep) == {"version", "system", "checks", "suite"}


def test_config_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("seed: 3\nsystem: {preset: ks3}\nintegrator: {method: rk4-fixed, step: 0.01}\n"
                 "initial_conditions: [[0, 1, 0]]\nverify: {samples: 5}\noutputs: {dir: out}\n")
    cfg = load_config(p)
    assert cfg.seed == 3 and cfg.integrator.step == 0.01 and cfg.section("verify") == {"samples": 5}
    assert cfg.out_dir == "out" and cfg.initial_conditions == [[0.0, 1.0, 0.0]]


@pytest.mark.parametrize("data", [{}, {"system": {"preset": "ks3"}, "integrator": {"bogus": 1}},
                                  {"system": {"preset": "ks3"}, "integrator": {"t_span": [1, 0]}},
                                  {"system": {"preset": "ks3"}, "initial_conditions": [["a"]]}])
def test_config_errors(data):
    with pytest.raises(ConfigError):
        config_from_mapping(data)


def test_inline_system():
    sys_ = build_system({"coordinates": ["x", "y", "z"], "hamiltonians": ["z", "k*y"], "coefficients": {"k": 2},
                         "density": "2", "domain": "1 + x"})
    assert list(sys_.rhs.values([0, 0, 0])) == [-1.0, 0.0, 0.0]
    assert sys_.domain([0, 0, 0]) and not sys_.domain([-2, 0, 0])
    with pytest.raises(ConfigError):
        build_system({"coordinates": ["x", "y", "z"], "hamiltonians": ["z"]})
    with pytest.raises(ConfigError):
        build_system({"preset": "ks3", "params": {"nope": 1}})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "none.yaml")
    with pytest.raises(ConfigError):
        load_config(None)
