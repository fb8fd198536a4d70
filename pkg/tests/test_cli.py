import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from petzlab.checks import REGISTRY
from petzlab.cli import _fmt, generate_ensemble, main
from petzlab.linalg import load_matrix, save_matrix
from petzlab.states import QuantumChannel, random_isometry_channel, random_state, save_channel, validate_channel
from petzlab.suite import SuiteConfig, resolve_checks, run_suite, summarize, write_replays


@pytest.fixture
def pair(tmp_path):
    save_matrix(tmp_path / "rho.json", np.diag([0.75, 0.25]))
    save_matrix(tmp_path / "eta.json", np.diag([0.5, 0.5]))
    return tmp_path


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out.strip(), out.err


def test_fmt():
    assert _fmt(0.130812035941) == "0.130812035941"
    assert _fmt(1.0) == "1.000000000000"
    assert _fmt(0.0) == "0.000000000000"
    assert _fmt(np.inf) == "+inf"
    assert _fmt(2.5e-7) == "2.500000000000e-07"


def test_compute_rel_entropy(capsys, pair):
    code, out, _ = _run(capsys, "compute", "rel-entropy", "--rho", pair / "rho.json", "--eta", pair / "eta.json")
    assert code == 0
    assert abs(float(out) - 0.130812036) <= 1e-9


def test_compute_measured_and_alpha_z(capsys, pair):
    code, out, _ = _run(capsys, "compute", "measured_rel_entropy", "--rho", pair / "rho.json", "--eta",
                        pair / "eta.json")
    assert code == 0 and abs(float(out) - 0.130812036) <= 1e-6
    code, out, _ = _run(capsys, "compute", "alpha-z", "--rho", pair / "rho.json", "--eta", pair / "eta.json",
                        "--alpha", 1.5, "--z", 1.5)
    expected = np.log(0.75 ** 1.5 * 0.5 ** -0.5 + 0.25 ** 1.5 * 0.5 ** -0.5) / 0.5
    assert code == 0 and abs(float(out) - expected) <= 1e-11


def test_compute_alpha_z_domain_is_usage_error(capsys, pair):
    code, _, err = _run(capsys, "compute", "alpha-z", "--rho", pair / "rho.json", "--eta", pair / "eta.json",
                        "--alpha", 3, "--z", 3)
    assert code == 2 and "unchecked" in err


def test_compute_p_fidelity_self(capsys, pair):
    code, out, _ = _run(capsys, "compute", "p-fidelity", "--rho", pair / "rho.json", "--eta", pair / "rho.json")
    assert code == 0 and out == "1.000000000000"


def test_compute_support_violation_prints_inf(capsys, tmp_path):
    save_matrix(tmp_path / "a.json", np.diag([1.0, 0.0]))
    save_matrix(tmp_path / "b.json", np.diag([0.0, 1.0]))
    code, out, _ = _run(capsys, "compute", "rel-entropy", "--rho", tmp_path / "a.json", "--eta", tmp_path / "b.json")
    assert code == 0 and out == "+inf"


def test_compute_weighted_norm(capsys, pair):
    save_matrix(pair / "x.json", np.eye(2))
    code, out, _ = _run(capsys, "compute", "weighted-norm", "--x", pair / "x.json", "--rho", pair / "rho.json",
                        "--p", 3, "--w", 0.2)
    assert code == 0 and abs(float(out) - 1) <= 1e-12


@pytest.mark.parametrize("quantity", ["petz", "universal-recovery"])
def test_compute_recovery_fixed_point(capsys, tmp_path, quantity):
    eta = random_state(3, 5).matrix
    ch = random_isometry_channel(3, 2, 3, 6)
    save_matrix(tmp_path / "eta.json", eta)
    save_channel(tmp_path / "ch.json", ch)
    code, _, _ = _run(capsys, "compute", quantity, "--eta", tmp_path / "eta.json", "--channel", tmp_path / "ch.json",
                      "--out", tmp_path / "out.json")
    assert code == 0
    assert np.abs(load_matrix(tmp_path / "out.json") - eta).max() <= 1e-9


def test_compute_missing_option(capsys, pair):
    code, _, err = _run(capsys, "compute", "rel-entropy", "--rho", pair / "rho.json")
    assert code == 2 and "--eta" in err


def test_compute_bad_file(capsys, tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    code, _, _ = _run(capsys, "compute", "rel-entropy", "--rho", tmp_path / "bad.json", "--eta",
                      tmp_path / "bad.json")
    assert code == 2
    code, _, _ = _run(capsys, "compute", "rel-entropy", "--rho", tmp_path / "missing.json", "--eta",
                      tmp_path / "missing.json")
    assert code == 2


def test_unknown_command_and_check(capsys, tmp_path):
    assert _run(capsys, "frobnicate")[0] == 2
    code, _, err = _run(capsys, "check", "--suite", "no_such_check", "--out", tmp_path / "r.json")
    assert code == 2 and "no_such_check" in err


def test_bad_dimension(capsys, tmp_path):
    assert _run(capsys, "check", "--dim", "1", "--out", tmp_path / "r.json")[0] == 2
    assert _run(capsys, "check", "--dim", "17", "--out", tmp_path / "r.json")[0] == 2


def test_check_small_suite(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, stdout, _ = _run(capsys, "check", "--suite", "dpi,hirschman-scalar", "--dim", "2,3", "--instances", 3,
                           "--seed", 42, "--out", out)
    assert code == 0
    doc = json.loads(out.read_text())
    assert [c["check"] for c in doc["checks"]] == ["dpi_relative_entropy", "dpi_sandwiched", "dpi_p_fidelity",
                                                   "hirschman_scalar"]
    assert doc["version"] and doc["config"]["seed"] == 42 and doc["total_failures"] == 0
    for c in doc["checks"]:
        assert c["slack_rel"] == 1e-7 and c["runtime_ms"] is None and c["failures"] == []
        assert set(c) >= {"check", "params", "instances", "min_margin", "mean_margin", "failures", "runtime_ms"}
    assert len(stdout.splitlines()) == 4


def test_check_csv(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, _, _ = _run(capsys, "check", "--suite", "lieb", "--instances", 4, "--format", "csv", "--out", out)
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4 and all(r["pass"] == "True" and r["check"] == "lieb" for r in rows)


def test_check_timing_flag(capsys, tmp_path):
    out = tmp_path / "r.json"
    _run(capsys, "check", "--suite", "lieb", "--instances", 2, "--timing", "--out", out)
    assert json.loads(out.read_text())["checks"][0]["runtime_ms"] >= 0


def test_reports_byte_identical(capsys, tmp_path):
    args = ["check", "--suite", "trace,dpi", "--dim", "2", "--instances", 4, "--seed", 9, "--quiet"]
    assert _run(capsys, *args, "--out", tmp_path / "a.json")[0] == 0
    assert _run(capsys, *args, "--out", tmp_path / "b.json")[0] == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_failures_exit_1_and_write_replays(monkeypatch, capsys, tmp_path):
    from petzlab import checks, suite

    def failing(seed, dim, index, p_values=None, rule=None):
        rep = checks.make_report("lieb", f"d{dim}-i{index}", 1.0, 0.0, -1.0)
        rep.replay = {"rho": np.eye(dim) / dim, "channel": QuantumChannel(np.eye(dim)[None])}
        return [rep]

    monkeypatch.setitem(suite.REGISTRY, "lieb", failing)
    code, out, _ = _run(capsys, "check", "--suite", "lieb", "--instances", 2, "--out", tmp_path / "r.json",
                        "--replay-dir", tmp_path / "replay")
    assert code == 1 and "2 failures" in out
    target = tmp_path / "replay" / "lieb" / "d2-i0"
    assert json.loads((target / "rho.json").read_text())["dim"] == 2
    assert QuantumChannel.from_json(json.loads((target / "channel.json").read_text())).d_in == 2
    assert json.loads((target / "report.json").read_text())["pass"] is False


def test_gen_deterministic_and_valid(capsys, tmp_path):
    desc = {"dim": 2, "count": 3, "seed": 11, "state_kind": "mixed", "channel_kind": "random"}
    (tmp_path / "spec.json").write_text(json.dumps(desc))
    for name in ("a", "b"):
        assert _run(capsys, "gen", "--spec", tmp_path / "spec.json", "--out", tmp_path / name)[0] == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 9 and files[0] == "s11-i00000-channel.json"
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    for i in range(3):
        ch = QuantumChannel.from_json(json.loads((tmp_path / "a" / f"s11-i{i:05d}-channel.json").read_text()))
        assert validate_channel(ch).passed


@pytest.mark.parametrize("state_kind,channel_kind", [("pure", "pinching"), ("comparable", "depolarizing"),
                                                     ("sufficient", "random"), ("near_degenerate", "unitary")])
def test_generate_ensemble_kinds(state_kind, channel_kind):
    out = generate_ensemble({"dim": 3, "count": 2, "seed": 1, "state_kind": state_kind,
                             "channel_kind": channel_kind})
    assert len(out) == 2
    for inst in out:
        assert validate_channel(QuantumChannel.from_json(inst["channel"])).passed


def test_gen_bad_descriptor(capsys, tmp_path):
    (tmp_path / "spec.json").write_text(json.dumps({"dim": 2}))
    assert _run(capsys, "gen", "--spec", tmp_path / "spec.json", "--out", tmp_path / "o")[0] == 2
    assert _run(capsys, "gen", "--spec", tmp_path / "nope.json", "--out", tmp_path / "o")[0] == 2


def test_resolve_checks():
    assert resolve_checks("all") == list(REGISTRY)
    assert resolve_checks("gt,alt,gt") == ["gt", "alt"]
    assert resolve_checks(["dpi-sandwiched"]) == ["dpi_sandwiched"]
    with pytest.raises(ValueError):
        resolve_checks("bogus")


def test_suite_config_validation():
    with pytest.raises(ValueError):
        SuiteConfig(checks="all", p_values=[0.5])
    with pytest.raises(ValueError):
        SuiteConfig(checks="all", instances_per_dim=0)


def test_thread_pool_matches_serial(monkeypatch):
    config = SuiteConfig(checks="lieb,hirschman_scalar", dims=[2, 3], instances_per_dim=3)
    serial, _ = run_suite(config, log=None)
    monkeypatch.setenv("PETZLAB_THREADS", "2")
    pooled, _ = run_suite(config, log=None)
    assert json.dumps(serial, sort_keys=True) == json.dumps(pooled, sort_keys=True)


def test_summarize_p_dependent_params():
    s = summarize("recovery_p", [], None, [1.0, 3.0])
    assert s["params"]["p"] == [1.0, 3.0] and s["instances"] == 0 and s["min_margin"] is None


def test_write_replays_skips_passes(tmp_path):
    rep = REGISTRY["lieb"](0, 2, 0)
    assert write_replays({"lieb": rep}, tmp_path) == 0


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "petzlab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "petz-lab" in res.stdout
