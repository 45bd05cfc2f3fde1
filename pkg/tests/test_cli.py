import json

import pytest

from wavemap_lab import cli


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr()


def load(path):
    return json.loads((path / "summary.json").read_text())


def test_no_command_is_usage_error(capsys):
    code, out = run([], capsys)
    assert code == 2


def test_empty_config_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text("{}")
    code, out = run(["run", "--config", str(cfg)], capsys)
    assert code == 2
    assert "kind" in out.err


@pytest.mark.parametrize("config", [
    {"kind": "phase", "params": {"region": "omega9"}},
    {"kind": "phase", "params": {"n_eps": 3}},
    {"kind": "spectral", "params": {"lam_min": 1.0, "lam_max": 0.5}},
    {"kind": "renorm", "params": {"j": 6.5}},
    {"kind": "renorm", "params": {"j": 5}},
    {"kind": "bogus"},
    {"kind": "phase", "extra": 1},
])
def test_invalid_configs(tmp_path, capsys, config):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(config))
    code, _ = run(["run", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 2
    assert not (tmp_path / "o").exists()


def test_unreadable_config(tmp_path, capsys):
    code, _ = run(["run", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 2
    (tmp_path / "bad.json").write_text("[1, 2]")
    code, _ = run(["run", "--config", str(tmp_path / "bad.json")], capsys)
    assert code == 2


def test_kind_mismatch(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "harmonic"}))
    code, _ = run(["phase", "--config", str(cfg)], capsys)
    assert code == 2


def test_phase_omega1_reports_exact_area(tmp_path, capsys):
    code, out = run(["phase", "--region", "omega1", "--out", str(tmp_path)], capsys)
    s = load(tmp_path)
    assert "/" in s["report"]["area_exact"]
    assert s["report"]["boundary"]["all_positive"]
    # the Omega_-1 area misses 221/100 (see the decisions ledger)
    assert code == 1
    assert s["failures"] == ["area_exceeds_221/100"]
    assert "FAIL  area_exceeds_221/100" in out.out
    assert (tmp_path / "phase.svg").exists() and (tmp_path / "zeros.csv").exists()


def test_phase_omega2_passes(tmp_path, capsys):
    code, _ = run(["phase", "--region", "omega2", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert load(tmp_path)["passed"]


def test_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "phase", "params": {"region": "omega_-1"}, "seed": 4}))
    code, _ = run(["phase", "--config", str(cfg), "--region", "omega2", "--out", str(tmp_path / "o")], capsys)
    s = load(tmp_path / "o")
    assert code == 0
    assert s["params"]["region"] == "omega2" and s["seed"] == 4


def test_env_output_root(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    code, _ = run(["harmonic", "--no-figures"], capsys)
    assert code == 0
    assert (tmp_path / "harmonic" / "summary.json").exists()
    assert (tmp_path / "harmonic" / "profile.csv").exists()
    assert not (tmp_path / "harmonic" / "harmonic.svg").exists()


def test_deterministic_outputs(tmp_path, capsys):
    for d in ("a", "b"):
        code, _ = run(["renorm", "--n-eps", "16", "--out", str(tmp_path / d)], capsys)
        assert code == 0
    for name in ("summary.json", "zero_lemma.csv", "renorm.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_coercivity_and_negative_control(tmp_path, capsys):
    code, _ = run(["coercivity", "--n-samples", "60", "--n-adversarial", "9", "--out", str(tmp_path / "a")], capsys)
    assert code == 0
    code, _ = run(["coercivity", "--n-samples", "60", "--n-adversarial", "20", "--scale", "1.5",
                   "--out", str(tmp_path / "b")], capsys)
    assert code == 0
    s = load(tmp_path / "b")
    assert s["report"]["n_positive_found"] > 0
    assert (tmp_path / "b" / "coercivity.svg").exists()


def test_evolve_and_spectral(tmp_path, capsys):
    code, _ = run(["evolve", "--t-final", "20", "--out", str(tmp_path / "e")], capsys)
    assert code == 0
    code, _ = run(["evolve", "--degree", "1", "--t-final", "50", "--out", str(tmp_path / "q")], capsys)
    assert code == 0
    code, _ = run(["spectral", "--n-lam", "3", "--lam-max", "10", "--out", str(tmp_path / "s")], capsys)
    assert code == 0
    header = (tmp_path / "s" / "weyl.csv").read_text().splitlines()[0]
    assert header.startswith("lam,re_m,im_m,omega")


def test_library_error_is_reported(tmp_path, capsys, monkeypatch):
    from wavemap_lab.errors import SearchFailure

    def boom(p, seed):
        raise SearchFailure("no bracket")

    monkeypatch.setitem(cli.EXPERIMENTS, "harmonic", boom)
    code, _ = run(["harmonic", "--out", str(tmp_path)], capsys)
    assert code == 1
    assert load(tmp_path)["failures"] == ["completed"]


def test_schema_lists_every_kind():
    schema = cli.config_schema()
    assert set(schema["properties"]["kind"]["enum"]) == set(cli.EXPERIMENTS)


@pytest.mark.slow
def test_full_verify(tmp_path, capsys):
    code, out = run(["full-verify", "--out", str(tmp_path)], capsys)
    s = load(tmp_path)
    names = [c["name"] for c in s["checks"]]
    assert len(names) > 25
    assert any(n.startswith("renorm.") for n in names) and any(n.startswith("spectral.") for n in names)
    # everything passes except the Omega_-1 area bound
    assert s["failures"] == ["phase_omega_-1.area_exceeds_221/100"]
    assert code == 1
    assert (tmp_path / "evolve.svg").exists()
