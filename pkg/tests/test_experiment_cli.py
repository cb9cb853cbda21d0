import csv
import json

import pytest

from spinlab import experiment_cli as cli
from spinlab.errors import ConfigError
from spinlab.stability_lab import compare


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def test_list_suites(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    ids = [s["id"] for s in cli.list_suites()]
    assert len(ids) == 12
    for sid in ("sw-gap-bound", "edwards-sokal", "lower-bound-heawood"):
        assert sid in ids and sid in out
    assert all(s["certifies"] for s in cli.list_suites())


def test_stationarity_suite_exit_zero(tmp_path):
    assert cli.main(["verify-stationarity", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "verify-stationarity.rows.csv")
    assert rows and all(float(r["stationarity_error"]) <= 1e-10 for r in rows)
    assert {r["chain"] for r in rows} == {"glauber", "vertex_field", "edge_field", "event_field", "swendsen_wang"}


def test_si_upper_config(tmp_path):
    cfg = {"experiment": "si-upper", "slack": 0.5, "samples": 3,
           "systems": [{"id": "K4", "graph": {"family": "complete", "args": [4]},
                        "params": {"beta": 0, "gamma": 1}},
                       {"id": "prism", "graph": {"family": "prism", "args": [3]},
                        "params": {"beta": 0, "gamma": 1}}]}
    path = write_config(tmp_path, cfg)
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
    rows = read_rows(tmp_path / "o" / "si-upper.rows.csv")
    assert rows and all(float(r["ceiling"]) == pytest.approx(1.5) for r in rows)
    assert all(float(r["lambda_max"]) <= 1.5 + 1e-9 for r in rows)


def test_malformed_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"experiment": "si-upper",\n  "slack": }')
    assert cli.main(["run", "--config", str(p)]) == 1
    err = capsys.readouterr().err
    assert "bad.json:2:" in err and "malformed JSON" in err


def test_unknown_key_and_bad_values(tmp_path, capsys):
    assert cli.main(["run", "--config", str(write_config(tmp_path, {"experiment": "uniqueness", "bogus": 1}))]) == 1
    p = write_config(tmp_path, {"experiment": "uniqueness", "t_values": [1.5]}, "t.json")
    assert cli.main(["run", "--config", str(p)]) == 1
    assert "invalid config" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        cli.validate_config({"systems": [{"graph": {"family": "path", "args": [3]}, "colour": "red"}]})


def test_usage_errors(tmp_path):
    assert cli.main(["no-such-suite", "--out", str(tmp_path)]) == 1
    assert cli.main(["run"]) == 1
    assert cli.main(["--bogus-flag"]) == 1
    assert cli.main(["uniqueness", "--jobs", "0", "--out", str(tmp_path)]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 1
    p = write_config(tmp_path, {"experiment": "uniqueness"})
    assert cli.main(["sw-gap-bound", "--config", str(p)]) == 1


def test_violation_exit_code(tmp_path, monkeypatch):
    def bad(ctx):
        return cli.SuiteResult([{"x": 1}], [compare("always", 0.0, 1.0)])

    monkeypatch.setitem(cli.SUITES, "broken", cli.Suite("broken", "d", "c", bad))
    assert cli.main(["broken", "--out", str(tmp_path)]) == 2


def test_outputs_are_deterministic(tmp_path):
    cfg = {"experiment": "si-upper", "samples": 2, "seed": 3}
    p = write_config(tmp_path, cfg)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", str(p), "--out", str(a)]) == 0
    assert cli.main(["run", "--config", str(p), "--out", str(b), "--jobs", "2"]) == 0
    for suffix in (".rows.csv", ".reports.csv", ".json"):
        assert (a / f"si-upper{suffix}").read_bytes() == (b / f"si-upper{suffix}").read_bytes()


def test_seed_override_changes_samples(tmp_path):
    cfg = write_config(tmp_path, {"experiment": "si-upper", "samples": 2, "seed": 3})
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "4"])
    assert (tmp_path / "a/si-upper.rows.csv").read_bytes() != (tmp_path / "b/si-upper.rows.csv").read_bytes()


def test_max_states_env_skips(tmp_path, monkeypatch):
    monkeypatch.setenv("SPINLAB_MAX_STATES", "64")
    assert cli.main(["lower-bound-heawood", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "lower-bound-heawood.json").read_text())
    assert doc["summary"]["not_applicable"] >= 1


def test_graph_sources(tmp_path):
    from spinlab.graph_core import generate, save_graph

    save_graph(generate("cycle", 4), tmp_path / "c4.json")
    cfg = {"experiment": "verify-stationarity", "chains": [{"kind": "glauber"}],
           "systems": [{"graph": {"file": "c4.json"}, "params": {"beta": 0, "gamma": 1, "lambda": 1}},
                       {"graph": {"n": 2, "edges": [[0, 1]]}, "params": {"beta": 2, "gamma": 2, "lambda": 1},
                        "pinning": {"assignments": {"0": 1}}}]}
    p = write_config(tmp_path, cfg)
    assert cli.main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    rows = read_rows(tmp_path / "o" / "verify-stationarity.rows.csv")
    assert len(rows) == 2


def test_config_lambda_required_where_needed(tmp_path):
    cfg = {"experiment": "verify-stationarity",
           "systems": [{"graph": {"family": "path", "args": [3]}, "params": {"beta": 0, "gamma": 1}}]}
    assert cli.main(["run", "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path)]) == 1
