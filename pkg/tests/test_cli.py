import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest
import yaml

from trigmon.cli import main
from trigmon.config import expand_sweep, scenario_from_dict, scenario_to_dict, sweep_from_dict
from trigmon.errors import ConfigError
from trigmon.sim import METRIC_FIELDS

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

SMALL = {
    "num_agents": 2,
    "duration_seconds": 200,
    "seed": 3,
    "changes": [{"at_seconds": 120, "kind": "level_shift", "magnitude": 2.0, "affected_agents": "all"}],
}


def write(tmp_path, doc, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc) if not isinstance(doc, str) else doc)
    return str(p)


def test_validate_shipped_files(capsys):
    assert main(["validate", str(SCENARIOS / "scenario.yaml")]) == 0
    assert main(["validate", str(SCENARIOS / "sweep.yaml")]) == 0
    assert "12 cells" in capsys.readouterr().out


def test_validate_m_above_n(tmp_path, capsys):
    path = write(tmp_path, {**SMALL, "agent_config": {"buffer_capacity": 10, "max_transmit": 11}})
    assert main(["validate", path]) == 1
    err = capsys.readouterr().err
    assert "max_transmit" in err and "buffer_capacity" in err


def test_unknown_field_and_bad_values(tmp_path, capsys):
    assert main(["validate", write(tmp_path, {**SMALL, "num_agent": 3})]) == 1
    assert "num_agent" in capsys.readouterr().err
    assert main(["validate", write(tmp_path, {**SMALL, "agent_config": {"policy": "sometimes"}})]) == 1
    assert "agent_config.policy" in capsys.readouterr().err
    assert main(["validate", write(tmp_path, {**SMALL, "duration_seconds": "long"})]) == 1


def test_unreadable_file(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "missing.yaml")]) == 1
    assert main(["run", write(tmp_path, "a: [unclosed", "bad.yaml")]) == 1


def test_run_is_byte_identical(tmp_path):
    path = write(tmp_path, SMALL)
    outs = []
    for i in range(2):
        out = tmp_path / f"out{i}.jsonl"
        assert main(["run", path, "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    (line,) = outs[0].decode().splitlines()
    rec = json.loads(line)
    assert set(rec) == {"cell_index", "seed", "axes", "config", "metrics"}
    assert set(rec["metrics"]) == set(METRIC_FIELDS)


def test_seed_override(tmp_path):
    path = write(tmp_path, SMALL)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["run", path, "--out", str(a), "--seed", "99"])
    main(["run", write(tmp_path, {**SMALL, "seed": 99}, "s99.yaml"), "--out", str(b)])
    assert json.loads(a.read_text())["seed"] == 99
    assert a.read_bytes() == b.read_bytes()


def test_event_log_and_csv(tmp_path):
    path = write(tmp_path, SMALL)
    out, log, table = tmp_path / "o", tmp_path / "log", tmp_path / "t.csv"
    assert main(["run", path, "--out", str(out), "--event-log", str(log), "--csv", str(table)]) == 0
    metrics = json.loads(out.read_text())["metrics"]
    events = [json.loads(x) for x in log.read_text().splitlines()]
    assert len(events) == metrics["messages_total"]
    assert sum(e["bytes"] for e in events) == metrics["bytes_total"]
    rows = list(csv.reader(io.StringIO(table.read_text())))
    header = rows[0]
    assert header[:2] == ["cell_index", "seed"]
    cfg_cols = [c for c in header if c.startswith("config.")]
    assert cfg_cols == sorted(cfg_cols)
    assert [c for c in header if c.startswith("metrics.")] == [f"metrics.{m}" for m in METRIC_FIELDS]
    assert len(rows) == 2


def test_sweep_record_count(tmp_path):
    doc = {"base": SMALL, "axes": [{"path": "agent_config.alpha", "values": [0.01, 0.1]}], "replications": 3}
    out = tmp_path / "sweep.jsonl"
    assert main(["sweep", write(tmp_path, doc), "--out", str(out), "--parallel", "2"]) == 0
    recs = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(recs) == 6
    assert [r["cell_index"] for r in recs] == list(range(6))
    assert [r["seed"] for r in recs] == [3, 4, 5, 3, 4, 5]
    assert [r["axes"]["agent_config.alpha"] for r in recs] == [0.01] * 3 + [0.1] * 3


def test_sweep_bad_axis(tmp_path, capsys):
    doc = {"base": SMALL, "axes": [{"path": "agent_config.alfa", "values": [0.1]}]}
    assert main(["validate", write(tmp_path, doc)]) == 1
    assert "agent_config.alfa" in capsys.readouterr().err


def test_round_trip():
    cfg = scenario_from_dict(yaml.safe_load((SCENARIOS / "scenario.yaml").read_text()))
    assert scenario_from_dict(scenario_to_dict(cfg)) == cfg


def test_expand_cross_product():
    spec = sweep_from_dict(yaml.safe_load((SCENARIOS / "sweep.yaml").read_text()))
    cells = expand_sweep(spec)
    assert len(cells) == 12
    assert len({(c.axes["agent_config.alpha"], c.axes["agent_config.policy"], c.seed) for c in cells}) == 12


def test_config_error_type():
    with pytest.raises(ConfigError) as info:
        scenario_from_dict({"generator": {"family": "normal", "params": {"sd": -1}}})
    assert info.value.fields


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "trigmon", "validate", write(tmp_path, SMALL)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "ok" in res.stdout
