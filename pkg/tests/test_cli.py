import csv
import json

import numpy as np
import pytest

from groupbound.cli import main, read_groups, ParseError, DataError


@pytest.fixture
def toy_files(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((40, 5))
    y = 3.0 * X[:, 0] + 0.01 * rng.standard_normal(40)
    np.savetxt(tmp_path / "X.csv", X, delimiter=",")
    np.savetxt(tmp_path / "y.csv", y[:, None], delimiter=",")
    groups = [{"name": "first", "indices": [1]}, {"name": "rest", "indices": [2, 3, 4, 5]}]
    (tmp_path / "groups.json").write_text(json.dumps(groups))
    return tmp_path


def _bound_args(d, *extra):
    return ["bound", "--x", str(d / "X.csv"), "--y", str(d / "y.csv"), "--groups", str(d / "groups.json"),
            "--splits", "3", "--epsilon", "0.5", "--threads", "1", *extra]


def test_calibrate_prints_ratio_and_is_idempotent(tmp_path, capsys):
    cache = tmp_path / "cache.json"
    args = ["calibrate", "--dim", "3", "--alpha", "0.2", "--reps", "300", "--seed", "1", "--cache", str(cache)]
    assert main(args) == 0
    out = capsys.readouterr().out
    assert "dim=3" in out and "m/dim=" in out
    first = cache.read_text()
    assert main(args) == 0
    assert cache.read_text() == first
    assert any(e["dim"] == 3 and e["alpha"] == 0.2 for e in json.loads(first))


def test_bound_rejects_strong_single_variable(toy_files):
    out = toy_files / "out.json"
    assert main(_bound_args(toy_files, "--seed", "5", "--out", str(out))) == 0
    doc = json.loads(out.read_text())
    first, rest = doc["results"]
    assert first["name"] == "first" and first["indices"] == [1]
    assert first["rejected"] and first["lower_bound"] > 1.0
    assert len(first["per_split_bounds"]) == 3
    assert rest["lower_bound"] <= first["lower_bound"]
    assert doc["manifest"]["seed"] == 5 and doc["manifest"]["command"] == "bound"


def test_replay_reproduces_and_pins_seed(toy_files):
    out = toy_files / "out.json"
    assert main(_bound_args(toy_files, "--out", str(out))) == 0
    doc = json.loads(out.read_text())
    argv = doc["manifest"]["argv"]
    assert "--seed" in argv
    assert argv[argv.index("--seed") + 1] == str(doc["manifest"]["seed"])
    again = toy_files / "again.json"
    assert main(["replay", str(out), "--out", str(again)]) == 0
    assert json.loads(again.read_text())["results"] == doc["results"]


def test_empty_group_list(toy_files):
    (toy_files / "groups.json").write_text("[]")
    out = toy_files / "out.json"
    assert main(_bound_args(toy_files, "--seed", "1", "--out", str(out))) == 0
    assert json.loads(out.read_text())["results"] == []


def test_out_of_range_index_is_data_error(toy_files, capsys):
    (toy_files / "groups.json").write_text(json.dumps([{"name": "bad", "indices": [6]}]))
    assert main(_bound_args(toy_files, "--seed", "1")) == 3
    assert "index 6" in capsys.readouterr().err


def test_row_mismatch_is_data_error(toy_files):
    np.savetxt(toy_files / "y.csv", np.ones((39, 1)), delimiter=",")
    assert main(_bound_args(toy_files, "--seed", "1")) == 3


def test_parse_error_names_location(toy_files, capsys):
    lines = (toy_files / "X.csv").read_text().splitlines()
    fields = lines[2].split(",")
    fields[3] = "abc"
    lines[2] = ",".join(fields)
    (toy_files / "X.csv").write_text("\n".join(lines) + "\n")
    assert main(_bound_args(toy_files, "--seed", "1")) == 2
    assert "row 3, column 4" in capsys.readouterr().err


def test_usage_errors(toy_files):
    assert main(_bound_args(toy_files, "--alpha", "1.0")) == 2
    assert main(["simulate", "--setting", "vii", "--out", str(toy_files / "s.csv")]) == 2
    assert main(["calibrate", "--dim", "0", "--alpha", "0.05"]) == 2
    assert main([]) == 2


def test_read_groups_validation(tmp_path):
    path = tmp_path / "g.json"
    path.write_text('{"name": "x"}')
    with pytest.raises(ParseError):
        read_groups(path, 3)
    path.write_text('[{"name": "x", "indices": [1, "2"]}]')
    with pytest.raises(ParseError):
        read_groups(path, 3)
    path.write_text('[{"name": "x", "indices": [0]}]')
    with pytest.raises(DataError):
        read_groups(path, 3)
    path.write_text('[{"name": "x", "indices": [3, 1, 3]}]')
    assert read_groups(path, 3) == [("x", (0, 2))]


def test_cluster_output(toy_files):
    out = toy_files / "tree.json"
    args = ["cluster", "--x", str(toy_files / "X.csv"), "--y", str(toy_files / "y.csv"), "--splits", "2",
            "--epsilon", "0.5", "--seed", "3", "--threads", "1", "--out", str(out)]
    assert main(args) == 0
    doc = json.loads(out.read_text())["tree"]
    nodes = {n["id"]: n for n in doc["nodes"]}
    root = nodes[doc["root"]]
    assert sorted(root["members"]) == [1, 2, 3, 4, 5]
    assert root["tested"] and root["rejected"]


def test_simulate_writes_csv_and_manifest(tmp_path):
    out = tmp_path / "sim.csv"
    args = ["simulate", "--setting", "i", "--sims", "1", "--sigma", "0.1", "--scale-p", "12", "--scale-n", "24",
            "--splits", "2", "--epsilon", "0.5", "--seed", "2", "--threads", "1", "--quiet", "--out", str(out)]
    assert main(args) == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert {r["group_id"] for r in rows} == {"single_2", "block1_half", "block1", "all", "null"}
    manifest = json.loads((tmp_path / "sim.csv.manifest.json").read_text())
    assert manifest["seed"] == 2
    assert manifest["extra"]["settings"][0]["p"] == 12
