"""Command line: argument handling, output files and exit codes."""
import csv
import json

import pytest

from scldpc.cli import build_parser, main

TINY = ["--l", "3", "--r", "6", "--big-l", "4", "--m", "6"]


@pytest.fixture(autouse=True)
def isolated(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_init_config(tmp_path, capsys):
    assert main(["init-config", str(tmp_path / "cfg")]) == 0, "exit 0"
    assert (tmp_path / "cfg" / "config.json").exists(), "config written"
    assert "config written" in capsys.readouterr().out, "path reported"


def test_reproduce_lists_targets(capsys):
    assert main(["reproduce"]) == 0, "listing is not an error"
    assert "fig-9a" in capsys.readouterr().out.split(), "targets printed one per line"


def test_reproduce_unknown_target(tmp_path, capsys):
    code = main(["--out", str(tmp_path / "out"), "reproduce", "fig-99"])

    assert code == 2, "usage error"
    assert "error: unknown target" in capsys.readouterr().err, "message on stderr"
    assert not (tmp_path / "out").exists(), "rejected before any output"


def test_sample_graph(tmp_path):
    out = tmp_path / "out"

    assert main(["--out", str(out), "--no-cache", "sample-graph", *TINY, "--seed", "3"]) == 0
    summary = json.loads((out / "sample-graph" / "graph.json").read_text())

    assert summary["n_variables"] == 24, "L * M variables"
    assert summary["seed"] == 3, "seed flag honored"
    assert (out / "sample-graph" / "edges.csv").exists(), "edge list written"
    assert (out / "sample-graph" / "resolved_config.json").exists(), "run metadata written"


def test_simulate(tmp_path):
    out = tmp_path / "out"

    code = main(["--out", str(out), "--no-cache", "--workers", "1", "simulate", *TINY,
                 "--eps", "0.9", "--trials", "5"])
    with (out / "simulate" / "monte_carlo.csv").open() as fh:
        rows = list(csv.DictReader(fh))

    assert code == 0, "exit 0"
    assert len(rows) == 1, "one row per epsilon"
    assert rows[0]["trials"] == "5" and rows[0]["failures"] == "5", "eps=0.9 always fails"


def test_predict_published(tmp_path):
    out = tmp_path / "out"

    code = main(["--out", str(out), "--no-cache", "predict", "--l", "3", "--r", "6", "--big-l", "50",
                 "--m", "1000", "--published", "--eps", "0.45", "0.46", "--scale-m", "2"])
    with (out / "predict" / "prediction.csv").open() as fh:
        rows = list(csv.DictReader(fh))

    assert code == 0, "exit 0"
    assert len(rows) == 4, "two law points plus two what-if points"
    assert {r["variant"] for r in rows} == {"full-sl", "what-if M x2"}, "variants labelled"


def test_predict_without_params(tmp_path, capsys):
    code = main(["--out", str(tmp_path / "out"), "--no-cache", "predict", *TINY])

    assert code == 2, "no parameter source"
    assert "--params" in capsys.readouterr().err, "hint on stderr"
