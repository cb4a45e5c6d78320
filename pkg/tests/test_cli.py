import csv
import io
import json

import numpy as np
import pytest

from daac.cli import main, run_pipeline
from daac.ingest import write_dataset
from daac.report import SCHEMA_VERSION, RunReport, render_table
from daac.solver import SolverConfig
from daac.synth import PlantedSpec, generate


@pytest.fixture(scope="module")
def two_block(tmp_path_factory):
    d = tmp_path_factory.mktemp("two_block")
    inst = generate(PlantedSpec(n=40, k=2, p_in=0.4, p_out=0.02, p_att_in=0.2, p_att_out=0.2,
                                seed=0))
    write_dataset(inst.dataset, d)
    return d


def _args(d, *extra, truth=True):
    a = ["--interactions", str(d / "interactions.tsv"), "--attitudes", str(d / "mentions.tsv")]
    if truth:
        a += ["--labels", str(d / "labels.tsv"), "--truth-relations", str(d / "truth_relations.tsv")]
    return a + list(extra)


def test_fit_table_output(two_block, capsys):
    assert main(["fit", *_args(two_block), "--k", "2", "--restarts", "2",
                 "--format", "table"]) == 0
    out = capsys.readouterr().out
    assert "antagonism" in out and "nmi      1" in out and "\033[" not in out


def test_fit_json_is_byte_identical(two_block, tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        assert main(["fit", *_args(two_block), "--k", "2", "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["schema_version"] == SCHEMA_VERSION and rep["timing"] is None
    assert rep["metrics"]["nmi"] == 1.0 and rep["relation_accuracy"] == 1.0


def test_timing_is_opt_in(two_block, capsys):
    assert main(["fit", *_args(two_block), "--k", "2", "--restarts", "1", "--timing"]) == 0
    assert json.loads(capsys.readouterr().out)["timing"]["seconds"] > 0


def test_report_round_trip(two_block, capsys):
    main(["fit", *_args(two_block), "--k", "2", "--restarts", "1"])
    text = capsys.readouterr().out
    rep = RunReport.from_json(text)
    assert rep.to_json() == text
    assert RunReport.from_dict(rep.to_dict()) == rep
    with pytest.raises(ValueError):
        RunReport.from_dict({**rep.to_dict(), "schema_version": 99})
    with pytest.raises(ValueError):
        RunReport.from_dict({**rep.to_dict(), "extra": 1})


def test_table_and_json_share_report(two_block, capsys):
    main(["fit", *_args(two_block), "--k", "2", "--restarts", "1"])
    rep = RunReport.from_json(capsys.readouterr().out)
    main(["fit", *_args(two_block), "--k", "2", "--restarts", "1", "--format", "table"])
    assert capsys.readouterr().out == render_table(rep)
    assert "\033[31m" in render_table(rep, color=True)


def test_fit_without_truth(two_block, capsys):
    assert main(["fit", *_args(two_block, truth=False), "--k", "2", "--restarts", "1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["metrics"] is None and rep["community_labels"] == {}


def test_two_step(two_block, capsys):
    assert main(["two-step", *_args(two_block), "--k", "2", "--restarts", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["method"] == "two-step"
    assert [r["relation"] for r in rep["relations"]] == ["antagonism"]


def test_two_step_with_empty_attitudes(two_block, tmp_path, capsys):
    empty = tmp_path / "empty.tsv"
    empty.write_text("")
    args = ["--interactions", str(two_block / "interactions.tsv"), "--attitudes", str(empty)]
    assert main(["two-step", *args, "--k", "2", "--restarts", "1"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert [r["relation"] for r in rep["relations"]] == ["none"]


def test_sweep_csv(two_block, capsys):
    assert main(["sweep", *_args(two_block), "--k", "2", "--restarts", "1",
                 "--lambda-grid", "1,1000"]) == 0
    cap = capsys.readouterr()
    rows = list(csv.reader(io.StringIO(cap.out)))
    assert rows[0] == ["lambda", "nmi", "ari", "purity", "correct_relations", "total_relations"]
    assert [r[0] for r in rows[1:]] == ["1.0", "1000.0"]
    assert "best lambda" in cap.err


def test_sweep_default_grid_and_alpha_column(two_block, tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["sweep", *_args(two_block), "--k", "2", "--restarts", "1", "--max-iters", "20",
                 "--out", str(out), "--jobs", "2"]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 11
    assert main(["sweep", *_args(two_block), "--k", "2", "--restarts", "1", "--max-iters", "5",
                 "--lambda-grid", "1e3", "--alpha-grid", "1e-3,1e-2"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:2] == ["lambda", "alpha"] and len(rows) == 3


def test_single_point_sweep_matches_fit(two_block, capsys):
    main(["sweep", *_args(two_block), "--k", "2", "--restarts", "1", "--lambda-grid", "1e6"])
    row = list(csv.reader(io.StringIO(capsys.readouterr().out)))[1]
    main(["fit", *_args(two_block), "--k", "2", "--restarts", "1"])
    rep = json.loads(capsys.readouterr().out)
    assert float(row[1]) == rep["metrics"]["nmi"] and int(row[4]) == rep["correct_relations"]


def test_synth_preset(tmp_path):
    assert main(["synth", "--preset", "australia-like", "--seed", "1",
                 "--out-dir", str(tmp_path)]) == 0
    labels = (tmp_path / "labels.tsv").read_text().splitlines()
    truth = (tmp_path / "truth_relations.tsv").read_text().splitlines()
    assert len(labels) == 225 and len({l.split("\t")[1] for l in labels}) == 5
    rels = [t.split("\t")[2] for t in truth]
    assert rels.count("alliance") == 3 and rels.count("antagonism") == 7


def test_synth_custom_relations(tmp_path):
    rel = tmp_path / "rel.tsv"
    rel.write_text("C0\tC1\talliance\n")
    assert main(["synth", "--n", "30", "--k", "3", "--relations", str(rel),
                 "--out-dir", str(tmp_path / "o")]) == 0
    truth = (tmp_path / "o" / "truth_relations.tsv").read_text()
    assert "C0\tC1\talliance" in truth and "C0\tC2\tantagonism" in truth
    rel.write_text("C0\tC9\talliance\n")
    assert main(["synth", "--k", "3", "--relations", str(rel), "--out-dir", str(tmp_path)]) == 4


def test_hypothesis_command(tmp_path, capsys):
    main(["synth", "--preset", "australia-like", "--seed", "1", "--noise", "0.05",
          "--out-dir", str(tmp_path)])
    capsys.readouterr()
    assert main(["hypothesis", *_args(tmp_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["negative"]["rejected"] and rep["positive"]["rejected"]
    assert rep["negative"]["log_p_value"] < np.log(0.01)
    assert main(["hypothesis", *_args(tmp_path), "--format", "table", "--shuffle-relations"]) == 0
    assert "negative" in capsys.readouterr().out


@pytest.mark.parametrize("argv, code", [
    ([], 2),
    (["fit"], 2),
    (["fit", "--interactions", "x", "--attitudes", "y"], 2),          # missing --k
    (["fit", "--interactions", "nope", "--attitudes", "nope", "--k", "2"], 2),
    (["sweep", "--interactions", "x", "--attitudes", "y", "--k", "2"], 2),  # truth required
    (["hypothesis", "--interactions", "x", "--attitudes", "y", "--labels", "z"], 2),
    (["fit", "--interactions", "x", "--attitudes", "y", "--k", "two"], 2),
    (["synth", "--p-in", "0", "--out-dir", "unused"], 4),
    (["synth", "--n", "5", "--k", "4", "--out-dir", "unused"], 4),
])
def test_exit_code_matrix(argv, code, capsys):
    assert main(argv) == code


def test_exit_codes_on_data(two_block, tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\n")
    assert main(["fit", "--interactions", str(bad), "--attitudes", str(bad), "--k", "2"]) == 3
    bad.write_text("a\tb\t-1\n")
    assert main(["fit", "--interactions", str(bad), "--attitudes", str(bad), "--k", "2"]) == 3
    assert main(["fit", *_args(two_block), "--k", "41"]) == 4
    assert main(["fit", *_args(two_block), "--k", "1"]) == 4
    assert main(["fit", *_args(two_block), "--k", "2", "--alpha", "-1"]) == 4



def test_degenerate_variance_exit_and_fallback(two_block, capsys):
    # two communities: every treated and control pair is antagonistic
    # and no cross-community positive attitude exists at all
    assert main(["hypothesis", *_args(two_block)]) == 5
    cap = capsys.readouterr()
    assert "zero variance" in cap.err
    assert "error" in json.loads(cap.out)["positive"]
    assert main(["hypothesis", *_args(two_block), "--permutation"]) == 5
    rep = json.loads(capsys.readouterr().out)
    assert rep["negative"]["method"] == "permutation-exact"
    assert rep["negative"]["p_value"] == 1.0


def test_run_pipeline_direct():
    inst = generate(PlantedSpec(n=30, k=2, p_in=0.5, p_out=0.02, p_att_in=0.3, p_att_out=0.3,
                                seed=2))
    rep = run_pipeline(inst.dataset, SolverConfig(k=2, lam=1e6, restarts=2))
    assert rep.n == 30 and len(rep.U) == 30 and len(rep.assignment) == 30
    assert rep.metrics["nmi"] == 1.0
