"""Command-line interface: synth, run, compare."""

import importlib.resources
import json
import subprocess
import sys

import pytest
import yaml

from adepred.cli import ENV_THREADS, main

SYNTH_DOC = {
    "n_patients": 40,
    "positive_fraction": 0.25,
    "n_lab_codes": 5,
    "n_drug_codes": 5,
    "n_diag_codes": 5,
    "events_per_patient": 8,
    "window_length_days": 30,
    "seed": 11,
    "informative": [
        {"feature": "L:LAB000", "effect": "slope_shift", "magnitude": 0.3},
        {"feature": "M:DRG000", "effect": "count_shift", "magnitude": 1.5},
    ],
}


def write_yaml(path, doc):
    path.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return path


def make_events(tmp_path, doc=None):
    config = write_yaml(tmp_path / "synth.yaml", doc or SYNTH_DOC)
    out = tmp_path / "data"
    assert main(["synth", str(config), "--out", str(out)]) == 0
    return out / "events.csv"


def run_doc(events_path, **overrides):
    doc = {
        "events": str(events_path),
        "cohort": {"target_code": "ADE001", "window_length_days": 30},
        "approaches": ["L", "MD", "LMD"],
        "classifiers": [
            {"kind": "random_forest", "name": "forest", "n_trees": 10},
            {"kind": "linear", "name": "ridge"},
        ],
        "n_folds": 3,
        "seed": 0,
        "output_dir": "results",
    }
    doc.update(overrides)
    return doc


def bundled_table_text():
    return (
        importlib.resources.files("adepred.data")
        .joinpath("ade_rf_scores.csv")
        .read_text()
    )


class TestSynthCommand:
    def test_writes_events_and_manifest(self, tmp_path):
        config = write_yaml(tmp_path / "synth.yaml", SYNTH_DOC)
        out = tmp_path / "data"
        assert main(["synth", str(config), "--out", str(out)]) == 0
        events = (out / "events.csv").read_text()
        assert events.startswith("patient_id,kind,code,value,date\n")
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["n_patients"] == 40
        assert len(manifest["positive_ids"]) == manifest["n_positive"]

    def test_rerun_is_byte_identical(self, tmp_path):
        config = write_yaml(tmp_path / "synth.yaml", SYNTH_DOC)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", str(config), "--out", str(a)]) == 0
        assert main(["synth", str(config), "--out", str(b)]) == 0
        assert (a / "events.csv").read_bytes() == (b / "events.csv").read_bytes()
        assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()

    def test_unknown_key_is_named(self, tmp_path, capsys):
        doc = dict(SYNTH_DOC, typo_key=1)
        config = write_yaml(tmp_path / "synth.yaml", doc)
        assert main(["synth", str(config), "--out", str(tmp_path / "o")]) == 1
        assert "typo_key" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["synth", str(tmp_path / "nope.yaml"), "--out", "o"]) == 1
        assert "not found" in capsys.readouterr().err

    def test_bad_effect_value(self, tmp_path, capsys):
        doc = dict(SYNTH_DOC)
        doc["informative"] = [
            {"feature": "L:LAB000", "effect": "tilt", "magnitude": 1.0}
        ]
        config = write_yaml(tmp_path / "synth.yaml", doc)
        assert main(["synth", str(config), "--out", str(tmp_path / "o")]) == 1
        err = capsys.readouterr().err
        assert "effect" in err and "slope_shift" in err


class TestRunCommand:
    def test_pipeline_outputs(self, tmp_path):
        events = make_events(tmp_path)
        config = write_yaml(tmp_path / "run.yaml", run_doc(events))
        assert main(["run", str(config)]) == 0
        out = tmp_path / "results"

        folds = (out / "folds.csv").read_text().splitlines()
        assert folds[0] == "ade,approach,classifier,fold,auc"
        assert len(folds) == 1 + 3 * 2 * 3  # approaches x classifiers x folds

        summary = (out / "summary.csv").read_text().splitlines()
        assert summary[0] == "ade,approach,classifier,n_features,mean_auc,std_auc"
        assert len(summary) == 1 + 3 * 2
        assert all(line.split(",")[0] == "ADE001" for line in summary[1:])

        importance = (out / "importance.csv").read_text().splitlines()
        assert importance[0] == "feature,importance"
        values = [float(line.split(",")[1]) for line in importance[1:]]
        assert values == sorted(values, reverse=True)
        assert abs(sum(values) - 1.0) < 1e-9

    def test_relative_paths_resolve_against_the_config_file(self, tmp_path):
        events = make_events(tmp_path)
        nested = tmp_path / "jobs"
        nested.mkdir()
        doc = run_doc("../data/events.csv", output_dir="my_results")
        config = write_yaml(nested / "run.yaml", doc)
        assert main(["run", str(config)]) == 0
        assert (nested / "my_results" / "summary.csv").exists()

    def test_kbest_requires_rfe_section(self, tmp_path, capsys):
        events = make_events(tmp_path)
        doc = run_doc(events, approaches=["LMD", "LMD-kbest"])
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 1
        assert "rfe" in capsys.readouterr().err

    def test_kbest_writes_selection_outputs(self, tmp_path):
        events = make_events(tmp_path)
        doc = run_doc(
            events,
            approaches=["LMD", "LMD-kbest"],
            rfe={"k": 4, "step": 3},
        )
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 0
        out = tmp_path / "results"
        selected = (out / "selected_features.csv").read_text().splitlines()
        assert selected[0] == "feature"
        assert len(selected) == 1 + 4
        trace = (out / "rfe_trace.csv").read_text().splitlines()
        assert trace[0] == "iteration,removed,remaining,val_auc"

    def test_seed_flag_overrides_config(self, tmp_path):
        events = make_events(tmp_path)
        config = write_yaml(tmp_path / "run.yaml", run_doc(events))
        assert main(["run", str(config), "--output-dir", str(tmp_path / "a")]) == 0
        assert (
            main(
                [
                    "run",
                    str(config),
                    "--seed",
                    "99",
                    "--output-dir",
                    str(tmp_path / "b"),
                ]
            )
            == 0
        )
        folds_a = (tmp_path / "a" / "folds.csv").read_text()
        folds_b = (tmp_path / "b" / "folds.csv").read_text()
        assert folds_a != folds_b

    def test_thread_count_does_not_change_results(self, tmp_path):
        events = make_events(tmp_path)
        config = write_yaml(tmp_path / "run.yaml", run_doc(events))
        for threads, sub in (("1", "t1"), ("3", "t3")):
            code = main(
                [
                    "run",
                    str(config),
                    "--threads",
                    threads,
                    "--output-dir",
                    str(tmp_path / sub),
                ]
            )
            assert code == 0
        for name in ("folds.csv", "summary.csv", "importance.csv"):
            a = (tmp_path / "t1" / name).read_bytes()
            b = (tmp_path / "t3" / name).read_bytes()
            assert a == b, name

    def test_threads_env_var(self, tmp_path, monkeypatch):
        events = make_events(tmp_path)
        config = write_yaml(tmp_path / "run.yaml", run_doc(events))
        monkeypatch.setenv(ENV_THREADS, "2")
        assert main(["run", str(config)]) == 0

    def test_bad_threads_env_var(self, tmp_path, monkeypatch, capsys):
        events = make_events(tmp_path)
        config = write_yaml(tmp_path / "run.yaml", run_doc(events))
        monkeypatch.setenv(ENV_THREADS, "fast")
        assert main(["run", str(config)]) == 1
        assert ENV_THREADS in capsys.readouterr().err

    def test_missing_events_file(self, tmp_path, capsys):
        doc = run_doc(tmp_path / "missing.csv")
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 1
        assert "events file not found" in capsys.readouterr().err

    def test_malformed_rows_warn_but_run(self, tmp_path, capsys):
        events = make_events(tmp_path)
        with events.open("a", encoding="utf-8") as fh:
            fh.write("P0000,potion,X,,2009-05-01\n")
        config = write_yaml(tmp_path / "run.yaml", run_doc(events))
        assert main(["run", str(config)]) == 0
        assert "unknown kind" in capsys.readouterr().err

    def test_degenerate_cohort_is_a_data_error(self, tmp_path, capsys):
        events = make_events(tmp_path)
        doc = run_doc(events)
        doc["cohort"]["target_code"] = "NOPE999"
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 2
        assert "degenerate cohort" in capsys.readouterr().err

    def test_duplicate_classifier_names_rejected(self, tmp_path, capsys):
        events = make_events(tmp_path)
        doc = run_doc(events)
        doc["classifiers"] = [
            {"kind": "linear", "name": "same"},
            {"kind": "random_forest", "name": "same"},
        ]
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 1
        assert "duplicate name" in capsys.readouterr().err

    def test_classifier_name_with_comma_rejected(self, tmp_path, capsys):
        events = make_events(tmp_path)
        doc = run_doc(events)
        doc["classifiers"] = [{"kind": "linear", "name": "a,b"}]
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 1
        assert "CSV metacharacters" in capsys.readouterr().err

    def test_unknown_approach_rejected(self, tmp_path, capsys):
        events = make_events(tmp_path)
        doc = run_doc(events, approaches=["L", "XYZ"])
        config = write_yaml(tmp_path / "run.yaml", doc)
        assert main(["run", str(config)]) == 1
        assert "approaches" in capsys.readouterr().err


class TestCompareCommand:
    def test_bundled_fixture_report(self, tmp_path, capsys):
        table = tmp_path / "scores.csv"
        table.write_text(bundled_table_text(), encoding="utf-8")
        out = tmp_path / "report"
        assert main(["compare", str(table), "--out", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "Friedman test over 5 datasets x 7 approaches" in stdout
        assert "Significant pairs:" in stdout
        for name in ("friedman.csv", "cd_diagram.csv", "pairwise.csv"):
            assert (out / name).exists()
        cd_lines = (out / "cd_diagram.csv").read_text().splitlines()
        assert cd_lines[0] == "approach,avg_rank,cd"
        assert len(cd_lines) == 8

    def test_missing_table_file(self, tmp_path, capsys):
        assert main(["compare", str(tmp_path / "nope.csv")]) == 1
        assert "not found" in capsys.readouterr().err

    def test_incomplete_table_is_a_data_error(self, tmp_path, capsys):
        table = tmp_path / "scores.csv"
        table.write_text("dataset,A,B\nd1,0.5,0.6\nd2,0.7\n", encoding="utf-8")
        assert main(["compare", str(table), "--out", str(tmp_path)]) == 2
        assert "row 'd2', column 'B'" in capsys.readouterr().err

    def test_flat_table_flags_nothing(self, tmp_path, capsys):
        table = tmp_path / "scores.csv"
        table.write_text(
            "dataset,A,B\nd1,0.5,0.5\nd2,0.5,0.5\n", encoding="utf-8"
        )
        assert main(["compare", str(table), "--out", str(tmp_path / "o")]) == 0
        assert "Significant pairs: none" in capsys.readouterr().out

    def test_unsupported_alpha(self, tmp_path, capsys):
        table = tmp_path / "scores.csv"
        table.write_text(bundled_table_text(), encoding="utf-8")
        assert main(["compare", str(table), "--alpha", "0.2"]) == 1
        assert "alpha" in capsys.readouterr().err


class TestParserBehavior:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_no_subcommand(self, capsys):
        assert main([]) == 1

    def test_module_entry_point(self, tmp_path):
        config = write_yaml(tmp_path / "synth.yaml", SYNTH_DOC)
        result = subprocess.run(
            [
                sys.executable,
                "-m",
                "adepred",
                "synth",
                str(config),
                "--out",
                str(tmp_path / "out"),
            ],
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "out" / "events.csv").exists()
