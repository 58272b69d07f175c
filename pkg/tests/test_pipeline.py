import json
import subprocess
import sys
from pathlib import Path

import pytest

from argforge.cli import main as cli_main
from argforge.config import ConfigError, MissingInputError, load_config
from argforge.manifest import sha256_file
from argforge.pipeline import PipelineRunner



def hash_tree(out_dir: Path) -> dict[str, str]:
    return {
        str(p.relative_to(out_dir)): sha256_file(p)
        for p in sorted(out_dir.rglob("*"))
        if p.is_file()
    }


class TestArtifacts:
    def test_all_stage_artifacts_present(self, pipeline_run):
        out = pipeline_run["config"].out_dir
        expected = [
            "corpus.jsonl", "labeled.jsonl", "schema.json", "features_labeled.txt",
            "features_corpus.txt", "cv_report.json", "model.json", "scores.jsonl",
            "selected.jsonl", "premises_train.txt", "lm_tuned.json", "lm_baseline.json",
            "lm_report.json", "candidates.jsonl", "tasks.jsonl", "task_key.jsonl",
            "labels.tsv", "votes.jsonl", "agreement.json", "report.json",
        ]
        for name in expected:
            assert (out / name).exists(), name
        for manifest in pipeline_run["manifests"]:
            assert manifest.exists()

    def test_candidate_structure_matches_protocol(self, pipeline_run):
        # 2 backends x 20 prompts x 20 samples
        out = pipeline_run["config"].out_dir
        lines = [l for l in (out / "candidates.jsonl").read_text(encoding="utf-8").splitlines() if l]
        assert len(lines) == 800
        per_model = {}
        for line in lines:
            record = json.loads(line)
            per_model.setdefault(record["model_id"], []).append(record["prompt_id"])
        assert set(per_model) == {"tuned", "baseline"}
        for prompts in per_model.values():
            assert len(prompts) == 400
            assert len(set(prompts)) == 20

    def test_tasks_are_blind_and_keyed(self, pipeline_run):
        out = pipeline_run["config"].out_dir
        tasks_payload = (out / "tasks.jsonl").read_text(encoding="utf-8")
        assert "model" not in tasks_payload
        assert "tuned" not in tasks_payload and "baseline" not in tasks_payload
        tasks = [json.loads(l) for l in tasks_payload.splitlines() if l]
        assert len(tasks) == 800
        assert all(set(t) == {"task_id", "claim", "sentence"} for t in tasks)
        key = [json.loads(l) for l in (out / "task_key.jsonl").read_text(encoding="utf-8").splitlines() if l]
        assert {k["task_id"] for k in key} == {t["task_id"] for t in tasks}
        assert {k["model_id"] for k in key} == {"tuned", "baseline"}

    def test_training_lines_carry_connective(self, pipeline_run):
        out = pipeline_run["config"].out_dir
        lines = (out / "premises_train.txt").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 40
        assert all(line.startswith("потому что ") for line in lines)

    def test_votes_partition_tasks(self, pipeline_run):
        out = pipeline_run["config"].out_dir
        votes = [json.loads(l) for l in (out / "votes.jsonl").read_text(encoding="utf-8").splitlines() if l]
        assert len(votes) == 800
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        overall = report["overall"]
        assert overall["premise"] + overall["non_premise"] + overall["unassigned"] == 800

    def test_report_carries_agreement_and_reference(self, pipeline_run):
        out = pipeline_run["config"].out_dir
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        agreement = json.loads((out / "agreement.json").read_text(encoding="utf-8"))
        assert report["agreement"]["alpha"] == agreement["alpha"]
        assert agreement["reference_alpha"] == 0.4772
        assert agreement["reference_band"] == "moderate"
        assert report["reference"]["results"]["fine_tuned"]["premise"] == 203

    def test_lm_report_echoes_reference_perplexity(self, pipeline_run):
        out = pipeline_run["config"].out_dir
        lm_report = json.loads((out / "lm_report.json").read_text(encoding="utf-8"))
        assert lm_report["reference_validation_perplexity"] == 9.66
        for entry in lm_report["backends"].values():
            assert entry["training_perplexity"] > 0

    def test_manifest_chain_is_hash_consistent(self, pipeline_run):
        # every stage input that names an artifact must match the hash the
        # producing stage recorded for it
        out = pipeline_run["config"].out_dir
        produced: dict[str, str] = {}
        manifests = [
            json.loads(p.read_text(encoding="utf-8"))
            for p in sorted((out / "manifests").glob("*.json"))
        ]
        order = {m["stage"]: m for m in manifests}
        plan = PipelineRunner(pipeline_run["config"]).stage_plan()
        for stage_name in plan:
            manifest = order[stage_name]
            for name, digest in manifest["inputs"].items():
                if name in produced:
                    assert digest == produced[name], (stage_name, name)
            for name, digest in manifest["outputs"].items():
                produced[name] = digest


class TestDeterminismAndComposition:
    def test_run_all_twice_byte_identical(self, fixture_workspace, tmp_path):
        config_path = fixture_workspace["config_path"]
        first = load_config(config_path, out_override=str(tmp_path / "run1"))
        PipelineRunner(first).run_all()
        second = load_config(config_path, out_override=str(tmp_path / "run2"))
        PipelineRunner(second).run_all()
        hashes_first = hash_tree(first.out_dir)
        hashes_second = hash_tree(second.out_dir)
        assert hashes_first == hashes_second

    def test_run_all_equals_composed_stages_via_cli(self, fixture_workspace, tmp_path):
        config_path = str(fixture_workspace["config_path"])
        all_dir = tmp_path / "all"
        composed_dir = tmp_path / "composed"
        assert cli_main(["run-all", "--config", config_path, "--out", str(all_dir)]) == 0
        plan = PipelineRunner(load_config(config_path, out_override=str(tmp_path / "plan"))).stage_plan()
        for stage in plan:
            code = cli_main([stage, "--config", config_path, "--out", str(composed_dir)])
            assert code == 0, stage
        assert hash_tree(all_dir) == hash_tree(composed_dir)

    def test_rerun_single_stage_is_stable(self, pipeline_run):
        config = pipeline_run["config"]
        out = config.out_dir
        before = sha256_file(out / "selected.jsonl")
        PipelineRunner(config).run_stage("select")
        assert sha256_file(out / "selected.jsonl") == before


class TestCliContract:
    def test_missing_prerequisite_exits_2(self, fixture_workspace, tmp_path, capsys):
        code = cli_main(
            [
                "train",
                "--config",
                str(fixture_workspace["config_path"]),
                "--out",
                str(tmp_path / "empty"),
            ]
        )
        captured = capsys.readouterr()
        assert code == 2
        assert "missing input" in captured.err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code = cli_main(["ingest", "--config", str(tmp_path / "nope.toml")])
        assert code == 2

    def test_bad_config_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[ingest]\n", encoding="utf-8")
        code = cli_main(["ingest", "--config", bad.as_posix()])
        captured = capsys.readouterr()
        assert code == 1
        assert "error" in captured.err

    def test_env_var_config_fallback(self, fixture_workspace, tmp_path, monkeypatch):
        monkeypatch.setenv("ARGFORGE_CONFIG", str(fixture_workspace["config_path"]))
        code = cli_main(["ingest", "--out", str(tmp_path / "envout")])
        assert code == 0
        assert (tmp_path / "envout" / "corpus.jsonl").exists()

    def test_standalone_agree_prints_alpha(self, pipeline_run, capsys):
        labels = pipeline_run["config"].annotation.labels
        code = cli_main(["agree", "--labels", str(labels)])
        captured = capsys.readouterr()
        assert code == 0
        payload = json.loads(captured.out.strip())
        stored = json.loads(
            (pipeline_run["config"].out_dir / "agreement.json").read_text(encoding="utf-8")
        )
        assert payload["alpha"] == pytest.approx(stored["alpha"], abs=1e-12)

    def test_console_script_entry_point(self, fixture_workspace, tmp_path):
        proc = subprocess.run(
            [
                sys.executable,
                "-m",
                "argforge.cli",
                "ingest",
                "--config",
                str(fixture_workspace["config_path"]),
                "--out",
                str(tmp_path / "subproc"),
            ],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "subproc" / "corpus.jsonl").exists()


class TestConfig:
    def test_paper_defaults_prefilled(self, tmp_path):
        minimal = tmp_path / "minimal.toml"
        import argforge

        minimal.write_text(
            "\n".join(
                [
                    "[ingest]",
                    'documents = "docs.jsonl"',
                    'labeled = "labeled.jsonl"',
                    "[ingest.label_rules]",
                    'x = "premise"',
                    "[features]",
                    f'markers = "{argforge.data_path("markers_ru.tsv")}"',
                    "[generate]",
                    f'prompts = "{argforge.data_path("prompts_economic.tsv")}"',
                ]
            ),
            encoding="utf-8",
        )
        (tmp_path / "docs.jsonl").write_text("", encoding="utf-8")
        (tmp_path / "labeled.jsonl").write_text("", encoding="utf-8")
        config = load_config(minimal)
        assert config.ingest.lower_frac == 0.10
        assert config.cv.k == 5 and config.cv.inner_k == 4
        assert len(config.cv.grid) == 12  # {50,150,500} x {2,8,20,30}
        assert config.select.count == 3500
        assert config.select.connective == "потому что"
        assert config.generate.top_k == 50
        assert config.generate.top_p == 0.92
        assert config.generate.num_samples == 20
        assert config.annotation.quorum == 3
        assert config.annotation.n_annotators == 4

    def test_both_count_and_fraction_rejected(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text(
            "\n".join(
                [
                    "[ingest]",
                    'documents = "d"',
                    'labeled = "l"',
                    "[ingest.label_rules]",
                    'x = "premise"',
                    "[features]",
                    'markers = "m"',
                    "[generate]",
                    'prompts = "p"',
                    "[select]",
                    "count = 10",
                    "fraction = 0.5",
                ]
            ),
            encoding="utf-8",
        )
        with pytest.raises(ConfigError):
            load_config(bad)

    def test_missing_referenced_file_raises(self, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            "\n".join(
                [
                    "[ingest]",
                    'documents = "missing.jsonl"',
                    'labeled = "missing2.jsonl"',
                    "[ingest.label_rules]",
                    'x = "premise"',
                    "[features]",
                    'markers = "missing.tsv"',
                    "[generate]",
                    'prompts = "missing.tsv"',
                ]
            ),
            encoding="utf-8",
        )
        with pytest.raises(MissingInputError):
            load_config(cfg)
