import json
import os

import pytest

from memepipe import cli
from memepipe.dataset import read_manifest
from memepipe.ensemble import read_predictions, stack_equal_weight
from memepipe.errors import ConfigError, StageError
from memepipe.pipeline import (PipelineConfig, build_config, load_config_file,
                               run_pipeline)


def run_quick(out_dir, **overrides):
    base = {"n": 120, "seed": 3, "save_images": False, "quiet": True}
    base.update(overrides)
    return run_pipeline(build_config(str(out_dir), {}, base))


def test_pipeline_writes_expected_artifacts(tmp_path):
    result = run_quick(tmp_path / "run")
    names = set(result.artifacts)
    for required in ("manifest.jsonl", "constructed_groups.jsonl",
                     "hashes.csv", "clusters.csv", "tuples.jsonl",
                     "pseudo_labels.csv", "merged_train_manifest.jsonl",
                     "stacked.csv", "submission.csv", "report.txt"):
        assert required in names
    assert sum(1 for n in names if n.startswith("preds/")) == 20
    assert sum(1 for n in names if n.startswith("preds_adjusted/")) == 20
    for path in result.artifacts.values():
        assert os.path.exists(path)
    assert os.path.exists(tmp_path / "run" / "run_manifest.json")


def test_pipeline_report_and_submission_cover_eval_split(tmp_path):
    result = run_quick(tmp_path / "run")
    records = read_manifest(tmp_path / "run" / "manifest.jsonl")
    test_ids = sorted(r.id for r in records if r.split == "test")
    lines = (tmp_path / "run" / "submission.csv").read_text().splitlines()
    assert lines[0] == "id,proba,label"
    assert [int(line.split(",")[0]) for line in lines[1:]] == test_ids
    assert result.report is not None
    assert result.report.n == len(test_ids)


def test_pipeline_deterministic_across_directories(tmp_path):
    a = run_quick(tmp_path / "a")
    b = run_quick(tmp_path / "b")
    for name in a.artifacts:
        with open(a.artifacts[name], "rb") as fh:
            left = fh.read()
        with open(b.artifacts[name], "rb") as fh:
            right = fh.read()
        assert left == right, f"artifact {name} differs between runs"


def test_pipeline_run_manifest_digests_match_files(tmp_path):
    import hashlib
    run_quick(tmp_path / "run")
    manifest = json.loads((tmp_path / "run" / "run_manifest.json").read_text())
    assert manifest["prediction_sets"] == 20
    for name, digest in manifest["artifacts"].items():
        with open(tmp_path / "run" / name, "rb") as fh:
            assert hashlib.sha256(fh.read()).hexdigest() == digest


def test_rules_off_equals_plain_stacking(tmp_path):
    run_quick(tmp_path / "run", rule1=False, rule2=False)
    preds_dir = tmp_path / "run" / "preds"
    sets = [read_predictions(preds_dir / name)
            for name in sorted(os.listdir(preds_dir))]
    stacked = stack_equal_weight(sets)
    lines = (tmp_path / "run" / "stacked.csv").read_text().splitlines()
    assert lines[0] == "id,proba"
    for line in lines[1:]:
        meme_id, proba = line.split(",")
        assert float(proba) == pytest.approx(
            stacked.mean_score[int(meme_id)], abs=1e-9)
    assert not (tmp_path / "run" / "preds_adjusted").exists()
    assert not (tmp_path / "run" / "pseudo_labels.csv").exists()


def test_adjust_after_stacking_differs_from_before(tmp_path):
    before = run_quick(tmp_path / "before")
    after = run_quick(tmp_path / "after", adjust_placement="after_stacking")
    assert before.report is not None and after.report is not None
    assert before.stacked.mean_score != after.stacked.mean_score


def test_pseudo_labels_restricted_to_held_out(tmp_path):
    run_quick(tmp_path / "run")
    records = {r.id: r for r in read_manifest(tmp_path / "run" / "manifest.jsonl")}
    lines = (tmp_path / "run" / "pseudo_labels.csv").read_text().splitlines()
    assert lines[0] == "id,label,rule"
    assert len(lines) > 1
    for line in lines[1:]:
        meme_id = int(line.split(",")[0])
        assert records[meme_id].split != "train"
    merged = read_manifest(tmp_path / "run" / "merged_train_manifest.jsonl")
    n_train = sum(1 for r in records.values() if r.split == "train")
    assert len(merged) == n_train + len(lines) - 1


def test_ingest_mode_reuses_generated_corpus(tmp_path):
    first = run_quick(tmp_path / "gen", save_images=True)
    second = run_pipeline(build_config(
        str(tmp_path / "ingest"), {},
        {"manifest": str(tmp_path / "gen" / "manifest.jsonl"),
         "seed": 3, "quiet": True}))
    assert second.report is not None
    with open(first.submission_path, "rb") as fh:
        left = fh.read()
    with open(second.submission_path, "rb") as fh:
        right = fh.read()
    assert left == right


def test_ingest_failure_names_stage(tmp_path):
    run_quick(tmp_path / "gen", save_images=True)
    img = tmp_path / "gen" / "images" / "000000.pgm"
    img.unlink()
    with pytest.raises(StageError, match="ingest"):
        run_pipeline(build_config(
            str(tmp_path / "ingest"), {},
            {"manifest": str(tmp_path / "gen" / "manifest.jsonl"),
             "quiet": True}))


def test_config_validation_errors(tmp_path):
    with pytest.raises(ConfigError, match="n must be"):
        build_config(str(tmp_path), {}, {"n": 5})
    with pytest.raises(ConfigError, match="adjust_placement"):
        build_config(str(tmp_path), {}, {"adjust_placement": "sometimes"})
    with pytest.raises(ConfigError, match="lo"):
        build_config(str(tmp_path), {}, {"hi": 0.2, "lo": 0.8})
    with pytest.raises(ConfigError, match="k must be"):
        build_config(str(tmp_path), {}, {"k": 1})
    with pytest.raises(ConfigError, match="unknown config key"):
        build_config(str(tmp_path), {}, {"banana": 1})


def test_config_file_and_overrides(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(
        "# pipeline settings\n"
        "n = 500\n"
        "seed = 11\n"
        "rule2 = off\n"
        "composition = 0.5,0.1,0.2,0.1,0.1\n")
    values = load_config_file(cfg_file)
    cfg = build_config(str(tmp_path), values, {"seed": "12"})
    assert cfg.n == 500
    assert cfg.seed == 12          # CLI override wins
    assert cfg.rule2 is False
    assert cfg.composition.multimodal_hate == 0.5


def test_config_file_errors(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("n : 4\n")
    with pytest.raises(ConfigError, match="key=value"):
        load_config_file(cfg_file)
    cfg_file.write_text("mystery = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config_file(cfg_file)
    cfg_file.write_text("n = many\n")
    with pytest.raises(ConfigError, match="bad value"):
        build_config(str(tmp_path), load_config_file(cfg_file), {})
    with pytest.raises(ConfigError, match="cannot read"):
        load_config_file(tmp_path / "missing.cfg")


def test_defaults_match_documented_run():
    cfg = PipelineConfig(out_dir="x")
    assert (cfg.n, cfg.seed, cfg.models, cfg.k) == (2000, 7, 4, 5)
    assert cfg.adjust_placement == "before_stacking"
    assert cfg.rule1 and cfg.rule2 and not cfg.unimodal


def run_cli(*argv):
    return cli.main(list(argv))


def test_cli_stage_chain_matches_pipeline(tmp_path):
    out = tmp_path / "run"
    run_quick(out, save_images=True)
    work = tmp_path / "stages"
    work.mkdir()

    assert run_cli("--quiet", "hash", "--manifest", str(out / "manifest.jsonl"),
                   "--out", str(work / "hashes.csv")) == 0
    assert (work / "hashes.csv").read_bytes() == (out / "hashes.csv").read_bytes()

    assert run_cli("--quiet", "cluster", "--manifest", str(out / "manifest.jsonl"),
                   "--hashes", str(work / "hashes.csv"),
                   "--out", str(work / "clusters.csv")) == 0
    assert (work / "clusters.csv").read_bytes() == \
        (out / "clusters.csv").read_bytes()

    assert run_cli("--quiet", "tuples", "--manifest", str(out / "manifest.jsonl"),
                   "--clusters", str(work / "clusters.csv"),
                   "--out", str(work / "tuples.jsonl")) == 0
    assert (work / "tuples.jsonl").read_bytes() == \
        (out / "tuples.jsonl").read_bytes()

    assert run_cli("--quiet", "simulate", "--manifest", str(out / "manifest.jsonl"),
                   "--tuples", str(work / "tuples.jsonl"),
                   "--pseudo", str(out / "pseudo_labels.csv"),
                   "--model-index", "3", "--seed", "3",
                   "--out", str(work / "sim-03.csv")) == 0
    assert (work / "sim-03.csv").read_bytes() == \
        (out / "preds" / "sim-03.csv").read_bytes()


def test_cli_gen_data_and_stats(tmp_path, capsys):
    out = tmp_path / "data"
    assert run_cli("--quiet", "gen-data", "--n", "60", "--outdir", str(out),
                   "--seed", "1") == 0
    assert (out / "manifest.jsonl").exists()
    assert (out / "images" / "000000.pgm").exists()
    assert run_cli("--quiet", "hash", "--manifest", str(out / "manifest.jsonl"),
                   "--out", str(out / "h.csv")) == 0
    assert run_cli("--quiet", "cluster", "--manifest", str(out / "manifest.jsonl"),
                   "--hashes", str(out / "h.csv"),
                   "--out", str(out / "c.csv")) == 0
    capsys.readouterr()
    assert run_cli("--quiet", "stats", "--clusters", str(out / "c.csv"),
                   "--tuples", str(out / "constructed_groups.jsonl")) == 0
    printed = capsys.readouterr().out
    assert "STATS n=60" in printed
    assert "three_tuple=" in printed


def test_cli_kfold_prints_plan(capsys):
    assert run_cli("kfold", "--n", "7", "--k", "3") == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("fold 0 | val 0,1,2 ")


def test_cli_evaluate_matches_report(tmp_path, capsys):
    out = tmp_path / "run"
    run_quick(out, save_images=True)
    capsys.readouterr()
    assert run_cli("--quiet", "evaluate", "--submission", str(out / "submission.csv"),
                   "--truth", str(out / "manifest.jsonl"),
                   "--split", "test") == 0
    printed = capsys.readouterr().out
    report_text = (out / "report.txt").read_text()
    result_line = [l for l in printed.splitlines() if l.startswith("RESULT")][0]
    assert result_line in report_text


def test_cli_pipeline_command(tmp_path, capsys):
    out = tmp_path / "run"
    assert run_cli("--quiet", "pipeline", "--outdir", str(out), "--n", "120",
                   "--seed", "3", "--no-images") == 0
    printed = capsys.readouterr().out
    assert printed.startswith("RESULT auroc=")
    assert (out / "submission.csv").exists()


def test_cli_exit_codes(tmp_path, capsys):
    # config error
    assert run_cli("pipeline", "--outdir", str(tmp_path / "x"), "--n", "5") == 2
    # malformed input data
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{broken\n")
    assert run_cli("hash", "--manifest", str(bad),
                   "--out", str(tmp_path / "h.csv")) == 3
    # missing file
    assert run_cli("hash", "--manifest", str(tmp_path / "missing.jsonl"),
                   "--out", str(tmp_path / "h.csv")) == 4
    capsys.readouterr()


def test_cli_adjust_round_trip(tmp_path, capsys):
    out = tmp_path / "run"
    run_quick(out, save_images=True)
    first_pred = sorted(os.listdir(out / "preds"))[0]
    assert run_cli("--quiet", "adjust", "--preds", str(out / "preds" / first_pred),
                   "--tuples", str(out / "tuples.jsonl"), "--rule", "2",
                   "--out", str(tmp_path / "adj.csv")) == 0
    assert (tmp_path / "adj.csv").read_bytes() == \
        (out / "preds_adjusted" / first_pred).read_bytes()
    capsys.readouterr()
