"""End-to-end run: data -> hashes -> clusters -> tuples -> predictions ->
adjusted stacking -> submission -> evaluation.

Every stage writes its artifact under the output directory, and a run
manifest records the effective config plus content digests, so two runs
with the same config produce byte-identical outputs.
"""

import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

from .clustering import (ClusterAssignment, cluster_images, cluster_texts,
                         corpus_stats, write_clusters)
from .dataset import (DatasetComposition, GeneratorNoise, read_manifest,
                      read_pgm, write_manifest)
from .ensemble import (StackedPrediction, stack_equal_weight,
                       write_predictions, write_submission)
from .errors import ConfigError, DataFormatError, StageError
from .generator import generate_dataset, image_hashes, write_images
from .metrics import evaluate
from .phash import hash_to_hex, phash
from .rules import (PredictionSet, PseudoLabelSet, apply_rule1, apply_rule2,
                    apply_unimodal_signatures, merge_pseudo_labels,
                    rule1_pseudo_labels, write_pseudo_labels)
from .simulator import SimulatorConfig, simulate_predictions
from .tuples import detect_tuples, detect_unimodal_hate, tuple_stats, write_groups

PLACEMENTS = ("before_stacking", "after_stacking", "both_off")


@dataclass
class PipelineConfig:
    out_dir: str
    n: int = 2000
    seed: int = 7
    composition: DatasetComposition = field(default_factory=DatasetComposition)
    image_amplitude: float = 4.0
    text_perturb_prob: float = 0.5
    label_noise: float = 0.0
    hamming_threshold: int = 10
    k: int = 5
    models: int = 4
    rule1: bool = True
    rule2: bool = True
    adjust_placement: str = "before_stacking"
    unimodal: bool = False
    hi: float = 1.0
    lo: float = 0.0
    separation_mu: float = 1.0
    sigma: float = 1.2
    pseudo_label_boost: float = 3.0
    noise_correlation: float = 0.9
    eval_split: str = "test"
    manifest: str | None = None   # ingest an existing corpus instead of generating
    save_images: bool = True
    quiet: bool = False

    def validate(self):
        if self.manifest is None and self.n < 10:
            raise ConfigError(f"n must be >= 10, got {self.n}")
        if self.models < 1:
            raise ConfigError(f"models must be >= 1, got {self.models}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if not 0 <= self.hamming_threshold <= 64:
            raise ConfigError(f"hamming_threshold must be in [0, 64]")
        if self.adjust_placement not in PLACEMENTS:
            raise ConfigError(f"adjust_placement must be one of {PLACEMENTS}, "
                              f"got {self.adjust_placement!r}")
        if self.eval_split not in ("dev", "test"):
            raise ConfigError(f"eval_split must be dev or test, got {self.eval_split!r}")
        if not 0.0 <= self.lo < self.hi <= 1.0:
            raise ConfigError(f"need 0 <= lo < hi <= 1, got lo={self.lo} hi={self.hi}")


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "on": True,
               "false": False, "0": False, "no": False, "off": False}

_FIELD_PARSERS = {
    "n": int, "seed": int, "hamming_threshold": int, "k": int, "models": int,
    "image_amplitude": float, "text_perturb_prob": float, "label_noise": float,
    "hi": float, "lo": float, "separation_mu": float, "sigma": float,
    "pseudo_label_boost": float, "noise_correlation": float,
    "adjust_placement": str, "eval_split": str, "manifest": str,
    "composition": DatasetComposition.parse,
    "rule1": "bool", "rule2": "bool", "unimodal": "bool", "save_images": "bool",
    "quiet": "bool",
}


def _parse_bool(text):
    word = text.strip().lower()
    if word not in _BOOL_WORDS:
        raise ConfigError(f"expected a boolean, got {text!r}")
    return _BOOL_WORDS[word]


def load_config_file(path):
    """Parse a flat key=value config file; '#' starts a comment."""
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = value
    return values


def build_config(out_dir, file_values=None, overrides=None):
    """Assemble a PipelineConfig from defaults, a config file, and CLI flags."""
    merged = {}
    for source in (file_values or {}), (overrides or {}):
        for key, value in source.items():
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            if isinstance(value, str):
                parser = _FIELD_PARSERS[key]
                try:
                    value = _parse_bool(value) if parser == "bool" else parser(value)
                except ConfigError:
                    raise
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key!r}: {exc}") from None
            merged[key] = value
    cfg = PipelineConfig(out_dir=out_dir, **merged)
    cfg.validate()
    return cfg


@dataclass
class PipelineResult:
    report: object                # EvaluationReport, or None without labels
    submission_path: str
    artifacts: dict               # name -> path
    stacked: object               # final StackedPrediction-shaped scores/labels


def _stage(name, fn, quiet):
    if not quiet:
        print(f"[{name}]", file=sys.stderr)
    try:
        return fn()
    except (ConfigError, DataFormatError, StageError):
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_pipeline(cfg):
    cfg.validate()
    os.makedirs(cfg.out_dir, exist_ok=True)
    artifacts = {}

    def path_of(name):
        return os.path.join(cfg.out_dir, name)

    def record_artifact(name):
        artifacts[name] = path_of(name)

    quiet = cfg.quiet
    noise = GeneratorNoise(image_amplitude=cfg.image_amplitude,
                           text_perturb_prob=cfg.text_perturb_prob,
                           label_noise=cfg.label_noise)

    if cfg.manifest is None:
        def gen():
            ds = generate_dataset(cfg.n, cfg.composition, noise, cfg.seed)
            write_manifest(ds.records, path_of("manifest.jsonl"))
            record_artifact("manifest.jsonl")
            if cfg.save_images:
                write_images(ds, cfg.out_dir)
            truth = ds.three_tuples + ds.two_tuples + ds.unimodal_groups
            write_groups(truth, path_of("constructed_groups.jsonl"))
            record_artifact("constructed_groups.jsonl")
            return ds.records, ds.images
        records, images = _stage("generate", gen, quiet)
    else:
        def ingest():
            recs = read_manifest(cfg.manifest)
            root = os.path.dirname(os.path.abspath(cfg.manifest))
            imgs = {rec.id: read_pgm(os.path.join(root, rec.img)) for rec in recs}
            return recs, imgs
        records, images = _stage("ingest", ingest, quiet)

    def hash_stage():
        hashes = image_hashes(images)
        with open(path_of("hashes.csv"), "w", encoding="utf-8") as fh:
            for meme_id, h in hashes:
                fh.write(f"{meme_id},{hash_to_hex(h)}\n")
        record_artifact("hashes.csv")
        return hashes
    hashes = _stage("hash", hash_stage, quiet)

    def cluster_stage():
        assignment = ClusterAssignment(
            image=cluster_images(hashes, cfg.hamming_threshold),
            text=cluster_texts(records))
        write_clusters(assignment, path_of("clusters.csv"))
        record_artifact("clusters.csv")
        return assignment
    assignment = _stage("cluster", cluster_stage, quiet)

    groups = _stage("tuples", lambda: detect_tuples(records, assignment), quiet)
    write_groups(groups, path_of("tuples.jsonl"))
    record_artifact("tuples.jsonl")

    pseudo = None
    if cfg.rule1:
        def pseudo_stage():
            train = [rec for rec in records if rec.split == "train"]
            held_out = [rec for rec in records if rec.split != "train"]
            held_ids = {rec.id for rec in held_out}
            full = rule1_pseudo_labels(groups)
            restricted = PseudoLabelSet(
                labels={i: v for i, v in full.labels.items() if i in held_ids},
                provenance={i: v for i, v in full.provenance.items() if i in held_ids})
            write_pseudo_labels(restricted, path_of("pseudo_labels.csv"))
            record_artifact("pseudo_labels.csv")
            merged = merge_pseudo_labels(train, restricted, held_out)
            write_manifest(merged, path_of("merged_train_manifest.jsonl"))
            record_artifact("merged_train_manifest.jsonl")
            return restricted
        pseudo = _stage("pseudo-label", pseudo_stage, quiet)

    sim_cfg = SimulatorConfig(separation_mu=cfg.separation_mu, sigma=cfg.sigma,
                              pseudo_label_boost=cfg.pseudo_label_boost,
                              noise_correlation=cfg.noise_correlation,
                              seed=cfg.seed)

    def simulate_stage():
        os.makedirs(path_of("preds"), exist_ok=True)
        sets = []
        for idx in range(cfg.models * cfg.k):
            ps = simulate_predictions(records, groups, pseudo, sim_cfg, idx)
            name = os.path.join("preds", f"{ps.model_id}.csv")
            write_predictions(ps, path_of(name))
            record_artifact(name)
            sets.append(ps)
        return sets
    sets = _stage("simulate", simulate_stage, quiet)

    if cfg.rule2 and cfg.adjust_placement == "before_stacking":
        def adjust_before():
            os.makedirs(path_of("preds_adjusted"), exist_ok=True)
            adjusted = []
            for ps in sets:
                out = apply_rule2(groups, ps, cfg.hi, cfg.lo)
                name = os.path.join("preds_adjusted", f"{ps.model_id}.csv")
                write_predictions(out, path_of(name))
                record_artifact(name)
                adjusted.append(out)
            return adjusted
        sets = _stage("adjust-before", adjust_before, quiet)

    stacked = _stage("stack", lambda: stack_equal_weight(sets), quiet)
    final = PredictionSet("stacked", dict(stacked.mean_score))

    if cfg.rule2 and cfg.adjust_placement == "after_stacking":
        final = _stage("adjust-after",
                       lambda: apply_rule2(groups, final, cfg.hi, cfg.lo), quiet)
    if cfg.rule1:
        final = _stage("rule1-override", lambda: apply_rule1(groups, final), quiet)
    if cfg.unimodal:
        def unimodal_stage():
            labeled = [rec for rec in records
                       if rec.split == "train" and rec.label is not None]
            signatures = detect_unimodal_hate(labeled, assignment)
            return apply_unimodal_signatures(signatures, assignment, final)
        final = _stage("unimodal-signatures", unimodal_stage, quiet)

    labels = {meme_id: 1 if score >= 0.5 else 0
              for meme_id, score in final.scores.items()}
    stacked = StackedPrediction(dict(final.scores), labels, stacked.source_count)
    write_predictions(final, path_of("stacked.csv"))
    record_artifact("stacked.csv")

    eval_ids = [rec.id for rec in records if rec.split == cfg.eval_split]
    write_submission(stacked, path_of("submission.csv"), eval_ids)
    record_artifact("submission.csv")

    report = None
    truth = {rec.id: rec.label for rec in records
             if rec.split == cfg.eval_split and rec.label is not None}
    if truth and len(truth) == len(eval_ids):
        def eval_stage():
            scores = {i: final.scores[i] for i in truth}
            preds = {i: labels[i] for i in truth}
            rep = evaluate(scores, preds, truth)
            with open(path_of("report.txt"), "w", encoding="utf-8") as fh:
                fh.write(rep.to_text())
                fh.write(rep.machine_line() + "\n")
            record_artifact("report.txt")
            return rep
        report = _stage("evaluate", eval_stage, quiet)
        if not quiet:
            print(report.machine_line(), file=sys.stderr)

    stats = corpus_stats(assignment)
    tstats = tuple_stats(groups, len(records))
    run_manifest = {
        "config": _config_obj(cfg),
        "artifacts": {name: _digest(path) for name, path in sorted(artifacts.items())},
        "prediction_sets": len(sets),
        "corpus": {
            "n": len(records),
            "image_repeat_frac": stats.image_repeat_frac,
            "text_repeat_frac": stats.text_repeat_frac,
            "independent_frac": stats.independent_frac,
            "three_tuple_frac": tstats.three_tuple_frac,
            "two_tuple_frac": tstats.two_tuple_frac,
        },
    }
    with open(path_of("run_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(run_manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return PipelineResult(report=report, submission_path=path_of("submission.csv"),
                          artifacts=artifacts, stacked=stacked)


def _config_obj(cfg):
    obj = dataclasses.asdict(cfg)
    obj["composition"] = list(cfg.composition.as_tuple())
    return obj
