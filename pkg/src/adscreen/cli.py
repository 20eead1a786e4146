"""Command-line entry point: transcript extraction, experiments, metrics.

Subcommands
    extract-text IN_DIR OUT_DIR   one cleaned .txt per transcript
    run CONFIG                    CV + test evaluation for every system
    metrics PRED_CSV TRUTH_CSV    Table-style metrics for two decision files
    folds                         debug dump of a fold assignment

``run`` reads a YAML experiment config (schema in the README), executes
every system independently — one failing trainer marks its own row and the
grid continues — and writes report.csv, report.txt and per-system decision
CSVs into the config's output directory.  Outputs carry no timestamps and
all reductions are order-canonical, so identical (config, data, seed) runs
are byte-identical regardless of --jobs.

The manifest path resolves in priority order: --manifest flag, config key,
then the ADSCREEN_MANIFEST environment variable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import yaml

from . import transcripts
from .errors import AdscreenError, ConfigError, ManifestError
from .evaluation import (
    ExperimentReport,
    SystemResult,
    compute_metrics,
    cross_validate,
    make_folds,
    render_report,
    report_csv,
    vote_over_folds,
)
from .feature_store import load_feature_set, load_manifest
from .fusion import (
    EnsembleSpec,
    build_atoms,
    load_decisions,
    parse_scheme,
    resolve_selectors,
    save_decisions,
    snapshot_epochs,
)

ENV_MANIFEST = "ADSCREEN_MANIFEST"

_TOP_KEYS = {"manifest", "output_dir", "cv", "systems"}
_CV_KEYS = {"k", "seed", "fold_vote"}
_SYSTEM_KEYS = {
    "id", "feature_sets", "classifiers", "fusion_mode", "tie_break",
    "flatten", "snapshot_scheme",
}
_CLASSIFIER_KINDS = {"svm", "lda", "gp", "mlp", "xgb"}


@dataclass
class SystemConfig:
    id: str
    feature_sets: list
    classifiers: list
    fusion_mode: str = "decision_vote"
    tie_break: str = "positive"
    flatten: bool = True
    snapshot_scheme: str | None = None


@dataclass
class ExperimentConfig:
    manifest_path: str
    output_dir: str
    cv_k: int
    cv_seed: int
    fold_vote: bool
    systems: list
    digest: str = ""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def load_config(path: str, manifest_override: str | None = None,
                seed_override: int | None = None) -> ExperimentConfig:
    """Parse and validate the experiment config; relative paths follow the
    config file's directory."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    _require(isinstance(doc, dict), f"{path}: config must be a mapping")
    unknown = set(doc) - _TOP_KEYS
    _require(not unknown, f"{path}: unknown config keys {sorted(unknown)}")

    base = os.path.dirname(os.path.abspath(path))

    manifest = manifest_override or doc.get("manifest") or os.environ.get(ENV_MANIFEST)
    _require(bool(manifest), f"{path}: no manifest given (key, --manifest, or ${ENV_MANIFEST})")
    if not os.path.isabs(manifest):
        manifest = os.path.join(base, manifest)

    _require("output_dir" in doc, f"{path}: output_dir is required")
    out_dir = doc["output_dir"]
    if not os.path.isabs(out_dir):
        out_dir = os.path.join(base, out_dir)

    cv = doc.get("cv", {})
    _require(isinstance(cv, dict), f"{path}: cv must be a mapping")
    unknown = set(cv) - _CV_KEYS
    _require(not unknown, f"{path}: unknown cv keys {sorted(unknown)}")
    cv_k = int(cv.get("k", 10))
    cv_seed = int(seed_override if seed_override is not None else cv.get("seed", 0))
    fold_vote = bool(cv.get("fold_vote", True))
    _require(cv_k >= 2, f"{path}: cv.k must be at least 2")

    raw_systems = doc.get("systems")
    _require(isinstance(raw_systems, list) and raw_systems, f"{path}: systems list is required")
    systems = []
    seen = set()
    for raw in raw_systems:
        _require(isinstance(raw, dict), f"{path}: each system must be a mapping")
        unknown = set(raw) - _SYSTEM_KEYS
        _require(not unknown, f"{path}: unknown system keys {sorted(unknown)}")
        for key in ("id", "feature_sets", "classifiers"):
            _require(key in raw, f"{path}: system missing {key!r}")
        sid = str(raw["id"])
        _require(sid not in seen, f"{path}: duplicate system id {sid!r}")
        seen.add(sid)
        kinds = [str(c) for c in raw["classifiers"]]
        bad = [c for c in kinds if c not in _CLASSIFIER_KINDS]
        _require(not bad, f"{path}: system {sid!r} has unknown classifiers {bad}")
        _require(bool(raw["feature_sets"]), f"{path}: system {sid!r} needs feature_sets")
        systems.append(SystemConfig(
            id=sid,
            feature_sets=[str(s) for s in raw["feature_sets"]],
            classifiers=kinds,
            fusion_mode=str(raw.get("fusion_mode", "decision_vote")),
            tie_break=str(raw.get("tie_break", "positive")),
            flatten=bool(raw.get("flatten", True)),
            snapshot_scheme=raw.get("snapshot_scheme"),
        ))

    cfg = ExperimentConfig(
        manifest_path=manifest, output_dir=out_dir, cv_k=cv_k, cv_seed=cv_seed,
        fold_vote=fold_vote, systems=systems,
    )
    cfg.digest = _config_digest(cfg)
    return cfg


def _config_digest(cfg: ExperimentConfig) -> str:
    """16-hex digest over the resolved config and the manifest bytes.

    The output directory and --jobs are excluded: they must not change
    results.  The effective seed is included so --seed shows up here.
    """
    resolved = {
        "cv": {"k": cfg.cv_k, "seed": cfg.cv_seed, "fold_vote": cfg.fold_vote},
        "systems": [vars(s) for s in cfg.systems],
    }
    h = hashlib.sha256(json.dumps(resolved, sort_keys=True).encode())
    try:
        with open(cfg.manifest_path, "rb") as fh:
            h.update(fh.read())
    except OSError:
        h.update(b"<manifest unreadable>")
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# run


def _scheme_filter(ids: list, entries: dict, scheme_text: str, seed: int) -> list:
    """Keep only feature sets whose epoch the snapshot scheme selects."""
    epochs = sorted({entries[i].epoch for i in ids if entries[i].epoch is not None})
    if not epochs:
        raise ConfigError("snapshot_scheme needs epoch-tagged feature sets")
    wanted = snapshot_epochs(parse_scheme(scheme_text, max(epochs), seed))
    missing = [e for e in wanted if e not in epochs]
    if missing:
        raise ManifestError(f"no feature sets at scheme epochs {missing}")
    return [i for i in ids if entries[i].epoch in wanted]


@dataclass
class _Prepared:
    config: SystemConfig
    spec: EnsembleSpec | None = None
    train_data: dict | None = None
    test_data: dict | None = None
    test_truth: dict | None = None
    error: str | None = None


def _prepare_systems(cfg: ExperimentConfig, entries: dict):
    """Resolve atoms and load feature tables, isolating failures per system.

    Returns (prepared list, train truth map, fold subjects) — the truth map
    comes from the first loadable feature set and later sets must agree on
    subjects and labels.
    """
    base_dir = os.path.dirname(os.path.abspath(cfg.manifest_path))
    train_cache: dict = {}
    test_cache: dict = {}
    truth: dict = {}

    def load_train(fs: str):
        if fs not in train_cache:
            m = load_feature_set(entries[fs], base_dir, "train")
            if m.labels is None:
                raise ManifestError(f"feature set {fs!r} has no training labels")
            table = {s: int(l) for s, l in zip(m.subject_ids, m.labels)}
            if truth and table != truth:
                raise ManifestError(f"feature set {fs!r} disagrees on subjects or labels")
            truth.update(table)
            train_cache[fs] = m
        return train_cache[fs]

    def load_test(fs: str):
        if fs not in test_cache:
            test_cache[fs] = load_feature_set(entries[fs], base_dir, "test")
        return test_cache[fs]

    prepared = []
    for sc in cfg.systems:
        try:
            ids = resolve_selectors(sc.feature_sets, entries)
            if sc.snapshot_scheme:
                ids = _scheme_filter(ids, entries, sc.snapshot_scheme, cfg.cv_seed)
            atoms = build_atoms(ids, sc.classifiers, entries)
            spec = EnsembleSpec(
                atoms=atoms, tie_break=sc.tie_break, fusion_mode=sc.fusion_mode,
                flatten=sc.flatten, cv_k=cfg.cv_k, cv_seed=cfg.cv_seed,
                fold_vote=cfg.fold_vote, system_id=sc.id,
            )
            needed = sorted({a.feature_set_id for a in atoms})
            train_data = {fs: load_train(fs) for fs in needed}
            test_data = None
            test_truth: dict = {}
            if all(entries[fs].test_path is not None for fs in needed):
                test_data = {fs: load_test(fs) for fs in needed}
                for fs in needed:
                    m = test_data[fs]
                    if m.labels is None:
                        continue
                    table = {s: int(l) for s, l in zip(m.subject_ids, m.labels)}
                    if test_truth and table != test_truth:
                        raise ManifestError(f"test labels disagree for {fs!r}")
                    test_truth.update(table)
            prepared.append(_Prepared(sc, spec, train_data, test_data, test_truth or None))
        except AdscreenError as exc:
            prepared.append(_Prepared(sc, error=str(exc)))
    return prepared, truth


def _run_system(prep: _Prepared, folds, families: dict, seed: int):
    """One grid row: CV, optional test vote, optional metrics."""
    if prep.error is not None:
        return SystemResult(system_id=prep.config.id, error=prep.error), None, None
    try:
        cv = cross_validate(prep.spec, prep.train_data, folds, families, base_seed=seed)
        ties = list(cv.tie_subjects)
        decisions = None
        metrics = None
        if prep.test_data is not None:
            tie_log: list = []
            decisions = vote_over_folds(prep.spec, cv.fold_models, prep.test_data,
                                        families, tie_log)
            ties.extend(tie_log)
            if prep.test_truth is not None:
                metrics = compute_metrics(decisions, prep.test_truth)
        row = SystemResult(
            system_id=prep.config.id,
            cv_accuracy=cv.cv_accuracy,
            cv_accuracy_mean=cv.cv_accuracy_mean,
            test_metrics=metrics,
            tie_count=len(ties),
            degenerate_folds=cv.degenerate_folds,
        )
        return row, cv.heldout, decisions
    except Exception as exc:  # isolate the row; the grid must finish
        return SystemResult(system_id=prep.config.id, error=str(exc)), None, None


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.manifest, args.seed)
    entries = load_manifest(cfg.manifest_path)
    prepared, truth = _prepare_systems(cfg, entries)
    families = {fs_id: e.family for fs_id, e in entries.items()}

    folds = None
    if truth:
        subjects = sorted(truth)
        folds = make_folds(subjects, [truth[s] for s in subjects], cfg.cv_k, cfg.cv_seed)
    else:
        for prep in prepared:
            if prep.error is None:
                prep.error = "no loadable feature sets, cannot build folds"

    jobs = max(1, args.jobs)
    if jobs == 1 or len(prepared) == 1:
        results = [_run_system(p, folds, families, cfg.cv_seed) for p in prepared]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_system, p, folds, families, cfg.cv_seed)
                       for p in prepared]
            results = [f.result() for f in futures]

    os.makedirs(cfg.output_dir, exist_ok=True)
    decisions_dir = os.path.join(cfg.output_dir, "decisions")
    os.makedirs(decisions_dir, exist_ok=True)
    rows = []
    for (row, heldout, decisions) in results:
        rows.append(row)
        if heldout is not None:
            save_decisions(heldout, os.path.join(decisions_dir, f"{row.system_id}.cv.csv"))
        if decisions is not None:
            save_decisions(decisions, os.path.join(decisions_dir, f"{row.system_id}.csv"))

    report = ExperimentReport(digest=cfg.digest, seed=cfg.cv_seed, rows=rows)
    with open(os.path.join(cfg.output_dir, "report.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(report_csv(report))
    text = render_report(report)
    with open(os.path.join(cfg.output_dir, "report.txt"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return 0 if all(r.error is None for r in rows) else 1


# ---------------------------------------------------------------------------
# other subcommands


def cmd_extract_text(args) -> int:
    if not os.path.isdir(args.in_dir):
        print(f"not a directory: {args.in_dir}", file=sys.stderr)
        return 1
    counts = transcripts.extract_directory(
        args.in_dir, args.out_dir,
        strip_retraces=args.strip_retraces,
        speakers="all" if args.all_speakers else "par",
    )
    if counts["written"] == 0:
        print(f"no .cha or .txt transcripts in {args.in_dir}", file=sys.stderr)
        return 1
    print(f"wrote {counts['written']} files ({counts['empty']} empty, "
          f"{counts['skipped_lines']} unparsed lines)")
    return 0


def cmd_metrics(args) -> int:
    pred = load_decisions(args.pred_csv)
    truth = load_decisions(args.truth_csv)
    m = compute_metrics(pred, truth)
    print(f"counts    TP={m.tp} FP={m.fp} FN={m.fn} TN={m.tn} N={m.n}")
    print(f"accuracy  {100.0 * m.accuracy:.2f}")
    print(f"precision {100.0 * m.precision:.2f}")
    print(f"recall    {100.0 * m.recall:.2f}")
    print(f"f1        {100.0 * m.f1:.2f}")
    return 0


def cmd_folds(args) -> int:
    if args.features:
        from .feature_store import load_feature_file

        m = load_feature_file(args.features)
    else:
        manifest = args.manifest or os.environ.get(ENV_MANIFEST)
        if not manifest:
            print(f"need --features or --manifest/${ENV_MANIFEST}", file=sys.stderr)
            return 1
        entries = load_manifest(manifest)
        fs = args.feature_set or next(iter(entries))
        if fs not in entries:
            print(f"unknown feature set {fs!r}", file=sys.stderr)
            return 1
        m = load_feature_set(entries[fs], os.path.dirname(os.path.abspath(manifest)))
    if m.labels is None:
        print("feature table carries no labels; cannot stratify", file=sys.stderr)
        return 1
    folds = make_folds(m.subject_ids, m.labels, args.k, args.seed)
    print("subject_id,fold")
    for sid in sorted(folds.assignment):
        print(f"{sid},{folds.assignment[sid]}")
    print(f"# sizes: {folds.sizes()}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adscreen",
                                 description="speech-transcript AD screening experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-text", help="clean CHAT/.txt transcripts to per-subject text")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--strip-retraces", action="store_true",
                   help="drop retraced/repeated fragments marked in CHAT")
    p.add_argument("--all-speakers", action="store_true",
                   help="include interviewer speech (default: participant only)")
    p.set_defaults(func=cmd_extract_text)

    p = sub.add_parser("run", help="run every system in an experiment config")
    p.add_argument("config")
    p.add_argument("--manifest", help="override the manifest path")
    p.add_argument("--seed", type=int, default=None, help="override cv.seed")
    p.add_argument("--jobs", type=int, default=1, help="concurrent systems")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("metrics", help="compare a decision CSV against a truth CSV")
    p.add_argument("pred_csv")
    p.add_argument("truth_csv")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("folds", help="dump a stratified fold assignment")
    p.add_argument("--features", help="labeled feature CSV")
    p.add_argument("--manifest", help="manifest to pull a feature set from")
    p.add_argument("--feature-set", help="feature set id (default: first)")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_folds)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AdscreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
