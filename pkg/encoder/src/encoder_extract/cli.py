"""Command-line front end: ``finetune`` and ``extract`` subcommands.

``finetune`` trains one job and leaves its snapshots under a directory
named by the job's config digest, so re-running a changed recipe never
overwrites an older run's checkpoints.  ``extract`` turns one checkpoint
plus a transcript corpus into a feature CSV and a manifest fragment that
downstream experiment configs can point at directly.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import yaml

from .corpus import load_documents
from .defaults import DEFAULTS_VERSION, FINETUNE_DEFAULTS
from .errors import EncoderExtractError
from .extract import (
    _write_atomic,
    extract_embeddings,
    manifest_entry,
    write_feature_csv,
    write_manifest_fragment,
)
from .finetune import FineTuneJob, fine_tune
from .schedule import parse_schedule


def _load_labels(path: str) -> dict:
    """subject_id,<label> CSV with 0/1 rows, same grammar as decision files."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0].split(",")[0] != "subject_id":
        raise EncoderExtractError(f"{path}: expected a subject_id,<label> header")
    out = {}
    for ln in lines[1:]:
        sid, _, val = ln.partition(",")
        if val not in ("0", "1"):
            raise EncoderExtractError(f"{path}: bad label {val!r} for {sid}")
        if sid in out:
            raise EncoderExtractError(f"{path}: duplicate subject {sid}")
        out[sid] = int(val)
    return out


def _labels_for(ids: list, table: dict | None, where: str):
    """All-or-nothing label vector; downstream forbids partially labeled files."""
    if table is None:
        return None
    missing = [s for s in ids if s not in table]
    if missing:
        raise EncoderExtractError(
            f"{where}: labels missing for {len(missing)} subject(s), e.g. {missing[0]!r}"
        )
    return [table[s] for s in ids]


def cmd_finetune(args) -> int:
    if args.snapshot_epochs:
        epochs = tuple(int(tok) for tok in args.snapshot_epochs.split(","))
    else:
        epochs = tuple(parse_schedule(args.schedule, args.epochs, seed=args.seed))
    job = FineTuneJob(
        encoder=args.encoder,
        checkpoint=args.checkpoint,
        corpus_dir=args.corpus,
        snapshot_epochs=epochs,
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
    )
    job_dir = os.path.join(args.out, job.digest())
    os.makedirs(job_dir, exist_ok=True)
    result = fine_tune(job, job_dir)
    doc = {"job": dataclasses.asdict(job), "result": result}
    doc["job"]["snapshot_epochs"] = list(job.snapshot_epochs)
    doc["job"]["objectives"] = list(job.objectives)
    doc["job"]["defaults_version"] = DEFAULTS_VERSION
    _write_atomic(os.path.join(job_dir, "job.yaml"), yaml.safe_dump(doc, sort_keys=False))
    print(f"job digest: {job.digest()}")
    print(f"objectives: {','.join(job.objectives)}")
    for epoch, path in result["snapshots"].items():
        print(f"snapshot epoch {epoch}: {path}")
    print(f"final epoch loss: {result['losses'][-1]:.4f} ({result['steps']} steps)")
    return 0


def cmd_extract(args) -> int:
    texts = load_documents(args.corpus)
    labels = _load_labels(args.labels) if args.labels else None
    result = extract_embeddings(
        args.checkpoint, texts, pooling=args.pooling, max_tokens=args.max_tokens
    )
    os.makedirs(args.out_dir, exist_ok=True)
    csv_name = f"{args.id}.csv"
    write_feature_csv(
        result.subject_ids,
        result.matrix,
        os.path.join(args.out_dir, csv_name),
        labels=_labels_for(result.subject_ids, labels, args.corpus),
    )
    diagnostics = dict(result.diagnostics)

    test_name = None
    if args.test_corpus:
        test_texts = load_documents(args.test_corpus)
        test_labels = _load_labels(args.test_labels) if args.test_labels else None
        test_result = extract_embeddings(
            args.checkpoint, test_texts, pooling=args.pooling, max_tokens=args.max_tokens
        )
        test_name = f"{args.id}.test.csv"
        write_feature_csv(
            test_result.subject_ids,
            test_result.matrix,
            os.path.join(args.out_dir, test_name),
            labels=_labels_for(test_result.subject_ids, test_labels, args.test_corpus),
        )
        diagnostics["test"] = test_result.diagnostics

    entry = manifest_entry(
        args.id, args.encoder, args.source, result.matrix.shape[1], csv_name,
        epoch=args.epoch, source_tag=args.source_tag or "", test_path=test_name,
    )
    provenance = {
        "checkpoint": os.path.abspath(args.checkpoint),
        "defaults_version": DEFAULTS_VERSION,
        "diagnostics": diagnostics,
    }
    write_manifest_fragment(
        os.path.join(args.out_dir, f"{args.id}.manifest.yaml"), [entry], provenance
    )
    print(f"wrote {csv_name}: {len(result.subject_ids)} subjects x {result.matrix.shape[1]} dims")
    if test_name:
        print(f"wrote {test_name}: {len(test_result.subject_ids)} subjects")
    print(f"empty transcripts: {len(result.diagnostics['empty_subjects'])}")
    print(f"truncated transcripts: {len(result.diagnostics['truncated_subjects'])}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="encoder-extract",
                                 description="fine-tune encoders and export embeddings")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("finetune", help="fine-tune an encoder, saving snapshot checkpoints")
    p.add_argument("--encoder", required=True,
                   choices=["bert", "bert-base-uncased", "roberta", "roberta-base"])
    p.add_argument("--checkpoint", required=True, help="base model directory")
    p.add_argument("--corpus", required=True, help="directory of per-subject .txt files")
    p.add_argument("--out", required=True, help="jobs root; run lands in <out>/<digest>")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--schedule", default="fixed_stride(1)",
                   help="fixed_stride(s) | geometric | random")
    p.add_argument("--snapshot-epochs", help="explicit comma list, overrides --schedule")
    p.add_argument("--batch-size", type=int, default=FINETUNE_DEFAULTS["batch_size"])
    p.add_argument("--learning-rate", type=float, default=FINETUNE_DEFAULTS["learning_rate"])
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("extract", help="export per-subject embeddings from a checkpoint")
    p.add_argument("--checkpoint", required=True, help="saved encoder directory")
    p.add_argument("--corpus", required=True, help="directory of per-subject .txt files")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--id", required=True, help="feature set id, names the artifacts")
    p.add_argument("--encoder", required=True, choices=["bert", "roberta"])
    p.add_argument("--source", default="manual", choices=["manual", "asr"])
    p.add_argument("--epoch", type=int, help="snapshot epoch recorded in the manifest")
    p.add_argument("--source-tag", help="ASR provenance tag, e.g. cnn-tdnn")
    p.add_argument("--pooling", default="cls", choices=["cls", "mean"])
    p.add_argument("--max-tokens", type=int, default=FINETUNE_DEFAULTS["max_tokens"])
    p.add_argument("--labels", help="subject_id,label CSV for the train corpus")
    p.add_argument("--test-corpus", help="held-out corpus; writes <id>.test.csv")
    p.add_argument("--test-labels", help="subject_id,label CSV for the test corpus")
    p.set_defaults(func=cmd_extract)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EncoderExtractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
