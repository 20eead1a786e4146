"""Seeded synthetic bundle: Gaussian stand-in for a 108/48-subject corpus.

Generates everything ``adscreen run`` needs — feature CSVs for a grid of
(encoder, snapshot epoch) sets, the manifest, a test-truth table and a
ready-made experiment config — from one integer seed, so two invocations
produce byte-identical trees.  Class means sit at ±separation/2 along one
random unit direction with unit isotropic noise; the default separation of
8 makes the classes linearly separable for all practical seeds, which the
pipeline checks (CV accuracy 100% for a linear atom) rather than assumes.

Per-set noise is drawn from an rng keyed by (seed, encoder, epoch, split),
so sets are distinct but any subset regenerates identically.
"""

from __future__ import annotations

import argparse
import hashlib
import os

import numpy as np
import yaml

from .feature_store import FeatureMatrix, FeatureSetManifest, save_feature_set, save_manifest


def _rng_for(seed: int, *tags) -> np.random.Generator:
    key = "|".join([str(seed), *map(str, tags)]).encode()
    return np.random.default_rng(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _ids(prefix: str, n: int) -> list:
    return [f"{prefix}-{i:03d}" for i in range(1, n + 1)]


def _labels(n: int) -> np.ndarray:
    half = n // 2
    return np.array([0] * (n - half) + [1] * half, dtype=int)


DEFAULT_CONFIG = {
    "manifest": "manifest.yaml",
    "output_dir": "out",
    "cv": {"k": 10, "seed": 11, "fold_vote": True},
    "systems": [
        {
            "id": "svm-bert-snapshots",
            "feature_sets": ["bert-*"],
            "snapshot_scheme": "fixed_stride(1)",
            "classifiers": ["svm"],
        },
        {
            "id": "all-classifiers-e30",
            "feature_sets": ["bert-e30", "roberta-e30"],
            "classifiers": ["svm", "lda", "gp", "mlp", "xgb"],
        },
        {
            "id": "concat-lda",
            "feature_sets": ["bert-e30", "roberta-e30"],
            "classifiers": ["lda"],
            "fusion_mode": "concat_features",
        },
    ],
}


def make_bundle(
    out_dir: str,
    seed: int = 7,
    n_train: int = 108,
    n_test: int = 48,
    dim: int = 768,
    encoders=("bert", "roberta"),
    epochs=(28, 29, 30),
    separation: float = 8.0,
) -> dict:
    """Write the bundle under out_dir and return its key paths."""
    feat_dir = os.path.join(out_dir, "features")
    os.makedirs(feat_dir, exist_ok=True)

    rng = _rng_for(seed, "direction")
    u = rng.standard_normal(dim)
    u /= np.linalg.norm(u)

    train_ids, test_ids = _ids("tr", n_train), _ids("te", n_test)
    y_train, y_test = _labels(n_train), _labels(n_test)

    entries = {}
    for enc in encoders:
        for ep in epochs:
            fs_id = f"{enc}-e{ep}"
            for split, ids, y in (("train", train_ids, y_train), ("test", test_ids, y_test)):
                noise = _rng_for(seed, enc, ep, split).standard_normal((len(ids), dim))
                rows = (2.0 * y[:, None] - 1.0) * (separation / 2.0) * u[None, :] + noise
                name = f"{fs_id}.csv" if split == "train" else f"{fs_id}.test.csv"
                save_feature_set(FeatureMatrix(ids, rows, y), os.path.join(feat_dir, name))
            entries[fs_id] = FeatureSetManifest(
                id=fs_id, encoder=enc, epoch=ep, source="manual", dim=dim,
                path=f"features/{fs_id}.csv", test_path=f"features/{fs_id}.test.csv",
            )

    manifest_path = os.path.join(out_dir, "manifest.yaml")
    save_manifest(entries, manifest_path)

    truth_path = os.path.join(out_dir, "truth.csv")
    with open(truth_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("subject_id,label\n")
        for sid, lab in zip(test_ids, y_test):
            fh.write(f"{sid},{int(lab)}\n")

    config_path = os.path.join(out_dir, "config.yaml")
    with open(config_path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(DEFAULT_CONFIG, fh, sort_keys=False)

    return {
        "manifest": manifest_path,
        "config": config_path,
        "truth": truth_path,
        "features": feat_dir,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="write a synthetic feature bundle")
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--dim", type=int, default=768)
    ap.add_argument("--separation", type=float, default=8.0)
    args = ap.parse_args(argv)
    paths = make_bundle(args.out_dir, seed=args.seed, dim=args.dim,
                        separation=args.separation)
    print(f"wrote manifest {paths['manifest']}")
    print(f"wrote config   {paths['config']}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
