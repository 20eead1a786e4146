"""Seed-deterministic fine-tuning with intermediate snapshot checkpoints.

A :class:`FineTuneJob` pins every choice that affects the trained weights:
base checkpoint, corpus, epoch budget, snapshot epochs, batch recipe and
seed.  ``fine_tune`` replays the job exactly — same seed, same corpus,
same software: same loss trace and same saved tensors.

Objectives follow the architecture: BERT jobs train masked-language
modelling plus next-sentence prediction on consecutive-utterance pairs
(half swapped for random negatives); RoBERTa jobs train MLM only on
single utterances.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import shutil
from dataclasses import dataclass

import numpy as np

from .corpus import load_documents, nsp_pairs, utterances
from .defaults import DEFAULTS_VERSION, FINETUNE_DEFAULTS
from .errors import CheckpointError, ConfigError, ResourceError
from .hf import load_tokenizer, quiet_transformers, require_checkpoint

_FAMILIES = {
    "bert": "bert",
    "bert-base-uncased": "bert",
    "roberta": "roberta",
    "roberta-base": "roberta",
}


@dataclass(frozen=True)
class FineTuneJob:
    """Everything needed to reproduce one fine-tuning run."""

    encoder: str
    checkpoint: str
    corpus_dir: str
    snapshot_epochs: tuple
    epochs: int = 30
    seed: int = 0
    batch_size: int = FINETUNE_DEFAULTS["batch_size"]
    learning_rate: float = FINETUNE_DEFAULTS["learning_rate"]
    weight_decay: float = FINETUNE_DEFAULTS["weight_decay"]
    mask_probability: float = FINETUNE_DEFAULTS["mask_probability"]
    nsp_negative_rate: float = FINETUNE_DEFAULTS["nsp_negative_rate"]
    max_tokens: int = FINETUNE_DEFAULTS["max_tokens"]

    def __post_init__(self):
        family = _FAMILIES.get(self.encoder)
        if family is None:
            raise ConfigError(f"unknown encoder {self.encoder!r}; expected bert or roberta")
        object.__setattr__(self, "encoder", family)
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        epochs = tuple(int(e) for e in self.snapshot_epochs)
        if not epochs:
            raise ConfigError("snapshot_epochs must name at least one epoch")
        if list(epochs) != sorted(set(epochs)):
            raise ConfigError("snapshot_epochs must be strictly increasing")
        if epochs[0] < 1 or epochs[-1] > self.epochs:
            raise ConfigError(
                f"snapshot epochs {list(epochs)} outside [1, {self.epochs}]"
            )
        object.__setattr__(self, "snapshot_epochs", epochs)
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 < self.mask_probability < 1.0:
            raise ConfigError("mask_probability must lie in (0, 1)")

    @property
    def objectives(self) -> tuple:
        return ("mlm", "nsp") if self.encoder == "bert" else ("mlm",)

    def digest(self) -> str:
        """Short stable hash of the resolved configuration."""
        payload = dataclasses.asdict(self)
        payload["objectives"] = list(self.objectives)
        payload["defaults_version"] = DEFAULTS_VERSION
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _mask_for_mlm(input_ids, attention_mask, special_ids, mask_id, vocab_size,
                  probability, rng):
    """BERT-style corruption: 80% [MASK], 10% random token, 10% unchanged.

    Returns (corrupted ids, labels) with -100 at unselected positions.  At
    least one position per batch is always selected so the loss never
    averages over an empty set.
    """
    import torch

    ids = input_ids.clone()
    maskable = attention_mask.bool() & ~torch.isin(ids, special_ids)
    if not bool(maskable.any()):
        raise ConfigError("batch contains no maskable tokens")
    pick = torch.from_numpy(rng.random(ids.shape) < probability) & maskable
    if not bool(pick.any()):
        flat = int(maskable.view(-1).nonzero()[0])
        pick.view(-1)[flat] = True
    labels = ids.clone()
    labels[~pick] = -100
    split = torch.from_numpy(rng.random(ids.shape))
    ids[pick & (split < 0.8)] = mask_id
    use_random = pick & (split >= 0.8) & (split < 0.9)
    random_ids = torch.from_numpy(rng.integers(vocab_size, size=ids.shape))
    ids[use_random] = random_ids[use_random]
    return ids, labels


def _build_examples(job: FineTuneJob, tok, docs: dict):
    """Tokenized training examples plus per-example NSP labels (or None)."""
    kwargs = dict(truncation=True, max_length=job.max_tokens, verbose=False)
    if job.encoder == "bert":
        rng = np.random.default_rng((job.seed, 0))  # epoch rngs use (seed, epoch>=1)
        pairs = nsp_pairs(docs, rng, job.nsp_negative_rate)
        examples = [dict(tok(a, b, **kwargs)) for a, b, _ in pairs]
        return examples, [label for _, _, label in pairs]
    lines = [u for sid in sorted(docs) for u in utterances(docs[sid])]
    return [dict(tok(line, **kwargs)) for line in lines], None


def fine_tune(job: FineTuneJob, out_dir: str) -> dict:
    """Run the job and save one checkpoint per snapshot epoch.

    Snapshots land under ``out_dir/snapshots/epoch-<e>/`` as standard
    saved-model directories (config + tokenizer + weights).  Returns a
    summary dict with per-epoch mean losses, step count and the snapshot
    paths, which the caller records into the job manifest.
    """
    import torch
    from transformers import BertForPreTraining, RobertaForMaskedLM

    quiet_transformers()
    docs = load_documents(job.corpus_dir)
    tok = load_tokenizer(job.checkpoint)
    require_checkpoint(job.checkpoint)
    cls = BertForPreTraining if job.encoder == "bert" else RobertaForMaskedLM
    try:
        model = cls.from_pretrained(job.checkpoint)
    except (OSError, ValueError) as exc:
        raise CheckpointError(
            f"cannot load model from {job.checkpoint!r}: {exc}"
        ) from exc
    model.train()

    examples, nsp_labels = _build_examples(job, tok, docs)
    special_ids = torch.tensor(sorted(set(tok.all_special_ids)))
    mask_id = tok.mask_token_id
    vocab_size = model.config.vocab_size

    torch.manual_seed(job.seed)
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=job.learning_rate, weight_decay=job.weight_decay
    )

    wanted = set(job.snapshot_epochs)
    snapshots, losses, steps = {}, [], 0
    for epoch in range(1, job.epochs + 1):
        rng = np.random.default_rng((job.seed, epoch))
        order = rng.permutation(len(examples))
        epoch_losses = []
        for start in range(0, len(order), job.batch_size):
            chunk = order[start : start + job.batch_size]
            feats = [examples[i] for i in chunk]
            enc = tok.pad(feats, return_tensors="pt")
            ids, labels = _mask_for_mlm(
                enc["input_ids"], enc["attention_mask"], special_ids,
                mask_id, vocab_size, job.mask_probability, rng,
            )
            kwargs = dict(enc)
            kwargs["input_ids"] = ids
            kwargs["labels"] = labels
            if nsp_labels is not None:
                kwargs["next_sentence_label"] = torch.tensor(
                    [nsp_labels[i] for i in chunk], dtype=torch.long
                )
            try:
                loss = model(**kwargs).loss
                loss.backward()
            except RuntimeError as exc:
                if "out of memory" in str(exc).lower():
                    raise ResourceError(
                        f"out of memory at batch_size={job.batch_size}; "
                        f"retry with a smaller --batch-size"
                    ) from exc
                raise
            optimizer.step()
            optimizer.zero_grad()
            epoch_losses.append(float(loss.detach()))
            steps += 1
        losses.append(float(np.mean(epoch_losses)))
        if epoch in wanted:
            snapshots[epoch] = _save_snapshot(model, tok, out_dir, epoch)

    return {
        "digest": job.digest(),
        "objectives": list(job.objectives),
        "losses": losses,
        "steps": steps,
        "snapshots": {e: snapshots[e] for e in sorted(snapshots)},
        "defaults_version": DEFAULTS_VERSION,
    }


def _save_snapshot(model, tok, out_dir: str, epoch: int) -> str:
    """Write one checkpoint dir atomically: stage under a temp name, rename."""
    dest = os.path.join(out_dir, "snapshots", f"epoch-{epoch}")
    os.makedirs(os.path.dirname(dest), exist_ok=True)
    staging = f"{dest}.tmp-{os.getpid()}"
    if os.path.isdir(staging):
        shutil.rmtree(staging)
    model.save_pretrained(staging)
    tok.save_pretrained(staging)
    if os.path.isdir(dest):
        shutil.rmtree(dest)
    os.replace(staging, dest)
    return dest
