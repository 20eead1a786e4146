"""Transcript corpus loading and sentence-pair construction.

A corpus is a directory of per-subject ``.txt`` files: the file stem is
the subject id and each non-empty line is one utterance.  Files are read
in sorted order so every downstream artifact sees subjects in a stable
order regardless of filesystem listing.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import CorpusError


def load_documents(corpus_dir: str) -> dict:
    """Map subject id -> raw text for every ``.txt`` file in the directory."""
    if not os.path.isdir(corpus_dir):
        raise CorpusError(f"corpus directory not found: {corpus_dir}")
    docs = {}
    for name in sorted(os.listdir(corpus_dir)):
        if not name.endswith(".txt"):
            continue
        sid = name[: -len(".txt")]
        with open(os.path.join(corpus_dir, name), encoding="utf-8") as fh:
            docs[sid] = fh.read()
    if not docs:
        raise CorpusError(f"no .txt documents in {corpus_dir}")
    return docs


def utterances(text: str) -> list:
    """Non-empty stripped lines of one document."""
    return [line.strip() for line in text.splitlines() if line.strip()]


def nsp_pairs(docs: dict, rng: np.random.Generator, negative_rate: float = 0.5) -> list:
    """Sentence pairs for next-sentence prediction.

    For each consecutive utterance pair (a, b) within a document, emit
    either (a, b, 0) or — with probability ``negative_rate`` — (a, r, 1)
    where r is an utterance drawn from a *different* document.  Label 0
    means "b really follows a".  Documents with fewer than two utterances
    contribute nothing.
    """
    by_subject = {sid: utterances(docs[sid]) for sid in sorted(docs)}
    pairs = []
    for sid in sorted(by_subject):
        lines = by_subject[sid]
        others = [u for o, ls in by_subject.items() if o != sid for u in ls]
        for a, b in zip(lines, lines[1:]):
            if others and rng.random() < negative_rate:
                pairs.append((a, others[int(rng.integers(len(others)))], 1))
            else:
                pairs.append((a, b, 0))
    if not pairs:
        raise CorpusError("corpus has no document with two or more utterances")
    return pairs
