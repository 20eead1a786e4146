"""CHAT transcript parsing and participant-text extraction.

Only the pragmatic subset of CHAT markup that shows up in picture-description
transcripts is cleaned: tier prefixes, ampersand fillers, square-bracket
codes, parenthesized pause/omission codes, angle-bracket scoping, and
utterance terminators.  Morphology tiers and full retracing semantics are out
of scope; retraced words are kept as spoken unless ``strip_retraces`` is set.
"""

from __future__ import annotations

import os
import re
import warnings
from dataclasses import dataclass, field

PARTICIPANT = "PAR"
INVESTIGATOR = "INV"

_TIER_RE = re.compile(r"^\*([A-Z0-9]{2,3}):\s?(.*)$")
# retraced group: "<words> [/]" or "word [//]" etc (only when stripping)
_RETRACE_ANGLE_RE = re.compile(r"<[^<>]*>\s*\[/+/?\]")
_RETRACE_WORD_RE = re.compile(r"(?:^|\s)\S+\s*\[/+/?\]")
_BRACKET_RE = re.compile(r"\[[^\[\]]*\]")
_PAREN_RE = re.compile(r"\([^()]*\)")
_STRIP_CHARS = ".,;:?!+/\\\"'`^~‡„<>[]()&@*%=#"


def speaker_kind(code: str) -> str:
    """Collapse a tier code to the PAR / INV / other trichotomy."""
    if code == PARTICIPANT:
        return "PAR"
    if code == INVESTIGATOR:
        return "INV"
    return "other"


@dataclass
class Utterance:
    speaker: str
    raw: str
    tokens: list[str]


@dataclass
class ChatDocument:
    subject_id: str
    utterances: list[Utterance] = field(default_factory=list)
    skipped_lines: int = 0


def clean_utterance(raw: str, strip_retraces: bool = False) -> list[str]:
    """Apply the cleaning rules to one utterance body, returning word tokens.

    Order matters: retrace removal (optional) must see the bracket markers,
    bracketed codes go before angle-bracket unwrapping, and parenthesized
    codes are deleted with their parentheses so "(be)cause" becomes "cause"
    while "(..)" disappears.
    """
    text = raw
    if strip_retraces:
        prev = None
        while prev != text:
            prev = text
            text = _RETRACE_ANGLE_RE.sub(" ", text)
            text = _RETRACE_WORD_RE.sub(" ", text)
    prev = None
    while prev != text:
        prev = text
        text = _BRACKET_RE.sub(" ", text)
    prev = None
    while prev != text:
        prev = text
        text = _PAREN_RE.sub("", text)
    text = text.replace("<", " ").replace(">", " ")
    tokens = []
    for tok in text.split():
        if tok.startswith("&"):
            continue
        tok = tok.strip(_STRIP_CHARS)
        if tok and any(c.isalnum() for c in tok):
            tokens.append(tok)
    return tokens


def parse_chat(text: str, subject_id: str, strip_retraces: bool = False) -> ChatDocument:
    """Parse CHAT-annotated text into per-speaker utterances.

    ``*XXX:`` lines open an utterance, tab-led continuation lines extend it,
    ``@`` and ``%`` lines are ignored, anything else is skipped and counted.
    """
    doc = ChatDocument(subject_id)
    open_speaker: str | None = None
    open_body: list[str] = []

    def flush():
        nonlocal open_speaker, open_body
        if open_speaker is not None:
            body = " ".join(open_body)
            doc.utterances.append(
                Utterance(open_speaker, body, clean_utterance(body, strip_retraces))
            )
        open_speaker, open_body = None, []

    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith(("@", "%")):
            flush()
            continue
        if line.startswith("\t") and open_speaker is not None:
            open_body.append(line.strip())
            continue
        m = _TIER_RE.match(line)
        if m:
            flush()
            open_speaker = m.group(1)
            open_body = [m.group(2).strip()]
            continue
        doc.skipped_lines += 1
    flush()
    return doc


def participant_text(doc: ChatDocument) -> str:
    """Space-joined cleaned tokens of all PAR utterances in document order."""
    words: list[str] = []
    for utt in doc.utterances:
        if speaker_kind(utt.speaker) == "PAR":
            words.extend(utt.tokens)
    if not words:
        warnings.warn(f"no participant speech in document {doc.subject_id!r}")
    return " ".join(words)


def document_text(doc: ChatDocument) -> str:
    """All-speaker variant, used for fine-tuning corpora."""
    words: list[str] = []
    for utt in doc.utterances:
        words.extend(utt.tokens)
    return " ".join(words)


def extract_directory(
    in_dir: str,
    out_dir: str,
    strip_retraces: bool = False,
    speakers: str = "par",
) -> dict:
    """Convert a directory of .cha / .txt transcripts to one-line text files.

    Plain .txt inputs (ASR outputs) bypass CHAT parsing and are normalized
    to a single line.  Returns summary counts for the CLI.
    """
    names = sorted(os.listdir(in_dir))
    sources = [n for n in names if n.endswith((".cha", ".txt"))]
    counts = {"written": 0, "empty": 0, "skipped_lines": 0}
    os.makedirs(out_dir, exist_ok=True)
    for name in sources:
        subject_id = os.path.splitext(name)[0]
        with open(os.path.join(in_dir, name), "r", encoding="utf-8") as fh:
            raw = fh.read()
        if name.endswith(".cha"):
            doc = parse_chat(raw, subject_id, strip_retraces)
            counts["skipped_lines"] += doc.skipped_lines
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                text = participant_text(doc) if speakers == "par" else document_text(doc)
        else:
            text = " ".join(raw.split())
        if not text:
            counts["empty"] += 1
            warnings.warn(f"empty extraction for {name}")
        with open(os.path.join(out_dir, subject_id + ".txt"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        counts["written"] += 1
    return counts
