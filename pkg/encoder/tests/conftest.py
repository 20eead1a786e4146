import os

# keep transformers from touching the network or printing load reports
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

import pytest
import torch
import transformers
from transformers import (
    BertConfig,
    BertForPreTraining,
    BertTokenizerFast,
    RobertaConfig,
    RobertaForMaskedLM,
)

transformers.logging.set_verbosity_error()
transformers.utils.logging.disable_progress_bar()

# test_acceptance.py records one entry per criterion; printed after the run
# so the pass/fail ledger survives pytest's output capture.
ACCEPTANCE_RESULTS: dict = {}


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[name] = (bool(ok), detail)


@pytest.hookimpl
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in ACCEPTANCE_RESULTS.items():
        mark = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{mark}  {name}{suffix}")

# small in-vocab lexicon so test texts tokenize without [UNK] noise
WORDS = [
    "the", "a", "boy", "girl", "mother", "cookie", "jar", "stool", "water",
    "sink", "window", "falling", "reaching", "taking", "dog", "runs", "fast",
    "and", "is", "on", "over", "plate", "dish", "dries", "spills", "outside",
    "curtain", "open", "she", "he",
]


def _save_tokenizer(dirname) -> BertTokenizerFast:
    vocab = dirname / "vocab.txt"
    tokens = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS
    vocab.write_text("\n".join(tokens) + "\n", encoding="utf-8")
    tok = BertTokenizerFast(str(vocab))
    tok.save_pretrained(str(dirname))
    return tok


@pytest.fixture(scope="session")
def bert_checkpoint(tmp_path_factory) -> str:
    """Randomly initialized 1-layer BERT with the contract's 768-wide output."""
    d = tmp_path_factory.mktemp("bert-base")
    tok = _save_tokenizer(d)
    torch.manual_seed(101)
    cfg = BertConfig(
        vocab_size=tok.vocab_size, hidden_size=768, num_hidden_layers=1,
        num_attention_heads=4, intermediate_size=256, max_position_embeddings=512,
    )
    BertForPreTraining(cfg).save_pretrained(str(d))
    return str(d)


@pytest.fixture(scope="session")
def roberta_checkpoint(tmp_path_factory) -> str:
    d = tmp_path_factory.mktemp("roberta-base")
    tok = _save_tokenizer(d)
    torch.manual_seed(202)
    # positions are offset past the pad index, so 512 tokens need >=514 slots
    cfg = RobertaConfig(
        vocab_size=tok.vocab_size, hidden_size=768, num_hidden_layers=1,
        num_attention_heads=4, intermediate_size=256, max_position_embeddings=520,
        pad_token_id=tok.pad_token_id, type_vocab_size=1,
    )
    RobertaForMaskedLM(cfg).save_pretrained(str(d))
    return str(d)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> str:
    """Four subjects, several utterances each, plus one non-transcript file."""
    d = tmp_path_factory.mktemp("corpus")
    docs = {
        "s01": "the boy is taking a cookie\nthe stool is falling\nthe mother dries a plate\n",
        "s02": "water spills over the sink\nthe window is open\nshe is reaching for the jar\n",
        "s03": "the dog runs fast\nthe girl runs outside\nhe is on the stool\nthe curtain is open\n",
        "s04": "the mother is on the sink\n\nthe boy is falling\n",
    }
    for sid, text in docs.items():
        (d / f"{sid}.txt").write_text(text, encoding="utf-8")
    (d / "notes.json").write_text("{}", encoding="utf-8")
    return str(d)
