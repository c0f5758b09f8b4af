"""Tokenization, n-gram overlap and sentence helpers shared across modules."""

from __future__ import annotations

import re
from collections import Counter
from typing import Iterable, Sequence

_SPLIT_RE = re.compile(r"[^0-9a-z]+")
_SENT_RE = re.compile(r"(?<=[.!?])\s+")
_WS_RE = re.compile(r"\s+")

STOPWORDS = frozenset(
    "a an and are as at be but by for from has have he her his in is it its of on or "
    "she that the their they this to was were will with".split()
)


def tokenize(text: str, remove_stopwords: bool = False) -> list[str]:
    toks = [t for t in _SPLIT_RE.split(text.lower()) if t]
    if remove_stopwords:
        toks = [t for t in toks if t not in STOPWORDS]
    return toks


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_overlap(pred: Sequence[str], ref: Sequence[str], n: int) -> tuple[int, int, int]:
    """(clipped overlap, #pred n-grams, #ref n-grams)."""
    p, r = ngrams(pred, n), ngrams(ref, n)
    overlap = sum(min(c, r[g]) for g, c in p.items())
    return overlap, max(len(pred) - n + 1, 0), max(len(ref) - n + 1, 0)


def f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def prf(overlap: float, n_pred: float, n_ref: float) -> float:
    p = overlap / n_pred if n_pred else 0.0
    r = overlap / n_ref if n_ref else 0.0
    return f1(p, r)


def rouge_f1(pred_tokens: Sequence[str], ref_tokens: Sequence[str], n: int = 1) -> float:
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    return prf(*ngram_overlap(pred_tokens, ref_tokens, n))


def unigram_f1(a: str, b: str) -> float:
    return rouge_f1(tokenize(a), tokenize(b), 1)


def normalize_description(text: str) -> str:
    """Lowercase, collapse whitespace, strip terminal punctuation."""
    return _WS_RE.sub(" ", text.lower()).strip().rstrip(".!?;:,").strip()


def split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENT_RE.split(text.strip()) if s.strip()]


def terminate(sentence: str) -> str:
    s = sentence.strip()
    return s if s.endswith((".", "!", "?")) else s + "."


def join_sentences(sentences: Iterable[str]) -> str:
    return " ".join(terminate(s) for s in sentences if s.strip())
