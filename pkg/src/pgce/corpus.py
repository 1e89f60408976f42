"""Corpus ingestion, tokenization, length filtering, and toxicity splits.

Word definition used pipeline-wide: a word is a maximal run of word
characters, with internal apostrophes/hyphens joining ("don't" is one
word); everything else delimits. Sentence boundaries sit at '.', '!' or
'?' followed by whitespace or end of text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from .errors import PgceError, UsageError

if TYPE_CHECKING:
    from .taxonomy import TopicLabel

_WORD_RE = re.compile(r"\w+(?:['’-]\w+)*")
_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


class CorpusError(PgceError):
    pass


class DuplicateIdError(CorpusError):
    """Two records in one corpus file share an id."""

    def __init__(self, sample_id: str, first_line: int, second_line: int):
        self.sample_id = sample_id
        self.first_line = first_line
        self.second_line = second_line
        super().__init__(
            f"duplicate id {sample_id!r} at lines {first_line} and {second_line}"
        )


@dataclass
class TextSample:
    """One corpus record; word_count is recomputable from text."""

    id: str
    text: str
    source: str = ""
    word_count: int = 0
    topic: "TopicLabel | None" = None
    toxicity: float | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def to_record(self) -> dict:
        rec: dict = {"id": self.id, "text": self.text, "word_count": self.word_count}
        if self.source:
            rec["source"] = self.source
        if self.topic is not None:
            rec["topic"] = f"{self.topic.category.value}/{self.topic.subcategory.value}"
        if self.toxicity is not None:
            rec["toxicity"] = self.toxicity
        if self.meta:
            rec["meta"] = self.meta
        return rec


@dataclass
class SentenceTokenization:
    sentences: list[list[str]]
    letters: int
    words: int
    syllables: int

    @property
    def degenerate(self) -> bool:
        return self.words == 0


@dataclass
class IngestReject:
    line: int
    reason: str

    def to_record(self) -> dict:
        return {"line": self.line, "reason": self.reason}


@dataclass
class IngestResult:
    samples: list[TextSample]
    rejects: list[IngestReject]


def word_tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def count_syllables(word: str) -> int:
    """Count syllables as contiguous vowel groups (a,e,i,o,u,y).

    A trailing silent 'e' is subtracted unless the word ends in
    consonant+'le' ("table" keeps it, "whole" drops it). Tokens without
    letters are degenerate and count as 1; the minimum is always 1.
    """
    w = "".join(c for c in word.lower() if c.isalpha())
    if not w:
        return 1
    count = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e") and not (
        w.endswith("le") and len(w) >= 3 and w[-3] not in "aeiouy"
    ):
        count -= 1
    return max(count, 1)


def tokenize(text: str) -> SentenceTokenization:
    """Split text into sentences of words with letter and syllable counts.

    Deterministic; empty or word-free text yields the degenerate
    tokenization (0 words, 0 sentences).
    """
    sentences = []
    for chunk in _SENTENCE_END_RE.split(text):
        words = word_tokens(chunk)
        if words:
            sentences.append(words)
    letters = sum(1 for c in text if c.isalpha())
    words_total = sum(len(s) for s in sentences)
    syllables = sum(count_syllables(w) for s in sentences for w in s)
    return SentenceTokenization(
        sentences=sentences, letters=letters, words=words_total, syllables=syllables
    )


def _parse_record(obj: dict) -> TextSample:
    from .taxonomy import parse_topic_string

    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    sample_id = obj.get("id")
    if not isinstance(sample_id, str) or not sample_id:
        raise ValueError("missing or non-string id")
    text = obj.get("text")
    if not isinstance(text, str):
        raise ValueError("missing or non-string text")
    toxicity = obj.get("toxicity")
    if toxicity is not None:
        if not isinstance(toxicity, (int, float)) or isinstance(toxicity, bool):
            raise ValueError("toxicity is not a number")
        toxicity = float(toxicity)
        if not 0.0 <= toxicity <= 1.0:
            raise ValueError("toxicity outside [0, 1]")
    source = obj.get("source", "")
    if not isinstance(source, str):
        raise ValueError("source is not a string")
    topic = obj.get("topic")
    label = None
    if topic is not None:
        if not isinstance(topic, str):
            raise ValueError("topic is not a string")
        label = parse_topic_string(topic, annotated=True)
        if label is None:
            raise ValueError(f"unknown topic {topic!r}")
    meta = obj.get("meta", {})
    if not isinstance(meta, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in meta.items()
    ):
        raise ValueError("meta is not a string-to-string map")
    return TextSample(
        id=sample_id,
        text=text,
        source=source,
        word_count=len(word_tokens(text)),
        topic=label,
        toxicity=toxicity,
        meta=dict(meta),
    )


def ingest_jsonl(path: str | Path) -> IngestResult:
    """Read one JSONL corpus file, preserving line order.

    Malformed lines are collected as rejects, never silently dropped.
    A duplicate id raises DuplicateIdError naming both line numbers.
    """
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CorpusError(f"cannot read {path}: {e}") from e

    samples: list[TextSample] = []
    rejects: list[IngestReject] = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            sample = _parse_record(obj)
        except (json.JSONDecodeError, ValueError) as e:
            rejects.append(IngestReject(line=lineno, reason=str(e)))
            continue
        if sample.id in seen:
            raise DuplicateIdError(sample.id, seen[sample.id], lineno)
        seen[sample.id] = lineno
        samples.append(sample)
    return IngestResult(samples=samples, rejects=rejects)


def filter_by_length(
    samples: list[TextSample], min_words: int = 10, max_words: int = 500
) -> tuple[list[TextSample], list[TextSample]]:
    """Partition samples into (kept, removed) by inclusive word-count bounds."""
    if min_words > max_words:
        raise UsageError(f"min_words {min_words} exceeds max_words {max_words}")
    kept, removed = [], []
    for s in samples:
        (kept if min_words <= s.word_count <= max_words else removed).append(s)
    return kept, removed


def split_by_toxicity(
    samples: list[TextSample], threshold: float = 0.5
) -> tuple[list[TextSample], list[TextSample], list[TextSample]]:
    """Split into (non_toxic, toxic, unannotated) prompt sets.

    toxicity < threshold is non-toxic; toxicity >= threshold is toxic;
    samples without a toxicity annotation go to the third bucket.
    """
    non_toxic, toxic, unannotated = [], [], []
    for s in samples:
        if s.toxicity is None:
            unannotated.append(s)
        elif s.toxicity < threshold:
            non_toxic.append(s)
        else:
            toxic.append(s)
    return non_toxic, toxic, unannotated
