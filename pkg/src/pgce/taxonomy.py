"""Four-way topic typing via a weighted-keyword lexicon or a classifier endpoint.

The lexicon baseline scores each subcategory by summed keyword-match
weight normalized by word count; ties break toward the least restrictive
category (daily < professional < sensitive < rule_violating) so ambiguity
never escalates on its own.
"""

from __future__ import annotations

import configparser
import io
import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import TextSample
from .dedup import CategoryDistribution, category_entropy, normalized_entropy
from .errors import EndpointError, PgceError, UsageError
from .datafiles import read_data_text
from .llm_gateway import ChatRequest, Gateway, SamplingParams

log = logging.getLogger(__name__)

DEFAULT_LEXICON_FILE = "lexicon_v1.ini"


class TaxonomyError(PgceError):
    pass


class ClassificationEndpointError(EndpointError):
    def __init__(self, sample_id: str, cause: str):
        self.sample_id = sample_id
        super().__init__(f"classification failed for sample {sample_id!r}: {cause}")


class Category(Enum):
    DAILY = "daily"
    SENSITIVE = "sensitive"
    RULE_VIOLATING = "rule_violating"
    PROFESSIONAL = "professional"


class Subcategory(Enum):
    LIFE_ADVICE = "life_advice"
    LEISURE = "leisure"
    PERSONAL_DEVELOPMENT = "personal_development"
    GENERAL = "general"
    DISCRIMINATORY = "discriminatory"
    OTHER = "other"
    POLITICAL = "political"
    LEGAL = "legal"
    FINANCIAL = "financial"


class LabelSource(Enum):
    LEXICON = "lexicon"
    ENDPOINT = "endpoint"
    ANNOTATION = "annotation"


SUBCATEGORIES: dict[Category, tuple[Subcategory, ...]] = {
    Category.DAILY: (
        Subcategory.LIFE_ADVICE,
        Subcategory.LEISURE,
        Subcategory.PERSONAL_DEVELOPMENT,
    ),
    Category.SENSITIVE: (Subcategory.GENERAL,),
    Category.RULE_VIOLATING: (Subcategory.DISCRIMINATORY, Subcategory.OTHER),
    Category.PROFESSIONAL: (
        Subcategory.POLITICAL,
        Subcategory.LEGAL,
        Subcategory.FINANCIAL,
    ),
}

# Tie-break order: least restrictive first, so equal scores never escalate.
CATEGORY_ORDER = (
    Category.DAILY,
    Category.PROFESSIONAL,
    Category.SENSITIVE,
    Category.RULE_VIOLATING,
)


@dataclass
class TopicLabel:
    category: Category
    subcategory: Subcategory
    confidence: float = 1.0
    source: LabelSource = LabelSource.LEXICON

    def __post_init__(self):
        if self.subcategory not in SUBCATEGORIES[self.category]:
            raise UsageError(
                f"subcategory {self.subcategory.value} invalid for {self.category.value}"
            )
        if not 0.0 <= self.confidence <= 1.0:
            raise UsageError("confidence must be in [0, 1]")

    def to_record(self) -> dict:
        return {
            "category": self.category.value,
            "subcategory": self.subcategory.value,
            "confidence": self.confidence,
            "source": self.source.value,
        }


def _norm_token(token: str) -> str:
    return re.sub(r"[\s_\-]+", "", token.strip().lower())


_CATEGORY_ALIASES = {_norm_token(c.value): c for c in Category}
_SUBCATEGORY_ALIASES = {_norm_token(s.value): s for s in Subcategory}


def parse_topic_string(
    text: str,
    annotated: bool = False,
    confidence: float = 1.0,
) -> TopicLabel | None:
    """Parse "category/subcategory" (underscore/dash/space tolerant).

    A bare category maps to its first subcategory. Returns None when the
    string names no known label.
    """
    parts = text.strip().split("/")
    category = _CATEGORY_ALIASES.get(_norm_token(parts[0])) if parts else None
    if category is None:
        return None
    if len(parts) == 1 or not parts[1].strip():
        subcategory = SUBCATEGORIES[category][0]
    else:
        subcategory = _SUBCATEGORY_ALIASES.get(_norm_token(parts[1]))
        if subcategory is None or subcategory not in SUBCATEGORIES[category]:
            return None
    source = LabelSource.ANNOTATION if annotated else LabelSource.ENDPOINT
    return TopicLabel(
        category=category,
        subcategory=subcategory,
        confidence=confidence,
        source=source,
    )


@dataclass
class Lexicon:
    """Weighted keyword lists per (category, subcategory), versioned."""

    entries: dict[tuple[Category, Subcategory], list[tuple[str, float]]]
    version: str
    _compiled: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        for category, subs in SUBCATEGORIES.items():
            for sub in subs:
                if not self.entries.get((category, sub)):
                    raise TaxonomyError(
                        f"lexicon {self.version!r} has no keywords for "
                        f"{category.value}/{sub.value}"
                    )
        for key, pairs in self.entries.items():
            self._compiled[key] = [
                (re.compile(r"(?<!\w)" + re.escape(kw.lower()) + r"(?!\w)"), weight)
                for kw, weight in pairs
            ]


def load_lexicon(path: str | Path) -> Lexicon:
    return parse_lexicon(Path(path).read_text(encoding="utf-8"))


def parse_lexicon(text: str) -> Lexicon:
    """Parse a sectioned lexicon: [category.subcategory] keyword = weight."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_file(io.StringIO(text))
    version = parser.get("meta", "version", fallback="unversioned")
    entries: dict[tuple[Category, Subcategory], list[tuple[str, float]]] = {}
    for section in parser.sections():
        if section == "meta":
            continue
        if "." not in section:
            raise TaxonomyError(f"bad lexicon section {section!r}")
        cat_token, sub_token = section.split(".", 1)
        category = _CATEGORY_ALIASES.get(_norm_token(cat_token))
        subcategory = _SUBCATEGORY_ALIASES.get(_norm_token(sub_token))
        if category is None or subcategory is None:
            raise TaxonomyError(f"unknown lexicon section {section!r}")
        entries[(category, subcategory)] = [
            (kw, float(weight)) for kw, weight in parser.items(section)
        ]
    return Lexicon(entries=entries, version=version)


def default_lexicon() -> Lexicon:
    return parse_lexicon(read_data_text(DEFAULT_LEXICON_FILE))


def classify_lexicon(sample: TextSample, lexicon: Lexicon) -> TopicLabel:
    """Score every subcategory and return the best label.

    score = sum(weight * occurrences) / word_count, clamped to [0, 1] for
    the confidence. Zero matches fall back to daily/life_advice with
    confidence 0.
    """
    if not lexicon.entries:
        raise TaxonomyError("empty lexicon")
    if not sample.text.strip() or sample.word_count == 0:
        raise UsageError(f"sample {sample.id!r} has no words to classify")
    text = sample.text.lower()
    best_key = None
    best_score = 0.0
    for ci, category in enumerate(CATEGORY_ORDER):
        for si, sub in enumerate(SUBCATEGORIES[category]):
            patterns = lexicon._compiled.get((category, sub), [])
            raw = sum(
                weight * len(pattern.findall(text)) for pattern, weight in patterns
            )
            score = raw / sample.word_count
            if score > best_score:
                best_score = score
                best_key = (ci, si, category, sub)
    if best_key is None or best_score == 0.0:
        return TopicLabel(
            Category.DAILY, Subcategory.LIFE_ADVICE, 0.0, LabelSource.LEXICON
        )
    _, _, category, sub = best_key
    return TopicLabel(category, sub, min(1.0, best_score), LabelSource.LEXICON)


CLASSIFY_SYSTEM = (
    "You are a strict text classifier. Assign the user text exactly one label "
    "of the form category/subcategory, chosen from: "
    "daily/life_advice, daily/leisure, daily/personal_development, "
    "sensitive/general, rule_violating/discriminatory, rule_violating/other, "
    "professional/political, professional/legal, professional/financial. "
    "Reply with the label only."
)

_CLASSIFY_PARAMS = SamplingParams(
    temperature=0.0, top_p=1.0, top_k=None, max_tokens=20, n=1
)


def _parse_endpoint_reply(reply: str) -> TopicLabel | None:
    reply = reply.strip()
    if reply.startswith("{"):
        try:
            obj = json.loads(reply)
            text = f"{obj.get('category', '')}/{obj.get('subcategory', '')}"
            conf = float(obj.get("confidence", 1.0))
            return parse_topic_string(text, confidence=max(0.0, min(1.0, conf)))
        except (ValueError, TypeError):
            return None
    first = reply.splitlines()[0] if reply else ""
    m = re.match(r"\s*([A-Za-z_\- ]+(?:/[A-Za-z_\- ]+)?)\s*([0-9.]+)?\s*$", first)
    if not m:
        return None
    confidence = 1.0
    if m.group(2):
        try:
            confidence = max(0.0, min(1.0, float(m.group(2))))
        except ValueError:
            return None
    return parse_topic_string(m.group(1), confidence=confidence)


def classify_endpoint(
    sample: TextSample, gateway: Gateway, lexicon: Lexicon | None = None
) -> TopicLabel:
    """Classify via the endpoint; falls back to the lexicon on unparseable replies.

    The reply is retried once when it does not parse; transport failures
    surface as ClassificationEndpointError carrying the sample id.
    """
    req = ChatRequest(
        system=CLASSIFY_SYSTEM,
        user=f"Classify this text.\n\nText: {sample.text}",
        params=_CLASSIFY_PARAMS,
    )
    try:
        for _ in range(2):
            reply = gateway.chat_complete(req)[0]
            label = _parse_endpoint_reply(reply)
            if label is not None:
                return label
    except EndpointError as e:
        raise ClassificationEndpointError(sample.id, str(e)) from e
    log.warning(
        "unparseable classifier reply for sample %s; using lexicon fallback",
        sample.id,
    )
    lexicon = lexicon if lexicon is not None else default_lexicon()
    return classify_lexicon(sample, lexicon)


def classify_endpoint_batch(
    samples: list[TextSample], gateway: Gateway, lexicon: Lexicon | None = None
) -> list[TopicLabel]:
    """Bounded-concurrency classification, results in input order."""
    return gateway.map_concurrent(
        lambda s: classify_endpoint(s, gateway, lexicon), samples
    )


@dataclass
class DistributionReport:
    by_category: CategoryDistribution
    by_subcategory: CategoryDistribution
    entropy_bits: float
    normalized_entropy: float

    def to_record(self) -> dict:
        return {
            "by_category": self.by_category.counts,
            "by_category_share": self.by_category.proportions(),
            "by_subcategory": self.by_subcategory.counts,
            "entropy_bits": self.entropy_bits,
            "normalized_entropy": self.normalized_entropy,
        }


def distribution_report(labels: list[TopicLabel]) -> DistributionReport:
    """Category/subcategory counts plus diversity entropy for a label set."""
    if not labels:
        raise UsageError("distribution_report requires at least one label")
    by_cat: dict[str, int] = {}
    by_sub: dict[str, int] = {}
    for label in labels:
        by_cat[label.category.value] = by_cat.get(label.category.value, 0) + 1
        key = f"{label.category.value}/{label.subcategory.value}"
        by_sub[key] = by_sub.get(key, 0) + 1
    cat_dist = CategoryDistribution.from_counts(by_cat)
    return DistributionReport(
        by_category=cat_dist,
        by_subcategory=CategoryDistribution.from_counts(by_sub),
        entropy_bits=category_entropy(cat_dist),
        normalized_entropy=normalized_entropy(cat_dist),
    )
