"""Constraint templates, rendering, endpoint synthesis, and judge screening.

Each (category, subcategory) has one registry template of tone/focus/avoid
directives. Rule-violating templates come in three graded tiers keyed by
classifier confidence: redirect [0, 0.33), neutralize [0.33, 0.66),
decline-with-alternative [0.66, 1]. Screening retains a pair iff the mean
over all judge dimensions is strictly above the threshold.
"""

from __future__ import annotations

import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .corpus import TextSample, word_tokens
from .datafiles import read_data_text
from .errors import EndpointError, PgceError, UsageError
from .llm_gateway import ChatRequest, Gateway, SamplingParams
from .taxonomy import SUBCATEGORIES, Category, Subcategory, TopicLabel

log = logging.getLogger(__name__)

DEFAULT_TEMPLATES_FILE = "templates_v1.json"
DEFAULT_SCREENING_THRESHOLD = 0.75
JUDGE_DIMENSIONS = ("relevance", "professionalism", "language_quality", "safety_compliance")

GRADED_TIERS = ("redirect", "neutralize", "decline")
_TIER_BANDS = (0.33, 0.66)  # [0,.33) redirect, [.33,.66) neutralize, [.66,1] decline


class TemplateError(PgceError):
    pass


class ConstraintEndpointError(EndpointError):
    def __init__(self, sample_id: str, cause: str):
        self.sample_id = sample_id
        super().__init__(f"constraint generation failed for {sample_id!r}: {cause}")


class ScreeningError(EndpointError):
    """A judge was unreachable; the pair stays unscored, never retained."""

    def __init__(self, pair_id: str, cause: str):
        self.pair_id = pair_id
        super().__init__(f"screening failed for pair {pair_id!r}: {cause}")


class WeightClass(Enum):
    LIGHTWEIGHT = "lightweight"
    DETAILED = "detailed"
    GRADED = "graded"
    PROFESSIONAL = "professional"


WEIGHT_CLASS_FOR_CATEGORY = {
    Category.DAILY: WeightClass.LIGHTWEIGHT,
    Category.SENSITIVE: WeightClass.DETAILED,
    Category.RULE_VIOLATING: WeightClass.GRADED,
    Category.PROFESSIONAL: WeightClass.PROFESSIONAL,
}


class Provenance(Enum):
    TEMPLATE = "template"
    ENDPOINT = "endpoint"


@dataclass(frozen=True)
class ConstraintTemplate:
    category: Category
    subcategory: Subcategory
    tone: tuple[str, ...]
    focus: tuple[str, ...]
    avoid: tuple[str, ...]
    weight_class: WeightClass
    template_id: str

    def __post_init__(self):
        if not (self.tone and self.focus and self.avoid):
            raise TemplateError(f"template {self.template_id} has an empty directive list")
        if WEIGHT_CLASS_FOR_CATEGORY[self.category] is not self.weight_class:
            raise TemplateError(
                f"template {self.template_id}: weight class {self.weight_class.value} "
                f"inconsistent with category {self.category.value}"
            )


@dataclass
class ConstraintInstance:
    topic: str
    key_points: list[str]
    avoid: list[str]
    tone: str
    rendered: str
    provenance: Provenance
    template_id: str

    def to_record(self) -> dict:
        return {
            "topic": self.topic,
            "key_points": self.key_points,
            "avoid": self.avoid,
            "tone": self.tone,
            "rendered": self.rendered,
            "provenance": self.provenance.value,
            "template_id": self.template_id,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ConstraintInstance":
        return cls(
            topic=rec["topic"],
            key_points=list(rec["key_points"]),
            avoid=list(rec["avoid"]),
            tone=rec["tone"],
            rendered=rec["rendered"],
            provenance=Provenance(rec.get("provenance", "template")),
            template_id=rec.get("template_id", ""),
        )


@dataclass
class JudgeScore:
    judge_id: str
    relevance: float
    professionalism: float
    language_quality: float
    safety_compliance: float

    def dimensions(self) -> tuple[float, float, float, float]:
        return (
            self.relevance,
            self.professionalism,
            self.language_quality,
            self.safety_compliance,
        )

    def to_record(self) -> dict:
        return {
            "judge_id": self.judge_id,
            "relevance": self.relevance,
            "professionalism": self.professionalism,
            "language_quality": self.language_quality,
            "safety_compliance": self.safety_compliance,
        }


@dataclass
class ScreeningDecision:
    pair_id: str
    scores: list[JudgeScore]
    mean_score: float
    retained: bool
    threshold: float

    def to_record(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "scores": [s.to_record() for s in self.scores],
            "mean_score": self.mean_score,
            "retained": self.retained,
            "threshold": self.threshold,
        }


class TemplateRegistry:
    """Immutable template registry; totality over the label space is
    asserted at construction."""

    def __init__(self, version: str, flat: dict, tiered: dict):
        self.version = version
        self._flat = flat  # (category, subcategory) -> ConstraintTemplate
        self._tiered = tiered  # (category, subcategory) -> {tier: ConstraintTemplate}
        for category, subs in SUBCATEGORIES.items():
            for sub in subs:
                key = (category, sub)
                if category is Category.RULE_VIOLATING:
                    tiers = self._tiered.get(key, {})
                    if set(tiers) != set(GRADED_TIERS):
                        raise TemplateError(
                            f"registry {version}: {category.value}/{sub.value} "
                            f"needs tiers {GRADED_TIERS}"
                        )
                elif key not in self._flat:
                    raise TemplateError(
                        f"registry {version}: no template for "
                        f"{category.value}/{sub.value}"
                    )

    def template_for(self, label: TopicLabel) -> ConstraintTemplate:
        key = (label.category, label.subcategory)
        if label.category is Category.RULE_VIOLATING:
            if label.confidence < _TIER_BANDS[0]:
                tier = "redirect"
            elif label.confidence < _TIER_BANDS[1]:
                tier = "neutralize"
            else:
                tier = "decline"
            return self._tiered[key][tier]
        return self._flat[key]


def _template_from_entry(
    category: Category,
    subcategory: Subcategory,
    entry: dict,
    version: str,
    tier: str | None = None,
    weight_class: WeightClass | None = None,
) -> ConstraintTemplate:
    suffix = f".{tier}" if tier else ""
    return ConstraintTemplate(
        category=category,
        subcategory=subcategory,
        tone=tuple(entry["tone"]),
        focus=tuple(entry["focus"]),
        avoid=tuple(entry["avoid"]),
        weight_class=weight_class or WeightClass(entry["weight_class"]),
        template_id=f"{category.value}.{subcategory.value}{suffix}@{version}",
    )


def parse_templates(text: str) -> TemplateRegistry:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise TemplateError(f"template file is not valid JSON: {e}") from e
    version = data.get("version", "unversioned")
    flat: dict = {}
    tiered: dict = {}
    for entry in data.get("templates", []):
        category = Category(entry["category"])
        subcategory = Subcategory(entry["subcategory"])
        if "tiers" in entry:
            weight_class = WeightClass(entry["weight_class"])
            tiered[(category, subcategory)] = {
                tier: _template_from_entry(
                    category, subcategory, tier_entry, version, tier, weight_class
                )
                for tier, tier_entry in entry["tiers"].items()
            }
        else:
            flat[(category, subcategory)] = _template_from_entry(
                category, subcategory, entry, version
            )
    return TemplateRegistry(version, flat, tiered)


def load_templates(path: str | Path) -> TemplateRegistry:
    return parse_templates(Path(path).read_text(encoding="utf-8"))


def default_registry() -> TemplateRegistry:
    return parse_templates(read_data_text(DEFAULT_TEMPLATES_FILE))


def template_for(label: TopicLabel, registry: TemplateRegistry | None = None) -> ConstraintTemplate:
    registry = registry if registry is not None else default_registry()
    return registry.template_for(label)


_CLAUSE_SPLIT_RE = re.compile(r"[.!?,;:\n]")


def extract_topic(text: str, max_words: int = 12) -> str:
    """First clause of the text, capped at max_words words."""
    for clause in _CLAUSE_SPLIT_RE.split(text):
        words = clause.split()
        if words:
            return " ".join(words[:max_words])
    return ""


def render_text(topic: str, tone: str, key_points: list[str], avoid: list[str]) -> str:
    return (
        f"Topic: {topic} | Tone: {tone} | "
        f"Key points: {'; '.join(key_points)} | Avoid: {'; '.join(avoid)}"
    )


def render_constraint(template: ConstraintTemplate, sample: TextSample) -> ConstraintInstance:
    """Deterministic fill-in of a template for one sample."""
    if sample.word_count == 0 or not word_tokens(sample.text):
        raise UsageError(f"sample {sample.id!r} is degenerate (0 words)")
    topic = extract_topic(sample.text)
    tone = ", ".join(template.tone)
    key_points = list(template.focus)
    avoid = list(template.avoid)
    return ConstraintInstance(
        topic=topic,
        key_points=key_points,
        avoid=avoid,
        tone=tone,
        rendered=render_text(topic, tone, key_points, avoid),
        provenance=Provenance.TEMPLATE,
        template_id=template.template_id,
    )


CONSTRAINT_SYSTEM = (
    "You write generation constraints. Given directives and a user text, reply "
    "with a single JSON object with string field \"topic\", string-array fields "
    "\"key_points\" and \"avoid\", and string field \"tone\". Reply with JSON only."
)

_CONSTRAINT_PARAMS = SamplingParams(
    temperature=0.0, top_p=1.0, top_k=None, max_tokens=300, n=1
)

_JSON_BLOCK_RE = re.compile(r"\{.*\}", re.DOTALL)


def _parse_constraint_reply(reply: str, template_id: str) -> ConstraintInstance | None:
    m = _JSON_BLOCK_RE.search(reply)
    if not m:
        return None
    try:
        obj = json.loads(m.group(0))
    except json.JSONDecodeError:
        return None
    topic = obj.get("topic")
    key_points = obj.get("key_points")
    avoid = obj.get("avoid")
    tone = obj.get("tone")
    if isinstance(tone, list) and all(isinstance(t, str) for t in tone):
        tone = ", ".join(tone)
    if (
        not isinstance(topic, str)
        or not topic.strip()
        or not isinstance(tone, str)
        or not isinstance(key_points, list)
        or not key_points
        or not all(isinstance(k, str) for k in key_points)
        or not isinstance(avoid, list)
        or not avoid
        or not all(isinstance(a, str) for a in avoid)
    ):
        return None
    return ConstraintInstance(
        topic=topic.strip(),
        key_points=key_points,
        avoid=avoid,
        tone=tone,
        rendered=render_text(topic.strip(), tone, key_points, avoid),
        provenance=Provenance.ENDPOINT,
        template_id=template_id,
    )


def generate_constraint_endpoint(
    sample: TextSample,
    label: TopicLabel,
    gateway: Gateway,
    registry: TemplateRegistry | None = None,
) -> ConstraintInstance:
    """Ask the constraint endpoint to enrich the template directives.

    One retry on an unparseable reply, then the static template fills in;
    transport failures surface as ConstraintEndpointError.
    """
    registry = registry if registry is not None else default_registry()
    template = registry.template_for(label)
    user = (
        f"Directives for a {label.category.value}/{label.subcategory.value} text.\n"
        f"Tone: {', '.join(template.tone)}\n"
        f"Focus: {'; '.join(template.focus)}\n"
        f"Avoid: {'; '.join(template.avoid)}\n\n"
        f"Text: {sample.text}"
    )
    req = ChatRequest(system=CONSTRAINT_SYSTEM, user=user, params=_CONSTRAINT_PARAMS)
    try:
        for _ in range(2):
            reply = gateway.chat_complete(req)[0]
            instance = _parse_constraint_reply(reply, template.template_id)
            if instance is not None:
                return instance
    except EndpointError as e:
        raise ConstraintEndpointError(sample.id, str(e)) from e
    log.warning(
        "unparseable constraint reply for sample %s; using template", sample.id
    )
    return render_constraint(template, sample)


JUDGE_SYSTEM = (
    "You are an independent data-quality judge. Score the constraint-text pair "
    "on four dimensions, each in [0, 1]: relevance, professionalism, "
    "language_quality, safety_compliance. Reply with a single JSON object with "
    "exactly those four numeric fields."
)

_JUDGE_PARAMS = SamplingParams(temperature=0.0, top_p=1.0, top_k=None, max_tokens=100, n=1)


def _parse_judge_reply(reply: str, judge_id: str) -> JudgeScore | None:
    m = _JSON_BLOCK_RE.search(reply)
    if not m:
        return None
    try:
        obj = json.loads(m.group(0))
    except json.JSONDecodeError:
        return None
    values = []
    for dim in JUDGE_DIMENSIONS:
        v = obj.get(dim)
        if not isinstance(v, (int, float)) or not 0 <= v <= 1:
            return None
        values.append(float(v))
    return JudgeScore(judge_id, *values)


def _query_judge(
    judge: Gateway, constraint: ConstraintInstance, sample: TextSample
) -> JudgeScore | None:
    user = f"Constraint: {constraint.rendered}\n\nText: {sample.text}"
    req = ChatRequest(system=JUDGE_SYSTEM, user=user, params=_JUDGE_PARAMS)
    for _ in range(2):
        reply = judge.chat_complete(req)[0]
        score = _parse_judge_reply(reply, judge.handle.model_name)
        if score is not None:
            return score
    return None


def screening_decision(
    pair_id: str, scores: list[JudgeScore], threshold: float
) -> ScreeningDecision:
    """Gate on the arithmetic mean over all dimensions of all judges.

    math.fsum makes the mean exact up to a single rounding, so judge order
    permutations can never change it. Retention is strict: mean > threshold.
    """
    if not scores:
        raise UsageError("screening needs at least one judge score")
    values = [v for s in scores for v in s.dimensions()]
    mean_score = math.fsum(values) / len(values)
    return ScreeningDecision(
        pair_id=pair_id,
        scores=scores,
        mean_score=mean_score,
        retained=mean_score > threshold,
        threshold=threshold,
    )


def screen_pair(
    pair: tuple[ConstraintInstance, TextSample],
    judges: list[Gateway],
    threshold: float = DEFAULT_SCREENING_THRESHOLD,
) -> ScreeningDecision:
    """Score a pair with every judge and gate on the strict mean threshold.

    Judges are queried concurrently; any unreachable or persistently
    unparseable judge aborts with ScreeningError so the pair is never
    silently retained.
    """
    constraint, sample = pair
    if not judges:
        raise UsageError("screen_pair requires at least one judge")
    if not 0.0 <= threshold <= 1.0:
        raise UsageError("screening threshold must be in [0, 1]")
    pair_id = sample.id
    try:
        with ThreadPoolExecutor(max_workers=len(judges)) as pool:
            scores = list(
                pool.map(lambda j: _query_judge(j, constraint, sample), judges)
            )
    except EndpointError as e:
        raise ScreeningError(pair_id, str(e)) from e
    for judge, score in zip(judges, scores):
        if score is None:
            raise ScreeningError(
                pair_id, f"judge {judge.handle.model_name!r} reply unparseable"
            )
    return screening_decision(pair_id, scores, threshold)
