"""Constraint-guided generation: prompt composition, fan-out, refusal flags.

The constraint's rendered text rides in the system role so the user prompt
stays untouched. Refusals are detected by a plain-substring stem lexicon
matched case-insensitively within the first 200 characters.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .constraint_engine import ConstraintInstance
from .datafiles import read_data_text
from .errors import EndpointError
from .llm_gateway import ChatRequest, Gateway, SamplingParams, ScorerResult

log = logging.getLogger(__name__)

DEFAULT_REFUSAL_FILE = "refusal_v1.txt"
REFUSAL_WINDOW = 200


@dataclass
class Continuation:
    text: str
    toxicity: ScorerResult | None = None
    refused: bool = False
    token_count: int = 0
    perplexity: float | None = None

    def to_record(self) -> dict:
        rec: dict = {
            "text": self.text,
            "refused": self.refused,
            "token_count": self.token_count,
        }
        if self.toxicity is not None:
            rec["toxicity"] = {
                "overall": self.toxicity.overall_toxicity,
                "categories": self.toxicity.categories,
            }
        if self.perplexity is not None:
            rec["perplexity"] = self.perplexity
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "Continuation":
        tox = rec.get("toxicity")
        toxicity = None
        if tox is not None:
            toxicity = ScorerResult(
                overall_toxicity=tox["overall"], categories=dict(tox["categories"])
            )
        return cls(
            text=rec["text"],
            toxicity=toxicity,
            refused=bool(rec.get("refused", False)),
            token_count=int(rec.get("token_count", 0)),
            perplexity=rec.get("perplexity"),
        )


@dataclass
class GenerationRecord:
    prompt_id: str
    prompt: str
    constraint: ConstraintInstance | None
    params: SamplingParams
    continuations: list[Continuation] = field(default_factory=list)
    error: str | None = None

    def to_record(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "prompt": self.prompt,
            "constraint": self.constraint.to_record() if self.constraint else None,
            "params": self.params.to_record(),
            "continuations": [c.to_record() for c in self.continuations],
            "error": self.error,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "GenerationRecord":
        constraint = rec.get("constraint")
        params = rec.get("params", {})
        return cls(
            prompt_id=rec["prompt_id"],
            prompt=rec["prompt"],
            constraint=ConstraintInstance.from_record(constraint) if constraint else None,
            params=SamplingParams(
                temperature=params.get("temperature", 0.70),
                top_p=params.get("top_p", 0.90),
                top_k=params.get("top_k"),
                max_tokens=params.get("max_tokens", 50),
                n=params.get("n", 25),
                seed=params.get("seed"),
            ),
            continuations=[Continuation.from_record(c) for c in rec.get("continuations", [])],
            error=rec.get("error"),
        )


def load_refusal_lexicon(path: str | Path | None = None) -> tuple[list[str], str]:
    """Read refusal stems (one per line); returns (stems, version)."""
    text = (
        Path(path).read_text(encoding="utf-8")
        if path is not None
        else read_data_text(DEFAULT_REFUSAL_FILE)
    )
    version = "unversioned"
    stems = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            if "refusal-lexicon" in line:
                version = line.split()[-1]
            continue
        if line:
            stems.append(line.lower())
    return stems, version


def detect_refusal(text: str, refusal_lexicon: list[str]) -> bool:
    """True iff any stem occurs in the first REFUSAL_WINDOW characters."""
    window = text[:REFUSAL_WINDOW].lower().replace("’", "'")
    return any(stem in window for stem in refusal_lexicon)


def compose_guided_prompt(
    prompt: str,
    constraint: ConstraintInstance | None,
    params: SamplingParams | None = None,
) -> ChatRequest:
    """System message = rendered constraint (empty when unguided); user = prompt."""
    return ChatRequest(
        system=constraint.rendered if constraint is not None else "",
        user=prompt,
        params=params if params is not None else SamplingParams(),
    )


def run_generation(
    prompts: list[tuple[str, str, ConstraintInstance | None]],
    gateway: Gateway,
    params: SamplingParams,
    scorer: Gateway | None = None,
    ppl_scorer: Gateway | None = None,
    refusal_lexicon: list[str] | None = None,
) -> list[GenerationRecord]:
    """Generate params.n continuations per (id, prompt, constraint?) entry.

    Per-prompt endpoint failures become records with an error marker and
    zero continuations; the batch never aborts. Output order equals input
    order regardless of fan-out.
    """
    if not prompts:
        return []
    if refusal_lexicon is None:
        refusal_lexicon, _ = load_refusal_lexicon()

    def scored(client: Gateway | None, fn_name: str, texts: list[str]) -> list:
        # Continuation scoring fans out concurrently under the scorer's own
        # concurrency limit; failures degrade to None with a warning.
        if client is None:
            return [None] * len(texts)
        fn = getattr(client, fn_name)

        def one_score(text: str):
            if not text:
                return None
            try:
                return fn(text)
            except EndpointError as e:
                log.warning("%s failed: %s", fn_name, e)
                return None

        return client.map_concurrent(one_score, texts)

    def one(entry: tuple[str, str, ConstraintInstance | None]) -> GenerationRecord:
        prompt_id, prompt, constraint = entry
        record = GenerationRecord(
            prompt_id=prompt_id, prompt=prompt, constraint=constraint, params=params
        )
        try:
            texts = gateway.chat_complete(compose_guided_prompt(prompt, constraint, params))
        except EndpointError as e:
            log.warning("generation failed for prompt %s: %s", prompt_id, e)
            record.error = str(e)
            return record
        toxicities = scored(scorer, "score_toxicity", texts)
        perplexities = scored(ppl_scorer, "score_perplexity", texts)
        for text, toxicity, perplexity in zip(texts, toxicities, perplexities):
            record.continuations.append(
                Continuation(
                    text=text,
                    toxicity=toxicity,
                    refused=detect_refusal(text, refusal_lexicon),
                    token_count=len(text.split()),
                    perplexity=perplexity,
                )
            )
        return record

    return gateway.map_concurrent(one, prompts)
