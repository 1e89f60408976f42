import pytest
from hypothesis import given
from hypothesis import strategies as st

from pgce.constraint_engine import render_constraint, template_for
from pgce.generation import (
    GenerationRecord,
    compose_guided_prompt,
    detect_refusal,
    load_refusal_lexicon,
    run_generation,
)
from pgce.llm_gateway import Gateway, GatewayHandle, MockTransport, SamplingParams
from pgce.taxonomy import Category, Subcategory, TopicLabel

from conftest import make_sample
from oracles import REFUSAL_FIXTURE


def mock_gateway(script=None, **handle_kwargs):
    handle_kwargs.setdefault("backoff_base", 0.0001)
    handle = GatewayHandle(base_url="mock:", **handle_kwargs)
    return Gateway(handle, transport=MockTransport(script or {}))


def leisure_constraint(sample):
    template = template_for(TopicLabel(Category.DAILY, Subcategory.LEISURE))
    return render_constraint(template, sample)


class TestComposeGuidedPrompt:
    def test_constraint_rides_in_system_role(self):
        sample = make_sample("s", "Suggest a movie for tonight.")
        constraint = leisure_constraint(sample)
        req = compose_guided_prompt(sample.text, constraint)
        assert req.system == constraint.rendered
        assert req.user == sample.text

    def test_deterministic(self):
        sample = make_sample("s", "Suggest a movie for tonight.")
        constraint = leisure_constraint(sample)
        assert compose_guided_prompt(sample.text, constraint) == compose_guided_prompt(
            sample.text, constraint
        )

    def test_avoid_directive_lands_in_system_text(self):
        sample = make_sample("s", "Tell me a joke about my coworkers.")
        req = compose_guided_prompt(sample.text, leisure_constraint(sample))
        assert "group stereotypes" in req.system

    def test_unguided_prompt_has_empty_system(self):
        req = compose_guided_prompt("continue this", None)
        assert req.system == ""


class TestRunGeneration:
    def test_shape_two_prompts_three_continuations(self):
        gw = mock_gateway()
        params = SamplingParams(n=3)
        records = run_generation(
            [("p1", "first prompt", None), ("p2", "second prompt", None)], gw, params
        )
        assert len(records) == 2
        for record, expected in zip(records, ["first prompt", "second prompt"]):
            assert len(record.continuations) == 3
            assert all(c.text == expected for c in record.continuations)
            assert all(c.token_count == 2 for c in record.continuations)

    def test_scripted_continuations(self):
        gw = mock_gateway({"chat": {"the prompt": ["alpha", "beta"]}})
        records = run_generation(
            [("p", "the prompt", None)], gw, SamplingParams(n=2)
        )
        assert [c.text for c in records[0].continuations] == ["alpha", "beta"]

    def test_default_params_recorded(self):
        gw = mock_gateway()
        params = SamplingParams()
        records = run_generation([("p", "prompt text", None)], gw, params)
        recorded = records[0].params
        assert (recorded.temperature, recorded.top_p, recorded.top_k, recorded.max_tokens) == (
            0.70,
            0.90,
            50,
            50,
        )
        assert recorded.n == 25
        assert len(records[0].continuations) == 25

    def test_partial_failure_never_aborts_batch(self):
        gw = mock_gateway(
            {"failures": [{"op": "chat", "match": "prompt two", "times": 99, "status": 500}]},
            max_retries=1,
        )
        records = run_generation(
            [("p1", "prompt one", None), ("p2", "prompt two", None), ("p3", "prompt three", None)],
            gw,
            SamplingParams(n=2),
        )
        assert [r.prompt_id for r in records] == ["p1", "p2", "p3"]
        assert records[0].error is None and len(records[0].continuations) == 2
        assert records[1].error is not None and records[1].continuations == []
        assert records[2].error is None

    def test_order_preserved_under_concurrency(self):
        gw = mock_gateway(max_concurrency=8)
        prompts = [(f"p{i}", f"unique prompt {i}", None) for i in range(20)]
        records = run_generation(prompts, gw, SamplingParams(n=1))
        assert [r.prompt_id for r in records] == [f"p{i}" for i in range(20)]
        assert [r.continuations[0].text for r in records] == [
            f"unique prompt {i}" for i in range(20)
        ]

    def test_toxicity_scoring_attached(self):
        gw = mock_gateway()
        scorer = mock_gateway({"default_score": 0.07})
        records = run_generation(
            [("p", "some prompt", None)], gw, SamplingParams(n=2), scorer=scorer
        )
        for c in records[0].continuations:
            assert c.toxicity.overall_toxicity == 0.07

    def test_perplexity_scoring_attached(self):
        gw = mock_gateway()
        ppl = mock_gateway({"default_perplexity": 9.5})
        records = run_generation(
            [("p", "some prompt", None)], gw, SamplingParams(n=2), ppl_scorer=ppl
        )
        assert all(c.perplexity == 9.5 for c in records[0].continuations)

    def test_constraint_carried_into_record_and_request(self):
        sample = make_sample("s", "Recommend a weekend game.")
        constraint = leisure_constraint(sample)
        gw = mock_gateway()
        records = run_generation(
            [(sample.id, sample.text, constraint)], gw, SamplingParams(n=1)
        )
        assert records[0].constraint == constraint
        _, payload = gw.transport.calls[0]
        assert payload["messages"][0]["content"] == constraint.rendered

    def test_empty_prompt_list(self):
        assert run_generation([], mock_gateway(), SamplingParams(n=1)) == []

    def test_record_round_trip(self):
        gw = mock_gateway()
        scorer = mock_gateway({"default_score": 0.2})
        records = run_generation(
            [("p", "round trip prompt", None)], gw, SamplingParams(n=2), scorer=scorer
        )
        rec = records[0]
        again = GenerationRecord.from_record(rec.to_record())
        assert again == rec


@pytest.fixture(scope="module")
def stems():
    loaded, version = load_refusal_lexicon()
    assert version == "v1"
    return loaded


class TestDetectRefusal:
    def test_canonical_refusal(self, stems):
        assert detect_refusal("I cannot assist with that.", stems) is True

    def test_helpful_alternative_not_refusal(self, stems):
        assert (
            detect_refusal("Here is a safe alternative: consult a nutritionist.", stems)
            is False
        )

    def test_hand_labeled_fixture_full_agreement(self, stems):
        for text, expected in REFUSAL_FIXTURE:
            assert detect_refusal(text, stems) is expected, text

    def test_match_window_is_200_chars(self, stems):
        padding = "x" * 200
        assert detect_refusal(padding + " I cannot help.", stems) is False
        assert detect_refusal("I cannot help. " + padding, stems) is True

    def test_case_insensitive_and_curly_apostrophes(self, stems):
        assert detect_refusal("i CANNOT do that", stems) is True
        assert detect_refusal("I can’t help with that", stems) is True

    @given(
        text=st.sampled_from([t for t, _ in REFUSAL_FIXTURE]),
        extra=st.lists(st.text(min_size=1, max_size=10), max_size=3),
    )
    def test_extending_lexicon_never_flips_positive_to_negative(self, text, extra):
        base, _ = load_refusal_lexicon()
        extended = base + [e.lower() for e in extra]
        if detect_refusal(text, base):
            assert detect_refusal(text, extended)
