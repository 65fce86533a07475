import json

import pytest

from hopqa.errors import BackendFailure, HopError, MalformedAnswer
from hopqa.generate import AnswerRequest, HopSettings, generate_answer, parse_answer, render_answer_prompt, run_hop
from hopqa.model import ContextBundle, DecompositionStep
from hopqa.prompts import load_template
from tests.conftest import fake_backends
from tests.fakes import Scripted, scripted_llm

TEMPLATE = load_template("answer")
GOOD = json.dumps({"long_answer": "HFE lies on chromosome 6.", "short_answer": "Chromosome 6"})


def request(snippets=(), sentences=()):
    ctx = ContextBundle(snippets, sentences, sum(len(s.split()) for s in sentences))
    return AnswerRequest("On which chromosome is HFE?", "HFE chromosome", "HFE", ctx)


def test_numbered_context_snippets_first():
    prompt = render_answer_prompt(request(["snip A", "snip B"], ["Wiki one."]), TEMPLATE)
    assert "Retrieval context: \n1. snip A\n2. snip B\n3. Wiki one." in prompt.user_text
    assert "4." not in prompt.user_text


def test_empty_context_marker():
    assert "Retrieval context: (none)" in render_answer_prompt(request(), TEMPLATE).user_text


def test_rendering_is_deterministic():
    r = request(["s"], ["k."])
    assert render_answer_prompt(r, TEMPLATE) == render_answer_prompt(r, TEMPLATE)


def test_request_needs_sub_question():
    with pytest.raises(ValueError):
        AnswerRequest("  ", "q", "", ContextBundle())


def test_parse_answer():
    assert parse_answer(GOOD).short == "Chromosome 6"
    assert parse_answer("Here you go:\n```json\n" + GOOD + "\n```").long == "HFE lies on chromosome 6."
    for bad in ('{"short_answer": "x"}', '{"long_answer": "", "short_answer": "x"}',
                '{"long_answer": "l", "short_answer": "x", "extra": 1}', "[1]", "```json\n{}\n```\n```json\n{}\n```"):
        with pytest.raises(MalformedAnswer):
            parse_answer(bad)


def test_generate_answer_paths():
    llm, transport = scripted_llm(GOOD)
    prompt = render_answer_prompt(request(), TEMPLATE)
    assert generate_answer(llm, prompt).short == "Chromosome 6"
    assert transport.requests[0].data["temperature"] == 0.0

    llm, _ = scripted_llm("I think it's chromosome 6.", "```json\n" + GOOD + "\n```")
    assert generate_answer(llm, prompt).short == "Chromosome 6"

    llm, _ = scripted_llm("prose", "more prose")
    with pytest.raises(MalformedAnswer):
        generate_answer(llm, prompt)


def test_run_hop_fixture(backends):
    step = DecompositionStep(1, "Which gene is mutated in cystic fibrosis?", "cystic fibrosis mutated gene")
    record = run_hop(backends, step, "cystic fibrosis")
    assert record.index == 1 and record.anchor_in == "cystic fibrosis"
    assert record.raw_answer.short == "CFTR" and record.normalized_short == "CFTR"
    assert record.raw_answer.long
    assert record.context.snippets and record.context.wiki_token_count <= 300


def test_run_hop_normalizes_entity_title(backends):
    step = DecompositionStep(1, "Which metal accumulates in the body in Wilson disease?", "Wilson disease metal accumulation")
    assert run_hop(backends, step, "Wilson disease").normalized_short == "Copper"


def test_run_hop_with_empty_retrieval():
    answer = json.dumps({"long_answer": "From memory.", "short_answer": "Liver"})
    # search, wiki search fallback, answer, title lookup
    backends = fake_backends(Scripted("[]", "[]", answer, "[]"))
    record = run_hop(backends, DecompositionStep(1, "Which organ stores glycogen?", "glycogen organ"), "")
    assert len(record.context) == 0 and record.normalized_short == "Liver"


def test_run_hop_generation_failure_names_hop():
    backends = fake_backends(Scripted("[]", "[]", "prose", "prose"))
    with pytest.raises(HopError) as err:
        run_hop(backends, DecompositionStep(2, "Which organ stores glycogen?", "glycogen organ"), "x")
    assert err.value.index == 2 and "hop 2" in str(err.value)
    assert isinstance(err.value.cause, MalformedAnswer)


def test_run_hop_search_failure_is_wrapped():
    backends = fake_backends(Scripted(BackendFailure("a"), BackendFailure("b")))
    with pytest.raises(HopError) as err:
        run_hop(backends, DecompositionStep(1, "Which organ stores glycogen?", "glycogen organ"), "")
    assert isinstance(err.value.cause, BackendFailure)


def test_prompt_budget_is_enforced():
    backends = fake_backends(Scripted("[]", "[]"))
    with pytest.raises(HopError, match="budget"):
        run_hop(backends, DecompositionStep(1, "Which organ stores glycogen?", "glycogen organ"), "", HopSettings(prompt_char_budget=100))


def test_unverifiable_yes_no_falls_back_to_plain_cleanup():
    answer = json.dumps({"long_answer": "It depends.", "short_answer": "Sometimes."})
    backends = fake_backends(Scripted("[]", "[]", answer, "[]"))
    record = run_hop(backends, DecompositionStep(1, "Is scurvy contagious at all?", "scurvy contagious"), "")
    assert record.normalized_short == "Sometimes"
