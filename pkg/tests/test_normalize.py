import random
import string
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hopqa.backends import Dispatcher, Transcript, WikiClient
from hopqa.errors import BackendFailure, UnverifiableAnswer
from hopqa.normalize import AnswerKind, apply_format_rules, infer_answer_kind, normalize, wikipedia_normalize
from tests.cases import YES_NO_TABLE
from tests.conftest import FIXTURES
from tests.fixtures.build_e2e import TITLE_CASES


class StubWiki:
    """Title-cases the query, like a search whose top hit is the capitalized term."""

    def __init__(self):
        self.calls = Counter()

    def top_title(self, term):
        self.calls["search"] += 1
        return term.title()


class BrokenWiki:
    def top_title(self, term):
        raise BackendFailure("offline")


@pytest.mark.parametrize("raw,expected", YES_NO_TABLE)
def test_yes_no_table(raw, expected):
    if expected is None:
        with pytest.raises(UnverifiableAnswer):
            apply_format_rules(raw, AnswerKind.YES_NO)
    else:
        assert apply_format_rules(raw, AnswerKind.YES_NO) == expected


def test_format_rule_examples():
    assert apply_format_rules("yes.", AnswerKind.YES_NO) == "Yes"
    assert apply_format_rules("the HFE gene", AnswerKind.ENTITY) == "HFE gene"
    assert apply_format_rules('  "Chromosome   6." ', AnswerKind.ENTITY) == "Chromosome 6"
    assert apply_format_rules("the", AnswerKind.ENTITY) == "the"
    assert apply_format_rules("The liver", AnswerKind.UNKNOWN) == "The liver"
    with pytest.raises(UnverifiableAnswer):
        apply_format_rules("maybe", AnswerKind.YES_NO)


def test_infer_answer_kind():
    assert infer_answer_kind("Is Marfan syndrome inherited?") is AnswerKind.YES_NO
    assert infer_answer_kind("Does CF affect the lungs?") is AnswerKind.YES_NO
    assert infer_answer_kind("How many chromosomes do humans have?") is AnswerKind.NUMERIC
    assert infer_answer_kind("How much iron is absorbed?") is AnswerKind.NUMERIC
    assert infer_answer_kind("Which gene is mutated?") is AnswerKind.ENTITY
    assert infer_answer_kind("In which organ?") is AnswerKind.ENTITY
    assert infer_answer_kind("Name the gene.") is AnswerKind.UNKNOWN


def test_yes_no_skips_wiki_lookup():
    wiki = StubWiki()
    assert normalize(wiki, "yes", AnswerKind.YES_NO) == "Yes"
    assert normalize(wiki, "46 chromosomes", AnswerKind.NUMERIC) == "46 chromosomes"
    assert wiki.calls["search"] == 0
    assert normalize(wiki, "the liver", AnswerKind.ENTITY) == "Liver"
    assert wiki.calls["search"] == 1


def test_client_failure_is_not_fatal():
    assert normalize(BrokenWiki(), "copper", AnswerKind.ENTITY) == "copper"


def test_guard_can_be_disabled():
    class Unrelated:
        def top_title(self, term):
            return "Phenylketonuria"

    assert wikipedia_normalize(Unrelated(), "low-phenylalanine diet") == "low-phenylalanine diet"
    assert wikipedia_normalize(Unrelated(), "low-phenylalanine diet", guard=False) == "Phenylketonuria"


@pytest.fixture
def recorded_wiki(tmp_path):
    # copy so replay never touches the committed file
    path = tmp_path / "titles.jsonl"
    path.write_bytes((FIXTURES / "wiki_titles.jsonl").read_bytes())
    return WikiClient(Dispatcher("replay", None, Transcript(path)))


@pytest.mark.parametrize("answer,expected", TITLE_CASES)
def test_recorded_title_fixtures(recorded_wiki, answer, expected):
    assert wikipedia_normalize(recorded_wiki, answer) == expected


def test_random_printable_idempotence():
    rng = random.Random(11)
    wiki = StubWiki()
    for _ in range(1000):
        s = "".join(rng.choices(string.printable, k=rng.randint(0, 30)))
        once = normalize(wiki, s, AnswerKind.UNKNOWN)
        assert normalize(wiki, once, AnswerKind.UNKNOWN) == once


@given(st.text(max_size=40), st.sampled_from([AnswerKind.ENTITY, AnswerKind.UNKNOWN, AnswerKind.NUMERIC]))
def test_idempotence_property(s, kind):
    wiki = StubWiki()
    once = normalize(wiki, s, kind)
    assert normalize(wiki, once, kind) == once


@given(st.text(max_size=40))
def test_yes_no_output_is_canonical(s):
    try:
        out = apply_format_rules(s, AnswerKind.YES_NO)
    except UnverifiableAnswer:
        return
    assert out in ("Yes", "No")
