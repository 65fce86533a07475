from pathlib import Path

import pytest

from hopqa.backends import Backends, Dispatcher, LLMClient, SearchClient, WikiClient
from tests.fakes import FakeWorld

FIXTURES = Path(__file__).parent / "fixtures"
E2E = FIXTURES / "e2e"


def fake_backends(transport=None) -> Backends:
    dispatcher = Dispatcher("live", transport or FakeWorld(), sleep=lambda s: None)
    return Backends(
        decompose_llm=LLMClient(dispatcher, "decomposer"),
        answer_llm=LLMClient(dispatcher, "answerer"),
        search=SearchClient(dispatcher),
        wiki=WikiClient(dispatcher),
    )


@pytest.fixture
def world():
    return FakeWorld()


@pytest.fixture
def backends(world):
    return fake_backends(world)


@pytest.fixture(scope="session")
def fixture_classifier():
    from hopqa.classify import ClassifierModel

    return ClassifierModel.load(E2E / "classifier.json")


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
