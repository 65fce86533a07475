import dataclasses
import json
import shutil

import pytest

from hopqa.cli import main
from hopqa.config import Config
from hopqa.errors import MalformedInput
from hopqa.model import AnswerPair, Question, QuestionKind, deserialize_result, serialize_result
from hopqa.pipeline import answer_question, make_backends, read_questions, run_batch, scan_output
from tests.conftest import E2E
from tests.fakes import FakeWorld
from tests.fixtures.build_e2e import fixture_config


def golden():
    return [deserialize_result(line) for line in (E2E / "golden_output.jsonl").read_text().splitlines()]


def test_anchor_chain_and_final_provenance():
    results = golden()
    assert len(results) >= 10
    for r in results:
        if not r.answered:
            continue
        assert r.final_short == r.hops[-1].normalized_short
        assert r.final_long == r.hops[-1].raw_answer.long
        for prev, cur in zip(r.hops, r.hops[1:]):
            assert cur.anchor_in == prev.normalized_short
        if r.kind is QuestionKind.DIRECT:
            assert len(r.hops) == 1
        assert 1 <= len(r.hops) <= 4


def test_fixture_mix():
    results = {r.question_id: r for r in golden()}
    kinds = [r.kind for r in results.values()]
    assert QuestionKind.DIRECT in kinds and QuestionKind.SEQUENTIAL in kinds
    assert any(len(r.hops) == 2 for r in results.values())
    assert any(r.final_short in ("Yes", "No") for r in results.values())
    assert results["q12"].failure_reason.startswith("answering: hop 1 failed")


def test_direct_question_single_hop(backends, fixture_classifier):
    r = answer_question(Config(), backends, fixture_classifier, Question("q", "What causes scurvy?"))
    assert r.answered and r.kind is QuestionKind.DIRECT and len(r.hops) == 1
    assert r.final_short == "Vitamin C deficiency"


def test_two_hop_anchor(backends, fixture_classifier):
    text = "Which chromosome carries the gene that is mutated in cystic fibrosis?"
    r = answer_question(Config(), backends, fixture_classifier, Question("q", text))
    assert r.kind is QuestionKind.SEQUENTIAL and len(r.hops) == 2
    assert r.hops[0].anchor_in == "cystic fibrosis"
    assert r.hops[1].anchor_in == r.hops[0].normalized_short == "CFTR"
    assert r.final_short == "Chromosome 7"


def test_simplification_precedes_classification(backends, fixture_classifier):
    text = "Cystic fibrosis affects the lungs and the digestive system. Is cystic fibrosis caused by mutations in the CFTR gene?"
    r = answer_question(Config(), backends, fixture_classifier, Question("q", text))
    assert backends.decompose_llm.calls["simplify"] == 1
    assert r.hops[0].sub_question == "Is cystic fibrosis caused by mutations in the CFTR gene?"
    assert r.final_short == "Yes"


def test_generation_failure_marks_failed(backends, fixture_classifier):
    r = answer_question(Config(), backends, fixture_classifier, Question("q", "What are the symptoms of Fabry disease?"))
    assert not r.answered and "hop 1" in r.failure_reason and r.final_short == ""


def test_quota_reason_is_flagged(fixture_classifier):
    from hopqa.errors import QuotaExceeded
    from tests.conftest import fake_backends

    def limited(request):
        raise QuotaExceeded("HTTP 429")

    r = answer_question(Config(), fake_backends(limited), fixture_classifier, Question("q", "What causes scurvy?"))
    assert r.failure_reason.startswith("quota: decomposition:")


def test_batch_recovers_transient_failure(tmp_path, fixture_classifier):
    config = Config(cache_dir=None, workers=2)
    out = tmp_path / "out.jsonl"
    summary = run_batch(config, E2E / "questions.jsonl", out, make_backends(config, FakeWorld(), sleep=lambda s: None), fixture_classifier)
    assert summary.total == 12 and summary.answered == 11 and summary.failed == 1
    assert summary.recovered == 1
    assert [r.round for r in summary.rounds] == [1, 2]
    assert summary.rounds[1].attempted == 2 and summary.rounds[1].answered == 1


def test_all_succeed_no_reprocessing(tmp_path, fixture_classifier):
    src = tmp_path / "in.jsonl"
    src.write_text("".join(json.dumps({"id": f"a{i}", "question": t}) + "\n" for i, t in enumerate(
        ["What causes scurvy?", "Is Marfan syndrome inherited?", "How many chromosomes do humans have?"])))
    config = Config(cache_dir=None)
    summary = run_batch(config, src, tmp_path / "o.jsonl", make_backends(config, FakeWorld()), fixture_classifier)
    assert (summary.answered, summary.failed, len(summary.rounds), summary.recovered) == (3, 0, 1, 0)


def test_resume_skips_answered(tmp_path, fixture_classifier):
    out = tmp_path / "out.jsonl"
    lines = (E2E / "golden_output.jsonl").read_text().splitlines(keepends=True)
    out.write_text("".join(lines[:4]) + '{"torn record')
    config = fixture_config()
    backends = make_backends(config)
    summary = run_batch(config, E2E / "questions.jsonl", out, backends, fixture_classifier)
    assert summary.skipped == 4
    assert out.read_bytes() == (E2E / "golden_output.jsonl").read_bytes()


def test_scan_output_handles_unicode_line_separators(tmp_path):
    first = golden()[0]
    long = "line\u2028separated\u2029paragraph\x85next"
    hop = dataclasses.replace(first.hops[-1], raw_answer=AnswerPair(first.hops[-1].raw_answer.short, long))
    r = dataclasses.replace(first, hops=(hop,), final_long=long)
    path = tmp_path / "o.jsonl"
    path.write_text(serialize_result(r) + "\n", encoding="utf-8")
    assert "\u2028" in path.read_text(encoding="utf-8")
    assert scan_output(path)[r.question_id] == r


def test_read_questions_errors(tmp_path):
    p = tmp_path / "q.jsonl"
    p.write_text('{"id": "a", "question": "What?"}\n{"id": "a", "question": "Why?"}\n')
    with pytest.raises(MalformedInput, match="duplicate"):
        read_questions(p)
    p.write_text('{"id": "a"}\n')
    with pytest.raises(MalformedInput, match=":1:"):
        read_questions(p)


# -- CLI ---------------------------------------------------------------------


def test_cli_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_no_subcommand(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err


def test_cli_evaluate_identity(tmp_path, capsys):
    gold = tmp_path / "g.jsonl"
    gold.write_text('{"id": "a", "question": "?", "answer": "Liver"}\n')
    pred = tmp_path / "p.jsonl"
    pred.write_text('{"id": "a", "short_answer": "liver", "long_answer": "..."}\n')
    report = tmp_path / "r.json"
    assert main(["evaluate", "--pred", str(pred), "--gold", str(gold), "--report", str(report)]) == 0
    assert "1.000" in capsys.readouterr().out
    assert json.loads(report.read_text())["exact_match"] == 1.0


def test_cli_batch_replay_is_deterministic(tmp_path, capsys):
    args = ["--replay", "--transcript", str(E2E / "transcript.jsonl"), "--classifier", str(E2E / "classifier.json")]
    outs = []
    for name in ("a.jsonl", "b.jsonl"):
        out = tmp_path / name
        assert main(["batch", "--in", str(E2E / "questions.jsonl"), "--out", str(out), *args]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == (E2E / "golden_output.jsonl").read_bytes()
    assert json.loads(capsys.readouterr().out.splitlines()[0])["answered"] == 11


def test_cli_answer(capsys):
    args = ["--replay", "--transcript", str(E2E / "transcript.jsonl"), "--classifier", str(E2E / "classifier.json")]
    assert main(["answer", "--question", "What causes scurvy?", *args]) == 0
    assert json.loads(capsys.readouterr().out)["final_short"] == "Vitamin C deficiency"
    # unrecorded request in replay mode: a failed result and a runtime exit code
    assert main(["answer", "--question", "What is unrecorded here?", *args]) == 2


def test_cli_config_file(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"mode": "replay", "transcript_path": str(E2E / "transcript.jsonl"),
                                  "classifier_path": str(E2E / "classifier.json"), "cache_dir": None}))
    assert main(["answer", "--config", str(config), "--question", "Is Marfan syndrome inherited?"]) == 0
    assert json.loads(capsys.readouterr().out)["final_short"] == "Yes"
    config.write_text('{"not_a_key": 1}')
    assert main(["answer", "--config", str(config), "--question", "x"]) == 2


def test_cli_missing_classifier(capsys):
    assert main(["answer", "--question", "x", "--replay", "--transcript", str(E2E / "transcript.jsonl")]) == 1


def test_cli_train_classifier(tmp_path, capsys):
    from hopqa.classify import ClassifierModel
    from hopqa.classify.synthetic import synthetic_examples

    data = tmp_path / "train.jsonl"
    data.write_text("".join(json.dumps({"text": e.question_text, "label": e.label.value}) + "\n" for e in synthetic_examples(60)))
    model = tmp_path / "m.json"
    assert main(["train-classifier", "--data", str(data), "--model", str(model), "--trees", "5", "--depth", "3"]) == 0
    assert len(ClassifierModel.load(model).meta_weights) == 2


def test_copy_of_transcript_is_not_modified_by_replay(tmp_path, fixture_classifier):
    transcript = tmp_path / "t.jsonl"
    shutil.copy(E2E / "transcript.jsonl", transcript)
    before = transcript.read_bytes()
    config = fixture_config(transcript_path=str(transcript))
    run_batch(config, E2E / "questions.jsonl", tmp_path / "o.jsonl", make_backends(config), fixture_classifier)
    assert transcript.read_bytes() == before
