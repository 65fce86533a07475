"""Multi-hop retrieval-augmented question answering.

Questions are routed as direct or sequential by a stacking classifier,
sequential ones are decomposed into anchored sub-question chains, and every
hop answers from search snippets plus TF-IDF-ranked Wikipedia sentences.
"""

from hopqa.model import (
    AnswerPair,
    ContextBundle,
    DecompositionPlan,
    DecompositionStep,
    HopRecord,
    Question,
    QuestionKind,
    QuestionResult,
    ResultStatus,
)

__version__ = "0.1.0"

__all__ = [
    "AnswerPair",
    "ContextBundle",
    "DecompositionPlan",
    "DecompositionStep",
    "HopRecord",
    "Question",
    "QuestionKind",
    "QuestionResult",
    "ResultStatus",
]
