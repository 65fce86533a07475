"""Template-generated labelled questions for training and tests.

Sequential templates chain two relations through a relative clause; direct
templates ask one relation. The split is separable in the lexicon and
structural features by construction.
"""

from __future__ import annotations

import random

from hopqa.classify.stacking import TrainingExample
from hopqa.model import QuestionKind

DISEASES = [
    "hereditary hemochromatosis", "cystic fibrosis", "Marfan syndrome", "sickle cell anemia",
    "Huntington disease", "phenylketonuria", "Tay-Sachs disease", "Wilson disease",
    "Gaucher disease", "Fabry disease", "scurvy", "rickets", "tuberculosis", "malaria",
    "Lyme disease", "Fragile X syndrome", "Duchenne muscular dystrophy", "hemophilia A",
    "Pompe disease", "Niemann-Pick disease", "Alport syndrome", "Ehlers-Danlos syndrome",
    "Rett syndrome", "Angelman syndrome", "Prader-Willi syndrome", "beta thalassemia",
    "familial hypercholesterolemia", "Bloom syndrome", "Menkes disease", "Krabbe disease",
]
POPULATIONS = ["people of Celtic descent", "Ashkenazi Jews", "children", "adults", "East Asian populations"]

SEQUENTIAL_TEMPLATES = [
    "Which chromosome contains the gene most commonly associated with {d} in {p}?",
    "What is the function of the protein encoded by the gene that causes {d}?",
    "Which organ produces the enzyme that is deficient in {d}?",
    "Who discovered the pathogen that is responsible for {d}?",
    "What drug class includes the first-line medication used to treat {d} in {p}?",
    "Which vitamin is needed by the enzyme whose deficiency leads to {d}?",
    "Where in the cell is the protein located that is mutated in {d}?",
    "What is the inheritance pattern of the gene most often related to {d} in {p}?",
    "Which tissue is most affected by the metabolite that accumulates in {d}?",
    "When was the gene associated with {d} first mapped to its chromosome?",
]
DIRECT_TEMPLATES = [
    "What is {d}?",
    "Is {d} inherited?",
    "What are the symptoms of {d}?",
    "How is {d} treated?",
    "Can {d} be cured?",
    "Is {d} contagious?",
    "How common is {d}?",
    "Does {d} affect the liver?",
    "What causes {d}?",
    "Is {d} more common in {p}?",
]


def synthetic_examples(n: int = 453, seed: int = 0, sequential_fraction: float = 0.4) -> list[TrainingExample]:
    rng = random.Random(seed)
    n_seq = round(n * sequential_fraction)
    labels = [QuestionKind.SEQUENTIAL] * n_seq + [QuestionKind.DIRECT] * (n - n_seq)
    rng.shuffle(labels)
    out = []
    for label in labels:
        templates = SEQUENTIAL_TEMPLATES if label is QuestionKind.SEQUENTIAL else DIRECT_TEMPLATES
        text = rng.choice(templates).format(d=rng.choice(DISEASES), p=rng.choice(POPULATIONS))
        out.append(TrainingExample(text, label))
    return out
