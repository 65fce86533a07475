"""Per-hop context: search snippets plus TF-IDF-ranked Wikipedia sentences.

TF-IDF variant (each sentence is one document, N sentences)::

    tf(t, s)  = raw count of term t in sentence s
    idf(t)    = ln((1 + N) / (1 + df(t))) + 1
    vector(s) = L2-normalised tf * idf

The query is weighted with the same idf over in-vocabulary terms only, and
the score is the cosine (dot product of unit vectors), clipped to [0, 1].
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence
from urllib.parse import unquote, urlparse

import numpy as np

from hopqa.backends.clients import SearchClient, SearchResult, WikiClient
from hopqa.errors import BackendFailure
from hopqa.model import MAX_SNIPPETS, WIKI_TOKEN_BUDGET, ContextBundle
from hopqa.text import count_tokens, split_sentences, terms

log = logging.getLogger(__name__)

# scores closer than this are ties and fall back to source order
TIE_DECIMALS = 12

__all__ = [
    "RankedSentence",
    "SearchResult",
    "article_sentences",
    "assemble_context",
    "build_search_query",
    "fetch_wikipedia",
    "rank_sentences_tfidf",
    "search",
    "select_top_sentences",
    "split_sentences",
    "wikipedia_title",
]


@dataclass(frozen=True)
class RankedSentence:
    sentence: str
    score: float
    source_order: int


def build_search_query(sub_query: str, anchor: str) -> str:
    sub_query, anchor = sub_query.strip(), anchor.strip()
    return f"{sub_query} {anchor}" if anchor else sub_query


def search(backend: SearchClient, query: str, limit: int = MAX_SNIPPETS) -> list[SearchResult]:
    if not query.strip():
        raise ValueError("search query is empty")
    if not 1 <= limit <= MAX_SNIPPETS:
        raise ValueError(f"limit must be in [1, {MAX_SNIPPETS}]")
    return backend.search(query, limit)[:limit]


def wikipedia_title(link: str) -> Optional[str]:
    """Article title for a ``*.wikipedia.org/wiki/<Title>`` link, else None."""
    parsed = urlparse(link)
    host = parsed.netloc.lower()
    if not (host == "wikipedia.org" or host.endswith(".wikipedia.org")):
        return None
    if not parsed.path.startswith("/wiki/"):
        return None
    title = unquote(parsed.path[len("/wiki/"):]).replace("_", " ").strip()
    if not title or ":" in title:  # namespaces such as Special:, File:, Talk:
        return None
    return title


def fetch_wikipedia(
    client: WikiClient, results: Sequence[SearchResult], query: str, max_articles: int = 3
) -> list[str]:
    """Plain text of Wikipedia articles linked from results, else the top wiki search hit.

    Failures are logged and skipped; this never raises for backend errors.
    """
    titles: list[str] = []
    for r in results:
        title = wikipedia_title(r.link)
        if title and title not in titles:
            titles.append(title)
    if not titles and query.strip():
        try:
            titles = client.search(query, 1)
        except BackendFailure as exc:
            log.warning("wikipedia search for %r failed: %s", query, exc)
            return []
    texts = []
    for title in titles[:max_articles]:
        try:
            text = client.page_text(title)
        except BackendFailure as exc:
            log.warning("wikipedia page %r failed: %s", title, exc)
            continue
        if text.strip():
            texts.append(text)
    return texts


def article_sentences(text: str) -> list[str]:
    """Sentences of an article, without ``== Section ==`` heading lines."""
    return [s for s in split_sentences(text) if not (s.startswith("==") and s.endswith("=="))]


def rank_sentences_tfidf(sentences: Sequence[str], query: str) -> list[RankedSentence]:
    if not sentences:
        return []
    docs = [Counter(terms(s)) for s in sentences]
    vocab = sorted(set().union(*docs))
    if not vocab:
        return [RankedSentence(s, 0.0, i) for i, s in enumerate(sentences)]
    col = {t: j for j, t in enumerate(vocab)}

    tf = np.zeros((len(docs), len(vocab)))
    for i, doc in enumerate(docs):
        for t, c in doc.items():
            tf[i, col[t]] = c
    df = np.count_nonzero(tf, axis=0)
    idf = np.log((1.0 + len(docs)) / (1.0 + df)) + 1.0

    mat = tf * idf
    norms = np.linalg.norm(mat, axis=1)
    mat = np.divide(mat, norms[:, None], out=np.zeros_like(mat), where=norms[:, None] > 0)

    q = np.zeros(len(vocab))
    for t, c in Counter(terms(query)).items():
        if t in col:
            q[col[t]] = c
    q *= idf
    qn = np.linalg.norm(q)
    scores = mat @ (q / qn) if qn > 0 else np.zeros(len(docs))
    scores = np.clip(scores, 0.0, 1.0)

    ranked = [RankedSentence(s, float(scores[i]), i) for i, s in enumerate(sentences)]
    ranked.sort(key=lambda r: (-round(r.score, TIE_DECIMALS), r.source_order))
    return ranked


def select_top_sentences(
    ranked: Sequence[RankedSentence],
    token_budget: int = WIKI_TOKEN_BUDGET,
    max_sentences: Optional[int] = None,
) -> list[str]:
    """Take sentences in rank order until the next one would overflow the budget."""
    if token_budget <= 0:
        raise ValueError("token_budget must be positive")
    chosen, used = [], 0
    for r in ranked:
        if max_sentences is not None and len(chosen) >= max_sentences:
            break
        n = count_tokens(r.sentence)
        if used + n > token_budget:
            break
        chosen.append(r.sentence)
        used += n
    return chosen


def assemble_context(snippets: Sequence[str], wiki_sentences: Sequence[str]) -> ContextBundle:
    snippet_set = set(snippets)
    kept = [s for s in wiki_sentences if s not in snippet_set]
    return ContextBundle(tuple(snippets), tuple(kept), sum(count_tokens(s) for s in kept))


def retrieve_context(
    search_client: SearchClient,
    wiki_client: WikiClient,
    sub_query: str,
    anchor: str,
    *,
    search_limit: int = MAX_SNIPPETS,
    token_budget: int = WIKI_TOKEN_BUDGET,
    max_articles: int = 3,
    max_sentences: Optional[int] = None,
    use_wikipedia: bool = True,
) -> ContextBundle:
    """Full retrieval for one hop. Search failures propagate; Wikipedia failures degrade."""
    query = build_search_query(sub_query, anchor)
    results = search(search_client, query, search_limit)
    snippets = [r.snippet.strip() for r in results if r.snippet.strip()]
    wiki: list[str] = []
    if use_wikipedia:
        sentences = [s for text in fetch_wikipedia(wiki_client, results, query, max_articles) for s in article_sentences(text)]
        # sentences sharing no term with the query carry no signal
        ranked = [r for r in rank_sentences_tfidf(sentences, query) if r.score > 0]
        wiki = select_top_sentences(ranked, token_budget, max_sentences)
    return assemble_context(snippets, wiki)
