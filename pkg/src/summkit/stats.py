"""Reference-free extractiveness statistics: fragments, coverage, density,
compression, novelty, redundancy and length."""

from __future__ import annotations

from dataclasses import dataclass

from .overlap import _tokens
from .text import ngrams


class UndefinedStatistic(ValueError):
    """Raised when a statistic has no value for the input (e.g. empty summary)."""


@dataclass(frozen=True)
class Fragment:
    article_start: int
    summary_start: int
    length: int


@dataclass(frozen=True)
class FragmentSet:
    fragments: tuple[Fragment, ...]
    summary_length: int

    def lengths(self) -> list[int]:
        return [f.length for f in self.fragments]


def extractive_fragments(article, summary) -> FragmentSet:
    """Greedy scan over the summary.  At each position take the longest run
    that also occurs contiguously in the article (earliest article start on
    ties), consume it, and continue after it."""
    art = _tokens(article)
    summ = _tokens(summary)
    positions: dict[str, list[int]] = {}
    for j, t in enumerate(art):
        positions.setdefault(t, []).append(j)
    frags = []
    i = 0
    while i < len(summ):
        best_len, best_j = 0, -1
        for j in positions.get(summ[i], ()):
            k = 0
            while i + k < len(summ) and j + k < len(art) and summ[i + k] == art[j + k]:
                k += 1
            if k > best_len:
                best_len, best_j = k, j
        if best_len:
            frags.append(Fragment(best_j, i, best_len))
            i += best_len
        else:
            i += 1
    return FragmentSet(tuple(frags), len(summ))


def _need_summary(frags: FragmentSet):
    if frags.summary_length == 0:
        raise UndefinedStatistic("statistic undefined for an empty summary")


def coverage(frags: FragmentSet) -> float:
    _need_summary(frags)
    return sum(frags.lengths()) / frags.summary_length


def density(frags: FragmentSet) -> float:
    """Mean, over summary tokens, of the length of the fragment holding the
    token (zero for unmatched tokens): sum of squared lengths / |summary|."""
    _need_summary(frags)
    return sum(k * k for k in frags.lengths()) / frags.summary_length


def compression(article, summary) -> float:
    n_sum = len(_tokens(summary))
    if n_sum == 0:
        raise UndefinedStatistic("compression undefined for an empty summary")
    return len(_tokens(article)) / n_sum


def novelty(article, summary, n: int = 1) -> float:
    summ = ngrams(_tokens(summary), n)
    if summ.total() == 0:
        raise UndefinedStatistic(f"summary has no {n}-grams")
    art = ngrams(_tokens(article), n)
    return sum(g not in art for g in summ.counts) / len(summ)


def redundancy(summary, n: int = 1) -> float:
    summ = ngrams(_tokens(summary), n)
    total = summ.total()
    if total == 0:
        raise UndefinedStatistic(f"summary has no {n}-grams")
    return (total - len(summ)) / total


def summary_length(summary) -> int:
    return len(_tokens(summary))
