"""Reference-based lexical metrics: ROUGE-N, ROUGE-L, BLEU, chrF, METEOR, CIDEr."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from .porter import porter_stem
from .text import (TokenSequence, char_ngrams, lcs_length, lcs_positions,
                   ngrams, split_sentences, tokenize)

log = logging.getLogger(__name__)

POLICIES = ("max", "mean")


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f_score: float

    @classmethod
    def from_counts(cls, overlap, cand_total, ref_total) -> "PRF":
        p = overlap / cand_total if cand_total else 0.0
        r = overlap / ref_total if ref_total else 0.0
        return cls(p, r, harmonic(p, r))


ZERO = PRF(0.0, 0.0, 0.0)


def harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _tokens(text, stem=False) -> tuple[str, ...]:
    if isinstance(text, str):
        toks = tokenize(text).tokens
    elif isinstance(text, TokenSequence):
        toks = text.tokens
    else:
        toks = tuple(text)
    if stem:
        toks = tuple(porter_stem(t) for t in toks)
    return toks


def _check_refs(references):
    if isinstance(references, (str, TokenSequence)):
        raise TypeError("references must be a list of texts")
    if len(references) == 0:
        raise ValueError("at least one reference is required")


def aggregate_multi_ref(scores: Sequence[float], policy: str = "max") -> float:
    if len(scores) == 0:
        raise ValueError("cannot aggregate an empty score list")
    if policy == "max":
        return max(scores)
    if policy == "mean":
        return math.fsum(scores) / len(scores)
    raise ValueError(f"unknown multi-reference policy {policy!r}")


def _aggregate_prf(prfs: Sequence[PRF], policy: str) -> PRF:
    # max keeps the whole triple of the best-F reference so F stays the
    # harmonic mean of the reported P and R
    if policy == "max":
        return max(prfs, key=lambda s: s.f_score)
    if policy == "mean":
        k = len(prfs)
        return PRF(math.fsum(s.precision for s in prfs) / k,
                   math.fsum(s.recall for s in prfs) / k,
                   math.fsum(s.f_score for s in prfs) / k)
    raise ValueError(f"unknown multi-reference policy {policy!r}")


# ---------------------------------------------------------------- ROUGE

def rouge_n(candidate, references, n: int = 1, use_stemmer: bool = False,
            policy: str = "max") -> PRF:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    _check_refs(references)
    cand = ngrams(_tokens(candidate, use_stemmer), n)
    if cand.total() == 0:
        return ZERO
    scores = []
    for ref in references:
        ref_ng = ngrams(_tokens(ref, use_stemmer), n)
        overlap = sum(min(c, ref_ng[g]) for g, c in cand.counts.items())
        scores.append(PRF.from_counts(overlap, cand.total(), ref_ng.total()))
    return _aggregate_prf(scores, policy)


def _sentences(text, stem):
    if isinstance(text, str):
        sents = [s.tokens for s in split_sentences(text)]
    else:
        sents = [_tokens(text)]
    if stem:
        sents = [tuple(porter_stem(t) for t in s) for s in sents]
    return sents


def _rouge_l_summary(cand_sents, ref_sents) -> PRF:
    cand_total = sum(len(s) for s in cand_sents)
    ref_total = sum(len(s) for s in ref_sents)
    cand_left = Counter(t for s in cand_sents for t in s)
    ref_left = Counter(t for s in ref_sents for t in s)
    hits = 0
    for r in ref_sents:
        union = set()
        for c in cand_sents:
            union.update(lcs_positions(r, c))
        for idx in sorted(union):
            tok = r[idx]
            # each token is creditable only as often as it occurs on both sides
            if cand_left[tok] > 0 and ref_left[tok] > 0:
                hits += 1
                cand_left[tok] -= 1
                ref_left[tok] -= 1
    return PRF.from_counts(hits, cand_total, ref_total)


def rouge_l(candidate, references, mode: str = "sentence", use_stemmer: bool = False,
            policy: str = "max") -> PRF:
    """ROUGE-L.  ``sentence`` mode takes one LCS over the whole token
    sequences; ``summary`` mode uses the union-LCS of each reference sentence
    against all candidate sentences."""
    _check_refs(references)
    if mode not in ("sentence", "summary"):
        raise ValueError(f"unknown ROUGE-L mode {mode!r}")
    cand = _tokens(candidate, use_stemmer)
    if not cand:
        return ZERO
    scores = []
    if mode == "sentence":
        for ref in references:
            r = _tokens(ref, use_stemmer)
            scores.append(PRF.from_counts(lcs_length(cand, r), len(cand), len(r)))
    else:
        cand_sents = _sentences(candidate, use_stemmer)
        for ref in references:
            scores.append(_rouge_l_summary(cand_sents, _sentences(ref, use_stemmer)))
    return _aggregate_prf(scores, policy)


# ----------------------------------------------------------------- BLEU

SMOOTHING = ("none", "add-one", "exp")


def _closest_ref_length(cand_len: int, ref_lens: Sequence[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def bleu_statistics(candidates, references, max_n: int = 4):
    """Pooled corpus statistics: (matches per order, totals per order,
    candidate length, effective reference length)."""
    if len(candidates) != len(references):
        raise ValueError(
            f"{len(candidates)} candidates but {len(references)} reference sets")
    if len(candidates) == 0:
        raise ValueError("empty corpus")
    matches = [0] * max_n
    totals = [0] * max_n
    c_len = r_len = 0
    for cand, refs in zip(candidates, references):
        _check_refs(refs)
        c = _tokens(cand)
        rs = [_tokens(r) for r in refs]
        c_len += len(c)
        r_len += _closest_ref_length(len(c), [len(r) for r in rs])
        for n in range(1, max_n + 1):
            cng = ngrams(c, n).counts
            max_ref = Counter()
            for r in rs:
                for g, k in ngrams(r, n).counts.items():
                    if k > max_ref[g]:
                        max_ref[g] = k
            matches[n - 1] += sum(min(k, max_ref[g]) for g, k in cng.items())
            totals[n - 1] += sum(cng.values())
    return matches, totals, c_len, r_len


def bleu_from_statistics(matches, totals, c_len, r_len, smoothing="add-one") -> float:
    if smoothing not in SMOOTHING:
        raise ValueError(f"unknown smoothing {smoothing!r}")
    if c_len == 0 or matches[0] == 0:
        return 0.0
    max_n = len(matches)
    precisions = []
    if smoothing == "add-one" and any(m == 0 for m in matches[1:]):
        precisions.append(matches[0] / totals[0])
        for m, t in zip(matches[1:], totals[1:]):
            precisions.append((m + 1) / (t + 1))
    elif smoothing == "exp":
        k = 1
        for m, t in zip(matches, totals):
            if m == 0:
                k *= 2
                precisions.append(1.0 / (k * t) if t else 0.0)
            else:
                precisions.append(m / t)
    else:
        for m, t in zip(matches, totals):
            precisions.append(m / t if t else 0.0)
    if any(p == 0 for p in precisions):
        return 0.0
    log_mean = math.fsum(math.log(p) for p in precisions) / max_n
    bp = 1.0 if c_len >= r_len else math.exp(1 - r_len / c_len)
    return min(1.0, bp * math.exp(log_mean))


def bleu_corpus(candidates, references, max_n: int = 4, smoothing: str = "add-one") -> float:
    """Corpus BLEU with clipped n-gram counts pooled over every segment."""
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    return bleu_from_statistics(*bleu_statistics(candidates, references, max_n), smoothing)


# ----------------------------------------------------------------- chrF

def chrf(candidate: str, references, max_n: int = 6, beta: float = 2.0,
         policy: str = "max") -> float:
    """Character n-gram F-beta.  Orders absent from both sides are skipped;
    an order present on only one side contributes zero precision and recall."""
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    _check_refs(references)
    if not "".join(candidate.split()):
        return 0.0
    b2 = beta * beta
    cand = [char_ngrams(candidate, n) for n in range(1, max_n + 1)]
    scores = []
    for ref in references:
        ps, rs = [], []
        for n, c in enumerate(cand, 1):
            r = char_ngrams(ref, n)
            if c.total() == 0 and r.total() == 0:
                continue
            hit = sum(min(k, r[g]) for g, k in c.counts.items())
            ps.append(hit / c.total() if c.total() else 0.0)
            rs.append(hit / r.total() if r.total() else 0.0)
        p = math.fsum(ps) / len(ps)
        r = math.fsum(rs) / len(rs)
        scores.append((1 + b2) * p * r / (b2 * p + r) if p + r > 0 else 0.0)
    return aggregate_multi_ref(scores, policy)


# --------------------------------------------------------------- METEOR

def load_synonyms(path) -> dict[str, int]:
    """Synonym table: one whitespace-separated set per line.  Each token maps
    to the first set it appears in."""
    table: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for set_id, line in enumerate(fh):
            for tok in line.split():
                table.setdefault(tok.lower(), set_id)
    return table


def _align_stage(cand, ref, key, aligned_c, aligned_r):
    """Match unaligned tokens whose ``key`` agrees.  Every equivalence class
    is matched up to min(count) regardless of which occurrences pair up, so
    the pairing only affects chunking.  Pairs are taken as whole diagonal
    runs, longest first (earliest candidate, then reference position on
    ties), with runs that extend an earlier alignment counted one longer."""
    ck = [None if i in aligned_c else key(t) for i, t in enumerate(cand)]
    rk = [None if j in aligned_r else key(t) for j, t in enumerate(ref)]
    by_key: dict = {}
    for j, k in enumerate(rk):
        if k is not None:
            by_key.setdefault(k, []).append(j)
    pairs = {(i, j) for i, k in enumerate(ck) if k is not None for j in by_key.get(k, ())}
    while pairs:
        run = {}
        for i, j in sorted(pairs, reverse=True):
            run[i, j] = 1 + run.get((i + 1, j + 1), 0)
        # a run whose predecessor pair is already aligned continues that chunk
        best = max(run, key=lambda p: (run[p] + (aligned_c.get(p[0] - 1) == p[1] - 1),
                                       -p[0], -p[1]))
        i0, j0 = best
        for d in range(run[best]):
            aligned_c[i0 + d] = j0 + d
            aligned_r[j0 + d] = i0 + d
        pairs = {(i, j) for i, j in pairs if i not in aligned_c and j not in aligned_r}


def meteor_alignment(cand, ref, synonyms=None) -> dict[int, int]:
    aligned_c: dict[int, int] = {}
    aligned_r: dict[int, int] = {}
    _align_stage(cand, ref, lambda t: t, aligned_c, aligned_r)
    _align_stage(cand, ref, porter_stem, aligned_c, aligned_r)
    if synonyms:
        _align_stage(cand, ref, synonyms.get, aligned_c, aligned_r)
    return aligned_c


def count_chunks(alignment: Mapping[int, int]) -> int:
    chunks = 0
    prev = None
    for i in sorted(alignment):
        j = alignment[i]
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor(candidate, references, alpha: float = 0.9, beta: float = 3.0,
           gamma: float = 0.5, synonym_table: Mapping[str, int] | None = None,
           policy: str = "max") -> float:
    if not 0 < alpha <= 1 or not 0 < gamma <= 1:
        raise ValueError("alpha and gamma must lie in (0, 1]")
    if beta <= 0:
        raise ValueError("beta must be > 0")
    _check_refs(references)
    cand = _tokens(candidate)
    if not cand:
        return 0.0
    scores = []
    for ref in references:
        r = _tokens(ref)
        align = meteor_alignment(cand, r, synonym_table) if r else {}
        m = len(align)
        if m == 0:
            scores.append(0.0)
            continue
        p = m / len(cand)
        rec = m / len(r)
        fmean = p * rec / (alpha * p + (1 - alpha) * rec)
        penalty = gamma * (count_chunks(align) / m) ** beta
        scores.append(fmean * (1 - penalty))
    return aggregate_multi_ref(scores, policy)


# ---------------------------------------------------------------- CIDEr

@dataclass(frozen=True)
class CiderResult:
    scores: list[float]
    per_order: list[list[float]]  # per example, cosine averaged over refs, per n
    mean: float


def _tfidf(counts: Counter, df: Counter, log_n: float) -> dict:
    return {g: k * (log_n - math.log(max(1.0, df[g]))) for g, k in counts.items()}


def _cos(u: dict, v: dict) -> float:
    nu2 = math.fsum(x * x for x in u.values())
    nv2 = math.fsum(x * x for x in v.values())
    if nu2 == 0 or nv2 == 0:
        return 0.0
    if len(v) < len(u):
        u, v = v, u
    dot = math.fsum(x * v[g] for g, x in u.items() if g in v)
    # one square root keeps the self-similarity at exactly 1
    return min(1.0, dot / math.sqrt(nu2 * nv2))


def _ref_ngrams(refs, max_n):
    _check_refs(refs)
    return [[ngrams(_tokens(r), n).counts for n in range(1, max_n + 1)] for r in refs]


def document_frequencies(reference_corpus, max_n: int = 4) -> tuple[list[Counter], int]:
    """Per-order n-gram document frequencies; an example counts once no
    matter how many of its references contain the n-gram."""
    df = [Counter() for _ in range(max_n)]
    n_docs = 0
    for refs in reference_corpus:
        per_ref = _ref_ngrams(refs, max_n)
        n_docs += 1
        for n in range(max_n):
            seen = set()
            for pr in per_ref:
                seen.update(pr[n])
            df[n].update(seen)
    return df, n_docs


def cider(candidates_by_example, references_by_example, max_n: int = 4,
          reference_corpus=None) -> CiderResult:
    """Plain CIDEr (no length penalty, no count clipping), scaled by 10.

    ``reference_corpus`` (one reference list per distinct example) defines
    the idf statistics; by default it is ``references_by_example``.
    """
    if len(candidates_by_example) != len(references_by_example):
        raise ValueError("candidate and reference lists differ in length")
    if len(references_by_example) == 0:
        raise ValueError("empty corpus")
    df, n_docs = document_frequencies(
        references_by_example if reference_corpus is None else reference_corpus, max_n)
    if n_docs == 1:
        log.warning("CIDEr over a single example: every idf is zero")
    refs_ng = [_ref_ngrams(refs, max_n) for refs in references_by_example]
    log_n = math.log(n_docs)
    scores, per_order = [], []
    for cand, per_ref in zip(candidates_by_example, refs_ng):
        toks = _tokens(cand)
        orders = []
        for n in range(max_n):
            if not toks:
                orders.append(0.0)
                continue
            vc = _tfidf(ngrams(toks, n + 1).counts, df[n], log_n)
            sims = [_cos(vc, _tfidf(pr[n], df[n], log_n)) for pr in per_ref]
            orders.append(math.fsum(sims) / len(sims))
        per_order.append(orders)
        scores.append(10.0 * math.fsum(orders) / max_n)
    return CiderResult(scores, per_order, math.fsum(scores) / len(scores))
