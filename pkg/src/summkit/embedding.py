"""Embedding-based metrics over a word-vector table: ROUGE-WE and the
mover's-similarity family (WMS, SMS, S+WMS)."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .overlap import PRF, ZERO, _aggregate_prf, _check_refs, _tokens
from .text import split_sentences
from .transport import transport

VARIANTS = ("WMS", "SMS", "S+WMS")
GROUND_METRICS = ("euclidean", "cosine-distance")


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EmbeddingTable:
    """Immutable token -> vector map.  Unknown tokens get the zero vector."""

    dim: int
    index: dict = field(repr=False)
    vectors: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        if self.vectors.shape != (len(self.index), self.dim):
            raise ValueError("vector matrix does not match the vocabulary")
        self.vectors.setflags(write=False)

    @classmethod
    def from_dict(cls, mapping) -> "EmbeddingTable":
        tokens = list(mapping)
        if not tokens:
            raise ValueError("empty embedding table")
        vecs = np.array([np.asarray(mapping[t], float) for t in tokens])
        return cls(vecs.shape[1], {t: i for i, t in enumerate(tokens)}, vecs)

    def __len__(self):
        return len(self.index)

    def __contains__(self, token):
        return token in self.index

    def lookup(self, token: str) -> np.ndarray:
        i = self.index.get(token)
        if i is None:
            return np.zeros(self.dim)
        return self.vectors[i]

    def matrix(self, tokens) -> np.ndarray:
        out = np.zeros((len(tokens), self.dim))
        for k, t in enumerate(tokens):
            i = self.index.get(t)
            if i is not None:
                out[k] = self.vectors[i]
        return out

    def oov_rate(self, tokens) -> float:
        if not tokens:
            return 0.0
        return sum(t not in self.index for t in tokens) / len(tokens)


def load_embeddings(path, format: str = "text") -> EmbeddingTable:
    """Read ``token v1 ... vd`` lines.  A leading ``<count> <dim>`` header
    line (word2vec text style) is skipped."""
    if format != "text":
        raise ValueError(f"unsupported embedding format {format!r}")
    index, rows, dim = {}, [], None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim < 1:
                    raise EmbeddingFormatError(f"{path}:{lineno}: no vector values")
            elif len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, got {len(values)}")
            try:
                vec = [float(x) for x in values]
            except ValueError as exc:
                raise EmbeddingFormatError(f"{path}:{lineno}: {exc}") from None
            if token in index:
                rows[index[token]] = vec
            else:
                index[token] = len(rows)
                rows.append(vec)
    if not rows:
        raise EmbeddingFormatError(f"{path}: no vectors found")
    return EmbeddingTable(dim, index, np.array(rows, float))


def cosine(u, v) -> float:
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _cosine_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    denom = np.outer(nx, ny)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, (x @ y.T) / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(sim, -1.0, 1.0)


# -------------------------------------------------------------- ROUGE-WE

def _soft_matches(cand, ref, n, table, threshold) -> int:
    c_grams = [tuple(cand[i:i + n]) for i in range(len(cand) - n + 1)]
    r_grams = [tuple(ref[i:i + n]) for i in range(len(ref) - n + 1)]
    if not c_grams or not r_grams:
        return 0
    vocab_c = sorted(set(cand))
    vocab_r = sorted(set(ref))
    pos_c = {t: k for k, t in enumerate(vocab_c)}
    pos_r = {t: k for k, t in enumerate(vocab_r)}
    tok_sim = _cosine_matrix(table.matrix(vocab_c), table.matrix(vocab_r))
    # negative cosines would turn positive in a product of an even count
    tok_sim = np.maximum(tok_sim, 0.0)
    for t in set(vocab_c) & set(vocab_r):
        tok_sim[pos_c[t], pos_r[t]] = 1.0
    sim = np.ones((len(c_grams), len(r_grams)))
    for k in range(n):
        ci = [pos_c[g[k]] for g in c_grams]
        ri = [pos_r[g[k]] for g in r_grams]
        sim *= tok_sim[np.ix_(ci, ri)]
    used = np.zeros(len(r_grams), bool)
    hits = 0
    for g, row in zip(c_grams, sim):
        if used.all():
            break
        avail = np.where(used, -np.inf, row)
        top = np.flatnonzero(avail == avail.max())
        # identical n-grams always count, even above a threshold of 1
        exact = [j for j in top if r_grams[j] == g]
        j = int(exact[0] if exact else top[0])
        if exact or avail[j] >= threshold:
            used[j] = True
            hits += 1
    return hits


def rouge_we_n(candidate, references, n: int, table: EmbeddingTable,
               sim_threshold: float = 0.8, policy: str = "max") -> PRF:
    """ROUGE-N with soft n-gram matching.

    Position similarity is the (non-negative) cosine of the two word vectors,
    1 for identical strings; n-gram similarity is the product over positions.
    Candidate n-grams are matched greedily, in order, to the most similar
    unused reference n-gram when that similarity reaches ``sim_threshold``
    (identical n-grams always match).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if table is None:
        raise ValueError("ROUGE-WE needs an embedding table")
    _check_refs(references)
    cand = _tokens(candidate)
    total_c = max(0, len(cand) - n + 1)
    if total_c == 0:
        return ZERO
    scores = []
    for ref in references:
        r = _tokens(ref)
        total_r = max(0, len(r) - n + 1)
        hits = _soft_matches(cand, r, n, table, sim_threshold)
        scores.append(PRF.from_counts(hits, total_c, total_r))
    return _aggregate_prf(scores, policy)


# ------------------------------------------------------ mover's distance

@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, float))
        w = np.asarray(self.weights, float)
        if pts.shape[0] != w.shape[0]:
            raise ValueError("one weight per point required")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("at least one point needs positive weight")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w / total)

    def __len__(self):
        return len(self.weights)


def ground_costs(x: np.ndarray, y: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    if metric == "euclidean":
        diff = x[:, None, :] - y[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if metric == "cosine-distance":
        return 1.0 - _cosine_matrix(x, y)
    raise ValueError(f"unknown ground metric {metric!r}")


def movers_distance(a: WeightedPointSet, b: WeightedPointSet,
                    ground_metric: str = "euclidean") -> float:
    cost = ground_costs(a.points, b.points, ground_metric)
    total, _ = transport(a.weights, b.weights, cost)
    return max(0.0, total)


def _word_points(tokens, table):
    counts = Counter(tokens)
    vocab = sorted(counts)
    return table.matrix(vocab), np.array([counts[t] for t in vocab], float)


def _sentence_points(text, table):
    sents = [s.tokens for s in split_sentences(text)] if isinstance(text, str) else [tuple(text)]
    sents = [s for s in sents if s]
    pts = np.array([table.matrix(s).mean(axis=0) for s in sents])
    return pts, np.array([len(s) for s in sents], float)


def document_points(text, table: EmbeddingTable, variant: str) -> WeightedPointSet:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    tokens = _tokens(text)
    if variant == "WMS":
        return WeightedPointSet(*_word_points(tokens, table))
    if variant == "SMS":
        return WeightedPointSet(*_sentence_points(text, table))
    wp, ww = _word_points(tokens, table)
    sp, sw = _sentence_points(text, table)
    # both halves carry one token's worth of mass per token
    return WeightedPointSet(np.vstack([wp, sp]), np.concatenate([ww, sw]))


def sms_family(candidate, comparison, table: EmbeddingTable, variant: str = "SMS",
               ground_metric: str = "euclidean") -> float:
    """Similarity ``exp(-distance)`` between two documents viewed as bags of
    words (WMS), sentences (SMS) or both (S+WMS).  Empty candidate -> 0."""
    if table is None:
        raise ValueError("mover's similarity needs an embedding table")
    if not _tokens(comparison):
        raise ValueError("comparison text has no tokens")
    if not _tokens(candidate):
        return 0.0
    a = document_points(candidate, table, variant)
    b = document_points(comparison, table, variant)
    return math.exp(-movers_distance(a, b, ground_metric))


def all_oov(text, table: EmbeddingTable) -> bool:
    toks = _tokens(text)
    return bool(toks) and all(t not in table for t in toks)


__all__ = [
    "EmbeddingTable", "EmbeddingFormatError", "WeightedPointSet", "load_embeddings",
    "cosine", "rouge_we_n", "movers_distance", "ground_costs", "document_points",
    "sms_family", "all_oov",
]
