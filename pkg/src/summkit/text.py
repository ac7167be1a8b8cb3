"""Text primitives shared by every metric.

Tokenization is whitespace based with optional edge-punctuation stripping and
case folding.  Sentence splitting is rule based.  N-gram multisets are plain
``collections.Counter`` objects wrapped with their order so the n-gram length
invariant can be checked.
"""

from __future__ import annotations

import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "TokenSequence",
    "NgramMultiset",
    "tokenize",
    "split_sentences",
    "ngrams",
    "char_ngrams",
    "lcs_length",
    "lcs_table",
    "lcs_positions",
    "normalize_text",
]

_WORD = re.compile(r"\S+")
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class TokenSequence:
    """Normalized tokens plus UTF-8 byte spans into the original text."""

    tokens: tuple[str, ...]
    spans: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.spans and len(self.spans) != len(self.tokens):
            raise ValueError("spans and tokens differ in length")

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class NgramMultiset:
    order: int
    counts: Counter = field(default_factory=Counter)

    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self):
        return len(self.counts)

    def __contains__(self, key):
        return key in self.counts

    def __getitem__(self, key):
        return self.counts.get(key, 0)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_text(text: str) -> str:
    """Lowercase, collapse internal whitespace, strip the ends."""
    return _WS.sub(" ", text.lower()).strip()


def tokenize(text: str, lowercase: bool = True, strip_punct: bool = True,
             _offset: int = 0) -> TokenSequence:
    tokens = []
    spans = []
    byte_pos = 0
    char_pos = 0
    for m in _WORD.finditer(text):
        start, end = m.span()
        byte_pos += len(text[char_pos:start].encode("utf-8"))
        char_pos = start
        tok = m.group()
        lead = 0
        if strip_punct:
            while lead < len(tok) and _is_punct(tok[lead]):
                lead += 1
            trail = len(tok)
            while trail > lead and _is_punct(tok[trail - 1]):
                trail -= 1
            core = tok[lead:trail]
        else:
            trail = len(tok)
            core = tok
        if core:
            b0 = byte_pos + len(tok[:lead].encode("utf-8"))
            b1 = b0 + len(core.encode("utf-8"))
            tokens.append(core.casefold() if lowercase else core)
            spans.append((_offset + b0, _offset + b1))
        byte_pos += len(tok.encode("utf-8"))
        char_pos = end
    return TokenSequence(tuple(tokens), tuple(spans))


# Tokens ending in a period that do not end a sentence.
ABBREVIATIONS = frozenset("""
mr mrs ms dr prof sr jr st mt vs etc inc ltd co corp gen sen rep gov lt col
capt sgt cmdr adm maj rev hon pres supt fig no nos vol approx dept est jan feb
mar apr jun jul aug sep sept oct nov dec u.s u.k u.n e.g i.e a.m p.m
""".split())

_TERMINAL = re.compile(r"[.!?]+[\"'”’)\]]*(?=\s|$)")


def _ends_with_abbreviation(segment: str) -> bool:
    words = segment.split()
    if not words:
        return False
    last = words[-1].rstrip(".").lstrip("\"'(“‘[")
    if len(last) == 1 and last.isalpha() and last.isupper():
        return True  # initials such as "J. K. Rowling"
    return last.lower() in ABBREVIATIONS


def _sentence_spans(line: str) -> list[tuple[int, int]]:
    spans = []
    start = 0
    for m in _TERMINAL.finditer(line):
        end = m.end()
        rest = line[end:].lstrip()
        if rest and not rest[0].isupper() and rest[0] not in "\"'“‘(":
            continue
        if m.group().rstrip("\"'”’)]") == "." and _ends_with_abbreviation(line[start:m.end()]):
            continue
        spans.append((start, end))
        start = end
    if start < len(line):
        spans.append((start, len(line)))
    return spans


def split_sentences(text: str, lowercase: bool = True,
                    strip_punct: bool = True) -> list[TokenSequence]:
    """Rule-based sentence segmentation.

    A sentence ends at ``.``, ``!`` or ``?`` (optionally followed by closing
    quotes or brackets) when the next non-space character is uppercase or the
    text ends.  Every newline also ends a sentence.  Periods after common
    abbreviations and single-letter initials are not boundaries.
    """
    out = []
    byte_base = 0
    for line in text.split("\n"):
        for s, e in _sentence_spans(line):
            offset = byte_base + len(line[:s].encode("utf-8"))
            seq = tokenize(line[s:e], lowercase, strip_punct, _offset=offset)
            if len(seq):
                out.append(seq)
        byte_base += len(line.encode("utf-8")) + 1
    return out


def _tokens(seq) -> Sequence[str]:
    return seq.tokens if isinstance(seq, TokenSequence) else seq


def ngrams(seq: TokenSequence | Sequence[str], n: int) -> NgramMultiset:
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    toks = _tokens(seq)
    counts = Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))
    return NgramMultiset(n, counts)


def char_ngrams(text: str, n: int) -> NgramMultiset:
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    chars = "".join(text.split())
    counts = Counter(chars[i:i + n] for i in range(len(chars) - n + 1))
    return NgramMultiset(n, counts)


def lcs_table(a: Sequence[str], b: Sequence[str]) -> list[list[int]]:
    """Full DP table; ``table[i][j]`` is the LCS of ``a[:i]`` and ``b[:j]``."""
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i, x in enumerate(a, 1):
        row, prev = table[i], table[i - 1]
        for j, y in enumerate(b, 1):
            if x == y:
                row[j] = prev[j - 1] + 1
            else:
                row[j] = row[j - 1] if row[j - 1] > prev[j] else prev[j]
    return table


def lcs_length(a: TokenSequence | Sequence[str], b: TokenSequence | Sequence[str]) -> int:
    a, b = _tokens(a), _tokens(b)
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(cur[j - 1] if cur[j - 1] > prev[j] else prev[j])
        prev = cur
    return prev[-1]


def lcs_positions(a: Sequence[str], b: Sequence[str]) -> list[int]:
    """Indices into ``a`` of one longest common subsequence of ``a`` and ``b``."""
    a, b = _tokens(a), _tokens(b)
    table = lcs_table(a, b)
    i, j = len(a), len(b)
    out = []
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            out.append(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    out.reverse()
    return out


def join_tokens(chunks: Iterable[TokenSequence]) -> TokenSequence:
    toks, spans = [], []
    for c in chunks:
        toks.extend(c.tokens)
        spans.extend(c.spans)
    return TokenSequence(tuple(toks), tuple(spans))
