"""Unified record formats, loaders, article/output alignment and the score store.

Every file format is JSON lines: one self-contained object per line, UTF-8.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .text import normalize_text

log = logging.getLogger(__name__)

DIMENSIONS = ("coherence", "consistency", "fluency", "relevance")
ANNOTATOR_CLASSES = ("expert", "crowd")


class FormatError(ValueError):
    """A record file violates its line format or a record invariant."""


@dataclass(frozen=True)
class SourceDocument:
    example_id: str
    text: str
    references: tuple[str, ...]

    def __post_init__(self):
        if not isinstance(self.example_id, str) or not self.example_id:
            raise ValueError("example_id must be a non-empty string")
        if not self.references:
            raise ValueError(f"{self.example_id}: at least one reference required")
        for r in self.references:
            if not isinstance(r, str) or not r.strip():
                raise ValueError(f"{self.example_id}: empty reference")


@dataclass(frozen=True)
class SystemOutput:
    system_id: str
    example_id: str | None
    summary_text: str
    reference: str | None = None

    @property
    def is_empty(self) -> bool:
        return not self.summary_text.strip()


@dataclass(frozen=True)
class EvaluationInstance:
    system_id: str
    example_id: str
    candidate: str
    source: SourceDocument

    @property
    def references(self) -> tuple[str, ...]:
        return self.source.references

    @property
    def is_empty(self) -> bool:
        return not self.candidate.strip()


@dataclass(frozen=True)
class HumanAnnotation:
    system_id: str
    example_id: str
    annotator_id: str
    annotator_class: str
    round: int
    coherence: int
    consistency: int
    fluency: int
    relevance: int

    def __post_init__(self):
        if self.annotator_class not in ANNOTATOR_CLASSES:
            raise ValueError(f"unknown annotator class {self.annotator_class!r}")
        if not isinstance(self.round, int) or self.round < 1:
            raise ValueError(f"round must be a positive integer, got {self.round!r}")
        for dim in DIMENSIONS:
            v = getattr(self, dim)
            if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= 5:
                raise ValueError(f"{dim} must be an integer in [1, 5], got {v!r}")

    def key(self):
        return (self.annotator_id, self.system_id, self.example_id, self.round)


@dataclass(frozen=True)
class ExternalScoreRecord:
    metric_name: str
    system_id: str
    example_id: str
    value: float

    def __post_init__(self):
        if not self.metric_name:
            raise ValueError("metric name must be non-empty")
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)) \
                or not math.isfinite(self.value):
            raise ValueError(f"non-finite score {self.value!r}")


# ---------------------------------------------------------------- loaders

def _records(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: not a JSON record ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise FormatError(f"{path}:{lineno}: record must be an object")
            yield lineno, rec


def _field(path, lineno, rec, name, kind=str):
    if name not in rec:
        raise FormatError(f"{path}:{lineno}: missing field {name!r}")
    value = rec[name]
    if kind is not None and not isinstance(value, kind):
        raise FormatError(f"{path}:{lineno}: field {name!r} has the wrong type")
    return value


def load_dataset(path) -> list[SourceDocument]:
    docs, lines = [], defaultdict(list)
    for lineno, rec in _records(path):
        refs = _field(path, lineno, rec, "references", list)
        try:
            doc = SourceDocument(_field(path, lineno, rec, "id"),
                                 _field(path, lineno, rec, "text"),
                                 tuple(refs))
        except (ValueError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        lines[doc.example_id].append(lineno)
        docs.append(doc)
    dups = {k: v for k, v in lines.items() if len(v) > 1}
    if dups:
        detail = "; ".join(f"{k!r} on lines {', '.join(map(str, v))}" for k, v in dups.items())
        raise FormatError(f"{path}: duplicate example ids: {detail}")
    log.info("loaded %d documents from %s", len(docs), path)
    return docs


def dump_dataset(docs: Iterable[SourceDocument], path):
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.example_id, "text": d.text,
                                 "references": list(d.references)}, ensure_ascii=False) + "\n")


def load_outputs(path, system_id: str | None = None) -> list[SystemOutput]:
    outs, seen = [], {}
    for lineno, rec in _records(path):
        sys_id = rec.get("system_id", system_id)
        if not isinstance(sys_id, str) or not sys_id:
            raise FormatError(f"{path}:{lineno}: missing field 'system_id'")
        ex = rec.get("id")
        if ex is not None and not isinstance(ex, str):
            ex = str(ex)
        ref = rec.get("reference")
        if ref is not None and not isinstance(ref, str):
            raise FormatError(f"{path}:{lineno}: field 'reference' has the wrong type")
        out = SystemOutput(sys_id, ex, _field(path, lineno, rec, "decoded"), ref)
        if ex is not None:
            if (sys_id, ex) in seen:
                raise FormatError(f"{path}:{lineno}: duplicate output for ({sys_id}, {ex}),"
                                  f" first on line {seen[(sys_id, ex)]}")
            seen[(sys_id, ex)] = lineno
        if out.is_empty:
            log.warning("%s:%d: empty summary for system %s", path, lineno, sys_id)
        outs.append(out)
    return outs


def dump_outputs(outputs: Iterable[SystemOutput], path):
    with open(path, "w", encoding="utf-8") as fh:
        for o in outputs:
            rec = {"system_id": o.system_id, "decoded": o.summary_text}
            if o.example_id is not None:
                rec["id"] = o.example_id
            if o.reference is not None:
                rec["reference"] = o.reference
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_annotations(path) -> list[HumanAnnotation]:
    anns, seen = [], {}
    for lineno, rec in _records(path):
        try:
            a = HumanAnnotation(
                _field(path, lineno, rec, "system_id"),
                str(_field(path, lineno, rec, "id", None)),
                str(_field(path, lineno, rec, "annotator_id", None)),
                _field(path, lineno, rec, "class"),
                _field(path, lineno, rec, "round", None),
                *(_field(path, lineno, rec, d, None) for d in DIMENSIONS),
            )
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{path}:{lineno}: {exc}") from None
        if a.key() in seen:
            raise FormatError(f"{path}:{lineno}: duplicate annotation {a.key()},"
                              f" first on line {seen[a.key()]}")
        seen[a.key()] = lineno
        anns.append(a)
    log.info("loaded annotations from %s: %s", path, dict(annotation_totals(anns)))
    return anns


def annotation_totals(anns: Iterable[HumanAnnotation]) -> Counter:
    return Counter(a.annotator_class for a in anns)


def dump_annotations(anns: Iterable[HumanAnnotation], path):
    with open(path, "w", encoding="utf-8") as fh:
        for a in anns:
            rec = {"system_id": a.system_id, "id": a.example_id,
                   "annotator_id": a.annotator_id, "class": a.annotator_class,
                   "round": a.round}
            rec.update({d: getattr(a, d) for d in DIMENSIONS})
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def load_external_scores(path) -> list[ExternalScoreRecord]:
    recs = []
    for lineno, rec in _records(path):
        value = _field(path, lineno, rec, "value", None)
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: value {value!r} is not a number") from None
        try:
            recs.append(ExternalScoreRecord(_field(path, lineno, rec, "metric"),
                                            _field(path, lineno, rec, "system_id"),
                                            str(_field(path, lineno, rec, "id", None)),
                                            value))
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return recs


# -------------------------------------------------------------- alignment

@dataclass(frozen=True)
class Unmatched:
    output: SystemOutput
    reason: str
    candidates: tuple[str, ...] = ()


def align_outputs(outputs: Sequence[SystemOutput], dataset: Sequence[SourceDocument]
                  ) -> tuple[list[EvaluationInstance], list[Unmatched]]:
    """Join outputs to documents by id, else by the normalized embedded
    reference.  Every output ends up aligned or in the unmatched report."""
    by_id = {d.example_id: d for d in dataset}
    by_ref = defaultdict(list)
    for d in dataset:
        for r in d.references:
            ids = by_ref[normalize_text(r)]
            if d.example_id not in ids:
                ids.append(d.example_id)
    aligned, unmatched, taken = [], [], set()
    for out in outputs:
        if out.example_id is not None and out.example_id in by_id:
            doc = by_id[out.example_id]
        elif out.reference is not None:
            hits = by_ref.get(normalize_text(out.reference), [])
            if len(hits) > 1:
                unmatched.append(Unmatched(out, "ambiguous", tuple(hits)))
                continue
            if not hits:
                unmatched.append(Unmatched(out, "reference not found"))
                continue
            doc = by_id[hits[0]]
        elif out.example_id is not None:
            unmatched.append(Unmatched(out, "unknown id"))
            continue
        else:
            unmatched.append(Unmatched(out, "no id or reference"))
            continue
        key = (out.system_id, doc.example_id)
        if key in taken:
            unmatched.append(Unmatched(out, "duplicate", (doc.example_id,)))
            continue
        taken.add(key)
        aligned.append(EvaluationInstance(out.system_id, doc.example_id, out.summary_text, doc))
    return aligned, unmatched


def detect_duplicate_references(dataset: Sequence[SourceDocument]) -> list[list[str]]:
    groups: dict[str, list[str]] = {}
    for d in dataset:
        groups.setdefault(normalize_text(d.references[0]), []).append(d.example_id)
    return [ids for ids in groups.values() if len(ids) > 1]


# -------------------------------------------------------------- ScoreTable

class ScoreCollision(ValueError):
    pass


@dataclass
class ScoreTable:
    """Sparse (system, example, metric) -> value store.

    ``flags`` annotates cells (``empty_candidate``, ``error: ...``); an
    error-flagged cell has no value.  ``corpus`` holds corpus-level values
    keyed by (system, metric) that override the per-example mean when
    aggregating (BLEU).
    """

    cells: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    corpus: dict = field(default_factory=dict)
    fingerprints: dict = field(default_factory=dict)

    def add(self, system_id, example_id, metric, value, flag=""):
        key = (system_id, example_id, metric)
        if key in self.cells or key in self.flags and self.flags[key].startswith("error"):
            raise ScoreCollision(f"cell {key} already present")
        if value is None:
            self.flags[key] = flag or "error"
            return
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value for {key}")
        self.cells[key] = value
        if flag:
            self.flags[key] = flag

    def add_error(self, system_id, example_id, metric, message):
        self.add(system_id, example_id, metric, None, f"error: {message}")

    def merge_external(self, records: Iterable[ExternalScoreRecord]):
        for r in records:
            key = (r.system_id, r.example_id, r.metric_name)
            if key in self.cells or key in self.flags:
                raise ScoreCollision(f"external score collides with existing cell {key}")
        for r in records:
            self.add(r.system_id, r.example_id, r.metric_name, r.value, "external")
            self.fingerprints.setdefault(r.metric_name, "external")

    def metrics(self) -> list[str]:
        return sorted({m for _, _, m in self.cells} | {m for _, m in self.corpus})

    def systems(self) -> list[str]:
        return sorted({s for s, _, _ in self.cells} | {s for s, _ in self.corpus})

    def errors(self) -> list[tuple]:
        return [(k, f) for k, f in sorted(self.flags.items()) if f.startswith("error")]

    def get(self, system_id, example_id, metric, default=None):
        return self.cells.get((system_id, example_id, metric), default)

    def system_aggregates(self) -> dict:
        """(system, metric) -> (value, n examples).  Mean over examples, or
        the stored corpus-level value."""
        acc = defaultdict(list)
        for (s, _e, m), v in self.cells.items():
            acc[(s, m)].append(v)
        out = {k: (math.fsum(v) / len(v), len(v)) for k, v in acc.items()}
        examples = defaultdict(set)
        for s, e, _m in self.cells:
            examples[s].add(e)
        for (s, m), v in self.corpus.items():
            out[(s, m)] = (v, len(examples[s]))
        return dict(sorted(out.items()))

    # TSV: system_id example_id metric value flag
    def to_tsv(self) -> str:
        keys = sorted(set(self.cells) | set(self.flags))
        lines = ["system_id\texample_id\tmetric\tvalue\tflag"]
        for k in keys:
            v = self.cells.get(k)
            lines.append("\t".join([*k, "" if v is None else repr(v), self.flags.get(k, "")]))
        return "\n".join(lines) + "\n"

    def aggregates_tsv(self) -> str:
        lines = ["system_id\tmetric\tvalue\tn"]
        for (s, m), (v, n) in self.system_aggregates().items():
            lines.append(f"{s}\t{m}\t{v!r}\t{n}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, aggregates: str | None = None) -> "ScoreTable":
        table = cls()
        rows = text.splitlines()
        if not rows or rows[0].split("\t")[:4] != ["system_id", "example_id", "metric", "value"]:
            raise FormatError("score file lacks the expected header")
        for lineno, line in enumerate(rows[1:], 2):
            parts = line.split("\t")
            if len(parts) != 5:
                raise FormatError(f"score file line {lineno}: expected 5 columns")
            s, e, m, v, flag = parts
            table.add(s, e, m, float(v) if v else None, flag)
        if aggregates:
            per_example = {m for _, _, m in table.cells}
            for line in aggregates.splitlines()[1:]:
                s, m, v, _n = line.split("\t")
                if m not in per_example:
                    table.corpus[(s, m)] = float(v)
        return table

    @classmethod
    def load(cls, directory) -> "ScoreTable":
        directory = Path(directory)
        agg = directory / "system_scores.tsv"
        return cls.from_tsv((directory / "scores.tsv").read_text(encoding="utf-8"),
                            agg.read_text(encoding="utf-8") if agg.exists() else None)
