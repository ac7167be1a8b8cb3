"""Correlation and agreement statistics over metric scores and human ratings."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import DIMENSIONS, HumanAnnotation, ScoreTable

COEFFICIENTS = ("kendall_tau_b", "pearson")
LEVELS = ("system", "summary")


class UndefinedCorrelation(ValueError):
    """The coefficient has no value for these inputs (e.g. a constant vector)."""


def _check_pair(x, y):
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least two observations")


# ----------------------------------------------------------- Kendall

def _count_swaps(seq: list) -> int:
    """Number of strict inversions in ``seq`` (merge sort)."""
    swaps = 0
    width = 1
    n = len(seq)
    buf = list(seq)
    while width < n:
        out = []
        for lo in range(0, n, 2 * width):
            left = buf[lo:lo + width]
            right = buf[lo + width:lo + 2 * width]
            i = j = 0
            while i < len(left) and j < len(right):
                if right[j] < left[i]:
                    out.append(right[j])
                    swaps += len(left) - i
                    j += 1
                else:
                    out.append(left[i])
                    i += 1
            out.extend(left[i:])
            out.extend(right[j:])
        buf = out
        width *= 2
    return swaps


def _tied_pairs(values) -> int:
    counts = defaultdict(int)
    for v in values:
        counts[v] += 1
    return sum(c * (c - 1) // 2 for c in counts.values())


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-corrected Kendall tau, O(n log n) (Knight's algorithm)."""
    _check_pair(x, y)
    n = len(x)
    n0 = n * (n - 1) // 2
    n1 = _tied_pairs(x)
    n2 = _tied_pairs(y)
    if n1 == n0 or n2 == n0:
        raise UndefinedCorrelation("kendall tau-b undefined for a constant vector")
    pairs = sorted(zip(x, y))
    n3 = _tied_pairs(pairs)  # tied in both
    discordant = _count_swaps([b for _, b in pairs])
    concordant = n0 - n1 - n2 + n3 - discordant
    return (concordant - discordant) / math.sqrt((n0 - n1) * (n0 - n2))


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    _check_pair(x, y)
    xa = np.asarray(x, float)
    ya = np.asarray(y, float)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelation("pearson r undefined for a constant vector")
    return float(np.clip(float(dx @ dy) / (sx * sy), -1.0, 1.0))


def correlate(x, y, coefficient: str = "kendall_tau_b") -> float:
    if coefficient == "kendall_tau_b":
        return kendall_tau_b(x, y)
    if coefficient == "pearson":
        return pearson_r(x, y)
    raise ValueError(f"unknown coefficient {coefficient!r}")


# ------------------------------------------------------- Krippendorff

def krippendorff_alpha_interval(units: Iterable[Sequence[float | None]]) -> float:
    """Interval alpha from a units x annotators grid; ``None``/NaN is missing.

    Built on the coincidence formulation: only units with two or more values
    are pairable, and each unit's pairs are weighted by 1 / (m_u - 1).
    """
    pairable = []
    for row in units:
        vals = [float(v) for v in row if v is not None and not math.isnan(v)]
        if len(vals) >= 2:
            pairable.append(np.asarray(vals))
    n = sum(len(v) for v in pairable)
    if n < 2 or len(pairable) < 1:
        raise UndefinedCorrelation("fewer than two pairable values")
    d_obs = 0.0
    for v in pairable:
        m = len(v)
        # sum over ordered pairs of (v_i - v_j)^2 = 2 m sum v^2 - 2 (sum v)^2
        d_obs += (2 * m * float(v @ v) - 2 * float(v.sum()) ** 2) / (m - 1)
    d_obs /= n
    allv = np.concatenate(pairable)
    d_exp = (2 * n * float(allv @ allv) - 2 * float(allv.sum()) ** 2) / (n * (n - 1))
    if d_exp <= 0:
        raise UndefinedCorrelation("no variation among pairable values")
    return 1.0 - d_obs / d_exp


def annotation_units(annotations: Iterable[HumanAnnotation],
                     dimensions: Sequence[str]) -> list[list[float | None]]:
    """Pivot ratings into a units x annotators grid.  A unit is one
    (system, example, dimension) triple."""
    annotations = list(annotations)
    annotators = sorted({a.annotator_id for a in annotations})
    col = {a: k for k, a in enumerate(annotators)}
    grid: dict[tuple, list] = {}
    for a in annotations:
        for dim in dimensions:
            key = (a.system_id, a.example_id, dim)
            row = grid.setdefault(key, [None] * len(annotators))
            row[col[a.annotator_id]] = float(getattr(a, dim))
    return [grid[k] for k in sorted(grid)]


# ------------------------------------------------- system-level vectors

@dataclass(frozen=True)
class SystemScoreVector:
    items: tuple[tuple[str, float], ...]
    provenance: str
    excluded: tuple[str, ...] = ()

    @property
    def systems(self):
        return [s for s, _ in self.items]

    @property
    def values(self):
        return [v for _, v in self.items]

    def as_dict(self):
        return dict(self.items)


def system_level_scores(source, key: str, systems: Sequence[str] | None = None
                        ) -> SystemScoreVector:
    """Per-system mean over examples.  For annotations, ratings are first
    averaged across annotators within each (system, example)."""
    if isinstance(source, ScoreTable):
        # corpus-level values (BLEU) only exist in the aggregates
        means = {s: v for (s, m), (v, _n) in source.system_aggregates().items() if m == key}
    else:
        by_system = defaultdict(list)
        for (sys_id, _ex), v in sorted(summary_level_values(source, key).items()):
            by_system[sys_id].append(v)
        means = {s: math.fsum(v) / len(v) for s, v in by_system.items()}
    wanted = sorted(means) if systems is None else list(systems)
    items = tuple((s, means[s]) for s in wanted if s in means)
    excluded = tuple(s for s in wanted if s not in means)
    return SystemScoreVector(items, key, excluded)


def summary_level_values(source, key: str) -> dict[tuple[str, str], float]:
    if isinstance(source, ScoreTable):
        return {(s, e): v for (s, e, m), v in source.cells.items() if m == key}
    if key not in DIMENSIONS:
        raise ValueError(f"unknown annotation dimension {key!r}")
    acc = defaultdict(list)
    for a in source:
        acc[(a.system_id, a.example_id)].append(getattr(a, key))
    return {k: math.fsum(v) / len(v) for k, v in acc.items()}


# ----------------------------------------------------- correlation reports

@dataclass
class CorrelationReport:
    rows: list[str]
    columns: list[str]
    matrix: np.ndarray
    coefficient: str
    level: str
    n: dict = field(default_factory=dict)          # (row, col) -> observations
    undefined: list = field(default_factory=list)  # [(row, col, reason)]

    def value(self, row, col) -> float:
        return float(self.matrix[self.rows.index(row), self.columns.index(col)])

    def to_tsv(self) -> str:
        lines = ["\t".join([""] + self.columns)]
        for i, r in enumerate(self.rows):
            cells = ["" if math.isnan(v) else repr(float(v)) for v in self.matrix[i]]
            lines.append("\t".join([r] + cells))
        return "\n".join(lines) + "\n"

    def metadata(self) -> dict:
        return {
            "coefficient": self.coefficient,
            "level": self.level,
            "rows": self.rows,
            "columns": self.columns,
            "n": {f"{r}|{c}": k for (r, c), k in sorted(self.n.items())},
            "undefined": [{"row": r, "column": c, "reason": why}
                          for r, c, why in self.undefined],
        }


def _paired(a: dict, b: dict):
    keys = sorted(set(a) & set(b))
    return [a[k] for k in keys], [b[k] for k in keys]


def _fill(report, i, j, x, y):
    r, c = report.rows[i], report.columns[j]
    report.n[(r, c)] = len(x)
    try:
        report.matrix[i, j] = correlate(x, y, report.coefficient)
    except (UndefinedCorrelation, ValueError) as exc:
        report.matrix[i, j] = np.nan
        report.undefined.append((r, c, str(exc)))


def _level_values(source, key, level):
    if level == "system":
        return system_level_scores(source, key).as_dict()
    if level == "summary":
        return summary_level_values(source, key)
    raise ValueError(f"unknown level {level!r}")


def metric_human_correlation(scores: ScoreTable, annotations, metrics: Sequence[str],
                             dimensions: Sequence[str] = DIMENSIONS,
                             level: str = "system",
                             coefficient: str = "kendall_tau_b") -> CorrelationReport:
    """Metric rows x human-dimension columns.  System level correlates the
    per-system means; summary level pools every (system, example) pair."""
    annotations = list(annotations)
    report = CorrelationReport(list(metrics), list(dimensions),
                               np.full((len(metrics), len(dimensions)), np.nan),
                               coefficient, level)
    human = {d: _level_values(annotations, d, level) for d in dimensions}
    for i, m in enumerate(metrics):
        mv = _level_values(scores, m, level)
        for j, d in enumerate(dimensions):
            x, y = _paired(mv, human[d])
            _fill(report, i, j, x, y)
    return report


def pairwise_metric_matrix(scores: ScoreTable, metrics: Sequence[str] | None = None,
                           coefficient: str = "kendall_tau_b",
                           level: str = "system") -> CorrelationReport:
    metrics = list(metrics) if metrics is not None else scores.metrics()
    if len(metrics) < 2:
        raise ValueError("need at least two metrics")
    k = len(metrics)
    report = CorrelationReport(metrics, list(metrics), np.full((k, k), np.nan),
                               coefficient, level)
    values = {m: _level_values(scores, m, level) for m in metrics}
    for i in range(k):
        for j in range(i, k):
            x, y = _paired(values[metrics[i]], values[metrics[j]])
            _fill(report, i, j, x, y)
            if i != j:
                report.matrix[j, i] = report.matrix[i, j]
                report.n[(metrics[j], metrics[i])] = report.n[(metrics[i], metrics[j])]
                if math.isnan(report.matrix[i, j]):
                    report.undefined.append((metrics[j], metrics[i], report.undefined[-1][2]))
    return report


# ----------------------------------------------------------- dispersion

HIST_EDGES = tuple(np.round(np.arange(0.0, 2.0 + 1e-9, 0.25), 2))


@dataclass
class Dispersion:
    stds: dict            # (system, example) -> population std
    histogram: list       # counts per bin, bins [0, .25), ..., [1.75, 2]
    excluded: list        # (system, example) with fewer than two ratings

    @property
    def edges(self):
        return HIST_EDGES


def score_dispersion(annotations: Iterable[HumanAnnotation], dimension: str) -> Dispersion:
    """Population std of ratings per (system, example) and a 0.25-wide
    histogram over [0, 2].  Filter ``annotations`` to one group first."""
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension {dimension!r}")
    groups = defaultdict(list)
    for a in annotations:
        groups[(a.system_id, a.example_id)].append(getattr(a, dimension))
    stds, excluded = {}, []
    for key in sorted(groups):
        vals = groups[key]
        if len(vals) < 2:
            excluded.append(key)
            continue
        stds[key] = float(np.std(np.asarray(vals, float)))
    hist = [0] * (len(HIST_EDGES) - 1)
    for s in stds.values():
        b = min(int(s / 0.25), len(hist) - 1)
        hist[b] += 1
    return Dispersion(stds, hist, excluded)


def group_means(annotations: Iterable[HumanAnnotation], dimension: str) -> dict:
    return summary_level_values(list(annotations), dimension)


def expert_crowd_correlation(expert, crowd, dimension: str) -> tuple[float, int]:
    """Pearson r between per-example expert means and crowd means."""
    x, y = _paired(group_means(expert, dimension), group_means(crowd, dimension))
    return pearson_r(x, y), len(x)
