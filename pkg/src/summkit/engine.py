"""Unified scoring API: a metric registry plus ``evaluate_example`` and
``evaluate_batch``.

Per-example metrics are pure functions of (instance, parameters, resources)
and fan out over a process pool.  Corpus metrics (BLEU, CIDEr) run once over
the whole batch before anything is assembled, and a single collector fills
the ScoreTable in instance order, so results do not depend on worker count.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

from . import embedding, overlap, stats
from .corpus import EvaluationInstance, ScoreTable

log = logging.getLogger(__name__)

TOKENIZATION = "whitespace/casefold/strip-edge-punct/v1"

EMPTY_FLAG = "empty_candidate"


@dataclass(frozen=True)
class MetricConfig:
    metric_name: str
    params: dict = field(default_factory=dict)

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(self)

    def with_params(self, **overrides) -> "MetricConfig":
        return replace(self, params={**self.params, **overrides})


def config_fingerprint(config: MetricConfig) -> str:
    payload = json.dumps({"metric": config.metric_name, "params": config.params,
                          "tokenization": TOKENIZATION},
                         sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class Resources:
    embeddings: Any = None
    synonyms: Any = None


@dataclass(frozen=True)
class MetricSpec:
    config: MetricConfig
    scorer: str
    corpus_level: bool = False
    needs_references: bool = True
    needs_source: bool = False
    needs_embeddings: bool = False

    @property
    def name(self):
        return self.config.metric_name


class MetricError(RuntimeError):
    pass


class UnknownMetric(KeyError):
    pass


# ----------------------------------------------------------- scorers

def _s_rouge_n(inst, p, res):
    return overlap.rouge_n(inst.candidate, inst.references, p["n"], p["use_stemmer"],
                           p["policy"]).f_score


def _s_rouge_l(inst, p, res):
    return overlap.rouge_l(inst.candidate, inst.references, p["mode"], p["use_stemmer"],
                           p["policy"]).f_score


def _s_chrf(inst, p, res):
    return overlap.chrf(inst.candidate, inst.references, p["max_n"], p["beta"], p["policy"])


def _s_meteor(inst, p, res):
    return overlap.meteor(inst.candidate, inst.references, p["alpha"], p["beta"],
                          p["gamma"], res.synonyms, p["policy"])


def _s_rouge_we(inst, p, res):
    return embedding.rouge_we_n(inst.candidate, inst.references, p["n"], res.embeddings,
                                p["threshold"], p["policy"]).f_score


def _s_movers(inst, p, res):
    sims = [embedding.sms_family(inst.candidate, r, res.embeddings, p["variant"],
                                 p["ground_metric"]) for r in inst.references]
    return overlap.aggregate_multi_ref(sims, p["policy"])


def _frags(inst):
    return stats.extractive_fragments(inst.source.text, inst.candidate)


def _s_coverage(inst, p, res):
    return stats.coverage(_frags(inst))


def _s_density(inst, p, res):
    return stats.density(_frags(inst))


def _s_compression(inst, p, res):
    return stats.compression(inst.source.text, inst.candidate)


def _s_novelty(inst, p, res):
    return stats.novelty(inst.source.text, inst.candidate, p["n"])


def _s_redundancy(inst, p, res):
    return stats.redundancy(inst.candidate, p["n"])


def _s_length(inst, p, res):
    return float(stats.summary_length(inst.candidate))


SCORERS: dict[str, Callable] = {
    "rouge_n": _s_rouge_n, "rouge_l": _s_rouge_l, "chrf": _s_chrf, "meteor": _s_meteor,
    "rouge_we": _s_rouge_we, "movers": _s_movers, "coverage": _s_coverage,
    "density": _s_density, "compression": _s_compression, "novelty": _s_novelty,
    "redundancy": _s_redundancy, "length": _s_length,
}


def _corpus_bleu(instances, p):
    return overlap.bleu_corpus([i.candidate for i in instances],
                               [i.references for i in instances], p["max_n"], p["smoothing"])


# ----------------------------------------------------------- registry

def _builtin_specs(policy: str = "max") -> list[MetricSpec]:
    specs = []
    for n in (1, 2, 3):
        specs.append(MetricSpec(MetricConfig(f"rouge_{n}", {
            "n": n, "use_stemmer": False, "policy": policy}), "rouge_n"))
    specs.append(MetricSpec(MetricConfig("rouge_l", {
        "mode": "summary", "use_stemmer": False, "policy": policy}), "rouge_l"))
    specs.append(MetricSpec(MetricConfig("bleu", {"max_n": 4, "smoothing": "add-one"}),
                            "bleu", corpus_level=True))
    specs.append(MetricSpec(MetricConfig("chrf", {"max_n": 6, "beta": 2.0, "policy": policy}),
                            "chrf"))
    specs.append(MetricSpec(MetricConfig("meteor", {
        "alpha": 0.9, "beta": 3.0, "gamma": 0.5, "policy": policy}), "meteor"))
    specs.append(MetricSpec(MetricConfig("cider", {"max_n": 4}), "cider", corpus_level=True))
    for name in ("coverage", "density", "compression"):
        specs.append(MetricSpec(MetricConfig(name, {}), name, needs_references=False,
                                needs_source=True))
    for n in (1, 2, 3):
        specs.append(MetricSpec(MetricConfig(f"novelty_{n}", {"n": n}), "novelty",
                                needs_references=False, needs_source=True))
    for n in (1, 2, 3):
        specs.append(MetricSpec(MetricConfig(f"redundancy_{n}", {"n": n}), "redundancy",
                                needs_references=False))
    specs.append(MetricSpec(MetricConfig("length", {}), "length", needs_references=False))
    for n in (1, 2, 3):
        specs.append(MetricSpec(MetricConfig(f"rouge_we_{n}", {
            "n": n, "threshold": 0.8, "policy": policy}), "rouge_we", needs_embeddings=True))
    for name, variant in (("wms", "WMS"), ("sms", "SMS"), ("s_wms", "S+WMS")):
        specs.append(MetricSpec(MetricConfig(name, {
            "variant": variant, "ground_metric": "euclidean", "policy": policy}),
            "movers", needs_embeddings=True))
    return specs


DEFAULT_METRICS = [
    "rouge_1", "rouge_2", "rouge_3", "rouge_l", "bleu", "chrf", "meteor", "cider",
    "coverage", "density", "compression", "novelty_1", "novelty_2", "novelty_3",
    "redundancy_1", "redundancy_2", "redundancy_3", "length",
]
EMBEDDING_METRICS = ["rouge_we_1", "rouge_we_2", "rouge_we_3", "wms", "sms", "s_wms"]


class MetricRegistry:
    def __init__(self, specs: Sequence[MetricSpec] = (), resources: Resources | None = None):
        self.specs: dict[str, MetricSpec] = {}
        for s in specs:
            self.register(s)
        self.resources = resources or Resources()

    def register(self, spec: MetricSpec):
        if spec.name in self.specs:
            raise ValueError(f"metric {spec.name!r} already registered")
        if not spec.corpus_level and spec.scorer not in SCORERS:
            raise ValueError(f"unknown scorer {spec.scorer!r}")
        self.specs[spec.name] = spec

    def __contains__(self, name):
        return name in self.specs

    def __getitem__(self, name) -> MetricSpec:
        try:
            return self.specs[name]
        except KeyError:
            raise UnknownMetric(name) from None

    def names(self) -> list[str]:
        return list(self.specs)

    def configure(self, name: str, **params):
        spec = self[name]
        unknown = set(params) - set(spec.config.params)
        if unknown:
            raise ValueError(f"{name}: unknown parameters {sorted(unknown)}")
        self.specs[name] = replace(spec, config=spec.config.with_params(**params))

    def check(self, names: Sequence[str]):
        missing = [n for n in names if n not in self.specs]
        if missing:
            raise UnknownMetric(f"unknown metrics: {', '.join(missing)}")

    def default_metrics(self) -> list[str]:
        names = list(DEFAULT_METRICS)
        if self.resources.embeddings is not None:
            names += EMBEDDING_METRICS
        return names


def default_registry(embeddings=None, synonyms=None, policy: str = "max",
                     overrides: dict | None = None) -> MetricRegistry:
    reg = MetricRegistry(_builtin_specs(policy), Resources(embeddings, synonyms))
    for name, params in (overrides or {}).items():
        reg.configure(name, **params)
    return reg


# ------------------------------------------------------------ scoring

class Scores(dict):
    """metric -> value, with per-metric ``flags`` (empty candidate, errors)."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.flags: dict[str, str] = {}


def _requirement_problem(spec: MetricSpec, inst: EvaluationInstance, res: Resources):
    if spec.needs_embeddings and res.embeddings is None:
        return "embeddings not loaded"
    if spec.needs_source and not inst.source.text.strip():
        return "source text missing"
    if spec.needs_references and not inst.references:
        return "no references"
    return None


def _score_one(spec: MetricSpec, inst: EvaluationInstance, res: Resources):
    """(value or None, flag)."""
    problem = _requirement_problem(spec, inst, res)
    if problem:
        return None, f"error: {problem}"
    if inst.is_empty:
        return 0.0, EMPTY_FLAG
    try:
        value = SCORERS[spec.scorer](inst, spec.config.params, res)
    except stats.UndefinedStatistic as exc:
        return None, f"undefined: {exc}"
    except Exception as exc:  # isolate one cell's failure from the rest
        return None, f"error: {type(exc).__name__}: {exc}"
    flag = ""
    if spec.needs_embeddings and embedding.all_oov(inst.candidate, res.embeddings):
        flag = "all_oov"
    return float(value), flag


def evaluate_example(instance: EvaluationInstance, metrics: Sequence[str],
                     registry: MetricRegistry) -> Scores:
    registry.check(metrics)
    out = Scores()
    for name in metrics:
        spec = registry[name]
        if spec.corpus_level:
            table = ScoreTable()
            _corpus_phase([instance], [spec], registry.resources, table)
            key = (instance.system_id, instance.example_id, name)
            value = table.cells.get(key, table.corpus.get((instance.system_id, name)))
            flag = table.flags.get(key, "")
            if not flag and instance.is_empty:
                flag = EMPTY_FLAG
        else:
            value, flag = _score_one(spec, instance, registry.resources)
        if value is not None:
            out[name] = value
        if flag:
            out.flags[name] = flag
    return out


def _score_chunk(args):
    specs, instances, res = args
    return [[_score_one(s, inst, res) for s in specs] for inst in instances]


def _corpus_phase(instances, specs, res, table: ScoreTable):
    for spec in specs:
        p = spec.config.params
        if spec.scorer == "bleu":
            by_system: dict[str, list] = {}
            for inst in instances:
                by_system.setdefault(inst.system_id, []).append(inst)
            for sys_id, group in sorted(by_system.items()):
                try:
                    table.corpus[(sys_id, spec.name)] = _corpus_bleu(group, p)
                except Exception as exc:
                    for inst in group:
                        table.add_error(sys_id, inst.example_id, spec.name, str(exc))
        elif spec.scorer == "cider":
            docs = {}
            for inst in instances:
                docs.setdefault(inst.example_id, inst.references)
            result = overlap.cider([i.candidate for i in instances],
                                   [i.references for i in instances], p["max_n"],
                                   reference_corpus=list(docs.values()))
            for inst, value in zip(instances, result.scores):
                table.add(inst.system_id, inst.example_id, spec.name, value,
                          EMPTY_FLAG if inst.is_empty else "")
        else:
            raise ValueError(f"no corpus routine for {spec.scorer!r}")


def evaluate_batch(instances: Sequence[EvaluationInstance], metrics: Sequence[str],
                   registry: MetricRegistry, parallelism: int = 1,
                   chunk_size: int = 64) -> ScoreTable:
    registry.check(metrics)
    instances = list(instances)
    specs = [registry[m] for m in metrics]
    example_specs = [s for s in specs if not s.corpus_level]
    corpus_specs = [s for s in specs if s.corpus_level]
    table = ScoreTable()
    for s in specs:
        table.fingerprints[s.name] = s.config.fingerprint

    if instances and corpus_specs:
        _corpus_phase(instances, corpus_specs, registry.resources, table)

    chunks = [instances[i:i + chunk_size] for i in range(0, len(instances), chunk_size)]
    jobs = [(example_specs, c, registry.resources) for c in chunks]
    if parallelism > 1 and len(chunks) > 1 and example_specs:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_score_chunk, jobs))
    else:
        results = [_score_chunk(j) for j in jobs]

    for chunk, rows in zip(chunks, results):
        for inst, row in zip(chunk, rows):
            for spec, (value, flag) in zip(example_specs, row):
                table.add(inst.system_id, inst.example_id, spec.name, value, flag)
    return table
