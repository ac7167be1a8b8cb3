import pytest

from summkit import engine
from summkit.corpus import EvaluationInstance, SourceDocument, align_outputs
from summkit.embedding import EmbeddingTable
from summkit.engine import (EMPTY_FLAG, MetricConfig, UnknownMetric, config_fingerprint,
                            default_registry, evaluate_batch, evaluate_example)
from summkit.synthetic import make_documents, make_outputs


def instance(candidate, ref="the cat sat on the mat", text="the cat sat on the mat today",
             system="M", ex="e1"):
    return EvaluationInstance(system, ex, candidate, SourceDocument(ex, text, (ref,)))


@pytest.fixture(scope="module")
def batch():
    docs = make_documents(40, seed=1, n_refs=2)
    aligned, unmatched = align_outputs(make_outputs(docs, ["A", "B", "C"], seed=1), docs)
    assert not unmatched
    return aligned


@pytest.fixture(scope="module")
def table():
    words = "the a city council said on monday that new plans for river park".split()
    return EmbeddingTable.from_dict({w: [float(len(w)), float(i % 3), 1.0]
                                     for i, w in enumerate(words)})


def test_identity_instance():
    scores = evaluate_example(instance("the cat sat on the mat"), ["rouge_1", "rouge_l", "chrf"],
                              default_registry())
    assert dict(scores) == {"rouge_1": 1.0, "rouge_l": 1.0, "chrf": 1.0}
    assert scores.flags == {}


def test_empty_candidate():
    reg = default_registry()
    scores = evaluate_example(instance("  "), reg.default_metrics(), reg)
    assert set(scores) == set(reg.default_metrics())
    assert all(v == 0.0 for v in scores.values())
    assert all(scores.flags[m] == EMPTY_FLAG for m in scores)


def test_deterministic():
    reg = default_registry()
    inst = instance("the cat lay on a mat. It slept.")
    a = evaluate_example(inst, reg.default_metrics(), reg)
    b = evaluate_example(inst, reg.default_metrics(), reg)
    assert a == b and a.flags == b.flags


def test_unknown_metric_fails_before_scoring():
    with pytest.raises(UnknownMetric):
        evaluate_example(instance("x"), ["rouge_1", "bertscore"], default_registry())
    with pytest.raises(UnknownMetric):
        evaluate_batch([instance("x")], ["nope"], default_registry())


def test_missing_embeddings_is_per_metric():
    scores = evaluate_example(instance("the cat"), ["rouge_1", "sms"], default_registry())
    assert "rouge_1" in scores and "sms" not in scores
    assert scores.flags["sms"] == "error: embeddings not loaded"


def test_configure_changes_fingerprint():
    reg = default_registry()
    before = reg["rouge_1"].config.fingerprint
    reg.configure("rouge_1", use_stemmer=True)
    assert reg["rouge_1"].config.fingerprint != before
    with pytest.raises(ValueError):
        reg.configure("rouge_1", colour="blue")
    reg2 = default_registry(overrides={"rouge_1": {"use_stemmer": True}})
    assert reg2["rouge_1"].config.fingerprint == reg["rouge_1"].config.fingerprint


def test_fingerprints():
    a = MetricConfig("rouge_n", {"n": 2, "use_stemmer": False})
    b = MetricConfig("rouge_n", {"use_stemmer": False, "n": 2})
    assert config_fingerprint(a) == config_fingerprint(b)
    assert config_fingerprint(a) != config_fingerprint(a.with_params(n=3))
    assert config_fingerprint(a) != config_fingerprint(MetricConfig("rouge_x", a.params))
    assert len(config_fingerprint(a)) == 16


def test_policy_is_part_of_fingerprint():
    assert (default_registry(policy="max")["rouge_1"].config.fingerprint
            != default_registry(policy="mean")["rouge_1"].config.fingerprint)


def test_batch_identity_aggregates():
    reg = default_registry()
    insts = [instance("the cat sat on the mat", ex=f"e{i}") for i in range(5)]
    t = evaluate_batch(insts, ["rouge_1", "rouge_2", "rouge_l", "bleu"], reg)
    agg = t.system_aggregates()
    assert all(agg[("M", m)] == (1.0, 5) for m in ("rouge_1", "rouge_2", "rouge_l", "bleu"))
    assert not any(m == "bleu" for _, _, m in t.cells)


def test_batch_equals_mapped_examples(batch, table):
    reg = default_registry(embeddings=table)
    metrics = [m for m in reg.default_metrics() if not reg[m].corpus_level]
    t = evaluate_batch(batch, metrics, reg, chunk_size=7)
    for inst in batch:
        single = evaluate_example(inst, metrics, reg)
        for m in metrics:
            key = (inst.system_id, inst.example_id, m)
            assert t.cells.get(key) == single.get(m)
            assert t.flags.get(key, "") == single.flags.get(m, "")


def test_parallelism_independent(batch, table):
    reg = default_registry(embeddings=table)
    metrics = reg.default_metrics()
    tables = [evaluate_batch(batch, metrics, reg, parallelism=k, chunk_size=9).to_tsv()
              for k in (1, 2, 8)]
    assert tables[0] == tables[1] == tables[2]


def test_cider_cells_and_bleu_corpus(batch):
    reg = default_registry()
    t = evaluate_batch(batch, ["bleu", "cider"], reg)
    assert set(t.corpus) == {("A", "bleu"), ("B", "bleu"), ("C", "bleu")}
    assert len([k for k in t.cells if k[2] == "cider"]) == len(batch)
    # systems copy more of the reference as their index grows
    agg = t.system_aggregates()
    assert agg[("A", "bleu")][0] < agg[("B", "bleu")][0] < agg[("C", "bleu")][0]


def test_error_isolation(batch, monkeypatch):
    reg = default_registry()
    metrics = ["rouge_1", "coverage", "length"]
    clean = evaluate_batch(batch, metrics, reg)
    broken = list(batch)
    victim = broken[3]
    broken[3] = EvaluationInstance(victim.system_id, victim.example_id, victim.candidate,
                                   SourceDocument(victim.example_id, " ", victim.references))
    t = evaluate_batch(broken, metrics, reg)
    key = (victim.system_id, victim.example_id, "coverage")
    assert t.flags[key] == "error: source text missing" and key not in t.cells
    others = {k: v for k, v in clean.cells.items() if k != key}
    assert {k: v for k, v in t.cells.items()} == others


def test_scorer_exception_is_contained(monkeypatch):
    def explode(inst, p, res):
        if "boom" in inst.candidate:
            raise RuntimeError("kaput")
        return 0.5
    monkeypatch.setitem(engine.SCORERS, "length", explode)
    reg = default_registry()
    t = evaluate_batch([instance("fine", ex="e1"), instance("boom", ex="e2")],
                       ["length", "rouge_1"], reg)
    assert t.cells[("M", "e1", "length")] == 0.5
    assert t.flags[("M", "e2", "length")] == "error: RuntimeError: kaput"
    assert ("M", "e2", "rouge_1") in t.cells


def test_embedding_metrics_flag_all_oov(table):
    reg = default_registry(embeddings=table)
    scores = evaluate_example(instance("zebra quokka", ref="the city"), ["wms", "rouge_we_1"], reg)
    assert scores.flags == {"wms": "all_oov", "rouge_we_1": "all_oov"}
    assert 0.0 < scores["wms"] <= 1.0
