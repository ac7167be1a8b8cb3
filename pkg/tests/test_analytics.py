import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from summkit.analytics import (UndefinedCorrelation, annotation_units, expert_crowd_correlation,
                               kendall_tau_b, krippendorff_alpha_interval,
                               metric_human_correlation, pairwise_metric_matrix, pearson_r,
                               score_dispersion, system_level_scores)
from summkit.corpus import HumanAnnotation, ScoreTable

from oracles import kendall_pairs, krippendorff_coincidence


def ann(system, example, annotator, score, cls="expert", rnd=1, **dims):
    vals = {d: dims.get(d, score) for d in ("coherence", "consistency", "fluency", "relevance")}
    return HumanAnnotation(system, example, annotator, cls, rnd, **vals)


# ----------------------------------------------------------- Kendall

def test_kendall_examples():
    assert kendall_tau_b([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert kendall_tau_b([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert kendall_tau_b([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(4 / 6, abs=1e-12)


def test_kendall_errors():
    with pytest.raises(UndefinedCorrelation):
        kendall_tau_b([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau_b([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau_b([1], [1])


tied = st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 4), min_size=n, max_size=n),
    st.lists(st.integers(0, 4), min_size=n, max_size=n)))


@settings(max_examples=400)
@given(tied)
def test_kendall_matches_pair_oracle(xy):
    x, y = xy
    if len(set(x)) < 2 or len(set(y)) < 2:
        with pytest.raises(UndefinedCorrelation):
            kendall_tau_b(x, y)
        return
    tau = kendall_tau_b(x, y)
    assert tau == pytest.approx(kendall_pairs(x, y), abs=1e-12)
    assert tau == pytest.approx(kendall_tau_b(y, x), abs=1e-12)
    # strictly increasing transforms leave the ranks alone
    assert tau == pytest.approx(kendall_tau_b([math.exp(v) for v in x], [3 * v - 7 for v in y]),
                                abs=1e-12)
    assert kendall_tau_b(x, x) == pytest.approx(1.0)


# ----------------------------------------------------------- Pearson

def test_pearson_examples():
    x = [1.0, 2.0, 3.0, 5.0]
    assert pearson_r(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)
    assert pearson_r(x, [-v for v in x]) == pytest.approx(-1.0)
    assert pearson_r([1, 2, 3], [1, 2, 4]) == pytest.approx(3 / math.sqrt(2 * 14 / 3), abs=1e-12)
    with pytest.raises(UndefinedCorrelation):
        pearson_r([1, 2, 3], [2, 2, 2])


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=10), st.data())
def test_pearson_affine_invariance(x, data):
    y = data.draw(st.lists(st.floats(-100, 100), min_size=len(x), max_size=len(x)))
    if np.std(x) < 1e-3 or np.std(y) < 1e-3:
        return
    a = data.draw(st.floats(0.1, 10))
    b = data.draw(st.floats(-10, 10))
    assert pearson_r([a * v + b for v in x], y) == pytest.approx(pearson_r(x, y), abs=1e-9)


# ------------------------------------------------------- Krippendorff

def test_alpha_perfect_and_zero():
    assert krippendorff_alpha_interval([[3, 3, 3], [1, 1, 1], [5, 5, None]]) == 1.0
    # D_o = 1/2 and D_e = 1/2 from the coincidence sums
    assert krippendorff_alpha_interval([[1, 1], [1, 2]]) == pytest.approx(0.0, abs=1e-12)
    assert krippendorff_coincidence([[1, 1], [1, 2]]) == pytest.approx(0.0, abs=1e-12)


def test_alpha_undefined():
    with pytest.raises(UndefinedCorrelation):
        krippendorff_alpha_interval([[1, None], [2, None]])
    with pytest.raises(UndefinedCorrelation):
        krippendorff_alpha_interval([[2, 2], [2, 2]])


grids = st.integers(2, 6).flatmap(lambda k: st.lists(
    st.lists(st.one_of(st.none(), st.integers(1, 5)), min_size=k, max_size=k),
    min_size=2, max_size=8))


@settings(max_examples=300)
@given(grids, st.randoms())
def test_alpha_matches_coincidence_oracle(units, rnd):
    rows = [[v for v in u if v is not None] for u in units]
    pairable = [r for r in rows if len(r) >= 2]
    values = {v for r in pairable for v in r}
    if not pairable or len(values) < 2:
        with pytest.raises(UndefinedCorrelation):
            krippendorff_alpha_interval(units)
        return
    alpha = krippendorff_alpha_interval(units)
    assert alpha == pytest.approx(krippendorff_coincidence(units), abs=1e-9)
    assert alpha <= 1.0 + 1e-12
    # relabel annotators and reorder units
    perm = list(range(len(units[0])))
    rnd.shuffle(perm)
    shuffled = [[u[p] for p in perm] for u in units]
    rnd.shuffle(shuffled)
    assert krippendorff_alpha_interval(shuffled) == pytest.approx(alpha, abs=1e-9)


def test_alpha_duplicate_agreeing_annotator():
    base = [[1, 1], [2, 2], [3, 4], [5, 5], [4, 4]]
    dup = [u + [u[0]] for u in base]
    assert krippendorff_alpha_interval(dup) >= krippendorff_alpha_interval(base)


def test_annotation_units_pivot():
    anns = [ann("s", "e1", "a", 3), ann("s", "e1", "b", 4), ann("s", "e2", "a", 2)]
    units = annotation_units(anns, ["coherence"])
    assert units == [[3.0, 4.0], [2.0, None]]


# ------------------------------------------------- system level vectors

def test_system_level_scores():
    t = ScoreTable()
    t.add("sys", "e1", "m", 2.0)
    t.add("sys", "e2", "m", 4.0)
    assert system_level_scores(t, "m").items == (("sys", 3.0),)
    anns = [ann("sys", "e1", "a", 3), ann("sys", "e1", "b", 5)]
    assert system_level_scores(anns, "coherence").items == (("sys", 4.0),)


def test_system_level_three_systems():
    t = ScoreTable()
    vals = {"A": [0.1, 0.3], "B": [0.5, 0.5], "C": [0.9, 0.2]}
    for s, (v1, v2) in vals.items():
        t.add(s, "e1", "m", v1)
        t.add(s, "e2", "m", v2)
    got = system_level_scores(t, "m", systems=["A", "B", "C", "D"])
    assert got.systems == ["A", "B", "C"]
    assert got.values == pytest.approx([0.2, 0.5, 0.55])
    assert got.excluded == ("D",)


def test_system_level_uses_corpus_values():
    t = ScoreTable()
    t.add("A", "e1", "rouge", 0.5)
    t.corpus[("A", "bleu")] = 0.25
    assert system_level_scores(t, "bleu").items == (("A", 0.25),)


# --------------------------------------------------- correlation reports

def five_system_fixture(metric_values):
    table = ScoreTable()
    anns = []
    for k, (sys, mv) in enumerate(zip("ABCDE", metric_values)):
        table.add(sys, "e1", "m", float(mv))
        table.add(sys, "e1", "neg", -float(k))
        anns.append(ann(sys, "e1", "x", k + 1))
    return table, anns


def test_metric_human_correlation():
    table, anns = five_system_fixture([1, 2, 3, 4, 5])
    rep = metric_human_correlation(table, anns, ["m", "neg"], ["coherence"])
    assert rep.value("m", "coherence") == 1.0
    assert rep.value("neg", "coherence") == -1.0
    assert rep.n[("m", "coherence")] == 5
    # system 3 moved to the end: discordant pairs (4,3) and (5,3), C=8, D=2
    table, anns = five_system_fixture([1, 2, 4, 5, 3])
    rep = metric_human_correlation(table, anns, ["m"], ["coherence"])
    assert rep.value("m", "coherence") == pytest.approx(0.6, abs=1e-12)


def test_correlation_flags_undefined():
    table, anns = five_system_fixture([2, 2, 2, 2, 2])
    rep = metric_human_correlation(table, anns, ["m"], ["coherence", "fluency"])
    assert math.isnan(rep.value("m", "coherence"))
    assert [(r, c) for r, c, _ in rep.undefined] == [("m", "coherence"), ("m", "fluency")]
    assert rep.to_tsv().splitlines()[1] == "m\t\t"
    assert rep.metadata()["undefined"][0]["row"] == "m"


def test_too_few_systems_is_undefined():
    table, anns = five_system_fixture([1, 2, 3, 4, 5])
    rep = metric_human_correlation(table, anns[:1], ["m"], ["coherence"])
    assert math.isnan(rep.value("m", "coherence")) and rep.undefined


def test_summary_level_pools_pairs():
    table = ScoreTable()
    anns = []
    for s, rows in {"A": [(1, 1), (2, 2)], "B": [(3, 3), (4, 5)]}.items():
        for e, (mv, hv) in enumerate(rows):
            table.add(s, f"e{e}", "m", float(mv))
            anns.append(ann(s, f"e{e}", "x", hv))
    rep = metric_human_correlation(table, anns, ["m"], ["relevance"], level="summary",
                                   coefficient="pearson")
    assert rep.n[("m", "relevance")] == 4
    assert rep.value("m", "relevance") == pytest.approx(pearson_r([1, 2, 3, 4], [1, 2, 3, 5]))


def test_pairwise_matrix():
    table = ScoreTable()
    m1 = [0.1, 0.4, 0.3, 0.8]
    m2 = [1.0, 3.0, 2.0, 2.5]
    for k, sys in enumerate("ABCD"):
        table.add(sys, "e", "m1", m1[k])
        table.add(sys, "e", "m2", m2[k])
        table.add(sys, "e", "copy", m1[k])
        table.add(sys, "e", "neg", -m1[k])
    rep = pairwise_metric_matrix(table, ["m1", "m2", "copy", "neg"])
    assert np.array_equal(rep.matrix, rep.matrix.T)
    assert np.all(np.diag(rep.matrix) == 1.0)
    assert rep.value("m1", "copy") == 1.0
    assert rep.value("m1", "neg") == -1.0
    assert rep.value("m1", "m2") == pytest.approx(kendall_pairs(m1, m2))
    with pytest.raises(ValueError):
        pairwise_metric_matrix(table, ["m1"])


def test_pairwise_matrix_undefined_is_symmetric():
    table = ScoreTable()
    for k, sys in enumerate("ABC"):
        table.add(sys, "e", "flat", 1.0)
        table.add(sys, "e", "up", float(k))
    rep = pairwise_metric_matrix(table)
    cells = {(r, c) for r, c, _ in rep.undefined}
    assert cells == {("flat", "flat"), ("flat", "up"), ("up", "flat")}


# ----------------------------------------------------------- dispersion

def test_dispersion():
    anns = [ann("s", "e1", "a", 1), ann("s", "e1", "b", 5),
            ann("s", "e2", "a", 2), ann("s", "e2", "b", 3), ann("s", "e2", "c", 4),
            ann("s", "e3", "a", 4), ann("s", "e3", "b", 4),
            ann("s", "e4", "a", 4)]
    d = score_dispersion(anns, "coherence")
    assert d.stds[("s", "e1")] == 2.0
    assert d.stds[("s", "e2")] == pytest.approx(math.sqrt(2 / 3), abs=1e-12)
    assert d.stds[("s", "e3")] == 0.0
    assert d.excluded == [("s", "e4")]
    assert len(d.edges) == 9 and sum(d.histogram) == 3
    assert d.histogram[0] == 1 and d.histogram[3] == 1 and d.histogram[-1] == 1


def test_expert_crowd_correlation():
    expert = [ann("s", f"e{k}", "x", v) for k, v in enumerate([1, 2, 3, 4])]
    crowd = [ann("s", f"e{k}", "c", v, cls="crowd") for k, v in enumerate([2, 3, 4, 5])]
    r, n = expert_crowd_correlation(expert, crowd, "fluency")
    assert (r, n) == (pytest.approx(1.0), 4)
