"""Seeded toy corpora: articles, references, system outputs and ratings.

Used by the demo scripts and the test suite; nothing here is tuned to look
like real news text, only to exercise every code path.
"""

from __future__ import annotations

import random

from .corpus import DIMENSIONS, HumanAnnotation, SourceDocument, SystemOutput

WORDS = ("the a city council said on monday that new plans for river park would cost "
         "more than expected after heavy rain flooded roads near station police "
         "officials warned residents to stay home while crews repaired damage").split()


def _sentence(rng, lo=5, hi=12):
    toks = [rng.choice(WORDS) for _ in range(rng.randint(lo, hi))]
    return toks[0].capitalize() + " " + " ".join(toks[1:]) + "."


def make_documents(n: int, seed: int = 0, n_refs: int = 1) -> list[SourceDocument]:
    rng = random.Random(seed)
    docs = []
    for i in range(n):
        article = " ".join(_sentence(rng) for _ in range(rng.randint(4, 8)))
        refs = tuple(" ".join(_sentence(rng) for _ in range(2)) for _ in range(n_refs))
        docs.append(SourceDocument(f"ex{i:04d}", article, refs))
    return docs


def make_outputs(docs, systems, seed: int = 0) -> list[SystemOutput]:
    """System ``k`` copies a longer stretch of the reference the larger ``k``
    is, padding with article sentences, so systems have a known ordering."""
    rng = random.Random(seed)
    outs = []
    for k, sys_id in enumerate(systems):
        keep = (k + 1) / len(systems)
        for d in docs:
            ref = d.references[0].split()
            cut = max(1, int(len(ref) * keep))
            art = d.text.split()
            start = rng.randrange(max(1, len(art) - 8))
            outs.append(SystemOutput(sys_id, d.example_id,
                                     " ".join(ref[:cut] + art[start:start + 8 - cut // 3])))
    return outs


def make_annotations(outputs, annotators=("x1", "x2", "x3"), annotator_class="expert",
                     round: int = 1, seed: int = 0, noise: float = 0.0,
                     quality=None) -> list[HumanAnnotation]:
    """Ratings around ``quality[system]`` (default: system rank order).
    With ``noise`` 0 every annotator gives the same score."""
    rng = random.Random(seed)
    systems = sorted({o.system_id for o in outputs})
    if quality is None:
        quality = {s: 1 + 4 * k / max(1, len(systems) - 1) for k, s in enumerate(systems)}
    anns = []
    for o in outputs:
        for a in annotators:
            dims = {}
            for dim in DIMENSIONS:
                v = quality[o.system_id] + rng.gauss(0.0, noise) if noise else quality[o.system_id]
                dims[dim] = int(min(5, max(1, round_half(v))))
            anns.append(HumanAnnotation(o.system_id, o.example_id, a, annotator_class,
                                        round, **dims))
    return anns


def round_half(v: float) -> int:
    return int(v + 0.5)
