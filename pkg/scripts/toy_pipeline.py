"""End-to-end run on a seeded synthetic corpus.

Writes a dataset, five systems, random word vectors, expert and crowd
ratings and a run config into ``--dir``, then runs evaluate, correlate,
agreement and report through the CLI.

    python3 scripts/toy_pipeline.py --dir /tmp/toy --examples 50
"""

import argparse
from pathlib import Path

import numpy as np

from summkit.cli import main as cli
from summkit.corpus import dump_annotations, dump_dataset, dump_outputs
from summkit.synthetic import WORDS, make_annotations, make_documents, make_outputs


def build(root: Path, n_examples: int, seed: int):
    root.mkdir(parents=True, exist_ok=True)
    systems = [f"M{k}" for k in range(5)]
    docs = make_documents(n_examples, seed=seed, n_refs=2)
    outputs = make_outputs(docs, systems, seed=seed)
    dump_dataset(docs, root / "data.jsonl")
    for s in systems:
        dump_outputs([o for o in outputs if o.system_id == s], root / f"{s}.jsonl")
    rng = np.random.default_rng(seed)
    with open(root / "vectors.txt", "w") as fh:
        for w in WORDS:
            fh.write(w + " " + " ".join(f"{v:.6f}" for v in rng.normal(size=16)) + "\n")
    anns = make_annotations(outputs, seed=seed, noise=0.7)
    anns += make_annotations(outputs, annotators=("c1", "c2", "c3", "c4", "c5"),
                             annotator_class="crowd", seed=seed + 1, noise=1.2)
    dump_annotations(anns, root / "annotations.jsonl")
    cfg = root / "run.cfg"
    cfg.write_text("\n".join([
        "run.dataset = data.jsonl",
        "run.outputs = " + ", ".join(f"{s}.jsonl" for s in systems),
        "run.embeddings = vectors.txt",
        "run.annotations = annotations.jsonl",
        "run.out = results",
        "run.parallelism = 2",
        "rouge_1.use_stemmer = true",
    ]) + "\n")
    return cfg


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dir", type=Path, default=Path("toy_run"))
    parser.add_argument("--examples", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    cfg = build(args.dir, args.examples, args.seed)
    for cmd in ("evaluate", "correlate", "agreement", "report"):
        status = cli([cmd, "--config", str(cfg)])
        print(f"{cmd}: exit {status}")
        if status == 2:
            raise SystemExit(status)
    print(f"report: {args.dir / 'results' / 'report.md'}")


if __name__ == "__main__":
    main()
