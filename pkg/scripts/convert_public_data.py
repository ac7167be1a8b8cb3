"""Convert public releases into summkit's jsonl formats.

annotations: the aligned model-annotation file (one record per system
summary with ``expert_annotations`` and ``turker_annotations`` lists) ->
one summkit annotation record per rating, plus per-system output files.

cnndm: a CNN/DailyMail test split exported as jsonl with ``id``, ``article``
and ``highlights`` fields -> summkit dataset jsonl.

    python3 scripts/convert_public_data.py annotations aligned.jsonl out/
    python3 scripts/convert_public_data.py cnndm test.jsonl out/dataset.jsonl
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path

from summkit.corpus import (DIMENSIONS, HumanAnnotation, SourceDocument, SystemOutput,
                            dump_annotations, dump_dataset, dump_outputs)


def convert_annotations(src, out_dir: Path, expert_round: int):
    anns, outputs = [], defaultdict(list)
    with open(src, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            sys_id, ex = rec["model_id"], str(rec["id"])
            outputs[sys_id].append(SystemOutput(sys_id, ex, rec["decoded"]))
            for cls, key, rnd in (("expert", "expert_annotations", expert_round),
                                  ("crowd", "turker_annotations", 1)):
                for k, a in enumerate(rec.get(key, [])):
                    anns.append(HumanAnnotation(sys_id, ex, f"{cls}{k}", cls, rnd,
                                                *(int(round(a[d])) for d in DIMENSIONS)))
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_annotations(anns, out_dir / "annotations.jsonl")
    for sys_id, outs in sorted(outputs.items()):
        dump_outputs(outs, out_dir / f"{sys_id}.jsonl")
    print(f"{len(anns)} ratings, {len(outputs)} systems -> {out_dir}")


def convert_cnndm(src, dst: Path):
    docs = []
    with open(src, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                docs.append(SourceDocument(str(rec["id"]), rec["article"], (rec["highlights"],)))
    dump_dataset(docs, dst)
    print(f"{len(docs)} documents -> {dst}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    a = sub.add_parser("annotations")
    a.add_argument("src")
    a.add_argument("out_dir", type=Path)
    a.add_argument("--expert-round", type=int, default=2,
                   help="round label for the released expert ratings")
    c = sub.add_parser("cnndm")
    c.add_argument("src")
    c.add_argument("dst", type=Path)
    args = parser.parse_args()
    if args.kind == "annotations":
        convert_annotations(args.src, args.out_dir, args.expert_round)
    else:
        convert_cnndm(args.src, args.dst)


if __name__ == "__main__":
    main()
