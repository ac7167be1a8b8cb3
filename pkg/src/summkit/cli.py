"""Command-line front end: ``evaluate``, ``correlate``, ``agreement``, ``report``.

Every command writes into the run's output directory; files are rendered
deterministically (sorted keys, ``repr`` floats, no timestamps) so a rerun
with unchanged inputs reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from collections import defaultdict
from pathlib import Path

from . import __version__, analytics
from .config import ConfigError, RunConfig, load_config
from .corpus import (DIMENSIONS, FormatError, ScoreTable, align_outputs,
                     detect_duplicate_references, load_annotations, load_dataset,
                     load_external_scores, load_outputs)
from .embedding import load_embeddings
from .engine import EMBEDDING_METRICS, default_registry, evaluate_batch
from .overlap import load_synonyms

log = logging.getLogger("summkit")


class ValidationError(RuntimeError):
    pass


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _require(path, what):
    if not path:
        raise ValidationError(f"{what} not configured")
    if not Path(path).exists():
        raise ValidationError(f"{what} not found: {path}")


# ------------------------------------------------------------- evaluate

def _validate_evaluate(cfg: RunConfig):
    problems = []
    for path, what in [(cfg.dataset, "dataset"), *((o, "outputs file") for o in cfg.outputs or [None])]:
        try:
            _require(path, what)
        except ValidationError as exc:
            problems.append(str(exc))
    for path, what in [(cfg.embeddings, "embeddings"), (cfg.synonyms, "synonym table"),
                       (cfg.annotations, "annotations")]:
        if path and not Path(path).exists():
            problems.append(f"{what} not found: {path}")
    for path in cfg.external_scores:
        if not Path(path).exists():
            problems.append(f"external score file not found: {path}")
    if cfg.multi_ref_policy not in ("max", "mean"):
        problems.append(f"unknown multi-reference policy {cfg.multi_ref_policy!r}")
    if cfg.parallelism < 1:
        problems.append("parallelism must be >= 1")
    registry = default_registry(policy=cfg.multi_ref_policy)
    for name in cfg.metrics or []:
        if name not in registry:
            problems.append(f"unknown metric {name!r}")
        elif name in EMBEDDING_METRICS and not cfg.embeddings:
            problems.append(f"metric {name!r} needs embeddings (run.embeddings)")
    for name, params in cfg.overrides.items():
        if name not in registry:
            problems.append(f"override for unknown metric {name!r}")
            continue
        unknown = set(params) - set(registry[name].config.params)
        if unknown:
            problems.append(f"{name}: unknown parameters {sorted(unknown)}")
    if problems:
        raise ValidationError("; ".join(problems))


def cmd_evaluate(cfg: RunConfig) -> int:
    _validate_evaluate(cfg)
    out = Path(cfg.out)
    manifest = {"command": "evaluate", "toolkit": "summkit", "version": __version__,
                "config": cfg.as_dict(), "complete": False, "errors": [], "warnings": []}
    inputs = [cfg.dataset, *cfg.outputs, *cfg.external_scores]
    inputs += [p for p in (cfg.embeddings, cfg.synonyms) if p]
    manifest["inputs"] = {p: file_digest(p) for p in inputs}
    try:
        dataset = load_dataset(cfg.dataset)
        outputs = []
        for path in cfg.outputs:
            outputs.extend(load_outputs(path, system_id=Path(path).stem))
        instances, unmatched = align_outputs(outputs, dataset)
        manifest["unmatched"] = [
            {"system_id": u.output.system_id, "id": u.output.example_id, "reason": u.reason,
             "candidates": list(u.candidates)} for u in unmatched]
        manifest["duplicate_references"] = detect_duplicate_references(dataset)
        if unmatched:
            manifest["warnings"].append(f"{len(unmatched)} outputs could not be aligned")
        empty = sum(i.is_empty for i in instances)
        if empty:
            manifest["warnings"].append(f"{empty} empty candidate summaries")

        embeddings = load_embeddings(cfg.embeddings) if cfg.embeddings else None
        synonyms = load_synonyms(cfg.synonyms) if cfg.synonyms else None
        if embeddings is not None:
            manifest["embeddings"] = {"dim": embeddings.dim, "vocabulary": len(embeddings)}
        registry = default_registry(embeddings, synonyms, cfg.multi_ref_policy, cfg.overrides)
        metrics = cfg.metrics or registry.default_metrics()
        table = evaluate_batch(instances, metrics, registry, cfg.parallelism)
        for path in cfg.external_scores:
            table.merge_external(load_external_scores(path))
        manifest["fingerprints"] = dict(sorted(table.fingerprints.items()))
        manifest["errors"] = [{"cell": list(k), "flag": f} for k, f in table.errors()]
        manifest["counts"] = {"documents": len(dataset), "outputs": len(outputs),
                              "aligned": len(instances), "unmatched": len(unmatched),
                              "metrics": len(metrics)}
        _write(out / "scores.tsv", table.to_tsv())
        _write(out / "system_scores.tsv", table.aggregates_tsv())
        manifest["complete"] = True
    except Exception as exc:
        manifest["errors"].append(f"{type(exc).__name__}: {exc}")
        raise
    finally:
        _write(out / "manifest.json", _json(manifest))
    return 1 if manifest["errors"] else 0


# ------------------------------------------------------------ correlate

def _latest_rounds(anns):
    """Keep each annotator's latest round per (system, example)."""
    best = {}
    for a in anns:
        k = (a.annotator_id, a.system_id, a.example_id)
        if k not in best or a.round > best[k].round:
            best[k] = a
    return [best[k] for k in sorted(best)]


def _select_annotations(cfg: RunConfig):
    anns = load_annotations(cfg.annotations)
    if cfg.expert_only:
        anns = [a for a in anns if a.annotator_class == "expert"]
    if cfg.round is not None:
        anns = [a for a in anns if a.round == cfg.round]
    else:
        anns = _latest_rounds(anns)
    return anns


def _load_scores(cfg: RunConfig) -> ScoreTable:
    out = Path(cfg.out)
    if (out / "scores.tsv").exists():
        table = ScoreTable.load(out)
    else:
        table = ScoreTable()
    present = set(table.metrics())
    for path in cfg.external_scores:
        recs = [r for r in load_external_scores(path) if r.metric_name not in present]
        table.merge_external(recs)
    return table


def cmd_correlate(cfg: RunConfig) -> int:
    _require(cfg.annotations, "annotation file")
    if cfg.level not in analytics.LEVELS:
        raise ValidationError(f"unknown level {cfg.level!r}")
    if cfg.coefficient not in analytics.COEFFICIENTS:
        raise ValidationError(f"unknown coefficient {cfg.coefficient!r}")
    table = _load_scores(cfg)
    if not table.cells and not table.corpus:
        raise ValidationError("no scores found: run `summkit evaluate` or configure external scores")
    anns = _select_annotations(cfg)
    if not anns:
        raise ValidationError("no annotations left after filtering")
    systems = sorted(set(table.systems()) & {a.system_id for a in anns})
    if len(systems) < 2:
        raise ValidationError(f"need at least 2 systems with scores and annotations, got {len(systems)}")
    metrics = table.metrics()
    out = Path(cfg.out)
    tag = cfg.level
    human = analytics.metric_human_correlation(table, anns, metrics, DIMENSIONS,
                                               cfg.level, cfg.coefficient)
    pairwise = analytics.pairwise_metric_matrix(table, metrics, cfg.coefficient, cfg.level)
    filters = {"expert_only": cfg.expert_only, "round": cfg.round,
               "annotations": len(anns), "systems": systems}
    _write(out / f"correlation_{tag}.tsv", human.to_tsv())
    _write(out / f"correlation_{tag}.meta.json", _json({**human.metadata(), "filters": filters}))
    _write(out / f"pairwise_{tag}.tsv", pairwise.to_tsv())
    _write(out / f"pairwise_{tag}.meta.json", _json({**pairwise.metadata(), "filters": filters}))
    return 0


# ------------------------------------------------------------ agreement

def _groups(anns):
    groups = defaultdict(list)
    for a in anns:
        groups[(a.annotator_class, a.round)].append(a)
    return dict(sorted(groups.items()))


def agreement_rows(anns):
    rows = []
    for (cls, rnd), group in _groups(anns).items():
        for dim in (*DIMENSIONS, "pooled"):
            dims = DIMENSIONS if dim == "pooled" else (dim,)
            units = analytics.annotation_units(group, dims)
            n_values = sum(sum(v is not None for v in u) for u in units if
                           sum(v is not None for v in u) >= 2)
            try:
                alpha, flag = analytics.krippendorff_alpha_interval(units), ""
            except analytics.UndefinedCorrelation as exc:
                alpha, flag = math.nan, f"undefined: {exc}"
            rows.append((cls, rnd, dim, alpha, len(units), n_values, flag))
    return rows


def cmd_agreement(cfg: RunConfig) -> int:
    _require(cfg.annotations, "annotation file")
    anns = load_annotations(cfg.annotations)
    out = Path(cfg.out)
    lines = ["class\tround\tdimension\talpha\tunits\tpairable_values\tflag"]
    for cls, rnd, dim, alpha, units, nv, flag in agreement_rows(anns):
        a = "" if math.isnan(alpha) else repr(alpha)
        lines.append(f"{cls}\t{rnd}\t{dim}\t{a}\t{units}\t{nv}\t{flag}")
    _write(out / "agreement.tsv", "\n".join(lines) + "\n")

    edges = analytics.HIST_EDGES
    hist = ["class\tround\tdimension\tbin_lo\tbin_hi\tcount"]
    excluded = ["class\tround\tdimension\tsystem_id\texample_id"]
    for (cls, rnd), group in _groups(anns).items():
        for dim in DIMENSIONS:
            disp = analytics.score_dispersion(group, dim)
            for k, count in enumerate(disp.histogram):
                hist.append(f"{cls}\t{rnd}\t{dim}\t{edges[k]}\t{edges[k + 1]}\t{count}")
            for s, e in disp.excluded:
                excluded.append(f"{cls}\t{rnd}\t{dim}\t{s}\t{e}")
    _write(out / "dispersion.tsv", "\n".join(hist) + "\n")
    _write(out / "dispersion_excluded.tsv", "\n".join(excluded) + "\n")

    expert = _latest_rounds([a for a in anns if a.annotator_class == "expert"])
    crowd = [a for a in anns if a.annotator_class == "crowd"]
    rows = ["dimension\tpearson_r\tn\tflag"]
    if expert and crowd:
        for dim in DIMENSIONS:
            try:
                r, n = analytics.expert_crowd_correlation(expert, crowd, dim)
                rows.append(f"{dim}\t{r!r}\t{n}\t")
            except ValueError as exc:
                rows.append(f"{dim}\t\t\tundefined: {exc}")
    _write(out / "expert_crowd.tsv", "\n".join(rows) + "\n")
    return 0


# --------------------------------------------------------------- report

def _read_tsv(path: Path):
    rows = [line.split("\t") for line in path.read_text(encoding="utf-8").splitlines()]
    return rows[0], rows[1:]


def _md_table(header, rows):
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(out)


def _fmt(v: str) -> str:
    try:
        return f"{float(v):.4f}"
    except ValueError:
        return v or "n/a"


def cmd_report(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if not (out / "system_scores.tsv").exists():
        raise ValidationError(f"nothing to report in {out}: run `summkit evaluate` first"
                              " (then optionally `correlate` and `agreement`)")
    doc = ["# Summarization evaluation report", ""]

    _, rows = _read_tsv(out / "system_scores.tsv")
    systems = sorted({r[0] for r in rows})
    metrics = sorted({r[1] for r in rows})
    cell = {(r[0], r[1]): r[2] for r in rows}
    wide = [["system_id", *metrics]]
    wide += [[s, *(cell.get((s, m), "") for m in metrics)] for s in systems]
    _write(out / "system_metric_matrix.tsv", "\n".join("\t".join(r) for r in wide) + "\n")
    doc += ["## System scores", "",
            _md_table(["system", *metrics],
                      [[s, *(_fmt(cell.get((s, m), "")) for m in metrics)] for s in systems]), ""]

    corr = sorted(out.glob("correlation_*.tsv"))
    if corr:
        doc += ["## Metric and human judgment correlations", ""]
        for path in corr:
            header, body = _read_tsv(path)
            meta = json.loads(path.with_suffix(".meta.json").read_text(encoding="utf-8"))
            doc += [f"### {meta['coefficient']}, {meta['level']} level", "",
                    _md_table(["metric", *header[1:]], [[r[0], *map(_fmt, r[1:])] for r in body]),
                    ""]
            if meta["undefined"]:
                doc += [f"Undefined cells: {len(meta['undefined'])}", ""]
        for path in sorted(out.glob("pairwise_*.tsv")):
            header, body = _read_tsv(path)
            doc += [f"### Pairwise metric correlations ({path.stem.split('_', 1)[1]} level)", "",
                    _md_table(["", *header[1:]], [[r[0], *map(_fmt, r[1:])] for r in body]), ""]
    else:
        doc += ["## Metric and human judgment correlations", "",
                "Omitted: run `summkit correlate` to produce this section.", ""]

    if (out / "agreement.tsv").exists():
        header, body = _read_tsv(out / "agreement.tsv")
        doc += ["## Annotator agreement (Krippendorff's interval alpha)", "",
                _md_table(header, [[*r[:3], _fmt(r[3]), *r[4:]] for r in body]), ""]
        if (out / "expert_crowd.tsv").exists():
            header, body = _read_tsv(out / "expert_crowd.tsv")
            if body:
                doc += ["Expert vs crowd (Pearson r of per-summary means):", "",
                        _md_table(header, [[r[0], _fmt(r[1]), *r[2:]] for r in body]), ""]
    else:
        doc += ["## Annotator agreement", "",
                "Omitted: run `summkit agreement` to produce this section.", ""]

    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        doc += ["## Metric configuration fingerprints", "",
                _md_table(["metric", "fingerprint"],
                          [[m, f] for m, f in sorted(manifest.get("fingerprints", {}).items())]),
                ""]
        if not manifest.get("complete", False):
            doc += ["**Warning:** the evaluate run is marked incomplete.", ""]
    _write(out / "report.md", "\n".join(doc))
    return 0


# ----------------------------------------------------------------- main

COMMANDS = {"evaluate": cmd_evaluate, "correlate": cmd_correlate,
            "agreement": cmd_agreement, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="summkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"summkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="plain-text config file (section.key = value)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--parallelism", type=int, help="worker processes for scoring")
        p.add_argument("--metrics", help="comma-separated metric names")
        p.add_argument("--expert-only", action="store_true", default=None,
                       help="use expert annotations only")
        p.add_argument("--round", type=int, help="annotation round to use")
        p.add_argument("--level", choices=analytics.LEVELS, help="correlation level")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, out=args.out, parallelism=args.parallelism,
                          metrics=args.metrics, expert_only=args.expert_only,
                          round=args.round, level=args.level)
        return COMMANDS[args.command](cfg)
    except (ValidationError, ConfigError, FormatError) as exc:
        print(f"summkit {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
