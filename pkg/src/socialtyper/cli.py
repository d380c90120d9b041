"""Command-line driver: every pipeline stage as a subcommand.

Each run writes its primary outputs plus a ``<out>.manifest.json`` recording
the command, configuration, seed, and content hashes of all inputs and
outputs. Reruns with an identical manifest produce byte-identical outputs.
Exit status: 0 on success, 1 on data errors, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import classifier as clf
from . import corpus, embedstore, evaluation, ontology, simsearch, weaklabel
from .errors import SocialTyperError

logger = logging.getLogger("socialtyper")

DEFAULT_SEED = 17
SEED_ENV_VAR = "SOCIALTYPER_SEED"
DEFAULT_K = 50


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    anchor: Path,
    command: str,
    config: dict,
    inputs: dict[str, Path],
    outputs: dict[str, Path],
    seed: int,
) -> None:
    doc = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {
            name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()
        },
        "outputs": {
            name: {"path": str(p), "sha256": _sha256(p)} for name, p in outputs.items()
        },
    }
    manifest_path = Path(str(anchor) + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _resolve_seed(args: argparse.Namespace) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SocialTyperError(
                f"{SEED_ENV_VAR} must be an integer, got {env!r}"
            ) from None
    return DEFAULT_SEED


def _load_coarse_roots(path: str | None) -> dict[str, ontology.CoarseType]:
    if path is None:
        return dict(ontology.DEFAULT_COARSE_ROOTS)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SocialTyperError(f"{path}: invalid coarse-roots JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SocialTyperError(f"{path}: coarse roots must be a JSON object")
    return ontology.coarse_roots_from_json(doc)


def _parse_hidden(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise SocialTyperError(f"invalid hidden layer list {text!r}") from None


def _schema_with_roots(
    schema_path: str, roots_path: str | None
) -> ontology.TypeSchema:
    schema = ontology.read_schema(schema_path)
    return dataclasses.replace(schema, coarse_roots=_load_coarse_roots(roots_path))


def _train_config(args: argparse.Namespace, seed: int) -> clf.TrainConfig:
    return clf.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        seed=seed,
        shuffle=not args.no_shuffle,
    )


def _add_train_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--epochs", type=int, default=50)
    sub.add_argument("--batch-size", type=int, default=32)
    sub.add_argument("--learning-rate", type=float, default=0.01)
    sub.add_argument("--no-shuffle", action="store_true")
    sub.add_argument("--hidden", default="50", help="comma-separated layer sizes; empty for none")


def cmd_schema_induce(args: argparse.Namespace, seed: int) -> None:
    counted = ontology.read_path_file(args.paths)
    roots = _load_coarse_roots(args.coarse_roots)
    schema = ontology.induce_schema(counted, args.depth_cutoff, args.min_count, roots)
    ontology.write_schema(schema, args.out)
    logger.info("induced %d fine types", len(schema.fine_types))
    inputs = {"paths": Path(args.paths)}
    if args.coarse_roots:
        inputs["coarse_roots"] = Path(args.coarse_roots)
    _write_manifest(
        Path(args.out),
        "schema-induce",
        {"depth_cutoff": args.depth_cutoff, "min_count": args.min_count},
        inputs,
        {"out": Path(args.out)},
        seed,
    )


def cmd_align(args: argparse.Namespace, seed: int) -> None:
    entities = corpus.load_entities(args.entities)
    index = corpus.read_wikidata_index(args.wikidata)
    alignments = corpus.align_wikidata(entities, index)
    inputs = {"entities": Path(args.entities), "wikidata": Path(args.wikidata)}
    if args.dbpedia:
        dbpedia = corpus.read_dbpedia_types(args.dbpedia)
        alignments = corpus.attach_dbpedia(alignments, dbpedia)
        inputs["dbpedia"] = Path(args.dbpedia)
    corpus.write_alignments(alignments, args.out)
    logger.info(
        "aligned %d of %d entities (%d with a DBpedia path)",
        len(alignments),
        len(entities),
        sum(1 for a in alignments if a.dbpedia_path is not None),
    )
    _write_manifest(
        Path(args.out), "align", {}, inputs, {"out": Path(args.out)}, seed
    )


def cmd_weak_label(args: argparse.Namespace, seed: int) -> None:
    schema = _schema_with_roots(args.schema, args.coarse_roots)
    alignments = corpus.read_alignments(args.alignments)
    desc = embedstore.read_embeddings(args.desc_emb)
    gold = corpus.build_gold_labels(alignments, schema)
    targets = weaklabel.derive_weak_targets(alignments, schema)
    config = weaklabel.WeakLabelConfig(
        train=_train_config(args, seed),
        hidden_dims=_parse_hidden(args.hidden),
        holdout_fraction=args.holdout,
        enforce_coarse=not args.no_coarse_restrict,
    )
    labels, report = weaklabel.specialize_labels(desc, gold, targets, schema, config)
    corpus.write_labels(labels, args.out)
    with open(args.report, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    if args.model_out:
        clf.save_model(report.model, args.model_out)
    logger.info(
        "assigned %d weak labels (holdout weighted F1 %.3f over %d examples)",
        len(labels),
        report.holdout_weighted_f1,
        report.holdout_size,
    )
    inputs = {
        "alignments": Path(args.alignments),
        "schema": Path(args.schema),
        "desc_emb": Path(args.desc_emb),
    }
    if args.coarse_roots:
        inputs["coarse_roots"] = Path(args.coarse_roots)
    outputs = {"out": Path(args.out), "report": Path(args.report)}
    if args.model_out:
        outputs["model_out"] = Path(args.model_out)
    _write_manifest(
        Path(args.out),
        "weak-label",
        {
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.learning_rate,
            "hidden": args.hidden,
            "holdout": args.holdout,
            "coarse_restrict": not args.no_coarse_restrict,
            "shuffle": not args.no_shuffle,
        },
        inputs,
        outputs,
        seed,
    )


def cmd_dataset_build(args: argparse.Namespace, seed: int) -> None:
    schema = ontology.read_schema(args.schema)
    alignments = corpus.read_alignments(args.alignments)
    gold = corpus.build_gold_labels(alignments, schema)
    weak = corpus.read_labels(args.weak) if args.weak else []
    merged, counts = corpus.merge_label_sources(gold, weak)
    for rec in merged:
        if rec.fine not in schema:
            raise SocialTyperError(
                f"label {rec.fine!r} for entity {rec.entity_id!r} is not in the schema"
            )
    corpus.write_labels(merged, args.out)
    counts_path = Path(str(args.out) + ".counts.json")
    with open(counts_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(counts, fh, sort_keys=True, indent=2)
        fh.write("\n")
    logger.info("dataset: %s", counts)
    inputs = {"alignments": Path(args.alignments), "schema": Path(args.schema)}
    if args.weak:
        inputs["weak"] = Path(args.weak)
    _write_manifest(
        Path(args.out),
        "dataset-build",
        {},
        inputs,
        {"out": Path(args.out), "counts": counts_path},
        seed,
    )


def _entity_of_tweet_id(vector_id: str) -> str:
    head, sep, tail = vector_id.rpartition("#")
    if sep and tail.isdigit():
        return head
    return vector_id


def cmd_aggregate(args: argparse.Namespace, seed: int) -> None:
    per_tweet = embedstore.read_embeddings(args.emb)
    aggregated = embedstore.aggregate_mean(
        (_entity_of_tweet_id(vid), vec) for vid, vec in per_tweet.items()
    )
    embedstore.write_embeddings(aggregated, args.out)
    logger.info("aggregated %d vectors into %d entities", len(per_tweet), len(aggregated))
    _write_manifest(
        Path(args.out),
        "aggregate",
        {},
        {"emb": Path(args.emb)},
        {"out": Path(args.out)},
        seed,
    )


def cmd_fuse(args: argparse.Namespace, seed: int) -> None:
    parts = []
    inputs: dict[str, Path] = {}
    for spec_text in args.part:
        name, _, path = spec_text.partition("=")
        if not name or not path:
            raise SocialTyperError(f"--part must be name=path, got {spec_text!r}")
        parts.append((name, embedstore.read_embeddings(path)))
        inputs[f"part:{name}"] = Path(path)
    fused, segmap = embedstore.fuse(parts)
    embedstore.write_embeddings(fused, args.out)
    segments_path = Path(str(args.out) + ".segments.json")
    with open(segments_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(segmap.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    logger.info("fused %d entities into %d dims", len(fused), fused.dim)
    _write_manifest(
        Path(args.out),
        "fuse",
        {"parts": [name for name, _ in parts]},
        inputs,
        {"out": Path(args.out), "segments": segments_path},
        seed,
    )


def _read_segments(path: str | Path) -> embedstore.SegmentMap:
    try:
        with open(path, encoding="utf-8") as fh:
            return embedstore.SegmentMap.from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise SocialTyperError(f"{path}: invalid segments JSON: {exc}") from None


def cmd_train(args: argparse.Namespace, seed: int) -> None:
    schema = ontology.read_schema(args.schema)
    labels = corpus.read_labels(args.labels)
    embeddings = embedstore.read_embeddings(args.emb)
    segments_path = args.segments or str(args.emb) + ".segments.json"
    segmap = _read_segments(segments_path)
    vocab = schema.fine_names()
    vocab_index = {name: i for i, name in enumerate(vocab)}
    dataset = []
    for rec in labels:
        if rec.fine not in vocab_index:
            raise SocialTyperError(f"label {rec.fine!r} is not in the schema")
        if rec.entity_id not in embeddings:
            raise SocialTyperError(
                f"entity {rec.entity_id!r} has a label but no embedding"
            )
        dataset.append((embeddings.vector(rec.entity_id), vocab_index[rec.fine]))
    model = clf.init_model(
        embeddings.dim,
        _parse_hidden(args.hidden),
        vocab,
        segmap,
        loss_weights=(args.alpha, args.beta, args.gamma),
        seed=seed,
    )
    trained, history = clf.train(model, dataset, _train_config(args, seed))
    clf.save_model(trained, args.out)
    logger.info(
        "trained on %d examples; epoch loss %.4f -> %.4f",
        len(dataset),
        history[0],
        history[-1],
    )
    _write_manifest(
        Path(args.out),
        "train",
        {
            "alpha": args.alpha,
            "beta": args.beta,
            "gamma": args.gamma,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.learning_rate,
            "hidden": args.hidden,
            "shuffle": not args.no_shuffle,
        },
        {
            "labels": Path(args.labels),
            "emb": Path(args.emb),
            "segments": Path(segments_path),
            "schema": Path(args.schema),
        },
        {"out": Path(args.out)},
        seed,
    )


def cmd_predict(args: argparse.Namespace, seed: int) -> None:
    model = clf.load_model(args.model)
    embeddings = embedstore.read_embeddings(args.emb)
    predictions = clf.predict(model, embeddings)
    corpus.write_labels(predictions, args.out)
    logger.info("predicted %d entities", len(predictions))
    _write_manifest(
        Path(args.out),
        "predict",
        {},
        {"model": Path(args.model), "emb": Path(args.emb)},
        {"out": Path(args.out)},
        seed,
    )


def cmd_evaluate(args: argparse.Namespace, seed: int) -> None:
    preds = corpus.read_labels(args.pred)
    gold = corpus.read_labels(args.gold)
    doc: dict = {}
    extras: dict[str, float] = {}
    if args.schema:
        schema = ontology.read_schema(args.schema)
        vocab: tuple[str, ...] = schema.fine_names()
    else:
        schema = None
        vocab = tuple(sorted({rec.fine for rec in gold} | {rec.fine for rec in preds}))
    fine = evaluation.metrics(
        evaluation.confusion(preds, gold, vocab), macro_over=args.macro_over
    )
    doc["fine"] = fine.to_dict()
    text = "== fine ==\n" + evaluation.format_report_text(fine)
    if schema is not None:
        coarse = evaluation.coarse_rollup(preds, gold, schema, macro_over=args.macro_over)
        doc["coarse"] = coarse.to_dict()
        text += "\n== coarse ==\n" + evaluation.format_report_text(coarse)
    if args.secondary:
        secondary = corpus.read_labels(args.secondary)
        permissive = evaluation.permissive_accuracy(preds, gold, secondary)
        doc["permissive_accuracy"] = permissive
        extras["permissive"] = permissive
        text += f"\npermissive_accuracy  {permissive:.4f}\n"
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    text_path = Path(str(args.out) + ".txt")
    with open(text_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    inputs = {"pred": Path(args.pred), "gold": Path(args.gold)}
    if args.schema:
        inputs["schema"] = Path(args.schema)
    if args.secondary:
        inputs["secondary"] = Path(args.secondary)
    _write_manifest(
        Path(args.out),
        "evaluate",
        {"macro_over": args.macro_over},
        inputs,
        {"out": Path(args.out), "text": text_path},
        seed,
    )


_DISTRIBUTION_PRECEDENCE = (
    corpus.LabelSource.ALIGNED_DBPEDIA,
    corpus.LabelSource.WEAK_WIKIDATA,
    corpus.LabelSource.WEAK_SPECIALIZED,
    corpus.LabelSource.MANUAL_PRIMARY,
    corpus.LabelSource.PREDICTED,
)


def cmd_distribution(args: argparse.Namespace, seed: int) -> None:
    schema = ontology.read_schema(args.schema)
    best: dict[str, corpus.LabelRecord] = {}
    rank = {source: i for i, source in enumerate(_DISTRIBUTION_PRECEDENCE)}
    for path in args.labels:
        for rec in corpus.read_labels(path):
            if rec.source not in rank:
                continue
            current = best.get(rec.entity_id)
            if current is None or rank[rec.source] < rank[current.source]:
                best[rec.entity_id] = rec
    rows = evaluation.type_distribution(list(best.values()), schema)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("coarse\tfine\tratio\tcumulative\n")
        for row in rows:
            fh.write(f"{row.coarse}\t{row.fine}\t{row.ratio:.6f}\t{row.cumulative:.6f}\n")
    logger.info("distribution over %d entities, %d types", len(best), len(rows))
    inputs = {f"labels:{i}": Path(p) for i, p in enumerate(args.labels)}
    inputs["schema"] = Path(args.schema)
    _write_manifest(
        Path(args.out), "distribution", {}, inputs, {"out": Path(args.out)}, seed
    )


def cmd_coverage_report(args: argparse.Namespace, seed: int) -> None:
    entities = corpus.load_entities(args.entities)
    alignments = corpus.read_alignments(args.alignments)
    bins = corpus.coverage_by_popularity(entities, alignments, args.bin_size)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "bin\tsize\twikidata_aligned\twikidata_ratio\tdbpedia_aligned\tdbpedia_ratio\n"
        )
        for b in bins:
            fh.write(
                f"{b.bin_index}\t{b.size}\t{b.wikidata_aligned}\t{b.wikidata_ratio:.6f}"
                f"\t{b.dbpedia_aligned}\t{b.dbpedia_ratio:.6f}\n"
            )
    _write_manifest(
        Path(args.out),
        "coverage-report",
        {"bin_size": args.bin_size},
        {"entities": Path(args.entities), "alignments": Path(args.alignments)},
        {"out": Path(args.out)},
        seed,
    )


def cmd_similar(args: argparse.Namespace, seed: int) -> None:
    first = embedstore.read_embeddings(args.first)
    inputs = {"first": Path(args.first)}
    if args.second:
        second = embedstore.read_embeddings(args.second)
        inputs["second"] = Path(args.second)
        if args.method == "rerank":
            ranking = simsearch.rerank(args.query, first, second, args.k)
        elif args.method == "concat":
            ranking = simsearch.concat_topk(args.query, first, second, args.k)
        else:
            ranking = simsearch.averaged_topk(
                args.query, first, second, args.k, args.weight
            )
    else:
        if args.method != "rerank":
            raise SocialTyperError(f"--method {args.method} needs --second")
        ranking = simsearch.topk(args.query, first, args.k)
    if ranking.warning:
        logger.warning("%s", ranking.warning)
    handles: dict[str, str] = {}
    if args.entities:
        handles = {e.id: e.handle for e in corpus.load_entities(args.entities)}
        inputs["entities"] = Path(args.entities)
    lines = [
        f"{rank}\t{eid}\t{handles.get(eid, '')}\t{score!r}\n"
        for rank, (eid, score) in enumerate(ranking.entries, start=1)
    ]
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(lines)
        _write_manifest(
            Path(args.out),
            "similar",
            {
                "query": args.query,
                "k": args.k,
                "method": args.method,
                "weight": args.weight,
            },
            inputs,
            {"out": Path(args.out)},
            seed,
        )
    else:
        sys.stdout.writelines(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialtyper",
        description="Semantic typing of a social knowledge base.",
    )
    parser.add_argument("--seed", type=int, default=None, help=f"overrides ${SEED_ENV_VAR}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schema-induce", help="induce the fine/coarse type schema")
    p.add_argument("--paths", required=True)
    p.add_argument("--min-count", type=int, default=ontology.DEFAULT_MIN_COUNT)
    p.add_argument("--depth-cutoff", type=int, default=ontology.DEFAULT_DEPTH_CUTOFF)
    p.add_argument("--coarse-roots", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_schema_induce)

    p = sub.add_parser("align", help="join entities against KB dump extracts")
    p.add_argument("--entities", required=True)
    p.add_argument("--wikidata", required=True)
    p.add_argument("--dbpedia", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("weak-label", help="specialize labels from description embeddings")
    p.add_argument("--alignments", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--desc-emb", required=True)
    p.add_argument("--coarse-roots", default=None)
    p.add_argument("--holdout", type=float, default=0.01)
    p.add_argument("--no-coarse-restrict", action="store_true")
    p.add_argument("--model-out", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_weak_label)

    p = sub.add_parser("dataset-build", help="materialize the training label set")
    p.add_argument("--alignments", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--weak", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dataset_build)

    p = sub.add_parser("aggregate", help="mean per-tweet vectors into entity vectors")
    p.add_argument("--emb", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("fuse", help="concatenate embedding spaces")
    p.add_argument("--part", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("train", help="train the type classifier")
    p.add_argument("--labels", required=True)
    p.add_argument("--emb", required=True)
    p.add_argument("--segments", default=None, help="defaults to <emb>.segments.json")
    p.add_argument("--schema", required=True)
    p.add_argument("--alpha", type=float, default=clf.DEFAULT_LOSS_WEIGHTS[0])
    p.add_argument("--beta", type=float, default=clf.DEFAULT_LOSS_WEIGHTS[1])
    p.add_argument("--gamma", type=float, default=clf.DEFAULT_LOSS_WEIGHTS[2])
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--schema", default=None)
    p.add_argument("--secondary", default=None)
    p.add_argument(
        "--macro-over",
        choices=(evaluation.MACRO_OVER_UNION, evaluation.MACRO_OVER_GOLD),
        default=evaluation.MACRO_OVER_UNION,
    )
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict types for an embedding set")
    p.add_argument("--model", required=True)
    p.add_argument("--emb", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("distribution", help="type-distribution report")
    p.add_argument("--labels", action="append", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distribution)

    p = sub.add_parser("coverage-report", help="alignment coverage by popularity bins")
    p.add_argument("--entities", required=True)
    p.add_argument("--alignments", required=True)
    p.add_argument("--bin-size", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coverage_report)

    p = sub.add_parser("similar", help="entity similarity query")
    p.add_argument("--query", required=True)
    p.add_argument("--first", required=True)
    p.add_argument("--second", default=None)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--entities", default=None)
    p.add_argument("--method", choices=("rerank", "concat", "average"), default="rerank")
    p.add_argument("--weight", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_similar)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        seed = _resolve_seed(args)
        args.func(args, seed)
    except (SocialTyperError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
