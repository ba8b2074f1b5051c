"""Command-line entry point.

Subcommands: ingest, build-index, classify, evaluate, stats, ablate,
serve-stub. Option precedence is flags > environment (``VFC_`` prefix) >
config file (``key=value`` lines via ``--config``) > built-in defaults
(alpha 0.7, k 10). Runtime failures exit 1 with a machine-readable JSON
error on stderr; usage errors exit 2.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass

from . import benchmark as bench_mod
from .candidates import FilterConfig, LexiconTagger, load_word_list
from .embedding import HashEmbedder, PrecomputedStore, RemoteEmbeddingClient
from .errors import EmptyInputError, VfcError
from .evaluation import (
    evaluate_predictions,
    join_predictions,
    load_predictions,
    load_truths,
    LabeledPrediction,
)
from .index import build_index, load_index, save_index
from .ingestion import (
    canonical_jsonl,
    corpus_stats,
    ingest_corpus,
    load_manifest,
    validate_manifest,
)
from .scoring import ClassifierConfig, classify_batch
from .stubserver import serve

log = logging.getLogger("vfclass")

DEFAULTS = {
    "alpha": 0.7,
    "k": 10,
    "probes": None,
    "seed": 42,
    "threads": os.cpu_count() or 1,
    "embed_timeout": 10.0,
}


def _load_config_file(path) -> dict[str, str]:
    conf: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise EmptyInputError(f"config line {lineno}: expected key=value")
            key, value = line.split("=", 1)
            conf[key.strip()] = value.strip()
    return conf


def resolve_option(name, flag_value, file_conf, cast=str, default=None):
    """flags > VFC_<NAME> env > config file > default."""
    if flag_value is not None:
        return flag_value
    env_value = os.environ.get(f"VFC_{name.upper()}")
    if env_value is not None:
        return cast(env_value)
    if name in file_conf:
        return cast(file_conf[name])
    return default


def _parse_probes(value):
    if value is None or value == "all":
        return value
    return int(value)


def _out_handle(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _provider(args, file_conf):
    embeddings = getattr(args, "embeddings", None)
    embed_url = resolve_option("embed_url", getattr(args, "embed_url", None), file_conf)
    if embeddings:
        return PrecomputedStore.load(embeddings)
    if embed_url:
        timeout = resolve_option(
            "embed_timeout", getattr(args, "embed_timeout", None), file_conf,
            cast=float, default=DEFAULTS["embed_timeout"],
        )
        dim = resolve_option(
            "embed_dim", getattr(args, "embed_dim", None), file_conf, cast=int
        )
        return RemoteEmbeddingClient(embed_url, dim=dim, timeout=timeout)
    raise EmptyInputError(
        "no embedding provider: pass --embeddings or --embed-url",
        code="provider-unavailable",
    )


def _filter_config(args) -> FilterConfig:
    stop_path = getattr(args, "stop_words", None)
    meta_path = getattr(args, "meta_words", None)
    return FilterConfig(
        stop_words=load_word_list(stop_path) if stop_path else None,
        meta_words=load_word_list(meta_path) if meta_path else None,
    )


def _tagger(args) -> LexiconTagger:
    return LexiconTagger(lexicon_path=getattr(args, "lexicon", None))


def _classifier_config(args, file_conf) -> ClassifierConfig:
    return ClassifierConfig(
        k=resolve_option("k", args.k, file_conf, cast=int, default=DEFAULTS["k"]),
        alpha=resolve_option(
            "alpha", args.alpha, file_conf, cast=float, default=DEFAULTS["alpha"]
        ),
        prompt_template=resolve_option(
            "prompt", getattr(args, "prompt", None), file_conf, default=""
        ),
        probes=_parse_probes(
            resolve_option("probes", getattr(args, "probes", None), file_conf)
        ),
        filter=_filter_config(args),
    )


def _prediction_json(item) -> dict:
    if item.error is not None:
        return {"id": item.id, "error": item.error_code, "message": item.error}
    pred = item.prediction
    return {
        "id": item.id,
        "label": pred.label,
        "fallback": pred.fallback,
        "ranked": [
            {
                "candidate": b.candidate,
                "visual": b.visual,
                "textual": b.textual,
                "fused": b.fused,
            }
            for b in pred.ranked
        ],
        "retrieved": [
            {"id": h.record.id, "score": h.score} for h in pred.retrieved
        ],
    }


def _cmd_ingest(args, file_conf) -> int:
    records = ingest_corpus(args.corpus, fmt=args.format, strict=args.strict)
    handle, close = _out_handle(args.out)
    try:
        handle.write(canonical_jsonl(records))
    finally:
        if close:
            handle.close()
    log.info("ingested %d records", len(records))
    return 0


def _cmd_stats(args, file_conf) -> int:
    records = ingest_corpus(args.corpus, fmt=args.format)
    stats = corpus_stats(records, _tagger(args), _filter_config(args))
    handle, close = _out_handle(args.out)
    try:
        json.dump(stats.to_dict(), handle, indent=2)
        handle.write("\n")
    finally:
        if close:
            handle.close()
    return 0


def _cmd_build_index(args, file_conf) -> int:
    records = ingest_corpus(args.corpus, fmt=args.format, strict=args.strict)
    provider = _provider(args, file_conf)
    seed = resolve_option("seed", args.seed, file_conf, cast=int,
                          default=DEFAULTS["seed"])
    index = build_index(
        records,
        provider,
        structure=args.structure,
        num_partitions=args.partitions,
        seed=seed,
        dedup=args.dedup,
    )
    save_index(index, args.out)
    log.info("built %s index with %d records -> %s",
             index.structure, len(index), args.out)
    return 0


def _read_queries(path) -> list[tuple[str, object]]:
    queries: list[tuple[str, object]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            qid = str(obj.get("id", f"line-{lineno}"))
            if "embedding" in obj:
                queries.append((qid, obj["embedding"]))
            elif "image_ref" in obj:
                queries.append((qid, str(obj["image_ref"])))
            else:
                raise EmptyInputError(
                    f"queries line {lineno}: need 'embedding' or 'image_ref'"
                )
    if not queries:
        raise EmptyInputError("queries file is empty")
    return queries


def _cmd_classify(args, file_conf) -> int:
    index = load_index(args.index)
    provider = _provider(args, file_conf)
    config = _classifier_config(args, file_conf)
    threads = resolve_option("threads", args.threads, file_conf, cast=int,
                             default=DEFAULTS["threads"])
    queries = _read_queries(args.queries)
    results = classify_batch(
        queries, index, provider, _tagger(args), config, threads=threads
    )
    handle, close = _out_handle(args.out)
    try:
        for item in results:
            handle.write(json.dumps(_prediction_json(item), ensure_ascii=False))
            handle.write("\n")
    finally:
        if close:
            handle.close()
    failures = sum(1 for r in results if r.error is not None)
    log.info("classified %d queries (%d failures)", len(results), failures)
    return 0


def _make_eval_embedder(args, file_conf):
    if getattr(args, "embeddings", None) or resolve_option(
        "embed_url", getattr(args, "embed_url", None), file_conf
    ):
        return _provider(args, file_conf)
    return HashEmbedder(64)


def _cmd_evaluate(args, file_conf) -> int:
    pairs = load_predictions(args.predictions)
    truths = load_truths(args.truths)
    labeled = join_predictions(pairs, truths)
    report = evaluate_predictions(labeled, _make_eval_embedder(args, file_conf),
                                  mode=args.mode)
    handle, close = _out_handle(args.out)
    try:
        json.dump(report.to_dict(), handle, indent=2)
        handle.write("\n")
    finally:
        if close:
            handle.close()
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
    return 0


SWEEPS = ("alpha", "k", "database", "scoring-mode", "filter-stages")
SCORING_MODES = ("visual", "textual", "multimodal")


@dataclass
class AblationSpec:
    """One sweep variable, its values, and the fixed configuration."""

    sweep: str
    values: list[str]
    base: ClassifierConfig
    eval_mode: str = "auto"
    seed: int = 42
    num_queries: int = 200

    def __post_init__(self):
        if self.sweep not in SWEEPS:
            raise EmptyInputError(f"unknown sweep variable {self.sweep!r}")
        if not self.values:
            raise EmptyInputError("sweep needs at least one value")

    def config_for(self, value: str) -> ClassifierConfig:
        config = ClassifierConfig(
            k=self.base.k, alpha=self.base.alpha,
            prompt_template=self.base.prompt_template, probes=self.base.probes,
            filter=self.base.filter,
        )
        try:
            if self.sweep == "alpha":
                config.alpha = float(value)
                if not 0.0 <= config.alpha <= 1.0:
                    raise ValueError("alpha outside [0, 1]")
            elif self.sweep == "k":
                config.k = int(value)
                if config.k < 1:
                    raise ValueError("k below 1")
            elif self.sweep == "scoring-mode":
                if value not in SCORING_MODES:
                    raise ValueError(f"expected one of {SCORING_MODES}")
                config.alpha = {"visual": 1.0, "textual": 0.0,
                                "multimodal": self.base.alpha}[value]
            elif self.sweep == "filter-stages":
                config.filter = FilterConfig.for_stages(value)
        except ValueError as exc:
            raise EmptyInputError(
                f"bad {self.sweep} value {value!r}: {exc}"
            ) from exc
        return config


def _sweep_rows(spec: AblationSpec, args, file_conf) -> list[dict]:
    embedder = HashEmbedder(64)
    tagger = _tagger(args)

    if args.benchmark:
        manifest = load_manifest(args.benchmark)
        if not args.index and spec.sweep != "database":
            raise EmptyInputError("--index is required with --benchmark")
        provider = _provider(args, file_conf)
        queries = [(e.id, e.ref) for e in manifest.entries]
        truths = {e.id: e.label for e in manifest.entries}
        index = load_index(args.index) if args.index else None
    else:
        if spec.sweep == "database":
            raise EmptyInputError(
                "database sweep needs --benchmark and prebuilt index values"
            )
        if spec.sweep == "filter-stages":
            # only the noisy generator registers embeddings for the raw
            # tokens that unfiltered configurations produce
            bench = bench_mod.make_noisy_benchmark(
                num_queries=spec.num_queries, seed=spec.seed
            )
        else:
            bench = bench_mod.make_benchmark(
                num_queries=spec.num_queries, seed=spec.seed
            )
        provider = bench.store
        queries = bench.queries
        truths = bench.truths
        index = bench.build_index(seed=spec.seed)

    rows = []
    for value in spec.values:
        config = spec.config_for(value)
        run_index = load_index(value) if spec.sweep == "database" else index
        results = classify_batch(queries, run_index, provider, tagger, config)
        labeled = [
            LabeledPrediction(item.id, item.prediction.label, truths[item.id])
            for item in results
            if item.prediction is not None
        ]
        report = evaluate_predictions(labeled, embedder, mode=spec.eval_mode)
        rows.append(
            {
                "sweep": spec.sweep,
                "value": value,
                "cluster_accuracy": report.cluster_accuracy,
                "semantic_similarity": report.semantic_similarity,
                "semantic_iou": report.semantic_iou,
                "samples": report.sample_count,
            }
        )
    return rows


def _cmd_ablate(args, file_conf) -> int:
    spec = AblationSpec(
        sweep=args.sweep,
        values=[v for v in args.values.split(",") if v],
        base=_classifier_config(args, file_conf),
        eval_mode=args.eval_mode,
        seed=resolve_option("seed", args.seed, file_conf, cast=int,
                            default=DEFAULTS["seed"]),
        num_queries=args.num_queries,
    )
    rows = _sweep_rows(spec, args, file_conf)
    handle, close = _out_handle(args.out)
    try:
        writer = csv.DictWriter(
            handle,
            fieldnames=["sweep", "value", "cluster_accuracy",
                        "semantic_similarity", "semantic_iou", "samples"],
        )
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    finally:
        if close:
            handle.close()
    return 0


def _cmd_validate_manifest(args, file_conf) -> int:
    manifest = load_manifest(args.manifest)
    store = PrecomputedStore.load(args.embeddings)
    dangling = validate_manifest(manifest, store)
    json.dump({"entries": len(manifest.entries), "dangling": dangling},
              sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0 if not dangling else 1


def _cmd_serve_stub(args, file_conf) -> int:
    try:
        serve(host=args.host, port=args.port, dim=args.dim)
    except OSError as exc:
        raise VfcError(f"cannot bind {args.host}:{args.port}: {exc}",
                       code="port-in-use") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vfclass",
        description="Retrieval-based open-vocabulary classification engine",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug (stderr)")
    parser.add_argument("--config", help="key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a corpus to canonical JSONL")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "plain"], default="jsonl")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="corpus token and POS statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "plain"], default="jsonl")
    p.add_argument("--lexicon", help="word<TAB>pos lexicon file")
    p.add_argument("--stop-words", help="stop-word list, one word per line")
    p.add_argument("--meta-words", help="meta-word list, one word per line")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("build-index", help="embed a corpus and build an index")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=["jsonl", "plain"], default="jsonl")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--embeddings", help="precomputed store (.vfce)")
    p.add_argument("--embed-url", help="remote embedding service URL")
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-timeout", type=float)
    p.add_argument("--structure", choices=["flat", "partitioned"], default="flat")
    p.add_argument("--partitions", type=int, default=16)
    p.add_argument("--dedup", action="store_true",
                   help="drop records with duplicate caption text")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build_index)

    p = sub.add_parser("classify", help="label queries against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True,
                   help="JSONL of {id, embedding} or {id, image_ref}")
    p.add_argument("--embeddings")
    p.add_argument("--embed-url")
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-timeout", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--probes")
    p.add_argument("--prompt")
    p.add_argument("--threads", type=int)
    p.add_argument("--lexicon", help="word<TAB>pos lexicon file")
    p.add_argument("--stop-words", help="stop-word list, one word per line")
    p.add_argument("--meta-words", help="meta-word list, one word per line")
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("evaluate", help="score predictions against truths")
    p.add_argument("--predictions", required=True)
    p.add_argument("--truths", required=True)
    p.add_argument("--mode", choices=["auto", "one-to-one", "many-to-one"],
                   default="auto")
    p.add_argument("--embeddings")
    p.add_argument("--embed-url")
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-timeout", type=float)
    p.add_argument("--out", default="-")
    p.add_argument("--csv", help="also write a flat CSV report")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="sweep one variable, emit metric rows")
    p.add_argument("--sweep", choices=SWEEPS, required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--benchmark", help="dataset manifest (default: synthetic)")
    p.add_argument("--index", help="index for --benchmark runs")
    p.add_argument("--embeddings")
    p.add_argument("--embed-url")
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-timeout", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--probes")
    p.add_argument("--prompt")
    p.add_argument("--num-queries", type=int, default=200)
    p.add_argument("--lexicon", help="word<TAB>pos lexicon file")
    p.add_argument("--stop-words", help="stop-word list, one word per line")
    p.add_argument("--meta-words", help="meta-word list, one word per line")
    p.add_argument("--eval-mode", choices=["auto", "one-to-one", "many-to-one"],
                   default="auto")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("validate-manifest",
                       help="check manifest refs against a store")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.set_defaults(func=_cmd_validate_manifest)

    p = sub.add_parser("serve-stub", help="run the deterministic embedding stub")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--dim", type=int, default=64)
    p.set_defaults(func=_cmd_serve_stub)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose >= 2:
        level = logging.DEBUG
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")
    file_conf = _load_config_file(args.config) if args.config else {}
    try:
        return args.func(args, file_conf)
    except VfcError as err:
        json.dump({"error": err.code, "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except OSError as err:
        json.dump({"error": "io-failure", "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
