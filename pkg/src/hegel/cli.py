"""Command-line pipeline: ingest, oracle, build-graph, train, summarize,
evaluate, inspect.

Every command emits line-delimited JSON events on stdout and exits 0 on
success, 1 on usage or configuration errors, 2 on data or format errors, and
3 on numeric failures. Stage outputs get a sidecar manifest recording the
configuration hash and input digests; --cache skips a stage whose outputs
already match the current manifest. HEGEL_THREADS overrides --workers.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, embed, hypergraph, model, trainer
from .corpus import Document, LoadResult, load_jsonl, tokenize
from .errors import (ConfigError, DataError, FormatError, HegelError,
                     NumericError, UsageError)
from .oracle import MAX_ORACLE_SENTS, greedy_oracle
from .rouge import rouge_l, rouge_n
from .tensor import load_tensors

WORKERS_ENV = "HEGEL_THREADS"


def log_event(**fields) -> None:
    print(json.dumps(fields, sort_keys=True), flush=True)


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, config: dict, inputs: dict[str, str]) -> dict:
    """Reproducibility record: config hash plus input paths, sizes, digests.

    Deliberately contains no timestamps, so identical runs produce identical
    manifests and identical artifacts; wall-clock data goes to the log only.
    """
    entries = {}
    for name, p in sorted(inputs.items()):
        path = Path(p)
        entry: dict = {"path": str(path)}
        if path.is_file():
            entry["bytes"] = path.stat().st_size
            entry["sha256"] = _sha256_file(path)
        entries[name] = entry
    manifest = {
        "tool": "hegel",
        "version": __version__,
        "command": command,
        "config": config,
        "config_hash": hashlib.sha256(_canonical(config)).hexdigest(),
        "inputs": entries,
    }
    manifest["manifest_hash"] = hashlib.sha256(_canonical(manifest)).hexdigest()
    return manifest


def write_manifest(output: Path, manifest: dict) -> Path:
    side = output.with_name(output.name + ".manifest.json")
    side.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    return side


def cache_valid(output: Path, manifest: dict, extra_outputs=()) -> bool:
    side = output.with_name(output.name + ".manifest.json")
    if not side.is_file():
        return False
    try:
        stored = json.loads(side.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        return False
    if stored.get("manifest_hash") != manifest["manifest_hash"]:
        return False
    if not output.exists():
        return False
    return all(Path(p).exists() for p in extra_outputs)


def resolve_workers(flag_value: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"{WORKERS_ENV} must be an integer, got {env!r}")
        if value < 1:
            raise UsageError(f"{WORKERS_ENV} must be >= 1")
        return value
    if flag_value is None:
        return 1
    if flag_value < 1:
        raise UsageError("--workers must be >= 1")
    return flag_value


def pmap(fn, items: list, workers: int) -> list:
    """Order-preserving map, forking a process pool when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _load_corpus(path: str, limit: int | None, strict: bool) -> LoadResult:
    result = load_jsonl(path, limit=limit, strict=strict)
    for line_no, reason in result.skipped:
        log_event(event="skipped", line=line_no, reason=reason)
    if not result.documents:
        raise DataError(f"{path}: no usable documents")
    return result


def default_embeddings(docs: list[Document], hash_dim: int,
                       emb_seed: int) -> dict[str, np.ndarray]:
    """Hashed TF-IDF fallback.

    One shared seed: a token must land in the same bucket in every document,
    or the learned input projection has no cross-document features to use.
    """
    return {
        doc.id: embed.tfidf_embed(doc, d=hash_dim, seed=emb_seed)
        for doc in docs
    }


def load_embedding_dir(docs: list[Document], directory: str) -> dict[str, np.ndarray]:
    out = {}
    for doc in docs:
        path = Path(directory) / f"{doc.id}.emb"
        if not path.is_file():
            raise DataError(f"missing embeddings file {path}")
        out[doc.id] = embed.load_embeddings(path, expected_n=doc.n_sentences)
    return out


def resolve_embeddings(docs: list[Document], args,
                       d_in: int | None = None) -> dict[str, np.ndarray]:
    if args.embeddings:
        return load_embedding_dir(docs, args.embeddings)
    dim = args.hash_dim if args.hash_dim is not None else (d_in or 768)
    return default_embeddings(docs, dim, args.emb_seed)


def load_graph_dir(docs: list[Document], directory: str):
    graphs = {}
    headers = {}
    for doc in docs:
        path = Path(directory) / f"{doc.id}.hgr"
        if not path.is_file():
            raise DataError(f"missing graph file {path}")
        hg, header = hypergraph.load_graph(path)
        if hg.n_nodes != doc.n_sentences:
            raise DataError(f"{path}: graph has {hg.n_nodes} nodes, document "
                            f"{doc.id!r} has {doc.n_sentences} sentences")
        graphs[doc.id] = hg
        headers[doc.id] = header
    return graphs, headers


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    t0 = time.time()
    result = _load_corpus(args.input, args.limit, args.strict)
    docs = result.documents
    words = sum(sum(len(tokenize(s)) for s in d.sentences) for d in docs)
    log_event(event="ingest", documents=len(docs), skipped=len(result.skipped),
              avg_sentences=round(sum(d.n_sentences for d in docs) / len(docs), 2),
              avg_words=round(words / len(docs), 2),
              counters=result.counters, seconds=round(time.time() - t0, 3))
    return 0


def _oracle_one(doc: Document, max_sents: int):
    return doc.id, greedy_oracle(doc, max_sents=max_sents)


def cmd_oracle(args) -> int:
    t0 = time.time()
    out = Path(args.output)
    result = _load_corpus(args.input, args.limit, args.strict)
    config = {"command": "oracle", "max_sents": args.max_sents,
              "limit": args.limit, "strict": args.strict}
    manifest = build_manifest("oracle", config, {"corpus": args.input})
    if args.cache and cache_valid(out, manifest):
        log_event(event="cache_hit", command="oracle", output=str(out))
        return 0

    workers = resolve_workers(args.workers)
    rows = pmap(partial(_oracle_one, max_sents=args.max_sents),
                result.documents, workers)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for doc_id, labels in rows:
            fh.write(json.dumps({"article_id": doc_id, "labels": labels}) + "\n")
    write_manifest(out, manifest)
    positive = sum(sum(labels) for _, labels in rows)
    log_event(event="oracle", documents=len(rows), positive_labels=positive,
              workers=workers, output=str(out),
              manifest_hash=manifest["manifest_hash"],
              seconds=round(time.time() - t0, 3))
    return 0


def _build_graph_task(task, settings: dict):
    doc, emb = task
    return doc.id, hypergraph.build_graph(doc, embeddings=emb, **settings)


def cmd_build_graph(args) -> int:
    t0 = time.time()
    out_dir = Path(args.out)
    result = _load_corpus(args.input, args.limit, args.strict)
    docs = result.documents
    settings = {
        "seed": args.seed,
        "topics_max": args.topics_max,
        "lda_alpha": args.lda_alpha,
        "lda_beta": args.lda_beta,
        "lda_sweeps": args.lda_sweeps,
        "keywords_k": args.keywords,
        "min_deg": args.min_deg,
        "max_deg": args.max_deg,
        "hash_dim": args.hash_dim if args.hash_dim is not None else 768,
    }
    config = {"command": "build-graph", **settings,
              "embeddings": args.embeddings, "limit": args.limit}
    manifest = build_manifest("build-graph", config, {"corpus": args.input})
    kw_path = out_dir / "keywords.json"
    graph_paths = [out_dir / f"{d.id}.hgr" for d in docs]
    if args.cache and cache_valid(kw_path, manifest, graph_paths):
        log_event(event="cache_hit", command="build-graph", output=str(out_dir))
        return 0

    emb_by_id = (load_embedding_dir(docs, args.embeddings)
                 if args.embeddings else {})
    workers = resolve_workers(args.workers)
    tasks = [(doc, emb_by_id.get(doc.id)) for doc in docs]
    rows = pmap(partial(_build_graph_task, settings=settings), tasks, workers)

    out_dir.mkdir(parents=True, exist_ok=True)
    edge_total = 0
    keyword_report = {}
    for doc_id, built in rows:
        hypergraph.save_graph(out_dir / f"{doc_id}.hgr", built.graph, doc_id,
                              manifest_hash=manifest["manifest_hash"])
        keyword_report[doc_id] = [
            {"phrase": kw.text, "score": round(kw.score, 6)}
            for kw in built.keywords
        ]
        edge_total += built.graph.n_edges
    kw_path.write_text(json.dumps(keyword_report, sort_keys=True, indent=2) + "\n",
                       encoding="utf-8")
    write_manifest(kw_path, manifest)
    log_event(event="build-graph", documents=len(rows), total_edges=edge_total,
              workers=workers, output=str(out_dir),
              manifest_hash=manifest["manifest_hash"],
              seconds=round(time.time() - t0, 3))
    return 0


def load_labels(path: str, docs: list[Document]) -> dict[str, list[int]]:
    wanted = {d.id for d in docs}
    labels: dict[str, list[int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(row, dict) or "article_id" not in row or "labels" not in row:
                raise DataError(f"{path}:{line_no}: expected article_id and labels")
            if row["article_id"] in wanted:
                values = row["labels"]
                if (not isinstance(values, list)
                        or any(v not in (0, 1) for v in values)):
                    raise DataError(f"{path}:{line_no}: labels must be 0/1")
                labels[str(row["article_id"])] = [int(v) for v in values]
    return labels


def cmd_train(args) -> int:
    t0 = time.time()
    out = Path(args.out)
    train_res = _load_corpus(args.train, args.limit_train, args.strict)
    val_res = _load_corpus(args.val, args.limit_val, args.strict)
    train_docs, val_docs = train_res.documents, val_res.documents

    overrides = {}
    for name in ("lr", "dropout", "epochs", "patience", "seed", "layers",
                 "heads", "head_dim", "d_in", "pred_hidden", "gamma1", "gamma2",
                 "min_deg", "max_deg", "topics_max", "keywords",
                 "budget_words", "max_sents"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if not args.embeddings:
        # Hashed TF-IDF features are hash_dim wide; the input width follows.
        overrides["d_in"] = args.hash_dim if args.hash_dim is not None else 768
    config = trainer.TrainConfig(**overrides)

    graphs, _ = load_graph_dir(train_docs + val_docs, args.graphs)
    embeddings = resolve_embeddings(train_docs + val_docs, args, config.d_in)
    labels = load_labels(args.labels, train_docs)
    missing = [d.id for d in train_docs if d.id not in labels]
    if missing:
        raise DataError(f"labels file lacks {len(missing)} training documents "
                        f"(first: {missing[0]!r})")

    manifest = build_manifest("train", {"command": "train", **asdict(config)},
                              {"train": args.train, "val": args.val,
                               "labels": args.labels})
    if args.cache and cache_valid(out, manifest):
        log_event(event="cache_hit", command="train", output=str(out))
        return 0

    ckpt = trainer.train(train_docs, val_docs, graphs, embeddings, labels,
                         config, log=lambda row: log_event(**row))
    out.parent.mkdir(parents=True, exist_ok=True)
    ckpt.save(out, manifest_hash=manifest["manifest_hash"])
    write_manifest(out, manifest)
    log_event(event="train", best_epoch=ckpt.epoch,
              val_rouge1_f=round(ckpt.val_rouge1_f, 6), output=str(out),
              manifest_hash=manifest["manifest_hash"],
              seconds=round(time.time() - t0, 3))
    return 0


def _annotate(doc: Document, hg, idx: int) -> dict:
    types = hg.edge_types
    sec_cols = [j for j, t in enumerate(types) if t == hypergraph.EDGE_SECTION]
    topic_cols = [j for j, t in enumerate(types) if t == hypergraph.EDGE_TOPIC]
    kw_cols = [j for j, t in enumerate(types) if t == hypergraph.EDGE_KEYWORD]
    row = hg.incidence[idx]
    section = ""
    for k, j in enumerate(sec_cols):
        if row[j] and k < len(hg.section_names):
            section = hg.section_names[k]
            break
    topics = [int(hg.topic_ids[k]) if k < len(hg.topic_ids) else k
              for k, j in enumerate(topic_cols) if row[j]]
    kws = [hg.keyword_phrases[k] for k, j in enumerate(kw_cols)
           if row[j] and k < len(hg.keyword_phrases)]
    return {"section": section, "topics": topics, "keywords": kws}


def cmd_summarize(args) -> int:
    t0 = time.time()
    result = _load_corpus(args.input, args.limit, args.strict)
    docs = result.documents
    graphs, _ = load_graph_dir(docs, args.graphs)

    if args.method == "model":
        if not args.checkpoint:
            raise UsageError("--checkpoint is required with --method model")
        ckpt = trainer.Checkpoint.load(args.checkpoint)
        config = ckpt.config
    else:
        ckpt = None
        config = trainer.TrainConfig()
    budget = args.budget_words if args.budget_words else config.budget_words
    max_sents = args.max_sents if args.max_sents else config.max_sents

    if ckpt is not None:
        embeddings = resolve_embeddings(docs, args, config.d_in)
        reps = trainer.prepare_node_reps(docs, embeddings, config)

    rows = []
    for doc in docs:
        if ckpt is not None:
            scores = model.forward(ckpt.params, reps[doc.id], graphs[doc.id])
            picked = trainer.select_summary(scores.data.reshape(-1), doc,
                                            budget, max_sents)
        else:
            picked = trainer.lead_select(doc, budget, max_sents)
        rows.append((doc, picked))
        if not args.quiet:
            print(f"# {doc.id}")
            for i in picked:
                note = _annotate(doc, graphs[doc.id], i)
                tags = [f"[{note['section']}]"] if note["section"] else []
                if note["keywords"]:
                    tags.append("(kw: " + ", ".join(note["keywords"]) + ")")
                if note["topics"]:
                    tags.append("(topics: " +
                                ", ".join(str(t) for t in note["topics"]) + ")")
                prefix = " ".join(tags)
                print(f"{prefix} {doc.sentences[i]}".strip())
            print()

    if args.output:
        out = Path(args.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            for doc, picked in rows:
                fh.write(json.dumps({
                    "article_id": doc.id,
                    "indices": picked,
                    "sentences": [doc.sentences[i] for i in picked],
                }) + "\n")
    log_event(event="summarize", documents=len(rows), method=args.method,
              budget_words=budget, max_sents=max_sents,
              seconds=round(time.time() - t0, 3))
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.time()
    result = _load_corpus(args.input, args.limit, args.strict)
    by_id = {d.id: d for d in result.documents}
    summaries: dict[str, list[str]] = {}
    with open(args.summaries, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{args.summaries}:{line_no}: invalid JSON: "
                                f"{exc}") from exc
            if "article_id" not in row or "sentences" not in row:
                raise DataError(f"{args.summaries}:{line_no}: expected "
                                "article_id and sentences")
            summaries[str(row["article_id"])] = [str(s) for s in row["sentences"]]

    matched = [doc_id for doc_id in summaries if doc_id in by_id]
    if not matched:
        raise DataError("no summary matches any corpus document")
    skipped = len(summaries) - len(matched)

    r1 = r2 = rl = 0.0
    for doc_id in matched:
        doc = by_id[doc_id]
        candidate: list[str] = []
        for s in summaries[doc_id]:
            candidate.extend(tokenize(s))
        reference: list[str] = []
        for line in doc.abstract:
            reference.extend(tokenize(line))
        r1 += rouge_n(candidate, reference, 1).f1
        r2 += rouge_n(candidate, reference, 2).f1
        rl += rouge_l(candidate, reference).f1
    n = len(matched)
    scores = {"rouge1_f": 100.0 * r1 / n, "rouge2_f": 100.0 * r2 / n,
              "rougeL_f": 100.0 * rl / n}
    print(f"ROUGE-1 F: {scores['rouge1_f']:.2f}")
    print(f"ROUGE-2 F: {scores['rouge2_f']:.2f}")
    print(f"ROUGE-L F: {scores['rougeL_f']:.2f}")
    log_event(event="evaluate", documents=n, unmatched_summaries=skipped,
              **{k: round(v, 4) for k, v in scores.items()},
              seconds=round(time.time() - t0, 3))
    return 0


def cmd_inspect(args) -> int:
    header, tensors = load_tensors(args.checkpoint)
    info = {
        "epoch": header.get("epoch"),
        "val_rouge1_f": header.get("val_rouge1_f"),
        "hyperparameters": header.get("hyperparameters", {}),
        "tensors": {name: list(tensors[name].shape) for name in header["names"]},
        "parameter_count": int(sum(t.size for t in tensors.values())),
    }
    if not args.doc:
        print(json.dumps(info, sort_keys=True, indent=2))
        return 0

    if not args.input or not args.graphs:
        raise UsageError("--doc requires --input and --graphs")
    result = _load_corpus(args.input, None, args.strict)
    wanted = [d for d in result.documents if d.id == args.doc]
    if not wanted:
        raise DataError(f"document {args.doc!r} not found in {args.input}")
    doc = wanted[0]
    ckpt = trainer.Checkpoint.load(args.checkpoint)
    graphs, _ = load_graph_dir([doc], args.graphs)
    embeddings = resolve_embeddings([doc], args, ckpt.config.d_in)
    reps = trainer.prepare_node_reps([doc], embeddings, ckpt.config)
    trace = model.ForwardTrace()
    scores = model.forward(ckpt.params, reps[doc.id], graphs[doc.id], trace=trace)
    stats = model.attention_stats(trace, graphs[doc.id])
    info["document"] = {
        "article_id": doc.id,
        "scores": [round(float(v), 6) for v in scores.data.reshape(-1)],
        "attention_share": {k: round(v, 6) for k, v in stats.items()},
    }
    print(json.dumps(info, sort_keys=True, indent=2))
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_corpus_flags(p, limit_flag: bool = True):
    p.add_argument("--input", required=True, help="corpus JSONL path")
    if limit_flag:
        p.add_argument("--limit", type=int, default=None,
                       help="stop after N accepted documents")
    p.add_argument("--strict", action="store_true",
                   help="fail on the first malformed record instead of skipping")


def _add_embedding_flags(p):
    p.add_argument("--embeddings", default=None,
                   help="directory of <article_id>.emb files; omit for hashed TF-IDF")
    p.add_argument("--hash-dim", type=int, default=None,
                   help="dimension for the hashed TF-IDF fallback (default 768, "
                        "or the checkpoint's input width when scoring)")
    p.add_argument("--emb-seed", type=int, default=0,
                   help="seed for the hashed TF-IDF fallback")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hegel",
                     description="hypergraph extractive summarization pipeline")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus and report stats")
    _add_corpus_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("oracle", help="write greedy oracle labels")
    _add_corpus_flags(p)
    p.add_argument("--output", required=True)
    p.add_argument("--max-sents", type=int, default=MAX_ORACLE_SENTS)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--cache", action="store_true")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("build-graph", help="build and cache document hypergraphs")
    _add_corpus_flags(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--topics-max", type=int, default=100)
    p.add_argument("--lda-sweeps", type=int, default=200)
    p.add_argument("--lda-alpha", type=float, default=0.1)
    p.add_argument("--lda-beta", type=float, default=0.01)
    p.add_argument("--keywords", type=int, default=20)
    p.add_argument("--min-deg", type=int, default=5)
    p.add_argument("--max-deg", type=int, default=25)
    _add_embedding_flags(p)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--cache", action="store_true")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train a salience model")
    p.add_argument("--train", required=True, help="training corpus JSONL")
    p.add_argument("--val", required=True, help="validation corpus JSONL")
    p.add_argument("--graphs", required=True, help="graph cache directory")
    p.add_argument("--labels", required=True, help="oracle labels JSONL")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--limit-train", type=int, default=None)
    p.add_argument("--limit-val", type=int, default=None)
    p.add_argument("--strict", action="store_true")
    _add_embedding_flags(p)
    for name, typ in (("lr", float), ("dropout", float), ("epochs", int),
                      ("patience", int), ("seed", int), ("layers", int),
                      ("heads", int), ("head-dim", int), ("d-in", int),
                      ("pred-hidden", int), ("gamma1", float), ("gamma2", float),
                      ("min-deg", int), ("max-deg", int), ("topics-max", int),
                      ("keywords", int), ("budget-words", int),
                      ("max-sents", int)):
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--cache", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("summarize", help="emit extractive summaries")
    _add_corpus_flags(p)
    p.add_argument("--graphs", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--method", choices=("model", "lead"), default="model")
    p.add_argument("--output", default=None, help="write summaries JSONL here")
    p.add_argument("--budget-words", type=int, default=None)
    p.add_argument("--max-sents", type=int, default=None)
    p.add_argument("--quiet", action="store_true",
                   help="suppress annotated text on stdout")
    _add_embedding_flags(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("evaluate", help="score summaries against abstracts")
    _add_corpus_flags(p)
    p.add_argument("--summaries", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect", help="describe a checkpoint, optionally a document")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--doc", default=None, help="article id to trace")
    p.add_argument("--input", default=None)
    p.add_argument("--graphs", default=None)
    p.add_argument("--strict", action="store_true")
    _add_embedding_flags(p)
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(json.dumps({"event": "error", "kind": "usage", "message": str(exc)}),
              file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(json.dumps({"event": "error", "kind": "config", "message": str(exc)}),
              file=sys.stderr)
        return 1
    except (FormatError, DataError) as exc:
        print(json.dumps({"event": "error", "kind": "data", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except NumericError as exc:
        print(json.dumps({"event": "error", "kind": "numeric", "message": str(exc)}),
              file=sys.stderr)
        return 3
    except OSError as exc:
        print(json.dumps({"event": "error", "kind": "data", "message": str(exc)}),
              file=sys.stderr)
        return 2
    except HegelError as exc:
        print(json.dumps({"event": "error", "kind": "error", "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
