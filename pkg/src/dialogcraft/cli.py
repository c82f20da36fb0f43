"""Command-line entry point orchestrating the pipeline end to end.

Every output file is accompanied by a ``<output>.manifest.json`` recording
the subcommand, resolved configuration, inputs/outputs, seed, tool version
and wall clock.  Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import random
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

from . import __version__
from .corpus import (
    SPLIT_NAMES,
    SplitSpec,
    read_dialogues,
    read_documents,
    read_flows,
    split_dataset,
    split_manifest,
    write_dialogues,
    write_documents,
    write_flows,
)
from .evals.reports import (
    eval_generation,
    eval_grounding,
    eval_retrieval,
    gold_generation_refs,
    gold_grounding_items,
)
from .flows import GenConfig, HEATMAP_ROWS, coverage_heatmap, flows_for_document
from .graph import build_labeled_graph
from .ingest import doc_stats, parse_document, segment_spans
from .models import DataError
from .recompose import inject_irrelevant, merge_multidoc


def _write_manifest(
    out_path: str | Path,
    subcommand: str,
    config: dict[str, Any],
    inputs: list[str],
    outputs: list[str],
    seed: Optional[int],
    started: float,
) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "tool_version": __version__,
        "started_at": datetime.fromtimestamp(started, tz=timezone.utc).isoformat(),
        "wall_clock_s": round(time.time() - started, 3),
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _read_jsonl_dicts(path: str) -> list[dict[str, Any]]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


# -- subcommand implementations ----------------------------------------------


def _cmd_ingest(args) -> int:
    started = time.time()
    in_dir = Path(args.in_dir)
    files = sorted(p for p in in_dir.rglob("*") if p.suffix in (".html", ".htm"))
    if not files:
        raise DataError(f"no .html files under {in_dir}")
    meta_path = in_dir / "meta.json"
    meta_map = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}

    docs = []
    for path in files:
        rel = path.relative_to(in_dir)
        entry = meta_map.get(str(rel), meta_map.get(path.name, {}))
        domain = entry.get("domain") or (
            rel.parts[0] if len(rel.parts) > 1 else (args.domain or "")
        )
        meta = {
            "doc_id": entry.get("doc_id", rel.with_suffix("").as_posix().replace("/", "-")),
            "domain": domain,
            "title": entry.get("title", ""),
            "url": entry.get("url", ""),
        }
        try:
            doc = segment_spans(parse_document(path.read_text(encoding="utf-8"), meta))
        except DataError as exc:
            raise DataError(f"{rel}: {exc}") from exc
        for w in doc.warnings:
            print(f"warning: {meta['doc_id']}: {w}", file=sys.stderr)
        docs.append(doc)
    write_documents(args.out, docs)
    _write_manifest(args.out, "ingest", {"domain": args.domain}, [str(in_dir)], [args.out], None, started)
    print(f"ingested {len(docs)} documents -> {args.out}")
    return 0


def _cmd_genflows(args) -> int:
    started = time.time()
    docs = read_documents(args.docs)
    config = GenConfig(
        seed=args.seed,
        min_turns=args.min_turns,
        max_turns=args.max_turns,
        target_turns=args.target_turns,
        flows_per_doc=args.flows_per_doc,
        p_underspecified=args.p_underspecified,
    )
    flows = []
    for doc in docs:
        try:
            graph = build_labeled_graph(doc)
            flows.extend(flows_for_document(doc, graph, config))
        except DataError as exc:
            raise DataError(f"{doc.doc_id}: {exc}") from exc
    write_flows(args.out, flows)
    _write_manifest(
        args.out, "genflows", dataclasses.asdict(config), [args.docs], [args.out], args.seed, started
    )
    print(f"generated {len(flows)} flows over {len(docs)} documents -> {args.out}")
    return 0


def _cmd_recompose(args) -> int:
    started = time.time()
    dialogues = read_dialogues(args.dialogues)
    rng = random.Random(args.seed)

    out = list(dialogues)
    injected = 0
    if args.irr_rate > 0:
        for i, d in enumerate(out):
            if rng.random() >= args.irr_rate:
                continue
            donors = [x for x in dialogues if not set(x.doc_ids) & set(d.doc_ids)]
            if not donors:
                continue
            out[i] = inject_irrelevant(d, rng.choice(donors), rng)
            injected += 1

    merged = 0
    if args.merge_k >= 2:
        indices = list(range(len(out)))
        rng.shuffle(indices)
        used: set[int] = set()
        merged_records = []
        group: list[int] = []
        for idx in indices:
            if idx in used:
                continue
            primaries = {out[g].primary_doc_id for g in group}
            if out[idx].primary_doc_id in primaries:
                continue
            group.append(idx)
            if len(group) == args.merge_k:
                merged_records.append(merge_multidoc([out[g] for g in group]))
                used.update(group)
                group = []
                merged += 1
        out = [d for i, d in enumerate(out) if i not in used] + merged_records

    write_dialogues(args.out, out)
    _write_manifest(
        args.out,
        "recompose",
        {"irr_rate": args.irr_rate, "merge_k": args.merge_k},
        [args.dialogues],
        [args.out],
        args.seed,
        started,
    )
    print(f"recomposed {len(dialogues)} -> {len(out)} dialogues "
          f"({injected} injected, {merged} merged) -> {args.out}")
    return 0


def _cmd_split(args) -> int:
    started = time.time()
    dialogues = read_dialogues(args.dialogues)
    spec = SplitSpec(
        train_frac=args.train,
        dev_frac=args.dev,
        test_frac=args.test,
        unseen_frac=args.unseen,
        seed=args.seed,
    )
    splits = split_dataset(dialogues, spec)
    manifest = split_manifest(splits, spec)
    out = args.out or (args.dialogues + ".splits.json")
    Path(out).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in SPLIT_NAMES:
            write_dialogues(out_dir / f"{name}.jsonl", splits[name])
    _write_manifest(out, "split", manifest["spec"], [args.dialogues], [out], args.seed, started)
    sizes = ", ".join(f"{k}={len(v)}" for k, v in splits.items())
    print(f"split {len(dialogues)} dialogues: {sizes} -> {out}")
    return 0


def _cmd_eval(args) -> int:
    started = time.time()
    if args.task == "grounding":
        preds = _read_jsonl_dicts(args.pred)
        dialogues = read_dialogues(args.gold)
        docs = read_documents(args.docs)
        roles = tuple(args.roles.split(","))
        report = eval_grounding(preds, gold_grounding_items(dialogues, roles), docs)
    elif args.task == "generation":
        preds = _read_jsonl_dicts(args.pred)
        dialogues = read_dialogues(args.gold)
        report = eval_generation(preds, gold_generation_refs(dialogues, args.role))
    else:  # retrieval
        dialogues = read_dialogues(args.gold)
        docs = read_documents(args.docs)
        k_list = tuple(int(k) for k in args.k_list.split(","))
        report = eval_retrieval(dialogues, docs, args.n_turns, k_list)

    for name, value in report.aggregates.items():
        print(f"{name}: {value:.2f}")
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        _write_manifest(
            args.out,
            f"eval {args.task}",
            {k: v for k, v in vars(args).items() if k not in ("func", "config")},
            [p for p in (getattr(args, "pred", None), args.gold, getattr(args, "docs", None)) if p],
            [args.out],
            None,
            started,
        )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import SessionStore, create_app

    flows = {f.flow_id: f for f in read_flows(args.flows)}
    docs = None
    if args.docs:
        docs = {d.doc_id: d for d in read_documents(args.docs)}
    store = SessionStore(args.store, flows, docs)
    app = create_app(store)
    print(f"serving {len(flows)} flows on {args.host}:{args.port} (store: {args.store})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_stats(args) -> int:
    started = time.time()
    docs = read_documents(args.docs)
    by_domain: dict[str, list[dict[str, int]]] = {}
    for doc in docs:
        by_domain.setdefault(doc.domain or "(none)", []).append(doc_stats(doc))

    def mean(rows: list[dict[str, int]], key: str) -> float:
        return sum(r[key] for r in rows) / len(rows)

    header = f"{'domain':<14}{'#docs':>7}{'tk':>9}{'sp':>7}{'p':>7}{'sec':>7}"
    print(header)
    lines = []
    for domain in sorted(by_domain):
        rows = by_domain[domain]
        line = {
            "domain": domain,
            "docs": len(rows),
            "tk": mean(rows, "tk"),
            "sp": mean(rows, "sp"),
            "p": mean(rows, "p"),
            "sec": mean(rows, "sec"),
        }
        lines.append(line)
        print(f"{domain:<14}{len(rows):>7}{line['tk']:>9.1f}{line['sp']:>7.1f}"
              f"{line['p']:>7.1f}{line['sec']:>7.1f}")
    all_rows = [s for rows in by_domain.values() for s in rows]
    print(f"{'all':<14}{len(all_rows):>7}{mean(all_rows, 'tk'):>9.1f}"
          f"{mean(all_rows, 'sp'):>7.1f}{mean(all_rows, 'p'):>7.1f}{mean(all_rows, 'sec'):>7.1f}")
    if args.out:
        payload = {"domains": lines, "all": {
            "docs": len(all_rows),
            "tk": mean(all_rows, "tk"),
            "sp": mean(all_rows, "sp"),
            "p": mean(all_rows, "p"),
            "sec": mean(all_rows, "sec"),
        }}
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        _write_manifest(args.out, "stats", {}, [args.docs], [args.out], None, started)
    return 0


def _cmd_heatmap(args) -> int:
    started = time.time()
    flows = read_flows(args.flows)
    docs = read_documents(args.docs)
    matrix = coverage_heatmap(flows, docs)
    print(f"{'granularity':<12}" + "".join(f"{i+1:>7}" for i in range(10)))
    for label, row in zip(HEATMAP_ROWS, matrix):
        print(f"{label:<12}" + "".join(f"{v:>7.1f}" for v in row))
    if args.out:
        payload = {"rows": list(HEATMAP_ROWS), "matrix": matrix}
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        _write_manifest(args.out, "heatmap", {}, [args.flows, args.docs], [args.out], None, started)
    return 0


# -- parser ------------------------------------------------------------------


def _build_parser(overrides: Optional[dict[str, Any]] = None) -> argparse.ArgumentParser:
    ov = overrides or {}

    def d(key: str, default: Any) -> Any:
        return ov.get(key, default)

    parser = argparse.ArgumentParser(
        prog="dialogcraft",
        description="documents -> dialogue flows -> collected dialogues -> evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", help="JSON file supplying any flag (explicit flags win)")

    p = sub.add_parser("ingest", help="parse raw HTML pages into a document corpus")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of .html files")
    p.add_argument("--out", required=True, help="output documents .jsonl")
    p.add_argument("--domain", default=d("domain", None), help="domain for flat directories")
    add_config(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("genflows", help="generate seeded dialogue flows from documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=d("seed", 0))
    p.add_argument("--flows-per-doc", type=int, default=d("flows_per_doc", 10))
    p.add_argument("--min-turns", type=int, default=d("min_turns", 10))
    p.add_argument("--max-turns", type=int, default=d("max_turns", 18))
    p.add_argument("--target-turns", type=int, default=d("target_turns", 14))
    p.add_argument("--p-underspecified", type=float, default=d("p_underspecified", 0.3))
    add_config(p)
    p.set_defaults(func=_cmd_genflows)

    p = sub.add_parser("recompose", help="inject Irr sub-dialogues and merge multi-doc dialogues")
    p.add_argument("--dialogues", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--irr-rate", type=float, default=d("irr_rate", 0.0))
    p.add_argument("--merge-k", type=int, default=d("merge_k", 0))
    p.add_argument("--seed", type=int, default=d("seed", 0))
    add_config(p)
    p.set_defaults(func=_cmd_recompose)

    p = sub.add_parser("split", help="train/dev/test split with unseen-document halves")
    p.add_argument("--dialogues", required=True)
    p.add_argument("--train", type=float, default=d("train", 0.70))
    p.add_argument("--dev", type=float, default=d("dev", 0.15))
    p.add_argument("--test", type=float, default=d("test", 0.15))
    p.add_argument("--unseen", type=float, default=d("unseen", 0.5))
    p.add_argument("--seed", type=int, default=d("seed", 0))
    p.add_argument("--out", default=d("out", None), help="manifest path")
    p.add_argument("--out-dir", default=d("out_dir", None), help="write per-split .jsonl files")
    add_config(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("eval", help="evaluate grounding, generation, or retrieval")
    ev = p.add_subparsers(dest="task", required=True)

    g = ev.add_parser("grounding", help="EM/F1 of predicted grounding spans")
    g.add_argument("--pred", required=True, help="predictions .jsonl: {id, span_text}")
    g.add_argument("--gold", required=True, help="dialogues .jsonl with gold scenes")
    g.add_argument("--docs", required=True)
    g.add_argument("--roles", default=d("roles", "user"))
    g.add_argument("--out")
    add_config(g)
    g.set_defaults(func=_cmd_eval)

    g = ev.add_parser("generation", help="BLEU of generated utterances")
    g.add_argument("--pred", required=True, help="predictions .jsonl: {id, text}")
    g.add_argument("--gold", required=True, help="dialogues .jsonl with written turns")
    g.add_argument("--role", default=d("role", "agent"))
    g.add_argument("--out")
    add_config(g)
    g.set_defaults(func=_cmd_eval)

    g = ev.add_parser("retrieval", help="BM25 document retrieval R@k")
    g.add_argument("--gold", required=True, help="dialogues .jsonl")
    g.add_argument("--docs", required=True)
    g.add_argument("--n-turns", type=int, default=d("n_turns", 1))
    g.add_argument("--k-list", default=d("k_list", "1,5,10"))
    g.add_argument("--out")
    add_config(g)
    g.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--flows", required=True)
    p.add_argument("--port", type=int, default=d("port", 8000))
    p.add_argument("--store", required=True, help="event-log directory")
    p.add_argument("--docs", default=d("docs", None), help="documents .jsonl for excerpts")
    p.add_argument("--host", default=d("host", "127.0.0.1"))
    add_config(p)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("stats", help="content-element statistics per domain")
    p.add_argument("--docs", required=True)
    p.add_argument("--out")
    add_config(p)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("heatmap", help="grounding-coverage matrix over position deciles")
    p.add_argument("--flows", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--out")
    add_config(p)
    p.set_defaults(func=_cmd_heatmap)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            overrides = json.loads(Path(args.config).read_text(encoding="utf-8"))
            args = _build_parser(overrides).parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return 1  # argparse usage error
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
