"""Command-line pipeline: build datastores, retrieve, prompt, generate,
evaluate, and report datastore footprints.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial failure
(some items failed but the run produced output), 4 endpoint failure.
Configuration precedence is flag > config file > built-in default; the
config file is flat ``key = value`` lines (strings, numbers, booleans).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import embfile
from .concepts import (
    ContaminationFilter,
    extract_concepts,
    load_oracle_map,
    load_wordlist,
    merge_wordlists,
    save_wordlist,
)
from .core import (
    ConceptSource,
    RetrievalMode,
    RunConfig,
    read_caption_corpus,
    read_jsonl,
    write_jsonl,
)
from .errors import (
    EndpointUnreachableError,
    IoError,
    PolycapError,
)
from .generator import (
    GeneratorRequest,
    HttpGenerator,
    StubGenerator,
    SubprocessGenerator,
    generate_all,
)
from .index import IndexMeta, build_index_file, read_index_header
from .languages import load_language_table, validate_language
from .manifest import RunManifest, StageRecord, sha256_file
from .metrics import Metric, evaluate_run
from .prompting import assemble_prompt
from .retrieval import PivotMap, read_bundles, retrieve_batch, write_bundles

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3
EXIT_ENDPOINT = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this pipeline reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def parse_config_file(path: str | Path) -> dict:
    """Flat key = value config: '#' comments, quoted or bare strings,
    ints, floats, true/false."""
    values: dict = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise IoError(f"{path}:{lineno}: expected key = value")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if raw.lower() in ("true", "false"):
            values[key] = raw.lower() == "true"
            continue
        if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
            values[key] = raw[1:-1]
            continue
        try:
            values[key] = int(raw)
        except ValueError:
            try:
                values[key] = float(raw)
            except ValueError:
                values[key] = raw
    return values


def _pick(flag_value, file_cfg: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        return file_cfg[key]
    return default


def resolve_run_config(args, file_cfg: dict) -> RunConfig:
    return RunConfig(
        n_captions=_pick(getattr(args, "n_captions", None), file_cfg, "n_captions", 4),
        m_concepts=_pick(getattr(args, "m_concepts", None), file_cfg, "m_concepts", 10),
        beam_size=_pick(getattr(args, "beam_size", None), file_cfg, "beam_size", 5),
        length_penalty=_pick(getattr(args, "length_penalty", None), file_cfg, "length_penalty", 1.0),
        max_tokens=_pick(getattr(args, "max_tokens", None), file_cfg, "max_tokens", 25),
        retrieval_mode=RetrievalMode(_pick(getattr(args, "mode", None), file_cfg, "retrieval_mode", "direct")),
    )


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _lang(args):
    extra = load_language_table(args.lang_table) if getattr(args, "lang_table", None) else None
    if not args.lang:
        raise IoError("--lang is required for this command")
    return validate_language(args.lang, extra)


def _record_stage(args, stage: str, inputs: list[str], outputs: list[str], config: dict, started: float):
    if not args.manifest:
        return
    path = Path(args.manifest)
    manifest = RunManifest.load(path) if path.exists() else RunManifest()
    manifest.add_stage(
        StageRecord(
            stage=stage,
            inputs={str(p): sha256_file(p) for p in inputs},
            outputs=[str(p) for p in outputs],
            config=config,
            wall_clock_s=round(time.monotonic() - started, 6),
            timestamp=datetime.now(timezone.utc).isoformat(),
        )
    )
    manifest.save(path)


def cmd_build_index(args, file_cfg) -> int:
    started = time.monotonic()
    lang = _lang(args)
    built_at = args.timestamp or datetime.now(timezone.utc).isoformat()
    meta = IndexMeta(corpus=args.corpus, lang=lang.code, kind=args.kind, built_at=built_at)
    count, dim = build_index_file(args.embeddings, meta, args.out)
    _say(args, f"indexed {count} rows, dim={dim}")
    _record_stage(args, "build-index", list(args.embeddings), [args.out], meta.to_json(), started)
    return EXIT_OK


def cmd_extract_concepts(args, file_cfg) -> int:
    started = time.monotonic()
    lang = _lang(args)
    corpus = read_caption_corpus(args.captions)
    wordlist = extract_concepts(corpus, lang, min_token_length=args.min_length)
    save_wordlist(args.out, wordlist)
    _say(args, f"extracted {len(wordlist)} unique tokens from {len(corpus)} captions")
    _record_stage(args, "extract-concepts", [args.captions], [args.out],
                  {"lang": lang.code, "min_length": args.min_length}, started)
    return EXIT_OK


def cmd_enrich(args, file_cfg) -> int:
    started = time.monotonic()
    lang = _lang(args)
    base = load_wordlist(args.base, lang, default_source=ConceptSource.COCO)
    _say(args, f"base {args.base}: {len(base)}")
    contamination = ContaminationFilter.from_file(args.filter) if args.filter else None
    merged = base
    add_source = ConceptSource(args.addition_source)
    for add_path in args.additions:
        addition = load_wordlist(add_path, lang, default_source=add_source)
        merged = merge_wordlists(merged, [addition], contamination)
        _say(args, f"+{add_path}: {len(merged)}")
    save_wordlist(args.out, merged)
    _say(args, f"merged total: {len(merged)}")
    _record_stage(args, "enrich", [args.base, *args.additions], [args.out],
                  {"lang": lang.code, "filter": args.filter or ""}, started)
    return EXIT_OK


def cmd_retrieve(args, file_cfg) -> int:
    from .index import load_index

    started = time.monotonic()
    lang = _lang(args)
    cfg = resolve_run_config(args, file_cfg)
    caption_index = load_index(args.caption_index) if args.caption_index else None
    concept_index = load_index(args.concept_index) if args.concept_index else None
    if cfg.n_captions > 0 and caption_index is None:
        raise IoError("--caption-index is required when n_captions > 0")
    if cfg.m_concepts > 0 and concept_index is None and not args.oracle:
        raise IoError("--concept-index is required when m_concepts > 0 and no oracle map is given")
    texts = PivotMap.from_file(args.pivot) if args.pivot else None
    oracle_map = load_oracle_map(args.oracle) if args.oracle else None
    caption_images = None
    if args.caption_images:
        caption_images = {obj["caption_id"]: obj["image_id"] for obj in read_jsonl(args.caption_images)}
    queries = embfile.read_embeddings(args.queries)
    batch = retrieve_batch(
        queries, caption_index, concept_index, cfg,
        texts=texts, target_lang=lang.code, oracle_map=oracle_map,
        dedup_texts=args.dedup_texts,
        max_per_image=args.max_per_image,
        exclude_image_id=args.exclude_image_id,
        caption_images=caption_images,
    )
    write_bundles(args.out, batch.bundles)
    _say(args, f"retrieved {len(batch.bundles)} bundles (n={cfg.n_captions}, m={cfg.m_concepts})")
    inputs = [p for p in (args.queries, args.caption_index, args.concept_index, args.pivot, args.oracle) if p]
    _record_stage(args, "retrieve", inputs, [args.out], cfg.to_json(), started)
    if batch.failures:
        for image_id, reason in batch.failures:
            print(f"failed {image_id}: {reason}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_prompt(args, file_cfg) -> int:
    started = time.monotonic()
    lang = _lang(args)
    sep_name = _pick(args.segment_sep, file_cfg, "segment_sep", "space")
    separator = {"space": " ", "newline": "\n"}.get(sep_name)
    if separator is None:
        raise IoError(f"segment_sep must be 'space' or 'newline', got {sep_name!r}")
    bundles = read_bundles(args.bundles)
    rows = []
    for bundle in bundles:
        prompt = assemble_prompt(bundle, lang, separator=separator)
        rows.append({"image_id": bundle.image_id, "prompt": prompt.text, "lang": lang.code})
    write_jsonl(args.out, rows)
    _say(args, f"assembled {len(rows)} prompts")
    _record_stage(args, "prompt", [args.bundles], [args.out], {"lang": lang.code, "segment_sep": sep_name}, started)
    return EXIT_OK


def cmd_generate(args, file_cfg) -> int:
    started = time.monotonic()
    cfg = resolve_run_config(args, file_cfg)
    concurrency = _pick(args.concurrency, file_cfg, "concurrency", 4)
    prompts = list(read_jsonl(args.prompts))
    requests = [GeneratorRequest.from_config(p["image_id"], p["prompt"], cfg) for p in prompts]
    if args.stub:
        client = StubGenerator()
    elif args.endpoint:
        client = HttpGenerator(args.endpoint, backoff=args.backoff)
    elif args.command:
        client = SubprocessGenerator(args.command)
    else:
        raise IoError("one of --stub, --endpoint, or --command is required")
    try:
        responses = generate_all(client, requests, concurrency=concurrency)
    finally:
        client.close()
    rows = []
    failed = 0
    for req, resp in zip(requests, responses):
        row = {"image_id": req.image_ref, "caption": resp.caption}
        if resp.failed:
            row["caption"] = ""
            row["failed"] = True
            row["error"] = resp.error
            failed += 1
        rows.append(row)
    write_jsonl(args.out, rows)
    _say(args, f"generated {len(rows) - failed}/{len(rows)} captions")
    _record_stage(args, "generate", [args.prompts], [args.out], cfg.to_json(), started)
    if failed:
        unreachable = getattr(client, "unreachable", 0)
        if failed == len(rows) and unreachable == len(rows):
            raise EndpointUnreachableError("no request ever reached the generator endpoint")
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_evaluate(args, file_cfg) -> int:
    started = time.monotonic()
    lang = _lang(args)
    metric_names = args.metric or ["cider_d"]
    reports = []
    for name in metric_names:
        score, report = evaluate_run(
            args.predictions, args.references, lang, Metric(name), smooth_bleu=args.smooth_bleu
        )
        _say(args, f"{name}: {score.value:.6f}")
        reports.append(report)
    payload = reports[0] if len(reports) == 1 else {
        "lang": lang.code,
        "n_images": reports[0]["n_images"],
        "reports": reports,
    }
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write report {args.out}: {exc}") from exc
    _record_stage(args, "evaluate", [args.predictions, args.references], [args.out],
                  {"lang": lang.code, "metrics": metric_names}, started)
    return EXIT_OK


def _index_summary(path) -> tuple[int, int, int]:
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoError(f"cannot read index {path}: {exc}") from exc
    with fh:
        dim, count, _meta = read_index_header(fh)
    return Path(path).stat().st_size, count, dim


def cmd_footprint(args, file_cfg) -> int:
    cap_bytes, cap_count, cap_dim = _index_summary(args.caption_index)
    con_bytes, con_count, con_dim = _index_summary(args.concept_index)
    ratio = con_bytes / cap_bytes
    print(f"caption index: {cap_bytes} bytes ({cap_count} rows, dim={cap_dim})")
    print(f"concept index: {con_bytes} bytes ({con_count} rows, dim={con_dim})")
    print(f"concept/caption ratio: {ratio:.4f}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="polycap", description=__doc__)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--lang", help="target language code")
    parser.add_argument("--lang-table", help="user JSON table extending the built-in languages")
    parser.add_argument("--seed", type=int, default=None, help="reserved for future stochastic stages")
    parser.add_argument("--quiet", action="store_true", help="suppress informational output")
    parser.add_argument("--manifest", help="append stage records to this run manifest")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-index", help="stream .cemb files into a searchable index")
    p.add_argument("embeddings", nargs="+", help=".cemb inputs (shards concatenate in order)")
    p.add_argument("--kind", required=True, choices=["caption", "concept"])
    p.add_argument("--corpus", default="corpus")
    p.add_argument("--timestamp", default=None, help="fixed built_at for reproducible files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("extract-concepts", help="unique tokens of a caption corpus")
    p.add_argument("captions", help="caption corpus JSONL")
    p.add_argument("--min-length", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract_concepts)

    p = sub.add_parser("enrich", help="merge additional wordlists into a base list")
    p.add_argument("base")
    p.add_argument("additions", nargs="*")
    p.add_argument("--filter", default=None, help="contamination filter token file")
    p.add_argument("--addition-source", default="xm3600",
                   choices=[s.value for s in ConceptSource])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("retrieve", help="retrieve captions and concepts per query image")
    p.add_argument("--queries", required=True, help="query image embeddings (.cemb)")
    p.add_argument("--caption-index", default=None)
    p.add_argument("--concept-index", default=None)
    p.add_argument("--pivot", default=None, help="caption text map JSONL")
    p.add_argument("--oracle", default=None, help="per-image oracle concept map JSONL")
    p.add_argument("--caption-images", default=None, help="caption_id -> image_id JSONL")
    p.add_argument("--mode", choices=["pivot_en", "direct"], default=None)
    p.add_argument("-n", "--n-captions", type=int, default=None)
    p.add_argument("-m", "--m-concepts", type=int, default=None)
    p.add_argument("--dedup-texts", action="store_true")
    p.add_argument("--max-per-image", type=int, default=None)
    p.add_argument("--exclude-image-id", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("prompt", help="serialize bundles into generator prompts")
    p.add_argument("bundles")
    p.add_argument("--segment-sep", choices=["space", "newline"], default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("generate", help="send prompts to the caption generator")
    p.add_argument("prompts")
    p.add_argument("--endpoint", default=None, help="HTTP base URL (POST /caption)")
    p.add_argument("--command", default=None, help="stdin/stdout generator subprocess")
    p.add_argument("--stub", action="store_true", help="built-in deterministic stub")
    p.add_argument("--concurrency", type=int, default=None)
    p.add_argument("--backoff", type=float, default=0.5, help="base retry backoff seconds")
    p.add_argument("--beam-size", type=int, default=None)
    p.add_argument("--length-penalty", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score predictions against references")
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--metric", action="append", choices=[m.value for m in Metric])
    p.add_argument("--smooth-bleu", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("footprint", help="compare caption and concept datastore sizes")
    p.add_argument("--caption-index", required=True)
    p.add_argument("--concept-index", required=True)
    p.set_defaults(func=cmd_footprint)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        file_cfg = parse_config_file(args.config) if args.config else {}
        return args.func(args, file_cfg)
    except EndpointUnreachableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENDPOINT
    except PolycapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
