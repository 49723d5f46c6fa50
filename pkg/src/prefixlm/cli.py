"""Batch command line for the pipeline.

Subcommands: preprocess, train-tokenizer, finetune, generate, score,
eval-aggregate. Every run writes one JSON manifest alongside its output so
results can be reproduced from recorded inputs and seeds. Exit codes:
0 success, 1 internal error, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .bpe import load_vocabulary, save_vocabulary, train_merges
from .data import (
    build_examples,
    corpus_stats,
    parse_corpus,
    read_examples_jsonl,
    write_examples_jsonl,
)
from .finetune import (
    load_model_weights,
    parse_training_config,
    run_finetune,
    split_hint_words,
)
from .generate import GenerationConfig, generate_greedy
from .model import Model, ModelConfig
from .rouge import (
    aggregate_annotations,
    aggregate_ratings,
    format_annotation_report,
    format_rating_report,
    format_score_report,
    read_annotations_csv,
    read_ratings_csv,
    score_run,
)

VERSION_STRING = f"prefixlm-{__version__}"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_manifest(out_path, command: str, inputs: dict, outputs: list,
                    seed=None, config=None, started=None):
    manifest = {
        "command": command,
        "config": str(config) if config else None,
        "seed": seed,
        "inputs": {k: str(v) for k, v in inputs.items() if v is not None},
        "outputs": [str(o) for o in outputs],
        "started": started,
        "finished": _now(),
        "version": VERSION_STRING,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PFXLM_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    started = _now()
    sections = tuple(s for s in args.sections.split(",") if s)
    abstracts = parse_corpus(args.corpus)
    examples, skipped = build_examples(abstracts, sections)
    write_examples_jsonl(examples, args.out)
    stats = corpus_stats(examples)
    print(f"parsed {len(abstracts)} abstracts -> {stats['count']} examples "
          f"({skipped} skipped)")
    print(f"mean source: {stats['mean_source_words']} words"
          + (f" ({stats['mean_source_sentences']} sentences)"
             if stats["mean_source_sentences"] is not None else ""))
    print(f"mean target: {stats['mean_target_words']} words"
          + (f" ({stats['mean_target_sentences']} sentences)"
             if stats["mean_target_sentences"] is not None else ""))
    _write_manifest(args.out, "preprocess",
                    {"corpus": args.corpus, "sections": args.sections},
                    [args.out], started=started)
    return 0


def cmd_train_tokenizer(args) -> int:
    started = _now()
    examples = read_examples_jsonl(args.examples)
    if not examples:
        raise ValueError(f"{args.examples}: no examples to train on")
    texts = [e.source_text for e in examples] + [e.target_text for e in examples]
    tokenizer = train_merges(texts, args.num_merges)
    save_vocabulary(tokenizer, args.out_vocab, args.out_merges)
    print(f"trained {len(tokenizer.merges)} merges; vocabulary size "
          f"{len(tokenizer.vocab)} (incl. specials)")
    _write_manifest(args.out_vocab, "train-tokenizer",
                    {"examples": args.examples, "num_merges": args.num_merges},
                    [args.out_vocab, args.out_merges], started=started)
    return 0


def cmd_finetune(args) -> int:
    started = _now()
    cfg = parse_training_config(args.config)
    Path(cfg.checkpoint_path).parent.mkdir(parents=True, exist_ok=True)

    def log(step, loss):
        print(f"step {step}/{cfg.steps}  loss {loss:.4f}")

    _, _, last_step = run_finetune(cfg, log=log)
    print(f"saved checkpoint at step {last_step} -> {cfg.checkpoint_path}")
    outputs = [cfg.checkpoint_path] + ([cfg.loss_log] if cfg.loss_log else [])
    _write_manifest(cfg.checkpoint_path, "finetune", {"data": cfg.data_path},
                    outputs, seed=cfg.seed, config=args.config, started=started)
    return 0


def _model_from_config(cfg, checkpoint_path):
    tokenizer = load_vocabulary(cfg.vocab_file, cfg.merges_file)
    config = ModelConfig(
        n_layers=cfg.n_layers,
        d_model=cfg.d_model,
        n_heads=cfg.n_heads,
        d_ff=cfg.d_ff,
        vocab_size=len(tokenizer.vocab),
        max_positions=cfg.max_positions,
        activation=cfg.activation,
    )
    params = load_model_weights(checkpoint_path, config)
    return Model(config, params), tokenizer


def cmd_generate(args) -> int:
    started = _now()
    cfg = parse_training_config(args.config)
    checkpoint = args.checkpoint or cfg.checkpoint_path
    model, tokenizer = _model_from_config(cfg, checkpoint)
    examples = read_examples_jsonl(args.examples)
    gen_config = GenerationConfig(n_hints=args.n_hints,
                                  max_new_tokens=args.max_new_tokens)

    def one(example):
        hints, _ = split_hint_words(example.target_text, args.n_hints)
        text, _ = generate_greedy(model, example.source_text, hints,
                                  gen_config, tokenizer)
        return {"pmid": example.pmid, "n_hints": args.n_hints, "output": text}

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, examples))
    else:
        rows = [one(e) for e in examples]

    with open(args.out, "w", encoding="utf-8") as f:
        for row in rows:
            # ensure_ascii keeps the file valid even when an undertrained
            # model emits byte sequences that are not well-formed UTF-8
            f.write(json.dumps(row) + "\n")
    print(f"generated {len(rows)} conclusions -> {args.out}")
    _write_manifest(args.out, "generate",
                    {"examples": args.examples, "checkpoint": checkpoint,
                     "n_hints": args.n_hints},
                    [args.out], seed=cfg.seed, config=args.config, started=started)
    return 0


def _read_generated(path):
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rows.append((obj["pmid"], obj["output"], int(obj["n_hints"])))
            except (json.JSONDecodeError, KeyError) as e:
                raise ValueError(f"{path}:{lineno}: bad generated line: {e}") from e
    return rows


def cmd_score(args) -> int:
    started = _now()
    generated = _read_generated(args.generated)
    references = read_examples_jsonl(args.references)
    if len(generated) != len(references):
        raise ValueError(
            f"{len(generated)} generated lines but {len(references)} references"
        )
    for (g_pmid, _, _), ref in zip(generated, references):
        if g_pmid != ref.pmid:
            raise ValueError(f"pmid mismatch: {g_pmid!r} vs {ref.pmid!r}")
    outputs = [(text, n_hints) for _, text, n_hints in generated]
    scores = score_run(outputs, [r.target_text for r in references])
    report = format_score_report({args.system: scores})
    print(report)
    Path(args.out).write_text(report + "\n", encoding="utf-8")
    _write_manifest(args.out, "score",
                    {"generated": args.generated, "references": args.references},
                    [args.out], started=started)
    return 0


def cmd_eval_aggregate(args) -> int:
    started = _now()
    if not args.annotations and not args.ratings:
        raise ValueError("provide --annotations and/or --ratings")
    sections = []
    if args.annotations:
        agg = aggregate_annotations(read_annotations_csv(args.annotations))
        sections.append(format_annotation_report(agg))
    if args.ratings:
        agg = aggregate_ratings(read_ratings_csv(args.ratings))
        sections.append(format_rating_report(agg))
    report = "\n\n".join(sections)
    print(report)
    Path(args.out).write_text(report + "\n", encoding="utf-8")
    _write_manifest(args.out, "eval-aggregate",
                    {"annotations": args.annotations, "ratings": args.ratings},
                    [args.out], started=started)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefixlm",
        description="Conclusion-generation pipeline: preprocess, tokenize, "
                    "fine-tune, generate, score, aggregate.",
    )
    parser.add_argument("--version", action="version", version=VERSION_STRING)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="corpus file -> examples JSONL")
    p.add_argument("--corpus", required=True, help="labeled-sentence corpus file")
    p.add_argument("--sections", default="background,objective,results",
                   help="comma-separated source sections")
    p.add_argument("--out", required=True, help="output examples JSONL")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-tokenizer", help="learn BPE merges from examples")
    p.add_argument("--examples", required=True, help="examples JSONL")
    p.add_argument("--num-merges", type=int, default=200)
    p.add_argument("--out-vocab", required=True)
    p.add_argument("--out-merges", required=True)
    p.set_defaults(func=cmd_train_tokenizer)

    p = sub.add_parser("finetune", help="train per a key=value config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("generate", help="greedy-decode conclusions")
    p.add_argument("--config", required=True, help="training config (model dims)")
    p.add_argument("--checkpoint", default=None,
                   help="weights file (default: config checkpoint_path)")
    p.add_argument("--examples", required=True, help="examples JSONL")
    p.add_argument("--n-hints", type=int, default=0)
    p.add_argument("--max-new-tokens", type=int, default=128)
    p.add_argument("--out", required=True, help="output JSONL")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="corpus ROUGE for generated conclusions")
    p.add_argument("--generated", required=True, help="generate output JSONL")
    p.add_argument("--references", required=True, help="examples JSONL")
    p.add_argument("--system", default="run", help="row label for the report")
    p.add_argument("--out", required=True, help="report file")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval-aggregate", help="aggregate human-eval CSVs")
    p.add_argument("--annotations", default=None, help="system,example_id,verdict CSV")
    p.add_argument("--ratings", default=None,
                   help="system,example_id,correctness,quality,overall CSV")
    p.add_argument("--out", required=True, help="report file")
    p.set_defaults(func=cmd_eval_aggregate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - last-resort boundary
        print(f"internal error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
