"""Operator command line: ingest, train, eval, serve, suggest.

Exit codes: 0 success, 2 usage errors (argparse), 3 corpus/data errors,
4 bundle errors, 5 training/pipeline errors, 6 unexpected runtime errors.
``TADAA_BUNDLE_DIR`` provides the default bundle directory.
"""

import argparse
import json
import logging
import os
import sys

from .corpus import CorpusError, clean, ingest, split
from .metrics import evaluate_all
from .pipeline import (BundleError, PipelineConfig, PipelineError,
                       load_bundle, save_bundle, suggest, train_pipeline)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_BUNDLE = 4
EXIT_TRAIN = 5
EXIT_RUNTIME = 6

logger = logging.getLogger("triagekit")


def _bundle_dir(args):
    bundle = args.bundle or os.environ.get("TADAA_BUNDLE_DIR")
    if not bundle:
        raise BundleError(
            "no bundle directory: pass --bundle or set TADAA_BUNDLE_DIR"
        )
    return bundle


def _load_corpus(path, format, min_tokens):
    with open(path, "rb") as f:
        raw = ingest(f, format=format)
    result = clean(raw, min_tokens=min_tokens)
    if result.dropped:
        logger.info("dropped tickets: %s", result.dropped)
    return result


def _guess_format(path, explicit):
    if explicit:
        return explicit
    return "jsonl" if str(path).endswith((".jsonl", ".ndjson")) else "csv"


def cmd_ingest(args):
    result = _load_corpus(args.input, _guess_format(args.input, args.format),
                          args.min_tokens)
    with open(args.output, "w", encoding="utf-8") as f:
        for t in result.tickets:
            record = {
                "id": t.id,
                "group": t.group,
                "resolver": t.resolver,
                "description": t.description,
            }
            if t.resolved_at:
                record["resolved_at"] = t.resolved_at
            f.write(json.dumps(record) + "\n")
    print(f"wrote {len(result.tickets)} clean tickets to {args.output}; "
          f"dropped {sum(result.dropped.values())} "
          f"({json.dumps(result.dropped, sort_keys=True)})")
    return EXIT_OK


def _parse_ratios(text):
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three integers, e.g. 8,1,1")
    return tuple(parts)


def cmd_train(args):
    config_data = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            config_data = json.load(f)
    if args.seed is not None:
        config_data["seed"] = args.seed
    config = PipelineConfig.from_dict(config_data)

    result = _load_corpus(args.corpus, _guess_format(args.corpus, args.format),
                          config.min_tokens)
    dataset = split(result.tickets, ratios=args.ratios, seed=config.seed,
                    by_time=args.by_time)
    bundle = train_pipeline(dataset, config)
    bundle.manifest["split"] = {
        "ratios": list(args.ratios),
        "seed": config.seed,
        "by_time": args.by_time,
    }
    save_bundle(bundle, args.out_bundle)
    secs = bundle.manifest["stage_seconds"]["total"]
    print(f"bundle written to {args.out_bundle} "
          f"(train {bundle.manifest['counts']['train']} tickets, {secs:.1f}s)")
    return EXIT_OK


def cmd_eval(args):
    bundle = load_bundle(_bundle_dir(args))
    split_info = bundle.manifest.get("split", {})
    result = _load_corpus(args.corpus, _guess_format(args.corpus, args.format),
                          bundle.config.min_tokens)
    dataset = split(
        result.tickets,
        ratios=tuple(split_info.get("ratios", (8, 1, 1))),
        seed=split_info.get("seed", bundle.config.seed),
        by_time=split_info.get("by_time", False),
    )
    from .corpus import corpus_fingerprint
    fingerprint = corpus_fingerprint(
        list(dataset.train) + list(dataset.validation) + list(dataset.test))
    if fingerprint != bundle.manifest.get("corpus_fingerprint"):
        logger.warning("corpus fingerprint differs from the one the bundle "
                       "was trained on; test split may overlap training data")
    report = evaluate_all(bundle, dataset.test)
    print(report.to_text())
    if args.records:
        report.write_records(args.records)
        print(f"records written to {args.records}")
    return EXIT_OK


def cmd_serve(args):
    from .service import serve

    serve(_bundle_dir(args), bind=args.bind, assignment_log=args.assignment_log)
    return EXIT_OK


def cmd_suggest(args):
    bundle = load_bundle(_bundle_dir(args))
    if args.text is not None:
        text = args.text
    else:
        text = sys.stdin.read()
    result = suggest(bundle, text, k_group=args.k_group,
                     k_resolver=args.k_resolver, n_similar=args.n_similar)
    t = result.timings_ms
    print(f"# groups={len(result.groups)} resolvers={len(result.resolvers)} "
          f"similar={len(result.similar)} total_ms={t['total']:.2f}")
    for name, score in result.groups:
        print(f"group\t{name}\t{score:.6f}")
    for name, score in result.resolvers:
        print(f"resolver\t{name}\t{score:.6f}")
    for s in result.similar:
        print(f"similar\t{s.ticket_id}\t{s.distance:.6f}\t{s.resolver}\t{s.snippet}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="triagekit",
        description="Train and serve ticket triage suggestions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse, validate, and clean a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--output", required=True)
    p.add_argument("--min-tokens", type=int, default=3, dest="min_tokens")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("train", help="train a model bundle from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--config", help="JSON file of pipeline config overrides")
    p.add_argument("--out-bundle", required=True, dest="out_bundle")
    p.add_argument("--seed", type=int)
    p.add_argument("--ratios", type=_parse_ratios, default=(8, 1, 1))
    p.add_argument("--by-time", action="store_true", dest="by_time")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a bundle on its corpus test split")
    p.add_argument("--bundle")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"))
    p.add_argument("--records", help="also write machine-readable rows here")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("serve", help="serve suggestions over HTTP")
    p.add_argument("--bundle")
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--assignment-log", dest="assignment_log")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("suggest", help="suggest for one description")
    p.add_argument("--bundle")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--text")
    group.add_argument("--stdin", action="store_true")
    p.add_argument("--k-group", type=int, default=3, dest="k_group")
    p.add_argument("--k-resolver", type=int, default=5, dest="k_resolver")
    p.add_argument("--n-similar", type=int, default=10, dest="n_similar")
    p.set_defaults(fn=cmd_suggest)

    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BundleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUNDLE
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - last resort
        logger.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
