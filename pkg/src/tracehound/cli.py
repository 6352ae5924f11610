"""Command-line frontend.

    tracehound profile   --traces T.jsonl --out profile.json [--judge judge.json]
    tracehound detect    --profile P --traces T.jsonl --out report.json
    tracehound bench gen --scenario clinic --seed 7 --out DIR
    tracehound eval      --report report.json --labels labels.json

Exit codes: 0 ok, 2 usage, 3 parse, 4 schema, 5 judge, 6 I/O,
7 empty corpus, 8 invalid bench spec, 9 session mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .bench import ScenarioSpec, evaluate_labels, gen_dataset, load_labels, write_dataset
from .detector import detect_all, dumps_report, summary_counts, verdicts_from_document
from .errors import (EmptyCorpus, InvalidSpec, JudgeFailure, SchemaVersionMismatch,
                     SessionMismatch, TraceHoundError)
from .ingest import load_paths
from .judge import JudgeConfig, make_judge
from .rules import BehaviorProfile, build_profile

log = logging.getLogger("tracehound")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_SCHEMA = 4
EXIT_JUDGE = 5
EXIT_IO = 6
EXIT_EMPTY = 7
EXIT_SPEC = 8
EXIT_MISMATCH = 9


class ParseFailure(TraceHoundError):
    pass


def _read_paths(path: str):
    with open(path, "rb") as fh:
        paths, diags = load_paths(fh)
    for d in diags:
        log.warning("%s: %s", path, d)
    if diags and not paths:
        raise ParseFailure(f"{path}: no valid sessions ({len(diags)} diagnostics)")
    return paths


def _judge(args):
    cfg = JudgeConfig.load(args.judge) if args.judge else JudgeConfig()
    if getattr(args, "strict", None) is not None:
        cfg.strict = args.strict
    return cfg, make_judge(cfg)


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_profile(args) -> int:
    paths = _read_paths(args.traces)
    if not paths:
        raise EmptyCorpus(f"{args.traces}: no sessions to profile")
    _, judge = _judge(args)
    profile = build_profile(paths, judge, jobs=args.jobs)
    _write_text(args.out, profile.dumps())
    shown = "  ".join(f"L{i + 1}:{{{', '.join(t) if len(t) <= 3 else f'{len(t)} tools'}}}"
                      for i, t in enumerate(profile.level_map.by_level()))
    print(f"profiled {len(paths)} paths: {len(profile.known_types)} unit types", file=sys.stderr)
    print(shown, file=sys.stderr)
    if args.figures:
        from .plotting import plot_hierarchy
        plot_hierarchy(profile.level_map, Path(args.figures) / "hierarchy.png")
    return EXIT_OK


def cmd_detect(args) -> int:
    profile = BehaviorProfile.loads(Path(args.profile).read_text(encoding="utf-8"))
    paths = _read_paths(args.traces)
    cfg, judge = _judge(args)
    verdicts = detect_all(paths, profile, judge, jobs=args.jobs,
                          exhaustive=args.exhaustive, strict=cfg.strict)
    _write_text(args.out, dumps_report(verdicts))
    counts = summary_counts(verdicts)
    print("  ".join(f"{k}={v}" for k, v in counts.items()), file=sys.stderr)
    return EXIT_OK


def cmd_bench_gen(args) -> int:
    spec = ScenarioSpec(args.scenario, counts=tuple(args.counts), seed=args.seed)
    traces = gen_dataset(spec)
    files = write_dataset(traces, args.out, spec)
    if args.figures:
        from .plotting import plot_path_lengths
        plot_path_lengths(traces, Path(args.figures) / "path_lengths.png")
    print(f"wrote {len(traces)} traces to {files['traces']}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    try:
        verdicts = verdicts_from_document(report)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaVersionMismatch(f"{args.report}: not a detection report ({exc})") from exc
    predicted = {}
    for v in verdicts:
        if v.session_id in predicted:
            raise SessionMismatch(f"duplicate verdict for {v.session_id}")
        predicted[v.session_id] = v.is_anomaly
    gold = {sid: g["label"] for sid, g in load_labels(args.labels).items()}
    metrics = evaluate_labels(predicted, gold)
    print(metrics.table())
    if args.out:
        _write_text(args.out, json.dumps(metrics.to_document(), indent=2, sort_keys=True) + "\n")
    if args.tsv:
        _write_text(args.tsv, "".join(f"{k}\t{v}\n" for k, v in [("metric", "value"), *metrics.rows()]))
    if args.figures:
        from .plotting import plot_detection_counts
        plot_detection_counts(metrics, Path(args.figures) / "detection_counts.png")
    return EXIT_OK


def _add_judge_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--judge", help="judge config JSON (default: offline baseline judge)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracehound", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="build a behavior profile from benign traces")
    p.add_argument("--traces", required=True)
    p.add_argument("--out", required=True, help="profile JSON path ('-' for stdout)")
    p.add_argument("--figures", help="directory for the hierarchy figure")
    _add_judge_flags(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("detect", help="classify traces against a profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--traces", required=True)
    p.add_argument("--out", default="-", help="report JSON path (default stdout)")
    _add_judge_flags(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true", default=None,
                      help="undecided judge calls count as anomalies (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false",
                      help="undecided judge calls are skipped")
    p.add_argument("--exhaustive", action="store_true",
                   help="collect findings for every unit instead of stopping at the first")
    p.set_defaults(func=cmd_detect)

    bench = sub.add_parser("bench", help="benchmark dataset tools")
    bsub = bench.add_subparsers(dest="bench_command", required=True)
    p = bsub.add_parser("gen", help="generate a labeled dataset")
    p.add_argument("--scenario", required=True, choices=("clinic", "procurement"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--counts", type=int, nargs=3, default=(1300, 150, 150),
                   metavar=("BT", "AT_C1", "AT_C2"))
    p.add_argument("--figures", help="directory for the path-length figure")
    p.set_defaults(func=cmd_bench_gen)

    p = sub.add_parser("eval", help="score a detection report against labels")
    p.add_argument("--report", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", help="metrics JSON path")
    p.add_argument("--tsv", help="metrics as tab-separated key/value rows")
    p.add_argument("--figures", help="directory for the detection-count figure")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except EmptyCorpus as exc:
        log.error("empty corpus: %s", exc)
        return EXIT_EMPTY
    except ParseFailure as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except json.JSONDecodeError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except SchemaVersionMismatch as exc:
        log.error("schema error: %s", exc)
        return EXIT_SCHEMA
    except JudgeFailure as exc:
        log.error("judge error: %s", exc)
        return EXIT_JUDGE
    except InvalidSpec as exc:
        log.error("invalid spec: %s", exc)
        return EXIT_SPEC
    except SessionMismatch as exc:
        log.error("session mismatch: %s", exc)
        return EXIT_MISMATCH
    except TraceHoundError as exc:
        log.error("%s", exc)
        return EXIT_SCHEMA
    except (OSError, UnicodeDecodeError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
