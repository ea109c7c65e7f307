"""Batch command-line front end.

Subcommands: segment, reward, filter, bench, advantages, serve. Every
command is a pure function of its inputs, flags and seed; re-runs write
byte-identical outputs. Data goes to the output file; summary statistics
go to a sidecar, never interleaved.

Exit codes: 0 success, 1 I/O error, 2 schema error, 3 config error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import Any, Sequence

from . import BUILD_ID
from .bench import evaluate_corpus, format_report_table, score_table_rows
from .corpus import (
    IoError,
    breakdown_to_obj,
    dumps_line,
    read_corpus,
    write_records,
)
from .curation import DEFAULT_STAGE_ORDER, FiltrationConfig, run_pipeline
from .records import RewardError, SchemaError
from .reward import RewardConfig, batch_reward
from .rl_math import GrpoConfig, group_advantages
from .service import (
    DEFAULT_BIND,
    default_profiles,
    load_profiles,
    serve_http,
    serve_pipe,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_SCHEMA = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    pass


def _write_sidecar(path: str, obj: dict) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(obj, f, ensure_ascii=False, indent=2)
            f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _load_reward_config(args: argparse.Namespace) -> RewardConfig:
    if args.config is not None:
        try:
            profiles = load_profiles(args.config)
        except (OSError, ValueError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot load config {args.config}: {e}") from e
        name = args.profile or "default"
        if name not in profiles:
            raise ConfigError(
                f"profile {name!r} not in {sorted(profiles)} from {args.config}"
            )
        cfg = profiles[name]
    elif args.profile:
        raise ConfigError("--profile requires --config")
    else:
        cfg = RewardConfig()
    overrides = {}
    if getattr(args, "no_format_separation", False):
        overrides["enable_format_separation"] = False
    if getattr(args, "no_formula_reward", False):
        overrides["enable_formula_reward"] = False
    if getattr(args, "no_table_reward", False):
        overrides["enable_table_reward"] = False
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


def cmd_segment(args: argparse.Namespace) -> int:
    from .segmenter import segment

    samples = read_corpus(args.input).samples
    rows = []
    for sample in samples:
        segmented = segment(sample.ground_truth)
        rows.append(
            {
                "id": sample.id,
                "segments": [
                    {
                        "kind": seg.kind.value,
                        "content": seg.content,
                        "span": list(seg.span),
                    }
                    for seg in segmented.segments
                ],
            }
        )
    write_records(args.output, rows)
    return EXIT_OK


def cmd_reward(args: argparse.Namespace) -> int:
    cfg = _load_reward_config(args)
    samples = read_corpus(args.input).samples
    missing = [s.id for s in samples if s.prediction is None]
    if missing:
        raise SchemaError("samples missing predictions: " + ", ".join(missing))
    results = batch_reward(
        [(s.prediction, s.ground_truth) for s in samples], cfg
    )
    rows = [
        breakdown_to_obj(sample.id, result)
        for sample, result in zip(samples, results)
    ]
    write_records(args.output, rows)

    def _mean(key: str) -> float | None:
        values = [row[key] for row in rows if key in row]
        return sum(values) / len(values) if values else None

    summary = {
        "version": BUILD_ID,
        "samples": len(rows),
        "errors": sum(isinstance(r, RewardError) for r in results),
        "mean_composite": _mean("composite"),
        "mean_text": _mean("text"),
        "mean_formula": _mean("formula"),
        "mean_table": _mean("table"),
    }
    _write_sidecar(args.output + ".summary.json", summary)
    return EXIT_OK


def cmd_filter(args: argparse.Namespace) -> int:
    drop = frozenset(
        t.strip() for t in (args.drop_doc_types or "").split(",") if t.strip()
    )
    try:
        cfg = FiltrationConfig(
            threshold=args.threshold,
            top_fraction=args.top_fraction,
            require_formatted=args.require_formatted,
            drop_doc_types=drop,
            balance_languages=args.balance_languages,
            seed=args.seed,
        )
        order = tuple(s.strip() for s in args.order.split(",") if s.strip())
        samples = read_corpus(args.input).samples
        kept, report = run_pipeline(samples, cfg, order)
    except ValueError as e:
        if isinstance(e, (SchemaError, IoError)):
            raise
        raise ConfigError(str(e)) from e
    write_records(args.output, kept)
    report = {"version": BUILD_ID, **report}
    _write_sidecar(args.output + ".report.json", report)
    return EXIT_OK


def _read_jsonl_objects(path: str) -> list[Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    out = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e.msg}", lineno) from None
    return out


def cmd_bench(args: argparse.Namespace) -> int:
    if args.rows is not None:
        rows = _read_jsonl_objects(args.rows)
        report = score_table_rows(rows)
        write_records(args.output, report)
        _write_sidecar(
            args.output + ".summary.json",
            {
                "version": BUILD_ID,
                "rows": len(report),
                "flagged": sum(entry["flagged"] for entry in report),
            },
        )
        print(format_report_table(report))
        return EXIT_OK

    if args.input is None:
        raise ConfigError("bench needs an input corpus or --rows")
    cfg = _load_reward_config(args)
    samples = read_corpus(args.input).samples
    formula_scores = None
    if args.formula_scores is not None:
        try:
            with open(args.formula_scores, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except OSError as e:
            raise IoError(f"cannot read {args.formula_scores}: {e}") from e
        except json.JSONDecodeError as e:
            raise SchemaError(f"formula scores: invalid JSON: {e.msg}") from None
        if not isinstance(raw, dict):
            raise SchemaError("formula scores must be a JSON object of id -> score")
        formula_scores = {k: float(v) for k, v in raw.items()}
    try:
        overall_row, type_rows = evaluate_corpus(samples, cfg, formula_scores)
    except KeyError as e:
        raise SchemaError(f"sample missing prediction: {e}") from None
    rows = [overall_row.to_dict()] + [row.to_dict() for row in type_rows]
    write_records(args.output, rows)
    _write_sidecar(
        args.output + ".summary.json",
        {
            "version": BUILD_ID,
            "samples": overall_row.n_samples,
            "overall": overall_row.overall,
            "formula_metric_label": overall_row.formula_metric_label,
        },
    )
    return EXIT_OK


def cmd_advantages(args: argparse.Namespace) -> int:
    cfg = GrpoConfig(std_floor=args.std_floor)
    objects = _read_jsonl_objects(args.input)
    rows = []
    for i, obj in enumerate(objects, start=1):
        if isinstance(obj, list):
            rewards = obj
            wrap = None
        elif isinstance(obj, dict) and "rewards" in obj:
            rewards = obj["rewards"]
            wrap = obj
        else:
            raise SchemaError(
                "each line must be an array of rewards or an object "
                'with a "rewards" key',
                i,
            )
        if (
            not isinstance(rewards, list)
            or not rewards
            or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                for x in rewards
            )
        ):
            raise SchemaError("rewards must be a non-empty array of numbers", i)
        advantages = group_advantages([float(x) for x in rewards], cfg)
        if wrap is None:
            rows.append(advantages)
        else:
            rows.append({**wrap, "advantages": advantages})
    try:
        with open(args.output, "w", encoding="utf-8", newline="\n") as f:
            for row in rows:
                f.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")))
                f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {args.output}: {e}") from e
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    if args.profiles is not None:
        try:
            profiles = load_profiles(args.profiles)
        except (OSError, ValueError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot load profiles {args.profiles}: {e}") from e
    else:
        profiles = default_profiles()
    if args.stdio:
        return serve_pipe(profiles)
    try:
        serve_http(args.bind, profiles, args.workers)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="docreward",
        description="Format-decoupled reward and evaluation engine for "
        "document OCR output.",
    )
    parser.add_argument("--version", action="version", version=BUILD_ID)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="split documents into typed segments")
    p.add_argument("input", help="corpus JSONL")
    p.add_argument("output", help="segments JSONL")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("reward", help="score predictions against ground truth")
    p.add_argument("input", help="corpus JSONL with predictions")
    p.add_argument("output", help="reward breakdown JSONL")
    p.add_argument("--config", help="profiles JSON file")
    p.add_argument("--profile", help="profile name within --config")
    p.add_argument("--no-format-separation", action="store_true")
    p.add_argument("--no-formula-reward", action="store_true")
    p.add_argument("--no-table-reward", action="store_true")
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("filter", help="curate an RL corpus")
    p.add_argument("input", help="corpus JSONL")
    p.add_argument("output", help="filtered corpus JSONL")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--threshold", type=float, help="keep entropy >= nats")
    group.add_argument(
        "--top-fraction", type=float, help="keep the top fraction by entropy"
    )
    p.add_argument(
        "--no-require-formatted",
        dest="require_formatted",
        action="store_false",
        help="keep samples without formulas or tables",
    )
    p.add_argument("--drop-doc-types", help="comma-separated doc types to drop")
    p.add_argument("--balance-languages", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--order",
        default=",".join(DEFAULT_STAGE_ORDER),
        help="stage order (default: %(default)s)",
    )
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("bench", help="benchmark-style evaluation")
    p.add_argument("input", nargs="?", help="corpus JSONL with predictions")
    p.add_argument("output", help="report JSONL")
    p.add_argument("--config", help="profiles JSON file")
    p.add_argument("--profile", help="profile name within --config")
    p.add_argument(
        "--formula-scores",
        help="JSON map id -> externally computed formula score (0-100)",
    )
    p.add_argument(
        "--rows",
        help="recompute the combined score for a results-row JSONL file "
        "instead of scoring a corpus",
    )
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("advantages", help="group-normalized advantages")
    p.add_argument("input", help="JSONL of reward groups")
    p.add_argument("output", help="advantages JSONL")
    p.add_argument("--std-floor", type=float, default=1e-8)
    p.set_defaults(func=cmd_advantages)

    p = sub.add_parser("serve", help="run the scoring service")
    p.add_argument("--bind", default=DEFAULT_BIND, help="HOST:PORT")
    p.add_argument("--profiles", help="profiles JSON file")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument(
        "--stdio",
        action="store_true",
        help="serve newline-delimited JSON on stdin/stdout instead of HTTP",
    )
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IoError as e:
        print(f"docreward: {e}", file=sys.stderr)
        return EXIT_IO
    except SchemaError as e:
        print(f"docreward: schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConfigError as e:
        print(f"docreward: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
