"""Command-line entry point: ``chunkmem {run,report,stats,envcheck}``.

Exit codes: 0 success, 1 usage/config/check error, 2 run finished with
failed trials.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any

from . import __version__
from .agent import TrialSpec, read_records, run_suite
from .backend import HTTPBackend, PromptSettings, ReplayBackend
from .config import ConfigError, ExperimentConfig, load_config
from .env import DOMAINS, UnknownDomain, get_domain
from .env.checks import run_checks
from .eval import EmptyRecords, MissingBaseline, emit_report, format_table, report_bundle, \
    step_series, summarize_metrics
from .stats import AllZeroDifferences, TooFewPairs, wilcoxon_signed_rank

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _emit(args: argparse.Namespace, payload: dict[str, Any], text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _fail(args: argparse.Namespace, message: str) -> int:
    if args.json:
        print(json.dumps({"ok": False, "error": message}, sort_keys=True))
    else:
        print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# -- run ----------------------------------------------------------------------


def _backend_factory(config: ExperimentConfig, args: argparse.Namespace):
    spec = config.backend
    if spec.kind == "replay":
        if spec.script_dir is None:
            script_dir = Path(str(resources.files("chunkmem") / "data" / "replay"))
        else:
            script_dir = config.resolve(spec.script_dir)

        def replay(trial: TrialSpec) -> ReplayBackend:
            return ReplayBackend.from_file(
                script_dir / f"{trial.task}_{trial.instance}_{trial.variant}.txt")

        return replay, {"kind": "replay", "script_dir": str(script_dir)}

    shared = HTTPBackend(
        spec.endpoint_url or "",
        spec.model_name or "",
        api_key_env=spec.api_key_env,
        max_retries=spec.max_retries,
        rpm_limit=spec.rpm_limit,
        max_in_flight=spec.max_in_flight,
        max_requests=args.max_requests,
    )
    identity = {"kind": "http", "endpoint_url": spec.endpoint_url, "model_name": spec.model_name,
                "max_requests": args.max_requests}
    return (lambda trial: shared), identity


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        return _fail(args, str(exc))
    if config.backend.kind == "http" and not args.live:
        return _fail(args, "config uses the http backend; pass --live to allow paid API calls")
    out_dir = Path(args.out_dir) if args.out_dir else config.resolve(config.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(args, f"cannot create output directory {out_dir}: {exc.strerror}")

    factory, identity = _backend_factory(config, args)
    experiment = [TrialSpec(t, i, v) for t in config.tasks for i in config.instances[t]
                  for v in config.variants]
    started = _now()
    result = run_suite(
        experiment,
        factory,
        parallelism=config.parallelism,
        max_steps=config.max_steps,
        seed=config.seed,
        out_dir=out_dir,
        prompt=PromptSettings(config.temperature, config.top_p, config.max_output_tokens),
    )
    manifest = {
        "version": __version__,
        "config_hash": config.digest,
        "config": config.to_dict(),
        "backend": identity,
        "started_at": started,
        "finished_at": _now(),
        "trials": len(experiment),
        "records": len(result.records),
        "failures": len(result.failures),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    successes = sum(r.success for r in result.records)
    text = (f"{len(result.records)} trial(s) recorded, {successes} successful, "
            f"{len(result.failures)} failed; output in {out_dir}")
    for failure in result.failures:
        text += f"\n  failed: {failure['task']} {failure['instance']} {failure['variant']}: " \
                f"{failure['error']}"
    _emit(args, {"ok": not result.failures, "out_dir": str(out_dir), "records": len(result.records),
                 "successes": successes, "failures": result.failures,
                 "config_hash": config.digest}, text)
    return EXIT_PARTIAL if result.failures else EXIT_OK


# -- report -------------------------------------------------------------------


def _load_records(args: argparse.Namespace):
    path = Path(args.records)
    if not path.is_file():
        raise FileNotFoundError(f"no records file at {path}")
    return read_records(path)


def cmd_report(args: argparse.Namespace) -> int:
    try:
        records = _load_records(args)
        baseline = None if args.no_relative else args.baseline
        summary = summarize_metrics(records, baseline)
    except (FileNotFoundError, EmptyRecords, MissingBaseline, ValueError) as exc:
        return _fail(args, str(exc))
    series = step_series(records, args.bin_width)
    out_dir = Path(args.out_dir) if args.out_dir else Path(args.records).parent / "report"
    written = emit_report(summary, series, out_dir, args.format)
    payload = {"ok": True, "files": [str(p) for p in written], **report_bundle(summary, series)}
    _emit(args, payload, format_table(summary) + "\nwrote: " + ", ".join(str(p) for p in written))
    return EXIT_OK


# -- stats --------------------------------------------------------------------


def _metric(record, metric: str) -> float:
    if metric == "pr":
        return 100.0 * record.max_progress
    return float(record.steps_used if record.success else record.max_steps)


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        records = [r for r in _load_records(args) if not r.failed]
    except (FileNotFoundError, ValueError) as exc:
        return _fail(args, str(exc))
    sides: dict[str, dict[tuple, float]] = {args.variant_a: {}, args.variant_b: {}}
    for r in records:
        if r.variant in sides:
            key = (r.task, r.instance, r.seed)
            if key in sides[r.variant]:
                return _fail(args, f"duplicate record for {r.variant} on {key}")
            sides[r.variant][key] = _metric(r, args.metric)
    a, b = sides[args.variant_a], sides[args.variant_b]
    if not a or not b:
        return _fail(args, "both variants need records")
    unpaired = sorted(set(a) ^ set(b))
    if unpaired:
        return _fail(args, f"{len(unpaired)} unpaired trial(s), e.g. {unpaired[0]}")
    keys = sorted(a)
    try:
        result = wilcoxon_signed_rank([a[k] for k in keys], [b[k] for k in keys])
    except (AllZeroDifferences, TooFewPairs) as exc:
        return _fail(args, f"{type(exc).__name__}: {exc}")
    payload = {"ok": True, "metric": args.metric, "variant_a": args.variant_a,
               "variant_b": args.variant_b, "pairs": len(keys), "statistic": result.statistic,
               "p_value": result.p_value, "n": result.n, "method": result.method}
    text = (f"Wilcoxon signed-rank ({args.metric}, {args.variant_a} vs {args.variant_b}): "
            f"W = {result.statistic:g}, p = {result.p_value:.6g}, n = {result.n} ({result.method})")
    _emit(args, payload, text)
    return EXIT_OK


# -- envcheck -----------------------------------------------------------------


def cmd_envcheck(args: argparse.Namespace) -> int:
    names = list(DOMAINS) if args.task == "all" else [args.task]
    try:
        for name in names:
            get_domain(name)
    except UnknownDomain as exc:
        return _fail(args, str(exc.args[0]))
    results = [r for name in names for r in run_checks(name)]
    failed = [r for r in results if not r.passed]
    width = max(len(r.check) for r in results)
    lines = [f"{r.domain:<12} {r.check:<{width}}  {'PASS' if r.passed else 'FAIL'}  "
             f"{r.seconds:6.2f}s  {r.detail}".rstrip() for r in results]
    lines.append(f"{len(results) - len(failed)}/{len(results)} checks passed")
    payload = {"ok": not failed, "results": [r.__dict__ for r in results]}
    _emit(args, payload, "\n".join(lines))
    return EXIT_ERROR if failed else EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--out-dir", help="override the output directory")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="chunkmem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment config")
    run.add_argument("config", help="YAML experiment config")
    run.add_argument("--live", action="store_true", help="allow calls to a real HTTP model API")
    run.add_argument("--max-requests", type=int, default=1000,
                     help="hard ceiling on HTTP requests for --live runs (default 1000)")
    run.set_defaults(func=cmd_run)

    report = sub.add_parser("report", parents=[common], help="metrics tables and series")
    report.add_argument("records", help="records.jsonl written by 'run'")
    report.add_argument("--baseline", default="STD", help="variant used as 100%% (default STD)")
    report.add_argument("--no-relative", action="store_true",
                        help="skip metrics relative to a baseline")
    report.add_argument("--bin-width", type=int, default=5)
    report.add_argument("--format", nargs="+", default=["table-text", "csv", "json"],
                        choices=["table-text", "csv", "json"])
    report.set_defaults(func=cmd_report)

    stats = sub.add_parser("stats", parents=[common], help="Wilcoxon signed-rank test")
    stats.add_argument("records")
    stats.add_argument("variant_a")
    stats.add_argument("variant_b")
    stats.add_argument("--metric", choices=["pr", "steps"], default="pr")
    stats.set_defaults(func=cmd_stats)

    envcheck = sub.add_parser("envcheck", parents=[common], help="run environment self-checks")
    envcheck.add_argument("task", help="domain name or 'all'")
    envcheck.set_defaults(func=cmd_envcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
