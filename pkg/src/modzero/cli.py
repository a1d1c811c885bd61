"""Command-line entry points.

    modzero compile      layout text -> plan JSON
    modzero run          answer one layout against a scene directory
    modzero eval         run a question file and print metrics, or score
                         an existing prediction file with --pred
    modzero serve-oracle expose a scene directory over the wire protocol
    modzero ood-filter   split a scene directory into train/test image ids
    modzero conformance  run the protocol fixture suite against a service
"""

from __future__ import annotations

import argparse
import json
import sys

from .backends.conformance import http_transport, load_suite, run_suite, summarize
from .backends.oracle import OracleBackend
from .backends.remote import RemoteBackend
from .backends.server import build_server
from .answers import WrongAnnotatorCount
from .compiler import CompileError, compile_layout
from .executor import (
    DEFAULT_DETECTOR_THRESHOLD,
    DEFAULT_GROUNDER_THRESHOLD,
    ExecutionConfig,
    Executor,
    trace_to_jsonl,
)
from .harness import (
    DatasetError,
    DEFAULT_ANSWER_TOP_K,
    DEFAULT_TEST_RATIO,
    evaluate_dataset,
    evaluate_predictions,
    load_object_list,
    load_predictions,
    load_questions,
    load_vocab,
    run_question,
    QuestionRecord,
    split_scenes,
)
from .layout import LayoutError, parse_layout
from .backends.scene import SceneStore


def _add_threshold_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--detector-threshold", type=float, default=DEFAULT_DETECTOR_THRESHOLD
    )
    parser.add_argument(
        "--grounder-threshold", type=float, default=DEFAULT_GROUNDER_THRESHOLD
    )


def _config(args: argparse.Namespace) -> ExecutionConfig:
    return ExecutionConfig(
        detector_threshold=args.detector_threshold,
        grounder_threshold=args.grounder_threshold,
    )


def _backend(args: argparse.Namespace):
    if args.backend == "oracle":
        if not args.scenes:
            raise SystemExit("--scenes is required with the oracle backend")
        return OracleBackend.from_dir(args.scenes)
    return RemoteBackend(args.backend)


def _cmd_compile(args: argparse.Namespace) -> int:
    layout = parse_layout(args.layout)
    candidates = args.candidates.split(",") if args.candidates else None
    plan = compile_layout(layout, template=args.template, answer_candidates=candidates)
    print(json.dumps(plan.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    backend = _backend(args)
    record = QuestionRecord(
        question_id="cli",
        image_id=args.image,
        question=args.question or "",
        layout=args.layout,
    )
    vocab = load_vocab(args.vocab) if args.vocab else None
    outcome = run_question(
        backend, record, vocab=vocab, config=_config(args), top_k=args.top_k
    )
    if args.trace and outcome.result is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace_to_jsonl(outcome.result.trace))
    if outcome.status == "ok":
        print(outcome.prediction)
        return 0
    print(f"failed: {outcome.reason}", file=sys.stderr)
    return 1


def _cmd_eval(args: argparse.Namespace) -> int:
    records = load_questions(args.questions)
    if args.pred:
        # score an existing prediction file, no backend involved
        report, outcomes = evaluate_predictions(load_predictions(args.pred), records)
    else:
        backend = _backend(args)
        vocab = load_vocab(args.vocab) if args.vocab else None
        report, outcomes = evaluate_dataset(
            backend,
            records,
            vocab=vocab,
            config=_config(args),
            top_k=args.top_k,
            failure_answer=args.failure_answer,
        )
    if args.trace_dir:
        from pathlib import Path

        trace_dir = Path(args.trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for outcome in outcomes:
            if outcome.result is not None:
                path = trace_dir / f"{outcome.record.question_id}.trace.jsonl"
                path.write_text(trace_to_jsonl(outcome.result.trace), encoding="utf-8")
    output = report.to_dict()
    output["predictions"] = {
        o.record.question_id: o.prediction for o in outcomes
    }
    print(json.dumps(output, indent=2, sort_keys=True))
    if report.total > 0 and report.failures == report.total:
        return 1
    return 0


def _cmd_serve_oracle(args: argparse.Namespace) -> int:
    backend = OracleBackend.from_dir(args.scenes)
    server = build_server(backend, host=args.host, port=args.port)
    host, port = server.server_address[:2]
    print(f"serving oracle on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def _cmd_ood_filter(args: argparse.Namespace) -> int:
    store = SceneStore.from_dir(args.scenes)
    listed = load_object_list(args.objects)
    split = split_scenes(store, listed, test_ratio=args.portion)
    print(json.dumps(split.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_conformance(args: argparse.Namespace) -> int:
    suite = load_suite(args.suite)
    tiers = args.tiers.split(",")
    results = run_suite(suite, http_transport(args.url), tiers=tiers)
    print(summarize(results))
    return 0 if all(r.ok for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modzero")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a layout to a plan")
    p.add_argument("--layout", required=True)
    p.add_argument("--template", default=None)
    p.add_argument("--candidates", default=None, help="comma-separated answer candidates")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("run", help="answer one layout for one image")
    p.add_argument("--layout", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--scenes", default=None)
    p.add_argument("--backend", default="oracle", help='"oracle" or a service base URL')
    p.add_argument("--question", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--top-k", type=int, default=DEFAULT_ANSWER_TOP_K)
    p.add_argument("--trace", default=None)
    _add_threshold_args(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="evaluate a question file")
    p.add_argument("--questions", required=True)
    p.add_argument("--pred", default=None, help="score this prediction file instead of running a backend")
    p.add_argument("--scenes", default=None)
    p.add_argument("--backend", default="oracle")
    p.add_argument("--vocab", default=None)
    p.add_argument("--top-k", type=int, default=DEFAULT_ANSWER_TOP_K)
    p.add_argument("--failure-answer", default=None)
    p.add_argument("--trace-dir", default=None)
    _add_threshold_args(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve-oracle", help="serve a scene directory")
    p.add_argument("--scenes", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.set_defaults(func=_cmd_serve_oracle)

    p = sub.add_parser("ood-filter", help="scene-level train/test split")
    p.add_argument("--scenes", required=True)
    p.add_argument("--objects", required=True, help='"food", "street", or a file path')
    p.add_argument("--portion", type=float, default=DEFAULT_TEST_RATIO)
    p.set_defaults(func=_cmd_ood_filter)

    p = sub.add_parser("conformance", help="check a service against a fixture suite")
    p.add_argument("--suite", required=True)
    p.add_argument("--url", required=True)
    p.add_argument("--tiers", default="protocol", help="comma-separated: protocol,oracle")
    p.set_defaults(func=_cmd_conformance)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (LayoutError, CompileError, DatasetError, WrongAnnotatorCount) as exc:
        print(f"modzero: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        # missing vocab/question/scene files, unreachable backends
        print(f"modzero: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
