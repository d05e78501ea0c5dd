"""Command-line interface for scripted and CI use.

Exit codes: 0 success (for ``eval``: pass rate met the threshold), 1 runtime
failure or threshold not met (distinguished by the ``error[...]`` stderr
line), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import service
from .api import ApiConfig, serve as serve_api
from .demos import seed_demo_task
from .errors import EvalSynthError
from .fm import FMClient, FMConfig
from .serde import descriptor_to_dict, plan_to_dict, result_to_dict
from .service import DEFAULT_CI_THRESHOLD, STORED_DATASET
from .store import Datastore
from .synthesis import render_plan
from .wire import parse_message_doc


def _fm_from_args(args) -> FMClient:
    config = FMConfig.from_env()
    if getattr(args, "fm_mode", None):
        config.mode = args.fm_mode
    return FMClient(config)


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def cmd_init(args) -> int:
    from .drafting import SampleInput

    store = Datastore(args.store)
    fm = _fm_from_args(args)
    if args.input:
        data: bytes | str = Path(args.input).read_bytes()
    else:
        data = args.input_text or ""
    sample = SampleInput(modality=args.modality, data=data, media_type=args.media_type or "")
    task_id, session = service.create_task(store, args.description, sample, fm)
    descriptor = descriptor_to_dict(session.descriptor)
    _emit(args, {"task_id": task_id, "descriptor": descriptor}, descriptor["markdown"])
    return 0


def cmd_protocol(args) -> int:
    store = Datastore(args.store)
    fm = _fm_from_args(args)
    doc = Path(args.message).read_text(encoding="utf-8")
    message, response = parse_message_doc(doc)
    if not message.session_id:
        from dataclasses import replace

        message = replace(message, session_id=store.load_session(args.task).session_id)
    session = service.apply_message(store, args.task, message, response, fm)
    payload = {
        "stage": session.stage.value,
        "status": session.descriptor.status.value,
        "plan_version": session.plan_version,
        "next_seq": len(session.log),
    }
    _emit(
        args,
        payload,
        f"stage={session.stage.value} status={session.descriptor.status.value} "
        f"plan_version={session.plan_version}",
    )
    return 0


def cmd_synth(args) -> int:
    store = Datastore(args.store)
    from .protocol import finalize_plan

    plan = finalize_plan(store.load_session(args.task))
    _emit(args, {"plan": plan_to_dict(plan)}, render_plan(plan))
    return 0


def cmd_eval(args) -> int:
    store = Datastore(args.store)
    fm = _fm_from_args(args)
    outcome = service.evaluate_task(
        store,
        args.task,
        dataset_ref=args.dataset,
        fm=fm,
        threshold=args.threshold,
        persist=not args.no_persist,
    )
    summary = outcome.summary.as_dict()
    payload = {
        "summary": summary,
        "threshold": outcome.threshold,
        "ci_pass": outcome.ci_pass,
        "verdicts": [
            {"example_id": r.example_id, "verdict": r.verdict.value} for r in outcome.results
        ],
    }
    verdicts = summary["verdicts"]
    human = (
        f"n={summary['n']} pass={verdicts.get('pass', 0)} fail={verdicts.get('fail', 0)} "
        f"needs_review={verdicts.get('needs_review', 0)}\n"
        f"pass_rate={summary['pass_rate']:.4f} threshold={outcome.threshold} "
        f"ci={'pass' if outcome.ci_pass else 'fail'}"
    )
    _emit(args, payload, human)
    if not outcome.ci_pass:
        print(f"error[threshold_not_met]: pass_rate {summary['pass_rate']:.4f} < {outcome.threshold}",
              file=sys.stderr)
        return 1
    return 0


def cmd_report(args) -> int:
    store = Datastore(args.store)
    summary = service.report(store, args.task, plan_version=args.plan_version).as_dict()
    human = (
        f"n={summary['n']} pass_rate={summary['pass_rate']:.4f} "
        f"errors={summary['error_totals']}"
    )
    _emit(args, {"summary": summary}, human)
    return 0


def cmd_serve(args) -> int:
    config = ApiConfig(
        host=args.host,
        port=args.port,
        store_root=args.store,
        fm=FMConfig.from_env() if not args.fm_mode else FMConfig(mode=args.fm_mode),
        ci_threshold=args.threshold,
    )
    serve_api(config)
    return 0


def cmd_seed_demo(args) -> int:
    store = Datastore(args.store)
    fm = _fm_from_args(args)
    task_id = seed_demo_task(store, which=args.which, n=args.n, failing=args.failing, fm=fm)
    _emit(args, {"task_id": task_id}, f"seeded demo task {task_id} with {args.n} examples")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evalsynth",
        description="Synthesise and run task-specific evaluators for FM tasks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--store", required=True, help="datastore root directory")
        p.add_argument("--json", action="store_true", help="emit one JSON object on stdout")
        p.add_argument("--fm-mode", choices=["live", "replay", "record", "stub"], default="")

    p = sub.add_parser("init", help="create a task from a description and a sample input")
    common(p)
    p.add_argument("--description", required=True)
    p.add_argument("--modality", required=True, choices=["text", "image", "document", "table"])
    p.add_argument("--input", help="path to the sample input file")
    p.add_argument("--input-text", help="inline sample input text")
    p.add_argument("--media-type", default="")
    p.set_defaults(fn=cmd_init)

    p = sub.add_parser("protocol", help="apply a protocol message document to a task session")
    common(p)
    p.add_argument("--task", required=True)
    p.add_argument("--message", required=True, help="path to a message markdown file")
    p.set_defaults(fn=cmd_protocol)

    p = sub.add_parser("synth", help="print the approved eval plan")
    common(p)
    p.add_argument("--task", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("eval", help="run the approved plan over a dataset; exit 0 iff pass rate meets the threshold")
    common(p)
    p.add_argument("--task", required=True)
    p.add_argument("--dataset", default=STORED_DATASET, help="'stored' or a dataset archive path")
    p.add_argument("--threshold", type=float, default=DEFAULT_CI_THRESHOLD)
    p.add_argument("--no-persist", action="store_true", help="do not append results to the store")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="summarize stored results")
    common(p)
    p.add_argument("--task", required=True)
    p.add_argument("--plan-version", type=int, default=None)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("serve", help="run the evaluator HTTP API")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--threshold", type=float, default=DEFAULT_CI_THRESHOLD)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("seed-demo", help="load a built-in demo task with synthetic examples")
    common(p)
    p.add_argument("--which", choices=["chart", "qa"], default="chart")
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--failing", type=int, default=2)
    p.set_defaults(fn=cmd_seed_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except EvalSynthError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
