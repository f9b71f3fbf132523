"""Command line entry points.

Exit codes are a stable contract:
  0  run completed and the goal predicate held
  1  generic failure (replay diff, store error, bad arguments)
  2  scenario error (including "interactive mode required")
  3  chat adapter error (network, exhausted script, replay divergence)
  4  run completed but the goal was not reached
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import GatewayError, LoopPilotError, ScenarioError
from .gateway import load_transcript, make_adapter
from .promptstore import PromptStore
from .report import ExecReport
from .scenario import Scenario, list_bundled_scenarios, load_scenario
from .session import Session

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SCENARIO = 2
EXIT_ADAPTER = 3
EXIT_GOAL = 4


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scenario = scenario.with_seed(args.seed)
    if getattr(args, "auto_approve", False):
        scenario = scenario.with_auto_approve(True)
    if getattr(args, "llm", None):
        spec = args.llm
        if spec == "live":
            scenario = scenario.with_llm({"adapter": "live"})
        elif ":" in spec:
            kind, path = spec.split(":", 1)
            if kind not in ("scripted", "replay"):
                raise ScenarioError("llm", f"unknown adapter {kind!r}")
            scenario = scenario.with_llm({"adapter": kind, "path": str(Path(path).resolve())})
        else:
            raise ScenarioError("llm", f"bad --llm value {spec!r}")
    return scenario


def _final_report(session: Session, dialog_outcome=None) -> ExecReport:
    met, metric = session.evaluate_goal()
    collisions = session.world.collision_count()
    halted = session.last_report.halted_reason if session.last_report else None
    note = ""
    if dialog_outcome is not None and dialog_outcome.kind != "reached":
        note = f"dialog outcome: {dialog_outcome.kind} at step {dialog_outcome.step}"
    success = met and collisions == 0 and halted is None and not note
    return ExecReport(
        success=success,
        goal_metric=metric,
        collisions=0 if success else collisions,
        halted_reason=halted,
        duration_steps=session.last_report.duration_steps if session.last_report else 0,
        note=note,
    )


def run_session(scenario: Scenario, max_dialog_steps: int = 50):
    """Drive a session non-interactively; returns (session, final report)."""
    session = Session.start(scenario)
    outcome = None
    if scenario.mode == "dialog":
        outcome = session.run_dialog_loop(
            scenario.goal.get("params", {}).get("max_steps", max_dialog_steps)
        )
    else:
        for text in session.adapter.user_turns():
            session.user_message(text)
    return session, _final_report(session, outcome)


def cmd_run(args) -> int:
    try:
        scenario = _apply_overrides(load_scenario(args.scenario), args)
        adapter_kind = scenario.llm.get("adapter", "scripted")
        if adapter_kind == "live" and scenario.mode != "dialog":
            raise ScenarioError("llm", "interactive mode required for a live adapter; use `looppilot repl`")
        if adapter_kind == "live" and not scenario.auto_approve:
            raise ScenarioError("llm", "interactive mode required: live adapter without auto_approve")
        session, report = run_session(scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except GatewayError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    if args.record:
        record_path = Path(args.record)
        events_path = record_path.with_suffix(".events.jsonl")
        session.record(record_path, events_path)
        # annotate the metadata line with the scenario path so `replay` can find it
        scenario_ref = str(Path(args.scenario).resolve()) if Path(args.scenario).exists() else args.scenario
        lines = record_path.read_text(encoding="utf-8").splitlines()
        meta = json.loads(lines[0])
        meta["scenario_path"] = scenario_ref
        lines[0] = json.dumps(meta, ensure_ascii=False)
        record_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    if args.events:
        session.write_events(args.events)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.success else EXIT_GOAL


def cmd_repl(args) -> int:
    try:
        scenario = _apply_overrides(load_scenario(args.scenario), args)
        session = Session.start(scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    print(f"session {session.name!r} started ({session.mode} mode). /help for commands.")
    stdin = args._stdin if getattr(args, "_stdin", None) else sys.stdin
    for line in stdin:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        try:
            if line.strip() == "/quit":
                break
            if line.strip() == "/help":
                print("commands: /approve  /reject <reason>  /feedback  /quit")
                continue
            if line.strip() == "/approve":
                if session.pending is None:
                    print("nothing pending")
                    continue
                report = session.approve(actor="human")
                print(json.dumps(report.to_dict(), indent=2))
                continue
            if line.startswith("/reject"):
                if session.pending is None:
                    print("nothing pending")
                    continue
                reason = line[len("/reject"):].strip() or "rejected"
                draft = session.reject(reason)
                print("feedback draft:")
                print(draft)
                continue
            if line.strip() == "/feedback":
                draft = session.feedback_draft()
                if draft is None:
                    print("no execution to report on yet")
                    continue
                reply = session.user_message(draft)
                print(reply)
                continue
            reply = session.user_message(line)
            print(reply)
            if session.pending is not None:
                print("--- proposed program ---")
                print(session.pending.source)
                for v in session.pending.violations:
                    print(f"violation: {v.describe()}")
                print("--- /approve to run, /reject <reason> to decline ---")
        except LoopPilotError as exc:
            print(f"error: {exc}")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        transcript = load_transcript(args.transcript)
    except GatewayError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    meta = transcript.metadata
    scenario_path = args.scenario or meta.get("scenario_path")
    if not scenario_path:
        print("replay: transcript metadata has no scenario_path; pass --scenario", file=sys.stderr)
        return EXIT_FAIL
    try:
        scenario = load_scenario(scenario_path).with_llm(
            {"adapter": "replay", "path": str(Path(args.transcript).resolve())}
        )
        session, report = run_session(scenario)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except GatewayError as exc:
        print(f"replay diverged: {exc}", file=sys.stderr)
        return EXIT_ADAPTER
    events_path = meta.get("events_path")
    if not events_path:
        sibling = Path(args.transcript).with_suffix(".events.jsonl")
        events_path = str(sibling) if sibling.exists() else None
    if events_path and Path(events_path).exists():
        recorded = [json.loads(l) for l in Path(events_path).read_text(encoding="utf-8").splitlines() if l.strip()]
        current = [json.loads(json.dumps(e, sort_keys=True)) for e in session.event_log()]
        if recorded == current:
            print("identical: replay reproduced the recorded event log")
            return EXIT_OK
        for i, (a, b) in enumerate(zip(recorded, current)):
            if a != b:
                print(f"diff at event {i}:\n  recorded: {a}\n  replayed: {b}")
                return EXIT_FAIL
        print(f"diff: event counts differ (recorded {len(recorded)}, replayed {len(current)})")
        return EXIT_FAIL
    print("replay completed (no recorded event log to diff); report:")
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.success else EXIT_GOAL


def cmd_store(args) -> int:
    store = PromptStore(args.dir)
    try:
        if args.store_cmd == "add":
            transcript = load_transcript(args.dialogue)
            tags = [t for t in (args.tags or "").split(",") if t]
            entry_id = store.add(args.category, args.title, transcript, tags=tags)
            print(entry_id)
        elif args.store_cmd == "list":
            for entry in store.list(args.category):
                print(f"{entry.id}  {entry.score:+d}  {entry.category:<14} {entry.title}")
        elif args.store_cmd == "vote":
            delta = 1 if args.direction == "up" else -1
            score = store.vote(args.id, delta, args.voter)
            print(score)
        elif args.store_cmd == "export":
            count = store.export(args.path)
            print(f"exported {count} entries")
        elif args.store_cmd == "import":
            count = store.import_file(args.path)
            print(f"imported {count} new entries")
        else:  # pragma: no cover
            return EXIT_FAIL
    except (LoopPilotError, OSError) as exc:
        print(f"store error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve

    serve(host=args.host, port=args.port)
    return EXIT_OK


def cmd_scenarios(_args) -> int:
    for name in list_bundled_scenarios():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="looppilot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario non-interactively")
    run.add_argument("scenario")
    run.add_argument("--llm", help="live | scripted:PATH | replay:PATH")
    run.add_argument("--auto-approve", action="store_true", dest="auto_approve")
    run.add_argument("--seed", type=int)
    run.add_argument("--record", help="write the transcript (plus events sidecar) here")
    run.add_argument("--out", help="write the final report JSON here")
    run.add_argument("--events", help="write the event log here")
    run.set_defaults(func=cmd_run)

    repl = sub.add_parser("repl", help="interactive session")
    repl.add_argument("scenario")
    repl.add_argument("--llm", help="live | scripted:PATH | replay:PATH")
    repl.add_argument("--auto-approve", action="store_true", dest="auto_approve")
    repl.add_argument("--seed", type=int)
    repl.set_defaults(func=cmd_repl)

    replay = sub.add_parser("replay", help="re-run a recorded transcript and diff event logs")
    replay.add_argument("transcript")
    replay.add_argument("--scenario", help="override the scenario path in the metadata")
    replay.set_defaults(func=cmd_replay)

    store = sub.add_parser("store", help="prompt example library")
    store.add_argument("--dir", default="promptstore")
    store_sub = store.add_subparsers(dest="store_cmd", required=True)
    add = store_sub.add_parser("add")
    add.add_argument("--category", required=True)
    add.add_argument("--title", required=True)
    add.add_argument("--dialogue", required=True, help="transcript file")
    add.add_argument("--tags")
    listing = store_sub.add_parser("list")
    listing.add_argument("--category")
    vote = store_sub.add_parser("vote")
    vote.add_argument("id")
    vote.add_argument("direction", choices=["up", "down"])
    vote.add_argument("--voter", required=True)
    export = store_sub.add_parser("export")
    export.add_argument("path")
    imp = store_sub.add_parser("import")
    imp.add_argument("path")
    store.set_defaults(func=cmd_store)

    serve = sub.add_parser("serve", help="host the console UI endpoints")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--host", default="127.0.0.1")
    serve.set_defaults(func=cmd_serve)

    scenarios = sub.add_parser("scenarios", help="list bundled scenarios")
    scenarios.set_defaults(func=cmd_scenarios)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
