"""Command line front end: scenario runs, fuzzing, and oracle queries."""

from __future__ import annotations

import argparse
import json
import sys

from hushsim.fuzz import run_fuzz
from hushsim.oracle import oracle_recipients
from hushsim.runner import RunnerError, run_scenario
from hushsim.scenario import ScenarioInvalid, load_scenario


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except (OSError, ScenarioInvalid) as exc:
        print(f"hushsim run: {exc}", file=sys.stderr)
        return 2
    try:
        if args.live:
            transcript = run_scenario(scenario, mode="live", live_addr=args.live)
        else:
            transcript = run_scenario(scenario)
    except RunnerError as exc:
        print(f"hushsim run: {exc}", file=sys.stderr)
        return 1
    text = transcript.to_json(indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


def _cmd_fuzz(args: argparse.Namespace) -> int:
    report = run_fuzz(
        seed=args.seed,
        count=args.count,
        max_users=args.max_users,
        max_channels=args.max_channels,
    )
    print(
        f"fuzz: {report.scenarios_run} scenarios from seed {report.seed} "
        f"in {report.elapsed_s:.1f}s"
    )
    if report.ok:
        print("fuzz: no violations")
        return 0
    for failure in report.failures:
        print(f"fuzz: scenario seed {failure.scenario_seed} FAILED")
        for violation in failure.violations:
            print(f"  {violation}")
        shrunk = failure.minimal or failure.scenario
        path = f"fuzz-fail-{failure.scenario_seed}.json"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(shrunk.to_json(indent=2))
        print(f"  minimal reproducer ({len(shrunk.actions)} actions) written to {path}")
    return 1


def _cmd_oracle(args: argparse.Namespace) -> int:
    try:
        with open(args.state, "r", encoding="utf-8") as fh:
            state = json.load(fh)
        names = oracle_recipients(state, args.speaker)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"hushsim oracle: {exc}", file=sys.stderr)
        return 2
    for name in sorted(names):
        print(name)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hushsim", description="Simulation harness for the audio relay."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario and emit its transcript")
    run_p.add_argument("scenario", help="path to a scenario JSON file")
    run_p.add_argument(
        "--live", metavar="ADDR", help="drive a running server at host:port over websockets"
    )
    run_p.add_argument("--out", help="write the transcript here instead of stdout")
    run_p.set_defaults(func=_cmd_run)

    fuzz_p = sub.add_parser("fuzz", help="run randomized scenarios against the shadow model")
    fuzz_p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    fuzz_p.add_argument("--count", type=int, default=100, help="scenarios to run (default 100)")
    fuzz_p.add_argument("--max-users", type=int, default=8, help="room capacity cap (default 8)")
    fuzz_p.add_argument(
        "--max-channels", type=int, default=4, help="channel count cap (default 4)"
    )
    fuzz_p.set_defaults(func=_cmd_fuzz)

    oracle_p = sub.add_parser("oracle", help="print who hears a speaker, by brute force")
    oracle_p.add_argument("state", help="path to a state description JSON file")
    oracle_p.add_argument("--speaker", required=True, help="speaking user's name")
    oracle_p.set_defaults(func=_cmd_oracle)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
