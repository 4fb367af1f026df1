#!/usr/bin/env python3
"""Runs the bundled four-user scenario and narrates who heard what.

Usage: python3 scripts/demo_story.py [--live HOST:PORT]

Without --live the run is in-process and deterministic. With --live it drives
a running relay server (start one with: hushrelay --listen 127.0.0.1:8765).
"""

import argparse
import base64
import pathlib
import sys

from hushsim import leakscan, runner, scenario

STORY = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "routing-story.json"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--live", metavar="ADDR", help="drive a running server at host:port")
    args = parser.parse_args()

    scn = scenario.load_scenario(str(STORY))
    print("script:")
    for action in scn.actions:
        extra = {k: v for k, v in action.to_dict().items() if k not in ("t", "actor", "op")}
        detail = f" {extra}" if extra else ""
        print(f"  t={action.t:<5} {action.actor:<4} {action.op}{detail}")

    if args.live:
        transcript = runner.run_scenario(scn, mode="live", live_addr=args.live)
    else:
        transcript = runner.run_scenario(scn)

    print("\nwho heard what:")
    for record in transcript.records:
        if record.kind != "AUDIO":
            continue
        text = base64.b64decode(record.detail["payload"]).decode("utf-8")
        print(f"  t={record.t:<5} {record.recipient:<4} heard {record.sender}: {text!r}")

    report = leakscan.leak_scan(transcript)
    print(f"\nleak scan: {report.frames_scanned} frames, {len(report.violations)} violations")
    for violation in report.violations:
        print(f"  {violation}")
    return 1 if report.violations else 0


if __name__ == "__main__":
    sys.exit(main())
