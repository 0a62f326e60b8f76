#!/usr/bin/env python3
"""Print every controller flow timeline at one controller clock.

Covers agile entry/exit/snoop for C6A and C6AE plus the C1 and C6
reference flows, so the latency relationships (agile entry+exit around
a hundred nanoseconds, C6 at tens of microseconds) sit side by side.

Usage:
    python scripts/fsm_traces.py [--mhz N] [--out-dir DIR]
"""

import argparse
import os
import sys

from cstatesim import fsm
from cstatesim.reporting import format_timeline, timeline_csv


def all_timelines(mhz: int):
    for variant in ("C6A", "C6AE"):
        yield fsm.entry_timeline(variant, mhz)
        yield fsm.exit_timeline(variant, mhz)
        yield fsm.snoop_timeline(variant, mhz)
    for variant in ("C1", "C6"):
        for flow in ("entry", "exit"):
            yield fsm.reference_flow(variant, flow, mhz)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mhz", type=int, default=fsm.DEFAULT_CONTROLLER_MHZ,
                        help="controller clock in MHz (default 500)")
    parser.add_argument("--out-dir", help="also write one CSV per flow here")
    args = parser.parse_args()

    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)

    for timeline in all_timelines(args.mhz):
        print(format_timeline(timeline))
        print()
        if args.out_dir:
            name = f"{timeline.variant}_{timeline.flow}.csv".lower()
            path = os.path.join(args.out_dir, name)
            with open(path, "w") as f:
                f.write(timeline_csv(timeline))

    agile = (fsm.entry_timeline("C6A", args.mhz).total_ns
             + fsm.exit_timeline("C6A", args.mhz).total_ns)
    deep = (fsm.reference_flow("C6", "entry", args.mhz).total_ns
            + fsm.reference_flow("C6", "exit", args.mhz).total_ns)
    print(f"agile round trip {agile} ns vs C6 round trip {deep} ns "
          f"({deep / agile:.0f}x slower)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
