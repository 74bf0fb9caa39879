#!/usr/bin/env python3
"""Run both reference scenarios and print their transcripts.

Exit status is nonzero if either scenario deviates from its expected
outcome, so this doubles as a quick end-to-end smoke check:

    python scripts/demo_scenario.py [state-dir]

With a state-dir argument the registry and ledger are persisted there
(one subdirectory per scenario) for poking at with the CLI afterwards.
"""

import sys
from pathlib import Path

from consentry.scenarios import SCENARIO_NAMES, run_scenario


def main() -> int:
    base = Path(sys.argv[1]) if len(sys.argv) > 1 else None
    failures = 0
    for name in SCENARIO_NAMES:
        state_dir = base / name if base is not None else None
        result = run_scenario(name, state_dir=state_dir)
        print(result.transcript)
        print()
        if not result.ok:
            failures += 1
    if failures:
        print(f"{failures} scenario(s) deviated", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
