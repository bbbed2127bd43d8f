#!/usr/bin/env python3
"""Run the acceptance criteria and print the pass/fail table.

Thin driver over tests/test_acceptance.py; exits nonzero when any
criterion fails."""

import pathlib
import re
import subprocess
import sys

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main() -> int:
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "tests/test_acceptance.py", "-s", "-q"],
        capture_output=True,
        text=True,
        cwd=ROOT,
    )
    lines = re.findall(r"criterion [ 0-9]+ (?:PASS|FAIL).*", proc.stdout)
    seen = set()
    for line in lines:
        if line not in seen:
            seen.add(line)
            print(line)
    tail = [l for l in proc.stdout.splitlines() if "passed" in l or "failed" in l]
    if tail:
        print(tail[-1].strip())
    return proc.returncode


if __name__ == "__main__":
    raise SystemExit(main())
