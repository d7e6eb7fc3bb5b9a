"""One test per acceptance criterion; each prints a single pass/fail line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""

import sys

import pytest

from cfdim.repro import CRITERIA, run_criterion

try:
    from conftest import ACCEPTANCE_ROWS
except ImportError:  # run as a script
    ACCEPTANCE_ROWS = []

SEED = 42


@pytest.mark.parametrize("criterion", sorted(CRITERIA), ids=lambda i: f"criterion{i:02d}")
def test_criterion(criterion):
    row = run_criterion(criterion, SEED)
    line = row.line()
    print(line)
    ACCEPTANCE_ROWS.append(line)
    assert row.passed, line


if __name__ == "__main__":
    failed = 0
    for i in sorted(CRITERIA):
        row = run_criterion(i, SEED)
        print(row.line(), flush=True)
        failed += not row.passed
    sys.exit(1 if failed else 0)
