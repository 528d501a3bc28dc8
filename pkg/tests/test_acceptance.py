"""The ten acceptance criteria at their stated tolerances and runtime limits.

One PASS/FAIL line per criterion is printed in the terminal summary.
"""
import pytest

from qmetro import verify as V

from conftest import ACCEPTANCE_LINES

# seconds; None where no limit is stated
RUNTIME_LIMITS = {1: 300, 2: 120, 3: None, 4: 120, 5: None, 6: 600, 7: None, 8: None, 9: 120, 10: None}


@pytest.mark.parametrize("number", sorted(V.CRITERIA))
def test_criterion(number):
    res = V.CRITERIA[number]()
    limit = RUNTIME_LIMITS[number]
    in_time = limit is None or res.seconds < limit
    if not in_time:
        res.passed = False
        res.detail += f"; runtime {res.seconds:.0f} s exceeds {limit} s"
    ACCEPTANCE_LINES.append(res.line())
    print(res.line())
    assert res.passed, res.detail
