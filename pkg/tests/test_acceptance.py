"""Acceptance criteria at their stated tolerances, one PASS/FAIL line each."""

import pytest

from polymerlab.acceptance import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.summary
