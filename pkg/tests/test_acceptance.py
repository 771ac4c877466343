"""Acceptance criteria, one test each; every test prints a PASS/FAIL line with measured values and thresholds."""
import pytest

import conftest
from slabfpp.acceptance import CRITERIA, Suite


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    return Suite(workers=1, out_dir=tmp_path_factory.mktemp("acceptance"))


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion{n}_{CRITERIA[n].__name__}")
def test_criterion(suite, number):
    res = CRITERIA[number](suite)
    line = res.line()
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, line
