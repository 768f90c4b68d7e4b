"""Acceptance gate: every check suite must pass at its stated tolerance.

One parametrized case per suite, so `pytest -v` shows a pass or fail line
for each acceptance property. Budget rows (runtime_seconds) are part of
the suites themselves.
"""

import pytest

from red.verify import SUITES, run_suite

# registry order; the label says what each suite establishes
LABELS = {
    "moments": "kernel-moments",
    "mcfp": "walkers-match-density-evolution",
    "gdecomp": "mismatch-decomposition",
    "bestmatch": "best-matching-optimum",
    "boostcov": "boost-covariance",
    "madelung": "density-phase-matches-unitary",
    "conservation": "relational-momentum-conservation",
    "constraint": "pinned-frame-zero-momentum",
    "entropyrate": "entropy-rate-identity",
    "spreading": "free-packet-spreading",
}

_REPORTS = {}


def _report(suite):
    if suite not in _REPORTS:
        _REPORTS[suite] = run_suite(suite)
    return _REPORTS[suite]


def test_every_suite_is_covered():
    assert set(LABELS) == set(SUITES)


@pytest.mark.parametrize(
    "suite", list(SUITES), ids=[LABELS[name] for name in SUITES])
def test_acceptance(suite):
    report = _report(suite)
    assert report.passed, "\n" + "\n".join(report.lines())
