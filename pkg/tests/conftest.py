import random

import pytest

from semisimple_cohft.core_algebra import RATIONAL, ComplexBackend
from semisimple_cohft.frobenius import diagonal_algebra, idempotent_decomposition, quantum_p1, rank_one


@pytest.fixture(scope="session")
def complex_backend():
    return ComplexBackend(256, 1e-40)


@pytest.fixture(scope="session")
def rank_one_frame():
    return idempotent_decomposition(rank_one(), normalize=False)


@pytest.fixture(scope="session")
def pair_frame():
    """θ = (1, 1): two orthogonal idempotents of unit trace."""
    return idempotent_decomposition(diagonal_algebra([1, 1]), normalize=False)


@pytest.fixture(scope="session")
def p1_frame(complex_backend):
    return idempotent_decomposition(quantum_p1(1, complex_backend)).require_normalized()


@pytest.fixture
def rng():
    return random.Random(20240611)



# -- acceptance report ----------------------------------------------------------
#
# Tests marked ``@pytest.mark.acceptance("AC-k", "clause")`` are grouped per
# criterion and the terminal summary prints one PASS/FAIL line per criterion.
# A clause kept as a strict expected failure counts as FAIL for its criterion.
# Tests may attach a measurement via ``record_property("detail", text)``.

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(criterion, clause): clause of an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        crit, clause = marker.args
        if hasattr(report, "wasxfail"):
            status = "FAIL"
            note = f"expected failure: {report.wasxfail}"
        else:
            status = "PASS" if report.passed else "FAIL"
            note = ""
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _ACCEPTANCE.setdefault(crit, []).append((clause, status, detail or note))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE, key=lambda c: int(c.split("-")[1])):
        clauses = _ACCEPTANCE[crit]
        status = "PASS" if all(s == "PASS" for _, s, _ in clauses) else "FAIL"
        tr.write_line(f"{crit}: {status}")
        for clause, s, detail in clauses:
            tr.write_line(f"    [{s}] {clause}" + (f" — {detail}" if detail else ""))
