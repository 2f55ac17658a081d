"""Session-scoped runs shared by the test modules, and the per-criterion
pass/fail report printed at the end of every pytest session."""

from dataclasses import dataclass

import pytest

from tmfj2.adams_j2 import J2Run, build_j2_e2, induce_j2_differentials
from tmfj2.claims import ClaimReport, build_suite, verify_claims
from tmfj2.tmf_model import CLAIM_WINDOW, DEFAULT_WINDOW, TmfE2Config, TmfRun, build_tmf_e2, run_tmf


@dataclass
class Runs:
    config: TmfE2Config
    tmf: TmfRun
    j2: J2Run


def compute(stems, window) -> Runs:
    cfg = TmfE2Config(stems=stems, window=window)
    e2 = build_tmf_e2(cfg)
    tmf = run_tmf(e2, cfg)
    return Runs(cfg, tmf, induce_j2_differentials(build_j2_e2(e2, 2, cfg), tmf))


def widen(window, by=3):
    return window[0] - by, window[1] + by


@pytest.fixture(scope="session")
def desk() -> Runs:
    """Default desk-scale range: stems 0-200, window [-6, 18]."""
    return compute((0, 200), DEFAULT_WINDOW)


@pytest.fixture(scope="session")
def desk_wide() -> Runs:
    return compute((0, 200), widen(DEFAULT_WINDOW))


@pytest.fixture(scope="session")
def chart_runs() -> Runs:
    """The configuration the golden charts were generated from."""
    return compute((0, 134), DEFAULT_WINDOW)


@pytest.fixture(scope="session")
def small() -> Runs:
    return compute((0, 80), DEFAULT_WINDOW)


def _claims(runs: Runs) -> ClaimReport:
    return verify_claims(build_suite(max_stem=400), runs.tmf, runs.j2)


@pytest.fixture(scope="session")
def claim_runs() -> Runs:
    return compute((0, 400), CLAIM_WINDOW)


@pytest.fixture(scope="session")
def claim_report(claim_runs) -> ClaimReport:
    return _claims(claim_runs)


@pytest.fixture(scope="session")
def claim_report_wide() -> ClaimReport:
    return _claims(compute((0, 400), widen(CLAIM_WINDOW)))


# --------------------------------------------------------------------------
# acceptance report

_OUTCOMES: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _OUTCOMES.setdefault(mark.args[0], []).append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_OUTCOMES):
        results = _OUTCOMES[n]
        ok = all(o == "passed" for _, o in results)
        names = ", ".join(name for name, _ in results)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  ({names})")
