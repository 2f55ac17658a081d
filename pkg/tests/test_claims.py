import pytest

from tmfj2.adams_j2 import Unknown
from tmfj2.beta_catalog import ALPHA1, FormalProduct, beta1
from tmfj2.claims import (
    UndecidableRange, assemble_theorems, build_suite, filtration_two_rule, format_report,
    format_summary, image_of, low_filtration_rule, recheck_witness, sphere_verdict, verify_claims,
)
from tmfj2.monomial import Bidegree
from tmfj2.spectral import TorsionVerdict


@pytest.fixture(scope="module")
def desk_report(desk):
    return verify_claims(build_suite(max_stem=200), desk.tmf, desk.j2)


def test_desk_counts(desk_report):
    statuses = [r.status for r in desk_report.results]
    assert (len(statuses), statuses.count("verified"), statuses.count("open")) == (33, 29, 4)
    assert desk_report.ok


def test_suite_respects_max_stem():
    assert all(c.product.bidegree.stem <= 120 for c in build_suite(max_stem=120))
    assert len(build_suite(grid=(0,), max_stem=400)) < len(build_suite(max_stem=400))


def test_filtration_two_rule():
    for stem in (50, 130, 194, 274):
        assert filtration_two_rule(Bidegree(stem, 2))
    assert not filtration_two_rule(Bidegree(10, 2))
    assert not filtration_two_rule(Bidegree(50, 3))


def test_low_filtration_rule():
    hit = TorsionVerdict("x", "torsion", exponent=4, page=5)
    assert low_filtration_rule(Bidegree(60, 6), hit).kind == "free"
    assert low_filtration_rule(Bidegree(60, 10), hit).kind == "not-applicable"
    assert sphere_verdict(Bidegree(60, 6), hit).rule == "low-filtration"


def test_sphere_verdict_needs_filtration_two_rule():
    hit = TorsionVerdict("x", "torsion", exponent=4, page=5)
    # a d5 from (s+1, 2) is the only gap; closed when (s+1, 2) is a (50 mod 144) bidegree
    assert sphere_verdict(Bidegree(49, 7), hit).kind == "free"
    assert sphere_verdict(Bidegree(41, 7), hit).kind == "open"


def test_image_of_products():
    assert image_of(FormalProduct((ALPHA1, ALPHA1))) == {}
    assert image_of(FormalProduct((beta1(0),))) is not Unknown


def test_hidden_claims_use_divisibility(desk_report):
    hidden = [r for r in desk_report.results if r.claim.hidden]
    assert hidden
    for r in hidden:
        assert "tau-divisibility" in r.rules and r.verdicts["j2"] == "tau^4"


def test_witnesses_recheck(desk, desk_report):
    runs = {"tmf": desk.tmf.run, "j2": desk.j2.run}
    for r in desk_report.results:
        assert recheck_witness(r, runs), r.claim.id


def test_strict_mode_raises_outside_range(small):
    with pytest.raises(UndecidableRange):
        verify_claims(build_suite(max_stem=200), small.tmf, small.j2, strict=True)


def test_report_formats(desk_report):
    text = format_report(desk_report)
    assert text.count("claim: ") == len(desk_report.results)
    parts = assemble_theorems(desk_report)
    assert {p.name for p in parts if p.nonvanishing[0] == "verified"} >= {"beta1-products", "nonvanishing-line-1"}
    assert format_summary(desk_report, parts).startswith("claims: 33")
