from fractions import Fraction

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from tmfj2.monomial import ALPHA, BETA, DELTA, Bidegree, Monomial, RingElement, parse_element
from tmfj2.spectral import (
    DegreeMismatch, DifferentialRule, RuleUncertified, SSClassName, differential_squared_zero,
    leibniz_closure, make_e2_page, no_room_check, run_spectral_sequence, torsion_order, turn_page,
    validate_zero_certificates,
)
from tmfj2.tmf_model import (
    TmfE2Config, default_rules, derivation_for, element, lattice_index, load_rules, rule_to_dict,
    tmf_label_derivative, tmf_psi_compat_check,
)

CFG = TmfE2Config()
D5 = derivation_for(CFG, 5)
D9 = derivation_for(CFG, 9)

integral = st.builds(lambda m, a, b: Monomial(m=m, a=a, b=b), st.integers(-4, 4), st.integers(0, 3),
                     st.integers(0, 1))
torsion = st.builds(lambda m, k, e: Monomial(m=m, k=k, eps=e), st.integers(-4, 4), st.integers(0, 5),
                    st.integers(0, 1)).filter(lambda x: x.torsion)
monomials = st.one_of(integral, torsion)


def el(x) -> RingElement:
    return RingElement.from_monomial(x)


def sign(x: Monomial) -> int:
    return -1 if x.bidegree.stem % 2 else 1


# ------------------------------------------------------------------ rules and derivation


def test_generator_differentials():
    assert D5.of_element(el(DELTA)) == el(ALPHA) * el(BETA) * el(BETA)
    assert D5.of_element(el(ALPHA)) == 0 and D5.of_element(el(BETA)) == 0
    assert D9.of_element(parse_element("αΔ^2")) == parse_element("β^5")


def test_d5_on_delta_squared():
    assert D5.of_element(parse_element("Δ^2")) == parse_element("2αβ^2Δ")


def test_degree_mismatch_rejected():
    with pytest.raises(DegreeMismatch):
        DifferentialRule(5, DELTA, el(BETA))


def test_empty_target_certificate_on_nonzero_value():
    bad = DifferentialRule(5, DELTA, el(ALPHA) * el(BETA) * el(BETA), certificate="empty-target", name="bad")
    with pytest.raises(RuleUncertified):
        validate_zero_certificates([bad], make_e2_page({}, lambda l: 0, lambda l: True), lambda bd: [])


@settings(max_examples=150)
@given(monomials, monomials)
def test_leibniz_d5(x, y):
    lhs = D5.of_element(el(x) * el(y))
    rhs = D5.of_element(el(x)) * el(y) + (el(x) * D5.of_element(el(y))).scale(sign(x))
    assert lhs == rhs


@settings(max_examples=150)
@given(monomials)
def test_d5_squares_to_zero(x):
    assert D5.of_element(D5.of_element(el(x))) == 0


@settings(max_examples=100)
@given(st.integers(-3, 3), st.integers(0, 4), st.integers(0, 4))
def test_leibniz_d9_on_survivors(m, k, j):
    # β^k and αΔ^{3m+2} are d5-cycles; d9 is a derivation on them
    x, y = Monomial(m=3 * m + 2, eps=1), Monomial(k=k)
    z = Monomial(m=3 * j, k=1)
    for a, b in ((x, y), (y, z), (x, z)):
        lhs = D9.of_element(el(a) * el(b))
        rhs = D9.of_element(el(a)) * el(b) + (el(a) * D9.of_element(el(b))).scale(sign(a))
        assert lhs == rhs


def test_rules_round_trip(tmp_path):
    rules = default_rules()
    path = tmp_path / "rules.yaml"
    path.write_text(yaml.safe_dump({"differentials": [rule_to_dict(r) for r in rules]}, allow_unicode=True),
                    encoding="utf-8")
    assert load_rules(path) == rules


# ------------------------------------------------------------------ pages


def toy_page():
    a = SSClassName(Monomial(m=0))  # placeholder labels; only bidegrees matter below
    labs = {Bidegree(1, 0): [a], Bidegree(0, 3): [SSClassName(Monomial(k=1))]}
    return make_e2_page(labs, lambda l: 0, lambda l: True)


def test_no_room_check_finds_candidate():
    cands = no_room_check(toy_page(), (0, 5), range(2, 6))
    assert [(c.r, tuple(c.source), tuple(c.target)) for c in cands] == [(3, (1, 0), (0, 3))]


def test_turn_page_kills_both_ends():
    page = toy_page().with_r(3)
    dmap = {Bidegree(1, 0): [[Fraction(3)]]}
    nxt = turn_page(page, dmap, 3)
    assert nxt.slices[Bidegree(1, 0)].is_zero()
    assert nxt.module(Bidegree(0, 3)).torsion_orders() == (3,)


def test_d_squared_zero_on_tmf_pages(small):
    run = small.tmf.run
    for r, dmap in run.differentials.items():
        assert differential_squared_zero(run.pages[r], dmap, r)


def test_d5_closure_is_sparse(small):
    e5 = small.tmf.run.pages[5]
    dmap = leibniz_closure(tmf_label_derivative(D5), e5, 5)
    # only nonzero matrices are stored, one per source with a live target
    for bd, M in dmap.items():
        assert any(any(row) for row in M)
        assert not e5.slices[bd.shift(-1, 5)].is_zero()
    assert len(dmap) < len(e5.slices) // 2


def test_tmf_verdicts(small):
    run = small.tmf.run
    v = torsion_order(element("β^5"), run, "β^5")
    assert (v.kind, v.exponent, v.page) == ("torsion", 8, 9)
    assert v.source_bidegree == Bidegree(51, 1)
    assert torsion_order(element("αβ^2"), run).exponent == 4
    assert torsion_order(element("β^4"), run).kind == "free"


def test_lattice_indices(small):
    run = small.tmf.run
    assert [lattice_index(run.e2, run.einf, Bidegree(s, 0)) for s in (24, 48, 72)] == [3, 3, 1]


@pytest.mark.parametrize("k", [1, 2, 5])
def test_psi_compatibility(small, k):
    assert tmf_psi_compat_check(small.tmf.run.e2, k, small.config)


def test_run_reports_room_when_differentials_missing(small):
    run = run_spectral_sequence(small.tmf.run.e2, {}, (0, 80))
    assert run.unresolved and run.einf.slices == small.tmf.run.e2.slices


def test_fabricated_page_has_one_d5_candidate():
    labs = {Bidegree(10, 2): [SSClassName(Monomial(k=1))], Bidegree(9, 7): [SSClassName(Monomial(k=3, eps=1))]}
    page = make_e2_page(labs, lambda l: 3, lambda l: True)
    cands = no_room_check(page, (0, 20), range(2, 41))
    assert [(c.r, tuple(c.source), tuple(c.target)) for c in cands] == [(5, (10, 2), (9, 7))]


def test_einf_torsion_is_72_periodic(desk):
    einf = desk.tmf.einf

    def torsion_lengths(stem):
        out = {}
        for bd, sl in einf.slices.items():
            if bd.stem == stem and bd.filtration > 0 and all(sl.certified) and not sl.is_zero():
                out[bd.filtration] = sorted(q for _, q in sl.generators())
        return out

    for stem in range(0, 72):
        assert torsion_lengths(stem) == torsion_lengths(stem + 72), stem
