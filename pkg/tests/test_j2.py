from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tmfj2.adams_j2 import (
    PsiOperator, Unknown, WindowTooSmall, apply_psi, build_j2_e2, j2_product, yellow_order,
)
from tmfj2.local import order_of
from tmfj2.monomial import ALPHA, BETA, C4, DELTA, Bidegree, Monomial, RingElement, parse_monomial
from tmfj2.spectral import SSClassName, torsion_order
from tmfj2.tmf_model import TmfE2Config, build_tmf_e2, element

monomials = st.one_of(
    st.builds(lambda m, a, b: Monomial(m=m, a=a, b=b), st.integers(-3, 3), st.integers(0, 3), st.integers(0, 1)),
    st.builds(lambda m, k, e: Monomial(m=m, k=k, eps=e), st.integers(-3, 3), st.integers(0, 4),
              st.integers(0, 1)).filter(lambda x: x.torsion),
)
units = st.integers(1, 40).filter(lambda k: k % 3)


def el(x, c=1):
    return RingElement.from_monomial(x, c)


def blue(text, c=1):
    return {SSClassName(parse_monomial(text)): Fraction(c)}


def red(text, c=1):
    return {SSClassName(parse_monomial(text), True): Fraction(c)}


def test_psi_examples():
    op = PsiOperator(2)
    assert apply_psi(op, el(C4)) == el(C4, 16)
    assert apply_psi(op, el(BETA)) == el(BETA)
    assert apply_psi(op, el(DELTA)) == el(DELTA, 4096)


def test_psi_rejects_multiples_of_three():
    with pytest.raises(ValueError):
        PsiOperator(3)


@given(units, monomials, monomials)
def test_psi_multiplicative(k, x, y):
    op = PsiOperator(k)
    assert apply_psi(op, el(x) * el(y)) == apply_psi(op, el(x)) * apply_psi(op, el(y))


def _v3(n: int) -> int:
    v = 0
    while n % 3 == 0:
        n, v = n // 3, v + 1
    return v


@given(st.integers(0, 200).map(lambda n: 2 * n + 1))
def test_yellow_order_matches_valuation(stem):
    assert yellow_order(stem) == 3 ** _v3(2 ** ((stem + 1) // 2) - 1)


def test_window_too_small():
    cfg = TmfE2Config(stems=(0, 30), window=(0, 4))
    with pytest.raises(WindowTooSmall):
        build_j2_e2(build_tmf_e2(cfg), 2, cfg)


def orders_at(page, bd, origin):
    sl = page.slice(bd)
    return sorted(q for lab, q in zip(sl.labels, sl.orders) if lab.origin == origin)


def test_e2_examples(small):
    e2 = small.j2.run.e2
    alpha = SSClassName(Monomial(eps=1))
    assert alpha in e2.slice(Bidegree(3, 1)).labels
    assert set(orders_at(e2, Bidegree(7, 1), "yellow")) == {3}
    assert set(orders_at(e2, Bidegree(11, 1), "yellow")) == {9}
    assert orders_at(e2, Bidegree(2, 2), "red")  # ∂α
    assert orders_at(e2, Bidegree(7, 1), "blue") == []


def test_boundary_shifts_bidegree(small):
    for bd, sl in small.j2.run.e2.slices.items():
        for lab in sl.labels:
            assert lab.bidegree == bd
            assert lab.mono.bidegree.shift(-int(lab.boundary), int(lab.boundary)) == bd
        assert (bd.stem + bd.filtration) % 4 == 0


def test_induced_d5_on_boundary(small):
    run = small.j2.run
    src, tgt = SSClassName(Monomial(m=2), True), SSClassName(Monomial(m=1, k=2, eps=1), True)
    ssl, tsl = run.pages[5].slice(src.bidegree), run.pages[5].slice(tgt.bidegree)
    M = run.differentials[5][src.bidegree]
    col = ssl.index(src)
    assert M[tsl.index(tgt)][col] % 3 == 2


@pytest.mark.parametrize("text,boundary,verdict", [
    ("αβ^2", False, "tau-torsion-free"),
    ("αβ^2", True, "tau^4-torsion"),
    ("αβ", True, "tau-torsion-free"),
    ("β^5", False, "tau^8-torsion"),
    ("β^5", True, "tau^8-torsion"),
    ("αΔ", True, "tau-torsion-free"),
    ("βΔ^3", True, "tau-torsion-free"),
    ("αβΔ", False, "tau-torsion-free"),
])
def test_j2_verdicts(desk, text, boundary, verdict):
    assert str(torsion_order(element(text, boundary), desk.j2.run)) == verdict


def test_verdict_at_range_edge_is_undecidable(small):
    # ∂(βΔ³) sits in stem 81, one past the computed range
    assert torsion_order(element("βΔ^3", True), small.j2.run).kind == "undecidable"


def test_only_d5_and_d9(small):
    assert small.j2.run.nontrivial_pages() == [5, 9]
    assert not small.j2.run.unresolved


def test_extension(small):
    exts = small.j2.extensions
    assert [(e.source, e.target, e.multiplier, e.stem) for e in exts] == [("[∂(Δ)]", "[αβ^2]", 3, 23)]


def test_products():
    assert j2_product(red("αΔ"), red("βΔ^3")) == {}
    assert j2_product(blue("β"), red("αΔ")) == red("αβΔ")
    assert j2_product(blue("β"), blue("βΔ^6")) == blue("β^2Δ^6")
    assert j2_product(blue("α"), blue("α")) == {}
    assert j2_product({SSClassName(Monomial(a=1), True): Fraction(1)}, blue("β")) is Unknown
    with pytest.raises(TypeError):
        bool(Unknown)


def test_alpha_is_kernel_class():
    assert PsiOperator(2).minus_one(Monomial(eps=1)) == 0
    assert order_of(PsiOperator(2).minus_one(parse_monomial("c4"))) == 3
    assert ALPHA.bidegree == Bidegree(3, 1)
