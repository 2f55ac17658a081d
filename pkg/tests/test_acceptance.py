"""Acceptance criteria 1-8.  Each test carries a ``criterion`` marker; the
session prints one PASS/FAIL line per criterion (see conftest)."""

from fractions import Fraction
from pathlib import Path

import pytest

from tmfj2.beta_catalog import BetaIndex, stem_of
from tmfj2.chart_io import page_glyphs, reference_chart
from tmfj2.linalg import ModuleMap, Presentation, kernel_cokernel
from tmfj2.local import valuation
from tmfj2.monomial import Bidegree, enumerate_basis
from tmfj2.spectral import no_room_check
from tmfj2.tmf_model import DEFAULT_WINDOW, lattice_index, tmf_psi_compat_check

GOLDEN = Path(__file__).parent / "golden"


# ---------------------------------------------------------------- oracles


def gf_count(stems, window):
    """Basis sizes from power series: for filtration 0 the Δ-shifts of
    (1 + x^12)/(1 - x^8); for filtration 2k+e the single monomial α^e β^k Δ^m."""
    hi = stems[1]
    lo_m, hi_m = window
    offset = -24 * lo_m  # index shift so that negative stems fit in a list
    size = hi + offset + 1
    series0 = [0] * size
    base = [0] * size
    for n in range(0, size, 8):  # 1/(1 - x^8)
        base[n] += 1
        if n + 12 < size:
            base[n + 12] += 1  # times (1 + x^12)
    for m in range(lo_m, hi_m + 1):
        shift = 24 * m + offset
        for n, c in enumerate(base):
            if c and 0 <= n + shift < size:
                series0[n + shift] += c
    counts = {}
    for s in range(stems[0], hi + 1):
        if series0[s + offset]:
            counts[(s, 0)] = series0[s + offset]
    for f in range(1, 2 * ((hi + 6 + 24 * -lo_m) // 10) + 2):
        e, k = f % 2, f // 2
        for m in range(lo_m, hi_m + 1):
            s = 3 * e + 10 * k + 24 * m
            if stems[0] <= s <= hi:
                counts[(s, f)] = counts.get((s, f), 0) + 1
    return counts


def val3(n: int) -> int:
    v = 0
    while n % 3 == 0:
        n //= 3
        v += 1
    return v


YELLOW_ORACLE = {s: 3 ** val3(2 ** ((s + 1) // 2) - 1) for s in (7, 11, 23)}


def length(orders) -> tuple[int, int]:
    """(free rank, 3-adic length of the torsion)."""
    return (sum(1 for q in orders if q == 0), sum(valuation(Fraction(q)) for q in orders if q))


# ---------------------------------------------------------------- criterion 1


@pytest.mark.criterion(1)
def test_e2_dimensions_match_generating_function():
    stems, window = (0, 200), DEFAULT_WINDOW
    expected = gf_count(stems, window)
    got = {}
    for s in range(stems[0], stems[1] + 1):
        for f in range(0, 2 * (s + 6 * 24) // 10 + 2):
            n = len(enumerate_basis(Bidegree(s, f), window))
            if n:
                got[(s, f)] = n
    assert got == expected
    assert all((s + f) % 4 == 0 for s, f in got)


# ---------------------------------------------------------------- criterion 2

PRESENTATION_NAMES = {"α", "c4", "β", "c6", "[3Δ]", "[αΔ]", "[c4Δ]", "[c6Δ]", "[3Δ^2]", "[c4Δ^2]",
                      "[c6Δ^2]"}


def tmf_verdicts(runs):
    tr = runs.tmf
    return {
        "pages": tr.run.nontrivial_pages(),
        "names": {n.label for n in tr.names},
        "verdicts": {v.cls: str(v) for v in tr.verdicts},
        "index": {s: lattice_index(tr.run.e2, tr.einf, Bidegree(s, 0)) for s in (24, 48, 72)},
    }


@pytest.mark.criterion(2)
def test_tmf_run(desk):
    v = tmf_verdicts(desk)
    assert v["pages"] == [5, 9]
    assert v["names"] == PRESENTATION_NAMES
    assert v["index"] == {24: 3, 48: 3, 72: 1}
    assert v["verdicts"]["β^5"] == "tau^8-torsion"
    assert v["verdicts"]["αβ^2"] == "tau^4-torsion"
    assert v["verdicts"]["[αΔ]"] == "tau-torsion-free"
    assert not desk.tmf.run.unresolved
    assert tmf_psi_compat_check(desk.tmf.run.e2, 2, desk.config)


# ---------------------------------------------------------------- criterion 3


def yellow_orders(runs, stems=(7, 11, 23)):
    out = {}
    for s in stems:
        sl = runs.j2.run.e2.slice(Bidegree(s, 1))
        out[s] = sorted({q for lab, q in zip(sl.labels, sl.orders) if lab.origin == "yellow"})
    return out


@pytest.mark.criterion(3)
def test_j2_e2_structure(desk):
    assert YELLOW_ORACLE == {7: 3, 11: 9, 23: 9}
    assert yellow_orders(desk) == {s: [q] for s, q in YELLOW_ORACLE.items()}
    tmf_e2, j2_e2 = desk.tmf.run.e2, desk.j2.run.e2
    lo, hi = desk.config.stems
    checked = 0
    for bd, sl in j2_e2.slices.items():
        if not lo <= bd.stem <= hi:
            continue
        total = (0, 0)
        for src in (bd, bd.shift(1, -1)):
            t = tmf_e2.slice(src)
            if t is None or not t.n:
                continue
            pres = Presentation(t.n, tuple(tuple(Fraction(q if i == j else 0) for i in range(t.n))
                                           for j, q in enumerate(t.orders) if q))
            k = 2
            scal = [Fraction(k) ** lab.mono.weight - 1 for lab in t.labels]
            mat = [[scal[i] if i == j else Fraction(0) for j in range(t.n)] for i in range(t.n)]
            kc = kernel_cokernel(ModuleMap(pres, pres, mat))
            part = kc.kernel if src == bd else kc.cokernel
            rank, tors = part.free_rank, sum(valuation(Fraction(q)) for q in part.torsion_orders())
            total = (total[0] + rank, total[1] + tors)
        assert length(sl.orders) == total, bd
        checked += 1
    assert checked > 0


# ---------------------------------------------------------------- criterion 4


def j2_verdicts(runs):
    run = runs.j2.run
    return {
        "pages": run.nontrivial_pages(),
        "room": no_room_check(run.einf, (0, 134), range(run.final_r, 41)),
        "extensions": [(e.source, e.target, e.stem) for e in runs.j2.extensions if e.stem <= 134],
    }


@pytest.mark.criterion(4)
def test_j2_degenerates(desk):
    v = j2_verdicts(desk)
    assert v["room"] == []
    assert v["pages"] == [5, 9]
    # every intermediate page is also free of unresolved room
    assert not desk.j2.run.unresolved
    assert [e[2] for e in v["extensions"]] == [23, 95]


# ---------------------------------------------------------------- criterion 5


def claim_table(report):
    return {r.claim.id: (r.status, tuple(sorted(r.verdicts.items()))) for r in report.results}


@pytest.mark.criterion(5)
def test_claims_suite(claim_report):
    rep = claim_report
    by = rep.by_family()
    assert all(r.status == "verified" for fam, rs in by.items() if not fam.startswith("open-") for r in rs)
    assert all(r.status == "open" for fam, rs in by.items() if fam.startswith("open-") for r in rs)
    assert rep.ok
    # product of five: τ⁸-torsion in both runs, killed from filtration 1
    for r in by["five-x"]:
        assert r.verdicts["tmf"] == r.verdicts["j2"] == "tau^8"
        assert r.details["j2"].source_bidegree.filtration == 1
    # τ⁴-torsion in TMF, τ-torsion free in J²
    for fam in ("alpha-beta3/3-x", "alpha-beta7-x"):
        for r in by[fam]:
            assert (r.verdicts["tmf"], r.verdicts["j2"]) == ("tau^4", "free")
    # permanence
    for fam in ("beta2-x", "beta5-x"):
        assert all(r.verdicts["j2"] == "free" for r in by[fam])
    # τ⁴-torsion in J², freed in the sphere by the low-filtration rule
    for fam in ("beta2-xx", "beta5-xx"):
        for r in by[fam]:
            assert r.verdicts["j2"] == "tau^4" and "low-filtration" in r.rules
    # the two further nonvanishing lines
    for fam in ("alpha1-beta2-beta1^2", "alpha1-beta2-beta6/3^2", "alpha-beta7-beta1^2", "alpha-beta7-beta6/3^2"):
        assert all(r.verdicts == {"j2": "tau^4", "sphere": "free"} for r in by[fam]), fam
    for fam in ("bracket-beta6/9-beta1^3", "bracket-beta1-beta6/3^3"):
        assert all(r.verdicts == {"j2": "tau^8", "sphere": "free"} for r in by[fam]), fam
    assert sum(len(rs) for rs in by.values()) == 91


# ---------------------------------------------------------------- criterion 6


def brute_force_residues(stem_residue, smax=50, nmax=30, jmax=10_000):
    """All j with β_{s3^n/j} in stem ≡ stem_residue mod 144, j ≤ min(3^n, jmax)."""
    found = set()
    for n in range(nmax + 1):
        for s in range(1, smax + 1):
            if s % 3 == 0:
                continue
            i = s * 3 ** n
            for j in range(1, min(3 ** n, jmax) + 1):
                if (16 * i - 4 * j - 2) % 144 == stem_residue:
                    assert stem_of(BetaIndex(i, j)).stem % 144 == stem_residue
                    found.add(j % 36)
    return found


@pytest.mark.criterion(6)
def test_divided_beta_congruences():
    assert brute_force_residues(50) == {23}
    assert brute_force_residues(130) == {3}


# ---------------------------------------------------------------- criterion 7


@pytest.mark.criterion(7)
def test_window_independence_tmf_j2(desk, desk_wide):
    assert tmf_verdicts(desk) == tmf_verdicts(desk_wide)
    assert yellow_orders(desk) == yellow_orders(desk_wide)
    assert j2_verdicts(desk) == j2_verdicts(desk_wide)


@pytest.mark.criterion(7)
def test_window_independence_claims(claim_report, claim_report_wide):
    assert claim_table(claim_report) == claim_table(claim_report_wide)


# ---------------------------------------------------------------- criterion 8

LEGEND = {  # (stem, filtration) -> glyph origins drawn there
    (3, 1): {"blue", "yellow"}, (10, 2): {"blue"}, (13, 3): {"blue"}, (20, 4): {"blue"},
    (23, 1): {"yellow"}, (23, 5): {"blue"}, (26, 2): {"red"}, (27, 1): {"blue", "yellow"},
}


@pytest.mark.criterion(8)
@pytest.mark.parametrize("stems", [(0, 64), (70, 134)])
def test_chart_golden(chart_runs, stems):
    svg = reference_chart(chart_runs.j2.run, stems)
    golden = (GOLDEN / f"j2-e2-{stems[0]}-{stems[1]}.svg").read_text(encoding="utf-8")
    assert svg == golden


@pytest.mark.criterion(8)
def test_chart_legend(chart_runs):
    glyphs = page_glyphs(chart_runs.j2.run.e2, (0, 64))
    seen = {}
    for g in glyphs:
        seen.setdefault(tuple(g.bidegree), set()).add(g.origin)
    for bd, origins in LEGEND.items():
        assert seen.get(bd) == origins, bd
    # the yellow orders at stems 3 and 23
    orders = {(tuple(g.bidegree), g.origin): g.order for g in glyphs}
    assert orders[((3, 1), "yellow")] == 3
    assert orders[((23, 1), "yellow")] == 9
