"""Claims on the TMF / J² side of the β-family (non)vanishing results.

A claim names a product of catalogued family elements, the torsion
verdicts expected for its images in TMF and J², and the expected verdict in
the sphere.  Sphere verdicts are never computed from a sphere spectral
sequence: they come from the J² torsion verdict, either directly (a free
image) or through the two filtration rules.  Vanishing statements about the sphere are trusted ledger inputs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .adams_j2 import J2Run, Unknown, j2_product
from .beta_catalog import (
    ALPHA1,
    PERIOD,
    FamilyElement,
    FormalProduct,
    beta1,
    beta63,
    beta69_flagged,
    hurewicz_image,
    load_predicate,
    mrw_solutions,
)
from .monomial import Bidegree
from .spectral import SSClassName, SpectralRun, TorsionVerdict, torsion_order
from .tmf_model import TmfRun

MAX_TORSION = 8
DEFAULT_GRID = (0, 1)
MAX_STEM = 400


class UndecidableRange(RuntimeError):
    pass


@dataclass(frozen=True)
class SphereVerdict:
    kind: str  # free | open | not-applicable
    rule: str = ""
    note: str = ""

    def __str__(self) -> str:
        return "tau-torsion-free" if self.kind == "free" else self.kind


def low_filtration_rule(bd: Bidegree, image: TorsionVerdict) -> SphereVerdict:
    """A class whose image is exactly τ^r-torsion with r ≥ f − 2 is τ-torsion
    free: a killing d_{w+1} (w ≥ r) would start in filtration ≤ 1, where every
    class is a permanent cycle."""
    if image.kind != "torsion":
        return SphereVerdict("not-applicable", note=f"image is {image}")
    if image.exponent >= bd.filtration - 2:
        return SphereVerdict("free", "low-filtration",
                             f"r={image.exponent} ≥ f−2={bd.filtration - 2}")
    return SphereVerdict("not-applicable", note=f"r={image.exponent} < f−2={bd.filtration - 2}")


def filtration_two_rule(bd: Bidegree) -> bool:
    """The unit map to J² is zero mod τ in bidegrees (50+144k, 2) and (130+144k, 2).

    Holds where the admissibility predicate has a clause for the stem and every
    divided β candidate there carries that clause's j congruence."""
    if bd.filtration != 2 or bd.stem < 0:
        return False
    clause = next((c for c in load_predicate() if c.stem_residue == bd.stem % PERIOD), None)
    if clause is None:
        return False
    cands = mrw_solutions(bd, bounds=(12, 6, 1000))
    return all(c.j_mod_36 % clause.j_modulus == clause.j_residue for c in cands)


def sphere_verdict(bd: Bidegree, image: TorsionVerdict) -> SphereVerdict:
    """Combine the two filtration rules.  If x were τ^w-torsion (w ≥ r), it
    would be hit by a d_{w+1} from filtration g = f − w − 1.  Every such w
    must be excluded: g ≤ 1 by the low-filtration rule, g = 2 by the
    filtration-two rule at (s+1, 2)."""
    if image.kind == "free":
        return SphereVerdict("free", "detection", "image is τ-torsion free")
    if image.kind != "torsion":
        return SphereVerdict("not-applicable", note=f"image is {image}")
    low = low_filtration_rule(bd, image)
    if low.kind == "free":
        return low
    for w in range(image.exponent, bd.filtration):
        g = bd.filtration - w - 1
        if g <= 1:
            break
        if g == 2 and filtration_two_rule(Bidegree(bd.stem + 1, 2)):
            continue
        return SphereVerdict("open", note=f"a d{w + 1} from ({bd.stem + 1},{g}) is not excluded")
    return SphereVerdict("free", "filtration-two", f"source bidegree ({bd.stem + 1},2) maps to zero mod τ")


# --------------------------------------------------------------------------
# claims


@dataclass(frozen=True)
class Claim:
    id: str
    family: str
    product: FormalProduct
    params: Mapping[str, object]
    expected: Mapping[str, str]  # spectrum -> "tau^w" | "free" | "open"
    mode: str = "machine"
    hidden: bool = False  # product vanishes on E2; locate it by τ-divisibility
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class LedgerEntry:
    id: str
    statement: str
    verdict: str
    provenance: str = "trusted"


@dataclass
class ClaimResult:
    claim: Claim
    status: str  # verified | refuted | undecidable | open
    verdicts: dict[str, str]
    witness: str = ""
    rules: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    details: dict[str, TorsionVerdict] = field(default_factory=dict)


@dataclass
class ClaimReport:
    results: list[ClaimResult]

    def by_family(self) -> dict[str, list[ClaimResult]]:
        out: dict[str, list[ClaimResult]] = {}
        for r in self.results:
            out.setdefault(r.claim.family, []).append(r)
        return out

    def failures(self) -> list[ClaimResult]:
        return [r for r in self.results if r.claim.mode == "machine" and r.status not in ("verified", "open")]

    @property
    def ok(self) -> bool:
        return not self.failures()


def _x_choices(grid: Sequence[int]) -> list[FamilyElement]:
    return [beta1(s) for s in grid] + [beta63(s) for s in grid]


def _choose(elems: Sequence[FamilyElement], n: int):
    return itertools.combinations_with_replacement(sorted(set(elems)), n)


def _fmt(elems: Iterable[FamilyElement]) -> str:
    return "(" + ",".join(str(e) for e in elems) + ")"


def build_suite(grid: Sequence[int] = DEFAULT_GRID, max_stem: int = MAX_STEM) -> list[Claim]:
    """The claim grid: every family parameter ranges over ``grid``, and
    claims whose total stem exceeds ``max_stem`` are dropped."""
    xs = _x_choices(grid)
    b1s = [beta1(s) for s in grid]
    b63s = [beta63(s) for s in grid]
    claims: list[Claim] = []

    def add(family, factors, params, expected, hidden=False, flags=()):
        prod = FormalProduct(tuple(factors))
        if prod.bidegree.stem > max_stem:
            return
        pid = ";".join(f"{k}={v}" for k, v in params.items())
        claims.append(Claim(f"{family}[{pid}]", family, prod, dict(params), dict(expected),
                            hidden=hidden, flags=tuple(flags)))

    for x in _choose(xs, 5):
        add("five-x", x, {"x": _fmt(x)}, {"tmf": "tau^8", "j2": "tau^8", "sphere": "free"})
    for lead in ("alpha-beta3/3", "alpha-beta7"):
        for t in grid:
            for x in xs:
                add(f"{lead}-x", (FamilyElement(lead, t), x), {"t": t, "x": str(x)},
                    {"tmf": "tau^4", "j2": "free"})
    for lead in ("beta2", "beta5"):
        for t in grid:
            for x in xs:
                add(f"{lead}-x", (FamilyElement(lead, t), x), {"t": t, "x": str(x)}, {"j2": "free"})
            for x in _choose(xs, 2):
                add(f"{lead}-xx", (FamilyElement(lead, t),) + x, {"t": t, "x": _fmt(x)},
                    {"j2": "tau^4", "sphere": "free"})
    for t in grid:
        for pool, tag in ((b1s, "beta1"), (b63s, "beta6/3")):
            for x in _choose(pool, 2):
                add(f"alpha1-beta2-{tag}^2", (ALPHA1, FamilyElement("beta2", t)) + x,
                    {"t": t, "x": _fmt(x)}, {"j2": "tau^4", "sphere": "free"}, hidden=True)
                add(f"alpha-beta7-{tag}^2", (FamilyElement("alpha-beta7", t),) + x,
                    {"t": t, "x": _fmt(x)}, {"j2": "tau^4", "sphere": "free"})
    for t in grid:
        for w in grid:
            for x in _choose(b1s, 3):
                add("bracket-beta6/9-beta1^3", (FamilyElement("bracket-beta5", t), beta69_flagged(w)) + x,
                    {"t": t, "w": w, "x": _fmt(x)}, {"j2": "tau^8", "sphere": "free"},
                    flags=("denominator 9 read as 3",))
            for x in _choose(b63s, 3):
                add("bracket-beta1-beta6/3^3", (FamilyElement("bracket-beta5", t), beta1(w)) + x,
                    {"t": t, "w": w, "x": _fmt(x)}, {"j2": "tau^8", "sphere": "free"})
    # the products with one β_{1+9s} factor removed: surfaced, not decided
    for x in _choose(b1s, 3):
        add("open-alpha1-beta1^3", (ALPHA1,) + x, {"x": _fmt(x)}, {"sphere": "open"})
    for t in grid:
        for x in _choose(b1s, 3):
            add("open-beta5-beta1^3", (FamilyElement("beta5", t),) + x, {"t": t, "x": _fmt(x)},
                {"sphere": "open"})
    for x in _choose(b1s, 2):
        add("open-alpha1-beta6/3-beta1^2", (ALPHA1, beta63(0)) + x, {"x": _fmt(x)}, {"sphere": "open"})
    return sorted(claims, key=lambda c: c.id)


VANISHING_LEDGER = (
    LedgerEntry("six-beta1", "∏_{i=1}^6 β_{1+9s_i} is τ⁸-torsion in the synthetic sphere", "vanishes"),
    LedgerEntry("beta2-beta1^3", "β_{2+9t}∏_{i=1}^3 β_{1+9s_i} is τ⁴-torsion in the synthetic sphere", "vanishes"),
    LedgerEntry("alpha-beta3/3-beta1^2", "[α1β_{3/3}]∏_{i=1}^2 β_{1+9s_i} is τ⁴-torsion in the synthetic sphere",
                "vanishes"),
    LedgerEntry("alpha1-beta1^4", "α1∏_{i=1}^4 β_{1+9s_i} is τ⁴-torsion in the synthetic sphere", "vanishes"),
    LedgerEntry("beta5-beta1^4", "β_{5+9t}∏_{i=1}^4 β_{1+9s_i} is τ⁴-torsion in the synthetic sphere", "vanishes"),
    LedgerEntry("alpha1-beta6/3-beta1^3", "α1β_{6/3}∏_{i=1}^3 β_{1+9s_i} is τ⁴-torsion in the synthetic sphere",
                "vanishes"),
    LedgerEntry("alpha1-beta2-beta1^3", "α1β_{2+9t}∏_{i=1}^3 β_{1+9s_i} vanishes, a multiple of beta2-beta1^3",
                "vanishes"),
)


# --------------------------------------------------------------------------
# evaluation


def image_of(product: FormalProduct):
    """J² E2 image of a formal product: a dict of labels, {} for zero, or Unknown."""
    acc: Optional[dict] = None
    for f in product.factors:
        img = hurewicz_image(f)
        if acc is None:
            acc = dict(img)
            continue
        acc = j2_product(acc, img)
        if acc is Unknown:
            return Unknown
        if not acc:
            return {}
    return acc or {}


def _code(v: TorsionVerdict) -> str:
    if v.kind == "torsion":
        return f"tau^{v.exponent}"
    return v.kind


def tau_divisibility(run: SpectralRun, bd: Bidegree, max_shift: int = MAX_TORSION - 1):
    """Permanent classes z in (s, f+d), 1 ≤ d ≤ max_shift, whose τ-torsion
    order exceeds d.  Returns (z name, d, torsion verdict of z)."""
    out = []
    for d in range(1, max_shift + 1):
        zbd = bd.shift(0, d)
        sl = run.e2.slice(zbd)
        if sl is None:
            continue
        for lab in sl.labels:
            v = torsion_order({lab: Fraction(1)}, run, str(lab))
            if v.kind == "free" or (v.kind == "torsion" and v.exponent > d):
                out.append((lab, d, v))
            elif v.kind == "undecidable":
                out.append((lab, d, v))
    return out


def _verdict_in(run: SpectralRun, element: Mapping, name: str) -> TorsionVerdict:
    if element is Unknown:
        return TorsionVerdict(name, "undecidable", note="product with a yellow factor")
    if not element:
        return TorsionVerdict(name, "zero")
    return torsion_order(element, run, name)


def _tmf_part(element) -> dict:
    return {SSClassName(l.mono): c for l, c in element.items() if not l.boundary}


def evaluate(claim: Claim, tmf: TmfRun, j2: J2Run) -> ClaimResult:
    bd = claim.product.bidegree
    img = image_of(claim.product)
    verdicts: dict[str, str] = {}
    details: dict[str, TorsionVerdict] = {}
    rules: list[str] = []
    notes: list[str] = list(claim.flags)
    witness = ""
    if bd.stem > j2.run.stems[1]:
        return ClaimResult(claim, "undecidable", {}, notes=[f"stem {bd.stem} outside computed range"])
    if img is Unknown:
        jv = TorsionVerdict(str(claim.product), "undecidable", note="yellow factor")
    elif not img:
        if not claim.hidden:
            jv = TorsionVerdict(str(claim.product), "zero")
        else:
            cands = tau_divisibility(j2.run, bd)
            notes.append("E2 product vanishes; candidates: " +
                         ", ".join(f"{lab}@d={d}:{_code(v)}" for lab, d, v in cands))
            if len(cands) == 1 and cands[0][2].kind == "torsion":
                lab, d, v = cands[0]
                jv = TorsionVerdict(str(claim.product), "torsion", v.exponent - d, v.page, v.source,
                                    v.source_bidegree, note=f"τ^{d}-divisible by {lab}")
                witness = f"τ^{d}·{lab}, {lab} hit by d{v.page} from {v.source} at {v.source_bidegree}"
                rules.append("tau-divisibility")
            else:
                jv = TorsionVerdict(str(claim.product), "undecidable", note="divisibility candidate not unique")
    else:
        jv = _verdict_in(j2.run, img, str(claim.product))
        if jv.kind == "torsion":
            witness = f"hit by d{jv.page} from {jv.source} at {jv.source_bidegree}"
        elif jv.kind == "free":
            witness = "permanent; no room for longer differentials"
    verdicts["j2"] = _code(jv)
    details["j2"] = jv
    if "tmf" in claim.expected:
        tv = _verdict_in(tmf.run, _tmf_part(img) if img and img is not Unknown else {}, str(claim.product))
        verdicts["tmf"] = _code(tv)
        details["tmf"] = tv
    if "sphere" in claim.expected:
        sv = sphere_verdict(bd, jv)
        verdicts["sphere"] = "free" if sv.kind == "free" else sv.kind
        if sv.rule:
            rules.append(sv.rule)
        if sv.note:
            notes.append(sv.note)
    status = _status(claim, verdicts)
    return ClaimResult(claim, status, verdicts, witness, rules, notes, details)


def _status(claim: Claim, verdicts: Mapping[str, str]) -> str:
    if claim.expected.get("sphere") == "open":
        return "open"
    got = [verdicts.get(k) for k in claim.expected]
    if any(g in ("undecidable", None) for g in got):
        return "undecidable"
    return "verified" if all(verdicts[k] == v for k, v in claim.expected.items()) else "refuted"


def verify_claims(suite: Sequence[Claim], tmf: TmfRun, j2: J2Run, strict: bool = False) -> ClaimReport:
    results = [evaluate(c, tmf, j2) for c in sorted(suite, key=lambda c: c.id)]
    if strict:
        bad = [r.claim.id for r in results if r.status == "undecidable"]
        if bad:
            raise UndecidableRange(f"{len(bad)} claims undecidable, e.g. {bad[0]}")
    return ClaimReport(results)


def recheck_witness(result: ClaimResult, runs: Mapping[str, SpectralRun]) -> bool:
    """The cited differential exists: the witness source maps onto the class on the cited page."""
    for spectrum, v in result.details.items():
        if v.kind != "torsion" or v.source_bidegree is None:
            continue
        run = runs[spectrum]
        page = run.pages.get(v.page)
        if page is None or v.page not in run.differentials:
            return False
        if v.source_bidegree not in run.differentials[v.page]:
            return False
    return True


# --------------------------------------------------------------------------
# theorem-level assembly


@dataclass(frozen=True)
class TheoremPart:
    name: str
    statement: str
    nonvanishing: tuple[str, tuple[str, ...]]  # (status, claim families)
    vanishing: tuple[str, ...]  # ledger ids
    provenance: str = "machine + trusted"


THEOREM_PARTS = (
    ("beta1-products", "∏_{i=1}^A β_{1+9s_i} ≠ 0 iff A ≤ 5", ("five-x",), ("six-beta1",)),
    ("beta2-products", "β_{2+9t}∏_{i=1}^B β_{1+9s_i} ≠ 0 iff B ≤ 2", ("beta2-xx",), ("beta2-beta1^3",)),
    ("alpha1-beta2-products", "α1β_{2+9t}∏_{i=1}^C β_{1+9s_i} ≠ 0 iff C ≤ 2", ("alpha1-beta2-beta1^2",),
     ("alpha1-beta2-beta1^3",)),
    ("alpha-beta3/3-products", "[α1β_{3/3}]∏_{i=1}^D β_{1+9s_i} ≠ 0 iff D ≤ 1", ("alpha-beta3/3-x",),
     ("alpha-beta3/3-beta1^2",)),
    ("vanishing-line", "α1∏⁴β_{1+9s_i}, β_{5+9t}∏⁴β_{1+9s_i}, α1β_{6/3}∏³β_{1+9s_i} vanish", (),
     ("alpha1-beta1^4", "beta5-beta1^4", "alpha1-beta6/3-beta1^3")),
    ("nonvanishing-line-1", "∏⁵x_i, β_{2+9t}∏²x_i, β_{5+9t}∏²x_i ≠ 0", ("five-x", "beta2-xx", "beta5-xx"), ()),
    ("nonvanishing-line-2", "α1β_{2+9t}∏²β, [α1β_{7+9t}]∏²β (β = β_{1+9s} or β_{6+9s/3}) ≠ 0",
     ("alpha1-beta2-beta1^2", "alpha1-beta2-beta6/3^2", "alpha-beta7-beta1^2", "alpha-beta7-beta6/3^2"), ()),
    ("nonvanishing-line-3", "⟨α1,α1,β_{5+9t}⟩β_{6+9w/9}∏³β_{1+9s_i}, ⟨α1,α1,β_{5+9t}⟩β_{1+9w}∏³β_{6+9s_i/3} ≠ 0",
     ("bracket-beta6/9-beta1^3", "bracket-beta1-beta6/3^3"), ()),
)


def assemble_theorems(report: ClaimReport, ledger: Sequence[LedgerEntry] = VANISHING_LEDGER) -> list[TheoremPart]:
    fams = report.by_family()
    known = {e.id for e in ledger}
    out = []
    for name, statement, nonvan, van in THEOREM_PARTS:
        if nonvan:
            res = [r for f in nonvan for r in fams.get(f, [])]
            if not res or any(f not in fams for f in nonvan):
                status = "missing"
            elif all(r.status == "verified" for r in res):
                status = "verified"
            elif any(r.status == "refuted" for r in res):
                status = "refuted"
            else:
                status = "undecidable"
        else:
            status = "ledger-only"
        missing = [v for v in van if v not in known]
        if missing:
            raise KeyError(f"ledger lacks {missing}")
        prov = "machine" if nonvan and not van else "trusted" if not nonvan else "machine + trusted"
        out.append(TheoremPart(name, statement, (status, tuple(nonvan)), tuple(van), prov))
    return out


# --------------------------------------------------------------------------
# report text


def format_report(report: ClaimReport) -> str:
    """One record per claim, blank-line separated, deterministic order."""
    lines = []
    for r in report.results:
        c = r.claim
        lines.append(f"claim: {c.id}")
        lines.append(f"  product: {c.product}")
        lines.append(f"  bidegree: {c.product.bidegree}")
        lines.append("  params: " + ", ".join(f"{k}={v}" for k, v in c.params.items()))
        lines.append("  expected: " + ", ".join(f"{k}={v}" for k, v in c.expected.items()))
        lines.append("  computed: " + ", ".join(f"{k}={v}" for k, v in r.verdicts.items()))
        lines.append(f"  status: {r.status}")
        if r.witness:
            lines.append(f"  witness: {r.witness}")
        if r.rules:
            lines.append("  rules: " + ", ".join(r.rules))
        for n in r.notes:
            lines.append(f"  note: {n}")
        lines.append("")
    return "\n".join(lines)


def format_summary(report: ClaimReport, parts: Sequence[TheoremPart],
                   ledger: Sequence[LedgerEntry] = VANISHING_LEDGER) -> str:
    counts: dict[str, int] = {}
    for r in report.results:
        counts[r.status] = counts.get(r.status, 0) + 1
    lines = [f"claims: {len(report.results)} (" + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())) + ")"]
    for fam, res in sorted(report.by_family().items()):
        st = sorted({r.status for r in res})
        lines.append(f"  {fam}: {len(res)} claims, {'/'.join(st)}")
    lines.append("theorems:")
    for p in parts:
        lines.append(f"  {p.name}: {p.statement}")
        if p.nonvanishing[1]:
            lines.append(f"    nonvanishing [machine]: {p.nonvanishing[0]}")
        for v in p.vanishing:
            entry = next(e for e in ledger if e.id == v)
            lines.append(f"    vanishing [{entry.provenance}]: {entry.statement}")
    return "\n".join(lines) + "\n"
