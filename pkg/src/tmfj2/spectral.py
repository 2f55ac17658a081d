"""Spectral-sequence pages, Leibniz closure of generator differentials,
homology page turns and tau-torsion bookkeeping.

A page stores, for every bidegree, an *ambient* basis of E2 classes together
with two lattices inside Z_(3)^n: the cycles Z_r and the boundaries B_r
(B_r always contains the E2 relations).  E_r is the quotient Z_r / B_r.
Differentials are computed on E2 representatives and projected.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .linalg import (
    Matrix,
    Presentation,
    Vector,
    columns_to_matrix,
    coordinates,
    echelon,
    in_span,
    kernel,
    snf,
)
from .local import PRIME, is_zero_mod, normalize, order_of, reduce_mod, valuation
from .monomial import (
    BETA,
    C4,
    C6,
    ONE,
    Bidegree,
    Monomial,
    RingElement,
    delta,
    format_monomial,
)

PROVENANCES = ("configured", "leibniz-derived", "lifted-from-map", "boundary-induced")


class DegreeMismatch(ValueError):
    pass


class RuleUncertified(ValueError):
    """A zero rule claimed an empty target that is not empty."""


class Undecidable(RuntimeError):
    pass


class DifferentialUndefined(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SSClassName:
    """An E2 basis class: a monomial, or the boundary ∂ of one."""

    mono: Monomial
    boundary: bool = False

    @property
    def bidegree(self) -> Bidegree:
        bd = self.mono.bidegree
        return bd.shift(-1, 1) if self.boundary else bd

    @property
    def origin(self) -> str:
        if not self.boundary:
            return "blue"
        return "red" if self.mono.torsion else "yellow"

    def __str__(self) -> str:
        s = format_monomial(self.mono)
        return f"∂({s})" if self.boundary else s


def name_vector(vec: Sequence[Fraction], labels: Sequence[SSClassName], orders: Sequence[int]) -> str:
    parts = []
    for c, lab, q in zip(vec, labels, orders):
        if q:
            c = reduce_mod(c, q)
        if not c:
            continue
        s = str(lab)
        parts.append(s if c == 1 else f"{c}{s}")
    return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class Slice:
    labels: tuple[SSClassName, ...]
    orders: tuple[int, ...]
    cycles: tuple[Vector, ...]
    boundaries: tuple[Vector, ...]
    certified: tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.labels)

    def index(self, label: SSClassName) -> int:
        return self.labels.index(label)

    def module(self) -> Presentation:
        rels = []
        for b in self.boundaries:
            c = coordinates(self.cycles, b, self.n)
            if c is None:
                raise ValueError("boundary outside cycles")
            rels.append(c)
        return Presentation(len(self.cycles), tuple(rels))

    def is_zero(self) -> bool:
        return not self._generators

    def generators(self) -> list[tuple[Vector, int]]:
        """Ambient representatives of a cyclic decomposition of Z/B with orders."""
        return list(self._generators)

    @cached_property
    def _generators(self) -> tuple[tuple[Vector, int], ...]:
        p = len(self.cycles)
        if p == 0:
            return ()
        mod = self.module()
        if not mod.relations:
            return tuple((z, 0) for z in self.cycles)
        C = columns_to_matrix(mod.relations, p)
        s = snf(C, len(mod.relations))
        out = []
        for i in range(p):
            d = s.factors[i] if i < len(s.factors) else Fraction(0)
            d = normalize(d)
            if d == 1:
                continue
            coeffs = [s.Uinv[j][i] for j in range(p)]
            vec = tuple(sum((coeffs[j] * self.cycles[j][t] for j in range(p)), Fraction(0))
                        for t in range(self.n))
            out.append((_tidy(vec, self.orders), order_of(d)))
        return tuple(out)

    def contains_cycle(self, vec: Sequence[Fraction]) -> bool:
        return in_span(list(self.cycles) + list(self.boundaries), vec, self.n)

    def is_boundary(self, vec: Sequence[Fraction]) -> bool:
        return in_span(self.boundaries, vec, self.n)

    def certified_nonzero(self) -> bool:
        return self._certified_nonzero

    def certified_support(self, vec: Sequence[Fraction]) -> bool:
        return all(ok for c, ok in zip(vec, self.certified) if c)

    @cached_property
    def _certified_nonzero(self) -> bool:
        return any(any(c and ok for c, ok in zip(g, self.certified)) for g, _ in self.generators())


def _tidy(vec: Sequence[Fraction], orders: Sequence[int]) -> Vector:
    return tuple(reduce_mod(c, q) if q and not is_zero_mod(c, q) else (Fraction(0) if q else c)
                 for c, q in zip(vec, orders))


@dataclass(frozen=True)
class Page:
    r: int
    slices: Mapping[Bidegree, Slice]
    meta: Mapping[str, object] = field(default_factory=dict)

    def slice(self, bd: Bidegree) -> Optional[Slice]:
        return self.slices.get(bd)

    def nonzero_bidegrees(self) -> list[Bidegree]:
        return sorted(bd for bd, sl in self.slices.items() if not sl.is_zero())

    def module(self, bd: Bidegree) -> Presentation:
        sl = self.slices.get(bd)
        return sl.module() if sl else Presentation(0)

    def with_r(self, r: int) -> "Page":
        return replace(self, r=r)


def make_e2_page(labels_by_bd: Mapping[Bidegree, Sequence[SSClassName]],
                 orders: Callable[[SSClassName], int],
                 certified: Callable[[SSClassName], bool],
                 meta: Optional[Mapping] = None) -> Page:
    slices = {}
    for bd in sorted(labels_by_bd):
        labs = tuple(labels_by_bd[bd])
        if not labs:
            continue
        n = len(labs)
        ords = tuple(orders(l) for l in labs)
        cyc = tuple(tuple(Fraction(int(i == j)) for i in range(n)) for j in range(n))
        bnd = tuple(tuple(Fraction(q if i == j else 0) for i in range(n)) for j, q in enumerate(ords) if q)
        slices[bd] = Slice(labs, ords, cyc, bnd, tuple(certified(l) for l in labs))
    return Page(2, slices, dict(meta or {}))


# --------------------------------------------------------------------------
# generator rules and the Leibniz derivation


@dataclass(frozen=True)
class DifferentialRule:
    """d_r(scale * source) = value on generators; ``certificate`` marks zero
    values justified only by an empty target group."""

    r: int
    source: Monomial
    value: RingElement
    provenance: str = "configured"
    scale: int = 1
    certificate: Optional[str] = None
    name: str = ""

    def __post_init__(self):
        if self.r < 2:
            raise ValueError("page index must be at least 2")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")
        target = self.source.bidegree.shift(-1, self.r)
        for bd in self.value.bidegrees():
            if bd != target:
                raise DegreeMismatch(
                    f"d{self.r}({self.source}) = {self.value}: value sits in {bd}, expected {target}")

    @property
    def key(self) -> tuple[Monomial, int]:
        return (self.source, self.scale)

    @property
    def target_bidegree(self) -> Bidegree:
        return self.source.bidegree.shift(-1, self.r)


def _atom(mono: Monomial, scale: int = 1) -> tuple[Monomial, int]:
    return (mono, scale)


class LeibnizDerivation:
    """Extends generator rules of one page to a derivation on normal-form monomials.

    ``period`` is the Δ-period p of the page's generating set: monomials are
    factored through Δ^{±p}, c4, c6, β and the residue atoms
    αΔ^i, c4Δ^i, c6Δ^i, 3Δ^i (0 < i < p).
    """

    def __init__(self, r: int, period: int, rules: Iterable[DifferentialRule]):
        self.r = r
        self.period = period
        self.rules = {}
        for rule in rules:
            if rule.r != r:
                raise ValueError("rule for a different page")
            self.rules[rule.key] = rule

    def factor(self, x: Monomial) -> Optional[tuple[list[tuple[tuple[Monomial, int], int]], int]]:
        """Atoms with exponents (ring product equals ``divisor * x``), or None."""
        p = self.period
        n, m0 = divmod(x.m, p)
        atoms: list[tuple[tuple[Monomial, int], int]] = []
        divisor = 1
        if x.eps:
            atoms.append((_atom(Monomial(m=m0, eps=1)), 1))
            if x.k:
                atoms.append((_atom(BETA), x.k))
        elif x.k:
            if m0:
                return None
            atoms.append((_atom(BETA), x.k))
        else:
            a, b = x.a, x.b
            if m0:
                if a:
                    atoms.append((_atom(Monomial(m=m0, a=1)), 1))
                    a -= 1
                elif b:
                    atoms.append((_atom(Monomial(m=m0, b=1)), 1))
                    b -= 1
                else:
                    atoms.append((_atom(Monomial(m=m0), PRIME), 1))
                    divisor = PRIME
            if a:
                atoms.append((_atom(C4), a))
            if b:
                atoms.append((_atom(C6), b))
        if n > 0:
            atoms.append((_atom(delta(p)), n))
        elif n < 0:
            atoms.append((_atom(delta(-p)), -n))
        # odd atoms first so the sign bookkeeping stays local
        atoms.sort(key=lambda t: 0 if t[0][0].eps else 1)
        return atoms, divisor

    def atom_value(self, atom: tuple[Monomial, int]) -> Optional[RingElement]:
        rule = self.rules.get(atom)
        return None if rule is None else rule.value

    def derivative(self, x: Monomial) -> Optional[tuple[RingElement, int]]:
        """(d_r(divisor * x), divisor), or None where no rule applies."""
        fac = self.factor(x)
        if fac is None:
            return None
        atoms, divisor = fac
        powers = []
        for (mono, scale), e in atoms:
            el = RingElement.from_monomial(mono, scale)
            powers.append((el, e, mono.bidegree.stem * e))
        total = RingElement.zero()
        prefix = RingElement.from_monomial(ONE)
        prefix_stem = 0
        for idx, ((mono, scale), e) in enumerate(atoms):
            dg = self.atom_value((mono, scale))
            if dg is None:
                return None
            if dg:
                g = RingElement.from_monomial(mono, scale)
                gpow = RingElement.from_monomial(ONE)
                for _ in range(e - 1):
                    gpow = gpow * g
                if mono.bidegree.stem % 2 and e > 1:
                    term = RingElement.zero()  # odd atoms square to zero
                else:
                    term = prefix * gpow.scale(e) * dg
                    for el2, e2, _ in powers[idx + 1:]:
                        for _ in range(e2):
                            term = term * el2
                    if prefix_stem % 2:
                        term = -term
                total = total + term
            el, e_, st = powers[idx]
            for _ in range(e_):
                prefix = prefix * el
            prefix_stem += st
        return total, divisor

    def of_element(self, el: RingElement) -> RingElement:
        out = RingElement.zero()
        for x, c in el.terms.items():
            d = self.derivative(x)
            if d is None:
                if x.torsion and is_zero_mod(c, PRIME):
                    continue
                raise DifferentialUndefined(f"d{self.r} undefined on {x}")
            val, div = d
            if valuation(c) < valuation(div):
                raise DifferentialUndefined(f"d{self.r}({c}{x}) needs divisibility by {div}")
            out = out + val.scale(Fraction(c) / div)
        return out


# --------------------------------------------------------------------------
# differentials on pages


LabelDerivative = Callable[[SSClassName], Optional[tuple[dict, int]]]


def validate_zero_certificates(rules: Iterable[DifferentialRule], page: Page,
                               e2_basis: Callable[[Bidegree], list]) -> None:
    """Zero rules marked 'empty-target' must have a zero target on ``page``."""
    for rule in rules:
        if rule.certificate != "empty-target":
            continue
        if rule.value:
            raise RuleUncertified(f"{rule.name}: empty-target certificate on a nonzero value")
        bd = rule.target_bidegree
        sl = page.slice(bd)
        if sl is None:
            if e2_basis(bd):
                raise RuleUncertified(f"{rule.name}: target {bd} outside computed range")
        elif not sl.is_zero():
            raise RuleUncertified(f"{rule.name}: target {bd} is nonzero on E{page.r}")


def leibniz_closure(derive: LabelDerivative, page: Page, r: int) -> dict[Bidegree, Matrix]:
    """The full d_r on ``page``: for each source bidegree, the matrix whose
    columns are the images of the cycle basis, in target ambient coordinates."""
    dmap: dict[Bidegree, Matrix] = {}
    for bd, sl in page.slices.items():
        if not sl.cycles:
            continue
        tbd = bd.shift(-1, r)
        tsl = page.slice(tbd)
        if tsl is None or tsl.is_zero():
            continue
        tidx = {lab: i for i, lab in enumerate(tsl.labels)}
        cols = []
        for z in sl.cycles:
            col = [Fraction(0)] * tsl.n
            for zi, lab, q in zip(z, sl.labels, sl.orders):
                if not zi:
                    continue
                d = derive(lab)
                if d is None:
                    if q and is_zero_mod(zi, q):
                        continue
                    raise DifferentialUndefined(f"d{r} undefined on {lab} at {bd}")
                val, div = d
                if valuation(zi) < valuation(div):
                    raise DifferentialUndefined(f"d{r}({zi}·{lab}) needs divisibility by {div}")
                coef = zi / div
                for tlab, c in val.items():
                    j = tidx.get(tlab)
                    if j is None:
                        continue  # outside the Δ-window; the class is uncertified
                    col[j] += coef * c
            col = list(_tidy(col, tsl.orders))
            if any(col) and not tsl.contains_cycle(col):
                if sl.certified_support(z) and tsl.certified_support(col):
                    raise DifferentialUndefined(f"d{r} from {bd} does not land in cycles")
                col = [Fraction(0)] * tsl.n
            cols.append(col)
        if any(any(c) for c in cols):
            dmap[bd] = columns_to_matrix(cols, tsl.n)
    return dmap


def turn_page(page: Page, dmap: Mapping[Bidegree, Matrix], r: Optional[int] = None) -> Page:
    """E_{r+1} = ker d_r / im d_r, bidegree by bidegree."""
    r = page.r if r is None else r
    new_cycles = {bd: sl.cycles for bd, sl in page.slices.items()}
    new_bounds = {bd: list(sl.boundaries) for bd, sl in page.slices.items()}
    for bd in sorted(dmap):
        sl = page.slices[bd]
        tbd = bd.shift(-1, r)
        tsl = page.slices[tbd]
        M = dmap[bd]
        p = len(sl.cycles)
        q = len(tsl.boundaries)
        aug = [list(M[i]) + [tsl.boundaries[j][i] for j in range(q)] for i in range(tsl.n)]
        ker = kernel(aug, p + q)
        combos = [v[:p] for v in ker]
        zs = []
        for c in combos:
            zs.append(tuple(sum((c[j] * sl.cycles[j][t] for j in range(p)), Fraction(0))
                            for t in range(sl.n)))
        new_cycles[bd] = tuple(echelon(list(zs) + list(sl.boundaries), sl.n))
        images = [tuple(M[i][j] for i in range(tsl.n)) for j in range(p)]
        new_bounds[tbd].extend(images)
    slices = {}
    for bd, sl in page.slices.items():
        grew = len(new_bounds[bd]) != len(sl.boundaries)
        if bd not in dmap and not grew:
            slices[bd] = sl
            continue
        bnd = tuple(echelon(new_bounds[bd], sl.n)) if grew else sl.boundaries
        slices[bd] = replace(sl, cycles=tuple(new_cycles[bd]), boundaries=bnd)
    return Page(r + 1, slices, page.meta)


def differential_squared_zero(page: Page, dmap: Mapping[Bidegree, Matrix], r: int) -> bool:
    """Check d_r ∘ d_r lands in boundaries, composing stored matrices."""
    for bd, M in dmap.items():
        tbd = bd.shift(-1, r)
        if tbd not in dmap:
            continue
        tsl = page.slices[tbd]
        M2 = dmap[tbd]
        # express images of M in the cycle basis of the target, then apply M2
        for j in range(len(M[0]) if M else 0):
            col = [M[i][j] for i in range(len(M))]
            c = coordinates(list(tsl.cycles) + list(tsl.boundaries), col, tsl.n)
            if c is None:
                return False
            c = c[: len(tsl.cycles)]
            img = [sum((M2[i][t] * c[t] for t in range(len(c))), Fraction(0)) for i in range(len(M2))]
            ttsl = page.slices[tbd.shift(-1, r)]
            if not ttsl.is_boundary(img):
                return False
    return True


# --------------------------------------------------------------------------
# runs, torsion verdicts, room checks


@dataclass(frozen=True)
class Candidate:
    r: int
    source: Bidegree
    target: Bidegree


def no_room_check(page: Page, stems: tuple[int, int], rs: Iterable[int]) -> list[Candidate]:
    """All (source, target) pairs of certified nonzero bidegrees a d_r could join."""
    nonzero = {bd for bd, sl in page.slices.items() if not sl.is_zero() and sl.certified_nonzero()}
    out = []
    for r in rs:
        for bd in sorted(nonzero):
            tbd = bd.shift(-1, r)
            if tbd in nonzero and (stems[0] <= bd.stem <= stems[1] or stems[0] <= tbd.stem <= stems[1]):
                out.append(Candidate(r, bd, tbd))
    return out


@dataclass
class SpectralRun:
    pages: dict[int, Page]
    differentials: dict[int, dict[Bidegree, Matrix]]
    final_r: int
    stems: tuple[int, int]
    room_bound: int = 40
    unresolved: list[Candidate] = field(default_factory=list)

    @property
    def e2(self) -> Page:
        return self.pages[2]

    @property
    def einf(self) -> Page:
        return self.pages[self.final_r]

    def nontrivial_pages(self) -> list[int]:
        return sorted(r for r, d in self.differentials.items() if d)


def run_spectral_sequence(e2: Page, closures: Mapping[int, Callable[[Page], dict]],
                          stems: tuple[int, int], room_bound: int = 40) -> SpectralRun:
    """Turn pages through the configured differentials.  Pages for
    unconfigured r are checked for room; any candidate is recorded as
    unresolved rather than assumed zero."""
    final_r = max(closures) + 1 if closures else 2
    pages = {2: e2}
    diffs: dict[int, dict] = {}
    unresolved: list[Candidate] = []
    page = e2
    for r in range(2, final_r):
        page = page.with_r(r)
        pages[r] = page
        if r in closures:
            d = closures[r](page)
            diffs[r] = d
            page = turn_page(page, d, r)
        else:
            unresolved.extend(no_room_check(page, stems, [r]))
            page = page.with_r(r + 1)
    pages[final_r] = page.with_r(final_r)
    unresolved.extend(no_room_check(pages[final_r], stems, range(final_r, room_bound + 1)))
    return SpectralRun(pages, diffs, final_r, stems, room_bound, unresolved)


@dataclass(frozen=True)
class TorsionVerdict:
    """``kind`` is one of free, torsion, zero, not-permanent, undecidable."""

    cls: str
    kind: str
    exponent: int = 0
    page: int = 0
    source: str = ""
    source_bidegree: Optional[Bidegree] = None
    note: str = ""

    def __str__(self) -> str:
        if self.kind == "torsion":
            return f"tau^{self.exponent}-torsion"
        if self.kind == "free":
            return "tau-torsion-free"
        return self.kind


def vector_for(page: Page, element: Mapping[SSClassName, Fraction]) -> tuple[Bidegree, Vector]:
    bds = {lab.bidegree for lab in element}
    if len(bds) != 1:
        raise ValueError("element is not homogeneous")
    bd = bds.pop()
    sl = page.slice(bd)
    if sl is None:
        raise Undecidable(f"bidegree {bd} outside the computed range")
    vec = [Fraction(0)] * sl.n
    for lab, c in element.items():
        if lab not in sl.labels:
            raise Undecidable(f"{lab} outside the Δ-window")
        vec[sl.index(lab)] += Fraction(c)
    return bd, tuple(vec)


def torsion_order(element: Mapping[SSClassName, Fraction], run: SpectralRun, name: str = "") -> TorsionVerdict:
    """Verdict for an E2 class: first page where it is hit (tau^{r-1}-torsion),
    or permanence certified by an empty room check."""
    e2 = run.e2
    try:
        bd, vec = vector_for(e2, element)
    except Undecidable as exc:
        return TorsionVerdict(name, "undecidable", note=str(exc))
    sl2 = e2.slices[bd]
    name = name or name_vector(vec, sl2.labels, sl2.orders)
    if sl2.is_boundary(vec):
        return TorsionVerdict(name, "zero")
    if not sl2.certified_support(vec):
        return TorsionVerdict(name, "undecidable", note="class touches the Δ-window edge")
    for r in range(2, run.final_r):
        nxt = run.pages[r + 1].slices[bd]
        if not nxt.contains_cycle(vec):
            return TorsionVerdict(name, "not-permanent", page=r, note=f"supports a d{r}")
        if nxt.is_boundary(vec):
            src = _witness(run, r, bd, vec)
            return TorsionVerdict(name, "torsion", exponent=r - 1, page=r,
                                  source=src[0], source_bidegree=src[1])
    einf = run.einf
    for r in range(run.final_r, run.room_bound + 1):
        for other in (bd.shift(1, -r), bd.shift(-1, r)):
            osl = einf.slice(other)
            if osl is not None and not osl.is_zero() and osl.certified_nonzero():
                return TorsionVerdict(name, "undecidable", note=f"room for a d{r} at {other}")
    return TorsionVerdict(name, "free")


def _witness(run: SpectralRun, r: int, bd: Bidegree, vec: Vector) -> tuple[str, Bidegree]:
    page = run.pages[r]
    sbd = bd.shift(1, -r)
    ssl = page.slice(sbd)
    M = run.differentials.get(r, {}).get(sbd)
    tsl = page.slices[bd]
    if ssl is None or M is None:
        return ("", sbd)
    p = len(ssl.cycles)
    cols = [tuple(M[i][j] for i in range(tsl.n)) for j in range(p)] + list(tsl.boundaries)
    c = coordinates(cols, vec, tsl.n)
    if c is None:
        return ("", sbd)
    src = tuple(sum((c[j] * ssl.cycles[j][t] for j in range(p)), Fraction(0)) for t in range(ssl.n))
    return (name_vector(_tidy(src, ssl.orders), ssl.labels, ssl.orders), sbd)
