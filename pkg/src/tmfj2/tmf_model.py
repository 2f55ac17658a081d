"""The Adams-Novikov spectral sequence of TMF at p = 3.

E2 is the windowed monomial ring of :mod:`tmfj2.monomial`; the differentials
are generated by d5(Δ) = αβ² and d9(αΔ²) = β⁵ (signs fixed to +).  The d9
generator is stated on αΔ², the unique source in bidegree (51, 1) that can
reach β⁵ at (50, 10).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import yaml

from .linalg import columns_to_matrix, echelon, kernel, snf
from .local import PRIME, order_of, reduce_mod, valuation
from .monomial import (
    Bidegree,
    Monomial,
    RingElement,
    enumerate_basis,
    format_monomial,
    parse_element,
    parse_monomial,
    positive_filtration_monomials,
)
from .spectral import (
    DifferentialRule,
    LeibnizDerivation,
    Page,
    SSClassName,
    SpectralRun,
    TorsionVerdict,
    leibniz_closure,
    make_e2_page,
    run_spectral_sequence,
    torsion_order,
    validate_zero_certificates,
)

DEFAULT_STEMS = (0, 200)
DEFAULT_WINDOW = (-6, 18)
CLAIM_WINDOW = (-6, 34)

# Δ-period of the generating set used to close each page's rules
DEFAULT_PERIODS = {5: 1, 9: 3}

_RULE_TABLE = [
    # name, page, source, scale, target, provenance, certificate
    ("d5-Delta", 5, "Δ", 1, "αβ^2", "configured", None),
    ("d5-Delta-inverse", 5, "Δ^-1", 1, "-αβ^2Δ^-2", "leibniz-derived", None),
    ("d5-c4", 5, "c4", 1, "0", "configured", None),
    ("d5-c6", 5, "c6", 1, "0", "configured", None),
    ("d5-alpha", 5, "α", 1, "0", "configured", None),
    ("d5-beta", 5, "β", 1, "0", "configured", None),
    ("d9-alpha-Delta2", 9, "αΔ^2", 1, "β^5", "configured", None),
    ("d9-alpha", 9, "α", 1, "0", "configured", "empty-target"),
    ("d9-alpha-Delta", 9, "αΔ", 1, "0", "configured", "empty-target"),
    ("d9-beta", 9, "β", 1, "0", "configured", "empty-target"),
    ("d9-c4", 9, "c4", 1, "0", "configured", "empty-target"),
    ("d9-c6", 9, "c6", 1, "0", "configured", "empty-target"),
    ("d9-Delta3", 9, "Δ^3", 1, "0", "configured", "empty-target"),
    ("d9-Delta3-inverse", 9, "Δ^-3", 1, "0", "leibniz-derived", "empty-target"),
    ("d9-3Delta", 9, "Δ", 3, "0", "configured", "empty-target"),
    ("d9-3Delta2", 9, "Δ^2", 3, "0", "configured", "empty-target"),
    ("d9-c4Delta", 9, "c4Δ", 1, "0", "configured", "empty-target"),
    ("d9-c4Delta2", 9, "c4Δ^2", 1, "0", "configured", "empty-target"),
    ("d9-c6Delta", 9, "c6Δ", 1, "0", "configured", "empty-target"),
    ("d9-c6Delta2", 9, "c6Δ^2", 1, "0", "configured", "empty-target"),
]


def rule_from_dict(d: Mapping) -> DifferentialRule:
    return DifferentialRule(
        r=int(d["page"]),
        source=parse_monomial(str(d["source"])),
        value=parse_element(str(d.get("target", "0"))),
        provenance=d.get("provenance", "configured"),
        scale=int(d.get("scale", 1)),
        certificate=d.get("certificate"),
        name=d.get("name", ""),
    )


def rule_to_dict(rule: DifferentialRule) -> dict:
    d = {"name": rule.name, "page": rule.r, "source": format_monomial(rule.source),
         "target": str(rule.value), "provenance": rule.provenance}
    if rule.scale != 1:
        d["scale"] = rule.scale
    if rule.certificate:
        d["certificate"] = rule.certificate
    return d


def default_rules() -> list[DifferentialRule]:
    return [rule_from_dict(dict(name=n, page=r, source=s, scale=sc, target=t, provenance=p, certificate=c))
            for n, r, s, sc, t, p, c in _RULE_TABLE]


def load_rules(path) -> list[DifferentialRule]:
    """Read generator differentials from a YAML file (a list under ``differentials``)."""
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    items = data.get("differentials", data) if isinstance(data, dict) else data
    return [rule_from_dict(d) for d in items]


@dataclass(frozen=True)
class TmfE2Config:
    stems: tuple[int, int] = DEFAULT_STEMS
    window: tuple[int, int] = DEFAULT_WINDOW
    rules: tuple[DifferentialRule, ...] = field(default_factory=lambda: tuple(default_rules()))
    periods: Mapping[int, int] = field(default_factory=lambda: dict(DEFAULT_PERIODS))
    margin: int = 3
    pad: int = 3
    room_bound: int = 40

    def __post_init__(self):
        if self.window[0] > self.window[1]:
            raise ValueError("empty Δ-window")
        if self.stems[0] > self.stems[1]:
            raise ValueError("empty stem range")
        for r in {rule.r for rule in self.rules}:
            if r not in self.periods:
                raise ValueError(f"no Δ-period configured for page {r}")

    @property
    def built_stems(self) -> tuple[int, int]:
        return (self.stems[0] - self.pad, self.stems[1] + self.pad)

    def certified_mono(self, x: Monomial) -> bool:
        lo, hi = self.window
        return lo + self.margin <= x.m <= hi - self.margin

    def in_range(self, bd: Bidegree) -> bool:
        return self.stems[0] <= bd.stem <= self.stems[1]

    def rules_for(self, r: int) -> list[DifferentialRule]:
        return [rule for rule in self.rules if rule.r == r]

    def meta(self) -> dict:
        return {"stems": list(self.stems), "window": list(self.window), "margin": self.margin,
                "pad": self.pad, "room_bound": self.room_bound,
                "periods": {str(k): v for k, v in sorted(self.periods.items())},
                "rules": [rule_to_dict(r) for r in self.rules]}


def tmf_basis(bd: Bidegree, window: tuple[int, int]) -> list[Monomial]:
    return enumerate_basis(bd, window)


def build_tmf_e2(config: TmfE2Config = TmfE2Config()) -> Page:
    """E2 page: Z_(3)-lattices of modular forms in filtration 0, F_3 lines above."""
    lo, hi = config.built_stems
    labels: dict[Bidegree, list[SSClassName]] = {}
    for s in range(lo, hi + 1):
        basis = enumerate_basis(Bidegree(s, 0), config.window)
        if basis:
            labels[Bidegree(s, 0)] = [SSClassName(x) for x in basis]
    for x in positive_filtration_monomials((lo, hi), config.window):
        labels.setdefault(x.bidegree, []).append(SSClassName(x))
    meta = dict(config.meta(), spectrum="tmf")
    return make_e2_page(labels, lambda lab: lab.mono.order,
                        lambda lab: config.certified_mono(lab.mono) and config.in_range(lab.bidegree),
                        meta)


def derivation_for(config: TmfE2Config, r: int) -> LeibnizDerivation:
    return LeibnizDerivation(r, config.periods[r], config.rules_for(r))


def tmf_label_derivative(der: LeibnizDerivation):
    cache: dict = {}

    def derive(lab: SSClassName):
        if lab not in cache:
            d = der.derivative(lab.mono)
            if d is None:
                cache[lab] = None
            else:
                val, div = d
                cache[lab] = ({SSClassName(x, lab.boundary): c for x, c in val.terms.items()}, div)
        return cache[lab]

    return derive


def tmf_closures(config: TmfE2Config):
    closures = {}
    for r in sorted({rule.r for rule in config.rules}):
        der = derivation_for(config, r)

        def closure(page: Page, der=der, r=r):
            validate_zero_certificates(config.rules_for(r), page,
                                       lambda bd: tmf_basis(bd, config.window))
            return leibniz_closure(tmf_label_derivative(der), page, r)

        closures[r] = closure
    return closures


@dataclass(frozen=True)
class NamedClass:
    label: str
    bidegree: Bidegree
    representative: str
    divisibility: int = 1


@dataclass
class TmfRun:
    config: TmfE2Config
    run: SpectralRun
    names: list[NamedClass]
    verdicts: list[TorsionVerdict]

    @property
    def einf(self) -> Page:
        return self.run.einf


STANDARD_CLASSES = {
    "α": "α", "β": "β", "αβ": "αβ", "αβ^2": "αβ^2", "β^5": "β^5", "[αΔ]": "αΔ", "β^4": "β^4",
}


def element(text: str, boundary: bool = False) -> dict[SSClassName, Fraction]:
    el = parse_element(text)
    return {SSClassName(x, boundary): c for x, c in el.terms.items()}


def run_tmf(e2: Page, config: TmfE2Config = TmfE2Config()) -> TmfRun:
    run = run_spectral_sequence(e2, tmf_closures(config), config.stems, config.room_bound)
    names = tmf_generators(run.einf, (0, 72) if config.stems[1] >= 72 else config.stems)
    verdicts = [torsion_order(element(rep), run, name) for name, rep in STANDARD_CLASSES.items()]
    return TmfRun(config, run, names, verdicts)


def bracket_label(vec, labels, orders) -> str:
    """Name a survivor: brackets mark classes that are not E2 products of
    permanent generators (Δ-exponent not a multiple of 3)."""
    terms = [(c, lab, q) for c, lab, q in zip(vec, labels, orders) if c]
    parts = []
    bracket = False
    for c, lab, q in terms:
        if q:
            c = reduce_mod(c, q)
        s = format_monomial(lab.mono)
        if lab.mono.m % 3:
            bracket = True
        if c != 1:
            s = f"{c}{s}" if s != "1" else str(c)
        parts.append(s)
    body = " + ".join(parts)
    return f"[{body}]" if bracket else body


def _restricted_basis(sl, keep) -> list[tuple]:
    """Cycles supported on the labels flagged by ``keep`` (an echelon basis)."""
    n = sl.n
    drop = [i for i in range(n) if not keep[i]]
    p = len(sl.cycles)
    if not drop:
        return list(sl.cycles)
    sub = [[sl.cycles[j][i] for j in range(p)] for i in drop]
    combos = kernel(sub, p)
    vecs = [tuple(sum((c[j] * sl.cycles[j][t] for j in range(p)), Fraction(0)) for t in range(n))
            for c in combos]
    return echelon(vecs, n)


def tmf_generators(einf: Page, stems: tuple[int, int]) -> list[NamedClass]:
    """Ring generators of E∞ in the given stems, computed inside the subring of
    classes with nonnegative Δ-exponent.  A class is a generator when it is
    nonzero modulo boundaries, 3·E∞ and products of lower-stem classes."""
    restricted: dict[Bidegree, list] = {}
    for bd, sl in einf.slices.items():
        if not (stems[0] <= bd.stem <= stems[1]) or bd.stem <= 0:
            continue
        keep = [lab.mono.m >= 0 for lab in sl.labels]
        basis = [z for z in _restricted_basis(sl, keep) if not sl.is_boundary(z)]
        if basis:
            restricted[bd] = basis
    out: list[NamedClass] = []
    for bd in sorted(restricted, key=lambda b: (b.stem, b.filtration)):
        sl = einf.slices[bd]
        idx = {lab: i for i, lab in enumerate(sl.labels)}
        span = list(sl.boundaries) + [tuple(PRIME * c for c in z) for z in restricted[bd]]
        for bd1, b1 in restricted.items():
            bd2 = Bidegree(bd.stem - bd1.stem, bd.filtration - bd1.filtration)
            if bd1.stem > bd2.stem or bd2 not in restricted:
                continue
            for z1 in b1:
                e1 = _as_ring(z1, einf.slices[bd1])
                for z2 in restricted[bd2]:
                    prod = e1 * _as_ring(z2, einf.slices[bd2])
                    vec = [Fraction(0)] * sl.n
                    for x, c in prod.terms.items():
                        j = idx.get(SSClassName(x))
                        if j is not None:
                            vec[j] += c
                    span.append(tuple(vec))
        chosen: list = []
        for z in restricted[bd]:
            if not _in_span_mod(span + chosen, z, sl.n):
                chosen.append(z)
                name = bracket_label(z, sl.labels, sl.orders)
                div = 1
                nz = [c for c in z if c]
                if len(nz) == 1:
                    div = order_of(nz[0]) if not sl.labels[z.index(nz[0])].mono.torsion else 1
                if _is_periodicity(z, sl.labels):
                    continue
                out.append(NamedClass(name, bd, name, max(div, 1)))
    return out


def _is_periodicity(vec, labels) -> bool:
    """Δ^{3n} with unit coefficient: handled as periodicity, not named."""
    nz = [(c, lab) for c, lab in zip(vec, labels) if c]
    if len(nz) != 1:
        return False
    c, lab = nz[0]
    x = lab.mono
    return valuation(c) == 0 and x.m % 3 == 0 and not (x.a or x.b or x.torsion)


def _as_ring(vec, sl) -> RingElement:
    return RingElement({lab.mono: c for lab, c in zip(sl.labels, vec) if c})


def _in_span_mod(span, z, n) -> bool:
    from .linalg import in_span
    return in_span(span, z, n)


def lattice_index(e2: Page, page: Page, bd: Bidegree) -> int:
    """Index of the cycle lattice of ``page`` inside the E2 lattice at ``bd``."""
    sl = page.slices[bd]
    n = sl.n
    if len(sl.cycles) != n:
        raise ValueError("cycle lattice is not of full rank")
    s = snf(columns_to_matrix(sl.cycles, n), n)
    idx = 1
    for f in s.factors:
        idx *= order_of(f)
    return idx


def tmf_psi_compat_check(e2: Page, k: int, config: TmfE2Config = TmfE2Config()) -> bool:
    """ψ^k commutes with every configured d_r on the E2 basis in range."""
    from .adams_j2 import PsiOperator, apply_psi

    op = PsiOperator(k)
    for r in sorted({rule.r for rule in config.rules}):
        der = derivation_for(config, r)
        for bd, sl in e2.slices.items():
            for lab in sl.labels:
                d = der.derivative(lab.mono)
                if d is None:
                    continue
                val, div = d
                x = RingElement.from_monomial(lab.mono, div)
                lhs = apply_psi(op, der.of_element(x))
                rhs = der.of_element(apply_psi(op, x))
                if lhs != rhs:
                    return False
    return True
