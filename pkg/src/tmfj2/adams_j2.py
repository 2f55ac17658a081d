"""The modified Adams-Novikov spectral sequence for J² = fib(ψ^k − 1: TMF → TMF).

E2 is split as ker(ψ^k − 1) (blue, lifted along the projection) plus
coker(ψ^k − 1) moved along the boundary map by (−1, +1): red when the
underlying TMF class is torsion, yellow when it is a modular form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Union

from .linalg import ModuleMap, Presentation, kernel_cokernel
from .local import PRIME, order_of, valuation
from .monomial import Bidegree, Monomial, RingElement
from .spectral import (
    Page,
    SSClassName,
    SpectralRun,
    leibniz_closure,
    make_e2_page,
    run_spectral_sequence,
)
from .tmf_model import TmfE2Config, TmfRun, derivation_for, tmf_label_derivative

Element = Mapping[SSClassName, Fraction]


class WindowTooSmall(ValueError):
    """The Δ-window leaves no certified classes to compute with."""


@dataclass(frozen=True)
class PsiOperator:
    k: int = 2

    def __post_init__(self):
        if self.k % PRIME == 0:
            raise ValueError(f"ψ^{self.k}: k must be prime to {PRIME}")

    def scalar(self, x: Monomial) -> Fraction:
        return Fraction(self.k) ** x.weight

    def minus_one(self, x: Monomial) -> Fraction:
        """The diagonal entry of ψ^k − 1 on ``x``; zero on torsion classes."""
        return Fraction(0) if x.torsion else self.scalar(x) - 1


def apply_psi(op: PsiOperator, x: RingElement) -> RingElement:
    return RingElement({mono: c * op.scalar(mono) for mono, c in x.terms.items()})


def yellow_order(stem: int, k: int = 2) -> int:
    """Order of a yellow class in odd ``stem``: the 3-part of k^w − 1, w = (stem + 1)/2."""
    w = (stem + 1) // 2
    return order_of(Fraction(k) ** w - 1)


@dataclass(frozen=True)
class ExoticExtension:
    source: str
    target: str
    multiplier: int
    stem: int


class _Unknown:
    """Products the fibre sequence does not determine (a yellow factor)."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "Unknown"

    __str__ = __repr__

    def __bool__(self) -> bool:
        raise TypeError("Unknown has no truth value")


Unknown = _Unknown()


def _slice_split(op: PsiOperator, sl):
    """Kernel labels and (label, coker order) pairs of ψ^k − 1 on one TMF slice."""
    n = sl.n
    diag = [op.minus_one(lab.mono) for lab in sl.labels]
    pres = Presentation(n, tuple(tuple(Fraction(q if i == j else 0) for i in range(n))
                               for j, q in enumerate(sl.orders) if q))
    mat = [[diag[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    kc = kernel_cokernel(ModuleMap(pres, pres, mat))
    kern, coker = [], []
    for lab, q, d in zip(sl.labels, sl.orders, diag):
        if d == 0 or q and valuation(d) >= valuation(q):
            kern.append(lab)
        elif q:
            raise NotImplementedError("ψ^k − 1 partially kills a torsion class")
        cq = order_of(d) if q == 0 else q if d == 0 else min(q, order_of(d))
        if cq != 1:
            coker.append((lab, cq))
    # length additivity against the general kernel/cokernel computation
    expect_ker = sorted(q for lab, q in zip(sl.labels, sl.orders) if lab in kern)
    got_ker = sorted(kc.kernel.torsion_orders()) + [0] * kc.kernel.free_rank
    if sorted(got_ker) != expect_ker:
        raise AssertionError(f"kernel mismatch at {sl.labels}")
    got_coker = sorted(list(kc.cokernel.torsion_orders()) + [0] * kc.cokernel.free_rank)
    if got_coker != sorted(q for _, q in coker):
        raise AssertionError(f"cokernel mismatch at {sl.labels}")
    return kern, coker


def build_j2_e2(tmf_e2: Page, k: int = 2, config: Optional[TmfE2Config] = None) -> Page:
    """J² E2 from the TMF E2 page and ψ^k."""
    op = PsiOperator(k)
    config = config or config_from_meta(tmf_e2.meta)
    lo, hi = config.window
    if hi - lo < 2 * config.margin:
        raise WindowTooSmall(f"window {config.window} has no certified Δ-exponent at margin {config.margin}")
    labels: dict[Bidegree, list[SSClassName]] = {}
    orders: dict[SSClassName, int] = {}
    s0, s1 = config.built_stems
    for bd, sl in tmf_e2.slices.items():
        kern, coker = _slice_split(op, sl)
        for lab in kern:
            labels.setdefault(bd, []).append(lab)
            orders[lab] = sl.orders[sl.index(lab)]
        for lab, q in coker:
            blab = SSClassName(lab.mono, True)
            if s0 <= blab.bidegree.stem:
                labels.setdefault(blab.bidegree, []).append(blab)
                orders[blab] = q
    for bd in labels:
        labels[bd].sort(key=lambda lab: (lab.boundary, lab.mono))
    meta = dict(tmf_e2.meta, spectrum="j2", k=k)
    return make_e2_page(labels, orders.__getitem__,
                        lambda lab: config.certified_mono(lab.mono) and config.in_range(lab.bidegree),
                        meta)


def config_from_meta(meta: Mapping) -> TmfE2Config:
    from .tmf_model import rule_from_dict

    kw = {}
    if "stems" in meta:
        kw["stems"] = tuple(meta["stems"])
    if "window" in meta:
        kw["window"] = tuple(meta["window"])
    for key in ("margin", "pad", "room_bound"):
        if key in meta:
            kw[key] = int(meta[key])
    if "rules" in meta:
        kw["rules"] = tuple(rule_from_dict(d) for d in meta["rules"])
    if "periods" in meta:
        kw["periods"] = {int(a): int(b) for a, b in meta["periods"].items()}
    return TmfE2Config(**kw)


def j2_closures(config: TmfE2Config):
    closures = {}
    for r in sorted({rule.r for rule in config.rules}):
        derive = tmf_label_derivative(derivation_for(config, r))
        closures[r] = lambda page, derive=derive, r=r: leibniz_closure(derive, page, r)
    return closures


@dataclass
class J2Run:
    k: int
    run: SpectralRun
    extensions: list[ExoticExtension]

    @property
    def einf(self) -> Page:
        return self.run.einf


def induce_j2_differentials(j2_e2: Page, tmf_run: Optional[TmfRun] = None) -> J2Run:
    """Run J² with d(blue x) = blue d(x) and d(∂y) = ∂(d y).

    The TMF derivation acts on the underlying monomial of every label; the
    boundary flag is carried along, which is naturality of the projection
    and of the boundary map."""
    config = tmf_run.config if tmf_run is not None else config_from_meta(j2_e2.meta)
    run = run_spectral_sequence(j2_e2, j2_closures(config), config.stems, config.room_bound)
    return J2Run(int(j2_e2.meta.get("k", 2)), run, record_extensions(run.einf, config.stems))


def record_extensions(einf: Page, stems: tuple[int, int]) -> list[ExoticExtension]:
    """The 3-extension from [∂(Δ^{1+3s})] to [αβ²Δ^{3s}], wherever both ends
    are certified E∞ classes in range."""
    out = []
    s = 0 if stems[0] <= 23 else -((23 - stems[0]) // 72)
    while 23 + 72 * s <= stems[1]:
        src = SSClassName(Monomial(m=1 + 3 * s), True)
        tgt = SSClassName(Monomial(m=3 * s, k=2, eps=1))
        ssl, tsl = einf.slice(src.bidegree), einf.slice(tgt.bidegree)
        if ssl is not None and tsl is not None and src in ssl.labels and tgt in tsl.labels:
            i, j = ssl.index(src), tsl.index(tgt)
            v = tuple(Fraction(PRIME if t == i else 0) for t in range(ssl.n))
            w = tuple(Fraction(int(t == j)) for t in range(tsl.n))
            if (ssl.certified[i] and tsl.certified[j] and ssl.contains_cycle(v) and not ssl.is_boundary(v)
                    and tsl.contains_cycle(w) and not tsl.is_boundary(w)):
                out.append(ExoticExtension(f"[{src}]", f"[{tgt}]", PRIME, src.bidegree.stem))
        s += 1
    return out


def _ring(el: Element) -> RingElement:
    return RingElement({lab.mono: Fraction(c) for lab, c in el.items()})


def j2_product(x: Element, y: Element) -> Union[dict[SSClassName, Fraction], _Unknown]:
    """Product of two J² E2 elements (signs fixed to +).

    ∂x·∂y = 0, blue·blue is the TMF product and blue·∂y = ∂(xy).  A yellow
    factor gives ``Unknown``."""
    labs = list(x) + list(y)
    if any(lab.origin == "yellow" for lab in labs):
        return Unknown
    bx = any(lab.boundary for lab in x)
    by = any(lab.boundary for lab in y)
    for el, flag in ((x, bx), (y, by)):
        if any(lab.boundary != flag for lab in el):
            raise ValueError("mixed blue/boundary element; split it first")
    if bx and by:
        return {}
    prod = _ring(x) * _ring(y)
    return {SSClassName(mono, bx or by): c for mono, c in prod.terms.items()}
