"""Normal-form monomials for the mod-tau homotopy of TMF at p = 3.

The ring is Z_(3)[c4, c6, Δ^±, α, β] modulo

    c4^3 - c6^2 - 24^3 Δ,  3α, α^2, α c4, α c6, 3β, β c4, β c6.

Normal form keeps the exponent of c6 in {0, 1}; monomials containing α or
β carry F_3 coefficients, the others carry Z_(3) coefficients.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, NamedTuple, Optional

from .local import PRIME, local, reduce_mod

C6_SQUARE_DELTA = 24 ** 3  # c6^2 = c4^3 - 24^3 Δ


class Bidegree(NamedTuple):
    stem: int
    filtration: int

    def shift(self, ds: int, df: int) -> "Bidegree":
        return Bidegree(self.stem + ds, self.filtration + df)

    def __str__(self) -> str:
        return f"({self.stem},{self.filtration})"


def sparse_ok(bd: Bidegree) -> bool:
    return (bd.stem + bd.filtration) % 4 == 0


@dataclass(frozen=True, order=True)
class Monomial:
    """c4^a c6^b Δ^m α^eps β^k.  Field order gives the canonical sort key."""

    m: int = 0
    a: int = 0
    b: int = 0
    k: int = 0
    eps: int = 0

    def __post_init__(self):
        if self.a < 0 or self.k < 0 or self.b not in (0, 1) or self.eps not in (0, 1):
            raise ValueError(f"exponents out of range: {self!r}")
        if (self.eps or self.k) and (self.a or self.b):
            raise ValueError(f"not a normal-form monomial: {self!r}")

    @property
    def bidegree(self) -> Bidegree:
        return Bidegree(8 * self.a + 12 * self.b + 24 * self.m + 3 * self.eps + 10 * self.k,
                        self.eps + 2 * self.k)

    @property
    def torsion(self) -> bool:
        return bool(self.eps or self.k)

    @property
    def order(self) -> int:
        """Additive order of the monomial as an E2 basis element (0 = free)."""
        return PRIME if self.torsion else 0

    @property
    def weight(self) -> int:
        """Modular weight of the c4, c6, Δ part; α and β have weight 0."""
        return 4 * self.a + 6 * self.b + 12 * self.m

    def __str__(self) -> str:
        return format_monomial(self)


ONE = Monomial()
C4 = Monomial(a=1)
C6 = Monomial(b=1)
DELTA = Monomial(m=1)
ALPHA = Monomial(eps=1)
BETA = Monomial(k=1)


def delta(m: int) -> Monomial:
    return Monomial(m=m)


def _pow(sym: str, e: int) -> str:
    if e == 0:
        return ""
    if e == 1:
        return sym
    return f"{sym}^{e}"


def format_monomial(x: Monomial) -> str:
    parts = [_pow("c4", x.a), _pow("c6", x.b), _pow("α", x.eps), _pow("β", x.k), _pow("Δ", x.m)]
    s = "".join(p for p in parts if p)
    return s or "1"


_TOKEN = re.compile(r"(c4|c6|Delta|Δ|D|alpha|α|a|beta|β|b)(?:\^\{?(-?\d+)\}?)?")


def parse_monomial(text: str) -> Monomial:
    """Parse e.g. ``"αβ^2"``, ``"c4*Δ^-1"``, ``"a b^5"``, ``"1"``."""
    s = text.replace("*", "").replace("·", "").replace(" ", "")
    if s in ("", "1"):
        return ONE
    ex = dict(a=0, b=0, m=0, eps=0, k=0)
    pos = 0
    while pos < len(s):
        mt = _TOKEN.match(s, pos)
        if not mt:
            raise ValueError(f"cannot parse monomial {text!r} at {s[pos:]!r}")
        sym, e = mt.group(1), int(mt.group(2) or 1)
        key = {"c4": "a", "c6": "b", "Delta": "m", "Δ": "m", "D": "m", "alpha": "eps", "α": "eps",
               "a": "eps", "beta": "k", "β": "k", "b": "k"}[sym]
        ex[key] += e
        pos = mt.end()
    if ex["b"] >= 2 or ex["eps"] >= 2:
        el = RingElement.from_monomial(ONE)
        for key, sym in (("a", C4), ("b", C6), ("eps", ALPHA), ("k", BETA)):
            for _ in range(ex[key]):
                el = el * RingElement.from_monomial(sym)
        el = el * RingElement.from_monomial(delta(ex["m"]))
        if len(el.terms) != 1 or next(iter(el.terms.values())) != 1:
            raise ValueError(f"{text!r} is not a single normal-form monomial")
        return next(iter(el.terms))
    return Monomial(**ex)


class RingElement:
    """Finite Z_(3)-combination of normal-form monomials (immutable)."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping[Monomial, Fraction]] = None):
        clean: dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            c = local(c)
            if mono.torsion:
                c = reduce_mod(c, PRIME)
            if c:
                clean[mono] = clean.get(mono, Fraction(0)) + c
                if mono.torsion:
                    clean[mono] = reduce_mod(clean[mono], PRIME)
                if not clean[mono]:
                    del clean[mono]
        object.__setattr__(self, "terms", dict(sorted(clean.items())))

    def __setattr__(self, key, value):
        raise AttributeError("RingElement is immutable")

    @classmethod
    def from_monomial(cls, x: Monomial, c=1) -> "RingElement":
        return cls({x: Fraction(c)})

    @classmethod
    def zero(cls) -> "RingElement":
        return cls()

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, int) and other == 0:
            return not self.terms
        return isinstance(other, RingElement) and self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def __add__(self, other: "RingElement") -> "RingElement":
        out = dict(self.terms)
        for mono, c in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return RingElement(out)

    def __neg__(self) -> "RingElement":
        return RingElement({x: -c for x, c in self.terms.items()})

    def __sub__(self, other: "RingElement") -> "RingElement":
        return self + (-other)

    def scale(self, c) -> "RingElement":
        c = Fraction(c)
        return RingElement({x: c * v for x, v in self.terms.items()})

    def __mul__(self, other: "RingElement") -> "RingElement":
        out: dict[Monomial, Fraction] = {}
        for x, cx in self.terms.items():
            for y, cy in other.terms.items():
                for z, cz in multiply_monomials(x, y).terms.items():
                    out[z] = out.get(z, Fraction(0)) + cx * cy * cz
        return RingElement(out)

    def bidegrees(self) -> set[Bidegree]:
        return {x.bidegree for x in self.terms}

    def __repr__(self) -> str:
        return f"RingElement({format_element(self)!r})"

    def __str__(self) -> str:
        return format_element(self)


def format_element(el: RingElement) -> str:
    if not el.terms:
        return "0"
    out = ""
    for x, c in el.terms.items():
        ms = format_monomial(x)
        sign = "-" if c < 0 else "+"
        c = abs(c)
        body = ms if c == 1 else (str(c) if ms == "1" else f"{c}{ms}")
        out = (f"-{body}" if sign == "-" else body) if not out else f"{out} {sign} {body}"
    return out


def parse_element(text: str) -> RingElement:
    """Parse ``"2Δαβ^2 + c4^3"`` style sums; ``"0"`` is zero."""
    s = text.strip()
    if s in ("", "0"):
        return RingElement.zero()
    s = s.replace(" ", "")
    out = RingElement.zero()
    for term in filter(None, (t.lstrip("+") for t in re.split(r"(?<![\^{])(?=[+-])", s))):
        mt = re.match(r"^(-?\d*(?:/\d+)?)\*?(.*)$", term)
        coef, body = mt.group(1), mt.group(2)
        c = Fraction(coef + "1") if coef in ("", "-") else Fraction(coef)
        if body:
            out = out + RingElement.from_monomial(ONE).scale(c) * _parse_product(body)
        else:
            out = out + RingElement.from_monomial(ONE, c)
    return out


def _parse_product(body: str) -> RingElement:
    s = body.replace("*", "").replace("·", "")
    el = RingElement.from_monomial(ONE)
    pos = 0
    while pos < len(s):
        mt = _TOKEN.match(s, pos)
        if not mt:
            raise ValueError(f"cannot parse {body!r}")
        sym, e = mt.group(1), int(mt.group(2) or 1)
        gen = {"c4": C4, "c6": C6, "α": ALPHA, "a": ALPHA, "alpha": ALPHA,
               "β": BETA, "b": BETA, "beta": BETA}.get(sym)
        if gen is None:
            el = el * RingElement.from_monomial(delta(e))
        else:
            for _ in range(e):
                el = el * RingElement.from_monomial(gen)
        pos = mt.end()
    return el


def multiply_monomials(x: Monomial, y: Monomial) -> RingElement:
    if x.eps + y.eps >= 2:
        return RingElement.zero()
    if (x.torsion and (y.a or y.b)) or (y.torsion and (x.a or x.b)):
        return RingElement.zero()
    a, b, m = x.a + y.a, x.b + y.b, x.m + y.m
    eps, k = x.eps + y.eps, x.k + y.k
    if b == 2:
        return RingElement({Monomial(m=m, a=a + 3): Fraction(1),
                            Monomial(m=m + 1, a=a): Fraction(-C6_SQUARE_DELTA)})
    return RingElement({Monomial(m=m, a=a, b=b, k=k, eps=eps): Fraction(1)})


def enumerate_basis(bd: Bidegree, window: tuple[int, int]) -> list[Monomial]:
    """Normal-form monomials in bidegree ``bd`` with Δ-exponent in ``window``."""
    lo, hi = window
    if lo > hi:
        raise ValueError("empty Δ-window")
    s, f = bd
    out: list[Monomial] = []
    if f < 0:
        return out
    if f == 0:
        for m in range(lo, hi + 1):
            for b in (0, 1):
                rem = s - 12 * b - 24 * m
                if rem >= 0 and rem % 8 == 0:
                    out.append(Monomial(m=m, a=rem // 8, b=b))
    else:
        eps, k = f % 2, f // 2
        rem = s - 3 * eps - 10 * k
        if rem % 24 == 0 and lo <= rem // 24 <= hi:
            out.append(Monomial(m=rem // 24, k=k, eps=eps))
    return sorted(out)


def positive_filtration_monomials(stems: tuple[int, int], window: tuple[int, int]) -> Iterator[Monomial]:
    """All torsion monomials with stem in the closed range and Δ-exponent in the window."""
    s0, s1 = stems
    for m in range(window[0], window[1] + 1):
        for eps in (0, 1):
            k = 0 if eps else 1
            while True:
                s = 3 * eps + 10 * k + 24 * m
                if s > s1:
                    break
                if s >= s0:
                    yield Monomial(m=m, k=k, eps=eps)
                k += 1


def bidegrees_in_range(stems: tuple[int, int], window: tuple[int, int]) -> list[Bidegree]:
    out = {x.bidegree for x in positive_filtration_monomials(stems, window)}
    for s in range(stems[0], stems[1] + 1):
        if enumerate_basis(Bidegree(s, 0), window):
            out.add(Bidegree(s, 0))
    return sorted(out)
