"""Divided β-family bookkeeping: stems, the seven mod-144 families, Toda
rewriting of β-products, admissibility of β_{i/j}, and the Hurewicz images
of the families in J²."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Optional, Sequence

from .local import PRIME, reduce_mod
from .monomial import Bidegree, Monomial
from .spectral import SSClassName

PERIOD = 144


class NonUnitSwap(ArithmeticError):
    """A Toda swap whose coefficient vanishes mod 3."""


class UnknownFamily(KeyError):
    pass


@dataclass(frozen=True, order=True)
class BetaIndex:
    i: int
    j: int = 1

    def __post_init__(self):
        if self.i < 1 or self.j < 1:
            raise ValueError("β_{i/j} needs i, j ≥ 1")

    def __str__(self) -> str:
        return f"β{self.i}" if self.j == 1 else f"β{self.i}/{self.j}"


def stem_of(idx: BetaIndex) -> Bidegree:
    return Bidegree(16 * idx.i - 4 * idx.j - 2, 2)


@dataclass(frozen=True)
class Family:
    key: str
    display: str
    base_stem: int
    filtration: int


FAMILIES = {
    f.key: f
    for f in (
        Family("beta1", "β_{1+9s}", 10, 2),
        Family("beta2", "β_{2+9s}", 26, 2),
        Family("alpha-beta3/3", "[α1β_{3+9s/3}]", 37, 3),
        Family("beta5", "β_{5+9s}", 74, 2),
        Family("bracket-beta5", "⟨α1,α1,β_{5+9s}⟩", 81, 3),
        Family("beta6/3", "β_{6+9s/3}", 82, 2),
        Family("alpha-beta7", "[α1β_{7+9s}]", 109, 3),
        Family("alpha1", "α1", 3, 1),
    )
}

@dataclass(frozen=True, order=True)
class FamilyElement:
    family: str
    s: int = 0
    flagged: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnknownFamily(self.family)
        if self.s < 0:
            raise ValueError("family parameter must be ≥ 0")
        if self.family == "alpha1" and self.s:
            raise ValueError("α1 has no parameter")

    @property
    def bidegree(self) -> Bidegree:
        f = FAMILIES[self.family]
        return Bidegree(f.base_stem + PERIOD * self.s, f.filtration)

    def __str__(self) -> str:
        n = 9 * self.s
        if self.flagged:
            return f"β{6 + n}/9"
        return {
            "beta1": f"β{1 + n}", "beta2": f"β{2 + n}", "alpha-beta3/3": f"[α1β{3 + n}/3]",
            "beta5": f"β{5 + n}", "bracket-beta5": f"⟨α1,α1,β{5 + n}⟩", "beta6/3": f"β{6 + n}/3",
            "alpha-beta7": f"[α1β{7 + n}]", "alpha1": "α1",
        }[self.family]

    def beta_index(self) -> Optional[BetaIndex]:
        """The plain or divided β index, when the element is one."""
        if self.family == "beta1":
            return BetaIndex(1 + 9 * self.s)
        if self.family == "beta2":
            return BetaIndex(2 + 9 * self.s)
        if self.family == "beta5":
            return BetaIndex(5 + 9 * self.s)
        if self.family == "beta6/3":
            return BetaIndex(6 + 9 * self.s, 3)
        return None


def beta1(s: int = 0) -> FamilyElement:
    return FamilyElement("beta1", s)


def beta63(s: int = 0) -> FamilyElement:
    return FamilyElement("beta6/3", s)


def beta69_flagged(s: int = 0) -> FamilyElement:
    """β_{6+9s/9} exactly as the claim is written; evaluated as β_{6+9s/3}."""
    return FamilyElement("beta6/3", s, flagged=True)


ALPHA1 = FamilyElement("alpha1")


@dataclass(frozen=True)
class FormalProduct:
    factors: tuple[FamilyElement, ...]
    unit: int = 1

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))
        if self.unit % PRIME == 0:
            raise ValueError("unit coefficient must be prime to 3")

    @property
    def bidegree(self) -> Bidegree:
        s = sum(f.bidegree.stem for f in self.factors)
        t = sum(f.bidegree.filtration for f in self.factors)
        return Bidegree(s, t)

    @property
    def flagged(self) -> bool:
        return any(f.flagged for f in self.factors)

    def __str__(self) -> str:
        body = "·".join(str(f) for f in self.factors)
        return body if self.unit == 1 else f"{self.unit}·{body}"


@dataclass(frozen=True)
class Swap:
    before: tuple[int, int]
    after: tuple[int, int]
    unit: int


def toda_normalize(indices: Sequence[int]) -> tuple[int, tuple[int, ...], list[Swap]]:
    """Rewrite ∏ β_{a_i} as unit · β_1^{n−1} β_{Σa_i − n + 1} mod τ.

    Uses uv β_s β_t = st β_u β_v with (s, t) → (1, s + t − 1), folding the
    factors into the largest one in decreasing order.  A swap whose
    coefficient is not a unit raises NonUnitSwap."""
    if not indices:
        raise ValueError("empty product")
    if any(a < 1 for a in indices):
        raise ValueError("β indices must be ≥ 1")
    order = sorted(indices, reverse=True)
    acc = order[0]
    unit = Fraction(1)
    swaps: list[Swap] = []
    for a in order[1:]:
        if a == 1:
            continue
        v = a + acc - 1
        if a % PRIME == 0 or acc % PRIME == 0 or v % PRIME == 0:
            raise NonUnitSwap(f"{v}·β{a}β{acc} = {a * acc}·β1β{v} has a non-unit coefficient")
        u = int(reduce_mod(Fraction(a * acc, v), PRIME))
        swaps.append(Swap((a, acc), (1, v), u))
        unit *= u
        acc = v
    canon = tuple([1] * (len(indices) - 1) + [acc])
    return int(reduce_mod(unit, PRIME)), canon, swaps


# --------------------------------------------------------------------------
# admissibility of divided β classes


@dataclass(frozen=True)
class Clause:
    stem_residue: int
    j_residue: int
    j_modulus: int
    min_n: int
    citation: str


def load_predicate(text: Optional[str] = None) -> list[Clause]:
    """Parse the admissibility predicate: one clause per line,
    ``stem ≡ A mod 144 : j ≡ B mod M ; n >= N ; citation``."""
    if text is None:
        text = resources.files("tmfj2").joinpath("admissibility.txt").read_text(encoding="utf-8")
    out = []
    pat = re.compile(r"stem\s*[≡=]\s*(\d+)\s*mod\s*144\s*:\s*j\s*[≡=]\s*(\d+)\s*mod\s*(\d+)\s*;"
                     r"\s*n\s*>=\s*(\d+)\s*;\s*(.+)$")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        mt = pat.match(line)
        if not mt:
            raise ValueError(f"bad predicate clause: {line!r}")
        a, b, m, n, cite = mt.groups()
        out.append(Clause(int(a), int(b), int(m), int(n), cite.strip()))
    return out


@dataclass(frozen=True)
class MrwCandidate:
    index: BetaIndex
    s: int
    n: int
    j_mod_36: int
    min_n: Optional[int]
    citation: str = ""


def mrw_solutions(target: Bidegree, bounds: tuple[int, int, int] = (40, 6, 10_000),
                  predicate: Optional[list[Clause]] = None) -> list[MrwCandidate]:
    """Divided β indices β_{s3^n/j} (3 ∤ s, 1 ≤ j ≤ 3^n) with stem ≡ target mod 144.

    ``bounds`` = (max s, max n, max j).  Each candidate is annotated with
    j mod 36 and the bound on n from the matching predicate clause, if any."""
    if target.filtration != 2:
        raise ValueError("divided β classes live in filtration 2")
    predicate = load_predicate() if predicate is None else predicate
    residue = target.stem % PERIOD
    clause = next((c for c in predicate if c.stem_residue == residue), None)
    out = []
    smax, nmax, jmax = bounds
    for n in range(nmax + 1):
        top = min(PRIME ** n, jmax)
        for s in range(1, smax + 1):
            if s % PRIME == 0:
                continue
            i = s * PRIME ** n
            # 16i − 4j − 2 ≡ stem (mod 144) fixes j mod 36, when solvable
            rhs = 16 * i - 2 - target.stem
            if rhs % 4:
                continue
            j = (rhs // 4) % 36 or 36
            while j <= top:
                out.append(MrwCandidate(BetaIndex(i, j), s, n, j % 36,
                                        clause.min_n if clause else None,
                                        clause.citation if clause else ""))
                j += 36
    return out


def admissible(c: MrwCandidate) -> bool:
    """False when the predicate forbids the candidate (n below its bound)."""
    return c.min_n is None or c.n >= c.min_n


# --------------------------------------------------------------------------
# Hurewicz dictionary into J²


def _blue(m: int, k: int = 0, eps: int = 0) -> dict:
    return {SSClassName(Monomial(m=m, k=k, eps=eps)): Fraction(1)}


def _red(m: int, k: int = 0, eps: int = 0) -> dict:
    return {SSClassName(Monomial(m=m, k=k, eps=eps), True): Fraction(1)}


def hurewicz_image(e: FamilyElement) -> dict[SSClassName, Fraction]:
    """The J² E2 class detecting ``e`` (up to a unit)."""
    t = e.s
    table = {
        "beta1": lambda: _blue(6 * t, k=1),
        "beta2": lambda: _red(1 + 6 * t, eps=1),
        "alpha-beta3/3": lambda: _blue(1 + 6 * t, k=1, eps=1),
        "beta5": lambda: _red(3 + 6 * t, eps=1),
        "bracket-beta5": lambda: _red(3 + 6 * t, k=1),
        "beta6/3": lambda: _blue(3 + 6 * t, k=1),
        "alpha-beta7": lambda: _blue(4 + 6 * t, k=1, eps=1),
        "alpha1": lambda: _blue(0, eps=1),
    }
    if e.family not in table:
        raise UnknownFamily(e.family)
    return table[e.family]()


def hurewicz_name(e: FamilyElement) -> str:
    lab, = hurewicz_image(e)
    x = lab.mono
    if e.family in ("alpha-beta3/3", "alpha-beta7"):
        base = Monomial(m=x.m, eps=1)
        return f"β·[{base}]"
    body = str(x)
    if x.m % 3:
        body = f"[{body}]"
    return f"∂({body})" if lab.boundary else body
