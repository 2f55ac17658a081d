"""Exact linear algebra over the local ring Z_(p).

Matrices are lists of rows of ``Fraction``; vectors are tuples.  Because the
ring is local, Smith reduction never needs gcd steps: choosing a pivot of
minimal valuation makes it divide every other entry.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .local import PRIME, local, normalize, order_of, unit_part, valuation

Matrix = list[list[Fraction]]
Vector = tuple[Fraction, ...]


def zeros(rows: int, cols: int) -> Matrix:
    return [[Fraction(0)] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    m = zeros(n, n)
    for i in range(n):
        m[i][i] = Fraction(1)
    return m


def as_matrix(rows: Sequence[Sequence], ncols: Optional[int] = None) -> Matrix:
    out = [[local(x) for x in row] for row in rows]
    if ncols is not None:
        for row in out:
            if len(row) != ncols:
                raise ValueError("ragged matrix")
    return out


def shape(a: Matrix, ncols: int = 0) -> tuple[int, int]:
    return len(a), (len(a[0]) if a else ncols)


def matmul(a: Matrix, b: Matrix, inner: Optional[int] = None, ncols: Optional[int] = None) -> Matrix:
    n = len(a)
    k = len(b) if inner is None else inner
    m = (len(b[0]) if b else 0) if ncols is None else ncols
    out = zeros(n, m)
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for t in range(k):
            x = ai[t]
            if x:
                bt = b[t]
                for j in range(m):
                    if bt[j]:
                        oi[j] += x * bt[j]
    return out


def transpose(a: Matrix, ncols: int = 0) -> Matrix:
    rows, cols = shape(a, ncols)
    return [[a[i][j] for i in range(rows)] for j in range(cols)]


def columns_to_matrix(cols: Sequence[Sequence[Fraction]], nrows: int) -> Matrix:
    m = zeros(nrows, len(cols))
    for j, c in enumerate(cols):
        for i in range(nrows):
            m[i][j] = Fraction(c[i])
    return m


def matrix_columns(a: Matrix, ncols: Optional[int] = None) -> list[Vector]:
    rows, cols = shape(a, ncols or 0)
    return [tuple(a[i][j] for i in range(rows)) for j in range(cols)]


@dataclass(frozen=True)
class SmithForm:
    """``U * A * V == D`` with ``D`` diagonal (entries 0 or powers of p)."""

    U: Matrix
    D: Matrix
    V: Matrix
    Uinv: Matrix
    Vinv: Matrix
    factors: tuple[Fraction, ...]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.factors if d != 0)


def snf(a: Sequence[Sequence], ncols: Optional[int] = None) -> SmithForm:
    """Smith normal form over Z_(p), with both transforms and their inverses.

    ``factors`` lists the diagonal entries, padded with zeros up to
    ``min(rows, cols)``.
    """
    A = as_matrix(a)
    rows = len(A)
    cols = len(A[0]) if A else (ncols or 0)
    U, Uinv = identity(rows), identity(rows)
    V, Vinv = identity(cols), identity(cols)
    t = 0
    while t < min(rows, cols):
        best = None
        for i in range(t, rows):
            Ai = A[i]
            for j in range(t, cols):
                x = Ai[j]
                if x:
                    v = valuation(x)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        _, pi, pj = best
        if pi != t:
            A[t], A[pi] = A[pi], A[t]
            U[t], U[pi] = U[pi], U[t]
            for row in Uinv:
                row[t], row[pi] = row[pi], row[t]
        if pj != t:
            for row in A:
                row[t], row[pj] = row[pj], row[t]
            for row in V:
                row[t], row[pj] = row[pj], row[t]
            Vinv[t], Vinv[pj] = Vinv[pj], Vinv[t]
        u = unit_part(A[t][t])
        if u != 1:
            # scale row t by 1/u
            A[t] = [x / u for x in A[t]]
            U[t] = [x / u for x in U[t]]
            for row in Uinv:
                row[t] *= u
        piv = A[t][t]
        for i in range(rows):
            if i != t and A[i][t]:
                c = A[i][t] / piv
                Ai, At = A[i], A[t]
                for j in range(t, cols):
                    if At[j]:
                        Ai[j] -= c * At[j]
                Ui, Ut = U[i], U[t]
                for j in range(rows):
                    if Ut[j]:
                        Ui[j] -= c * Ut[j]
                for row in Uinv:
                    if row[i]:
                        row[t] += c * row[i]
        for j in range(t + 1, cols):
            if A[t][j]:
                c = A[t][j] / piv
                for row in A:
                    if row[t]:
                        row[j] -= c * row[t]
                for row in V:
                    if row[t]:
                        row[j] -= c * row[t]
                Vj, Vt = Vinv[j], Vinv[t]
                for k in range(cols):
                    if Vj[k]:
                        Vt[k] += c * Vj[k]
        t += 1
    factors = tuple(A[i][i] for i in range(min(rows, cols)))
    return SmithForm(U, A, V, Uinv, Vinv, factors)


def kernel(a: Matrix, ncols: int) -> list[Vector]:
    """Basis of the Z_(p)-lattice {x : A x = 0}, as column vectors."""
    if not a:
        return [tuple(Fraction(int(i == j)) for i in range(ncols)) for j in range(ncols)]
    s = snf(a, ncols)
    out = []
    for j in range(ncols):
        d = s.factors[j] if j < len(s.factors) else Fraction(0)
        if d == 0:
            out.append(tuple(s.V[i][j] for i in range(ncols)))
    return echelon(out, ncols)


def echelon(vectors: Sequence[Sequence[Fraction]], n: int) -> list[Vector]:
    """Canonical basis of the lattice spanned by ``vectors`` in Z_(p)^n.

    Column echelon form: successive pivots in increasing coordinate order,
    each pivot a power of p, entries above the pivot reduced.  The result is
    independent of the spanning set chosen.
    """
    vecs = [list(map(Fraction, v)) for v in vectors if any(v)]
    basis: list[list[Fraction]] = []
    row = 0
    while vecs and row < n:
        best = None
        for idx, v in enumerate(vecs):
            if v[row]:
                val = valuation(v[row])
                if best is None or val < best[0]:
                    best = (val, idx)
        if best is None:
            row += 1
            continue
        piv = vecs.pop(best[1])
        u = unit_part(piv[row])
        piv = [x / u for x in piv]
        rest = []
        for v in vecs:
            if v[row]:
                c = v[row] / piv[row]
                v = [x - c * y for x, y in zip(v, piv)]
            if any(v):
                rest.append(v)
        vecs = rest
        basis.append(piv)
        row += 1
    # reduce earlier pivot rows
    pivots = []
    for b in basis:
        pivots.append(next(i for i, x in enumerate(b) if x))
    for k, b in enumerate(basis):
        for k2 in range(k + 1, len(basis)):
            p = pivots[k2]
            if b[p]:
                q = basis[k2][p]
                c = _floor_local_quotient(b[p], q)
                if c:
                    b[:] = [x - c * y for x, y in zip(b, basis[k2])]
        basis[k] = b
    return [tuple(b) for b in basis]


def _floor_local_quotient(x: Fraction, q: Fraction) -> Fraction:
    """Multiple c of q making x - c*q a canonical residue mod q."""
    if valuation(x) >= valuation(q):
        return x / q
    # residue modulo q = p^v: represent x mod p^v by an integer in [0, p^v)
    v = int(valuation(q))
    mod = PRIME ** v
    r = (x.numerator * pow(x.denominator, -1, mod)) % mod
    return (x - r) / q


def solve(a: Matrix, b: Sequence[Fraction], ncols: int) -> Optional[Vector]:
    """Some x with A x = b over Z_(p), or None."""
    rows = len(a)
    if rows == 0:
        return tuple(Fraction(0) for _ in range(ncols))
    s = snf(a, ncols)
    ub = [sum((s.U[i][j] * b[j] for j in range(rows)), Fraction(0)) for i in range(rows)]
    y = [Fraction(0)] * ncols
    for i in range(rows):
        d = s.factors[i] if i < len(s.factors) else Fraction(0)
        if d == 0:
            if ub[i] != 0:
                return None
        else:
            q = ub[i] / d
            if q.denominator % PRIME == 0:
                return None
            y[i] = q
    x = tuple(sum((s.V[i][j] * y[j] for j in range(ncols)), Fraction(0)) for i in range(ncols))
    return x


def in_span(vectors: Sequence[Vector], target: Sequence[Fraction], n: int) -> bool:
    if not any(target):
        return True
    if not vectors:
        return False
    return solve(columns_to_matrix(vectors, n), target, len(vectors)) is not None


def coordinates(basis: Sequence[Vector], target: Sequence[Fraction], n: int) -> Optional[Vector]:
    """Coordinates of ``target`` in the given lattice basis (None if outside)."""
    if not basis:
        return () if not any(target) else None
    return solve(columns_to_matrix(basis, n), target, len(basis))


@dataclass(frozen=True)
class Presentation:
    """A finitely generated Z_(p)-module Z^n / span(relations)."""

    ngens: int
    relations: tuple[Vector, ...] = ()
    labels: tuple = ()

    def invariants(self) -> tuple[Fraction, ...]:
        """Nonunit invariant factors (0 for free summands), ascending divisibility."""
        if not self.relations:
            return tuple(Fraction(0) for _ in range(self.ngens))
        m = columns_to_matrix(self.relations, self.ngens)
        s = snf(m, len(self.relations))
        facs = list(s.factors) + [Fraction(0)] * (self.ngens - len(s.factors))
        facs = [normalize(f) for f in facs[: self.ngens]]
        nonunit = [f for f in facs if f != 1]
        # powers of p first (by size), free summands last
        tors = sorted((f for f in nonunit if f != 0))
        free = [f for f in nonunit if f == 0]
        return tuple(tors + free)

    @property
    def free_rank(self) -> int:
        return sum(1 for f in self.invariants() if f == 0)

    def torsion_orders(self) -> tuple[int, ...]:
        return tuple(order_of(f) for f in self.invariants() if f != 0)

    def length(self) -> Optional[int]:
        """Length (sum of valuations) for finite modules; None if free part."""
        inv = self.invariants()
        if any(f == 0 for f in inv):
            return None
        return sum(int(valuation(f)) for f in inv)

    def is_zero(self) -> bool:
        return not self.invariants()


@dataclass(frozen=True)
class ModuleMap:
    """A Z_(p)-linear map between presented modules, given on generators.

    ``matrix`` has one row per target generator and one column per source
    generator; ``shift`` is the bidegree change it implements.
    """

    source: Presentation
    target: Presentation
    matrix: Matrix
    shift: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class KernelCokernel:
    kernel: Presentation
    kernel_generators: tuple[Vector, ...]
    cokernel: Presentation
    image_rank: int


def kernel_cokernel(f: ModuleMap) -> KernelCokernel:
    """Kernel and cokernel of a map of presented modules.

    The kernel is presented on generators of the preimage lattice
    ``{x : A x in span(R_target)}`` modulo the source relations.
    """
    n, m = f.source.ngens, f.target.ngens
    A = f.matrix if f.matrix else zeros(m, n)
    rt = list(f.target.relations)
    aug = [list(A[i]) + [rt[j][i] for j in range(len(rt))] for i in range(m)]
    if m == 0:
        pre = [tuple(Fraction(int(i == j)) for i in range(n)) for j in range(n)]
    else:
        ker = kernel(aug, n + len(rt))
        pre = echelon([v[:n] for v in ker], n)
    # source relations lie in the preimage (map is well defined); express them
    rels = []
    for r in f.source.relations:
        c = coordinates(pre, r, n)
        if c is None:
            raise ValueError("map is not well defined on source relations")
        rels.append(c)
    kern = Presentation(len(pre), tuple(rels))
    images = matrix_columns(A, n) if m else []
    coker = Presentation(m, tuple(rt) + tuple(images))
    # rank of image inside the target, measured after quotienting relations
    img_rank = _rank(list(rt) + list(images), m) - _rank(rt, m)
    return KernelCokernel(kern, tuple(pre), coker, img_rank)


def _rank(vectors: Sequence[Vector], n: int) -> int:
    if not vectors or n == 0:
        return 0
    return snf(columns_to_matrix(vectors, n), len(vectors)).rank
