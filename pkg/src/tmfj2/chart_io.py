"""Page archives and SVG charts.

Archive format (version 1)::

    tmfj2-archive v1 sha256=<hex digest of the body>
    <JSON body>

The body holds the run metadata, every stored page (per bidegree: labels,
orders, cycle and boundary lattices, certification flags) and the
differential matrices.  Numbers are written as ``"p/q"`` strings.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence
from xml.sax.saxutils import escape

from .adams_j2 import Unknown, j2_product
from .monomial import Bidegree, Monomial
from .spectral import Page, Slice, SSClassName, SpectralRun

FORMAT_VERSION = 1
MAGIC = "tmfj2-archive"


class ArchiveError(ValueError):
    pass


class FormatVersionMismatch(ArchiveError):
    pass


class ChecksumFailure(ArchiveError):
    pass


@dataclass
class PageArchive:
    pages: dict[int, Page]
    differentials: dict[int, dict[Bidegree, list]] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    version: int = FORMAT_VERSION


def _num(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _label(lab: SSClassName) -> list:
    x = lab.mono
    return [x.m, x.a, x.b, x.k, x.eps, int(lab.boundary)]


def _unlabel(v: Sequence[int]) -> SSClassName:
    m, a, b, k, eps, bnd = v
    return SSClassName(Monomial(m=m, a=a, b=b, k=k, eps=eps), bool(bnd))


def _vecs(vs) -> list:
    return [[_num(c) for c in v] for v in vs]


def _unvecs(vs) -> tuple:
    return tuple(tuple(Fraction(c) for c in v) for v in vs)


def _page_body(page: Page) -> dict:
    return {
        "r": page.r,
        "meta": page.meta,
        "slices": [
            {"bidegree": list(bd), "labels": [_label(l) for l in sl.labels], "orders": list(sl.orders),
             "cycles": _vecs(sl.cycles), "boundaries": _vecs(sl.boundaries),
             "certified": [int(c) for c in sl.certified]}
            for bd, sl in sorted(page.slices.items())
        ],
    }


def _pages_body(pages: Mapping[int, Page]) -> list:
    """Pages whose slices are shared with the previous page are stored by reference."""
    out, prev = [], None
    for r in sorted(pages):
        page = pages[r]
        if prev is not None and page.slices is prev.slices and page.meta == prev.meta:
            out.append({"r": r, "same_as": prev.r})
        else:
            out.append(_page_body(page))
            prev = page
    return out


def _page_from(body: dict, stems: Optional[tuple[int, int]]) -> Page:
    slices = {}
    for d in body["slices"]:
        bd = Bidegree(*d["bidegree"])
        if stems and not (stems[0] <= bd.stem <= stems[1]):
            continue
        slices[bd] = Slice(tuple(_unlabel(v) for v in d["labels"]), tuple(d["orders"]),
                           _unvecs(d["cycles"]), _unvecs(d["boundaries"]),
                           tuple(bool(c) for c in d["certified"]))
    return Page(body["r"], slices, body["meta"])


def archive_text(arch: PageArchive) -> str:
    body = {
        "version": arch.version,
        "meta": arch.meta,
        "pages": _pages_body(arch.pages),
        "differentials": [
            {"r": r, "maps": [{"source": list(bd), "matrix": _vecs(m)} for bd, m in sorted(dm.items())]}
            for r, dm in sorted(arch.differentials.items())
        ],
    }
    text = json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return f"{MAGIC} v{arch.version} sha256={digest}\n{text}\n"


def parse_archive(text: str, stems: Optional[tuple[int, int]] = None) -> PageArchive:
    header, _, body = text.partition("\n")
    parts = header.split()
    if len(parts) != 3 or parts[0] != MAGIC or not parts[2].startswith("sha256="):
        raise ChecksumFailure("missing or malformed archive header")
    if parts[1] != f"v{FORMAT_VERSION}":
        raise FormatVersionMismatch(f"archive is {parts[1]}, this build reads v{FORMAT_VERSION}")
    body = body.rstrip("\n")
    if hashlib.sha256(body.encode("utf-8")).hexdigest() != parts[2][len("sha256="):]:
        raise ChecksumFailure("archive body does not match its checksum (truncated or edited)")
    data = json.loads(body)
    pages: dict[int, Page] = {}
    for p in data["pages"]:
        if "same_as" in p:
            base = pages[p["same_as"]]
            pages[p["r"]] = Page(p["r"], base.slices, base.meta)
        else:
            pages[p["r"]] = _page_from(p, stems)
    diffs = {}
    for d in data["differentials"]:
        maps = {}
        for m in d["maps"]:
            bd = Bidegree(*m["source"])
            if stems and not stems[0] <= bd.stem - 1 < bd.stem <= stems[1]:
                continue
            maps[bd] = [list(row) for row in _unvecs(m["matrix"])]
        diffs[d["r"]] = maps
    meta = dict(data["meta"])
    if stems:
        meta["restricted_to"] = list(stems)
    return PageArchive(pages, diffs, meta, data["version"])


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def save_archive(path, arch: PageArchive) -> None:
    _atomic_write(Path(path), archive_text(arch))


def load_archive(path, stems: Optional[tuple[int, int]] = None) -> PageArchive:
    return parse_archive(Path(path).read_text(encoding="utf-8"), stems)


def save_page(path, page: Page) -> None:
    save_archive(path, PageArchive({page.r: page}, meta=dict(page.meta)))


def load_page(path, stems: Optional[tuple[int, int]] = None) -> Page:
    arch = load_archive(path, stems)
    if len(arch.pages) != 1:
        raise ArchiveError("archive holds more than one page; use load_archive")
    page = next(iter(arch.pages.values()))
    if stems:
        page = Page(page.r, page.slices, dict(page.meta, restricted_to=list(stems)))
    return page


def run_archive(run: SpectralRun, meta: Optional[Mapping] = None) -> PageArchive:
    return PageArchive(dict(run.pages), {r: dict(d) for r, d in run.differentials.items()},
                       dict(meta or run.e2.meta, final_r=run.final_r, stems=list(run.stems),
                            room_bound=run.room_bound))


def archive_run(arch: PageArchive) -> SpectralRun:
    final_r = int(arch.meta.get("final_r", max(arch.pages)))
    stems = tuple(arch.meta.get("stems", (0, 0)))
    return SpectralRun(dict(arch.pages), dict(arch.differentials), final_r, stems,
                       int(arch.meta.get("room_bound", 40)))


# --------------------------------------------------------------------------
# SVG charts


@dataclass(frozen=True)
class ChartStyle:
    colors: Mapping[str, str] = field(default_factory=lambda: {
        "blue": "#1f4acc", "red": "#cc2a1f", "yellow": "#d9a400"})
    cell: int = 14
    row: int = 22
    margin: int = 30
    dot_radius: float = 2.6
    circle_radius: float = 3.6
    rect_size: float = 7.0
    alpha_line: str = "stroke:#555;stroke-width:0.8"
    beta_line: str = "stroke:#555;stroke-width:0.8;stroke-dasharray:2,2"
    differential_line: str = "stroke:#222;stroke-width:0.9"


@dataclass(frozen=True)
class Glyph:
    bidegree: Bidegree
    origin: str
    shape: str  # dot | rect | circle
    order: int
    count: int
    rep: tuple


def _origin(vec, labels) -> tuple[str, SSClassName]:
    lead = next(l for c, l in zip(vec, labels) if c)
    return lead.origin, lead


def page_glyphs(page: Page, stems: tuple[int, int]) -> list[Glyph]:
    """One glyph per (origin, order) group of cyclic summands per bidegree."""
    out = []
    for bd in sorted(page.slices):
        if not (stems[0] <= bd.stem <= stems[1]):
            continue
        sl = page.slices[bd]
        groups: dict[tuple[str, int], list] = {}
        for vec, q in sl.generators():
            origin, _ = _origin(vec, sl.labels)
            groups.setdefault((origin, q), []).append(vec)
        for (origin, q), vecs in sorted(groups.items(), key=lambda t: (("blue", "red", "yellow").index(t[0][0]), t[0][1])):
            shape = "rect" if q == 0 else "circle" if origin == "yellow" else "dot"
            out.append(Glyph(bd, origin, shape, q, len(vecs), tuple(vecs[0])))
    return out


def _product_on_page(page: Page, sl: Slice, vec, mult: Monomial) -> Optional[Bidegree]:
    """Target bidegree if (mult · vec) is a nonzero class on ``page``."""
    if any(c and l.origin == "yellow" for c, l in zip(vec, sl.labels)):
        return None  # multiplication lines with yellow source are omitted
    el = {l: c for c, l in zip(vec, sl.labels) if c}
    boundaries = {l.boundary for l in el}
    if len(boundaries) != 1:
        return None
    prod = j2_product(el, {SSClassName(mult): Fraction(1)})
    if prod is Unknown or not prod:
        return None
    tbd = next(iter(prod)).bidegree
    tsl = page.slice(tbd)
    if tsl is None:
        return None
    v = [Fraction(0)] * tsl.n
    for lab, c in prod.items():
        if lab not in tsl.labels:
            return None
        v[tsl.index(lab)] = c
    if tsl.contains_cycle(v) and not tsl.is_boundary(v):
        return tbd
    return None


def emit_chart(page: Page, stems: tuple[int, int], style: ChartStyle = ChartStyle(),
               differentials: Optional[Mapping[int, Mapping[Bidegree, list]]] = None,
               title: str = "") -> str:
    """Deterministic SVG chart of ``page`` over the stem range."""
    glyphs = page_glyphs(page, stems)
    fmax = max([g.bidegree.filtration for g in glyphs] + [4])
    ns = stems[1] - stems[0] + 1
    W = 2 * style.margin + ns * style.cell
    H = 2 * style.margin + (fmax + 1) * style.row

    def xy(bd: Bidegree, slot: int = 0, nslots: int = 1) -> tuple[float, float]:
        x = style.margin + (bd.stem - stems[0] + 0.5) * style.cell
        x += (slot - (nslots - 1) / 2) * 4.0
        y = H - style.margin - (bd.filtration + 0.5) * style.row
        return round(x, 2), round(y, 2)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    out.append('<g id="grid" style="stroke:#ddd;stroke-width:0.5">')
    for s in range(stems[0], stems[1] + 1):
        if s % 4 == 0:
            x = style.margin + (s - stems[0] + 0.5) * style.cell
            out.append(f'<line x1="{x:.2f}" y1="{style.margin}" x2="{x:.2f}" y2="{H - style.margin}"/>')
    out.append('</g>')
    out.append('<g id="axes" style="font-family:monospace;font-size:8px;fill:#444">')
    for s in range(stems[0], stems[1] + 1):
        if s % 8 == 0:
            x = style.margin + (s - stems[0] + 0.5) * style.cell
            out.append(f'<text x="{x:.2f}" y="{H - style.margin + 12}" text-anchor="middle">{s}</text>')
    for f in range(0, fmax + 1, 2):
        y = H - style.margin - (f + 0.5) * style.row
        out.append(f'<text x="{style.margin - 8}" y="{y + 3:.2f}" text-anchor="end">{f}</text>')
    out.append('</g>')

    slots: dict[Bidegree, int] = {}
    for g in glyphs:
        slots[g.bidegree] = slots.get(g.bidegree, 0) + 1
    pos: dict[tuple, tuple[float, float]] = {}
    seen: dict[Bidegree, int] = {}
    for g in glyphs:
        i = seen.get(g.bidegree, 0)
        seen[g.bidegree] = i + 1
        pos[(g.bidegree, g.origin, g.order)] = xy(g.bidegree, i, slots[g.bidegree])

    # multiplication lines
    out.append('<g id="products">')
    for g in glyphs:
        if g.origin == "yellow":
            continue
        sl = page.slices[g.bidegree]
        x0, y0 = pos[(g.bidegree, g.origin, g.order)]
        for mult, st in ((Monomial(eps=1), style.alpha_line), (Monomial(k=1), style.beta_line)):
            tbd = _product_on_page(page, sl, g.rep, mult)
            if tbd is None or not (stems[0] <= tbd.stem <= stems[1]):
                continue
            tgt = next((p for k, p in pos.items() if k[0] == tbd and k[1] == g.origin), None)
            if tgt is None:
                continue
            out.append(f'<line x1="{x0}" y1="{y0}" x2="{tgt[0]}" y2="{tgt[1]}" style="{st}"/>')
    out.append('</g>')

    out.append('<g id="differentials">')
    for r in sorted(differentials or {}):
        for bd in sorted(differentials[r]):
            tbd = bd.shift(-1, r)
            if not (stems[0] <= bd.stem <= stems[1] and stems[0] <= tbd.stem <= stems[1]):
                continue
            if bd not in slots or tbd not in slots:
                continue
            (x0, y0), (x1, y1) = xy(bd), xy(tbd)
            out.append(f'<line class="d{r}" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" '
                       f'style="{style.differential_line}"/>')
    out.append('</g>')

    out.append('<g id="classes">')
    for g in glyphs:
        x, y = pos[(g.bidegree, g.origin, g.order)]
        color = style.colors[g.origin]
        attrs = (f'data-stem="{g.bidegree.stem}" data-filtration="{g.bidegree.filtration}" '
                 f'data-origin="{g.origin}" data-order="{g.order}" data-count="{g.count}"')
        if g.shape == "rect":
            h = style.rect_size / 2
            out.append(f'<rect x="{x - h:.2f}" y="{y - h:.2f}" width="{style.rect_size}" '
                       f'height="{style.rect_size}" style="fill:none;stroke:{color}" {attrs}/>')
        elif g.shape == "circle":
            out.append(f'<circle cx="{x}" cy="{y}" r="{style.circle_radius}" '
                       f'style="fill:none;stroke:{color};stroke-width:1.2" {attrs}/>')
        else:
            out.append(f'<circle cx="{x}" cy="{y}" r="{style.dot_radius}" style="fill:{color}" {attrs}/>')
        if g.count > 1:
            out.append(f'<text x="{x + 3.5:.2f}" y="{y - 3.5:.2f}" style="font-family:monospace;'
                       f'font-size:6px;fill:{color}">{g.count}</text>')
    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"


def save_chart(path, svg: str) -> None:
    _atomic_write(Path(path), svg)


def reference_chart(run: SpectralRun, stems: tuple[int, int], spectrum: str = "J2") -> str:
    """E2 chart with every differential of the run drawn: the regression format."""
    return emit_chart(run.e2, stems, ChartStyle(), run.differentials,
                      title=f"{spectrum} E2, stems {stems[0]}-{stems[1]}")
