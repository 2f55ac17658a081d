import re

import pytest

from tmfj2.chart_io import (
    FORMAT_VERSION, ChecksumFailure, FormatVersionMismatch, archive_run, archive_text, emit_chart,
    load_archive, load_page, page_glyphs, parse_archive, run_archive, save_archive, save_page,
)
from tmfj2.monomial import Bidegree


def test_run_round_trip(small, tmp_path):
    run = small.j2.run
    path = tmp_path / "j2.arch"
    save_archive(path, run_archive(run))
    back = archive_run(load_archive(path))
    assert back.pages == run.pages
    assert back.differentials == run.differentials
    assert back.final_r == run.final_r and back.stems == run.stems


def test_page_round_trip_and_restriction(small, tmp_path):
    e2 = small.tmf.run.e2
    path = tmp_path / "e2.arch"
    save_page(path, e2)
    assert load_page(path) == e2
    part = load_page(path, (0, 30))
    assert part.slices == {bd: sl for bd, sl in e2.slices.items() if 0 <= bd.stem <= 30}
    assert part.meta["restricted_to"] == [0, 30]


def test_truncated_archive_fails_checksum(small, tmp_path):
    text = archive_text(run_archive(small.tmf.run))
    with pytest.raises(ChecksumFailure):
        parse_archive(text[: len(text) // 2])


def test_version_mismatch(small):
    text = archive_text(run_archive(small.tmf.run))
    bumped = text.replace(f" v{FORMAT_VERSION} ", f" v{FORMAT_VERSION + 1} ", 1)
    with pytest.raises(FormatVersionMismatch):
        parse_archive(bumped)


def test_archive_is_deterministic(small):
    a = archive_text(run_archive(small.j2.run))
    b = archive_text(run_archive(small.j2.run))
    assert a == b


def test_chart_deterministic(small):
    run = small.j2.run
    a = emit_chart(run.e2, (0, 40), differentials=run.differentials)
    b = emit_chart(run.e2, (0, 40), differentials=run.differentials)
    assert a == b
    assert a.lstrip().startswith(("<svg", "<?xml"))


def test_glyph_counts_match_page(small):
    page = small.j2.run.e2
    glyphs = page_glyphs(page, (0, 40))
    svg = emit_chart(page, (0, 40))
    assert len(re.findall(r"data-origin=", svg)) == len(glyphs)
    for bd in {g.bidegree for g in glyphs}:
        drawn = sum(g.count for g in glyphs if g.bidegree == bd)
        assert drawn == len(page.slice(bd).generators())


def test_glyph_shapes(small):
    glyphs = {(tuple(g.bidegree), g.origin): g for g in page_glyphs(small.j2.run.e2, (0, 40))}
    assert glyphs[((3, 1), "blue")].shape == "dot"
    assert glyphs[((7, 1), "yellow")].shape == "circle"
    assert glyphs[((2, 2), "red")].shape == "dot"
    assert any(g.shape == "rect" for (bd, o), g in glyphs.items() if bd == (0, 0))


def test_chart_range_excludes_other_stems(small):
    svg = emit_chart(small.j2.run.e2, (10, 20))
    stems = {int(s) for s in re.findall(r'data-stem="(-?\d+)"', svg)}
    assert stems and stems <= set(range(10, 21))
    assert Bidegree(10, 2) in {g.bidegree for g in page_glyphs(small.j2.run.e2, (10, 20))}
