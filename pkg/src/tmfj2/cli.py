"""Command-line front end: build, run, chart, verify, catalog."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import yaml

from .adams_j2 import J2Run, PsiOperator, build_j2_e2, induce_j2_differentials
from .beta_catalog import (
    FAMILIES,
    FamilyElement,
    NonUnitSwap,
    hurewicz_name,
    mrw_solutions,
    toda_normalize,
)
from .chart_io import (
    ChartStyle,
    _atomic_write,
    archive_run,
    emit_chart,
    load_archive,
    load_page,
    run_archive,
    save_archive,
    save_page,
)
from .claims import assemble_theorems, build_suite, format_report, format_summary, verify_claims
from .monomial import Bidegree
from .tmf_model import CLAIM_WINDOW, TmfE2Config, TmfRun, build_tmf_e2, rule_from_dict, run_tmf


class MissingArchive(FileNotFoundError):
    pass


@dataclass(frozen=True)
class RunConfig:
    stems: tuple[int, int] = (0, 200)
    window: tuple[int, int] = (-6, 18)
    k: int = 2
    grid: tuple[int, ...] = (0, 1)
    claim_stems: tuple[int, int] = (0, 400)
    claim_window: tuple[int, int] = CLAIM_WINDOW
    out: str = "out"
    differentials: Optional[tuple[dict, ...]] = None
    chart: dict = field(default_factory=dict)

    def __post_init__(self):
        PsiOperator(self.k)  # rejects k ≡ 0 mod 3
        for name in ("stems", "window", "claim_stems", "claim_window"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: lower end {lo} exceeds upper end {hi}")

    def tmf_config(self, claims: bool = False) -> TmfE2Config:
        kw = {}
        if self.differentials is not None:
            kw["rules"] = tuple(rule_from_dict(d) for d in self.differentials)
        if claims:
            return TmfE2Config(stems=self.claim_stems, window=self.claim_window, **kw)
        return TmfE2Config(stems=self.stems, window=self.window, **kw)


def load_config(path: Optional[str]) -> RunConfig:
    if not path:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    kw = {}
    for key in ("stems", "window", "claim_stems", "claim_window", "grid"):
        if key in data:
            kw[key] = tuple(int(x) for x in data[key])
    if "k" in data:
        kw["k"] = int(data["k"])
    if "out" in data:
        kw["out"] = str(data["out"])
    if "differentials" in data:
        kw["differentials"] = tuple(data["differentials"])
    if "chart" in data:
        kw["chart"] = dict(data["chart"])
    unknown = set(data) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**kw)


def _range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected A..B, got {text!r}")
    return int(lo), int(hi)


def _grid(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    kw = {}
    if getattr(args, "range", None):
        kw["claim_stems" if args.command == "verify" else "stems"] = args.range
    if getattr(args, "window", None):
        kw["claim_window" if args.command == "verify" else "window"] = args.window
    if getattr(args, "k", None) is not None:
        kw["k"] = args.k
    if getattr(args, "out", None):
        kw["out"] = args.out
    if getattr(args, "grid", None):
        kw["grid"] = args.grid
    return replace(cfg, **kw)


def _paths(cfg: RunConfig) -> dict[str, Path]:
    out = Path(cfg.out)
    return {
        "tmf-e2": out / "tmf-e2.arch", "j2-e2": out / "j2-e2.arch",
        "tmf-run": out / "tmf-run.arch", "j2-run": out / "j2-run.arch",
        "claims-tmf-run": out / "claims-tmf-run.arch", "claims-j2-run": out / "claims-j2-run.arch",
    }


def _need(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingArchive(f"{path} not found; run `{hint}` first")
    return path


def _dimension_table(page) -> str:
    lines = ["stem filt  module"]
    for bd in sorted(page.slices, key=lambda b: (b.stem, b.filtration)):
        mod = page.module(bd)
        inv = mod.invariants()
        if not inv:
            continue
        desc = " + ".join("Z" if f == 0 else f"Z/{int(f)}" for f in inv)
        lines.append(f"{bd.stem:4d} {bd.filtration:4d}  {desc}")
    return "\n".join(lines)


def cmd_build(args, cfg: RunConfig) -> int:
    p = _paths(cfg)
    tcfg = cfg.tmf_config()
    e2 = build_tmf_e2(tcfg)
    if args.target == "tmf":
        save_page(p["tmf-e2"], e2)
        page, path = e2, p["tmf-e2"]
    else:
        page = build_j2_e2(e2, cfg.k, tcfg)
        save_page(p["j2-e2"], page)
        path = p["j2-e2"]
    print(f"wrote {path}")
    print(_dimension_table(page))
    return 0


def cmd_run(args, cfg: RunConfig) -> int:
    p = _paths(cfg)
    if args.target == "claims":
        tcfg = cfg.tmf_config(claims=True)
        e2 = build_tmf_e2(tcfg)
        tr = run_tmf(e2, tcfg)
        jr = induce_j2_differentials(build_j2_e2(e2, cfg.k, tcfg), tr)
        save_archive(p["claims-tmf-run"], run_archive(tr.run))
        save_archive(p["claims-j2-run"], run_archive(jr.run))
        print(f"wrote {p['claims-tmf-run']} and {p['claims-j2-run']}")
        _print_run("tmf", tr.run)
        _print_run("j2", jr.run)
        return 0
    tcfg = cfg.tmf_config()
    tmf_e2 = load_page(_need(p["tmf-e2"], "tmfj2 build tmf"))
    tr = run_tmf(tmf_e2, tcfg)
    if args.target == "tmf":
        save_archive(p["tmf-run"], run_archive(tr.run))
        print(f"wrote {p['tmf-run']}")
        _print_run("tmf", tr.run)
        print("E∞ generators (stems 0-72): " + ", ".join(n.label for n in tr.names))
        for v in tr.verdicts:
            print(f"  {v.cls}: {v}")
        return 0
    j2_e2 = load_page(_need(p["j2-e2"], "tmfj2 build j2"))
    jr = induce_j2_differentials(j2_e2, tr)
    save_archive(p["j2-run"], run_archive(jr.run))
    print(f"wrote {p['j2-run']}")
    _print_run("j2", jr.run)
    for ext in jr.extensions:
        print(f"  exotic 3-extension: {ext.source} → {ext.target} (stem {ext.stem})")
    return 0


def _print_run(name: str, run) -> None:
    pages = ", ".join(f"d{r}" for r in run.nontrivial_pages())
    print(f"{name}: nontrivial differentials {pages}; E∞ = E{run.final_r}; "
          f"unresolved room candidates: {len(run.unresolved)}")


def cmd_chart(args, cfg: RunConfig) -> int:
    p = _paths(cfg)
    key = f"{args.target}-run"
    arch = load_archive(_need(p[key], f"tmfj2 run {args.target}"))
    run = archive_run(arch)
    r = run.final_r if args.page == "inf" else int(args.page)
    if r not in run.pages:
        raise ValueError(f"page {r} not stored; pages are {sorted(run.pages)}")
    stems = args.range or cfg.stems
    style = ChartStyle(colors={**ChartStyle().colors, **cfg.chart})
    diffs = {rr: d for rr, d in run.differentials.items() if rr >= r}
    svg = emit_chart(run.pages[r], stems, style, diffs, title=f"{args.target} E{r} stems {stems[0]}-{stems[1]}")
    out = Path(args.output) if args.output else Path(cfg.out) / f"{args.target}-E{r}-{stems[0]}-{stems[1]}.svg"
    _atomic_write(out, svg)
    print(f"wrote {out}")
    return 0


def cmd_verify(args, cfg: RunConfig) -> int:
    p = _paths(cfg)
    tarch = load_archive(_need(p["claims-tmf-run"], "tmfj2 run claims"))
    jarch = load_archive(_need(p["claims-j2-run"], "tmfj2 run claims"))
    tcfg = cfg.tmf_config(claims=True)
    tr = TmfRun(tcfg, archive_run(tarch), [], [])
    jr = J2Run(cfg.k, archive_run(jarch), [])
    max_stem = min(cfg.claim_stems[1], jr.run.stems[1])
    suite = build_suite(cfg.grid, max_stem)
    report = verify_claims(suite, tr, jr)
    parts = assemble_theorems(report)
    out = Path(cfg.out)
    _atomic_write(out / "claims-report.txt", format_report(report))
    summary = format_summary(report, parts)
    _atomic_write(out / "claims-summary.txt", summary)
    print(summary, end="")
    undecided = [r for r in report.results if r.status == "undecidable"]
    if undecided:
        lo, hi = cfg.claim_window
        print(f"{len(undecided)} claims undecidable; try --window {lo - 3}..{hi + 3}", file=sys.stderr)
    return 0 if report.ok else 1


def cmd_catalog(args, cfg: RunConfig) -> int:
    if args.query == "stem":
        n = int(args.values[0])
        hits = []
        for key, fam in FAMILIES.items():
            if n >= fam.base_stem and (n - fam.base_stem) % 144 == 0:
                e = FamilyElement(key, (n - fam.base_stem) // 144)
                hits.append(f"{e}  {e.bidegree}  ↦ {hurewicz_name(e)}")
        print("\n".join(hits) if hits else f"no catalogued family element in stem {n}")
    elif args.query == "toda":
        try:
            unit, canon, swaps = toda_normalize([int(v) for v in args.values])
        except NonUnitSwap as exc:
            print(f"NonUnitSwap: {exc}")
            return 1
        for s in swaps:
            print(f"  β{s.before[0]}β{s.before[1]} = {s.unit}·β{s.after[0]}β{s.after[1]}")
        print(f"{unit}·" + "".join(f"β{a}" for a in canon))
    elif args.query == "mrw":
        stem = int(args.values[0])
        cands = mrw_solutions(Bidegree(stem, 2))
        residues = sorted({c.j_mod_36 for c in cands})
        bound = {c.min_n for c in cands}
        print(f"({stem},2): {len(cands)} candidates, j mod 36 ∈ {residues}, predicate n-bound {bound}")
        cite = {c.citation for c in cands if c.citation}
        for c in sorted(cite):
            print(f"  clause: {c}")
    elif args.query == "hurewicz":
        e = FamilyElement(args.values[0], int(args.values[1]) if len(args.values) > 1 else 0)
        print(f"{e} {e.bidegree} ↦ {hurewicz_name(e)}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tmfj2", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--range", type=_range, help="stem range A..B")
    common.add_argument("--window", type=_range, help="Δ-exponent window M..N (write --window=-6..18)")
    common.add_argument("--k", type=int, help="Adams operation ψ^k (3 ∤ k)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--grid", type=_grid, help="claim parameter values, e.g. 0,1")
    sub = ap.add_subparsers(dest="command", required=True)
    b = sub.add_parser("build", parents=[common], help="write the E2 archive")
    b.add_argument("target", choices=("tmf", "j2"))
    r = sub.add_parser("run", parents=[common], help="turn pages to E∞")
    r.add_argument("target", choices=("tmf", "j2", "claims"))
    c = sub.add_parser("chart", parents=[common], help="emit an SVG chart")
    c.add_argument("target", choices=("tmf", "j2"))
    c.add_argument("--page", default="2", help="page number or 'inf'")
    c.add_argument("-o", "--output", help="SVG path")
    sub.add_parser("verify", parents=[common], help="verify the claim suite")
    g = sub.add_parser("catalog", parents=[common], help="β-family queries")
    g.add_argument("query", choices=("stem", "toda", "mrw", "hurewicz"))
    g.add_argument("values", nargs="+")
    return ap


COMMANDS = {"build": cmd_build, "run": cmd_run, "chart": cmd_chart, "verify": cmd_verify, "catalog": cmd_catalog}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = _apply_flags(load_config(args.config), args)
        return COMMANDS[args.command](args, cfg)
    except (ValueError, MissingArchive) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
