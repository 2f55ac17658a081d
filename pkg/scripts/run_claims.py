"""Run both spectral sequences and verify the claim suite.

    python3 scripts/run_claims.py [--max-stem 400] [--window=-6..34] [--grid 0,1] [--out out]

Writes claims-report.txt and claims-summary.txt under --out and prints the
summary.  Exit status 1 if any machine claim is refuted or undecidable."""

import argparse
import sys
import time
from pathlib import Path

from tmfj2.adams_j2 import build_j2_e2, induce_j2_differentials
from tmfj2.claims import assemble_theorems, build_suite, format_report, format_summary, verify_claims
from tmfj2.tmf_model import CLAIM_WINDOW, TmfE2Config, build_tmf_e2, run_tmf


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-stem", type=int, default=400)
    ap.add_argument("--window", default=f"{CLAIM_WINDOW[0]}..{CLAIM_WINDOW[1]}")
    ap.add_argument("--grid", default="0,1")
    ap.add_argument("--out", default="out")
    args = ap.parse_args()
    lo, hi = (int(x) for x in args.window.split(".."))
    grid = tuple(int(x) for x in args.grid.split(","))

    t0 = time.perf_counter()
    cfg = TmfE2Config(stems=(0, args.max_stem), window=(lo, hi))
    e2 = build_tmf_e2(cfg)
    tmf = run_tmf(e2, cfg)
    j2 = induce_j2_differentials(build_j2_e2(e2, 2, cfg), tmf)
    report = verify_claims(build_suite(grid, args.max_stem), tmf, j2)
    elapsed = time.perf_counter() - t0

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "claims-report.txt").write_text(format_report(report), encoding="utf-8")
    summary = format_summary(report, assemble_theorems(report))
    (out / "claims-summary.txt").write_text(summary, encoding="utf-8")
    print(summary, end="")
    print(f"({elapsed:.1f}s)")
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
