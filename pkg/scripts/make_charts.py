"""Regenerate the reference J² charts (stems 0-64 and 70-134).

    python3 scripts/make_charts.py [OUTDIR]

Defaults to tests/golden/; only overwrite the goldens after checking the
new charts by eye."""

import sys
from pathlib import Path

from tmfj2.adams_j2 import build_j2_e2, induce_j2_differentials
from tmfj2.chart_io import reference_chart, save_chart
from tmfj2.tmf_model import TmfE2Config, build_tmf_e2, run_tmf

RANGES = ((0, 64), (70, 134))


def main(outdir: str = "tests/golden") -> None:
    cfg = TmfE2Config(stems=(0, 134))
    e2 = build_tmf_e2(cfg)
    j2 = induce_j2_differentials(build_j2_e2(e2, 2, cfg), run_tmf(e2, cfg))
    for lo, hi in RANGES:
        path = Path(outdir) / f"j2-e2-{lo}-{hi}.svg"
        save_chart(path, reference_chart(j2.run, (lo, hi)))
        print(f"wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:])
