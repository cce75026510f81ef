"""End-to-end scenario runs from the bundled scenario files.

Each file is simulated and its summary printed; the time series and JSON
summaries land in a temporary directory (or the one given on the command
line).
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

from lasercom_twin import load_scenario, run_scenario

here = Path(__file__).resolve().parent.parent / "scenarios"
out_root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="lasercom-"))

for path in sorted(here.glob("*.toml")):
    cfg = load_scenario(path)
    summary = run_scenario(cfg, out_root / path.stem)
    m = summary.margin_min_db, summary.margin_median_db, summary.margin_max_db
    margins = "n/a" if m[0] is None else f"{m[0]:.2f} / {m[1]:.2f} / {m[2]:.2f} dB"
    print(f"{path.name}: {summary.samples} samples, margin min/median/max {margins}, "
          f"availability {summary.availability:.3f}")
    if summary.time_to_linked_s is not None:
        print(f"  LINKED after {summary.time_to_linked_s:.3f} s, residual RMS {summary.residual_rms_rad * 1e6:.1f} urad")
    if summary.passes:
        print(f"  {len(summary.passes)} passes, longest {max(p.duration for p in summary.passes):.1f} s")
    for w in summary.warnings:
        print(f"  warning: {w}")
    print(f"  -> {', '.join(summary.files)}")
