"""Truncation, amplification and slicing of the photon-number distribution.

Each named preset is run through the same pipeline as the CLI; artifacts
land in a temporary directory and a one-line summary is printed per case.

Run: python3 demos/regimes.py
"""

import tempfile
from pathlib import Path

from steadyfock.scenarios import preset_config, run_scenario

with tempfile.TemporaryDirectory() as tmp:
    for name in ("fig2", "fig3", "fig4", "fig5", "fig6"):
        cfg = preset_config(name)
        rep = run_scenario(cfg, Path(tmp) / name).report
        win = rep["population_windows"]
        print(f"{name}: {cfg['description']}")
        print(f"  regime={rep['regime']:<10} n_max={rep['n_max']:<3} "
              f"P(n<=l)={win['up_to_l']:.4f} P(l<n<=m)={win['slice_l+1_to_m']:.4f} "
              f"P(n>m)={max(win['above_m'], 0.0):.4f}")
        print(f"  Wigner min={rep['wigner']['min']:+.4f} -> {rep['wigner']['classification']}"
              + ("   [parameters interpreted]" if rep.get("parameter_ambiguity") else ""))
