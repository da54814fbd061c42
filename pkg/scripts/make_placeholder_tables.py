"""Regenerate the placeholder economic tables shipped in src/forestreturn/data.

The volumes come from a Naslund height curve and a constant form factor;
the sawlog share rises from a species threshold diameter.  They are
illustrative only: replace them with regional assortment tables for any
real analysis.
"""
import csv
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "forestreturn" / "data"

# Naslund height parameters (d in cm), form factor, sawlog threshold dbh (mm)
SPECIES = {
    "spruce": dict(a=1.2, b=0.20, form=0.50, saw_from=160.0),
    "pine": dict(a=1.3, b=0.21, form=0.47, saw_from=160.0),
    "birch": dict(a=1.1, b=0.23, form=0.45, saw_from=180.0),
}
LOWER = np.arange(50, 700, 50, dtype=float)


def stem_volume(d_mm, a, b, form):
    d_cm = d_mm / 10.0
    height = 1.3 + d_cm**2 / (a + b * d_cm) ** 2
    return form * np.pi / 4 * (d_mm / 1000.0) ** 2 * height


def main():
    mid = LOWER + 25.0
    with open(DATA / "placeholder_yields.csv", "w", newline="") as fh:
        fh.write("# placeholder assortment yields, NOT a published table\n")
        w = csv.writer(fh)
        w.writerow(["species", "class_lower_mm", "v_pulp_m3", "v_saw_m3"])
        for sp, p in SPECIES.items():
            v = stem_volume(mid, p["a"], p["b"], p["form"])
            share = np.where(mid > p["saw_from"], 0.85 * (1 - (p["saw_from"] / mid) ** 2), 0.0)
            for lo, vt, sh in zip(LOWER, v, share):
                w.writerow([sp, f"{lo:g}", f"{vt * (1 - sh):.5f}", f"{vt * sh:.5f}"])

    with open(DATA / "placeholder_costs.csv", "w", newline="") as fh:
        fh.write("# placeholder harvesting costs, NOT a published table\n")
        w = csv.writer(fh)
        w.writerow(["class_lower_mm", "per_stem_cost", "per_m3_cost"])
        for lo, m in zip(LOWER, mid):
            w.writerow([f"{lo:g}", "1.00", "6.00"])


if __name__ == "__main__":
    main()
