#!/usr/bin/env python3
"""Writes data/calibration/ground_tests.csv, a synthetic stand-in for the
published proton ground-test correlation (DDD against dark-count increase).

The published points are only shown as a figure; these are generated from a
linear law with device-to-device spread so the slope fit has realistic
scatter. Groups a/b/c mimic three beam energies.
"""
import argparse
from pathlib import Path

import numpy as np

# beam energy MeV -> silicon NIEL MeV cm^2/g, from data/tables/niel_proton_Si.csv
GROUPS = {"a": 5.0, "b": 25.0, "c": 50.0}
FLUENCES = [5e7, 1e8, 2e8, 4e8]  # protons / cm^2, cumulative steps per device
DEVICES_PER_GROUP = 4
TRUE_SLOPE = 0.25                 # cps per MeV/g
DEVICE_SPREAD = 0.12
READOUT_NOISE = 0.02


def niel(e):
    return 0.036 / e * (e / (e + 0.01)) + 1.7e-3 * (1.0 - np.exp(-e / 30.0))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/calibration/ground_tests.csv")
    ap.add_argument("--seed", type=int, default=2021)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    rows = []
    for group, energy in GROUPS.items():
        for _ in range(DEVICES_PER_GROUP):
            device_scale = 1.0 + DEVICE_SPREAD * rng.standard_normal()
            # fluence steps jitter a little between devices
            for phi in FLUENCES:
                ddd = phi * rng.uniform(0.9, 1.1) * niel(energy)
                dcr = TRUE_SLOPE * device_scale * ddd * (1 + READOUT_NOISE * rng.standard_normal())
                rows.append((ddd, dcr, group))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as f:
        f.write("# synthetic: generated by tools/gen_calibration.py, not measured data\n")
        f.write(f"# seed: {args.seed}\n")
        f.write("ddd_MeV_g, delta_dcr_cps, group_label\n")
        for ddd, dcr, group in rows:
            f.write(f"{ddd:.6g}, {dcr:.6g}, {group}\n")


if __name__ == "__main__":
    main()
