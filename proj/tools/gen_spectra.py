#!/usr/bin/env python3
"""Writes example spectrum exports in the comma-separated layout the
environment reader accepts (`# key: value` metadata, then energy, flux)."""
import math
import os

OUT = "data/spectra"
os.makedirs(OUT, exist_ok=True)


def logspace(lo, hi, n):
    return [lo * (hi / lo) ** (i / (n - 1)) for i in range(n)]


def write(name, meta, header, rows):
    with open(os.path.join(OUT, name), "w") as f:
        f.write("# synthetic: generated by tools/gen_spectra.py, not a model export\n")
        for k, v in meta.items():
            f.write(f"# {k}: {v}\n")
        f.write(header + "\n")
        for e, v in rows:
            f.write(f"{e:.6g}, {v:.6g}\n")


# Trapped surrogates at 410 km, same exponential shapes as the parametric model.
write("trapped_proton_410km.csv",
      {"species": "proton", "kind": "differential", "duration_days": 30, "source": "trapped"},
      "energy_MeV, flux_cm2_s_MeV",
      [(e, 0.4 * math.exp(-e / 60.0)) for e in logspace(0.1, 400.0, 40)])
write("trapped_electron_410km.csv",
      {"species": "electron", "kind": "differential", "duration_days": 30, "source": "trapped"},
      "energy_MeV, flux_cm2_s_MeV",
      [(e, 1.0e5 * math.exp(-e / 0.4)) for e in logspace(0.04, 7.0, 30)])

# Solar minimum: soft, small integral fluence F(>E) over a year.
write("solar_proton_min.csv",
      {"species": "proton", "kind": "integral", "duration_days": 365, "source": "solar"},
      "energy_MeV, fluence_gt_E_cm2",
      [(e, 1.0e6 * math.exp(-(e - 1.0) / 20.0)) for e in logspace(1.0, 500.0, 30)])

# Galactic cosmic protons, hard and faint; clipped at the table ceiling.
def gcr(e):
    # omnidirectional /cm2/s/MeV, broad maximum near a few hundred MeV
    return 4.0 * math.pi * 1.5e-4 * (e / 300.0) ** 1.5 / (1.0 + (e / 300.0) ** 4.2)


write("cosmic_proton_min.csv",
      {"species": "proton", "kind": "differential", "duration_days": 30, "source": "cosmic"},
      "energy_MeV, flux_cm2_s_MeV",
      [(e, gcr(e)) for e in logspace(10.0, 1.0e4, 40)])
