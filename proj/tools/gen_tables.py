#!/usr/bin/env python3
"""Generates the shipped stopping-power and silicon NIEL tables.

Run once; the CSV output under data/tables/ is committed. See data/README.md
for the formulas and their limits.
"""
import argparse
import json
import math
from pathlib import Path

ME = 0.51099895      # electron rest energy, MeV
MP = 938.27208816    # proton rest energy, MeV
K = 0.307075         # 4 pi N_A r_e^2 m_e c^2, MeV cm^2 / mol

# symbol -> (Z, A g/mol)
ELEMENTS = {
    "H": (1, 1.008), "C": (6, 12.011), "O": (8, 15.999), "Mg": (12, 24.305),
    "Al": (13, 26.982), "Si": (14, 28.085), "Ca": (20, 40.078), "Ti": (22, 47.867),
    "V": (23, 50.942), "Cr": (24, 51.996), "Mn": (25, 54.938), "Fe": (26, 55.845),
    "Ni": (28, 58.693), "Cu": (29, 63.546),
}

VERSION = "satrad-tables-1"


def energy_grid(lo=1e-3, hi=1e4, per_decade=10):
    n = round(math.log10(hi / lo) * per_decade)
    return [lo * 10 ** (i / per_decade) for i in range(n + 1)]


def z_over_a(material):
    return sum(w * ELEMENTS[s][0] / ELEMENTS[s][1] for s, w in material["composition"])


def proton_stopping(t, zoa, i_mev):
    """Bethe without shell or density corrections, blended at low energy."""
    gamma = 1.0 + t / MP
    beta2 = 1.0 - 1.0 / gamma ** 2
    ratio = ME / MP
    tmax = 2 * ME * beta2 * gamma ** 2 / (1 + 2 * gamma * ratio + ratio ** 2)
    arg = 2 * ME * beta2 * gamma ** 2 * tmax / i_mev ** 2
    # e + arg keeps the logarithm positive where Bethe breaks down.
    bethe = K * zoa / beta2 * (0.5 * math.log(math.e + arg) - beta2)
    # Low-energy branch rising as T^0.45; the harmonic blend caps S near the
    # Bragg peak and is negligible above a few MeV.
    low = 5800.0 * zoa * t ** 0.45
    return 1.0 / (1.0 / bethe + 1.0 / low)


def electron_stopping(t, zoa, i_mev, z_eff):
    """Collision (Rohrlich-Carlson, no density effect) plus a radiative
    term from the S_rad/S_col ~ Z (T + mc^2) / (1600 mc^2) rule."""
    tau = t / ME
    gamma = tau + 1.0
    beta2 = 1.0 - 1.0 / gamma ** 2
    f_minus = 1 - beta2 + (tau ** 2 / 8 - (2 * tau + 1) * math.log(2)) / (tau + 1) ** 2
    bracket = math.log(tau ** 2 * (tau + 2) / (2 * (i_mev / ME) ** 2)) + f_minus
    collision = 0.5 * K * zoa / beta2 * bracket
    radiative = collision * z_eff * (t + ME) / (1600.0 * ME)
    return collision + radiative


def proton_niel_si(t):
    # Coulomb part ~ 1/E with a low-energy roll-off, plus a nuclear part
    # saturating above ~100 MeV.
    coulomb = 0.036 / t * (t / (t + 0.01))
    nuclear = 1.7e-3 * (1.0 - math.exp(-t / 30.0))
    return coulomb + nuclear


def electron_niel_si(t):
    threshold = 0.2
    if t <= threshold:
        return 0.0
    return 5.0e-5 * t ** 0.2 * (1.0 - threshold / t) ** 2


def write_table(path, header, columns, rows):
    with open(path, "w") as f:
        for k, v in header.items():
            f.write(f"# {k}: {v}\n")
        f.write(f"# columns: {', '.join(columns)}\n")
        for row in rows:
            f.write(", ".join(f"{x:.10g}" for x in row) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--materials", default="data/materials.json")
    ap.add_argument("--out", default="data/tables")
    args = ap.parse_args()
    table = json.loads(Path(args.materials).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = energy_grid()

    for m in table["materials"]:
        if m["density"] == 0:
            continue
        zoa = z_over_a(m)
        i_mev = m["mean_excitation_eV"] * 1e-6
        base = {"material": m["name"], "version": VERSION,
                "mean_excitation_eV": m["mean_excitation_eV"], "z_over_a": f"{zoa:.6f}"}
        write_table(out / f"proton_{m['name']}.csv", {"species": "proton", **base,
                    "model": "bethe_low_energy_blend"},
                    ["E_MeV", "S_MeVcm2_g"], [(t, proton_stopping(t, zoa, i_mev)) for t in grid])
        detour = m["electron_detour_factor"]
        write_table(out / f"electron_{m['name']}.csv", {"species": "electron", **base,
                    "model": "rohrlich_carlson_plus_radiative"},
                    ["E_MeV", "S_MeVcm2_g", "detour_factor"],
                    [(t, electron_stopping(t, zoa, i_mev, m["effective_Z"]), detour) for t in grid])

    write_table(out / "niel_proton_Si.csv", {"species": "proton", "material": "Si",
                "version": VERSION, "model": "analytic_fit"},
                ["E_MeV", "NIEL_MeVcm2_g"], [(t, proton_niel_si(t)) for t in grid])
    write_table(out / "niel_electron_Si.csv", {"species": "electron", "material": "Si",
                "version": VERSION, "model": "analytic_fit"},
                ["E_MeV", "NIEL_MeVcm2_g"], [(t, electron_niel_si(t)) for t in grid])


if __name__ == "__main__":
    main()
