#!/usr/bin/env python3
"""Builds data/scenes/spooqy_like.json, a representative 3U CubeSat with two
silicon detectors in titanium compartments.

The real payload CAD is unpublished; every dimension here is a documented
choice (see docs/scene_format.md). All meshes are boxes so the file stays
readable and diff-able.
"""
import argparse
import json
from pathlib import Path

AXES = "xyz"


def box(name, lo, hi, material):
    return {"name": name, "material": material,
            "box": {"min": [round(v, 6) for v in lo], "max": [round(v, 6) for v in hi]}}


def face_with_hole(name, lo, hi, axis, hole_center, hole_half, material):
    """Slab lo..hi (thin along axis) minus a rectangular through-hole."""
    u, v = [a for a in range(3) if a != axis]
    h_lo = [0.0] * 3
    h_hi = [0.0] * 3
    h_lo[u], h_hi[u] = hole_center[0] - hole_half[0], hole_center[0] + hole_half[0]
    h_lo[v], h_hi[v] = hole_center[1] - hole_half[1], hole_center[1] + hole_half[1]
    strips = []

    def piece(suffix, u_rng, v_rng):
        a, b = list(lo), list(hi)
        a[u], b[u] = u_rng
        a[v], b[v] = v_rng
        if b[u] - a[u] > 1e-9 and b[v] - a[v] > 1e-9:
            strips.append(box(f"{name}_{suffix}", a, b, material))

    piece("u0", (lo[u], h_lo[u]), (lo[v], hi[v]))
    piece("u1", (h_hi[u], hi[u]), (lo[v], hi[v]))
    piece("v0", (h_lo[u], h_hi[u]), (lo[v], h_lo[v]))
    piece("v1", (h_lo[u], h_hi[u]), (h_hi[v], hi[v]))
    return strips


def hollow_box(name, center, half, wall, material, hole=None):
    """Six non-overlapping wall slabs. hole = (face, (c_u, c_v), (h_u, h_v))
    cuts an opening in face '+x', '-y', ..."""
    meshes = []
    outer_lo = [c - h for c, h in zip(center, half)]
    outer_hi = [c + h for c, h in zip(center, half)]
    inner_lo = [c - h + wall for c, h in zip(center, half)]
    inner_hi = [c + h - wall for c, h in zip(center, half)]
    for axis in range(3):
        for sign in (-1, 1):
            lo = list(outer_lo)
            hi = list(outer_hi)
            # earlier axes own the shared edges
            for other in range(axis):
                lo[other], hi[other] = inner_lo[other], inner_hi[other]
            if sign < 0:
                hi[axis] = inner_lo[axis]
            else:
                lo[axis] = inner_hi[axis]
            face = ("+" if sign > 0 else "-") + AXES[axis]
            label = f"{name}_{face.replace('+', 'p').replace('-', 'm')}"
            if hole and hole[0] == face:
                meshes += face_with_hole(label, lo, hi, axis, hole[1], hole[2], material)
            else:
                meshes.append(box(label, lo, hi, material))
    return meshes


def detector(det_id, center, half, material="Si", depletion_volume=None):
    lo = [c - h for c, h in zip(center, half)]
    hi = [c + h for c, h in zip(center, half)]
    d = {"id": det_id, "material": material,
         "box": {"min": [round(v, 6) for v in lo], "max": [round(v, 6) for v in hi]}}
    if depletion_volume is not None:
        d["depletion_volume"] = depletion_volume
    return d


def build(p):
    meshes = []
    # 3U structure, 2 mm aluminium skin with the payload optical port on +x.
    meshes += hollow_box("skin", [0, 0, 0], [5, 5, 17], 0.2, "Al6061",
                         hole=("+x", (0.0, p["port_z"]), (p["port_half_y"], p["port_half_z"])))

    apd2 = [3.0, 1.8, p["port_z"]]
    apd1 = [3.0, -1.8, p["port_z"]]
    # APD2: 1 mm Ti compartment, open optical aperture toward the port.
    meshes += hollow_box("apd2_case", apd2, [0.75] * 3, 0.1, "Ti6Al4V",
                         hole=("+x", (apd2[1], apd2[2]), (p["apd2_aperture"],) * 2))
    # APD1: 4 mm Ti compartment on a 1.6 mm FR4 board, narrow aperture.
    meshes += hollow_box("apd1_case", apd1, [1.0] * 3, 0.4, "Ti6Al4V",
                         hole=("+x", (apd1[1], apd1[2]), (p["apd1_aperture"],) * 2))
    meshes.append(box("apd1_board", [apd1[0] - 1.5, apd1[1] - 1.5, apd1[2] - 1.16],
                      [apd1[0] + 1.5, apd1[1] + 1.5, apd1[2] - 1.0], "FR4"))
    # Payload mass next to APD1 (laser and driver block) and optical bench.
    meshes.append(box("pump_block", [-4.0, -4.6, p["port_z"] - 1.8],
                      [1.6, -0.6, p["port_z"] + 2.0], "Al6061"))
    meshes.append(box("bench_mount", [-4.8, -4.8, p["port_z"] - 2.6],
                      [4.8, 4.8, p["port_z"] - 2.3], "SS304"))
    meshes.append(box("optical_bench", [-4.8, -4.8, p["port_z"] - 2.3],
                      [4.8, 4.8, p["port_z"] - 1.8], "Al6061"))
    # Bus electronics stack.
    for i, z in enumerate([4.0, 0.0, -4.0, -8.0, -12.0]):
        meshes.append(box(f"bus_board_{i}", [-4.6, -4.6, z], [4.6, 4.6, z + 0.16], "FR4"))
    meshes.append(box("battery", [-3.5, -3.5, -7.5], [3.5, 3.5, -4.5], "Al6061"))

    # thin along x, facing the apertures
    half = [p["det_half_thickness"], p["det_half"], p["det_half"]]
    detectors = [
        detector("APD2", apd2, half, depletion_volume=p["depletion_volume"]),
        detector("APD1", apd1, half, depletion_volume=p["depletion_volume"]),
    ]
    return {"units": "cm", "meshes": meshes, "detectors": detectors}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/scenes/spooqy_like.json")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a build parameter")
    args = ap.parse_args()
    params = {
        "port_z": 11.0,
        "port_half_y": 2.6,
        "port_half_z": 1.2,
        "apd2_aperture": 0.11,
        "apd1_aperture": 0.1,
        "det_half": 0.25,
        "det_half_thickness": 0.025,
        "depletion_volume": 2.0e-6,
    }
    for item in args.set:
        key, value = item.split("=", 1)
        if key not in params:
            raise SystemExit(f"unknown parameter {key}")
        params[key] = float(value)
    scene = build(params)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(scene, indent=1) + "\n")


if __name__ == "__main__":
    main()
