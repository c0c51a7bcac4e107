#!/usr/bin/env python3
"""Writes a decaying-altitude orbit profile: slow decline, then a steeper
drop after the break day."""
import argparse

p = argparse.ArgumentParser()
p.add_argument("--out", default="data/orbit/spooqy_like_altitude.csv")
p.add_argument("--start-km", type=float, default=410.0)
p.add_argument("--break-day", type=float, default=475.0)
p.add_argument("--end-day", type=float, default=725.0)
p.add_argument("--step", type=float, default=25.0)
args = p.parse_args()


def altitude(d):
    early = args.start_km - 0.08 * d - 4e-5 * d * d
    if d <= args.break_day:
        return early
    b = args.break_day
    at_break = args.start_km - 0.08 * b - 4e-5 * b * b
    slope = -0.08 - 8e-5 * b - 0.35
    return at_break + slope * (d - b)


with open(args.out, "w") as f:
    f.write("# synthetic: generated by tools/gen_orbit.py\n")
    f.write("day, altitude_km\n")
    d = 0.0
    while d <= args.end_day + 1e-9:
        f.write(f"{d:g}, {altitude(d):.3f}\n")
        d += args.step
