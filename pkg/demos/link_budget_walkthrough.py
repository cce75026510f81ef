"""Link budget of a GEO-to-ground optical link.

Prints the itemized ledger at zenith, then the margin as the ground
station sees the satellite lower in the sky, and how many photons per bit
the receiver could need before the link stops closing.
"""

from __future__ import annotations

import math

from lasercom_twin import link_budget as lb

GEO_RANGE = 35786e3

tx = lb.Terminal()
rx = lb.Terminal()
receiver = lb.ReceiverSpec()
channel = lb.ChannelConfig(zenith_loss_db=1.0)

report = lb.evaluate(tx, rx, receiver, channel, GEO_RANGE, math.pi / 2, crosses_atmosphere=True)
print("GEO link at zenith, 2 W, 10 Gbit/s at 1000 photons/bit")
print(report.format())

print("\nmargin vs elevation (range grows as the satellite sinks)")
for deg in (90, 60, 30, 15, 10, 5, 4):
    el = math.radians(deg)
    # slant range from a sea-level site to GEO altitude
    re = 6371e3
    s = math.sin(el)
    rng = -re * s + math.sqrt((re * s) ** 2 + GEO_RANGE**2 + 2 * re * GEO_RANGE)
    r = lb.evaluate(tx, rx, receiver, channel, rng, el, True)
    shown = f"{r.margin_db:+8.2f} dB" if r.available else f"unavailable ({r.reason})"
    print(f"  {deg:3d} deg  range {rng / 1e3:9.1f} km  {shown}")

print("\nrequired photons per bit for zero margin at zenith:")
base = lb.evaluate(tx, rx, lb.ReceiverSpec(photons_per_bit=1.0), channel, GEO_RANGE, math.pi / 2, True)
print(f"  {10 ** (base.margin_db / 10):.1f} photons/bit at 10 Gbit/s")
