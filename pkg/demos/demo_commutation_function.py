#!/usr/bin/env python3
"""Thermal commutation correction from the dense Boltzmann operator.

omega(q, p) compares exp(-beta H_hat) acting on a plane wave against the
classical Boltzmann weight exp(-beta H(q, p)). Kinetic and potential parts
commute for the free particle, so omega = 1 identically; for the harmonic
well the deviation |omega - 1| dies quadratically with beta (the classical
high-temperature limit).
"""
from decoh.core import PhysicalConstants, PotentialSpec, SpatialGrid
from decoh.decoherence import commutation_function

consts = PhysicalConstants()
grid = SpatialGrid(box_length=32.0, n_points=64)

free = PotentialSpec.free()
worst = max(
    abs(commutation_function(grid, free, consts, 0.2, n, qi) - 1.0)
    for n in (0, 3, -7)
    for qi in (0, 21, 48)
)
print(f"free particle: max |omega - 1| over modes and points = {worst:.2e}")

har = PotentialSpec.harmonic(1.0)
print("\nharmonic well at (q, p) = (0, 4 momentum spacings):")
print("  beta     |omega - 1|   ratio to previous")
prev = None
for k in range(5):
    beta = 0.16 * 0.5**k
    dev = abs(commutation_function(grid, har, consts, beta, 4, 32) - 1.0)
    ratio = "" if prev is None else f"{prev / dev:.2f}"
    print(f"  {beta:5.3f}   {dev:.3e}    {ratio}")
    prev = dev
print("  (ratio -> 4 under beta halving: the correction is O(beta^2))")
