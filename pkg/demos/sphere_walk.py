"""Exact Brownian motion on S^2: one increment, a path, and the mean decay.

Run: python3 demos/sphere_walk.py
"""
import math

import numpy as np

from sphbm import RngStream, geodesic_distance, north_pole, sample_increment, sample_path

rng = RngStream(2024)
z = north_pole(3)

# A batch of 100k draws of Z_t from the north pole.
t = 0.5
draw = sample_increment(z, t, rng, 100_000)
print(f"t={t}: mean <Z_t, z> = {(draw.point @ z).mean():.4f}, "
      f"expected exp(-(d-1)t/2) = {math.exp(-t):.4f}")

# The radial draw X and tangent direction Y are kept alongside the point.
print(f"first draw X={draw.radial[0]:.4f}, geodesic distance {geodesic_distance(z, draw.point[0]):.4f} rad")

# A single path observed at a few times; exact at every time, no step size.
for p, s in zip(sample_path(z, [0.1, 0.5, 1.0, 5.0], rng), [0.1, 0.5, 1.0, 5.0]):
    print(f"  t={s:<4} point={np.round(p.coords, 4)}")
