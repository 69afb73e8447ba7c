"""Brownian increments on RP^2, CP^1 and HP^1 via their covering spheres.

Run: python3 demos/projective_spaces.py
"""
import numpy as np

from sphbm import RngStream, project, projective_distance, sample_projective_increment

rng = RngStream(11)
for field, n, start in [("R", 2, [0, 0, 1]), ("C", 1, [0, 0, 1, 0]), ("H", 1, [0, 0, 0, 0, 1, 0, 0, 0])]:
    p = project(np.array(start, dtype=float), field)
    one = sample_projective_increment(p, 0.5, rng)
    batch = sample_projective_increment(p, 0.5, rng, 20_000)
    dist = projective_distance(p, batch)
    print(f"{field}P^{n}: one draw rep={np.round(one.rep, 3)}; "
          f"mean distance from start over 20k draws {dist.mean():.4f}")
