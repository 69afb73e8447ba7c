"""The lineage-count law A_inf(t) and the Wright-Fisher transition it drives.

Run: python3 demos/lineage_pmf.py
"""
import numpy as np

from sphbm import (ConvergenceError, DeathProcessLaw, RngStream, WrightFisherLaw, death_pmf_table,
                   sample_ainf, sample_wf_increment, wf_mixture_cdf)
from sphbm.wright_fisher import wf_mean

for t in (5.0, 1.0, 0.1, 0.05):
    q = death_pmf_table(DeathProcessLaw(2.0, t))
    m = np.arange(q.size)
    print(f"theta=2 t={t:<4}: support 0..{q.size - 1}, mean {(m * q).sum():7.3f}, sum {q.sum():.12f}")

# Very small times need more precision than the series allows; the error says so.
try:
    death_pmf_table(DeathProcessLaw(2.0, 0.001))
except ConvergenceError as exc:
    print("t=0.001:", exc)

rng = RngStream(7)
draws = sample_ainf(DeathProcessLaw(2.0, 0.1), rng, 50_000)
print(f"sampled mean of A_inf(0.1): {draws.mean():.3f}")

law = WrightFisherLaw(1.0, 2.0, 0.3, 0.5)
w = sample_wf_increment(law, rng, 100_000)
print(f"WF mean: sampled {w.mean():.4f}, exact {wf_mean(1.0, 2.0, 0.3, 0.5):.4f}")
print(f"P(W <= 0.3): sampled {(w <= 0.3).mean():.4f}, mixture CDF {wf_mixture_cdf(law, 0.3):.4f}")
