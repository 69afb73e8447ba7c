"""Timing harness for the exact samplers.

Timings are cold: the per-(theta, t) series table is rebuilt for every
repeat, so each per-increment figure includes the cost of tabulating the
lineage-count law, amortised over the batch.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import astuple, dataclass, fields

import numpy as np

from . import wright_fisher as wf
from .rng import RngStream
from .sphere import north_pole, sample_increment
from .validation import euler_maruyama_sphere

__all__ = ["BenchRow", "run_bench", "bench_trends", "rows_to_csv", "NOISE"]

DEFAULT_TS = (0.05, 0.1, 0.5, 1.0, 5.0)
DEFAULT_DS = (3, 10, 100, 1000)
#: Relative timing noise tolerated by the trend checks.
NOISE = 0.5


@dataclass
class BenchRow:
    kind: str
    d: int
    t: float
    n: int
    repeats: int
    seconds_per_increment: float
    wf_seconds_per_increment: float


def _median_time(fn, repeats: int) -> float:
    times = []
    for r in range(repeats):
        wf._table.cache_clear()
        start = time.perf_counter()
        fn(r)
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def run_bench(
    ts=DEFAULT_TS,
    ds=DEFAULT_DS,
    n: int = 2000,
    repeats: int = 5,
    seed: int = 0,
    fixed_d: int = 3,
    fixed_t: float = 1.0,
    em_dt: float | None = 1e-4,
    em_n: int = 200,
) -> list[BenchRow]:
    """Median cold per-increment cost across ``t`` (at ``fixed_d``) and ``d`` (at ``fixed_t``)."""
    rows = []
    for t in ts:
        z = north_pole(fixed_d)
        total = _median_time(lambda r: sample_increment(z, t, RngStream(seed, r), n), repeats)
        rows.append(BenchRow("time", fixed_d, t, n, repeats, total / n, float("nan")))
    for d in ds:
        z = north_pole(d)
        half = 0.5 * (d - 1)
        law = wf.WrightFisherLaw(half, half, 0.0, fixed_t)
        total = _median_time(lambda r: sample_increment(z, fixed_t, RngStream(seed, r), n), repeats)
        share = _median_time(lambda r: wf.sample_wf_components(law, RngStream(seed, r), n), repeats)
        rows.append(BenchRow("dimension", d, fixed_t, n, repeats, total / n, share / n))
    if em_dt is not None:
        z = north_pole(fixed_d)
        em = _median_time(lambda r: euler_maruyama_sphere(z, fixed_t, em_dt, RngStream(seed, r), em_n), 1)
        rows.append(BenchRow(f"euler-maruyama dt={em_dt:g}", fixed_d, fixed_t, em_n, 1, em / em_n, float("nan")))
    return rows


def bench_trends(rows: list[BenchRow], noise: float = NOISE) -> dict[str, bool]:
    """Qualitative checks on a benchmark.

    * ``time_nonincreasing``: each median is at most ``(1 + noise)`` times the
      one at the previous (smaller) ``t``.
    * ``wf_flat_in_d``: the Wright-Fisher share never exceeds ``(1 + noise)``
      times its value at the smallest ``d``.
    * ``total_linear_in_d``: total cost at ``d`` is at most
      ``(1 + noise) * d / d_min`` times the cost at the smallest ``d``.
    """
    by_t = sorted((r for r in rows if r.kind == "time"), key=lambda r: r.t)
    by_d = sorted((r for r in rows if r.kind == "dimension"), key=lambda r: r.d)
    out = {}
    out["time_nonincreasing"] = all(
        b.seconds_per_increment <= (1 + noise) * a.seconds_per_increment for a, b in zip(by_t, by_t[1:])
    )
    if by_d:
        base = by_d[0]
        out["wf_flat_in_d"] = all(
            r.wf_seconds_per_increment <= (1 + noise) * base.wf_seconds_per_increment for r in by_d
        )
        out["total_linear_in_d"] = all(
            r.seconds_per_increment <= (1 + noise) * (r.d / base.d) * base.seconds_per_increment for r in by_d
        )
    return out


def rows_to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in fields(BenchRow)])
    for r in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])
    return buf.getvalue()
