"""Independent oracles and the statistical checks built on them.

The oracles here never call the exact samplers: the sphere and Wright-Fisher
integrators step their SDEs with Gaussian increments, and the lineage-count
oracle lives in :func:`sphbm.wright_fisher.simulate_death_process` and uses
only exponential holding times.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from .errors import DomainError
from .rng import RngStream

__all__ = [
    "StatReport",
    "DegenerateTestError",
    "euler_maruyama_sphere",
    "euler_maruyama_wf",
    "ks_two_sample",
    "ks_one_sample",
    "chi_square_pmf",
    "pool_tail",
    "total_variation",
    "empirical_pmf",
    "z_test_mean",
    "mean_decay_check",
    "rejection_rate",
]

#: Two-sided level matching a |z| < 3 criterion.
THREE_SIGMA_ALPHA = float(2 * stats.norm.sf(3.0))


class DegenerateTestError(DomainError):
    """A goodness-of-fit test has no degrees of freedom left."""


@dataclass
class StatReport:
    """Outcome of one statistical check.

    Hypothesis tests pass when ``p_value > alpha``. Distance checks (total
    variation) set ``threshold`` instead and pass when the statistic is below
    it; their ``p_value`` is ``None``.
    """

    name: str
    statistic: float
    p_value: float | None
    sizes: tuple
    alpha: float = 0.01
    threshold: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.threshold is not None:
            return bool(self.statistic < self.threshold)
        return bool(self.p_value > self.alpha)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["sizes"] = list(self.sizes)
        out["passed"] = self.passed
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.threshold is not None:
            detail = f"stat={self.statistic:.5g} < {self.threshold:g}"
        else:
            detail = f"stat={self.statistic:.5g} p={self.p_value:.4g} (alpha={self.alpha:g})"
        return f"[{status}] {self.name}: {detail}"


def euler_maruyama_sphere(z0, t: float, dt: float, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Integrate ``dZ = (I - Z Z^T) dB - (d-1)/2 Z dt`` with projection to the sphere.

    Each step adds ``(I - Z Z^T) dB - (d-1)/2 Z h`` with ``dB ~ N(0, h I)`` and
    renormalises; the last step covers the remainder ``t - k dt``.
    """
    if not (dt > 0):
        raise DomainError("dt must be positive")
    if not (t > 0):
        raise DomainError("t must be positive")
    if dt > t:
        raise DomainError("dt must not exceed t")
    z = np.array(z0, dtype=float)
    d = z.shape[-1]
    if size is not None:
        z = np.tile(z, (int(size), 1))
    n_full = int(math.floor(t / dt + 1e-9))
    steps = [dt] * n_full
    rest = t - n_full * dt
    if rest > 1e-12 * t:
        steps.append(rest)
    drift = 0.5 * (d - 1)
    gen = rng.generator
    for h in steps:
        db = math.sqrt(h) * gen.standard_normal(z.shape)
        tangential = db - np.sum(z * db, axis=-1, keepdims=True) * z
        z = z + tangential - drift * h * z
        z /= np.linalg.norm(z, axis=-1, keepdims=True)
    return z


def euler_maruyama_wf(
    x: float,
    t: float,
    dt: float,
    theta1: float,
    theta2: float,
    rng: RngStream,
    size: int | None = None,
) -> np.ndarray | float:
    """Integrate ``dW = sqrt(W (1 - W)) dB + (theta1 (1 - W) - theta2 W) / 2 dt``.

    The state is clamped to [0, 1] after every step.
    """
    if not (dt > 0):
        raise DomainError("dt must be positive")
    if not (t > 0) or dt > t:
        raise DomainError("need 0 < dt <= t")
    if not (0 <= x <= 1):
        raise DomainError("x must lie in [0, 1]")
    w = np.full(1 if size is None else int(size), float(x))
    n_full = int(math.floor(t / dt + 1e-9))
    steps = [dt] * n_full
    rest = t - n_full * dt
    if rest > 1e-12 * t:
        steps.append(rest)
    gen = rng.generator
    for h in steps:
        db = math.sqrt(h) * gen.standard_normal(w.shape)
        w = w + np.sqrt(w * (1.0 - w)) * db + 0.5 * (theta1 * (1.0 - w) - theta2 * w) * h
        np.clip(w, 0.0, 1.0, out=w)
    return float(w[0]) if size is None else w


def ks_two_sample(a, b, alpha: float = 0.01, name: str = "ks-two-sample") -> StatReport:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("KS test needs non-empty samples")
    res = stats.ks_2samp(a, b, method="asymp")
    return StatReport(name, float(res.statistic), float(min(max(res.pvalue, 0.0), 1.0)), (a.size, b.size), alpha)


def ks_one_sample(a, cdf: Callable, alpha: float = 0.01, name: str = "ks-one-sample") -> StatReport:
    """One-sample KS test of ``a`` against a vectorised ``cdf``.

    The CDF is evaluated on the sorted sample and must be non-decreasing with
    values in [0, 1] there.
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    n = a.size
    if n == 0:
        raise DomainError("KS test needs a non-empty sample")
    f = np.asarray(cdf(a), dtype=float)
    if np.any((f < -1e-12) | (f > 1 + 1e-12)):
        raise DomainError("cdf values must lie in [0, 1]")
    if np.any(np.diff(f) < -1e-12):
        raise DomainError("cdf is not monotone on the sample")
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(n) / n
    stat = float(max(upper.max(), lower.max()))
    p = float(stats.kstwobign.sf(stat * math.sqrt(n)))
    return StatReport(name, stat, min(max(p, 0.0), 1.0), (n,), alpha)


def pool_tail(expected: np.ndarray, observed: np.ndarray, min_expected: float = 5.0):
    """Merge bins from both ends inward until every expected count is >= ``min_expected``.

    Returns the pooled ``(expected, observed)``.
    """
    exp_bins = [float(v) for v in expected]
    obs_bins = [float(v) for v in observed]
    # right tail
    while len(exp_bins) > 1 and exp_bins[-1] < min_expected:
        e, o = exp_bins.pop(), obs_bins.pop()
        exp_bins[-1] += e
        obs_bins[-1] += o
    # left tail
    while len(exp_bins) > 1 and exp_bins[0] < min_expected:
        e, o = exp_bins.pop(0), obs_bins.pop(0)
        exp_bins[0] += e
        obs_bins[0] += o
    # interior stragglers merge into their right neighbour
    i = 0
    while i < len(exp_bins) - 1:
        if exp_bins[i] < min_expected:
            e, o = exp_bins.pop(i), obs_bins.pop(i)
            exp_bins[i] += e
            obs_bins[i] += o
        else:
            i += 1
    return np.array(exp_bins), np.array(obs_bins)


def chi_square_pmf(counts, pmf, alpha: float = 0.01, name: str = "chi-square") -> StatReport:
    """Pearson chi-square of integer ``counts`` (index = value) against ``pmf``.

    ``pmf`` is an array of probabilities over ``0, 1, ...`` or a callable on
    non-negative integers. Mass beyond the last observed value is folded into
    the last bin before tail pooling; dof = pooled bins - 1.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise DomainError("empty histogram")
    if callable(pmf):
        probs = np.array([float(pmf(m)) for m in range(counts.size)])
    else:
        probs = np.zeros(counts.size)
        p_arr = np.asarray(pmf, dtype=float)
        k = min(p_arr.size, counts.size)
        probs[:k] = p_arr[:k]
        if p_arr.size > counts.size:
            probs[-1] += p_arr[counts.size :].sum()
    probs[-1] += max(0.0, 1.0 - probs.sum())
    expected, observed = pool_tail(total * probs, counts)
    if expected.size < 2:
        raise DegenerateTestError("all mass falls into a single pooled bin")
    stat = float(np.sum((observed - expected) ** 2 / expected))
    p = float(stats.chi2.sf(stat, expected.size - 1))
    return StatReport(name, stat, p, (int(total), int(expected.size)), alpha)


def empirical_pmf(samples, length: int | None = None) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.int64).ravel()
    h = np.bincount(samples, minlength=length or 0).astype(float)
    return h / samples.size


def total_variation(p, q) -> float:
    """Total variation distance between two mass vectors on ``0, 1, ...``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = max(p.size, q.size)
    p = np.pad(p, (0, n - p.size))
    q = np.pad(q, (0, n - q.size))
    return 0.5 * float(np.abs(p - q).sum())


def z_test_mean(samples, target: float, alpha: float = THREE_SIGMA_ALPHA, name: str = "z-test") -> StatReport:
    """Two-sided z-test of the sample mean; the statistic is the z-score."""
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    se = samples.std(ddof=1) / math.sqrt(n) if n > 1 else float("inf")
    if se == 0:
        z = 0.0 if abs(samples.mean() - target) < 1e-12 else float("inf")
    else:
        z = float((samples.mean() - target) / se)
    p = float(2 * stats.norm.sf(abs(z)))
    return StatReport(name, z, p, (n,), alpha, params={"target": target, "mean": float(samples.mean())})


def mean_decay_check(d: int, t: float, n: int, rng: RngStream, alpha: float = THREE_SIGMA_ALPHA, **kwargs) -> StatReport:
    """z-test of ``E<Z_t, z> = exp(-(d-1) t / 2)`` from a random start.

    ``d = 2`` goes through the circle construction. Extra keyword arguments
    (``approx``) are passed to the sampler.
    """
    from .sphere import sample_increment

    if d < 2:
        raise DomainError("d must be >= 2")
    z = rng.generator.standard_normal(d)
    z /= np.linalg.norm(z)
    draw = sample_increment(z, t, rng, n, **kwargs)
    report = z_test_mean(draw.cos_dist, math.exp(-0.5 * (d - 1) * t), alpha, name=f"mean-decay d={d} t={t}")
    report.params.update(d=d, t=t)
    return report


def rejection_rate(test: Callable[[RngStream], StatReport], reps: int, rng: RngStream, alpha: float = 0.05) -> float:
    """Fraction of ``reps`` independent runs of ``test`` whose p-value is <= ``alpha``."""
    rejected = 0
    for child in rng.split(reps):
        rep = test(child)
        rejected += rep.p_value <= alpha
    return rejected / reps


def iter_reports_jsonl(reports: Iterable[StatReport]) -> str:
    return "".join(r.to_json() + "\n" for r in reports)
