"""Exact sampling from Wright-Fisher transition laws.

The transition law ``WF_{x,t}(theta1, theta2)`` is a Beta mixture driven by the
number of surviving lineages ``A_inf(t)`` of a pure death process entered from
infinity, in which state ``m`` dies at rate ``m (m + theta - 1) / 2`` with
``theta = theta1 + theta2``. The mass function of ``A_inf(t)`` is the
alternating series

    q_m(t) = sum_{k >= m} (-1)**(k - m) b_k(m)

    b_k(m) = (theta + 2k - 1) Gamma(theta + m + k - 1)
             / (Gamma(theta + m) m! (k - m)!) * exp(-k (k + theta - 1) t / 2)

whose terms decrease monotonically in ``k`` after a finite index, so any two
consecutive partial sums past that index bracket ``q_m(t)``. Sampling inverts
one uniform against the resulting lower/upper CDF envelopes, refining them
only where the uniform is not yet separated from a boundary.

For small ``t`` the terms grow huge before they decay and the sum cancels
catastrophically; partial sums are therefore accumulated in ``mpmath`` at a
precision chosen from the largest term.
"""
from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError, RegimeError
from .rng import RngStream, beta_sample, binomial_sample, standard_normal, uniform

__all__ = [
    "EXACT_FLOOR",
    "TERM_CAP",
    "WrightFisherLaw",
    "DeathProcessLaw",
    "WFComponents",
    "death_pmf",
    "death_pmf_table",
    "death_tail_index",
    "sample_ainf",
    "sample_ainf_gaussian",
    "gaussian_ainf_params",
    "simulate_death_process",
    "entrance_time_moments",
    "sample_wf_components",
    "sample_wf_increment",
    "wf_mixture_cdf",
    "wf_mean",
    "write_pmf_csv",
]

#: Smallest time horizon for which the exact series sampler is used by default.
EXACT_FLOOR = 0.05
#: Maximum number of series terms evaluated for a single mass point.
TERM_CAP = 100_000
#: Maximum working precision (decimal digits) before giving up on a series.
MAX_DIGITS = 200

# Series terms are accumulated until they fall below this fraction of the
# running sum. Much finer than double precision so that the sampler's
# envelopes can always be refined past any realisable uniform.
_ENVELOPE_RTOL = 1e-20
# Extra digits carried beyond the magnitude of the largest term.
_GUARD_DIGITS = 40
# Upper-tail mass ignored when sizing PMF tables.
_TAIL_EPS = 1e-18


@dataclass(frozen=True)
class WrightFisherLaw:
    """Parameters of the transition law ``WF_{x,t}(theta1, theta2)``."""

    theta1: float
    theta2: float
    x: float
    t: float

    def __post_init__(self):
        if not (self.theta1 >= 0 and self.theta2 >= 0):
            raise DomainError("mutation parameters must be non-negative")
        if not (0.0 <= self.x <= 1.0):
            raise DomainError(f"starting point x must lie in [0, 1], got {self.x}")
        if not (self.t > 0):
            raise DomainError(f"time horizon must be positive, got {self.t}")

    @property
    def theta(self) -> float:
        return self.theta1 + self.theta2

    def death_law(self) -> "DeathProcessLaw":
        return DeathProcessLaw(self.theta, self.t)


@dataclass(frozen=True)
class DeathProcessLaw:
    """Law of ``A_inf(t)`` for total mutation rate ``theta``.

    ``tolerance`` is the relative stopping threshold used by :func:`death_pmf`.
    """

    theta: float
    t: float
    tolerance: float = 1e-12

    def __post_init__(self):
        if not (self.theta >= 0):
            raise DomainError(f"theta must be non-negative, got {self.theta}")
        if not (self.t > 0):
            raise DomainError(f"time horizon must be positive, got {self.t}")
        if not (self.tolerance > 0):
            raise DomainError("tolerance must be positive")


def _rate_inverse_tail(theta: float, m: int) -> float:
    """``sum_{j > m} 2 / (j (j + theta - 1))``."""
    if abs(theta - 1.0) < 1e-12:
        return 2.0 * float(special.polygamma(1, m + 1))
    return 2.0 / (theta - 1.0) * float(special.digamma(m + theta) - special.digamma(m + 1))


def death_tail_index(theta: float, t: float, eps: float = _TAIL_EPS) -> int:
    """Smallest ``M`` with a rigorous bound ``P(A_inf(t) > M) <= eps``.

    ``A_inf(t) > M`` means the passage time from infinity down to ``M`` exceeds
    ``t``. That time is a sum of independent exponentials with rates
    ``lam_j = j (j + theta - 1) / 2``, ``j > M``; a Chernoff bound with
    ``s = lam_{M+1} / 2`` and ``-log(1 - u) <= 2u`` for ``u <= 1/2`` gives
    ``log P <= -s t + 2 s sum_{j>M} 1/lam_j``.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    log_eps = math.log(eps)
    m = 1 if theta < 1e-300 else 0
    while True:
        lam = 0.5 * (m + 1) * (m + theta)
        if lam > 0:
            s = 0.5 * lam
            bound = -s * t + 2.0 * s * _rate_inverse_tail(theta, m)
            if bound <= log_eps:
                return m
        m = m + 1 if m < 64 else int(m * 1.25)


class _MassSeries:
    """Partial sums of the alternating series for one mass point ``q_m``.

    ``sums[j]`` is the sum of the first ``j + 1`` terms; for every
    ``j >= start`` the pair ``sums[j], sums[j + 1]`` brackets ``q_m``.
    """

    __slots__ = ("m", "sums", "terms", "start", "precision_floor")

    def __init__(self, m, sums, terms, start, precision_floor):
        self.m = m
        self.sums = sums
        self.terms = terms
        self.start = start
        self.precision_floor = precision_floor

    @property
    def n_levels(self) -> int:
        return len(self.sums) - 1 - self.start

    def bracket(self, level: int) -> tuple[float, float]:
        j = self.start + min(level, self.n_levels - 1)
        a, b = self.sums[j], self.sums[j + 1]
        lo, hi = (a, b) if a <= b else (b, a)
        return max(lo, 0.0), min(hi, 1.0)

    def value(self, rtol: float) -> float:
        """First bracketing partial sum whose next term is below ``rtol`` of it."""
        for j in range(self.start, len(self.terms) - 1):
            nxt = self.terms[j + 1]
            s = self.sums[j]
            if nxt <= rtol * abs(s) or nxt <= self.precision_floor:
                return min(max(s, 0.0), 1.0)
        return min(max(self.sums[-1], 0.0), 1.0)


def _log10_max_term(theta: float, t: float, m: int) -> float:
    """Float estimate of ``log10 max_k b_k(m)``."""
    if theta + m == 0:
        # b_0 = b_1 = 1 by continuity and 1 / Gamma(0) kills every later term
        return 0.0
    # b_0(0) = 1; start the scan at k = 1 to avoid the removable 0 * Gamma(0)
    k = np.arange(max(m, 1), max(m, 1) + 64, dtype=float)
    best = 0.0 if m == 0 else -np.inf
    while True:
        with np.errstate(divide="ignore", invalid="ignore"):
            lb = (
                np.log(np.abs(theta + 2 * k - 1) + (theta + 2 * k - 1 == 0))
                + special.gammaln(np.maximum(theta + m + k - 1, 1e-300))
                - special.gammaln(theta + m if theta + m > 0 else 1.0)
                - special.gammaln(m + 1)
                - special.gammaln(k - m + 1)
                - k * (k + theta - 1) * t / 2
            )
        lb = lb[np.isfinite(lb)]
        if lb.size:
            best = max(best, float(lb.max()))
        # past the peak once the tail is decreasing and far below it
        if lb.size and lb[-1] < best - 120 and lb[-1] < lb[0]:
            break
        if k[-1] - m > TERM_CAP:
            raise ConvergenceError(
                f"series for q_{m}(t={t}) did not enter its decreasing regime within {TERM_CAP} terms"
            )
        k = k + 64
    return best / math.log(10)


def _compute_mass_series(theta: float, t: float, m: int) -> _MassSeries:
    peak = _log10_max_term(theta, t, m)
    digits = max(30, int(math.ceil(max(peak, 0.0))) + _GUARD_DIGITS)
    if digits > MAX_DIGITS:
        raise ConvergenceError(
            f"q_{m}(t={t}, theta={theta}) needs ~{digits} digits of working precision; "
            "use the Gaussian approximation for this time horizon"
        )
    # absolute resolution of the cancelling sum
    precision_floor = 10.0 ** (max(peak, 0.0) - digits + 10)
    ctx = mpmath.MPContext()
    ctx.dps = digits
    th = ctx.mpf(theta)
    tt = ctx.mpf(t)
    if m == 0:
        b = ctx.mpf(1)
    else:
        b = ctx.exp(
            ctx.loggamma(th + 2 * m)
            - ctx.loggamma(th + m)
            - ctx.loggamma(m + 1)
            - m * (m + th - 1) * tt / 2
        )
    s = ctx.mpf(0)
    sums: list[float] = []
    terms: list[float] = []
    k = m
    sign = 1
    last_rise = 0  # index j such that terms[j] >= terms[j - 1]
    while True:
        s += sign * b
        sums.append(float(s))
        terms.append(float(b))
        j = len(terms) - 1
        if j > 0 and terms[j] >= terms[j - 1] and terms[j] > 0:
            last_rise = j
        done = j > last_rise + 1 and (
            terms[j] <= _ENVELOPE_RTOL * abs(float(s)) or terms[j] < precision_floor * 1e-10
        )
        if done or b == 0:
            # ensure one more bracketing partial sum exists
            if j >= last_rise + 1:
                break
        if j >= TERM_CAP:
            raise ConvergenceError(f"series for q_{m}(t={t}) exceeded {TERM_CAP} terms")
        if k == 0:
            ratio = (th + 1) * ctx.exp(-th * tt / 2)
        else:
            ratio = (
                (th + 2 * k + 1) * (th + m + k - 1)
                / ((th + 2 * k - 1) * (k + 1 - m))
                * ctx.exp(-(2 * k + th) * tt / 2)
            )
        b *= ratio
        k += 1
        sign = -sign
    # terms[start:] must be non-increasing for the bracketing argument
    start = last_rise
    if start >= len(sums) - 1:
        start = len(sums) - 2
    return _MassSeries(m, np.array(sums), np.array(terms), max(start, 0), precision_floor)


class _DeathSeriesTable:
    """Lazily grown per-(theta, t) table of mass-point series."""

    def __init__(self, theta: float, t: float):
        self.theta = float(theta)
        self.t = float(t)
        self._lock = threading.Lock()
        self._series: list[_MassSeries] = []
        self.tail_index = death_tail_index(self.theta, self.t)
        # the largest terms occur near the bulk of the law, around m = 2 / t;
        # fail before tabulating anything if they need too much precision
        probe = min(self.tail_index, int(round(2.0 / self.t)))
        needed = _log10_max_term(self.theta, self.t, probe) + _GUARD_DIGITS
        if needed > MAX_DIGITS:
            raise ConvergenceError(
                f"A_inf(t={t}) series needs ~{needed:.0f} digits of working precision "
                f"(limit {MAX_DIGITS}); use the Gaussian approximation for this time horizon"
            )

    def ensure(self, m_max: int) -> list[_MassSeries]:
        with self._lock:
            while len(self._series) <= m_max:
                self._series.append(_compute_mass_series(self.theta, self.t, len(self._series)))
            return self._series

    def series(self, m: int) -> _MassSeries:
        return self.ensure(m)[m]

    def envelopes(self, level: int, m_max: int) -> tuple[np.ndarray, np.ndarray]:
        """Lower and upper CDF envelopes over ``0..m_max`` at refinement ``level``."""
        series = self.ensure(m_max)[: m_max + 1]
        lo = np.empty(m_max + 1)
        hi = np.empty(m_max + 1)
        for i, s in enumerate(series):
            lo[i], hi[i] = s.bracket(level)
        return np.cumsum(lo), np.minimum(np.cumsum(hi), 1.0)

    def max_levels(self, m_max: int) -> int:
        return max(s.n_levels for s in self.ensure(m_max)[: m_max + 1])


@lru_cache(maxsize=256)
def _table(theta: float, t: float) -> _DeathSeriesTable:
    return _DeathSeriesTable(theta, t)


def death_pmf(law: DeathProcessLaw, m: int) -> float:
    """``P(A_inf(t) = m)`` from the alternating series.

    Summation stops at the first partial sum past the monotone regime whose
    next term is below ``law.tolerance`` relative to it (or below the
    absolute resolution of the working precision).
    """
    if m < 0:
        raise DomainError("m must be non-negative")
    return _table(law.theta, law.t).series(int(m)).value(law.tolerance)


def death_pmf_table(law: DeathProcessLaw, m_max: int | None = None) -> np.ndarray:
    """Vector ``[q_0, ..., q_M]``; by default ``M`` is the rigorous tail index."""
    table = _table(law.theta, law.t)
    if m_max is None:
        m_max = table.tail_index
    return np.array([s.value(law.tolerance) for s in table.ensure(m_max)[: m_max + 1]])


def _check_regime(t: float, approx: bool, exact_floor: float):
    if not approx and t < exact_floor:
        raise RegimeError(
            f"t={t} is below the exact-regime floor {exact_floor}; "
            "pass approx=True for the Gaussian approximation"
        )


def sample_ainf(law: DeathProcessLaw, rng: RngStream, size=None, *, exact_floor: float = EXACT_FLOOR):
    """Exact draws of ``A_inf(t)`` by inversion on refining CDF envelopes.

    One uniform per draw. The envelopes are refined, two partial sums at a
    time, only until the uniform falls strictly between the lower envelope at
    ``M`` and the upper envelope at ``M - 1``; the returned value is then
    ``M`` regardless of how many further terms would be added.
    """
    if law.t < exact_floor:
        raise RegimeError(
            f"t={law.t} is below the exact-regime floor {exact_floor}; "
            "use sample_ainf_gaussian or lower exact_floor explicitly"
        )
    table = _table(law.theta, law.t)
    u = np.atleast_1d(uniform(rng, size))
    out = np.full(u.shape, -1, dtype=np.int64)
    pending = np.arange(u.size)
    m_max = table.tail_index
    level = 0
    max_level = table.max_levels(m_max)
    while pending.size:
        lower, upper = table.envelopes(level, m_max)
        uu = u.flat[pending]
        hi_idx = np.searchsorted(lower, uu, side="right")
        lo_idx = np.searchsorted(upper, uu, side="right")
        done = (hi_idx == lo_idx) & (hi_idx <= m_max)
        out.flat[pending[done]] = hi_idx[done]
        pending = pending[~done]
        if not pending.size:
            break
        if level >= max_level:
            if np.any(hi_idx[~done] > m_max):
                # uniform beyond the fully refined envelope: tabulate more mass points
                if m_max > 10 * table.tail_index + 1000:
                    raise ConvergenceError("CDF envelope failed to exceed the uniform draw")
                m_max = 2 * m_max + 1
                max_level = table.max_levels(m_max)
                continue
            raise ConvergenceError("envelope refinement exhausted the series terms")
        level = min(max_level, max(1, 2 * level))
    if size is None:
        return int(out[0])
    return out.reshape(u.shape)


def gaussian_ainf_params(theta: float, t: float) -> tuple[float, float]:
    """Mean and variance of the small-time normal approximation to ``A_inf(t)``.

    With ``beta = (theta - 1) t / 2`` and ``eta = beta / (exp(beta) - 1)``:
    mean ``2 eta / t`` and variance
    ``2 eta / t * (eta + beta)**2 * (1 + eta / (eta + beta) - 2 eta) / beta**2``,
    whose ``beta -> 0`` limit is ``2 / (3 t)``.
    """
    if t <= 0:
        raise DomainError("t must be positive")
    beta = 0.5 * (theta - 1.0) * t
    if abs(beta) < 1e-2:
        # the closed form cancels to O(beta^2) here; use the expansion
        b2 = beta * beta
        eta = 1.0 - beta / 2 + b2 * (1.0 / 12 - b2 / 720 + b2 * b2 / 30240)
        mean = 2.0 * eta / t
        var = 2.0 / (3.0 * t) * (1.0 - b2 * (7.0 / 60 - 41.0 * b2 / 5040 + 67.0 * b2 * b2 / 151200))
        return mean, var
    eta = beta / math.expm1(beta)
    mean = 2.0 * eta / t
    var = 2.0 * eta / t * (eta + beta) ** 2 * (1.0 + eta / (eta + beta) - 2.0 * eta) / beta**2
    return mean, var


def sample_ainf_gaussian(law: DeathProcessLaw, rng: RngStream, size=None):
    """Approximate draws of ``A_inf(t)``: a rounded normal, clamped at zero."""
    mean, var = gaussian_ainf_params(law.theta, law.t)
    z = standard_normal(rng, size)
    draw = np.maximum(np.rint(mean + math.sqrt(var) * np.asarray(z)), 0).astype(np.int64)
    return int(draw) if size is None else draw


def entrance_time_moments(n: int, theta: float) -> tuple[float, float]:
    """Mean and variance of the passage time of ``A_inf`` from infinity down to ``n``.

    The passage time is ``sum_{j > n} Exp(lam_j)`` with ``lam_j = j (j + theta - 1) / 2``.
    """
    mean = _rate_inverse_tail(theta, n)
    j = np.arange(n + 1, n + 200_001, dtype=float)
    lam = 0.5 * j * (j + theta - 1.0)
    var = float(np.sum(1.0 / lam**2)) + 4.0 / (3.0 * (n + 200_000) ** 3)
    return mean, var


def simulate_death_process(
    n: int,
    theta: float,
    t: float,
    rng: RngStream,
    size=None,
    *,
    entrance: bool = False,
    chunk: int = 4096,
):
    """Monte Carlo ``A_n(t)``: the death chain started at ``n`` and run for time ``t``.

    Holding time at state ``m`` is exponential with rate ``m (m + theta - 1) / 2``;
    a zero rate (``m = 1``, ``theta = 0``) never jumps. Only standard
    exponential (and, with ``entrance``, standard normal) draws are used, so
    this is independent of the series machinery.

    ``A_n(t)`` is stochastically smaller than ``A_inf(t)``: starting from
    ``n`` instead of infinity amounts to a head start of about ``2 / n`` in
    time. With ``entrance=True`` the chain is instead started at ``n`` after
    the passage time from infinity, drawn as a normal matched to its mean and
    variance (its standard deviation is ``O(n**-1.5)``), which removes that
    bias and targets ``A_inf(t)`` directly.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if theta < 0 or t <= 0:
        raise DomainError("need theta >= 0 and t > 0")
    states = np.arange(n, 0, -1, dtype=float)
    rates = 0.5 * states * (states + theta - 1.0)
    inv_rates = np.where(rates > 0, 1.0 / np.where(rates > 0, rates, 1.0), np.inf)
    total = 1 if size is None else int(np.prod(size))
    if entrance:
        mu, var = entrance_time_moments(n, theta)
        offset = np.maximum(mu + math.sqrt(var) * rng.generator.standard_normal(total), 0.0)
        horizon = t - offset
    else:
        horizon = np.full(total, float(t))
    out = np.empty(total, dtype=np.int64)
    for start in range(0, total, chunk):
        rows = min(chunk, total - start)
        holding = rng.generator.standard_exponential((rows, n)) * inv_rates
        deaths = np.cumsum(holding, axis=1) <= horizon[start : start + rows, None]
        out[start : start + rows] = n - deaths.sum(axis=1)
    if size is None:
        return int(out[0])
    return out.reshape(size)


@dataclass(frozen=True)
class WFComponents:
    """Internal draws of the mixture sampler: lineages ``M``, successes ``L``, value ``Y``."""

    lineages: np.ndarray
    successes: np.ndarray
    value: np.ndarray


def _check_wf(law: WrightFisherLaw):
    if law.theta1 == 0 and law.x == 0.0 or law.theta2 == 0 and law.x == 1.0:
        raise DomainError("absorbing boundary with zero mutation is not supported")
    if law.theta1 <= 0 or law.theta2 <= 0:
        raise DomainError("both mutation parameters must be positive")


def sample_wf_components(
    law: WrightFisherLaw,
    rng: RngStream,
    size=None,
    *,
    approx: bool = False,
    exact_floor: float = EXACT_FLOOR,
) -> WFComponents:
    """Draw ``M ~ A_inf(t)``, ``L ~ Binomial(M, x)``, ``Y ~ Beta(theta1 + L, theta2 + M - L)``.

    ``approx=True`` substitutes the Gaussian approximation for ``M`` when
    ``t`` is below ``exact_floor``; otherwise such ``t`` raise
    :class:`RegimeError`.
    """
    _check_wf(law)
    dlaw = law.death_law()
    if law.t < exact_floor:
        _check_regime(law.t, approx, exact_floor)
        m = sample_ainf_gaussian(dlaw, rng, size)
    else:
        m = sample_ainf(dlaw, rng, size, exact_floor=exact_floor)
    m = np.asarray(m)
    ell = np.asarray(binomial_sample(m, law.x, rng))
    y = np.asarray(beta_sample(law.theta1 + ell, law.theta2 + m - ell, rng))
    return WFComponents(m, ell, y)


def sample_wf_increment(
    law: WrightFisherLaw,
    rng: RngStream,
    size=None,
    *,
    approx: bool = False,
    exact_floor: float = EXACT_FLOOR,
):
    """Draw from ``WF_{x,t}(theta1, theta2)``; returns a float or an array."""
    comp = sample_wf_components(law, rng, size, approx=approx, exact_floor=exact_floor)
    return float(comp.value) if size is None else comp.value


def wf_mean(theta1: float, theta2: float, x: float, t: float) -> float:
    """``E[W_t | W_0 = x]`` from the linear drift ``(theta1 (1-w) - theta2 w) / 2``."""
    theta = theta1 + theta2
    if theta == 0:
        return x
    stat = theta1 / theta
    return stat + (x - stat) * math.exp(-theta * t / 2)


def wf_mixture_cdf(law: WrightFisherLaw, y):
    """CDF of ``WF_{x,t}(theta1, theta2)`` at ``y`` (scalar or array).

    ``sum_m q_m sum_l Binom(l; m, x) I_y(theta1 + l, theta2 + m - l)``, truncated
    at the rigorous tail index of ``A_inf(t)``.
    """
    _check_wf(law)
    y_arr = np.asarray(y, dtype=float)
    if np.any((y_arr < 0) | (y_arr > 1)):
        raise DomainError("y must lie in [0, 1]")
    q = death_pmf_table(law.death_law())
    flat = y_arr.ravel()
    total = np.zeros_like(flat)
    for m, qm in enumerate(q):
        if qm < 1e-18:
            continue
        if law.x == 0.0:
            ells = np.array([0])
            w = np.array([1.0])
        elif law.x == 1.0:
            ells = np.array([m])
            w = np.array([1.0])
        else:
            ells = np.arange(m + 1)
            w = special.comb(m, ells) * law.x**ells * (1 - law.x) ** (m - ells)
            keep = w > 1e-18
            ells, w = ells[keep], w[keep]
        a = law.theta1 + ells
        b = law.theta2 + m - ells
        total += qm * (w[:, None] * special.betainc(a[:, None], b[:, None], flat[None, :])).sum(axis=0)
    total = np.clip(total / q.sum(), 0.0, 1.0)
    total[flat == 0.0] = 0.0
    total[flat == 1.0] = 1.0
    total = total.reshape(y_arr.shape)
    return float(total) if total.ndim == 0 else total


def write_pmf_csv(law: DeathProcessLaw, fh=None, m_max: int | None = None) -> str:
    """Write ``m,q`` rows up to the tail index with 17 significant digits.

    Returns the CSV text; also writes it to ``fh`` when given.
    """
    q = death_pmf_table(law, m_max)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["m", "q"])
    for m, qm in enumerate(q):
        writer.writerow([m, f"{qm:.17g}"])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text
