"""Named validation checks and the manifest that schedules them.

A manifest is a JSON document::

    {"tests": [
        {"test": "mean-decay", "params": {"d": 3, "t": 1.0},
         "seed": 11, "N": 100000, "alpha": 0.0027},
        ...
    ]}

``alpha`` is optional (default 0.01); distance checks read their threshold
from ``params``. Each entry yields one or more :class:`StatReport` rows.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import stats

from . import validation as V
from .errors import DomainError
from .projective import ProjectivePoint, canonicalize, projective_distance, sample_projective_increment, sphere_dimension
from .rng import RngStream
from .sphere import sample_increment
from .wright_fisher import (
    DeathProcessLaw,
    WrightFisherLaw,
    death_pmf_table,
    sample_ainf,
    sample_ainf_gaussian,
    sample_wf_increment,
    simulate_death_process,
    wf_mixture_cdf,
)

__all__ = ["CHECKS", "ManifestError", "load_manifest", "run_entry", "run_manifest", "default_manifest_path"]

# stream ids: the sampler under test and its oracle never share a stream
_SAMPLER, _ORACLE, _SETUP = 0, 1, 2


class ManifestError(ValueError):
    """The manifest is malformed."""


def _start(d: int, seed: int) -> np.ndarray:
    z = RngStream(seed, _SETUP).generator.standard_normal(d)
    return z / np.linalg.norm(z)


def radial_cos_cdf(d: int, t: float):
    """CDF of ``1 - 2X`` with ``X ~ WF_{0,t}((d-1)/2, (d-1)/2)``."""
    law = WrightFisherLaw(0.5 * (d - 1), 0.5 * (d - 1), 0.0, t)

    def cdf(c):
        c = np.asarray(c, dtype=float)
        return 1.0 - wf_mixture_cdf(law, np.clip(0.5 * (1.0 - c), 0.0, 1.0))

    return cdf


def check_mean_decay(p, seed, n, alpha):
    return [V.mean_decay_check(int(p["d"]), float(p["t"]), n, RngStream(seed, _SAMPLER), alpha,
                               approx=bool(p.get("approx", False)))]


def check_radial_ks(p, seed, n, alpha):
    d, t = int(p["d"]), float(p["t"])
    draw = sample_increment(_start(d, seed), t, RngStream(seed, _SAMPLER), n)
    rep = V.ks_one_sample(draw.cos_dist, radial_cos_cdf(d, t), alpha, name=f"radial-ks d={d} t={t}")
    rep.params.update(d=d, t=t)
    return [rep]


def check_em_sphere_ks(p, seed, n, alpha):
    d, t, dt = int(p["d"]), float(p["t"]), float(p.get("dt", 1e-4))
    z = _start(d, seed)
    exact = sample_increment(z, t, RngStream(seed, _SAMPLER), n).cos_dist
    em = V.euler_maruyama_sphere(z, t, dt, RngStream(seed, _ORACLE), n) @ z
    rep = V.ks_two_sample(exact, em, alpha, name=f"em-sphere-ks d={d} t={t} dt={dt:g}")
    rep.params.update(d=d, t=t, dt=dt)
    return [rep]


def check_death_tv(p, seed, n, alpha):
    theta, t = float(p["theta"]), float(p["t"])
    lineages = int(p.get("n", 1000))
    entrance = bool(p.get("entrance", True))
    threshold = float(p.get("threshold", 0.01))
    q = death_pmf_table(DeathProcessLaw(theta, t))
    sim = simulate_death_process(lineages, theta, t, RngStream(seed, _ORACLE), n, entrance=entrance)
    tv = V.total_variation(q, V.empirical_pmf(sim))
    return [V.StatReport(f"death-tv theta={theta:g} t={t:g}", tv, None, (n,), alpha, threshold,
                         {"theta": theta, "t": t, "n": lineages, "entrance": entrance})]


def check_gaussian_tv(p, seed, n, alpha):
    theta, t = float(p["theta"]), float(p["t"])
    lineages = int(p.get("n", 2000))
    threshold = float(p.get("threshold", 0.05))
    law = DeathProcessLaw(theta, t)
    approx = sample_ainf_gaussian(law, RngStream(seed, _SAMPLER), n)
    sim = simulate_death_process(lineages, theta, t, RngStream(seed, _ORACLE), n,
                                 entrance=bool(p.get("entrance", True)))
    tv = V.total_variation(V.empirical_pmf(approx), V.empirical_pmf(sim))
    return [V.StatReport(f"gaussian-tv theta={theta:g} t={t:g}", tv, None, (n, n), alpha, threshold,
                         {"theta": theta, "t": t, "n": lineages})]


def check_series_regime(p, seed, n, alpha):
    theta, t = float(p["theta"]), float(p["t"])
    q = death_pmf_table(DeathProcessLaw(theta, t))
    err = abs(float(q.sum()) - 1.0)
    return [V.StatReport(f"series-regime theta={theta:g} t={t:g}", err, None, (q.size,), alpha,
                         float(p.get("threshold", 1e-8)), {"theta": theta, "t": t})]


def check_ainf_chi2(p, seed, n, alpha):
    theta, t = float(p["theta"]), float(p["t"])
    law = DeathProcessLaw(theta, t)
    draws = sample_ainf(law, RngStream(seed, _SAMPLER), n)
    q = death_pmf_table(law)
    name = f"ainf-chi2 theta={theta:g} t={t:g}"
    try:
        rep = V.chi_square_pmf(np.bincount(draws), q, alpha, name=name)
    except V.DegenerateTestError:
        # nearly all mass on the mode: exact binomial test on the off-mode count
        mode = int(np.argmax(q))
        off = int(np.count_nonzero(draws != mode))
        res = stats.binomtest(off, n, max(0.0, 1.0 - float(q[mode])))
        rep = V.StatReport(name + " (binomial)", float(off), float(res.pvalue), (n,), alpha)
    rep.params.update(theta=theta, t=t)
    return [rep]


def check_stationarity(p, seed, n, alpha):
    d, t = int(p["d"]), float(p.get("t", 10.0))
    draw = sample_increment(_start(d, seed), t, RngStream(seed, _SAMPLER), n)
    a = 0.5 * (d - 1)
    # 1 - 2X against 1 - 2B, B ~ Beta(a, a)
    rep = V.ks_one_sample(1.0 - 2.0 * np.asarray(draw.radial),
                          lambda c: stats.beta.sf(0.5 * (1.0 - c), a, a), alpha,
                          name=f"stationarity d={d} t={t:g}")
    rep.params.update(d=d, t=t)
    return [rep]


def check_projective_em(p, seed, n, alpha):
    field_tag, m, t = str(p["field"]), int(p["n"]), float(p["t"])
    dt = float(p.get("dt", 1e-4))
    d = sphere_dimension(field_tag, m)
    start = ProjectivePoint(field_tag, m, _start(d, seed))
    exact = sample_projective_increment(start, t, RngStream(seed, _SAMPLER), n)
    em = V.euler_maruyama_sphere(start.rep, t, dt, RngStream(seed, _ORACLE), n)
    rep = V.ks_two_sample(projective_distance(start, exact),
                          projective_distance(start, canonicalize(em, field_tag)), alpha,
                          name=f"projective-em {field_tag}P^{m} t={t:g}")
    rep.params.update(field=field_tag, n=m, t=t, dt=dt)
    return [rep]


def check_wf_em_ks(p, seed, n, alpha):
    th1, th2 = float(p["theta1"]), float(p["theta2"])
    x, t, dt = float(p["x"]), float(p["t"]), float(p.get("dt", 1e-5))
    exact = sample_wf_increment(WrightFisherLaw(th1, th2, x, t), RngStream(seed, _SAMPLER), n)
    em = V.euler_maruyama_wf(x, t, dt, th1, th2, RngStream(seed, _ORACLE), n)
    rep = V.ks_two_sample(exact, em, alpha, name=f"wf-em-ks theta=({th1:g},{th2:g}) x={x:g} t={t:g}")
    rep.params.update(theta1=th1, theta2=th2, x=x, t=t, dt=dt)
    return [rep]


CHECKS: dict[str, Callable] = {
    "mean-decay": check_mean_decay,
    "radial-ks": check_radial_ks,
    "em-sphere-ks": check_em_sphere_ks,
    "death-tv": check_death_tv,
    "gaussian-tv": check_gaussian_tv,
    "series-regime": check_series_regime,
    "ainf-chi2": check_ainf_chi2,
    "stationarity": check_stationarity,
    "projective-em": check_projective_em,
    "wf-em-ks": check_wf_em_ks,
}


def default_manifest_path() -> Path:
    return Path(str(resources.files("sphbm") / "data" / "default_manifest.json"))


def load_manifest(path) -> list[dict]:
    """Parse and validate a manifest file into a list of entries."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("tests"), list):
        raise ManifestError("manifest must be an object with a 'tests' list")
    entries = []
    for i, entry in enumerate(doc["tests"]):
        if not isinstance(entry, dict):
            raise ManifestError(f"entry {i} is not an object")
        name = entry.get("test")
        if name not in CHECKS:
            raise ManifestError(f"entry {i}: unknown test {name!r}")
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ManifestError(f"entry {i}: params must be an object")
        try:
            seed = int(entry["seed"])
            n = int(entry["N"])
            alpha = float(entry.get("alpha", 0.01))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"entry {i}: needs integer 'seed' and 'N' ({exc})") from exc
        if n < 1 or not (0 < alpha < 1):
            raise ManifestError(f"entry {i}: N must be >= 1 and alpha in (0, 1)")
        entries.append({"test": name, "params": params, "seed": seed, "N": n, "alpha": alpha})
    return entries


def run_entry(entry: dict) -> list[V.StatReport]:
    try:
        return CHECKS[entry["test"]](entry["params"], entry["seed"], entry["N"], entry["alpha"])
    except KeyError as exc:
        raise ManifestError(f"test {entry['test']!r} is missing parameter {exc}") from exc
    except DomainError as exc:
        raise ManifestError(f"test {entry['test']!r}: {exc}") from exc


def run_manifest(entries: list[dict], only: str | None = None, log=None) -> list[V.StatReport]:
    reports = []
    for entry in entries:
        if only is not None and entry["test"] != only:
            continue
        for rep in run_entry(entry):
            if log is not None:
                log(rep.line())
            reports.append(rep)
    return reports

