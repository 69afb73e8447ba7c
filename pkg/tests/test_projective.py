import math

import numpy as np
import pytest
from scipy import stats

from sphbm.errors import DomainError
from sphbm.projective import (
    ProjectivePoint,
    Quaternion,
    canonicalize,
    field_inner,
    project,
    projective_distance,
    qmul,
    quaternion_inner,
    sample_projective_increment,
    sphere_dimension,
)
from sphbm.rng import RngStream, uniform_sphere


def _unit_scalar(field_tag, rng):
    k = {"R": 1, "C": 2, "H": 4}[field_tag]
    if k == 1:
        return np.array([rng.choice([-1.0, 1.0])])
    v = rng.standard_normal(k)
    return v / np.linalg.norm(v)


def _times_scalar(x, lam, field_tag):
    """Right multiplication x -> x lam, written out independently of the package."""
    k = lam.size
    xs = x.reshape(-1, k)
    if k == 1:
        return (xs * lam).ravel()
    if k == 2:
        z = (xs[:, 0] + 1j * xs[:, 1]) * complex(lam[0], lam[1])
        return np.column_stack([z.real, z.imag]).ravel()
    out = [
        (Quaternion.from_array(row) * Quaternion.from_array(lam)).as_array() for row in xs
    ]
    return np.concatenate(out)


def test_quaternion_algebra():
    i, j, k = Quaternion(0, 1), Quaternion(0, 0, 1), Quaternion(0, 0, 0, 1)
    assert i * j == k
    assert j * i == Quaternion(0, 0, 0, -1)
    assert (i * i).as_array().tolist() == [-1, 0, 0, 0]
    q = Quaternion(1, 2, 3, 4)
    assert (q * q.conj()).w == pytest.approx(abs(q) ** 2)
    assert np.allclose(qmul(q.as_array(), q.conj().as_array()), [30, 0, 0, 0])


def test_sphere_dimension():
    assert sphere_dimension("R", 2) == 3
    assert sphere_dimension("C", 1) == 4
    assert sphere_dimension("H", 2) == 12
    with pytest.raises(DomainError):
        sphere_dimension("Q", 1)
    with pytest.raises(DomainError):
        sphere_dimension("R", 0)


@pytest.mark.parametrize("field_tag,n", [("R", 2), ("C", 1), ("C", 3), ("H", 1), ("H", 2)])
def test_class_invariance(field_tag, n):
    rng = np.random.default_rng(1)
    d = sphere_dimension(field_tag, n)
    for _ in range(50):
        x = uniform_sphere(d, RngStream(int(rng.integers(1 << 30))))
        lam = _unit_scalar(field_tag, rng)
        y = _times_scalar(x, lam, field_tag)
        assert ProjectivePoint(field_tag, n, x) == ProjectivePoint(field_tag, n, y)
        other = uniform_sphere(d, RngStream(int(rng.integers(1 << 30))))
        p, q = project(x, field_tag), project(other, field_tag)
        assert projective_distance(p, q) == pytest.approx(projective_distance(project(y, field_tag), q), abs=1e-12)


def test_canonical_form():
    x = np.array([0.0, 0.0, 0.6, 0.8])  # C^2 coordinates (0, 0.6 + 0.8i)
    rep = canonicalize(x, "C")
    assert np.allclose(rep, [0, 0, 1, 0])
    assert not np.any(np.signbit(canonicalize(np.array([-1.0, 0.0]), "R")))
    with pytest.raises(DomainError):
        canonicalize(np.zeros(4), "C")
    # last nonzero coordinate decides when the trailing one vanishes
    rep = canonicalize(np.array([0.0, 0.6, 0.0, 0.0, -0.8, 0.0, 0.0, 0.0]), "H")
    assert rep[4] > 0 and np.allclose(rep[5:], 0)


def test_inner_products():
    x = uniform_sphere(8, RngStream(2))
    y = uniform_sphere(8, RngStream(3))
    q = quaternion_inner(x, y)
    assert np.allclose(q.as_array(), field_inner(x, y, "H"))
    zx = x[0::2] + 1j * x[1::2]
    zy = y[0::2] + 1j * y[1::2]
    c = np.vdot(zx, zy)
    assert np.allclose(field_inner(x, y, "C"), [c.real, c.imag])
    assert field_inner(x, y, "R")[0] == pytest.approx(x @ y)


def test_distance_range_and_extremes():
    p = project(np.array([1.0, 0.0, 0.0]), "R")
    assert projective_distance(p, p) == 0.0
    q = project(np.array([0.0, 1.0, 0.0]), "R")
    assert projective_distance(p, q) == pytest.approx(math.pi / 2)
    assert projective_distance(p, project(np.array([-1.0, 0.0, 0.0]), "R")) == 0.0
    with pytest.raises(DomainError):
        projective_distance(p, project(np.array([1.0, 0.0, 0.0, 0.0]), "C"))


def test_distance_equals_arccos_of_modulus():
    x = uniform_sphere(8, RngStream(4), 100)
    p = project(x[0], "H")
    reps = canonicalize(x, "H")
    mod = np.linalg.norm(field_inner(p.rep, reps, "H"), axis=-1)
    ok = mod < 0.99  # arccos is ill conditioned near 1
    assert np.allclose(projective_distance(p, reps)[ok], np.arccos(mod[ok]), atol=1e-12)


@pytest.mark.parametrize("field_tag,n", [("R", 2), ("C", 1), ("H", 2)])
def test_sampled_reps_are_canonical_units(field_tag, n):
    d = sphere_dimension(field_tag, n)
    start = ProjectivePoint(field_tag, n, np.eye(d)[-1])
    reps = sample_projective_increment(start, 0.5, RngStream(5), 500)
    assert reps.shape == (500, d)
    assert np.allclose(np.linalg.norm(reps, axis=1), 1.0, atol=1e-12)
    assert np.allclose(canonicalize(reps, field_tag), reps, atol=1e-12)
    one = sample_projective_increment(start, 0.5, RngStream(5))
    assert isinstance(one, ProjectivePoint)


def test_lift_does_not_change_the_law():
    rng = np.random.default_rng(6)
    x = uniform_sphere(4, RngStream(7))
    p = project(x, "C")
    lift = _times_scalar(p.rep, _unit_scalar("C", rng), "C")
    a = projective_distance(p, sample_projective_increment(p, 0.5, RngStream(8), 20_000))
    b = projective_distance(p, sample_projective_increment(p, 0.5, RngStream(9), 20_000, lift=lift))
    assert stats.ks_2samp(a, b).pvalue > 0.001
    with pytest.raises(DomainError):
        sample_projective_increment(p, 0.5, RngStream(0), lift=uniform_sphere(4, RngStream(10)))


def test_long_time_uniformity_on_cp1():
    # CP^1 is the round 2-sphere of radius 1/2: cos(2 dist) is uniform on [-1, 1]
    p = project(np.array([0.0, 0.0, 1.0, 0.0]), "C")
    dist = projective_distance(p, sample_projective_increment(p, 20.0, RngStream(11), 20_000))
    assert stats.kstest(np.cos(2 * dist), stats.uniform(-1, 2).cdf).pvalue > 0.001
