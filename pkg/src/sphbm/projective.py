"""Projective spaces over R, C and H, and Brownian motion on them.

A point of ``FP^n`` is stored through a unit representative in
``F^(n+1)``, laid out as a flat real vector: one real per coordinate for R,
``(re, im)`` pairs for C and ``(w, x, y, z)`` quadruples for H, so the
representative is literally a point of ``S^n``, ``S^(2n+1)`` or ``S^(4n+3)``.
Classes are orbits of the right action ``x -> x lam`` by unit scalars; the
canonical representative makes its last nonzero coordinate real and positive.

Brownian motion on ``FP^n`` is the image of spherical Brownian motion under
the quotient map, so an exact increment is the projection of an exact sphere
increment from any representative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .rng import RngStream
from .sphere import sample_increment
from .wright_fisher import EXACT_FLOOR

__all__ = [
    "FIELD_DIM",
    "Quaternion",
    "ProjectivePoint",
    "qmul",
    "qconj",
    "quaternion_inner",
    "field_inner",
    "canonicalize",
    "project",
    "projective_distance",
    "sample_projective_increment",
    "sphere_dimension",
]

#: Real dimension of each field.
FIELD_DIM = {"R": 1, "C": 2, "H": 4}

# Field coordinates with modulus below this fraction of the vector norm are
# treated as zero when choosing the normalising coordinate.
_ZERO_REL = 1e-14


def _field_dim(field_tag: str) -> int:
    try:
        return FIELD_DIM[field_tag]
    except KeyError:
        raise DomainError(f"unknown field {field_tag!r}; expected one of R, C, H") from None


def sphere_dimension(field_tag: str, n: int) -> int:
    """Ambient real dimension ``d`` of the covering sphere ``S^(d-1)`` of ``FP^n``."""
    if n < 1:
        raise DomainError("projective dimension n must be >= 1")
    return _field_dim(field_tag) * (n + 1)


def qmul(p, q) -> np.ndarray:
    """Hamilton product of quaternion arrays with trailing axis ``(w, x, y, z)``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj(p) -> np.ndarray:
    p = np.array(p, dtype=float, copy=True)
    p[..., 1:] *= -1.0
    return p


@dataclass(frozen=True)
class Quaternion:
    """A quaternion ``w + x i + y j + z k``."""

    w: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "Quaternion":
        w, x, y, z = (float(v) for v in a)
        return cls(w, x, y, z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion.from_array(qmul(self.as_array(), other.as_array()))

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __abs__(self) -> float:
        return math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)


def _split(x: np.ndarray, k: int) -> np.ndarray:
    if x.shape[-1] % k:
        raise DomainError(f"length {x.shape[-1]} is not a multiple of the field dimension {k}")
    return x.reshape(x.shape[:-1] + (x.shape[-1] // k, k))


def quaternion_inner(x, y) -> Quaternion | np.ndarray:
    """``sum_i conj(x_i) y_i`` for quaternion vectors in flat layout.

    With the right action, ``|<x, y lam>| = |<x, y>|`` for unit ``lam``.
    Returns a :class:`Quaternion` for single vectors, else an ``(..., 4)`` array.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DomainError("quaternion vectors have different lengths")
    out = qmul(qconj(_split(x, 4)), _split(y, 4)).sum(axis=-2)
    return Quaternion.from_array(out) if out.ndim == 1 else out


def field_inner(x, y, field_tag: str) -> np.ndarray:
    """Field inner product ``sum conj(x_i) y_i`` as a real array of length 1, 2 or 4."""
    k = _field_dim(field_tag)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DomainError("vectors have different lengths")
    if k == 1:
        return np.sum(x * y, axis=-1)[..., None]
    if k == 2:
        xs, ys = _split(x, 2), _split(y, 2)
        re = np.sum(xs[..., 0] * ys[..., 0] + xs[..., 1] * ys[..., 1], axis=-1)
        im = np.sum(xs[..., 0] * ys[..., 1] - xs[..., 1] * ys[..., 0], axis=-1)
        return np.stack([re, im], axis=-1)
    return qmul(qconj(_split(x, 4)), _split(y, 4)).sum(axis=-2)


def _right_multiply(xs: np.ndarray, mu: np.ndarray, k: int) -> np.ndarray:
    """``x_i mu`` for field-split ``xs`` of shape (..., n+1, k) and ``mu`` of shape (..., k)."""
    if k == 1:
        return xs * mu[..., None, :]
    if k == 2:
        a, b = xs[..., 0], xs[..., 1]
        c, d = mu[..., None, 0], mu[..., None, 1]
        return np.stack([a * c - b * d, a * d + b * c], axis=-1)
    return qmul(xs, mu[..., None, :])


def canonicalize(x, field_tag: str) -> np.ndarray:
    """Canonical unit representatives of the classes of the rows of ``x``.

    Each row is multiplied on the right by the unit scalar that makes its last
    nonzero field coordinate real and positive, then normalised.
    """
    k = _field_dim(field_tag)
    x = np.asarray(x, dtype=float)
    xs = _split(x, k)
    mods = np.linalg.norm(xs, axis=-1)
    total = np.linalg.norm(mods, axis=-1)
    if np.any(total == 0):
        raise DomainError("the zero vector has no projective class")
    nonzero = mods > _ZERO_REL * total[..., None]
    last = xs.shape[-2] - 1 - np.argmax(nonzero[..., ::-1], axis=-1)
    pivot = np.take_along_axis(xs, last[..., None, None], axis=-2)[..., 0, :]
    pmod = np.linalg.norm(pivot, axis=-1, keepdims=True)
    mu = pivot / pmod
    if k > 1:
        mu[..., 1:] *= -1.0  # conjugate
    out = _right_multiply(xs, mu, k)
    # the pivot is real positive up to rounding; make it exactly so
    piv = np.take_along_axis(out, last[..., None, None], axis=-2)
    piv[..., 0, 1:] = 0.0
    piv[..., 0, 0] = np.abs(piv[..., 0, 0])
    np.put_along_axis(out, last[..., None, None], piv, axis=-2)
    out = out.reshape(x.shape) / total[..., None]
    return out + 0.0  # no negative zeros


@dataclass(frozen=True)
class ProjectivePoint:
    """The class ``[x]`` in ``FP^n``, held by its canonical unit representative."""

    field: str
    n: int
    rep: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = sphere_dimension(self.field, self.n)
        rep = np.asarray(self.rep, dtype=float).reshape(-1)
        if rep.size != d:
            raise DomainError(f"{self.field}P^{self.n} needs a representative of real length {d}")
        rep = canonicalize(rep, self.field)
        rep.setflags(write=False)
        object.__setattr__(self, "rep", rep)

    @property
    def sphere_dim(self) -> int:
        return self.rep.size

    def __eq__(self, other):
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        return (
            self.field == other.field
            and self.n == other.n
            and np.allclose(self.rep, other.rep, rtol=0.0, atol=1e-12)
        )

    def __hash__(self):
        return hash((self.field, self.n))

    def __repr__(self):
        return f"ProjectivePoint({self.field}P^{self.n}, rep={np.array2string(self.rep, precision=6)})"


def project(x, field_tag: str) -> ProjectivePoint:
    """Quotient map ``x -> [x]`` from ``F^(n+1) \\ {0}`` (flat real layout)."""
    k = _field_dim(field_tag)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size % k or x.size // k < 2:
        raise DomainError(f"need a vector of {k} * (n + 1) reals with n >= 1")
    if not np.any(x):
        raise DomainError("the zero vector has no projective class")
    return ProjectivePoint(field_tag, x.size // k - 1, x)


def _rep_of(p) -> tuple[np.ndarray, str]:
    if isinstance(p, ProjectivePoint):
        return p.rep, p.field
    raise TypeError("expected a ProjectivePoint")


def projective_distance(p: ProjectivePoint, q) -> float | np.ndarray:
    """``arccos |<p, q>_F|``, evaluated as ``atan2`` of the residual off the line ``p F``.

    ``q`` may be a :class:`ProjectivePoint` or an array of unit representatives.
    """
    if isinstance(q, ProjectivePoint):
        if (p.field, p.n) != (q.field, q.n):
            raise DomainError("points live in different projective spaces")
        q_rep = q.rep
    else:
        q_rep = np.asarray(q, dtype=float)
        if q_rep.shape[-1] != p.rep.size:
            raise DomainError("representative length mismatch")
    k = _field_dim(p.field)
    c = field_inner(p.rep, q_rep, p.field)
    # residual of q off the line p F; atan2 keeps both ends well conditioned
    along = _right_multiply(np.broadcast_to(_split(p.rep, k), _split(q_rep, k).shape), c, k)
    residual = np.linalg.norm(q_rep - along.reshape(q_rep.shape), axis=-1)
    modulus = np.minimum(np.linalg.norm(c, axis=-1), 1.0)
    out = np.arctan2(residual, modulus)
    return float(out) if np.ndim(out) == 0 else out


def sample_projective_increment(
    p: ProjectivePoint,
    t: float,
    rng: RngStream,
    size: int | None = None,
    *,
    lift=None,
    approx: bool = False,
    exact_floor: float = EXACT_FLOOR,
) -> ProjectivePoint | np.ndarray:
    """Exact Brownian increment on ``FP^n`` from ``p`` over time ``t``.

    Runs the sphere sampler on the covering sphere from a representative
    (``p.rep`` unless another unit ``lift`` of the same class is supplied)
    and projects the result. With ``size`` returns an array of canonical
    representatives of shape ``(size, d)``.
    """
    z = p.rep if lift is None else np.asarray(lift, dtype=float)
    if lift is not None and projective_distance(p, z) > 1e-6:
        raise DomainError("lift does not represent the given point")
    draw = sample_increment(z, t, rng, size, approx=approx, exact_floor=exact_floor)
    if size is None:
        return ProjectivePoint(p.field, p.n, draw.point)
    return canonicalize(draw.point, p.field)
