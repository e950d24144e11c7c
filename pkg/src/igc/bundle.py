"""Square-root sphere embedding, isometric transports and the metric derivative.

Positive densities embed into the unit sphere of the weighted L2 space by
p -> sqrt(p).  The sphere carries an explicit isometric transport between
tangent spaces; pulled back through the embedding it becomes an isometry of
the centered-L2 fibers attached to each density.  Differentiating the pulled
back transport along a curve yields the metric covariant derivative on the
bundle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .measures import (
    Density,
    InvariantError,
    Measure,
    RandomVariable,
    TangentVector,
    require_same_base,
    values_on,
)

__all__ = [
    "SphereVector",
    "HilbertVector",
    "sphere_dot",
    "sphere_point",
    "sphere_tangent",
    "embed_sqrt",
    "sphere_chart",
    "sphere_patch",
    "sphere_transport",
    "transport_values",
    "tangent_bundle_chart",
    "tangent_bundle_patch",
    "hilbert_transport",
    "hilbert_vector",
    "covariant_derivative_sphere",
    "metric_derivative",
    "hermite_values",
    "hermite_transport_demo",
    "HermiteTransportReport",
]

_SPHERE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SphereVector:
    """A point on the unit sphere of L2(mu), or a tangent vector at one.

    ``at`` is None for points; tangents store their base point and must be
    mu-orthogonal to it.
    """

    base: Measure
    values: np.ndarray
    at: "SphereVector | None" = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.base.points.shape:
            raise InvariantError("sphere vector values must match the support size")
        if self.at is None:
            nrm = float(self.base.weights @ (vals * vals))
            if abs(nrm - 1.0) > _SPHERE_TOL:
                raise InvariantError(f"sphere point has squared norm {nrm!r}, expected 1")
        else:
            require_same_base(self.base, self.at.base, "SphereVector")
            if self.at.at is not None:
                raise InvariantError("tangent base must be a sphere point")
            inner = float(self.base.weights @ (vals * self.at.values))
            scale = max(1.0, float(np.max(np.abs(vals))))
            if abs(inner) > _SPHERE_TOL * scale:
                raise InvariantError("tangent vector is not orthogonal to its base point")

    @property
    def role(self) -> str:
        return "point" if self.at is None else "tangent"


def sphere_dot(x: SphereVector, y: SphereVector) -> float:
    """The L2(mu) inner product of two sphere objects on the same base."""
    require_same_base(x.base, y.base, "sphere_dot")
    return float(x.base.weights @ (x.values * y.values))


def sphere_point(base: Measure, values) -> SphereVector:
    """Normalize values to a unit sphere point."""
    vals = np.asarray(values, dtype=float)
    nrm = math.sqrt(float(base.weights @ (vals * vals)))
    if nrm == 0.0:
        raise InvariantError("cannot normalize the zero vector")
    return SphereVector(base, vals / nrm)


def sphere_tangent(x: SphereVector, values) -> SphereVector:
    """Project values onto the tangent space at x."""
    vals = np.asarray(values, dtype=float)
    inner = float(x.base.weights @ (vals * x.values))
    return SphereVector(x.base, vals - inner * x.values, at=x)


def embed_sqrt(p: Density) -> SphereVector:
    """The sphere point sqrt(p)."""
    return SphereVector(p.base, np.sqrt(p.values))


def sphere_chart(x: SphereVector, y: SphereVector) -> SphereVector:
    """Projection chart y - <x, y> x, defined on the hemisphere <x, y> > 0."""
    c = sphere_dot(x, y)
    if c <= 0:
        raise InvariantError("projection chart requires <x, y> > 0")
    return SphereVector(x.base, y.values - c * x.values, at=x)


def sphere_patch(x: SphereVector, u: SphereVector) -> SphereVector:
    """Inverse of the projection chart: u + sqrt(1 - <u, u>) x.

    The radicand 1 - <u, u> is what restores a unit-norm point; with the
    square of the inner product instead the patch would leave the sphere,
    which the constructor would reject.
    """
    if u.at is None or u.at is not x:
        u = SphereVector(x.base, u.values, at=x)
    uu = sphere_dot(u, u)
    if uu >= 1.0:
        raise InvariantError("chart coordinate lies outside the unit ball")
    return SphereVector(x.base, u.values + math.sqrt(1.0 - uu) * x.values)


def transport_values(
    base: Measure,
    x_values: np.ndarray,
    y_values: np.ndarray,
    u_values: np.ndarray,
) -> np.ndarray:
    """Raw chord transport u - <u, y> (x + y) / (1 + <x, y>) on value arrays."""
    w = base.weights
    c = float(w @ (x_values * y_values))
    if c <= -1.0 + 1e-12:
        raise InvariantError("transport is undefined between antipodal points")
    uy = float(w @ (u_values * y_values))
    return u_values - (uy / (1.0 + c)) * (x_values + y_values)


def sphere_transport(x: SphereVector, y: SphereVector, u: SphereVector) -> SphereVector:
    """Isometric transport of u from the tangent space at x to the one at y.

    The composition of two transports generally differs from the direct one
    unless the three points are coplanar; the chord formula carries no path
    information.
    """
    if u.at is None:
        raise InvariantError("u must be a tangent vector")
    require_same_base(x.base, y.base, "sphere_transport")
    out = transport_values(x.base, x.values, y.values, u.values)
    return SphereVector(x.base, out, at=y)


def tangent_bundle_chart(
    x: SphereVector, y: SphereVector, v: SphereVector
) -> tuple[SphereVector, SphereVector]:
    """Coordinates of (y, v) at center x: (projection of y, v transported to x)."""
    return sphere_chart(x, y), sphere_transport(y, x, v)


def tangent_bundle_patch(
    x: SphereVector, u: SphereVector, w: SphereVector
) -> tuple[SphereVector, SphereVector]:
    """Inverse of the tangent bundle chart at x."""
    y = sphere_patch(x, u)
    return y, sphere_transport(x, y, w)


@dataclass(frozen=True, eq=False)
class HilbertVector:
    """An element of the centered-L2 fiber at a density."""

    at: Density
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.at.base.points.shape:
            raise InvariantError("fiber values must match the support size")
        mean = float(self.at.prob @ vals)
        scale = max(1.0, float(np.max(np.abs(vals))))
        if abs(mean) > _SPHERE_TOL * scale:
            raise InvariantError("fiber vector is not centered under its density")


def hilbert_vector(p: Density, values) -> HilbertVector:
    """Center values under p and wrap them as a fiber vector."""
    vals = values_on(p.base, values)
    return HilbertVector(p, vals - float(p.prob @ vals))


def hilbert_transport(p: Density, q: Density, u: HilbertVector) -> HilbertVector:
    """Isometry of the centered-L2 fiber at p onto the fiber at q.

    Conjugating the sphere chord transport by the square-root embedding gives

        sqrt(p/q) u - (1 + E_q[sqrt(p/q)])**-1 (1 + sqrt(p/q)) E_q[sqrt(p/q) u],

    which is centered under q and preserves second moments exactly.
    """
    require_same_base(p, q, "hilbert_transport")
    ratio = np.sqrt(p.values / q.values)
    denom = 1.0 + float(q.prob @ ratio)
    num = float(q.prob @ (ratio * u.values))
    return HilbertVector(q, ratio * u.values - (num / denom) * (1.0 + ratio))


def covariant_derivative_sphere(
    field: Callable[[SphereVector], SphereVector],
    w: SphereVector,
    x: SphereVector,
    step: float = 1e-5,
) -> SphereVector:
    """Metric covariant derivative of a sphere vector field along w at x.

    The field is evaluated on the radial normalization of x + t*w, the
    directional derivative is a central difference with the given step, and
    the result is projected back onto the tangent space at x.
    """
    if w.at is None:
        raise InvariantError("w must be a tangent vector")
    plus = field(sphere_point(x.base, x.values + step * w.values))
    minus = field(sphere_point(x.base, x.values - step * w.values))
    diff = (plus.values - minus.values) / (2.0 * step)
    return sphere_tangent(x, diff)


def metric_derivative(p: Density, f0: HilbertVector, f0_dot, w: TangentVector) -> HilbertVector:
    """Covariant derivative along a curve with initial velocity w in the moving frame.

    Given the fiber value F(0) = f0 and its raw time derivative f0_dot at
    t = 0, the derivative of the transported field is

        f0_dot + (1/2) f0 * w, recentered under p.
    """
    dot = values_on(p.base, f0_dot)
    raw = dot + 0.5 * f0.values * w.values
    return HilbertVector(p, raw - float(p.prob @ raw))


def hermite_values(n: int, x: np.ndarray) -> np.ndarray:
    """Probabilists' Hermite polynomial of degree n via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x)
    prev, cur = np.ones_like(x), x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur


@dataclass(frozen=True)
class HermiteTransportReport:
    gram: np.ndarray
    expected_diag: np.ndarray
    max_offdiag: float
    max_diag_defect: float


def hermite_transport_demo(y: RandomVariable, n_max: int) -> HermiteTransportReport:
    """Transport the Hermite basis from the constant point to a unit vector y.

    Under the Gaussian quadrature measure the Hermite polynomials H_1..H_n are
    an orthogonal tangent basis at the constant function 1; the transported
    family must stay orthogonal with squared norms n!.  Requires E[y^2] = 1
    and at least 2*n_max quadrature nodes.
    """
    base = y.base
    if base.rule != "gauss_hermite":
        raise InvariantError("hermite_transport_demo needs a Gauss-Hermite base measure")
    if n_max < 1:
        raise InvariantError("n_max must be at least 1")
    if base.size < 2 * n_max:
        raise InvariantError(f"quadrature underresolved: need at least {2 * n_max} nodes")
    ynorm = float(base.weights @ (y.values * y.values))
    if abs(ynorm - 1.0) > 1e-8:
        raise InvariantError(f"E[y^2] = {ynorm!r}, expected 1")
    x = SphereVector(base, np.ones(base.size))
    ypt = SphereVector(base, y.values)
    transported = []
    for n in range(1, n_max + 1):
        hn = hermite_values(n, base.points)
        hn = hn - float(base.weights @ hn)  # exact mean is zero; remove quadrature residue
        tn = sphere_transport(x, ypt, SphereVector(base, hn, at=x))
        transported.append(tn.values)
    mat = np.stack(transported)
    gram = (mat * base.weights) @ mat.T
    expected = np.array([math.factorial(n) for n in range(1, n_max + 1)], dtype=float)
    off = gram - np.diag(np.diag(gram))
    return HermiteTransportReport(
        gram=gram,
        expected_diag=expected,
        max_offdiag=float(np.max(np.abs(off))) if n_max > 1 else 0.0,
        max_diag_defect=float(np.max(np.abs(np.diag(gram) - expected) / expected)),
    )
