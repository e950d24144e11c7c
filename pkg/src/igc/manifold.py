"""Exponential and mixture charts, the cumulant functional, transports and divergences.

Around a positive density p, nearby positive densities are parameterized as
q = exp(u - K_p(u)) * p with u centered under p, where K_p(u) = log E_p[exp u]
is the cumulant functional.  The inverse chart is u = log(q/p) - E_p[log(q/p)].
The mixture side uses the expectation coordinate q/p - 1, which also accepts
signed unit-mass functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .measures import (
    CotangentVector,
    Density,
    InvariantError,
    RandomVariable,
    TangentVector,
    lp_norm,
    require_same_base,
    tangent,
    values_on,
)

__all__ = [
    "cumulant",
    "cumulant_derivatives",
    "cumulant_gradient",
    "cumulant_gradient_derivative",
    "patch_e",
    "chart_s",
    "transition_e",
    "transport_e",
    "transport_m",
    "chart_m",
    "patch_m",
    "divergence",
    "DivergenceResult",
    "pythagorean_check",
    "PythagoreanResult",
    "orthogonal_mixture_third",
    "e_convergence_diagnostic",
    "EConvergenceRow",
]

_CENTER_CHECK_TOL = 1e-9


def _centered_values(p: Density, u, what: str) -> np.ndarray:
    vals = values_on(p.base, u)
    scale = max(1.0, float(np.max(np.abs(vals))))
    if abs(float(p.prob @ vals)) > _CENTER_CHECK_TOL * scale:
        raise InvariantError(f"{what}: coordinate is not centered under the chart center")
    return vals


def cumulant(p: Density, u) -> float:
    """K_p(u) = log E_p[exp u] for u centered under p; overflow-safe."""
    vals = _centered_values(p, u, "cumulant")
    return float(logsumexp(vals, b=p.prob))


_LOG_FLOOR = -700.0  # keeps exp() in the normal range; only bites below ~1e-304


def patch_e(p: Density, u) -> Density:
    """The density exp(u - K_p(u)) * p, renormalized exactly.

    The shifted log density is floored at a level far below any resolvable
    probability, so strict positivity survives extreme concentration.
    """
    vals = _centered_values(p, u, "patch_e")
    log_q = vals - float(logsumexp(vals, b=p.prob)) + np.log(p.values)
    q = np.exp(np.maximum(log_q, _LOG_FLOOR))
    return Density(p.base, q / float(q @ p.base.weights))


def chart_s(p: Density, q: Density) -> TangentVector:
    """The centered log-likelihood log(q/p) - E_p[log(q/p)]."""
    require_same_base(p, q, "chart_s")
    return tangent(p, np.log(q.values) - np.log(p.values))


def cumulant_derivatives(
    p: Density,
    u,
    dirs: Sequence,
) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of K_p at u along the given directions.

    Returns (grad, hess) with grad[i] = E_q[v_i] and hess[i, j] = Cov_q(v_i, v_j)
    where q is the patched density at u.
    """
    q = patch_e(p, u)
    mats = np.stack([values_on(p.base, v) for v in dirs])
    means = mats @ q.prob
    centered = mats - means[:, None]
    hess = (centered * q.prob) @ centered.T
    return means, hess


def cumulant_gradient(p: Density, u) -> CotangentVector:
    """The gradient of K_p at u as the mixture coordinate q/p - 1."""
    q = patch_e(p, u)
    return CotangentVector(p, RandomVariable(p.base, q.values / p.values - 1.0))


def cumulant_gradient_derivative(p: Density, u, w) -> RandomVariable:
    """Directional derivative of the gradient map: (q/p) * (w - E_q[w])."""
    q = patch_e(p, u)
    wv = values_on(p.base, w)
    return RandomVariable(p.base, (q.values / p.values) * (wv - float(q.prob @ wv)))


def transition_e(p1: Density, p2: Density, u) -> TangentVector:
    """Chart transition: u + log(p1/p2), recentered under p2."""
    require_same_base(p1, p2, "transition_e")
    vals = values_on(p1.base, u)
    return tangent(p2, vals + np.log(p1.values) - np.log(p2.values))


def transport_e(p: Density, q: Density, u) -> TangentVector:
    """Exponential transport u - E_q[u] onto the tangent space at q."""
    require_same_base(p, q, "transport_e")
    return tangent(q, values_on(p.base, u))


def transport_m(p: Density, q: Density, v) -> CotangentVector:
    """Mixture transport (p/q) * v; stays centered since E_q[(p/q)v] = E_p[v]."""
    require_same_base(p, q, "transport_m")
    vals = values_on(p.base, v)
    return CotangentVector(q, RandomVariable(q.base, vals * p.values / q.values))


def chart_m(p: Density, q) -> CotangentVector:
    """Mixture chart q/p - 1 for a density or signed unit-mass function q."""
    if isinstance(q, Density):
        qv = q.values
        require_same_base(p, q, "chart_m")
    else:
        qv = values_on(p.base, q)
        mass = float(qv @ p.base.weights)
        if abs(mass - 1.0) > max(p.base.mass_tol, 1e-10):
            raise InvariantError(f"chart_m: argument has mass {mass!r}, expected 1")
    return CotangentVector(p, RandomVariable(p.base, qv / p.values - 1.0))


def patch_m(p: Density, v) -> RandomVariable:
    """Inverse mixture chart (v + 1) * p; unit mass, possibly signed."""
    vals = _centered_values(p, v, "patch_m")
    return RandomVariable(p.base, (vals + 1.0) * p.values)


class DivergenceResult(NamedTuple):
    direct: float
    bregman: float


def divergence(q: Density, r: Density, p: Density | None = None) -> DivergenceResult:
    """Kullback-Leibler divergence E_q[log(q/r)], with a chart-based cross-check.

    The second entry evaluates K_p(v) - K_p(u) - DK_p(u)(v - u) with u, v the
    chart coordinates of q and r at center p (defaulting to p = q), which must
    agree with the direct sum.
    """
    require_same_base(q, r, "divergence")
    direct = float(q.prob @ (np.log(q.values) - np.log(r.values)))
    if p is None:
        p = q
    u = chart_s(p, q)
    v = chart_s(p, r)
    grad_dir = float(q.prob @ (v.values - u.values))
    bregman = cumulant(p, v) - cumulant(p, u) - grad_dir
    return DivergenceResult(direct, bregman)


class PythagoreanResult(NamedTuple):
    pairing: float
    defect: float
    d_r_q: float
    d_r_p: float
    d_p_q: float


def pythagorean_check(p: Density, q: Density, r: Density) -> PythagoreanResult:
    """Duality pairing of the mixture and exponential coordinates of (r, q) at p.

    The pairing E_p[(r/p - 1) * s_p(q)] equals D(r||p) + D(p||q) - D(r||q)
    identically, so the reported defect must vanish; a zero pairing is the
    orthogonality case in which the three divergences split additively.
    """
    pairing = float(p.prob @ (chart_m(p, r).values * chart_s(p, q).values))
    d_r_q = divergence(r, q).direct
    d_r_p = divergence(r, p).direct
    d_p_q = divergence(p, q).direct
    defect = d_r_q - d_r_p - d_p_q + pairing
    return PythagoreanResult(pairing, defect, d_r_q, d_r_p, d_p_q)


def orthogonal_mixture_third(
    p: Density,
    q: Density,
    rng: np.random.Generator,
    damping: float = 0.5,
) -> Density:
    """A density r with E_p[(r/p - 1) s_p(q)] = 0, built on a mixture line.

    Draw a direction, center it under p, remove its component along s_p(q) in
    the p inner product, and move from p along the mixture line far enough to
    stay positive.
    """
    u = chart_s(p, q).values
    uu = float(p.prob @ (u * u))
    if uu == 0.0:
        raise InvariantError("q equals p, no direction to be orthogonal to")
    w = rng.standard_normal(p.base.size)
    w = w - float(p.prob @ w)
    w = w - (float(p.prob @ (w * u)) / uu) * u
    sup = float(np.max(np.abs(w)))
    if sup == 0.0:
        raise InvariantError("degenerate direction draw")
    t = damping / sup
    return Density(p.base, p.values * (1.0 + t * w))


@dataclass(frozen=True)
class EConvergenceRow:
    index: int
    alpha: float
    forward: float
    backward: float


def e_convergence_diagnostic(
    seq: Sequence[Density],
    p: Density,
    alphas: Iterable[float],
) -> list[EConvergenceRow]:
    """Tabulate the L^alpha(p) norms of p_n/p - 1 and p/p_n - 1 per term.

    Convergence of both columns to zero for every alpha > 1 is the
    exponential-topology convergence criterion; the table is a diagnostic and
    asserts nothing by itself.
    """
    alphas = list(alphas)
    rows = []
    for i, pn in enumerate(seq):
        require_same_base(p, pn, "e_convergence_diagnostic")
        ratio = pn.values / p.values
        for alpha in alphas:
            rows.append(
                EConvergenceRow(
                    index=i,
                    alpha=float(alpha),
                    forward=lp_norm(p, ratio - 1.0, alpha),
                    backward=lp_norm(p, 1.0 / ratio - 1.0, alpha),
                )
            )
    return rows
