"""Young functions, Luxemburg and dual norms, boolean Walsh machinery, steepness probes.

The Young pairs implemented here are the classical conjugate families built
from phi(u) = log(1+u), arcsinh(u), log+(u) and the identity, plus
cosh(x) - 1.  The Luxemburg norm of u under a density p is the gauge

    inf { r > 0 : E_p[Phi(u/r)] <= 1 },

computed by bisection on the monotone map r -> E_p[Phi(u/r)].  Divergent
integrals are reported as values (math.inf), never silently clipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ._rootfind import BracketError, decreasing_root
from .measures import (
    Density,
    InvariantError,
    Measure,
    RandomVariable,
    c_integral,
    values_on,
)

__all__ = [
    "YoungFunction",
    "young_pair",
    "validate_young_pair",
    "YOUNG_TAGS",
    "luxemburg_norm",
    "dual_norm",
    "WalshSpectrum",
    "walsh_transform",
    "inverse_walsh",
    "boolean_mgf",
    "boolean_phi_moment",
    "steepness_profile",
    "nonsteep_profile",
    "nonsteep_density",
    "ProfilePoint",
]


@dataclass(frozen=True)
class YoungFunction:
    """A conjugate pair (Phi, Phi_conj) with its generating derivative pair.

    ``phi`` is the right derivative of Phi on the nonnegative axis and
    ``phi_inv`` its inverse; ``strict`` records whether phi is strictly
    increasing, which the dual-norm stationarity solve requires.
    """

    tag: str
    Phi: Callable[[np.ndarray], np.ndarray]
    Phi_conj: Callable[[np.ndarray], np.ndarray]
    phi: Callable[[np.ndarray], np.ndarray]
    phi_inv: Callable[[np.ndarray], np.ndarray]
    strict: bool = True


def _phi_a(x):
    x = np.abs(np.asarray(x, dtype=float))
    return (1.0 + x) * np.log1p(x) - x


def _phi_a_conj(y):
    y = np.abs(np.asarray(y, dtype=float))
    return np.expm1(y) - y


def _phi_b(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x * np.arcsinh(x) - np.sqrt(1.0 + x * x) + 1.0


def _cosh_minus_one(y):
    return np.cosh(np.asarray(y, dtype=float)) - 1.0


def _phi_c(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x * np.log(np.maximum(x, 1.0)) - np.maximum(x - 1.0, 0.0)


def _phi_c_conj(y):
    return np.expm1(np.abs(np.asarray(y, dtype=float)))


def _half_square(x):
    x = np.asarray(x, dtype=float)
    return 0.5 * x * x


_PAIRS: dict[str, YoungFunction] = {
    "a": YoungFunction("a", _phi_a, _phi_a_conj, np.log1p, np.expm1),
    "b": YoungFunction("b", _phi_b, _cosh_minus_one, np.arcsinh, np.sinh),
    "c": YoungFunction(
        "c",
        _phi_c,
        _phi_c_conj,
        lambda u: np.log(np.maximum(np.asarray(u, dtype=float), 1.0)),
        np.exp,
        strict=False,
    ),
    "two": YoungFunction("two", _half_square, _half_square, lambda u: np.asarray(u, dtype=float), lambda v: np.asarray(v, dtype=float)),
    "cosh_minus_one": YoungFunction("cosh_minus_one", _cosh_minus_one, _phi_b, np.sinh, np.arcsinh),
}

YOUNG_TAGS = tuple(_PAIRS)


def young_pair(tag: str) -> YoungFunction:
    try:
        return _PAIRS[tag]
    except KeyError:
        raise InvariantError(f"unknown Young pair tag {tag!r}; choose one of {YOUNG_TAGS}") from None


def validate_young_pair(
    yf: YoungFunction,
    xs: np.ndarray | None = None,
    ys: np.ndarray | None = None,
    tol: float = 1e-12,
) -> None:
    """Spot-check the Young-function contract on a grid.

    Verifies Phi(0) = 0, evenness, midpoint convexity of both conjugates and
    the Young inequality |xy| <= Phi(x) + Phi_conj(y); raises on violation.
    """
    if xs is None:
        xs = np.concatenate([np.linspace(-6.0, 6.0, 49), [-30.0, 30.0]])
    if ys is None:
        ys = xs
    if abs(float(yf.Phi(np.zeros(1))[0])) > tol or abs(float(yf.Phi_conj(np.zeros(1))[0])) > tol:
        raise InvariantError(f"pair {yf.tag!r}: Phi(0) must vanish")
    for fn in (yf.Phi, yf.Phi_conj):
        vals = fn(xs)
        if np.max(np.abs(vals - fn(-xs))) > tol * np.maximum(1.0, np.max(np.abs(vals))):
            raise InvariantError(f"pair {yf.tag!r}: not even")
        mid = fn((xs[:-1] + xs[1:]) / 2.0)
        if np.any(mid > (vals[:-1] + vals[1:]) / 2.0 + 1e-10):
            raise InvariantError(f"pair {yf.tag!r}: midpoint convexity fails")
    gx, gy = np.meshgrid(xs, ys)
    lhs = np.abs(gx * gy)
    rhs = yf.Phi(gx) + yf.Phi_conj(gy)
    if np.any(lhs > rhs * (1.0 + 1e-12) + 1e-10):
        raise InvariantError(f"pair {yf.tag!r}: Young inequality fails on the grid")


def _phi_expect(p: Density, vals: np.ndarray, Phi: YoungFunction, r: float) -> float:
    with np.errstate(over="ignore"):
        out = Phi.Phi(vals / r)
    total = float(p.prob @ out)
    return total if math.isfinite(total) else math.inf


def luxemburg_norm(p: Density, u, Phi: YoungFunction, rel_tol: float = 1e-14) -> float:
    """Gauge of the unit ball {E_p[Phi(u)] <= 1}; zero for u identically zero."""
    vals = values_on(p.base, u)
    sup = float(np.max(np.abs(vals)))
    if sup == 0.0:
        return 0.0
    try:
        return decreasing_root(lambda r: _phi_expect(p, vals, Phi, r), 1.0, sup, rel_tol=rel_tol)
    except BracketError as exc:
        raise InvariantError(f"Luxemburg norm diverges for tag {Phi.tag!r}: {exc}") from exc


def dual_norm(p: Density, v, Phi: YoungFunction, rel_tol: float = 1e-14) -> float:
    """sup { E_p[uv] : E_p[Phi(u)] <= 1 }, solved through the stationarity condition.

    At the optimum the multiplier lam > 0 satisfies u = phi_inv(|v|/lam) signwise
    and the constraint is active; lam is found by bisection.
    """
    if not Phi.strict:
        raise InvariantError(f"dual norm needs a strictly increasing phi; tag {Phi.tag!r} is flat near zero")
    vals = values_on(p.base, v)
    sup = float(np.max(np.abs(vals)))
    if sup == 0.0:
        return 0.0

    def constraint(lam: float) -> float:
        with np.errstate(over="ignore"):
            u = Phi.phi_inv(np.abs(vals) / lam)
            out = Phi.Phi(u)
        total = float(p.prob @ out)
        return total if math.isfinite(total) else math.inf

    lam = decreasing_root(constraint, 1.0, sup, rel_tol=rel_tol)
    u_opt = np.sign(vals) * Phi.phi_inv(np.abs(vals) / lam)
    return float(p.prob @ (u_opt * vals))


@dataclass(frozen=True)
class WalshSpectrum:
    """Sparse character expansion of a function on an n-site boolean space.

    ``coeffs`` maps an integer mask (bit k set means site k participates in
    the monomial) to the real coefficient of that monomial.
    """

    n: int
    coeffs: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", MappingProxyType(dict(self.coeffs)))
        for mask in self.coeffs:
            if not 0 <= mask < (1 << self.n):
                raise InvariantError(f"mask {mask} out of range for n={self.n}")

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(m for m, c in self.coeffs.items() if c != 0.0))


def _fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard butterfly with kernel (-1)**popcount(i & j)."""
    a = np.array(values, dtype=float)
    h = 1
    while h < a.size:
        a = a.reshape(-1, 2 * h)
        top = a[:, :h] + a[:, h:]
        bot = a[:, :h] - a[:, h:]
        a = np.concatenate([top, bot], axis=1).reshape(-1)
        h *= 2
    return a


def walsh_transform(u: RandomVariable) -> WalshSpectrum:
    """Exact character coefficients of u on a boolean measure."""
    n = u.base.n_sites
    if n is None:
        raise InvariantError("walsh_transform needs a boolean base measure")
    coeffs = _fwht(u.values) / float(u.base.size)
    return WalshSpectrum(n, {int(m): float(c) for m, c in enumerate(coeffs) if c != 0.0})


def inverse_walsh(spec: WalshSpectrum, measure: Measure) -> RandomVariable:
    """Reconstruct u(x) as the sum of coeff * monomial over the spectrum."""
    if measure.n_sites != spec.n or measure.size != (1 << spec.n):
        raise InvariantError("measure does not match the spectrum size")
    dense = np.zeros(measure.size)
    for mask, c in spec.coeffs.items():
        dense[mask] = c
    return RandomVariable(measure, _fwht(dense))


def _gf2_kernel_basis(masks: Sequence[int]) -> list[int]:
    """Basis of subsets of ``masks`` whose bitwise XOR vanishes.

    Each basis element is an integer whose bit j selects masks[j].
    """
    pivots: dict[int, tuple[int, int]] = {}
    kernel: list[int] = []
    for j, mask in enumerate(masks):
        vec, combo = int(mask), 1 << j
        while vec:
            lead = vec.bit_length() - 1
            if lead not in pivots:
                break
            pvec, pcombo = pivots[lead]
            vec ^= pvec
            combo ^= pcombo
        if vec:
            pivots[vec.bit_length() - 1] = (vec, combo)
        else:
            kernel.append(combo)
    return kernel


_MAX_SUPPORT = 24


def boolean_mgf(spec: WalshSpectrum, t: float) -> float:
    """Moment generating function under the uniform density, by parity classes.

    Expanding exp(t*u) factorwise over the spectrum support leaves exactly the
    subsets whose monomial product is constant, which are the solutions of an
    XOR system over the support masks.  The value is the sum over that kernel
    of products of cosh over the complement and sinh over the subset.
    """
    items = [(m, c) for m, c in sorted(spec.coeffs.items()) if c != 0.0]
    m = len(items)
    if m == 0:
        return 1.0
    if m > _MAX_SUPPORT:
        raise InvariantError(f"spectrum support {m} exceeds the enumeration guard {_MAX_SUPPORT}")
    masks = [mask for mask, _ in items]
    tc = t * np.array([c for _, c in items])
    ch = np.cosh(tc)
    sh = np.sinh(tc)
    kernel = _gf2_kernel_basis(masks)
    if len(kernel) > _MAX_SUPPORT:
        raise InvariantError("parity-class kernel too large to enumerate")
    positions = np.arange(m)
    total = 0.0
    for s in range(1 << len(kernel)):
        b = 0
        k = s
        i = 0
        while k:
            if k & 1:
                b ^= kernel[i]
            k >>= 1
            i += 1
        member = ((b >> positions) & 1).astype(bool)
        total += float(np.prod(np.where(member, sh, ch)))
    return total


def boolean_phi_moment(spec: WalshSpectrum, t: float) -> float:
    """E_p[cosh(t*u) - 1] under the uniform density, as the symmetrized MGF."""
    return 0.5 * (boolean_mgf(spec, t) + boolean_mgf(spec, -t)) - 1.0


@dataclass(frozen=True)
class ProfilePoint:
    alpha: float
    value: float

    @property
    def divergent(self) -> bool:
        return not math.isfinite(self.value)


def steepness_profile(
    p: Density,
    u,
    Phi: YoungFunction,
    alphas: Iterable[float],
) -> list[ProfilePoint]:
    """Tabulate alpha -> E_p[Phi(alpha*u)] on the support of p.

    Non-finite sums are reported as divergent points.  On a quadrature grid
    the table is only as trustworthy as the grid resolves the integrand; the
    half-line family with closed form lives in :func:`nonsteep_profile`.
    """
    vals = values_on(p.base, u)
    out = []
    for alpha in alphas:
        with np.errstate(over="ignore"):
            ev = Phi.Phi(alpha * vals)
        total = float(p.prob @ ev)
        out.append(ProfilePoint(float(alpha), total if math.isfinite(total) else math.inf))
    return out


def nonsteep_profile(a: float, alphas: Iterable[float]) -> list[ProfilePoint]:
    """Closed-form steepness table for the half-line density (a+x)**(-3/2) e**(-x).

    For u(x) = x and Phi = cosh - 1 the value at alpha is
    (C(1-alpha, a) + C(1+alpha, a)) / (2 C(1, a)) - 1 with C the half-line
    Laplace-type integral; it is finite exactly on [-1, 1] and infinite
    outside, so the effective domain edge carries a finite value.
    """
    denom = 2.0 * c_integral(1.0, a)
    out = []
    for alpha in alphas:
        num = c_integral(1.0 - abs(alpha), a) + c_integral(1.0 + abs(alpha), a)
        value = num / denom - 1.0 if math.isfinite(num) else math.inf
        out.append(ProfilePoint(float(alpha), value))
    return out


def nonsteep_density(a: float, measure: Measure) -> Density:
    """The half-line density proportional to (a+x)**(-3/2) e**(-x) on a grid."""
    if a <= 0:
        raise InvariantError("a must be positive")
    x = measure.points.astype(float)
    return Density.from_unnormalized(measure, (a + x) ** -1.5 * np.exp(-x))
