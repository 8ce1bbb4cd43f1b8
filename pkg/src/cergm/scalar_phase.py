"""Scalar reduction of the star model: maximizers of l(x) and the U-shaped region.

Everything here analyses the one-dimensional landscape

    l(x) = beta1 * x + beta2 * x**p - x log x - (1-x) log(1-x)

whose global maximizers drive the uniform / two-valued dichotomy of the
degree-function problem. The entropy term is un-halved here; callers that
compare against the graphon objective are responsible for the (eps, 2*beta2)
coordinate mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

GRID_POINTS = 10_000
ROOT_TOL = 1e-12
TIE_TOL = 1e-10


@dataclass(frozen=True)
class ScalarModel:
    p: int
    beta1: float
    beta2: float

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"star order p must be >= 2, got {self.p}")


@dataclass(frozen=True)
class MaximizerSet:
    points: tuple[float, ...]
    values: tuple[float, ...]
    on_curve: bool


@dataclass(frozen=True)
class URegionQuery:
    eps: float
    B: float
    p: int


@dataclass(frozen=True)
class URegionResult:
    position: str  # "inside" | "outside" | "boundary"
    x1: float | None
    x2: float | None


@dataclass(frozen=True)
class StepProfile:
    """Two-valued degree profile: value x_k on measure m_k, mean fixed."""

    values: tuple[float, float]
    measures: tuple[float, float]

    def mean(self) -> float:
        return self.values[0] * self.measures[0] + self.values[1] * self.measures[1]


def ell(x: float, model: ScalarModel) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must be in [0, 1], got {x}")
    ent = 0.0
    if 0.0 < x < 1.0:
        ent = x * math.log(x) + (1.0 - x) * math.log(1.0 - x)
    return model.beta1 * x + model.beta2 * x**model.p - ent


def ell_deriv(x: float, model: ScalarModel) -> float:
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must be in (0, 1), got {x}")
    return model.beta1 + model.p * model.beta2 * x ** (model.p - 1) - math.log(x / (1.0 - x))


def ell_second(x: float, model: ScalarModel) -> float:
    return model.p * (model.p - 1) * model.beta2 * x ** (model.p - 2) - 1.0 / (x * (1.0 - x))


def critical_point(p: int) -> tuple[float, float]:
    """Endpoint (beta1^c, beta2^c) where the two-maximizer curve is born."""
    if p < 2:
        raise DomainError(f"star order p must be >= 2, got {p}")
    return (math.log(p - 1) - p / (p - 1), p ** (p - 1) / (p - 1) ** p)


def _root_grid(p: int) -> np.ndarray:
    # Uniform grid plus geometric refinement near the endpoints: for very
    # negative (positive) beta1 the lone maximizer sits at x ~ exp(beta1)
    # (1 - exp(-beta1)) which a uniform grid would miss. The floor bounds
    # how extreme a representable maximizer can get before 1 - x collapses.
    base = np.linspace(1e-4, 1.0 - 1e-4, GRID_POINTS)
    left = np.geomspace(1e-15, 1e-4, 80)
    right = 1.0 - left[::-1]
    return np.unique(np.concatenate([left, base, right]))


def _bisect_deriv_root(lo: float, hi: float, model: ScalarModel) -> float:
    flo = ell_deriv(lo, model)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = ell_deriv(mid, model)
        if fmid == 0.0 or hi - lo < ROOT_TOL:
            return mid
        if (flo > 0) == (fmid > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stationary_points(model: ScalarModel) -> list[float]:
    """All interior roots of l'(x), by sign-change bracketing plus bisection."""
    xs = _root_grid(model.p)
    vals = model.beta1 + model.p * model.beta2 * xs ** (model.p - 1) - np.log(xs / (1.0 - xs))
    roots = []
    sign = np.sign(vals)
    for k in range(len(xs) - 1):
        if sign[k] == 0.0:
            roots.append(float(xs[k]))
        elif sign[k] != sign[k + 1]:
            roots.append(_bisect_deriv_root(float(xs[k]), float(xs[k + 1]), model))
    if sign[-1] == 0.0:
        roots.append(float(xs[-1]))
    dedup: list[float] = []
    for r in sorted(roots):
        if not dedup or r - dedup[-1] > 10 * ROOT_TOL:
            dedup.append(r)
    return dedup


def global_maximizers(model: ScalarModel) -> MaximizerSet:
    """Global maximizers of l on [0, 1] (interior for finite parameters).

    Ties within TIE_TOL of the best value count as joint maximizers; two
    of them means the model sits on the phase transition curve.
    """
    roots = stationary_points(model)
    maxima = [r for r in roots if ell_second(r, model) <= 1e-7]
    if not maxima:
        maxima = roots  # degenerate flat case: fall back to value comparison
    if not maxima:
        # The interior maximizer exists but sits closer to an endpoint than
        # double precision can resolve; callers treat this as out of range.
        raise DomainError(
            f"no representable interior maximizer at (p={model.p}, "
            f"beta1={model.beta1}, beta2={model.beta2})"
        )
    vals = [ell(r, model) for r in maxima]
    best = max(vals)
    pts = [(r, v) for r, v in zip(maxima, vals) if best - v <= TIE_TOL]
    pts.sort()
    points = tuple(r for r, _ in pts)[:2]
    values = tuple(v for _, v in pts)[:2]
    return MaximizerSet(points, values, on_curve=len(points) == 2)


def _fold_window(beta2: float, p: int) -> tuple[float, float]:
    """beta1 interval where l has two local maximizers (between the fold bifurcations)."""
    # Inflection points solve p(p-1) beta2 x^{p-1} (1-x) = 1; two solutions
    # exist exactly above the critical beta2.
    target = 1.0 / (p * (p - 1) * beta2)
    xc = (p - 1) / p

    def u(x: float) -> float:
        return x ** (p - 1) * (1.0 - x)

    def bisect(lo: float, hi: float, increasing: bool) -> float:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (u(mid) > target) == increasing:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    x_lo = bisect(1e-12, xc, increasing=True)
    x_hi = bisect(xc, 1.0 - 1e-12, increasing=False)

    def beta1_at(x: float) -> float:
        return math.log(x / (1.0 - x)) - p * beta2 * x ** (p - 1)

    b_a, b_b = beta1_at(x_lo), beta1_at(x_hi)
    return (min(b_a, b_b), max(b_a, b_b))


def _maximizer_gap(beta1: float, beta2: float, p: int) -> float:
    """l(high local max) - l(low local max); +/- inf when one branch is absent."""
    model = ScalarModel(p, beta1, beta2)
    roots = stationary_points(model)
    maxima = [r for r in roots if ell_second(r, model) < 0]
    if len(maxima) >= 2:
        return ell(maxima[-1], model) - ell(maxima[0], model)
    if len(roots) >= 2:
        mid = 0.5 * (roots[0] + roots[-1])
        lone = maxima[0] if maxima else roots[0]
        return math.inf if lone > mid else -math.inf
    # Single stationary point: decide by which side of the fold window we are on.
    lo, hi = _fold_window(beta2, p)
    return -math.inf if beta1 < 0.5 * (lo + hi) else math.inf


class NonUniqueBracketError(RuntimeError):
    def __init__(self, beta2, p, glo, ghi):
        super().__init__(
            f"could not bracket the transition at beta2={beta2}, p={p} (gaps {glo}, {ghi})"
        )


def transition_curve(beta2: float, p: int = 2) -> float:
    """The beta1 at which l has two equal global maximizers, for beta2 above critical.

    The value gap between the two local maxima is strictly increasing in
    beta1 (slope x2 - x1 > 0), so plain bisection converges; iterate until
    the gap is below 1e-10.
    """
    _, b2c = critical_point(p)
    if beta2 <= b2c:
        raise DomainError(f"transition curve needs beta2 > {b2c}, got {beta2}")
    lo, hi = _fold_window(beta2, p)
    pad = 1e-12 * max(1.0, abs(lo), abs(hi))
    if hi - lo <= 2 * pad:
        return 0.5 * (lo + hi)  # pinched window right above the critical point
    lo += pad
    hi -= pad
    glo = _maximizer_gap(lo, beta2, p)
    ghi = _maximizer_gap(hi, beta2, p)
    if not (glo < 0 < ghi):
        raise NonUniqueBracketError(beta2, p, glo, ghi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g = _maximizer_gap(mid, beta2, p)
        if math.isfinite(g) and abs(g) < 1e-10:
            return mid
        if g < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def curve_maximizers(beta2: float, p: int = 2) -> tuple[float, float, float]:
    """(beta1 on the curve, x1, x2) for beta2 above the critical value."""
    b1 = transition_curve(beta2, p)
    ms = global_maximizers(ScalarModel(p, b1, beta2))
    if len(ms.points) == 2:
        return b1, ms.points[0], ms.points[1]
    # The bisection stopped with a sub-tolerance gap; recover both local maxima.
    model = ScalarModel(p, b1, beta2)
    roots = stationary_points(model)
    maxima = [r for r in roots if ell_second(r, model) < 0]
    if len(maxima) < 2:
        raise DomainError(
            f"on-curve maximizers at (p={p}, beta2={beta2}) are not representable"
        )
    return b1, maxima[0], maxima[-1]


def b_exact_max(p: int) -> float:
    """Largest coupling where both on-curve maximizers stay representable.

    They approach the endpoints like exp(-const * p * B), so the exact
    window shrinks with the motif exponent; below it the curve machinery
    is reliable, above it only region widening is used.
    """
    return max(30.0 / p, 2.0 * critical_point(p)[1])


def _curve_or_none(beta2: float, p: int):
    try:
        return curve_maximizers(beta2, p)
    except (DomainError, NonUniqueBracketError):
        return None


def u_region(query: URegionQuery) -> URegionResult:
    """Locate (eps, B) relative to the two-maximizer region.

    Inside means B above the critical coupling and eps strictly between the
    two on-curve maximizers; there the scalar optimizer is two-valued. For
    B beyond the representable window the maximizers are computed at the
    largest workable coupling and monotone widening of the region decides
    "inside"; an eps outside even that window is "indeterminate" rather
    than guessed.
    """
    if not 0.0 < query.eps < 1.0:
        raise DomainError(f"eps must be in (0, 1), got {query.eps}")
    eps_c, b2c = (query.p - 1) / query.p, critical_point(query.p)[1]
    if query.B < b2c - TIE_TOL:
        return URegionResult("outside", None, None)
    if abs(query.B - b2c) <= TIE_TOL:
        pos = "boundary" if abs(query.eps - eps_c) <= TIE_TOL else "outside"
        return URegionResult(pos, None, None)
    b_eval = min(query.B, b_exact_max(query.p))
    trip = _curve_or_none(b_eval, query.p)
    while trip is None and b_eval > 2.0 * b2c:
        b_eval /= 1.5
        trip = _curve_or_none(b_eval, query.p)
    if trip is None:
        raise DomainError(f"transition curve unavailable near beta2={query.B}, p={query.p}")
    _, x1, x2 = trip
    if b_eval < query.B:
        if x1 < query.eps < x2:
            return URegionResult("inside", x1, x2)
        return URegionResult("indeterminate", x1, x2)
    if abs(query.eps - x1) <= TIE_TOL or abs(query.eps - x2) <= TIE_TOL:
        return URegionResult("boundary", x1, x2)
    if x1 < query.eps < x2:
        return URegionResult("inside", x1, x2)
    return URegionResult("outside", x1, x2)


def u_region_optimizer(eps: float, B: float, p: int) -> StepProfile:
    """The two-valued optimal profile for a query inside the region."""
    if B > b_exact_max(p):
        raise DomainError(f"exact two-valued profile needs B <= {b_exact_max(p)}, got {B}")
    res = u_region(URegionQuery(eps, B, p))
    if res.position != "inside":
        raise DomainError(f"(eps={eps}, B={B}) is {res.position}, not inside the region")
    x1, x2 = res.x1, res.x2
    m1 = (x2 - eps) / (x2 - x1)
    return StepProfile((x1, x2), (m1, 1.0 - m1))
