"""Block (multipodal) step-function graphons and their functionals.

A block graphon is a symmetric step function on [0,1]^2: block fractions
c (a probability vector) and a symmetric matrix of values in [0,1]. This
is the optimization variable of the constrained ensemble problem; named
extremal families (uniform, clique, anticlique, checkerboard) live here
together with the entropy integrand and the canonical objective.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from . import subgraph as sg
from .errors import DomainError

_FRACTION_TOL = 1e-12
_MERGE_TOL = 1e-10


def i_fun(x):
    """Boltzmann-type entropy integrand x log x + (1-x) log(1-x), with exact zero limits."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise DomainError(f"entropy integrand needs values in [0, 1], got {x}")
    out = xlogy(arr, arr) + xlogy(1.0 - arr, 1.0 - arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def i_fun_deriv(x):
    """log(x / (1-x)); diverges at the endpoints."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or np.any(arr >= 1):
        raise DomainError("derivative of the entropy integrand needs values in (0, 1)")
    out = np.log(arr / (1.0 - arr))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


@dataclass(frozen=True)
class BlockGraphon:
    """Step graphon: block fractions summing to 1 and symmetric values in [0,1]."""

    fractions: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.fractions, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        k = len(c)
        if k == 0:
            raise DomainError("graphon needs at least one block")
        if np.any(c < -_FRACTION_TOL):
            raise DomainError("block fractions must be nonnegative")
        c = np.clip(c, 0.0, None)
        s = c.sum()
        if abs(s - 1.0) > 1e-9:
            raise DomainError(f"block fractions must sum to 1, got {s}")
        c = c / s
        if v.shape != (k, k):
            raise DomainError(f"values must be {k}x{k}")
        if not np.allclose(v, v.T, atol=1e-12, rtol=0.0):
            raise DomainError("values must be symmetric")
        v = 0.5 * (v + v.T)
        if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
            raise DomainError("values must lie in [0, 1]")
        v = np.clip(v, 0.0, 1.0)
        c.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "fractions", c)
        object.__setattr__(self, "values", v)

    @property
    def num_blocks(self) -> int:
        return len(self.fractions)

    def to_json(self) -> str:
        return json.dumps({"c": self.fractions.tolist(), "h": self.values.tolist()})

    @staticmethod
    def from_json(text: str) -> "BlockGraphon":
        obj = json.loads(text)
        return BlockGraphon(np.asarray(obj["c"]), np.asarray(obj["h"]))


@dataclass(frozen=True)
class EntropyReport:
    entropy_integral: float
    edge_density: float


def uniform(eps: float) -> BlockGraphon:
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"edge density must be in [0, 1], got {eps}")
    return BlockGraphon(np.array([1.0]), np.array([[eps]]))


def clique(eps: float) -> BlockGraphon:
    """All edges packed into a corner block of side sqrt(eps); 0/1-valued."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"edge density must be in [0, 1], got {eps}")
    r = math.sqrt(eps)
    if r >= 1.0:
        return uniform(1.0)
    if r <= 0.0:
        return uniform(0.0)
    return BlockGraphon(np.array([r, 1.0 - r]), np.array([[1.0, 0.0], [0.0, 0.0]]))


def anticlique(eps: float) -> BlockGraphon:
    """Complement of a clique: all non-edges packed into a corner block."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"edge density must be in [0, 1], got {eps}")
    r = math.sqrt(1.0 - eps)
    if r >= 1.0:
        return uniform(0.0)
    if r <= 0.0:
        return uniform(1.0)
    return BlockGraphon(np.array([1.0 - r, r]), np.array([[1.0, 1.0], [1.0, 0.0]]))


def checkerboard(eps: float, tau: float) -> BlockGraphon:
    """Equal halves with values eps +/- (eps^3 - tau)^(1/3).

    The off-diagonal blocks carry the larger value; the construction pins
    the triangle density of the result to exactly tau.
    """
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"edge density must be in [0, 1], got {eps}")
    if tau < -1e-15 or tau > eps**3 + 1e-15:
        raise DomainError(f"triangle density must be in [0, eps^3], got {tau}")
    r = (max(eps**3 - tau, 0.0)) ** (1.0 / 3.0)
    hi, lo = eps + r, eps - r
    if hi > 1.0 + 1e-12 or lo < -1e-12:
        raise DomainError(f"checkerboard values {lo}, {hi} leave [0, 1]")
    hi, lo = min(hi, 1.0), max(lo, 0.0)
    return BlockGraphon(np.array([0.5, 0.5]), np.array([[lo, hi], [hi, lo]]))


def edge_density(h: BlockGraphon) -> float:
    c = h.fractions
    return float(c @ h.values @ c)


def entropy_integral(h: BlockGraphon) -> float:
    c = h.fractions
    iv = xlogy(h.values, h.values) + xlogy(1.0 - h.values, 1.0 - h.values)
    return float(c @ iv @ c)


def entropy_report(h: BlockGraphon) -> EntropyReport:
    return EntropyReport(entropy_integral(h), edge_density(h))


def degree_profile(h: BlockGraphon) -> np.ndarray:
    """Per-block row means g_i = sum_j c_j h_ij; satisfies sum_i c_i g_i = edge density."""
    return h.values @ h.fractions


def objective(h: BlockGraphon, H: sg.SubgraphSpec, beta2: float) -> float:
    """Canonical free-energy integrand: beta2 * t(H, h) - (1/2) * entropy integral."""
    return beta2 * sg.hom_density_blocks(H, h) - 0.5 * entropy_integral(h)


def uniform_objective(eps: float, H: sg.SubgraphSpec, beta2: float) -> float:
    """Closed form beta2 * eps^{e(H)} - I(eps)/2 for the flat graphon."""
    return beta2 * eps**H.edge_count - 0.5 * i_fun(eps)


def complement(h: BlockGraphon) -> BlockGraphon:
    return BlockGraphon(h.fractions.copy(), 1.0 - h.values)


def max_two_star_density(eps: float) -> float:
    """Largest two-star density at fixed edge density (anticlique below 1/2, clique above)."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"edge density must be in [0, 1], got {eps}")
    if eps <= 0.5:
        return 2.0 * eps + (1.0 - eps) ** 1.5 - 1.0
    return eps**1.5


def max_triangle_density(eps: float) -> float:
    """Largest triangle density at fixed edge density, achieved by the clique."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"edge density must be in [0, 1], got {eps}")
    return eps**1.5


def canonical(h: BlockGraphon) -> BlockGraphon:
    """Drop zero blocks, merge blocks with matching rows, sort reproducibly.

    Merging uses a 1e-10 row tolerance, far below solver tolerances, so the
    objective moves by well under 1e-9. Sorting is by permutation-invariant
    block keys (fraction, diagonal value, row mean, sorted row), with stable
    order on exact ties, which makes the form idempotent.
    """
    c = h.fractions.copy()
    v = h.values.copy()
    keep = c > 1e-14
    if not keep.all():
        c = c[keep]
        v = v[np.ix_(keep, keep)]
        c = c / c.sum()
    # Greedy merge passes until no two rows agree within tolerance.
    merged = True
    while merged and len(c) > 1:
        merged = False
        k = len(c)
        for i in range(k):
            for j in range(i + 1, k):
                if np.max(np.abs(v[i] - v[j])) <= _MERGE_TOL:
                    ci, cj = c[i], c[j]
                    tot = ci + cj
                    row = (ci * v[i] + cj * v[j]) / tot
                    diag = (ci * ci * v[i, i] + 2 * ci * cj * v[i, j] + cj * cj * v[j, j]) / tot**2
                    v[i] = row
                    v[:, i] = row
                    v[i, i] = diag
                    c[i] = tot
                    sel = np.arange(k) != j
                    c = c[sel]
                    v = v[np.ix_(sel, sel)]
                    merged = True
                    break
            if merged:
                break
    g = v @ c
    keys = [
        (round(c[i], 12), round(v[i, i], 12), round(g[i], 12), tuple(np.round(np.sort(v[i]), 12)))
        for i in range(len(c))
    ]
    order = sorted(range(len(c)), key=lambda i: keys[i])
    order = np.array(order, dtype=int)
    return BlockGraphon(c[order], v[np.ix_(order, order)])


def _boundaries(c: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(c)])


def _refined_l1(c1, v1, c2, v2) -> float:
    """Measure-weighted L1 distance of two step functions on the common refinement."""
    cuts = np.unique(np.concatenate([_boundaries(c1), _boundaries(c2), [1.0]]))
    cuts = cuts[(cuts >= 0.0) & (cuts <= 1.0)]
    w = np.diff(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    idx1 = np.clip(np.searchsorted(_boundaries(c1), mids, side="right") - 1, 0, len(c1) - 1)
    idx2 = np.clip(np.searchsorted(_boundaries(c2), mids, side="right") - 1, 0, len(c2) - 1)
    diff = np.abs(v1[np.ix_(idx1, idx1)] - v2[np.ix_(idx2, idx2)])
    return float(w @ diff @ w)


def block_distance(h1: BlockGraphon, h2: BlockGraphon, max_permute_blocks: int = 8) -> float:
    """Minimum over block relabelings of the L1 distance between the step functions.

    Zero exactly when the two graphons agree as step functions up to
    permuting blocks. Canonicalizes first, then permutes the smaller side.
    """
    a = canonical(h1)
    b = canonical(h2)
    if a.num_blocks > b.num_blocks:
        a, b = b, a
    if a.num_blocks > max_permute_blocks:
        raise BudgetError(f"block_distance permutes at most {max_permute_blocks} blocks")
    best = math.inf
    for perm in itertools.permutations(range(a.num_blocks)):
        p = np.array(perm, dtype=int)
        d = _refined_l1(a.fractions[p], a.values[np.ix_(p, p)], b.fractions, b.values)
        best = min(best, d)
        if best == 0.0:
            break
    return best


def grid_values(h: BlockGraphon, resolution: int) -> np.ndarray:
    """Sample the step function on a uniform resolution x resolution grid (cell midpoints)."""
    if resolution < 1:
        raise DomainError("resolution must be positive")
    mids = (np.arange(resolution) + 0.5) / resolution
    idx = np.clip(np.searchsorted(_boundaries(h.fractions), mids, side="right") - 1, 0, h.num_blocks - 1)
    return h.values[np.ix_(idx, idx)]
