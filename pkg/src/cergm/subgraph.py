"""Finite simple graphs H and homomorphism densities t(H, .).

Densities are evaluated exactly both on finite graphs (all vertex maps,
not only injective ones) and on block step-function graphons, together
with exact gradients of the block formula.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, DomainError

# Hard cap from the artifact contract: densities for larger motifs are out of scope.
MAX_MOTIF_VERTICES = 8

# Default number of assignment terms K**v(H) allowed in exact block evaluation.
DEFAULT_TERM_BUDGET = 10**8

_LETTERS = "abcdefgh"


@dataclass(frozen=True)
class SubgraphSpec:
    """A fixed simple graph H: vertex count plus sorted unordered edges."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def is_star(self) -> bool:
        """True if H is a p-star: one center incident to every edge, p >= 2 leaves."""
        p = self.edge_count
        if p < 2 or self.vertex_count != p + 1:
            return False
        centers = set.intersection(*(set(e) for e in self.edges))
        if not centers:
            return False
        touched = {v for e in self.edges for v in e}
        return len(touched) == self.vertex_count

    def star_order(self) -> int | None:
        return self.edge_count if self.is_star() else None

    def to_json(self) -> str:
        return json.dumps({"v": self.vertex_count, "edges": [list(e) for e in self.edges]})

    @staticmethod
    def from_json(text: str) -> "SubgraphSpec":
        obj = json.loads(text)
        return make_subgraph(obj["v"], [tuple(e) for e in obj["edges"]])


def make_subgraph(vertex_count: int, edges) -> SubgraphSpec:
    """Validate and normalize (vertex_count, edges) into a SubgraphSpec.

    Rejects loops, duplicate edges, out-of-range endpoints, and motifs
    larger than MAX_MOTIF_VERTICES.
    """
    if vertex_count < 1:
        raise DomainError(f"vertex_count must be positive, got {vertex_count}")
    if vertex_count > MAX_MOTIF_VERTICES:
        raise DomainError(f"motifs with more than {MAX_MOTIF_VERTICES} vertices are unsupported")
    norm = []
    for e in edges:
        i, j = e
        if i == j:
            raise DomainError(f"self-loop {e} is not allowed")
        if not (0 <= i < vertex_count and 0 <= j < vertex_count):
            raise DomainError(f"edge {e} has an endpoint outside [0, {vertex_count})")
        norm.append((min(i, j), max(i, j)))
    if len(set(norm)) != len(norm):
        raise DomainError("duplicate edge")
    return SubgraphSpec(vertex_count, tuple(sorted(norm)))


def edge() -> SubgraphSpec:
    return make_subgraph(2, [(0, 1)])


def p_star(p: int) -> SubgraphSpec:
    """Star with one center (vertex 0) and p leaves."""
    if p < 1:
        raise DomainError(f"star order must be >= 1, got {p}")
    return make_subgraph(p + 1, [(0, k) for k in range(1, p + 1)])


def two_star() -> SubgraphSpec:
    return p_star(2)


def triangle() -> SubgraphSpec:
    return make_subgraph(3, [(0, 1), (0, 2), (1, 2)])


def parse_subgraph(text: str) -> SubgraphSpec:
    """Parse a CLI-style subgraph spec: 'edge', 'triangle', 'star:p', or JSON."""
    text = text.strip()
    if text == "edge":
        return edge()
    if text == "triangle":
        return triangle()
    if text.startswith("star:"):
        return p_star(int(text.split(":", 1)[1]))
    if text.startswith("{"):
        return SubgraphSpec.from_json(text)
    raise DomainError(f"unknown subgraph spec {text!r}")


@dataclass(frozen=True)
class AdjacencyGraph:
    """A labelled simple graph on n vertices as a symmetric 0/1 matrix."""

    n: int
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=bool)
        if a.shape != (self.n, self.n):
            raise DomainError(f"adjacency must be {self.n}x{self.n}")
        if not np.array_equal(a, a.T):
            raise DomainError("adjacency must be symmetric")
        if a.diagonal().any():
            raise DomainError("adjacency must have a zero diagonal")
        object.__setattr__(self, "adjacency", a)

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.adjacency)) // 2

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)


def graph_from_edges(n: int, edges) -> AdjacencyGraph:
    a = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        a[i, j] = a[j, i] = True
    return AdjacencyGraph(n, a)


def complete_graph(n: int) -> AdjacencyGraph:
    a = np.ones((n, n), dtype=bool)
    np.fill_diagonal(a, False)
    return AdjacencyGraph(n, a)


def _isolated_vertices(H: SubgraphSpec) -> int:
    touched = {v for e in H.edges for v in e}
    return H.vertex_count - len(touched)


def hom_density_graph(H: SubgraphSpec, G: AdjacencyGraph) -> float:
    """t(H, G) = |hom(H, G)| / n^{v(H)} over all vertex maps.

    Fast paths for the edge, stars, and the triangle; everything else is
    contracted exactly with einsum over one adjacency factor per edge.
    """
    n = G.n
    if H.edge_count == 0:
        return 1.0
    if H.vertex_count == 2 and H.edge_count == 1:
        return 2.0 * G.edge_count / n**2
    p = H.star_order()
    if p is not None:
        deg = G.degrees()
        return float(np.sum(deg.astype(float) ** p)) / n ** (p + 1)
    if H.vertex_count == 3 and H.edge_count == 3:
        a = G.adjacency.astype(np.int64)
        return float(np.trace(a @ a @ a)) / n**3
    hom = _contract(H, G.adjacency.astype(float), None)
    return float(hom) * n ** _isolated_vertices(H) / n**H.vertex_count


def _contract(H: SubgraphSpec, mat: np.ndarray, weights: np.ndarray | None) -> float:
    """Sum over assignments of products of mat over edges (and weights per vertex)."""
    subs = []
    ops = []
    touched = sorted({v for e in H.edges for v in e})
    if weights is not None:
        touched = list(range(H.vertex_count))
    for v in touched:
        if weights is not None:
            subs.append(_LETTERS[v])
            ops.append(weights)
    for i, j in H.edges:
        subs.append(_LETTERS[i] + _LETTERS[j])
        ops.append(mat)
    # Path search only pays off once the naive contraction is nontrivial.
    optimize = len(mat) ** H.vertex_count > 4096
    return float(np.einsum(",".join(subs) + "->", *ops, optimize=optimize))


def _check_budget(H: SubgraphSpec, k: int, term_budget: int) -> None:
    if k**H.vertex_count > term_budget:
        raise BudgetError(
            f"exact block evaluation needs {k}^{H.vertex_count} terms, over the {term_budget} budget"
        )


def hom_density_blocks(H: SubgraphSpec, h, term_budget: int = DEFAULT_TERM_BUDGET) -> float:
    """t(H, h) for a block graphon h, exactly.

    Sums over all assignments of V(H) to blocks, weighting each vertex by its
    block fraction and each edge by the block value it lands on.
    """
    c = np.asarray(h.fractions, dtype=float)
    vals = np.asarray(h.values, dtype=float)
    _check_budget(H, len(c), term_budget)
    if H.edge_count == 0:
        return 1.0
    return _contract(H, vals, c)


def hom_density_gradient(H: SubgraphSpec, h, term_budget: int = DEFAULT_TERM_BUDGET) -> np.ndarray:
    """Exact partial derivatives of t(H, h) w.r.t. each unordered block value.

    Returns a symmetric KxK matrix; the (i, j) entry with i != j is the
    derivative in the single parameter h_ij = h_ji, diagonal entries are
    plain partials.
    """
    c = np.asarray(h.fractions, dtype=float)
    vals = np.asarray(h.values, dtype=float)
    k = len(c)
    _check_budget(H, k, term_budget)
    optimize = k**H.vertex_count > 4096
    entrywise = np.zeros((k, k))
    for skip in range(H.edge_count):
        subs = [_LETTERS[v] for v in range(H.vertex_count)]
        ops: list[np.ndarray] = [c] * H.vertex_count
        for idx, (i, j) in enumerate(H.edges):
            if idx == skip:
                continue
            subs.append(_LETTERS[i] + _LETTERS[j])
            ops.append(vals)
        si, sj = H.edges[skip]
        out = _LETTERS[si] + _LETTERS[sj]
        entrywise += np.einsum(",".join(subs) + "->" + out, *ops, optimize=optimize)
    grad = entrywise + entrywise.T
    np.fill_diagonal(grad, np.diagonal(entrywise))
    return grad


def hom_density_fraction_gradient(
    H: SubgraphSpec, h, term_budget: int = DEFAULT_TERM_BUDGET
) -> np.ndarray:
    """Exact partials of t(H, h) w.r.t. each block fraction c_i."""
    c = np.asarray(h.fractions, dtype=float)
    vals = np.asarray(h.values, dtype=float)
    k = len(c)
    _check_budget(H, k, term_budget)
    optimize = k**H.vertex_count > 4096
    grad = np.zeros(k)
    for free in range(H.vertex_count):
        subs = []
        ops: list[np.ndarray] = []
        for v in range(H.vertex_count):
            if v == free:
                continue
            subs.append(_LETTERS[v])
            ops.append(c)
        for i, j in H.edges:
            subs.append(_LETTERS[i] + _LETTERS[j])
            ops.append(vals)
        grad += np.einsum(",".join(subs) + "->" + _LETTERS[free], *ops, optimize=optimize)
    return grad
