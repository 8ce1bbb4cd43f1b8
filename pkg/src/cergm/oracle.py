"""Finite-n ground truth: exact window enumeration and an edge-swap sampler.

The enumeration sums the conditional ensemble over all labelled graphs on
n <= 7 vertices whose edge density falls in a window around eps, via a
stable log-sum-exp. The sampler is a Metropolis chain that conserves the
edge count exactly (swap a present edge with an absent pair) and updates
motif counts incrementally in integer arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import subgraph as sg
from .errors import BudgetError, DomainError, EmptyWindowError

MAX_ENUM_VERTICES = 7


@dataclass(frozen=True)
class EnumerationResult:
    n: int
    eps: float
    delta: float
    beta2: float
    psi: float
    num_admitted: int
    top_graphs: tuple[tuple[sg.AdjacencyGraph, float], ...]


@dataclass(frozen=True)
class McmcRun:
    n: int
    edge_count: int
    beta2: float
    H: sg.SubgraphSpec
    steps: int
    burn_in: int
    seed: int
    acceptance_rate: float
    mean_t: float
    mean_t_se: float
    degree_profile: np.ndarray = field(repr=False)
    frozen: bool = False


def _pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n), 2))


def graph_to_bits(G: sg.AdjacencyGraph) -> str:
    """Upper triangle, row-major, as a 0/1 string."""
    return "".join("1" if G.adjacency[i, j] else "0" for i, j in _pairs(G.n))


def graph_from_bits(n: int, bits: str) -> sg.AdjacencyGraph:
    ps = _pairs(n)
    if len(bits) != len(ps):
        raise DomainError(f"bitstring length {len(bits)} does not match n={n}")
    return sg.graph_from_edges(n, [e for e, b in zip(ps, bits) if b == "1"])


def _mask_to_graph(n: int, mask: int, pairs) -> sg.AdjacencyGraph:
    return sg.graph_from_edges(n, [e for k, e in enumerate(pairs) if (mask >> k) & 1])


def _popcount(arr: np.ndarray, width: int) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(arr).astype(np.int64)
    out = np.zeros(arr.shape, dtype=np.int64)
    for k in range(width):
        out += (arr >> k) & 1
    return out


def _motif_t_for_masks(H: sg.SubgraphSpec, n: int, masks: np.ndarray, pairs) -> np.ndarray:
    """Vectorized t(H, G) for the edge, stars, and triangle; loop fallback otherwise."""
    P = len(pairs)
    if H.edge_count <= 1 and H.vertex_count == 2:
        return 2.0 * _popcount(masks, P) / n**2
    bits = ((masks[:, None] >> np.arange(P, dtype=np.int64)[None, :]) & 1).astype(np.uint8)
    p = H.star_order()
    if p is not None:
        deg = np.zeros((len(masks), n), dtype=np.int64)
        for k, (i, j) in enumerate(pairs):
            deg[:, i] += bits[:, k]
            deg[:, j] += bits[:, k]
        return (deg.astype(float) ** p).sum(axis=1) / n ** (p + 1)
    if H.vertex_count == 3 and H.edge_count == 3:
        index = {e: k for k, e in enumerate(pairs)}
        tri = np.zeros(len(masks), dtype=np.int64)
        for i, j, k in itertools.combinations(range(n), 3):
            tri += (
                bits[:, index[(i, j)]] * bits[:, index[(j, k)]] * bits[:, index[(i, k)]]
            ).astype(np.int64)
        return 6.0 * tri / n**3
    if len(masks) * n**H.vertex_count > 5e7:
        raise BudgetError(
            f"general-motif enumeration of {len(masks)} graphs at v(H)={H.vertex_count} is too large"
        )
    return np.array(
        [sg.hom_density_graph(H, _mask_to_graph(n, int(m), pairs)) for m in masks]
    )


def admissible_edge_counts(n: int, eps: float, delta: float) -> list[int]:
    """Edge counts m with |2m/n^2 - eps| < delta (open window)."""
    P = n * (n - 1) // 2
    return [m for m in range(P + 1) if abs(2.0 * m / n**2 - eps) < delta]


def enumerate_psi(
    n: int, eps: float, delta: float, H: sg.SubgraphSpec, beta2: float, top_k: int = 5
) -> EnumerationResult:
    """Exact conditional normalization over all labelled graphs in the window.

    psi = (1/n^2) log sum over admitted G of exp(n^2 beta2 t(H, G)).
    Raises EmptyWindowError when no edge count lands inside the window,
    which at small n is a real possibility for narrow windows.
    """
    if n < 1 or n > MAX_ENUM_VERTICES:
        raise DomainError(f"enumeration supports 1 <= n <= {MAX_ENUM_VERTICES}, got {n}")
    if delta <= 0:
        raise DomainError("window half-width must be positive")
    counts = admissible_edge_counts(n, eps, delta)
    if not counts:
        raise EmptyWindowError(
            f"no edge count at n={n} has density within {delta} of {eps}"
        )
    pairs = _pairs(n)
    P = len(pairs)
    masks = np.arange(2**P, dtype=np.int64)
    pc = _popcount(masks, P)
    admitted = masks[np.isin(pc, counts)]
    t = _motif_t_for_masks(H, n, admitted, pairs)
    weights = n**2 * beta2 * t
    psi = float(logsumexp(weights)) / n**2
    order = np.argsort(-weights, kind="stable")[: min(top_k, len(admitted))]
    probs = np.exp(weights - n**2 * psi)
    top = tuple(
        (_mask_to_graph(n, int(admitted[i]), pairs), float(probs[i])) for i in order
    )
    return EnumerationResult(n, eps, delta, beta2, psi, len(admitted), top)


def conditional_top(
    n: int, eps: float, delta: float, H: sg.SubgraphSpec, beta2: float, k: int
) -> tuple[tuple[sg.AdjacencyGraph, float], ...]:
    """The k most probable graphs of the conditional ensemble (all, if fewer admitted)."""
    return enumerate_psi(n, eps, delta, H, beta2, top_k=k).top_graphs


class EdgeSwapChain:
    """Metropolis chain on labelled graphs with a hard edge-count constraint.

    Proposals swap one uniformly random present edge with one uniformly
    random absent pair; acceptance is min(1, exp(n^2 beta2 dt)). Motif
    counts for stars and the triangle are updated incrementally in exact
    integer arithmetic; other motifs fall back to full recomputation.
    """

    def __init__(self, n: int, edge_count: int, H: sg.SubgraphSpec, beta2: float, seed: int):
        pairs = _pairs(n)
        if not 0 <= edge_count <= len(pairs):
            raise DomainError(f"edge_count must be in [0, {len(pairs)}]")
        self.n = n
        self.H = H
        self.beta2 = beta2
        self.pairs = pairs
        self.rng = np.random.default_rng(seed)
        self.frozen = edge_count in (0, len(pairs))

        chosen = self.rng.choice(len(pairs), size=edge_count, replace=False)
        self.adj = np.zeros((n, n), dtype=bool)
        self.deg = np.zeros(n, dtype=np.int64)
        present_set = set(int(k) for k in chosen)
        self.present = sorted(present_set)
        self.absent = [k for k in range(len(pairs)) if k not in present_set]
        self.pos_present = {k: i for i, k in enumerate(self.present)}
        self.pos_absent = {k: i for i, k in enumerate(self.absent)}
        for k in self.present:
            i, j = pairs[k]
            self.adj[i, j] = self.adj[j, i] = True
            self.deg[i] += 1
            self.deg[j] += 1

        self.star_p = H.star_order()
        if H.vertex_count == 2 and H.edge_count == 1:
            self.kind = "edge"
        elif self.star_p is not None:
            self.kind = "star"
        elif H.vertex_count == 3 and H.edge_count == 3:
            self.kind = "triangle"
        else:
            self.kind = "general"
        self.hom = self.full_hom_count()

    # -- motif counts ------------------------------------------------------

    def full_hom_count(self):
        if self.kind == "edge":
            return 2 * len(self.present)
        if self.kind == "star":
            return sum(int(d) ** self.star_p for d in self.deg)
        if self.kind == "triangle":
            a = self.adj.astype(np.int64)
            return int(np.trace(a @ a @ a))
        g = sg.AdjacencyGraph(self.n, self.adj.copy())
        return sg.hom_density_graph(self.H, g) * self.n**self.H.vertex_count

    def t(self) -> float:
        return self.hom / self.n**self.H.vertex_count

    def _set_edge(self, k: int, present: bool):
        i, j = self.pairs[k]
        self.adj[i, j] = self.adj[j, i] = present
        d = 1 if present else -1
        self.deg[i] += d
        self.deg[j] += d

    @staticmethod
    def _list_remove(lst: list, pos: dict, k: int):
        i = pos.pop(k)
        last = lst.pop()
        if last != k:
            lst[i] = last
            pos[last] = i

    @staticmethod
    def _list_add(lst: list, pos: dict, k: int):
        pos[k] = len(lst)
        lst.append(k)

    def _swap_lists(self, k_rm: int, k_add: int):
        self._list_remove(self.present, self.pos_present, k_rm)
        self._list_remove(self.absent, self.pos_absent, k_add)
        self._list_add(self.present, self.pos_present, k_add)
        self._list_add(self.absent, self.pos_absent, k_rm)

    def step(self) -> bool:
        """One swap proposal; returns True when accepted."""
        if self.frozen:
            return False
        k_rm = self.present[int(self.rng.integers(len(self.present)))]
        k_add = self.absent[int(self.rng.integers(len(self.absent)))]
        a, b = self.pairs[k_rm]
        c, d = self.pairs[k_add]

        if self.kind == "edge":
            d_hom = 0
        elif self.kind == "star":
            p = self.star_p
            degs = {v: int(self.deg[v]) for v in (a, b, c, d)}
            d_hom = 0
            for v in (a, b):
                d_hom += (degs[v] - 1) ** p - degs[v] ** p
                degs[v] -= 1
            for v in (c, d):
                d_hom += (degs[v] + 1) ** p - degs[v] ** p
                degs[v] += 1
        elif self.kind == "triangle":
            lost = int(np.count_nonzero(self.adj[a] & self.adj[b]))
            self._set_edge(k_rm, False)
            gained = int(np.count_nonzero(self.adj[c] & self.adj[d]))
            self._set_edge(k_rm, True)
            d_hom = 6 * (gained - lost)
        else:
            self._set_edge(k_rm, False)
            self._set_edge(k_add, True)
            new_hom = self.full_hom_count()
            self._set_edge(k_add, False)
            self._set_edge(k_rm, True)
            d_hom = new_hom - self.hom

        dt = d_hom / self.n**self.H.vertex_count
        log_ratio = self.n**2 * self.beta2 * dt
        if log_ratio >= 0 or self.rng.random() < math.exp(log_ratio):
            self._set_edge(k_rm, False)
            self._set_edge(k_add, True)
            self._swap_lists(k_rm, k_add)
            self.hom += d_hom
            return True
        return False


def mcmc_sample(
    n: int,
    edge_count: int,
    H: sg.SubgraphSpec,
    beta2: float,
    steps: int,
    burn_in: int,
    seed: int,
) -> McmcRun:
    """Run the edge-conserving chain and report time-averaged statistics.

    degree_profile is the sorted vector of per-vertex time-mean degrees
    divided by n; under the uniform phase it is flat at the edge density
    up to Monte Carlo error. The standard error of mean_t uses 20 batch
    means over the post-burn-in stretch.
    """
    if burn_in < 0 or steps <= burn_in:
        raise DomainError("need steps > burn_in >= 0")
    chain = EdgeSwapChain(n, edge_count, H, beta2, seed)
    accepted = 0
    kept = steps - burn_in
    t_samples = np.empty(kept)
    deg_sum = np.zeros(n, dtype=np.float64)
    for s in range(steps):
        accepted += chain.step()
        if s >= burn_in:
            t_samples[s - burn_in] = chain.t()
            deg_sum += chain.deg
    mean_t = float(t_samples.mean())
    n_batches = min(20, kept)
    batches = np.array_split(t_samples, n_batches)
    bm = np.array([b.mean() for b in batches])
    se = float(bm.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    profile = np.sort(deg_sum / kept) / n
    return McmcRun(
        n=n,
        edge_count=edge_count,
        beta2=beta2,
        H=H,
        steps=steps,
        burn_in=burn_in,
        seed=seed,
        acceptance_rate=accepted / steps,
        mean_t=mean_t,
        mean_t_se=se,
        degree_profile=profile,
        frozen=chain.frozen,
    )


@dataclass(frozen=True)
class SweepRow:
    n: int
    psi: float | None
    num_admitted: int
    gap: float | None
    empty_window: bool


def convergence_sweep(
    n_list, eps: float, delta: float, H: sg.SubgraphSpec, beta2: float, psi_ref: float | None = None
) -> list[SweepRow]:
    """Tabulate psi_{n, delta} across n against a reference limiting value.

    No convergence rate is asserted; the rows just report the gaps. Cells
    with an empty window are flagged rather than filled with -inf.
    """
    if psi_ref is None:
        from . import solver

        psi_ref = solver.solve_canonical(H, eps, beta2).psi
    rows = []
    for n in n_list:
        try:
            res = enumerate_psi(n, eps, delta, H, beta2, top_k=0)
        except EmptyWindowError:
            rows.append(SweepRow(n, None, 0, None, True))
            continue
        rows.append(SweepRow(n, res.psi, res.num_admitted, psi_ref - res.psi, False))
    return rows
