"""Cycles, cocycles and reversibility of Markov kernels.

Functions that take a transition matrix ``P`` work on vertex indices
``0 .. V-1`` and read the transition graph off the support of ``P``.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Sequence

import networkx as nx
import numpy as np

from . import lattice
from .amodel import Binomial
from .errors import (
    ArcMissingReverse,
    CombinerViolation,
    DependentCuts,
    EnumerationBudgetExceeded,
    InputError,
    NotReversible,
    RowSumExceedsOne,
    StationarityViolated,
    SupportAsymmetry,
)
from .markov import TransitionGraph, stationarity_residual

DEFAULT_TOL = 1e-9


# ---------------------------------------------------------------------------
# cycles


@dataclass(frozen=True)
class Cycle:
    """Elementary directed cycle, rotated to start at its smallest vertex index.

    ``vertices`` lists the cycle once without repeating the start; ``vector``
    is the signed arc usage over ``graph.arcs`` (loops excluded).
    """

    vertices: tuple
    index: tuple[int, ...]
    vector: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.index)

    @property
    def arcs(self) -> list[tuple]:
        vs = self.vertices
        return [(vs[k], vs[(k + 1) % len(vs)]) for k in range(len(vs))]

    @property
    def index_arcs(self) -> list[tuple[int, int]]:
        ix = self.index
        return [(ix[k], ix[(k + 1) % len(ix)]) for k in range(len(ix))]

    @property
    def is_loop(self) -> bool:
        return len(self.index) == 1

    def reversed_index(self) -> tuple[int, ...]:
        r = self.index[::-1]
        k = r.index(min(r))
        return r[k:] + r[:k]

    def counts(self, n_vertices: int) -> np.ndarray:
        N = np.zeros((n_vertices, n_vertices), dtype=np.int64)
        for i, j in self.index_arcs:
            N[i, j] += 1
        return N


def _arc_position(graph: TransitionGraph) -> dict[tuple[int, int], int]:
    return {(i, j): k for k, (i, j) in enumerate((i, j) for i, j in graph.transitions if i != j)}


def make_cycle(graph: TransitionGraph, index: Sequence[int]) -> Cycle:
    """Cycle through the given vertex indices (closing arc implied)."""
    index = tuple(int(i) for i in index)
    if len(set(index)) != len(index) or not index:
        raise ValueError("a cycle visits distinct vertices")
    k = index.index(min(index))
    index = index[k:] + index[:k]
    pos = _arc_position(graph)
    z = [0] * len(pos)
    for a in range(len(index)):
        i, j = index[a], index[(a + 1) % len(index)]
        if not graph.mask[i, j]:
            raise ValueError(f"{graph.vertices[i]!r}->{graph.vertices[j]!r} is not a transition")
        if i == j:
            continue
        z[pos[(i, j)]] += 1
        if (j, i) in pos:
            z[pos[(j, i)]] -= 1
    return Cycle(tuple(graph.vertices[i] for i in index), index, tuple(z))


def enumerate_cycles(graph: TransitionGraph, max_candidates: int | None = None) -> list[Cycle]:
    """All elementary directed cycles, loops included, in lexicographic index order."""
    budget = lattice.default_budget() if max_candidates is None else max_candidates
    g = nx.DiGraph()
    g.add_nodes_from(range(len(graph)))
    g.add_edges_from(graph.transitions)
    found = []
    for c in nx.simple_cycles(g):
        found.append(c)
        if len(found) > budget:
            raise EnumerationBudgetExceeded(f"more than {budget} cycles")
    cycles = [make_cycle(graph, c) for c in found]
    return sorted(cycles, key=lambda c: c.index)


@dataclass(frozen=True)
class CycleCensus:
    """Cycle counts under three conventions.

    ``oriented`` counts directed elementary cycles, ``unoriented`` identifies
    a cycle with its reversal, and ``vectors`` counts distinct nonzero cycle
    vectors (2-cycles and loops have the zero vector).
    """

    by_length: dict[int, int]
    oriented: int
    unoriented: int
    vectors: int


def cycle_census(graph: TransitionGraph, max_candidates: int | None = None) -> CycleCensus:
    cycles = enumerate_cycles(graph, max_candidates)
    by_length = dict(sorted(Counter(len(c) for c in cycles).items()))
    unoriented = {min(c.index, c.reversed_index()) for c in cycles}
    vectors = {c.vector for c in cycles if any(c.vector)}
    return CycleCensus(by_length, len(cycles), len(unoriented), len(vectors))


def decompose_trajectory(graph: TransitionGraph, omega: Sequence) -> tuple[tuple, list[Cycle]]:
    """Split a trajectory into an elementary path plus cycles.

    Walks the trajectory and cuts out the closed stretch each time a vertex
    repeats. The remainder keeps the endpoints of ``omega``; for a closed
    trajectory it is the single start vertex.
    """
    idx = graph.indices(omega)
    stack: list[int] = []
    cycles = []
    for v in idx:
        if v in stack:
            k = stack.index(v)
            cycles.append(make_cycle(graph, stack[k:]))
            del stack[k + 1 :]
        else:
            stack.append(v)
    return tuple(graph.vertices[i] for i in stack), cycles


# ---------------------------------------------------------------------------
# path laws and reversal


def _graph_of(P: np.ndarray) -> TransitionGraph:
    return TransitionGraph.from_support(P)


def _check_symmetric_support(P: np.ndarray) -> None:
    off = (P > 0) & ~np.eye(P.shape[0], dtype=bool)
    if not np.array_equal(off, off.T):
        i, j = np.argwhere(off != off.T)[0]
        raise SupportAsymmetry(f"P[{i},{j}] and P[{j},{i}] differ in support")


def reversal(omega: Sequence) -> tuple:
    return tuple(omega)[::-1]


def path_probability(P, pi, omega: Sequence[int]) -> float:
    """``pi(omega_0) prod P[omega_{k-1}, omega_k]``."""
    P = np.asarray(P, dtype=float)
    p = float(pi[omega[0]])
    for a, b in zip(omega, omega[1:]):
        p *= P[a, b]
    return p


def reversed_density(P, pi, omega: Sequence[int]) -> float:
    """Probability of the reversed path ``r omega`` under the same chain."""
    P = np.asarray(P, dtype=float)
    for a, b in zip(omega, omega[1:]):
        if P[a, b] > 0 and P[b, a] == 0:
            raise ArcMissingReverse(f"{b}->{a} is not a transition")
    return path_probability(P, pi, reversal(omega))


def reversal_divergence(P, pi, n: int, tol: float = 1e-10) -> float:
    """KL divergence of the stationary n-step path law from its reversal.

    Equals ``n * sum_{v,w} J(v,w) log(J(v,w) / J(w,v))`` with the two-step
    joint ``J(v,w) = pi(v) P[v,w]``.
    """
    P = np.asarray(P, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if n < 0:
        raise ValueError("n must be nonnegative")
    _check_symmetric_support(P)
    res = stationarity_residual(_graph_of(P), pi, P)
    if np.max(np.abs(res)) > tol:
        raise StationarityViolated(f"stationarity residual {np.max(np.abs(res)):.3g} exceeds {tol}")
    J = pi[:, None] * P
    mask = (J > 0) & (J.T > 0)
    return float(n * np.sum(J[mask] * np.log(J[mask] / J.T[mask])))


def path_law_kl(P, pi, n: int) -> float:
    """Brute-force KL over all trajectories of length ``n`` (test oracle)."""
    P = np.asarray(P, dtype=float)
    V = P.shape[0]
    total = 0.0
    for omega in product(range(V), repeat=n + 1):
        p = path_probability(P, pi, omega)
        if p > 0:
            total += p * math.log(p / path_probability(P, pi, omega[::-1]))
    return total


# ---------------------------------------------------------------------------
# Kolmogorov criterion and detailed balance


@dataclass(frozen=True)
class KolmogorovResult:
    reversible: bool
    witness: tuple | None = None
    log_ratio: float = 0.0


def kolmogorov_check(P, tol: float = DEFAULT_TOL, max_candidates: int | None = None) -> KolmogorovResult:
    """Compare ``P^c`` with ``P^{rc}`` on every elementary cycle of length >= 3.

    Products are compared in log space; the first cycle (lexicographic) with
    ``|log P^c - log P^{rc}| > tol`` is returned as witness.
    """
    P = np.asarray(P, dtype=float)
    _check_symmetric_support(P)
    for c in enumerate_cycles(_graph_of(P), max_candidates):
        if len(c) < 3:
            continue
        d = sum(math.log(P[i, j]) - math.log(P[j, i]) for i, j in c.index_arcs)
        if abs(d) > tol:
            return KolmogorovResult(False, c.index, d)
    return KolmogorovResult(True)


def k_ideal_generators(graph: TransitionGraph, max_candidates: int | None = None) -> list[Binomial]:
    """Cycle binomials ``P^c - P^{rc}`` over arc variables, one per ``+-`` pair."""
    seen: set[tuple[int, ...]] = set()
    gens = []
    for c in enumerate_cycles(graph, max_candidates):
        if len(c) < 3 or not any(c.vector):
            continue
        neg = tuple(-x for x in c.vector)
        if c.vector in seen or neg in seen:
            continue
        seen.add(c.vector)
        gens.append(Binomial.from_vector(c.vector))
    return gens


@dataclass(frozen=True)
class DetailedBalance:
    kappa: np.ndarray | None
    violating_edge: tuple[int, int] | None = None

    @property
    def reversible(self) -> bool:
        return self.kappa is not None


def detailed_balance_solve(P, tol: float = DEFAULT_TOL) -> DetailedBalance:
    """Solve ``kappa(v) P[v,w] = kappa(w) P[w,v]`` along a BFS spanning tree.

    Non-tree edges are then checked with relative tolerance ``tol``.
    """
    P = np.asarray(P, dtype=float)
    _check_symmetric_support(P)
    V = P.shape[0]
    log_k = np.full(V, np.nan)
    log_k[0] = 0.0
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w in np.flatnonzero(P[v] > 0):
            if w != v and np.isnan(log_k[w]):
                log_k[w] = log_k[v] + math.log(P[v, w]) - math.log(P[w, v])
                queue.append(int(w))
    if np.isnan(log_k).any():
        raise InputError("support of P is not connected")
    for v, w in zip(*np.nonzero(P > 0)):
        if v < w:
            d = log_k[v] + math.log(P[v, w]) - log_k[w] - math.log(P[w, v])
            if abs(d) > tol:
                return DetailedBalance(None, (int(v), int(w)))
    k = np.exp(log_k - log_k.max())
    return DetailedBalance(k / k.sum())


# ---------------------------------------------------------------------------
# cocycle parameterization


def _as_cut(B: Iterable[int]) -> frozenset[int]:
    return frozenset(int(v) for v in B)


def default_cuts(n_vertices: int) -> tuple[frozenset[int], ...]:
    """Singleton cuts ``{v}`` for every vertex except the reference vertex 0."""
    return tuple(frozenset({v}) for v in range(1, n_vertices))


def cut_vector(B: frozenset[int], arcs: Sequence[tuple[int, int]]) -> tuple[int, ...]:
    """``u_B(a)``: +1 if ``a`` exits ``B``, -1 if it enters, 0 otherwise."""
    return tuple(int(v in B and w not in B) - int(w in B and v not in B) for v, w in arcs)


@dataclass(frozen=True)
class CocycleMatrix:
    arcs: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]
    cuts: tuple[frozenset[int], ...]
    rows: lattice.IntMatrix

    @property
    def edge_block(self) -> lattice.IntMatrix:
        return self.rows[: len(self.edges)]

    @property
    def cut_block(self) -> lattice.IntMatrix:
        return self.rows[len(self.edges) :]

    @property
    def rank(self) -> int:
        return lattice.rational_rank(self.rows)


def cocycle_matrix(
    graph: TransitionGraph, cuts: Iterable[Iterable[int]] | None = None, allow_dependent: bool = False
) -> CocycleMatrix:
    """Edge rows (both orientations marked 1) stacked on cut rows ``u_B``.

    Columns are the arcs of ``graph`` in row-major index order; loops are
    not columns. Vertices in ``cuts`` are indices.
    """
    if not graph.is_symmetric:
        raise SupportAsymmetry("cocycle matrix needs every arc paired with its reverse")
    V = len(graph)
    arcs = tuple((i, j) for i, j in graph.transitions if i != j)
    edges = tuple((i, j) for i, j in arcs if i < j)
    cuts = default_cuts(V) if cuts is None else tuple(_as_cut(B) for B in cuts)
    for B in cuts:
        if not B or len(B) >= V or not B <= set(range(V)):
            raise InputError(f"cut {sorted(B)} is not a proper nonempty vertex subset")
    edge_rows = [tuple(int({v, w} == {i, j}) for v, w in arcs) for i, j in edges]
    cut_rows = [cut_vector(B, arcs) for B in cuts]
    if not allow_dependent and cut_rows and lattice.rational_rank(cut_rows) < len(cut_rows):
        raise DependentCuts("cut rows are linearly dependent")
    return CocycleMatrix(arcs, edges, cuts, tuple(edge_rows + cut_rows))


def cycle_lattice(graph: TransitionGraph) -> lattice.LatticeBasis:
    """Integer kernel of the cocycle matrix, i.e. the lattice of cycle vectors."""
    return lattice.integer_kernel_basis(cocycle_matrix(graph).rows)


def confounding_directions(graph: TransitionGraph, cuts: Iterable[Iterable[int]]) -> list[tuple[int, ...]]:
    """Integer directions ``lam`` with ``sum_B lam_B u_B = 0``.

    Scaling ``t_B`` by ``exp(c * lam_B)`` leaves the kernel unchanged.
    """
    M = cocycle_matrix(graph, cuts, allow_dependent=True)
    if not M.cut_block:
        return []
    return list(lattice.integer_kernel_basis(lattice.transpose(M.cut_block)).vectors)


@dataclass(frozen=True)
class ReversibleParam:
    """Symmetric edge weights ``s`` and cut weights ``t_B``.

    ``s`` is a ``V x V`` symmetric array (diagonal ignored); ``cuts`` are
    vertex-index sets. Loop probabilities are not parameters: they absorb
    whatever mass each row leaves over.
    """

    s: np.ndarray
    cuts: tuple[frozenset[int], ...]
    t: np.ndarray

    @classmethod
    def make(cls, s, t, cuts: Iterable[Iterable[int]] | None = None) -> "ReversibleParam":
        s = np.array(s, dtype=float)
        cuts = default_cuts(s.shape[0]) if cuts is None else tuple(_as_cut(B) for B in cuts)
        return cls(s, cuts, np.array(t, dtype=float).reshape(len(cuts)))


def reversible_from_params(
    graph: TransitionGraph, rp: ReversibleParam, tol: float = DEFAULT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Kernel ``P[v,w] = s(v,w) prod t_B^{u_B(v->w)}`` and ``kappa(v) ~ prod_{B∋v} t_B^-2``.

    Returns ``(P, kappa)`` with ``kappa`` summing to one. Loops receive
    ``1 - sum_{w != v} P[v,w]``.
    """
    V = len(graph)
    s, t = rp.s, rp.t
    if s.shape != (V, V):
        raise InputError(f"s has shape {s.shape}, expected {(V, V)}")
    off = ~np.eye(V, dtype=bool)
    if not np.array_equal(s[off], s.T[off]):
        raise InputError("s must be symmetric")
    edge = graph.mask & off
    if np.any(s[edge] <= 0) or np.any(s[off & ~edge] != 0):
        raise InputError("s must be positive exactly on the edges of the graph")
    if np.any(t <= 0):
        raise InputError("cut weights must be positive")
    if not graph.is_symmetric:
        raise SupportAsymmetry("reversible kernels need a symmetric support")

    log_t = np.log(t)
    P = np.zeros((V, V))
    for v, w in zip(*np.nonzero(edge)):
        u = cut_vector_array(rp.cuts, v, w)
        P[v, w] = s[v, w] * math.exp(float(u @ log_t))
    for v in range(V):
        rest = 1.0 - P[v].sum()
        if rest < -tol:
            raise RowSumExceedsOne(f"row {v} sums to {P[v].sum():.6g} before loops")
        rest = max(rest, 0.0)
        if graph.mask[v, v]:
            P[v, v] = rest
        elif rest > tol:
            raise RowSumExceedsOne(f"row {v} leaves mass {rest:.3g} but vertex has no loop")

    log_k = np.array([-2.0 * sum(log_t[b] for b, B in enumerate(rp.cuts) if v in B) for v in range(V)])
    kappa = np.exp(log_k - log_k.max())
    kappa /= kappa.sum()
    flux = kappa[:, None] * P
    if not np.allclose(flux, flux.T, rtol=1e-9, atol=1e-300):
        raise ArithmeticError("constructed kernel fails detailed balance")
    return P, kappa


def cut_vector_array(cuts: Sequence[frozenset[int]], v: int, w: int) -> np.ndarray:
    """``(u_B(v->w))_B`` as a float vector."""
    return np.array([float(v in B and w not in B) - float(w in B and v not in B) for B in cuts])


def params_from_reversible(
    graph: TransitionGraph,
    P,
    cuts: Iterable[Iterable[int]] | None = None,
    tol: float = DEFAULT_TOL,
) -> ReversibleParam:
    """Invert the parameterization of a reversible kernel.

    ``s(v,w) = sqrt(P[v,w] P[w,v])``; the cut weights solve
    ``kappa(v) ~ prod_{B∋v} t_B^-2`` in the least-squares sense, which is
    exact for an independent cut family. With the default singleton cuts
    the reference vertex 0 carries ``t = 1`` implicitly.
    """
    P = np.asarray(P, dtype=float)
    V = len(graph)
    if P.shape != (V, V):
        raise InputError(f"P has shape {P.shape}, expected {(V, V)}")
    db = detailed_balance_solve(P, tol)
    if not db.reversible:
        raise NotReversible(f"detailed balance fails on edge {db.violating_edge}")
    off = ~np.eye(V, dtype=bool)
    s = np.where(off, np.sqrt(P * P.T), 0.0)
    cuts = default_cuts(V) if cuts is None else tuple(_as_cut(B) for B in cuts)
    member = np.array([[float(v in B) for B in cuts] for v in range(V)]).reshape(V, len(cuts))
    design = np.hstack([-2.0 * member, np.ones((V, 1))])
    sol, *_ = np.linalg.lstsq(design, np.log(db.kappa), rcond=None)
    return ReversibleParam(s, cuts, np.exp(sol[: len(cuts)]))


# ---------------------------------------------------------------------------
# Metropolis construction


def _harmonic(u, v):
    return u * v / (u + v)


COMBINERS: dict[str, Callable] = {
    "min": min,
    "harmonic": _harmonic,
    "product": lambda u, v: u * v,
}


def _exact(x) -> Fraction:
    if isinstance(x, (float, np.floating)):
        return Fraction(repr(float(x)))
    return Fraction(x)


def _to_fraction_matrix(Q) -> np.ndarray:
    return np.vectorize(_exact, otypes=[object])(np.asarray(Q, dtype=object))


def metropolis_reversible(Q, f: str | Callable = "min") -> np.ndarray:
    """Symmetric joint ``P(x,y) = f(Q(x,y), Q(y,x))`` with the margins of ``Q``.

    ``Q`` is a joint probability on ``V x V``; arithmetic is exact in
    ``Fraction``. The diagonal takes ``pi(x) - sum_{y != x} P(x,y)`` where
    ``pi`` are the row margins of ``Q``.
    """
    comb = COMBINERS[f] if isinstance(f, str) else f
    Q = _to_fraction_matrix(Q)
    V = Q.shape[0]
    if Q.shape != (V, V):
        raise InputError("Q must be square")
    if any(q < 0 for q in Q.flat):
        raise InputError("Q must be nonnegative")
    pos = np.array([[Q[i, j] > 0 for j in range(V)] for i in range(V)])
    off = ~np.eye(V, dtype=bool)
    if not np.array_equal(pos & off, (pos & off).T):
        raise SupportAsymmetry("Q must be positive on both orientations of every edge")
    P = np.full((V, V), Fraction(0), dtype=object)
    for i in range(V):
        for j in range(i + 1, V):
            if not pos[i, j]:
                continue
            u, v = Q[i, j], Q[j, i]
            p, p_rev = Fraction(comb(u, v)), Fraction(comb(v, u))
            if p != p_rev:
                raise CombinerViolation(f"f is not symmetric at ({u}, {v})")
            if p > min(u, v) or p < 0:
                raise CombinerViolation(f"f({u}, {v}) = {p} exceeds min(u, v)")
            P[i, j] = P[j, i] = p
    for i in range(V):
        P[i, i] = sum(Q[i], Fraction(0)) - sum((P[i, j] for j in range(V) if j != i), Fraction(0))
    return P


def acceptance_ratio(Q, P) -> np.ndarray:
    """``alpha(x,y) = P(x,y) / Q(x,y)`` off the diagonal (same margins)."""
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(Q > 0, P / np.where(Q > 0, Q, 1.0), 0.0)
    np.fill_diagonal(alpha, 0.0)
    return alpha


def cycle_monomials(P, cycles: Iterable[Cycle]) -> dict[tuple[int, ...], float]:
    """``prod_a P_a^{N_a(c)}`` for each cycle, keyed by the cycle's vertex indices."""
    P = np.asarray(P, dtype=float)
    return {c.index: float(np.prod([P[i, j] for i, j in c.index_arcs])) for c in cycles}
