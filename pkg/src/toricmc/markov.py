"""Toric Markov chains on a directed transition graph.

Vertices carry arbitrary hashable labels; internally everything is indexed
by vertex position so that weights and counts are plain ``V x V`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Hashable, Iterable, Iterator, Sequence

import networkx as nx
import numpy as np

from .errors import InvalidTrajectory, ZeroRowSum, ZeroWeightOnPath

Vertex = Hashable
Trajectory = tuple  # sequence of vertex labels omega_0 ... omega_n


class TransitionGraph:
    """Directed graph of transitions: arcs ``v -> w`` (``v != w``) plus loops.

    Must be (weakly) connected and free of duplicate arcs.
    """

    def __init__(self, vertices: Iterable[Vertex], arcs: Iterable[tuple] = (), loops: Iterable[Vertex] = ()):
        self.vertices: tuple = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex labels")
        if not self.vertices:
            raise ValueError("graph needs at least one vertex")
        self.index = {v: i for i, v in enumerate(self.vertices)}
        arcs = [tuple(a) for a in arcs]
        loops = list(loops)
        if len(set(arcs)) != len(arcs) or len(set(loops)) != len(loops):
            raise ValueError("duplicate arcs or loops")
        for v, w in arcs:
            if v == w:
                raise ValueError(f"arc {v}->{w} is a loop; list it under loops")
            self._idx(v), self._idx(w)
        for v in loops:
            self._idx(v)
        n = len(self.vertices)
        self.mask = np.zeros((n, n), dtype=bool)
        for v, w in arcs:
            self.mask[self.index[v], self.index[w]] = True
        for v in loops:
            self.mask[self.index[v], self.index[v]] = True
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(zip(*np.nonzero(self.mask)))
        if not nx.is_connected(g):
            raise ValueError("transition graph must be connected")

    def _idx(self, v) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise ValueError(f"unknown vertex {v!r}") from None

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"TransitionGraph(vertices={list(self.vertices)}, arcs={self.arcs}, loops={self.loops})"

    @property
    def arcs(self) -> list[tuple]:
        return [(self.vertices[i], self.vertices[j]) for i, j in zip(*np.nonzero(self.mask)) if i != j]

    @property
    def loops(self) -> list:
        return [self.vertices[i] for i in range(len(self)) if self.mask[i, i]]

    @property
    def transitions(self) -> list[tuple[int, int]]:
        """Index pairs of arcs and loops in row-major order."""
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.mask))]

    @property
    def is_symmetric(self) -> bool:
        off = self.mask & ~np.eye(len(self), dtype=bool)
        return bool(np.array_equal(off, off.T))

    def has_transition(self, v, w) -> bool:
        return bool(self.mask[self._idx(v), self._idx(w)])

    def indices(self, omega: Sequence[Vertex]) -> list[int]:
        if len(omega) == 0:
            raise InvalidTrajectory("a trajectory has at least one state")
        try:
            idx = [self.index[v] for v in omega]
        except KeyError as exc:
            raise InvalidTrajectory(f"unknown state {exc.args[0]!r}") from None
        for a, b in zip(idx, idx[1:]):
            if not self.mask[a, b]:
                raise InvalidTrajectory(f"{self.vertices[a]!r}->{self.vertices[b]!r} is not a transition")
        return idx

    @classmethod
    def complete(cls, k: int, loops: bool = True) -> "TransitionGraph":
        vs = list(range(k))
        return cls(vs, [(v, w) for v in vs for w in vs if v != w], vs if loops else [])

    @classmethod
    def from_support(cls, P, vertices: Sequence[Vertex] | None = None) -> "TransitionGraph":
        P = np.asarray(P)
        vs = list(range(P.shape[0])) if vertices is None else list(vertices)
        arcs = [(vs[i], vs[j]) for i, j in zip(*np.nonzero(P)) if i != j]
        loops = [vs[i] for i in range(len(vs)) if P[i, i] != 0]
        return cls(vs, arcs, loops)


@dataclass(frozen=True)
class TransitionCount:
    N: np.ndarray
    start: Vertex
    end: Vertex

    @property
    def total(self) -> int:
        return int(self.N.sum())


def transition_count(graph: TransitionGraph, omega: Sequence[Vertex]) -> TransitionCount:
    """Arc-usage matrix ``N[v, w]`` of a trajectory."""
    idx = graph.indices(omega)
    N = np.zeros((len(graph), len(graph)), dtype=np.int64)
    for a, b in zip(idx, idx[1:]):
        N[a, b] += 1
    return TransitionCount(N, omega[0], omega[-1])


@dataclass(frozen=True)
class Realizability:
    kind: str  # "closed", "open" or "not_realizable"
    start: Vertex = None
    end: Vertex = None
    reason: str = ""

    @property
    def realizable(self) -> bool:
        return self.kind != "not_realizable"


def is_realizable(N, graph: TransitionGraph) -> Realizability:
    """Whether ``N`` is the transition count of some trajectory.

    Requires the positive support to be connected (undirected) and the
    out-minus-in balance to vanish everywhere (closed walk) or to be ``+1``
    at one vertex and ``-1`` at another (open walk between them).
    """
    N = np.asarray(N)
    n = len(graph)
    if N.shape != (n, n):
        return Realizability("not_realizable", reason=f"shape {N.shape} != {(n, n)}")
    if np.any(N < 0) or np.any(N != np.round(N)):
        return Realizability("not_realizable", reason="counts must be nonnegative integers")
    if np.any((N > 0) & ~graph.mask):
        return Realizability("not_realizable", reason="counts outside the transition graph")
    if not N.any():
        return Realizability("closed", reason="empty count (length-0 trajectory)")

    g = nx.Graph()
    pos = list(zip(*np.nonzero(N)))
    g.add_edges_from((int(i), int(j)) for i, j in pos)
    if not nx.is_connected(g):
        return Realizability("not_realizable", reason="support of N is disconnected")

    balance = N.sum(axis=1) - N.sum(axis=0)
    if not balance.any():
        return Realizability("closed")
    plus = np.flatnonzero(balance == 1)
    minus = np.flatnonzero(balance == -1)
    if len(plus) == 1 and len(minus) == 1 and np.count_nonzero(balance) == 2:
        return Realizability("open", graph.vertices[plus[0]], graph.vertices[minus[0]])
    return Realizability("not_realizable", reason=f"flow imbalance {balance.tolist()}")


# ---------------------------------------------------------------------------
# toric parameters


@dataclass(frozen=True)
class TmcParam:
    """Weights of a toric Markov chain: ``t0``, initial ``t_v`` and arc ``t_a``."""

    t0: float
    initial: np.ndarray
    T: np.ndarray

    @classmethod
    def make(cls, graph: TransitionGraph, T, initial=None, t0: float = 1.0) -> "TmcParam":
        T = np.array(T, dtype=float)
        n = len(graph)
        initial = np.ones(n) if initial is None else np.array(initial, dtype=float)
        if T.shape != (n, n) or initial.shape != (n,):
            raise ValueError("weight shapes do not match the graph")
        if np.any(T[~graph.mask] != 0):
            raise ValueError("weights must vanish off the transition graph")
        if np.any(T < 0) or np.any(initial < 0) or t0 <= 0:
            raise ValueError("weights must be nonnegative and t0 positive")
        if not np.any(initial > 0):
            raise ValueError("at least one initial weight must be positive")
        return cls(float(t0), initial, T)

    @property
    def row_sums(self) -> np.ndarray:
        return self.T.sum(axis=1)


def tmc_density(graph: TransitionGraph, t: TmcParam, omega: Sequence[Vertex]) -> float:
    """``q_n(omega; t) = t0 * t_{omega_0} * prod_k t_{omega_{k-1} -> omega_k}``."""
    idx = graph.indices(omega)
    q = t.t0 * t.initial[idx[0]]
    for a, b in zip(idx, idx[1:]):
        q *= t.T[a, b]
    if q == 0:
        raise ZeroWeightOnPath(f"trajectory {tuple(omega)} uses a zero weight")
    return float(q)


@dataclass(frozen=True)
class Homogeneity:
    is_mc: bool
    S: float | None = None
    witness: tuple | None = None


def homogeneity_check(graph: TransitionGraph, t: TmcParam, tol: float = 1e-9) -> Homogeneity:
    """The TMC is a Markov chain iff all row sums ``S(v)`` coincide."""
    S = t.row_sums
    ref = S[0]
    for i in range(1, len(S)):
        if abs(S[i] - ref) > tol * max(1.0, abs(ref), abs(S[i])):
            return Homogeneity(False, witness=(graph.vertices[0], graph.vertices[i]))
    return Homogeneity(True, S=float(np.mean(S)))


def normalize_to_mc(graph: TransitionGraph, t: TmcParam) -> np.ndarray:
    """``P[v, w] = t_{v->w} / S(v)``."""
    S = t.row_sums
    if np.any(S <= 0):
        v = graph.vertices[int(np.flatnonzero(S <= 0)[0])]
        raise ZeroRowSum(f"vertex {v!r} has no outgoing weight")
    return t.T / S[:, None]


def partition_function(graph: TransitionGraph, t: TmcParam, n: int):
    """``Z = t0 * t_V^T T^n 1`` by the transfer-matrix recursion.

    Works for float or ``Fraction`` object arrays alike.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    f = t.initial
    for _ in range(n):
        f = f @ t.T
    return t.t0 * f.sum()


def expected_counts(graph: TransitionGraph, t: TmcParam, n: int) -> np.ndarray:
    """``E_t[N_a] = t_a dZ/dt_a / Z`` by forward-mode differentiation.

    Alongside the forward vector ``f_k = f_{k-1} T`` the recursion carries one
    tangent per transition ``a = (i, j)``:
    ``df_k[a] = df_{k-1}[a] T + f_{k-1}[i] e_j``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    V = len(graph)
    f = np.asarray(t.initial, dtype=float)
    T = np.asarray(t.T, dtype=float)
    df = np.zeros((V, V, V))
    eye = np.eye(V)
    for _ in range(n):
        df = df @ T + f[:, None, None] * eye[None, :, :]
        f = f @ T
    Z = t.t0 * f.sum()
    dZ = t.t0 * df.sum(axis=2)
    E = np.where(graph.mask, T * dZ, 0.0) / Z
    return E


def mle_residual(graph: TransitionGraph, t: TmcParam, observed, n: int) -> np.ndarray:
    """``E_t[N_a] - N_a(omega)`` per transition, in ``graph.transitions`` order."""
    N = observed.N if isinstance(observed, TransitionCount) else np.asarray(observed)
    if N.shape != (len(graph), len(graph)):
        raise ValueError("observed count has the wrong shape")
    if int(N.sum()) != n:
        raise ValueError(f"observed count has {int(N.sum())} transitions, expected {n}")
    E = expected_counts(graph, t, n)
    return np.array([E[i, j] - N[i, j] for i, j in graph.transitions])


def stationarity_residual(graph: TransitionGraph, pi, P) -> np.ndarray:
    """``(sum_v pi(v) P[v, w] - pi(w))_w``."""
    pi = np.asarray(pi, dtype=float)
    P = np.asarray(P, dtype=float)
    if np.any(P[~graph.mask] != 0):
        raise ValueError("P has mass outside the transition graph")
    return pi @ P - pi


def stationary_distribution(P) -> np.ndarray:
    """Left Perron vector of an irreducible stochastic matrix."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    M = np.vstack([P.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(M, b, rcond=None)
    return pi


# ---------------------------------------------------------------------------
# enumeration (test oracles and small exact computations)


def trajectories(graph: TransitionGraph, n: int) -> Iterator[tuple]:
    """All trajectories with ``n`` transitions (exponentially many)."""
    succ = [np.flatnonzero(graph.mask[i]) for i in range(len(graph))]

    def extend(path):
        if len(path) == n + 1:
            yield tuple(graph.vertices[i] for i in path)
            return
        for j in succ[path[-1]]:
            yield from extend(path + [int(j)])

    for v in range(len(graph)):
        yield from extend([v])


def all_sequences(graph: TransitionGraph, n: int) -> Iterator[tuple]:
    """Every state sequence of length ``n + 1``, valid or not."""
    return product(graph.vertices, repeat=n + 1)
