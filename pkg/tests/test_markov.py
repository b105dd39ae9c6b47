import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toricmc import markov
from toricmc.errors import InvalidTrajectory, ZeroRowSum, ZeroWeightOnPath
from toricmc.markov import TmcParam, TransitionGraph

from conftest import brute_conditionals, brute_expected, brute_partition, random_tmc


@st.composite
def graphs(draw, max_v=4):
    V = draw(st.integers(1, max_v))
    pairs = [(i, j) for i in range(V) for j in range(V)]
    while True:
        chosen = draw(st.lists(st.sampled_from(pairs), unique=True, min_size=1))
        arcs = [(i, j) for i, j in chosen if i != j]
        loops = [i for i, j in chosen if i == j]
        try:
            return TransitionGraph(range(V), arcs, loops)
        except ValueError:
            if V == 1:
                return TransitionGraph([0], [], [0])


def walk(graph, rng, n):
    v = int(rng.integers(len(graph)))
    omega = [v]
    for _ in range(n):
        succ = np.flatnonzero(graph.mask[omega[-1]])
        if len(succ) == 0:
            break
        omega.append(int(rng.choice(succ)))
    return tuple(graph.vertices[i] for i in omega)


# ---------------------------------------------------------------------------
# graphs and counts


def test_graph_validation():
    with pytest.raises(ValueError):
        TransitionGraph(["a", "b"], [("a", "a")])
    with pytest.raises(ValueError):
        TransitionGraph(["a", "b", "c"], [("a", "b")])
    with pytest.raises(ValueError):
        TransitionGraph(["a", "b"], [("a", "b"), ("a", "b")])
    g = TransitionGraph(["a", "b"], [("a", "b"), ("b", "a")], ["b"])
    assert g.arcs == [("a", "b"), ("b", "a")] and g.loops == ["b"]
    assert g.is_symmetric


def test_transition_count_examples():
    g = TransitionGraph(["a", "b"], [("a", "b"), ("b", "a")])
    c = markov.transition_count(g, ("a",))
    assert not c.N.any() and c.start == c.end == "a"
    c = markov.transition_count(g, tuple("abab"))
    assert c.N.tolist() == [[0, 2], [1, 0]] and (c.start, c.end) == ("a", "b")
    with pytest.raises(InvalidTrajectory):
        markov.transition_count(g, tuple("aab"))
    with pytest.raises(InvalidTrajectory):
        markov.transition_count(g, ("z",))


def test_closed_trajectory_is_balanced():
    g = TransitionGraph.complete(3)
    N = markov.transition_count(g, (0, 1, 2, 2, 0, 2, 1, 0)).N
    assert N.sum(axis=0).tolist() == N.sum(axis=1).tolist()


@given(graphs(), st.integers(0, 12), st.integers(0, 2**32 - 1))
@settings(max_examples=80, deadline=None)
def test_realizability_round_trip(g, n, seed):
    omega = walk(g, np.random.default_rng(seed), n)
    c = markov.transition_count(g, omega)
    r = markov.is_realizable(c.N, g)
    assert r.realizable
    if omega[0] == omega[-1]:
        assert r.kind == "closed"
    else:
        assert (r.kind, r.start, r.end) == ("open", omega[0], omega[-1])


def _matches_some_trajectory(g, N):
    total = int(N.sum())
    for omega in markov.trajectories(g, total):
        if np.array_equal(markov.transition_count(g, omega).N, N):
            return True
    return False


def test_disconnected_counts_are_not_realizable():
    g = TransitionGraph.complete(4, loops=False)
    N = markov.transition_count(g, (0, 1, 0)).N + markov.transition_count(g, (2, 3, 2)).N
    r = markov.is_realizable(N, g)
    assert r.kind == "not_realizable" and "disconnected" in r.reason
    assert not _matches_some_trajectory(g, N)


def test_three_defects_are_not_realizable():
    g = TransitionGraph.complete(3, loops=False)
    N = np.zeros((3, 3), dtype=int)
    N[0, 2] = N[1, 2] = 1
    assert not markov.is_realizable(N, g).realizable
    assert not _matches_some_trajectory(g, N)


def test_realizability_rejects_off_graph_counts():
    g = TransitionGraph(["a", "b"], [("a", "b"), ("b", "a")])
    assert not markov.is_realizable([[1, 0], [0, 0]], g).realizable
    assert not markov.is_realizable([[0, -1], [0, 0]], g).realizable


@given(graphs(max_v=3), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_realizability_matches_exhaustive_search(g, seed):
    # random small count matrices on the graph, checked against brute force
    rng = np.random.default_rng(seed)
    N = np.where(g.mask, rng.integers(0, 2, g.mask.shape), 0)
    if N.sum() == 0 or N.sum() > 5:
        return
    assert markov.is_realizable(N, g).realizable == _matches_some_trajectory(g, N)


# ---------------------------------------------------------------------------
# densities


def test_density_examples(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    assert markov.tmc_density(g, t, (1,)) == pytest.approx(t.t0 * t.initial[1])
    ones = TmcParam.make(g, g.mask.astype(float))
    for omega in markov.trajectories(g, 3):
        assert markov.tmc_density(g, ones, omega) == 1.0


def test_density_factorizes(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    for omega in markov.trajectories(g, 4):
        prefix = markov.tmc_density(g, t, omega[:-1])
        a, b = g.index[omega[-2]], g.index[omega[-1]]
        assert markov.tmc_density(g, t, omega) == prefix * t.T[a, b]


def test_zero_weight_on_path():
    g = TransitionGraph.complete(2)
    T = np.array([[1.0, 0.0], [1.0, 1.0]])
    t = TmcParam.make(g, T)
    with pytest.raises(ZeroWeightOnPath):
        markov.tmc_density(g, t, (0, 1))


def test_two_state_chain_is_constrained_ising(rng):
    # log q over Omega_3 lies in the span of 1, X0, X1+X2, X3, sum X_{k-1} X_k
    g = TransitionGraph([1, -1], [(1, -1), (-1, 1)], [1, -1])
    t = random_tmc(g, rng)
    rows, logq = [], []
    for omega in markov.trajectories(g, 3):
        x = np.array(omega, dtype=float)
        rows.append([1.0, x[0], x[1] + x[2], x[3], x[:-1] @ x[1:]])
        logq.append(np.log(markov.tmc_density(g, t, omega)))
    X, y = np.array(rows), np.array(logq)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    assert len(y) == 16
    assert np.max(np.abs(X @ coef - y)) < 1e-12


# ---------------------------------------------------------------------------
# homogeneity


def test_homogeneity_examples(rng):
    g = TransitionGraph.complete(3)
    P = rng.dirichlet(np.ones(3), size=3)
    h = markov.homogeneity_check(g, TmcParam.make(g, P))
    assert h.is_mc and h.S == pytest.approx(1.0)
    h = markov.homogeneity_check(g, TmcParam.make(g, 3 * P))
    assert h.is_mc and h.S == pytest.approx(3.0)
    Q = P.copy()
    Q[1] *= 1.5
    h = markov.homogeneity_check(g, TmcParam.make(g, Q))
    assert not h.is_mc and h.witness == (0, 1)


def test_normalize_to_mc(rng):
    g = TransitionGraph.complete(3)
    P = rng.dirichlet(np.ones(3), size=3)
    assert np.allclose(markov.normalize_to_mc(g, TmcParam.make(g, P)), P, atol=1e-15)
    assert np.allclose(markov.normalize_to_mc(g, TmcParam.make(g, 2 * P)), P, atol=1e-15)
    T = rng.uniform(0.1, 5.0, (3, 3))
    R = markov.normalize_to_mc(g, TmcParam.make(g, T))
    assert np.max(np.abs(R.sum(axis=1) - 1)) < 1e-14
    g2 = TransitionGraph.complete(2)
    with pytest.raises(ZeroRowSum):
        markov.normalize_to_mc(g2, TmcParam.make(g2, [[1.0, 1.0], [0.0, 0.0]]))


def test_homogeneous_conditionals_are_history_free(rng):
    g = TransitionGraph.complete(3)
    P = rng.dirichlet(np.ones(3), size=3)
    t = TmcParam.make(g, 2.5 * P, rng.uniform(0.5, 2, 3))
    for (k, hist, w), p in brute_conditionals(g, t, 4).items():
        assert abs(p - P[hist[-1], w]) < 1e-12


def test_inhomogeneous_conditionals_depend_on_time(rng):
    g = TransitionGraph.complete(3)
    T = rng.uniform(0.2, 2.0, (3, 3))
    t = TmcParam.make(g, T)
    assert not markov.homogeneity_check(g, t).is_mc
    cond = brute_conditionals(g, t, 3)
    first = cond[(1, (0,), 1)]
    later = [p for (k, h, w), p in cond.items() if k == 3 and h[-1] == 0 and w == 1]
    assert any(abs(p - first) > 1e-6 for p in later)


def test_weight_decomposition(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    P = markov.normalize_to_mc(g, t)
    S = t.row_sums
    for omega in markov.trajectories(g, 4):
        N = markov.transition_count(g, omega).N
        rhs = t.t0 * t.initial[g.index[omega[0]]] * np.prod(P**N) * np.prod(S ** N.sum(axis=1))
        assert markov.tmc_density(g, t, omega) == pytest.approx(rhs, rel=1e-12)


# ---------------------------------------------------------------------------
# partition function and expected counts


def test_partition_function_examples(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    assert markov.partition_function(g, t, 0) == pytest.approx(t.t0 * t.initial.sum())
    for k in range(1, 5):
        gk = TransitionGraph.complete(k)
        ones = TmcParam.make(gk, gk.mask.astype(float), t0=2.0)
        assert markov.partition_function(gk, ones, 5) == 2.0 * k * k**5


def test_partition_function_exact_in_fractions():
    g = TransitionGraph.complete(2)
    T = np.array([[Fraction(1, 3), Fraction(2, 3)], [Fraction(1, 2), Fraction(1, 4)]], dtype=object)
    t = TmcParam(Fraction(1), np.array([Fraction(1), Fraction(2)], dtype=object), T)
    Z = markov.partition_function(g, t, 3)
    brute = sum(
        t.initial[w[0]] * T[w[0], w[1]] * T[w[1], w[2]] * T[w[2], w[3]] for w in itertools.product(range(2), repeat=4)
    )
    assert isinstance(Z, Fraction) and Z == brute


def test_partition_function_matches_enumeration(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    assert markov.partition_function(g, t, 5) == pytest.approx(brute_partition(g, t, 5), rel=1e-12)


@given(graphs(), st.integers(0, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_dp_matches_enumeration_on_random_graphs(g, n, seed):
    rng = np.random.default_rng(seed)
    t = random_tmc(g, rng)
    Zb = brute_partition(g, t, n)
    if Zb == 0:
        assert markov.partition_function(g, t, n) == 0
        return
    assert markov.partition_function(g, t, n) == pytest.approx(Zb, rel=1e-12)
    assert np.allclose(markov.expected_counts(g, t, n), brute_expected(g, t, n), rtol=1e-10, atol=1e-12)


def test_expected_counts_examples(rng):
    g = TransitionGraph(["a", "b"], [("a", "b"), ("b", "a")])
    t = TmcParam.make(g, g.mask.astype(float))
    assert not markov.expected_counts(g, t, 0).any()
    E = markov.expected_counts(g, t, 2)
    assert E[0, 1] == E[1, 0] == 1.0


def test_expected_counts_match_enumeration(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    assert np.allclose(markov.expected_counts(g, t, 4), brute_expected(g, t, 4), rtol=1e-10, atol=0)


def test_expected_counts_match_finite_differences(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    n, h = 4, 1e-6
    Z = markov.partition_function(g, t, n)
    E = markov.expected_counts(g, t, n)
    for i, j in g.transitions:
        T = t.T.copy()
        T[i, j] *= 1 + h
        Zh = markov.partition_function(g, TmcParam(t.t0, t.initial, T), n)
        # t_a dZ/dt_a / Z ~ (Z(t_a(1+h)) - Z) / (h Z)
        assert abs((Zh - Z) / (h * Z) - E[i, j]) < 1e-5 * max(1, E[i, j])


def test_expected_counts_sum_to_n(rng):
    g = TransitionGraph.complete(4)
    t = random_tmc(g, rng)
    assert markov.expected_counts(g, t, 6).sum() == pytest.approx(6.0, rel=1e-12)


def test_mle_residual(rng):
    g = TransitionGraph.complete(3)
    t = random_tmc(g, rng)
    E = markov.expected_counts(g, t, 4)
    # a fractional "count" equal to its expectation is a fixed point
    assert np.allclose(markov.mle_residual(g, t, E, 4), 0, atol=1e-12)

    omega = (0, 1, 0, 1, 0)
    obs = markov.transition_count(g, omega)
    r = markov.mle_residual(g, t, obs, 4)
    for k, (i, j) in enumerate(g.transitions):
        if obs.N[i, j] == 0:
            assert r[k] > 0
    with pytest.raises(ValueError):
        markov.mle_residual(g, t, obs, 5)
    with pytest.raises(ValueError):
        markov.mle_residual(g, t, np.zeros((2, 2)), 0)


def test_mle_residual_single_transition():
    g = TransitionGraph(["v"], [], ["v"])
    t = TmcParam.make(g, [[0.7]])
    obs = markov.transition_count(g, ("v",) * 6)
    assert markov.mle_residual(g, t, obs, 5).tolist() == [5.0 - 5]


def test_stationarity_residual(rng):
    g = TransitionGraph.complete(3)
    D = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3], [0.3, 0.2, 0.5]])
    assert np.allclose(markov.stationarity_residual(g, np.ones(3) / 3, D), 0, atol=1e-15)
    P = rng.dirichlet(np.ones(3), size=3)
    pi = markov.stationary_distribution(P)
    assert np.max(np.abs(markov.stationarity_residual(g, pi, P))) < 1e-12
    assert np.max(np.abs(markov.stationarity_residual(g, np.array([0.7, 0.2, 0.1]), P))) > 1e-3
