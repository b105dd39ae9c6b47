from __future__ import annotations

import itertools
from collections import defaultdict

import numpy as np
import pytest

from toricmc import markov
from toricmc.amodel import AModel
from toricmc.reversible import ReversibleParam, reversible_from_params

ISING_COLS = ("+++", "-++", "+-+", "--+", "++-", "-+-", "+--", "---")
ISING_ROWS = (
    (1, 1, 1, 1, 1, 1, 1, 1),
    (0, 1, 0, 1, 0, 1, 0, 1),
    (0, 0, 1, 1, 0, 0, 1, 1),
    (0, 0, 0, 0, 1, 1, 1, 1),
    (0, 1, 1, 0, 0, 1, 1, 0),
    (0, 1, 0, 1, 1, 0, 1, 0),
    (0, 0, 1, 1, 1, 1, 0, 0),
)
ISING_LABELS = ("0", "1", "2", "3", "12", "13", "23")
THREE_WAY = (1, -1, -1, 1, -1, 1, 1, -1)


@pytest.fixture(scope="session")
def ising() -> AModel:
    return AModel(ISING_ROWS, row_labels=ISING_LABELS, col_labels=ISING_COLS)


@pytest.fixture(scope="session")
def no23() -> AModel:
    return AModel(ISING_ROWS[:-1], row_labels=ISING_LABELS[:-1], col_labels=ISING_COLS)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# brute-force oracles


def brute_partition(graph, t, n):
    total = 0.0
    for omega in markov.trajectories(graph, n):
        total += markov.tmc_density(graph, t, omega)
    return total


def brute_expected(graph, t, n):
    V = len(graph)
    E = np.zeros((V, V))
    Z = 0.0
    for omega in markov.trajectories(graph, n):
        q = markov.tmc_density(graph, t, omega)
        Z += q
        E += q * markov.transition_count(graph, omega).N
    return E / Z


def brute_conditionals(graph, t, n):
    """``{(k, history, w): P(X_k = w | X_0..X_{k-1} = history)}`` over Omega_n."""
    prefix = defaultdict(float)
    for omega in markov.trajectories(graph, n):
        q = markov.tmc_density(graph, t, omega)
        idx = tuple(graph.index[v] for v in omega)
        for k in range(1, n + 2):
            prefix[idx[:k]] += q
    out = {}
    for h, mass in prefix.items():
        if 1 < len(h):
            out[(len(h) - 1, h[:-1], h[-1])] = mass / prefix[h[:-1]]
    return out


def random_tmc(graph, rng, low=0.2, high=2.0):
    V = len(graph)
    T = np.where(graph.mask, rng.uniform(low, high, (V, V)), 0.0)
    return markov.TmcParam.make(graph, T, rng.uniform(low, high, V), rng.uniform(0.5, 2.0))


def random_symmetric_graph(rng, V, p=0.6, loops=True, triangle=False):
    """Connected graph with symmetric arcs; optionally forces the triangle 0-1-2."""
    while True:
        edges = {(i, j) for i, j in itertools.combinations(range(V), 2) if rng.random() < p}
        if triangle and V >= 3:
            edges |= {(0, 1), (1, 2), (0, 2)}
        arcs = [(i, j) for i, j in edges] + [(j, i) for i, j in edges]
        try:
            return markov.TransitionGraph(range(V), arcs, range(V) if loops else [])
        except ValueError:
            continue


def random_reversible(rng, graph, n_cuts=None):
    """Random reversible kernel on ``graph`` via the cut parameterization."""
    V = len(graph)
    off = graph.mask & ~np.eye(V, dtype=bool)
    deg = max(1, int(off.sum(axis=1).max()))
    s = np.triu(rng.uniform(0.2, 1.0, (V, V)) / (2.0 * deg), 1)
    s = np.where(off, s + s.T, 0.0)
    rp = ReversibleParam.make(s, rng.uniform(0.8, 1.25, V - 1))
    P, kappa = reversible_from_params(graph, rp)
    return rp, P, kappa


# ---------------------------------------------------------------------------
# acceptance report: one PASS/FAIL line per criterion after the run

CRITERIA = {f"C{i}": [] for i in range(1, 13)}
NOTES: dict[str, list[str]] = {k: [] for k in CRITERIA}


def note(criterion: str, text: str) -> None:
    NOTES[criterion].append(text)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when not in ("setup", "call"):
        return
    crit = marker.args[0]
    if rep.when == "setup" and rep.passed:
        return
    if hasattr(rep, "wasxfail"):
        CRITERIA[crit].append((item.name, False, f"expected failure: {rep.wasxfail}"))
    else:
        CRITERIA[crit].append((item.name, rep.passed, "" if rep.passed else "assertion failed"))


def pytest_terminal_summary(terminalreporter):
    if not any(CRITERIA.values()):
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, results in CRITERIA.items():
        if not results:
            continue
        ok = all(passed for _, passed, _ in results)
        failed = [f"{name} ({why})" for name, passed, why in results if not passed]
        line = f"{'PASS' if ok else 'FAIL'} {crit}"
        extra = failed + NOTES[crit]
        if extra:
            line += ": " + "; ".join(extra)
        tr.write_line(line)
