"""Exact integer linear algebra and lattice-point enumeration.

Everything here works on plain Python ``int`` (arbitrary precision) and
``fractions.Fraction``; no floating point is used anywhere in this module.
Matrices are sequences of rows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .errors import EnumerationBudgetExceeded

IntVector = tuple[int, ...]
IntMatrix = tuple[IntVector, ...]

DEFAULT_MAX_CANDIDATES = 10**6
DEFAULT_MAX_GRAVER_DIM = 24


def default_budget() -> int:
    """Candidate cap, overridable through ``TORICMC_MAX_CANDIDATES``."""
    value = os.environ.get("TORICMC_MAX_CANDIDATES")
    return int(value) if value else DEFAULT_MAX_CANDIDATES


def as_int_matrix(M: Iterable[Iterable[int]]) -> IntMatrix:
    rows = tuple(tuple(_as_int(x) for x in row) for row in M)
    if not rows or not rows[0]:
        raise ValueError("matrix must be nonempty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix")
    return rows


def _as_int(x) -> int:
    if isinstance(x, bool):
        return int(x)
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x)
    if float(x) != int(x):
        raise ValueError(f"non-integer entry {x!r}")
    return int(x)


def transpose(M: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*M)]


def mat_vec(M: Sequence[Sequence[int]], v: Sequence[int]) -> IntVector:
    return tuple(sum(a * b for a, b in zip(row, v)) for row in M)


def mat_mul(A: Sequence[Sequence], B: Sequence[Sequence]) -> list[list]:
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


@dataclass(frozen=True)
class LatticeBasis:
    """Linearly independent integer vectors spanning a lattice in Z^ambient_dim."""

    ambient_dim: int
    vectors: tuple[IntVector, ...]

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


@dataclass(frozen=True)
class HilbertBasis:
    """Minimal generating set of a pointed monoid inside the nonnegative orthant."""

    ambient_dim: int
    vectors: tuple[IntVector, ...]

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


# ---------------------------------------------------------------------------
# Hermite normal form and kernels


def hermite_normal_form(M: Iterable[Iterable[int]]) -> tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U`` unimodular and ``U @ M == H``. Nonzero rows
    of ``H`` come first, each pivot is positive and the entries above a pivot
    lie in ``[0, pivot)``.
    """
    A = [list(r) for r in as_int_matrix(M)]
    m, n = len(A), len(A[0])
    U = [[int(i == j) for j in range(m)] for i in range(m)]

    def sub(i: int, k: int, q: int) -> None:
        if q:
            Ai, Ak, Ui, Uk = A[i], A[k], U[i], U[k]
            for j in range(n):
                Ai[j] -= q * Ak[j]
            for j in range(m):
                Ui[j] -= q * Uk[j]

    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            nonzero = [i for i in range(r, m) if A[i][c]]
            if not nonzero:
                break
            p = min(nonzero, key=lambda i: abs(A[i][c]))
            A[r], A[p] = A[p], A[r]
            U[r], U[p] = U[p], U[r]
            clean = True
            for i in range(r + 1, m):
                if A[i][c]:
                    sub(i, r, A[i][c] // A[r][c])
                    clean = clean and A[i][c] == 0
            if clean:
                break
        if A[r][c] == 0:
            continue
        if A[r][c] < 0:
            A[r] = [-x for x in A[r]]
            U[r] = [-x for x in U[r]]
        for i in range(r):
            sub(i, r, A[i][c] // A[r][c])
        r += 1
    return tuple(map(tuple, A)), tuple(map(tuple, U))


def hnf_rank(H: Sequence[Sequence[int]]) -> int:
    return sum(1 for row in H if any(row))


def integer_kernel_basis(M: Iterable[Iterable[int]]) -> LatticeBasis:
    """Saturated lattice basis of ``{k in Z^cols : M k = 0}``.

    Computed from the unimodular transform of the HNF of ``M^T``; the rows of
    the transform that hit zero rows span the full integer kernel. The result
    is put into HNF (a canonical basis) and sorted lexicographically.
    """
    M = as_int_matrix(M)
    cols = len(M[0])
    H, U = hermite_normal_form(transpose(M))
    rank = hnf_rank(H)
    kernel = U[rank:]
    if not kernel:
        return LatticeBasis(cols, ())
    Hk, _ = hermite_normal_form(kernel)
    vectors = sorted(row for row in Hk if any(row))
    return LatticeBasis(cols, tuple(vectors))


def determinant(M: Sequence[Sequence]) -> Fraction:
    """Exact determinant by fraction-valued elimination."""
    A = [[Fraction(x) for x in row] for row in M]
    n = len(A)
    if any(len(r) != n for r in A):
        raise ValueError("determinant needs a square matrix")
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if A[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            A[c], A[p] = A[p], A[c]
            det = -det
        det *= A[c][c]
        for i in range(c + 1, n):
            f = A[i][c] / A[c][c]
            if f:
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return det


def rational_row_echelon(M: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns (nonzero rows, pivot columns)."""
    A = [[Fraction(x) for x in row] for row in M]
    if not A:
        return [], []
    m, n = len(A), len(A[0])
    pivots: list[int] = []
    r = 0
    for c in range(n):
        p = next((i for i in range(r, m) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        piv = A[r][c]
        A[r] = [x / piv for x in A[r]]
        for i in range(m):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return A[:r], pivots


def rational_rank(M: Sequence[Sequence]) -> int:
    return len(rational_row_echelon(M)[1])


def row_span_contains(M: Sequence[Sequence], v: Sequence) -> bool:
    """Whether ``v`` lies in the rational row span of ``M``."""
    return rational_rank(list(M) + [list(v)]) == rational_rank(M)


def row_spans_equal(A: Sequence[Sequence], B: Sequence[Sequence]) -> bool:
    ra, rb = rational_rank(A), rational_rank(B)
    return ra == rb == rational_rank(list(A) + list(B))


def solve_rational(B: Sequence[Sequence], v: Sequence) -> list[Fraction] | None:
    """Coefficients ``c`` with ``sum c_i B_i == v``, or None if v is outside the span.

    ``B`` must have linearly independent rows.
    """
    if not B:
        return [] if not any(v) else None
    aug = [list(col) + [x] for col, x in zip(transpose(B), v)]
    R, pivots = rational_row_echelon(aug)
    k = len(B)
    if k in pivots:
        return None
    coef = [Fraction(0)] * k
    for row, c in zip(R, pivots):
        coef[c] = row[k]
    return coef


def in_integer_span(basis: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    coef = solve_rational(basis, v)
    return coef is not None and all(c.denominator == 1 for c in coef)


# ---------------------------------------------------------------------------
# Hilbert bases


def hilbert_basis_contejean_devie(
    K: Sequence[Sequence[int]], n: int, max_candidates: int | None = None
) -> HilbertBasis:
    """Hilbert basis of the monoid ``{y in Z_{>=0}^n : K y = 0}``.

    Contejean-Devie completion: starting from the unit vectors, a non-solution
    ``p`` is extended by ``e_j`` only when ``<K p, K e_j> < 0`` and the
    extension does not dominate an already found solution. The minimal
    solutions found this way are exactly the Hilbert basis.

    Breadth-first and therefore slow once basis elements have large degree;
    :func:`hilbert_basis_of_span` goes through the Graver completion instead
    and this routine serves as an independent cross-check.
    """
    budget = default_budget() if max_candidates is None else max_candidates
    K = [list(map(int, row)) for row in K]
    if not K or not any(any(r) for r in K):
        units = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
        return HilbertBasis(n, tuple(sorted(units)))
    images = [tuple(row[j] for row in K) for j in range(n)]

    found: list[IntVector] = []
    frontier: dict[IntVector, IntVector] = {}
    for j in range(n):
        frontier[tuple(int(i == j) for i in range(n))] = images[j]
    generated = len(frontier)

    while frontier:
        pending = []
        for p in sorted(frontier):
            image = frontier[p]
            if any(image):
                pending.append((p, image))
            else:
                found.append(p)
        nxt: dict[IntVector, IntVector] = {}
        for p, image in pending:
            for j in range(n):
                if sum(a * b for a, b in zip(image, images[j])) >= 0:
                    continue
                cand = p[:j] + (p[j] + 1,) + p[j + 1 :]
                if cand in nxt:
                    continue
                if any(all(s <= c for s, c in zip(sol, cand)) for sol in found):
                    continue
                nxt[cand] = tuple(a + b for a, b in zip(image, images[j]))
        generated += len(nxt)
        if generated > budget:
            raise EnumerationBudgetExceeded(
                f"Hilbert basis completion generated {generated} candidates (cap {budget})"
            )
        frontier = nxt

    basis = tuple(sorted(found))
    _check_irreducible(basis)
    return HilbertBasis(n, basis)


def _check_irreducible(vectors: Sequence[IntVector]) -> None:
    # desk-scale check: no element is the sum of two others, nor dominates one
    vs = set(vectors)
    for a, b in combinations(vectors, 2):
        if all(x <= y for x, y in zip(a, b)) or all(y <= x for x, y in zip(a, b)):
            raise AssertionError(f"Hilbert basis not an antichain: {a} vs {b}")
    for a in vectors:
        for b in vectors:
            diff = tuple(x - y for x, y in zip(a, b))
            if diff != a and min(diff) >= 0 and diff in vs:
                raise AssertionError(f"{a} is reducible")


# ---------------------------------------------------------------------------
# Graver bases


def conformal(z1: Sequence[int], z2: Sequence[int]) -> bool:
    """``z1`` is conformal to ``z2``: same orthant and ``|z1| <= |z2|`` entrywise."""
    if len(z1) != len(z2):
        raise ValueError(f"length mismatch: {len(z1)} != {len(z2)}")
    return all(a * b >= 0 and abs(a) <= abs(b) for a, b in zip(z1, z2))


def _normal_form(s: IntVector, G: Sequence[IntVector]) -> IntVector:
    reduced = True
    while reduced and any(s):
        reduced = False
        for g in G:
            if conformal(g, s):
                s = tuple(a - b for a, b in zip(s, g))
                reduced = True
                break
    return s


def _pottier_completion(gens: list[IntVector], budget: int) -> list[IntVector]:
    G: list[IntVector] = []
    seen: set[IntVector] = set()
    for v in gens:
        for w in (v, tuple(-x for x in v)):
            if w not in seen:
                seen.add(w)
                G.append(w)
    pending = [tuple(a + b for a, b in zip(f, g)) for f, g in combinations(G, 2)]
    processed = len(pending)
    while pending:
        s = _normal_form(pending.pop(), G)
        if any(s) and s not in seen:
            seen.add(s)
            pending.extend(tuple(a + b for a, b in zip(s, g)) for g in G)
            processed += len(G)
            G.append(s)
            if processed > budget:
                raise EnumerationBudgetExceeded(
                    f"completion processed {processed} candidates (cap {budget})"
                )
    return [g for g in G if not any(h != g and conformal(h, g) for h in G)]


def graver_basis(
    L: LatticeBasis | Sequence[Sequence[int]],
    max_dim: int = DEFAULT_MAX_GRAVER_DIM,
    max_candidates: int | None = None,
) -> list[IntVector]:
    """All conformal-minimal nonzero elements of the lattice spanned by ``L``.

    Pottier's completion procedure: close ``+-L`` under sums reduced to normal
    form by conformal subtraction, then keep the conformal-minimal elements.
    Both signs of every element are returned, sorted lexicographically.
    """
    if isinstance(L, LatticeBasis):
        dim, gens = L.ambient_dim, list(L.vectors)
    else:
        gens = [tuple(map(int, v)) for v in L]
        dim = len(gens[0]) if gens else 0
    if dim > max_dim:
        raise EnumerationBudgetExceeded(f"ambient dimension {dim} exceeds Graver cap {max_dim}")
    budget = default_budget() if max_candidates is None else max_candidates
    gens = [tuple(v) for v in gens if any(v)]
    if not gens:
        return []
    return sorted(_pottier_completion(gens, budget))


def hilbert_basis_of_span(
    A: Iterable[Iterable[int]], max_candidates: int | None = None
) -> HilbertBasis:
    """Hilbert basis of ``Z_{>=0}^X`` intersected with the rational row span of ``A``.

    A nonnegative integer ``y`` lies in the row span iff ``K y = 0`` for a
    kernel basis ``K`` of ``A``. The ``<=``-minimal nonzero points of that
    monoid are the nonnegative conformal-minimal elements of the saturated
    lattice ``Z^X & RowSpan A``, which the Pottier completion enumerates.
    ``A`` must have a constant first row of ones (pointed cone).
    """
    A = as_int_matrix(A)
    if any(x != 1 for x in A[0]):
        raise ValueError("first row of the model matrix must be constant 1")
    n = len(A[0])
    budget = default_budget() if max_candidates is None else max_candidates
    K = integer_kernel_basis(A).vectors
    if not K:
        units = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
        return HilbertBasis(n, tuple(sorted(units)))
    span_lattice = integer_kernel_basis(K).vectors
    minimal = _pottier_completion(list(span_lattice), budget)
    basis = tuple(sorted(v for v in minimal if min(v) >= 0))
    _check_irreducible(basis)
    return HilbertBasis(n, basis)
