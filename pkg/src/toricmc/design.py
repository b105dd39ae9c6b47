"""Designs, monomial bases and moments via the Euler operators ``t_i d/dt_i``.

A design is the image of an A-model under its sufficient statistics: the
columns of ``A`` without the constant row. Polynomials on a design are sparse
maps ``exponent -> Fraction`` and all algebra on them is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .amodel import AModel, Binomial, density
from .errors import DuplicateColumns, NonPositiveParameter, PointNotInDesign
from .lattice import IntVector, rational_row_echelon

Exponent = tuple[int, ...]


@dataclass(frozen=True)
class Design:
    points: tuple[IntVector, ...]
    weights: tuple[Fraction, ...]
    var_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise DuplicateColumns("design points must be distinct")
        if len(self.weights) != len(self.points):
            raise ValueError("one weight per design point is required")
        if any(w <= 0 for w in self.weights):
            raise ValueError("design weights must be positive")
        if not self.var_names:
            m = len(self.points[0]) if self.points else 0
            object.__setattr__(self, "var_names", tuple(f"x{i + 1}" for i in range(m)))

    @property
    def dim(self) -> int:
        return len(self.var_names)

    def index(self, a: Sequence[int]) -> int:
        try:
            return self.points.index(tuple(a))
        except ValueError:
            raise PointNotInDesign(f"{tuple(a)} is not a design point") from None


class Poly:
    """Sparse polynomial with rational coefficients, keyed by exponent tuples."""

    __slots__ = ("terms", "nvars")

    def __init__(self, terms: Mapping[Exponent, object] | None = None, nvars: int | None = None):
        clean: dict[Exponent, Fraction] = {}
        for alpha, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                clean[tuple(alpha)] = c
        if nvars is None:
            if not clean:
                raise ValueError("nvars is required for the zero polynomial")
            nvars = len(next(iter(clean)))
        self.terms = clean
        self.nvars = nvars

    @classmethod
    def monomial(cls, alpha: Sequence[int], coef=1) -> "Poly":
        return cls({tuple(alpha): coef}, len(alpha))

    @classmethod
    def constant(cls, c, nvars: int) -> "Poly":
        return cls({(0,) * nvars: c}, nvars)

    def __call__(self, x: Sequence) -> Fraction:
        total = Fraction(0)
        for alpha, c in self.terms.items():
            term = c
            for xi, a in zip(x, alpha):
                if a:
                    term *= Fraction(xi) ** a
            total += term
        return total

    def __add__(self, other: "Poly") -> "Poly":
        terms = dict(self.terms)
        for alpha, c in other.terms.items():
            terms[alpha] = terms.get(alpha, 0) + c
        return Poly(terms, self.nvars)

    def __eq__(self, other) -> bool:
        return isinstance(other, Poly) and self.terms == other.terms and self.nvars == other.nvars

    def __repr__(self) -> str:
        return f"Poly({self.terms!r})"

    def format(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for alpha, c in sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), kv[0])):
            mono = "*".join(n + (f"^{a}" if a > 1 else "") for n, a in zip(names, alpha) if a)
            parts.append(f"{c}" if not mono else (mono if c == 1 else f"{c}*{mono}"))
        return " + ".join(parts).replace("+ -", "- ")


# the polynomial on a design and Z(t) share the representation
PolyOnDesign = Poly
PartitionPoly = Poly


def design_of(model: AModel) -> Design:
    """Columns of ``A`` without row 0, weighted by ``mu``."""
    points = tuple(tuple(model.A[i][x] for i in range(1, model.n_params)) for x in range(model.n_points))
    if len(set(points)) != len(points):
        raise DuplicateColumns("model matrix has repeated columns")
    names = tuple(f"x{label}" for label in model.row_labels[1:])
    return Design(points, model.mu, names)


def partition_poly(d: Design) -> PartitionPoly:
    """``Z(t) = sum_x mu(x) t^x``."""
    return Poly(dict(zip(d.points, d.weights)), d.dim)


# ---------------------------------------------------------------------------
# Buchberger-Moeller


def degrevlex_key(var_order: Sequence[int]):
    """Sort key for degree-reverse-lexicographic order.

    ``var_order`` lists variable indices from the largest variable to the
    smallest.
    """
    rev = list(reversed(var_order))

    def key(alpha: Exponent):
        return (sum(alpha), tuple(-alpha[i] for i in rev))

    return key


def _divides(a: Exponent, b: Exponent) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _evaluate_monomial(alpha: Exponent, p: Sequence[int]) -> int:
    out = 1
    for x, a in zip(p, alpha):
        if a:
            out *= x**a
    return out


def monomial_basis(d: Design, var_order: Sequence[int] | None = None) -> list[Exponent]:
    """Standard monomials of the vanishing ideal of ``d`` (Buchberger-Moeller).

    Monomials are visited in increasing degrevlex order; a monomial joins the
    basis when its evaluation vector is independent of those already
    accepted, and otherwise becomes a leading term whose multiples are
    skipped. Exact rational elimination throughout.
    """
    m = d.dim
    order = list(range(m)) if var_order is None else list(var_order)
    if sorted(order) != list(range(m)):
        raise ValueError("var_order must be a permutation of the variable indices")
    key = degrevlex_key(order)

    basis: list[Exponent] = []
    leading: list[Exponent] = []
    echelon: list[tuple[int, list[Fraction]]] = []
    candidates = {(0,) * m}
    while candidates and len(basis) < len(d.points):
        alpha = min(candidates, key=key)
        candidates.remove(alpha)
        if any(_divides(lt, alpha) for lt in leading):
            continue
        vec = [Fraction(_evaluate_monomial(alpha, p)) for p in d.points]
        for piv, row in echelon:
            if vec[piv]:
                f = vec[piv] / row[piv]
                vec = [a - f * b for a, b in zip(vec, row)]
        piv = next((i for i, v in enumerate(vec) if v), None)
        if piv is None:
            leading.append(alpha)
            continue
        echelon.append((piv, vec))
        basis.append(alpha)
        for i in range(m):
            nxt = alpha[:i] + (alpha[i] + 1,) + alpha[i + 1 :]
            if nxt not in basis:
                candidates.add(nxt)
    return basis


def evaluation_matrix(d: Design, basis: Sequence[Exponent]) -> list[list[int]]:
    """Rows indexed by design points, columns by basis monomials."""
    return [[_evaluate_monomial(alpha, p) for alpha in basis] for p in d.points]


def indicator_polys(d: Design, var_order: Sequence[int] | None = None) -> list[PolyOnDesign]:
    """Indicator polynomial of every design point, reduced to the monomial basis."""
    basis = monomial_basis(d, var_order)
    V = evaluation_matrix(d, basis)
    N = len(basis)
    # Gauss-Jordan on [V | I]; column a of V^{-1} solves V c = e_a
    aug = [list(row) + [int(i == j) for j in range(N)] for i, row in enumerate(V)]
    R, pivots = rational_row_echelon(aug)
    if pivots[:N] != list(range(N)):
        raise ArithmeticError("evaluation matrix is singular")
    inv = [row[N:] for row in R]
    return [Poly({basis[k]: inv[k][a] for k in range(N)}, d.dim) for a in range(N)]


def indicator_poly(d: Design, a: Sequence[int], var_order: Sequence[int] | None = None) -> PolyOnDesign:
    """``f_a`` with ``f_a(b) = [a == b]`` on the design."""
    return indicator_polys(d, var_order)[d.index(a)]


# ---------------------------------------------------------------------------
# Euler operators


def _euler(Z: Poly, i: int) -> Poly:
    # t_i * d/dt_i, as multiplication after differentiation
    deriv: dict[Exponent, Fraction] = {}
    for x, c in Z.terms.items():
        if x[i]:
            lowered = x[:i] + (x[i] - 1,) + x[i + 1 :]
            deriv[lowered] = deriv.get(lowered, 0) + c * x[i]
    return Poly({x[:i] + (x[i] + 1,) + x[i + 1 :]: c for x, c in deriv.items()}, Z.nvars)


def apply_operator(f: PolyOnDesign, Z: PartitionPoly) -> PartitionPoly:
    """Action of ``f(t_1 d_1, ..., t_m d_m)`` on the polynomial ``Z``.

    Each monomial ``x^alpha`` of ``f`` is applied as the composition of
    ``alpha_i`` Euler operators per variable. On a term ``mu t^x`` the result
    is ``f(x) mu t^x``.
    """
    if f.nvars != Z.nvars:
        raise ValueError("operator and polynomial have different numbers of variables")
    out = Poly(nvars=Z.nvars)
    for alpha, c in f.terms.items():
        term = Z
        for i, a in enumerate(alpha):
            for _ in range(a):
                term = _euler(term, i)
        out = out + Poly({x: c * v for x, v in term.terms.items()}, Z.nvars)
    return out


def weighted_sum(f: PolyOnDesign, d: Design, t: Sequence) -> Fraction:
    """``sum_x f(x) t^x mu(x)`` evaluated directly (no operators)."""
    return sum(
        (f(x) * Fraction(mu) * _eval_power(t, x) for x, mu in zip(d.points, d.weights)),
        Fraction(0),
    )


def _eval_power(t: Sequence, x: Sequence[int]):
    out = 1
    for ti, xi in zip(t, x):
        if xi:
            out = out * ti**xi
    return out


def evaluate(Z: Poly, t: Sequence):
    """Evaluate a sparse polynomial at ``t`` (floats or Fractions)."""
    return sum((c * _eval_power(t, x) for x, c in Z.terms.items()), Fraction(0) if _exact(t) else 0.0)


def _exact(t: Sequence) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in t)


def _float_poly_eval(Z: Poly, t: np.ndarray) -> float:
    return float(sum(float(c) * float(np.prod(t ** np.array(x, dtype=float))) for x, c in Z.terms.items()))


def moment(model: AModel, t: Sequence[float], alpha: Sequence[int]) -> float:
    """``E_t[X^alpha]`` as ``(prod (t_i d_i)^alpha_i Z)(t) / Z(t)``.

    ``t`` is a full parameter point ``(t_0, ..., t_m)``; ``t_0`` cancels.
    """
    t = np.asarray(t, dtype=float)
    if t.shape != (model.n_params,):
        raise ValueError(f"parameter vector must have length {model.n_params}")
    if np.any(t <= 0):
        raise NonPositiveParameter("moments need strictly positive parameters")
    d = design_of(model)
    if len(alpha) != d.dim:
        raise ValueError(f"alpha must have length {d.dim}")
    Z = partition_poly(d)
    num = apply_operator(Poly.monomial(alpha), Z)
    return _float_poly_eval(num, t[1:]) / _float_poly_eval(Z, t[1:])


def moment_direct(model: AModel, t: Sequence[float], alpha: Sequence[int]) -> float:
    """``sum_x x^alpha p(x; t) mu(x)`` from the normalized density."""
    p = density(model, t)
    d = design_of(model)
    xa = np.array([_evaluate_monomial(tuple(alpha), x) for x in d.points], dtype=float)
    return float(np.sum(xa * p.probabilities))


def toric_moment_identity(model: AModel, t: Sequence[float], binomial: Binomial) -> float:
    """Relative residual of ``binomial`` at ``(A(f_a) Z(t) / mu(a))_a``.

    ``A(f_a) Z(t) = mu(a) t^a``, so dividing by ``mu(a)`` recovers the
    monomials ``t^a`` on which toric-ideal binomials vanish.
    """
    t = np.asarray(t, dtype=float)
    d = design_of(model)
    Z = partition_poly(d)
    values = [
        _float_poly_eval(apply_operator(f, Z), t[1:]) / float(mu)
        for f, mu in zip(indicator_polys(d), d.weights)
    ]
    left, right = binomial.evaluate(values)
    return float(abs(left - right) / max(1.0, abs(left), abs(right)))
