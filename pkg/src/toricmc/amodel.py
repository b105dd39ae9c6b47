"""A-models: monomial densities, identifiability, invariants and closures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import lattice
from .errors import (
    DegenerateParameter,
    EmptySupport,
    NonPositiveParameter,
    SampleSpaceMismatch,
)
from .lattice import IntMatrix, IntVector

DEFAULT_TOL = 1e-9


def _as_fraction(x) -> Fraction:
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # parse the shortest decimal repr so 0.1 means 1/10, not its binary value
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class AModel:
    """Monomial model ``q(x; t) = prod_i t_i ** A[i][x]`` on a finite sample space.

    ``A`` is a nonnegative integer matrix with rows ``0..m`` and one column per
    sample point; row 0 must be identically 1. ``mu`` is the positive
    reference measure (defaults to counting measure).
    """

    A: IntMatrix
    mu: tuple[Fraction, ...] = ()
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()

    def __post_init__(self):
        A = lattice.as_int_matrix(self.A)
        object.__setattr__(self, "A", A)
        n = len(A[0])
        if any(x != 1 for x in A[0]):
            raise ValueError("row 0 of the model matrix must be constant 1")
        if any(x < 0 for row in A for x in row):
            raise ValueError("model matrix entries must be nonnegative")
        mu = tuple(_as_fraction(x) for x in self.mu) if self.mu else (Fraction(1),) * n
        if len(mu) != n:
            raise ValueError(f"mu has {len(mu)} entries, expected {n}")
        if any(x <= 0 for x in mu):
            raise ValueError("reference measure must be strictly positive")
        object.__setattr__(self, "mu", mu)
        rl = tuple(self.row_labels) or tuple(str(i) for i in range(len(A)))
        cl = tuple(self.col_labels) or tuple(str(j) for j in range(n))
        if len(rl) != len(A) or len(cl) != n:
            raise ValueError("label counts do not match the matrix shape")
        object.__setattr__(self, "row_labels", rl)
        object.__setattr__(self, "col_labels", cl)

    @property
    def n_params(self) -> int:
        return len(self.A)

    @property
    def n_points(self) -> int:
        return len(self.A[0])

    @property
    def exponents(self) -> np.ndarray:
        return np.array(self.A, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(m) for m in self.mu])


@dataclass(frozen=True)
class Density:
    """Probability density w.r.t. ``mu``: ``sum(values * mu) == 1``."""

    values: np.ndarray
    mu: np.ndarray
    Z: float

    @property
    def support(self) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.values > 0))

    @property
    def probabilities(self) -> np.ndarray:
        return self.values * self.mu


@dataclass(frozen=True)
class Binomial:
    """``prod v**plus - prod v**minus`` with disjointly supported exponents."""

    plus: IntVector
    minus: IntVector

    def __post_init__(self):
        if len(self.plus) != len(self.minus):
            raise ValueError("exponent vectors differ in length")
        if any(a < 0 or b < 0 for a, b in zip(self.plus, self.minus)):
            raise ValueError("exponents must be nonnegative")
        if any(a and b for a, b in zip(self.plus, self.minus)):
            raise ValueError("plus and minus exponents must have disjoint supports")

    @classmethod
    def from_vector(cls, k: Sequence[int]) -> "Binomial":
        return cls(tuple(max(x, 0) for x in k), tuple(max(-x, 0) for x in k))

    @property
    def vector(self) -> IntVector:
        return tuple(a - b for a, b in zip(self.plus, self.minus))

    @property
    def is_homogeneous(self) -> bool:
        return sum(self.plus) == sum(self.minus)

    def evaluate(self, values: Sequence) -> tuple:
        """Both monomials evaluated at ``values``."""
        if len(values) != len(self.plus):
            raise ValueError(f"length mismatch: {len(values)} != {len(self.plus)}")
        left = right = 1
        for v, a, b in zip(values, self.plus, self.minus):
            if a:
                left = left * v**a
            if b:
                right = right * v**b
        return left, right

    def __str__(self) -> str:
        def mono(exps):
            parts = [f"q({i})" + (f"^{e}" if e > 1 else "") for i, e in enumerate(exps) if e]
            return "*".join(parts) or "1"

        return f"{mono(self.plus)} - {mono(self.minus)}"


# ---------------------------------------------------------------------------
# densities


def _check_t(model: AModel, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape != (model.n_params,):
        raise ValueError(f"parameter vector must have length {model.n_params}, got {t.shape}")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("parameters must be finite and nonnegative")
    return t


def unnormalized_density(model: AModel, t) -> np.ndarray:
    """``q(x; t) = t ** A(x)`` with ``0 ** 0 == 1``."""
    t = _check_t(model, t)
    q = np.prod(t[:, None] ** model.exponents, axis=0)
    if not np.any(q > 0):
        raise DegenerateParameter("q(.; t) is identically zero")
    return q


def density(model: AModel, t) -> Density:
    q = unnormalized_density(model, t)
    mu = model.weights
    Z = float(q @ mu)
    return Density(q / Z, mu, Z)


def densities_close(p: Density, r: Density, tol: float = DEFAULT_TOL) -> bool:
    """Relative sup-norm comparison of two densities."""
    scale = max(1.0, float(np.max(np.abs(p.values))), float(np.max(np.abs(r.values))))
    return float(np.max(np.abs(p.values - r.values))) <= tol * scale


def _positive(t, name: str) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise NonPositiveParameter(f"{name} must be strictly positive")
    return t


def confounding_criterion(model: AModel, s, t, tol: float = DEFAULT_TOL) -> bool:
    """Linear-algebra test: ``log(t/s)`` lies in ``span(e_0) + ker A^T``.

    The left kernel of ``A`` is computed exactly; the log-ratio is projected
    onto ``span(e_0, ker A^T)`` by least squares and the residual compared to
    ``tol``. No division by ``log Z(t) - log Z(s)`` is needed, so the case
    ``Z(t) == Z(s)`` is not special.
    """
    s = _positive(_check_t(model, s), "s")
    t = _positive(_check_t(model, t), "t")
    d = np.log(t) - np.log(s)
    left_kernel = lattice.integer_kernel_basis(lattice.transpose(model.A)).vectors
    e0 = np.zeros(model.n_params)
    e0[0] = 1.0
    basis = np.column_stack([e0] + [np.array(u, dtype=float) for u in left_kernel])
    coef, *_ = np.linalg.lstsq(basis, d, rcond=None)
    residual = float(np.max(np.abs(basis @ coef - d)))
    return residual <= tol * max(1.0, float(np.max(np.abs(d))))


def confounded(model: AModel, s, t, tol: float = DEFAULT_TOL) -> bool:
    """Whether ``s`` and ``t`` give the same density.

    Decided by direct comparison of the densities and by
    :func:`confounding_criterion`; a disagreement raises ``ArithmeticError``.
    """
    direct = densities_close(density(model, _positive(s, "s")), density(model, _positive(t, "t")), tol)
    algebraic = confounding_criterion(model, s, t, tol)
    if direct != algebraic:
        raise ArithmeticError(
            f"direct comparison ({direct}) and log-linear criterion ({algebraic}) disagree; "
            "parameters are too close to the tolerance boundary"
        )
    return direct


def models_equivalent(a: AModel, b: AModel) -> bool:
    """Interiors coincide iff the rational row spans coincide."""
    if a.n_points != b.n_points or a.mu != b.mu:
        raise SampleSpaceMismatch("models live on different sample spaces or measures")
    return lattice.row_spans_equal(a.A, b.A)


# ---------------------------------------------------------------------------
# invariants


def invariants_from_kernel(model: AModel) -> list[Binomial]:
    """One binomial per vector of a saturated integer kernel basis of ``A``."""
    return [Binomial.from_vector(k) for k in lattice.integer_kernel_basis(model.A)]


def check_invariant(b: Binomial, values: Sequence[float], tol: float = DEFAULT_TOL) -> bool:
    left, right = b.evaluate(values)
    return abs(left - right) <= tol * max(1.0, abs(left), abs(right))


# ---------------------------------------------------------------------------
# closure and faces


def closure_model(model: AModel, max_candidates: int | None = None) -> AModel:
    """The H-model: rows are the Hilbert basis of ``Z_{>=0}^X & RowSpan A``.

    The all-ones row is put first (moved there when it belongs to the Hilbert
    basis, prepended otherwise), so row 0 keeps its role as ``t_0``.
    """
    hb = lattice.hilbert_basis_of_span(model.A, max_candidates)
    ones = (1,) * model.n_points
    rest = [v for v in hb.vectors if v != ones]
    rows = (ones,) + tuple(rest)
    labels = ("0",) + tuple(f"h{i + 1}" for i in range(len(rest)))
    H = AModel(rows, model.mu, labels, model.col_labels)
    if not models_equivalent(model, H):
        raise AssertionError("closure model does not span the same row space")
    return H


def face_submodel(hmodel: AModel, zero_rows: Iterable[int]) -> tuple[frozenset[int], AModel]:
    """Limit model obtained by setting the parameters of ``zero_rows`` to 0.

    Returns the support ``{x : H_j(x) = 0 for j in zero_rows}`` (column
    indices of ``hmodel``) and the model restricted to it, with the zeroed
    rows deleted.
    """
    zero_rows = frozenset(int(j) for j in zero_rows)
    if not zero_rows:
        raise ValueError("zero_rows must be nonempty")
    if 0 in zero_rows:
        raise ValueError("row 0 (the constant) cannot be set to zero")
    if max(zero_rows) >= hmodel.n_params:
        raise ValueError("row index out of range")
    support = [x for x in range(hmodel.n_points) if all(hmodel.A[j][x] == 0 for j in zero_rows)]
    if not support:
        raise EmptySupport(f"setting rows {sorted(zero_rows)} to zero kills every sample point")
    keep = [i for i in range(hmodel.n_params) if i not in zero_rows]
    sub = AModel(
        tuple(tuple(hmodel.A[i][x] for x in support) for i in keep),
        tuple(hmodel.mu[x] for x in support),
        tuple(hmodel.row_labels[i] for i in keep),
        tuple(hmodel.col_labels[x] for x in support),
    )
    return frozenset(support), sub


def limit_is_conditional(
    model: AModel,
    hmodel: AModel,
    zero_rows: Iterable[int],
    t_sequence: Sequence[Sequence[float]],
    tol: float = 1e-6,
) -> bool:
    """Numerically verify that the H-model densities along ``t_sequence``
    approach the face submodel density.

    The selected coordinates of ``t_sequence`` must go to zero; the remaining
    coordinates of the last point parameterize the limit. Also checks that
    the face density equals the H-model density conditioned on the support.
    """
    if not models_equivalent(model, hmodel):
        raise ValueError("hmodel is not interior-equivalent to model")
    zero_rows = frozenset(zero_rows)
    support, sub = face_submodel(hmodel, zero_rows)
    last = np.asarray(t_sequence[-1], dtype=float)
    keep = [i for i in range(hmodel.n_params) if i not in zero_rows]
    limit = np.zeros(hmodel.n_points)
    idx = sorted(support)
    limit[idx] = density(sub, last[keep]).values

    errors = [float(np.max(np.abs(density(hmodel, t).values - limit))) for t in t_sequence]
    if errors[-1] > tol or errors[-1] > errors[0] + tol:
        return False

    # conditioning the interior H-model at the same remaining parameters
    inner = last.copy()
    inner[list(zero_rows)] = 1.0
    p = density(hmodel, inner)
    cond = np.zeros(hmodel.n_points)
    cond[idx] = p.values[idx] / float(p.values[idx] @ p.mu[idx])
    return bool(np.max(np.abs(cond - limit)) <= tol)


def fit_closure_point(hmodel: AModel, v: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """Parameters ``t >= 0`` of the H-model reproducing the density ``v``.

    Rows vanishing on the support of ``v`` get ``t_j = 0``; the others are
    fitted by least squares on ``log v`` over the support.
    """
    v = np.asarray(v, dtype=float)
    support = v > tol
    H = hmodel.exponents
    zeroed = [j for j in range(1, hmodel.n_params) if not np.any(H[j, support] > 0)]
    free = [j for j in range(hmodel.n_params) if j not in zeroed]
    beta, *_ = np.linalg.lstsq(H[np.ix_(free, np.flatnonzero(support))].T, np.log(v[support]), rcond=None)
    t = np.zeros(hmodel.n_params)
    t[free] = np.exp(beta)
    return t


def constraint_residual(model: AModel, C: Sequence[Sequence[float]], t) -> np.ndarray:
    """``(sum_x C_i(x) q(x; t))_i`` for the linear constraints ``C``."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[1] != model.n_points:
        raise ValueError(f"constraint matrix must have {model.n_points} columns")
    return C @ unnormalized_density(model, t)


@dataclass
class FaceResidual:
    zero_row: int
    support: frozenset[int]
    residual: np.ndarray = field(repr=False)

    @property
    def satisfied(self) -> bool:
        return bool(np.all(np.abs(self.residual) <= DEFAULT_TOL))


def constrained_face_scan(hmodel: AModel, C: Sequence[Sequence[float]], t) -> list[FaceResidual]:
    """Constraint residuals on every single-row face ``{t_j = 0}`` of the H-model.

    ``t`` supplies the values of the parameters that stay free.
    """
    t = _check_t(hmodel, t)
    out = []
    for j in range(1, hmodel.n_params):
        try:
            support, _ = face_submodel(hmodel, {j})
        except EmptySupport:
            continue
        tj = t.copy()
        tj[j] = 0.0
        out.append(FaceResidual(j, support, constraint_residual(hmodel, C, tj)))
    return out


def log_linear_parameters(model: AModel, t) -> np.ndarray:
    """``beta = log t`` for strictly positive ``t``."""
    return np.log(_positive(_check_t(model, t), "t"))


def binomial_model(n: int) -> AModel:
    """The Binomial(n, p) A-model with ``mu(x) = C(n, x)``."""
    return AModel(
        ((1,) * (n + 1), tuple(range(n + 1))),
        tuple(math.comb(n, x) for x in range(n + 1)),
    )
