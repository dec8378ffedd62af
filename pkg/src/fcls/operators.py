"""Affine iteration operators x -> M x + N b and their certification.

Each solver method contributes one full update step written as an affine
map: `step_matrix` acts on the current iterate and `data_matrix` on the
right-hand side.  The validator certifies the structural properties every
method relies on:

  splitting      step_matrix + data_matrix @ a = I
  range          every column of data_matrix lies in the row space of a
  contraction    the restriction of step_matrix to the row space has
                 spectral norm strictly below 1
  null fix       step_matrix is the identity on the null space of a, and
                 strictly shrinks every direction in the row space
  norm           the spectral norm of step_matrix is at most 1
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, ValidationError
from .linalg import (
    as_matrix,
    as_vector,
    null_space_projector,
    pseudoinverse,
    row_space_projector,
    spectral_norm,
    svd,
)

SPLITTING_TOL = 1e-10  # relative to 1 + |a|_F
RANGE_TOL = 1e-10
CONTRACTION_MAX = 1.0 - 1e-8
NULL_FIX_TOL = 1e-10
NORM_MAX = 1.0 + 1e-12


@dataclass(frozen=True, eq=False)
class AffineOperator:
    """One full update step x -> step_matrix @ x + data_matrix @ b."""

    step_matrix: np.ndarray  # (n, n)
    data_matrix: np.ndarray  # (n, m)
    label: str = ""

    def __post_init__(self):
        t = self.step_matrix
        r = self.data_matrix
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValidationError(f"step_matrix must be square, got {t.shape}")
        if r.ndim != 2 or r.shape[0] != t.shape[0]:
            raise ValidationError(
                f"data_matrix rows must match step_matrix size, got {r.shape} vs {t.shape}"
            )

    @property
    def n(self) -> int:
        return self.step_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.data_matrix.shape[1]

    def apply(self, x: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Two matrix-vector products and one addition, nothing else."""
        return self.step_matrix @ x + self.data_matrix @ b


@dataclass(frozen=True, eq=False)
class OperatorSchedule:
    """Operator family indexed 0, 1, 2, ... with the last member repeated.

    Family member k is the map that produces iterate k from iterate k-1;
    member 0 belongs to the family but is never applied by the drivers.
    """

    operators: tuple[AffineOperator, ...]

    def __post_init__(self):
        if not self.operators:
            raise ValidationError("schedule needs at least one operator")
        n = self.operators[0].n
        m = self.operators[0].m
        for i, q in enumerate(self.operators):
            if q.n != n or q.m != m:
                raise ValidationError(f"operator {i} has mismatched shape")

    def at(self, k: int) -> AffineOperator:
        return self.operators[k] if k < len(self.operators) else self.operators[-1]

    def __len__(self) -> int:
        return len(self.operators)

    @property
    def n(self) -> int:
        return self.operators[0].n

    @property
    def m(self) -> int:
        return self.operators[0].m


def build_kaczmarz(a, relaxation: float = 1.0) -> AffineOperator:
    """One relaxed Kaczmarz sweep over all rows, ascending, as an affine map.

    Row step i replaces x by x + relaxation * (b_i - <a_i, x>) / |a_i|^2 a_i;
    with relaxation 1 this is the exact projection onto the i-th hyperplane.
    The sweep is the composition of the m row steps.
    """
    a = as_matrix(a)
    if not 0.0 < relaxation < 2.0:
        raise ConstructionError(f"relaxation must lie in (0, 2), got {relaxation}")
    m, n = a.shape
    t = np.eye(n)
    r = np.zeros((n, m))
    for i in range(m):
        row = a[i]
        nrm2 = float(row @ row)
        if nrm2 == 0.0:
            raise ConstructionError(f"row {i} of the matrix is zero")
        step_i = np.eye(n) - (relaxation / nrm2) * np.outer(row, row)
        t = step_i @ t
        r = step_i @ r
        r[:, i] += (relaxation / nrm2) * row
    return AffineOperator(step_matrix=t, data_matrix=r, label=f"kaczmarz(relaxation={relaxation})")


def build_diagonal_weighting(a, diag, omega: float = 1.0) -> AffineOperator:
    """Simultaneous update with a free positive row weighting.

    step_matrix = I - omega a^T D a, data_matrix = omega a^T D with
    D = diag(diag).  The result must pass validate_properties, otherwise
    construction fails naming the first failing check.
    """
    a = as_matrix(a)
    m, n = a.shape
    d = as_vector(diag, n=m, name="diag")
    if (d <= 0.0).any():
        bad = int(np.argmin(d))
        raise ConstructionError(f"diagonal entry {bad} is not positive: {d[bad]}")
    if omega <= 0.0:
        raise ConstructionError(f"omega must be positive, got {omega}")
    atd = a.T * d  # (n, m), column i scaled by d_i
    t = np.eye(n) - omega * (atd @ a)
    r = omega * atd
    q = AffineOperator(step_matrix=t, data_matrix=r, label=f"diagonal_weighting(omega={omega})")
    report = validate_properties(q, a)
    if not report.ok:
        raise ConstructionError(
            f"diagonal weighting violates '{report.first_failure}': {report}"
        )
    return q


def build_cimmino(a, omega: float = 1.0, weights=None) -> AffineOperator:
    """Simultaneous row-projection update with convex row weights.

    Equivalent to diagonal weighting with D = diag(w_i / |a_i|^2); the
    default takes w_i = 1/m.
    """
    a = as_matrix(a)
    m = a.shape[0]
    if weights is None:
        w = np.full(m, 1.0 / m)
    else:
        w = as_vector(weights, n=m, name="weights")
        if (w <= 0.0).any():
            bad = int(np.argmin(w))
            raise ConstructionError(f"weight {bad} is not positive: {w[bad]}")
        if abs(float(w.sum()) - 1.0) > 1e-10:
            raise ConstructionError(f"weights must sum to 1, got {w.sum()!r}")
    row_nrm2 = np.einsum("ij,ij->i", a, a)
    if (row_nrm2 == 0.0).any():
        raise ConstructionError(f"row {int(np.argmin(row_nrm2))} of the matrix is zero")
    q = build_diagonal_weighting(a, w / row_nrm2, omega=omega)
    return AffineOperator(
        step_matrix=q.step_matrix, data_matrix=q.data_matrix, label=f"cimmino(omega={omega})"
    )


def build_landweber_schedule(a, omegas=()) -> OperatorSchedule:
    """Gradient-type schedule: member k is I - omegas[k] a^T a / omegas[k] a^T.

    Every step size must satisfy 0 < eps <= omega_k <= 2 / rho(a)^2 - eps for
    some eps > 0, i.e. lie strictly inside (0, 2 / rho(a)^2).  An empty
    `omegas` yields the single terminal member with omega = 1 / rho(a)^2.
    """
    a = as_matrix(a)
    rho = spectral_norm(a)
    if rho == 0.0:
        raise ConstructionError("matrix has spectral norm 0, no valid step size exists")
    upper = 2.0 / rho**2
    omegas = tuple(float(w) for w in omegas)
    if not omegas:
        omegas = (1.0 / rho**2,)
    ops = []
    for k, w in enumerate(omegas):
        if not 0.0 < w < upper:
            raise ConstructionError(
                f"omega[{k}]={w} violates 0 < eps <= omega_k <= 2/rho(a)^2 - eps "
                f"(admissible open interval (0, {upper}))"
            )
        t = np.eye(a.shape[1]) - w * (a.T @ a)
        r = w * a.T
        q = AffineOperator(step_matrix=t, data_matrix=r, label=f"landweber(omega={w})")
        report = validate_properties(q, a)
        if not report.ok:
            raise ConstructionError(
                f"landweber member {k} violates '{report.first_failure}': {report}"
            )
        ops.append(q)
    return OperatorSchedule(operators=tuple(ops))


@dataclass(frozen=True)
class PropertyReport:
    """Numerical certificates for one affine operator against one matrix."""

    splitting_defect: float
    range_defect: float
    contraction_norm: float
    null_fix_defect: float
    shrink_max: float
    operator_norm: float
    scale: float  # 1 + |a|_F, the splitting tolerance reference
    passed: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    @property
    def first_failure(self) -> str | None:
        for name, good in self.passed.items():
            if not good:
                return name
        return None

    def __str__(self) -> str:
        marks = {True: "pass", False: "FAIL"}
        parts = [
            f"splitting={self.splitting_defect:.3e} [{marks[self.passed['splitting']]}]",
            f"range={self.range_defect:.3e} [{marks[self.passed['range']]}]",
            f"contraction={self.contraction_norm:.10f} [{marks[self.passed['contraction']]}]",
            f"null_fix={self.null_fix_defect:.3e} [{marks[self.passed['null_fix']]}]",
            f"shrink={self.shrink_max:.10f} [{marks[self.passed['shrink']]}]",
            f"norm={self.operator_norm:.12f} [{marks[self.passed['norm']]}]",
        ]
        return "; ".join(parts)


def validate_properties(q: AffineOperator, a, samples: int = 50, seed: int = 2024) -> PropertyReport:
    """Certify the five structural properties of `q` against `a`.

    The two sampled checks draw `samples` null-space directions (expect
    step_matrix to fix them) and `samples` unit row-space directions
    (expect a strictly shorter image).
    """
    a = as_matrix(a)
    m, n = a.shape
    if q.n != n or q.m != m:
        raise ValidationError(f"operator shape ({q.n}, {q.m}) does not match matrix {a.shape}")
    t, r = q.step_matrix, q.data_matrix
    scale = 1.0 + float(np.linalg.norm(a))

    splitting_defect = float(np.linalg.norm(t + r @ a - np.eye(n)))
    p_null = null_space_projector(a)
    p_row = row_space_projector(a)
    range_defect = spectral_norm(p_null @ r)
    contraction_norm = spectral_norm(t @ p_row)
    operator_norm = spectral_norm(t)

    rng = np.random.default_rng(seed)
    null_fix_defect = 0.0
    shrink_max = 0.0
    for _ in range(samples):
        v = p_null @ rng.standard_normal(n)
        null_fix_defect = max(null_fix_defect, float(np.linalg.norm(t @ v - v)))
        u = p_row @ rng.standard_normal(n)
        nrm = np.linalg.norm(u)
        if nrm > 1e-12:
            u /= nrm
            shrink_max = max(shrink_max, float(np.linalg.norm(t @ u)))

    passed = {
        "splitting": splitting_defect <= SPLITTING_TOL * scale,
        "range": range_defect <= RANGE_TOL,
        "contraction": contraction_norm <= CONTRACTION_MAX,
        "null_fix": null_fix_defect <= NULL_FIX_TOL,
        "shrink": shrink_max < 1.0,
        "norm": operator_norm <= NORM_MAX,
    }
    return PropertyReport(
        splitting_defect=splitting_defect,
        range_defect=range_defect,
        contraction_norm=contraction_norm,
        null_fix_defect=null_fix_defect,
        shrink_max=shrink_max,
        operator_norm=operator_norm,
        scale=scale,
        passed=passed,
    )


@dataclass(frozen=True)
class NonexpansivenessReport:
    """Sampled evidence that x -> q.apply(x, b) never stretches distances."""

    max_defect: float  # max |q(x) - q(y)| - |x - y|, want <= 1e-12
    equality_defect: float  # null-direction pairs: |(q(x) - q(y)) - (x - y)|
    orthogonality_defect: float  # null-direction pairs: |<x - y, q(y) - y>|, scaled

    @property
    def ok(self) -> bool:
        return (
            self.max_defect <= 1e-12
            and self.equality_defect <= 1e-10
            and self.orthogonality_defect <= 1e-10
        )


def certify_nonexpansiveness(
    q: AffineOperator, a, b, samples: int = 200, seed: int = 77
) -> NonexpansivenessReport:
    """Sample random and equality-case pairs for the map x -> q.apply(x, b).

    Equality-case pairs differ by a null-space direction of `a`: the map
    must preserve the difference exactly and the update at the base point
    must be orthogonal to it.
    """
    a = as_matrix(a)
    b = as_vector(b, n=a.shape[0], name="b")
    p_null = null_space_projector(a)
    rng = np.random.default_rng(seed)
    n = q.n
    max_defect = -np.inf
    equality_defect = 0.0
    orthogonality_defect = 0.0
    for _ in range(samples):
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        gap = np.linalg.norm(q.apply(x, b) - q.apply(y, b)) - np.linalg.norm(x - y)
        max_defect = max(max_defect, float(gap))

        base = rng.standard_normal(n)
        diff = p_null @ rng.standard_normal(n)
        qx = q.apply(base + diff, b)
        qy = q.apply(base, b)
        equality_defect = max(equality_defect, float(np.linalg.norm((qx - qy) - diff)))
        inner = abs(float(diff @ (qy - base)))
        denom = 1.0 + float(np.linalg.norm(diff) * np.linalg.norm(qy - base))
        orthogonality_defect = max(orthogonality_defect, inner / denom)
    return NonexpansivenessReport(
        max_defect=max_defect,
        equality_defect=equality_defect,
        orthogonality_defect=orthogonality_defect,
    )


def minimize_fixed_point_residual(q: AffineOperator, b, smoothing=None) -> np.ndarray:
    """Global minimizer of |x - S q(x)|^2 over all x.

    With q(x) = T x + R b the objective is |(I - S T) x - S R b|^2; the
    minimum-norm minimizer solves the normal equations of M = I - S T,
    handled through the pseudoinverse so a rank-deficient M is fine.
    """
    b = as_vector(b, n=q.m, name="b")
    if smoothing is None:
        s = np.eye(q.n)
    else:
        s = as_matrix(smoothing, name="smoothing")
        if s.shape != (q.n, q.n):
            raise ValidationError(f"smoothing must be ({q.n}, {q.n}), got {s.shape}")
    mmat = np.eye(q.n) - s @ q.step_matrix
    c = s @ (q.data_matrix @ b)
    return pseudoinverse(mmat) @ c
