"""Constraining operators: box projections and smoothing matrices.

A box schedule is the family of metric projections onto per-iteration
boxes; a smoothing matrix is a symmetric row-stochastic matrix with a
positive diagonal.  Both kinds of operator never stretch distances, and
whenever they preserve a distance they preserve the difference vector
itself, which is what the sampling check below certifies.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .linalg import as_matrix, as_vector, column_space_projector

SYMMETRY_TOL = 1e-10
ENTRY_FLOOR = -1e-14
ROW_SUM_TOL = 1e-10
EIGENVALUE_FLOOR = -1.0 + 1e-8
EIGENVALUE_CEIL = 1.0 + 1e-10
FIXED_VECTOR_TOL = 1e-9
SNE_DEFECT_TOL = 1e-12
SNE_EQUALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {x : lower <= x <= upper componentwise}."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, n=lo.shape[0], name="upper")
        if (lo > hi).any():
            bad = int(np.argmax(lo > hi))
            raise ValidationError(f"lower[{bad}]={lo[bad]} exceeds upper[{bad}]={hi[bad]}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def project(self, x: np.ndarray) -> np.ndarray:
        """Metric projection: componentwise clamp."""
        return np.clip(x, self.lower, self.upper)

    def contains(self, x: np.ndarray) -> bool:
        """Exact componentwise membership, no slack."""
        return bool((self.lower <= x).all() and (x <= self.upper).all())

    def contains_box(self, other: "Box") -> bool:
        return bool((self.lower <= other.lower).all() and (other.upper <= self.upper).all())

    def same_as(self, other: "Box") -> bool:
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)


def box_project(box: Box, x) -> np.ndarray:
    x = as_vector(x, n=box.n, name="x")
    return box.project(x)


@dataclass(frozen=True, eq=False)
class BoxSchedule:
    """Box family indexed 0, 1, 2, ... with `terminal` repeated at the tail.

    Member k is the box used when producing iterate k; member 0 is never
    applied by the drivers but still belongs to the family.
    """

    boxes: tuple[Box, ...]
    terminal: Box

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        n = self.terminal.n
        for i, b in enumerate(self.boxes):
            if b.n != n:
                raise ValidationError(f"box {i} has dimension {b.n}, expected {n}")

    @property
    def n(self) -> int:
        return self.terminal.n

    def box_at(self, k: int) -> Box:
        return self.boxes[k] if k < len(self.boxes) else self.terminal

    def effective_index(self, k: int) -> int:
        """Index recorded in traces; len(boxes) denotes the terminal box."""
        return k if k < len(self.boxes) else len(self.boxes)

    def stage_indices(self) -> list[int]:
        """First index of every run of identical boxes, terminal included."""
        out = [0]
        for k in range(1, len(self.boxes) + 1):
            if not self.box_at(k).same_as(self.box_at(k - 1)):
                out.append(k)
        return out

    def distinct_boxes(self) -> list[tuple[int, Box]]:
        return [(k, self.box_at(k)) for k in self.stage_indices()]


@dataclass(frozen=True)
class NestingReport:
    """Witness map l -> k(l): from index k(l) on, every later box fits in box l."""

    witnesses: dict
    violations: tuple
    ok: bool

    def __str__(self) -> str:
        if self.ok:
            pairs = ", ".join(f"k({l})={k}" for l, k in sorted(self.witnesses.items()))
            return f"nesting ok ({pairs})" if pairs else "nesting ok (terminal box only)"
        return "nesting violated at " + ", ".join(
            f"box {l} (terminal escapes)" for l, _ in self.violations
        )


def verify_nesting(schedule: BoxSchedule) -> NestingReport:
    """Find, per explicit index l, the smallest k(l) >= l such that the box
    used at every index beyond k(l) is contained in box l.

    With the terminal-repetition convention this is a finite check: a
    witness exists exactly when the terminal box fits inside box l.
    """
    boxes = schedule.boxes
    count = len(boxes)
    witnesses = {}
    violations = []
    for l in range(count):
        outer = boxes[l]
        if not outer.contains_box(schedule.terminal):
            violations.append((l, "terminal"))
            continue
        worst = l
        for j in range(l + 1, count):
            if not outer.contains_box(boxes[j]):
                worst = j
        witnesses[l] = worst
    return NestingReport(witnesses=witnesses, violations=tuple(violations), ok=not violations)


def schedule_intersection(schedule: BoxSchedule) -> Box | None:
    """Componentwise intersection of all explicit boxes with the terminal.

    Returns None when the intersection is empty.
    """
    lo = schedule.terminal.lower.copy()
    hi = schedule.terminal.upper.copy()
    for b in schedule.boxes:
        lo = np.maximum(lo, b.lower)
        hi = np.minimum(hi, b.upper)
    if (lo > hi).any():
        return None
    return Box(lower=lo, upper=hi)


def inclusion_inequality_check(
    outer: Box, inner: Box, samples: int = 1000, seed: int = 31
) -> float:
    """Max over samples of |P_inner(z) - y| - |P_outer(z) - y|.

    For y inside the inner box the projection onto the inner box is never
    farther from y than the projection onto the outer box; the returned
    defect should not exceed floating-point noise.
    """
    if not outer.contains_box(inner):
        raise ValidationError("inner box is not contained in the outer box")
    rng = np.random.default_rng(seed)
    span = outer.upper - outer.lower
    lo = outer.lower - span - 1.0
    hi = outer.upper + span + 1.0
    worst = -np.inf
    for _ in range(samples):
        z = rng.uniform(lo, hi)
        y = rng.uniform(inner.lower, inner.upper)
        gap = np.linalg.norm(inner.project(z) - y) - np.linalg.norm(outer.project(z) - y)
        worst = max(worst, float(gap))
    return worst


@dataclass(frozen=True, eq=False)
class SmoothingMatrix:
    """Validated symmetric row-stochastic matrix with positive diagonal.

    Only :func:`smoothing_validate` builds these.  `fixed_directions` is an
    orthonormal basis of the eigenvalue-1 eigenspace, shape (n, count).
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    fixed_directions: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x


def smoothing_validate(s) -> SmoothingMatrix:
    """Check the smoothing contract and return the cleaned matrix.

    Rejects: asymmetry beyond 1e-10, entries below -1e-14, row sums off 1
    by more than 1e-10, a nonpositive diagonal entry, or an eigenvalue at
    or below -1 + 1e-8.  Tiny negative entries are clamped to zero and the
    matrix re-symmetrized before the spectral checks.
    """
    s = as_matrix(s, name="smoothing")
    n = s.shape[0]
    if s.shape[0] != s.shape[1]:
        raise ValidationError(f"smoothing must be square, got {s.shape}")
    asym = float(np.abs(s - s.T).max())
    if asym > SYMMETRY_TOL:
        raise ValidationError(f"smoothing is not symmetric: max asymmetry {asym:.3e}")
    low = float(s.min())
    if low < ENTRY_FLOOR:
        i, j = np.unravel_index(int(np.argmin(s)), s.shape)
        raise ValidationError(f"smoothing entry ({i}, {j}) = {low:.3e} is negative")
    clean = np.clip(s, 0.0, None)
    clean = 0.5 * (clean + clean.T)
    sums = clean.sum(axis=1)
    if np.abs(sums - 1.0).max() > ROW_SUM_TOL:
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValidationError(f"row {bad} sums to {sums[bad]!r}, expected 1")
    diag = np.diag(clean)
    if (diag <= 0.0).any():
        bad = int(np.argmin(diag))
        raise ValidationError(f"diagonal entry {bad} = {diag[bad]} is not positive")
    eigenvalues, vectors = np.linalg.eigh(clean)
    if eigenvalues[0] <= EIGENVALUE_FLOOR:
        raise ValidationError(
            f"eigenvalue {eigenvalues[0]:.12f} is not above -1 (margin 1e-8)"
        )
    if eigenvalues[-1] > EIGENVALUE_CEIL:
        raise ValidationError(f"eigenvalue {eigenvalues[-1]:.12f} exceeds 1")
    fixed = vectors[:, eigenvalues >= 1.0 - 1e-10]
    for idx in range(fixed.shape[1]):
        v = fixed[:, idx]
        defect = float(np.linalg.norm(clean @ v - v))
        if defect > FIXED_VECTOR_TOL:
            raise ValidationError(
                f"eigenvalue-1 direction {idx} moves by {defect:.3e} under the smoother"
            )
    return SmoothingMatrix(matrix=clean, eigenvalues=eigenvalues, fixed_directions=fixed)


@dataclass(frozen=True)
class SneReport:
    """Sampling evidence for the never-stretch property of one operator."""

    max_defect: float  # max |op(x) - op(y)| - |x - y|
    equality_defect: float  # equality-case pairs: |(op(x) - op(y)) - (x - y)|
    samples: int

    @property
    def ok(self) -> bool:
        return self.max_defect <= SNE_DEFECT_TOL and self.equality_defect <= SNE_EQUALITY_TOL


def sne_sample_check(
    op, dim: int, samples: int = 1000, seed: int = 41, equality_sampler=None
) -> SneReport:
    """Sample `samples` random pairs plus optional equality-case pairs.

    `op` maps a vector of length `dim` to one of the same length;
    `equality_sampler(rng)` returns (x, y) pairs on which op must act as a
    translation, i.e. op(x) - op(y) = x - y.
    """
    rng = np.random.default_rng(seed)
    max_defect = -np.inf
    equality_defect = 0.0
    for _ in range(samples):
        x = rng.standard_normal(dim)
        y = rng.standard_normal(dim)
        gap = np.linalg.norm(op(x) - op(y)) - np.linalg.norm(x - y)
        max_defect = max(max_defect, float(gap))
        if equality_sampler is not None:
            ex, ey = equality_sampler(rng)
            gap_eq = np.linalg.norm((op(ex) - op(ey)) - (ex - ey))
            equality_defect = max(equality_defect, float(gap_eq))
    return SneReport(max_defect=max_defect, equality_defect=equality_defect, samples=samples)


def in_constrained_solution_set(z, box: Box, instance, shift, tol: float = 1e-9) -> bool:
    """Membership in {z in box : z - shift solves the least-squares problem}.

    Box membership is exact; the solution test compares a(z - shift)
    against the projection of b onto the range of a within
    tol * (1 + |b|).  `instance` must expose `a` and `b` (e.g. an
    LLSInstance); its cached projector is used when available.
    """
    z = as_vector(z, n=box.n, name="z")
    shift = as_vector(shift, n=box.n, name="shift")
    if not box.contains(z):
        return False
    a = instance.a
    b = instance.b
    projected = getattr(instance, "projected_rhs", None)
    pb = projected() if callable(projected) else column_space_projector(a) @ b
    defect = float(np.linalg.norm(a @ (z - shift) - pb))
    return defect <= tol * (1.0 + float(np.linalg.norm(b)))
