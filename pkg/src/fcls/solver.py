"""Iteration drivers, fixed-point geometry, and convergence monitors.

The drivers realize x^k = member_k(x^{k-1}) for an operator family with a
terminal member repeated forever.  For the constrained driver each member
composes one affine solver step with one constraining operator (a box
projection or a smoothing matrix), both taken at the same family index.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constraints import BoxSchedule, SmoothingMatrix, verify_nesting
from .errors import DivergenceError, ValidationError
from .linalg import as_matrix, as_vector, spectral_norm, svd
from .operators import AffineOperator, OperatorSchedule

FIXED_POINT_TOL = 1e-9
LS_RESIDUAL_TOL = 1e-9
FEJER_SLACK = 1e-12


class LLSInstance:
    """A least-squares problem min |a x - b| with optional ground truth.

    The SVD and everything derived from it is computed once and cached.
    """

    def __init__(self, a, b, truth=None):
        self.a = as_matrix(a)
        self.b = as_vector(b, n=self.a.shape[0], name="b")
        self.truth = None if truth is None else as_vector(truth, n=self.a.shape[1], name="truth")

    @property
    def m(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @cached_property
    def factorization(self):
        return svd(self.a)

    @cached_property
    def pinv(self) -> np.ndarray:
        fac = self.factorization
        if fac.rank == 0:
            return np.zeros((self.n, self.m))
        return (fac.row_space_basis() / fac.sigma[: fac.rank]) @ fac.column_space_basis().T

    @cached_property
    def row_space_projector(self) -> np.ndarray:
        v1 = self.factorization.row_space_basis()
        return v1 @ v1.T

    @cached_property
    def null_space_projector(self) -> np.ndarray:
        return np.eye(self.n) - self.row_space_projector

    @cached_property
    def column_space_projector(self) -> np.ndarray:
        u1 = self.factorization.column_space_basis()
        return u1 @ u1.T

    @cached_property
    def left_null_space_projector(self) -> np.ndarray:
        return np.eye(self.m) - self.column_space_projector

    @cached_property
    def least_squares_solution(self) -> np.ndarray:
        x = self.pinv @ self.b
        defect = float(np.linalg.norm(self.a.T @ (self.a @ x - self.b)))
        scale = 1.0 + float(np.linalg.norm(self.a) * np.linalg.norm(self.b))
        if defect > LS_RESIDUAL_TOL * scale:
            raise ValidationError(f"normal-equations defect {defect:.3e} exceeds tolerance")
        return x

    def projected_rhs(self) -> np.ndarray:
        """Projection of b onto the range of a."""
        u1 = self.factorization.column_space_basis()
        return u1 @ (u1.T @ self.b)

    def residual_norm(self, x) -> float:
        return float(np.linalg.norm(self.a @ x - self.b))


@dataclass
class SolverConfig:
    """Stopping rules and trace layout for the iteration drivers.

    Stops when the sup-norm step falls to step_tol, when the shift-adjusted
    residual falls to residual_tol, or at max_iter.  Scalar metrics are
    recorded every iteration; full iterates every `store_every` iterations.
    """

    step_tol: float = 1e-10
    residual_tol: float = 1e-12
    max_iter: int = 100_000
    store_every: int = 10
    reference_point: np.ndarray | None = None
    monitor_fejer: bool = True
    condition1_probes: tuple[int, ...] = ()

    def __post_init__(self):
        if self.step_tol <= 0.0 or self.residual_tol <= 0.0:
            raise ValidationError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.store_every < 1:
            raise ValidationError("store_every must be at least 1")
        if self.reference_point is not None:
            self.reference_point = as_vector(self.reference_point, name="reference_point")


@dataclass(eq=False)
class RunTrace:
    """Everything one driver run recorded.

    Row k of the per-iteration arrays describes iterate k; row 0 is the
    start point, so step_norms[0] is NaN.  `family` maps an index k to the
    callable that produced iterate k; members at index family_depth and
    beyond are all identical.
    """

    status: str
    stop_rule: str | None
    iterations: int
    residuals: np.ndarray
    step_norms: np.ndarray
    fejer_distances: np.ndarray | None
    condition1_defects: np.ndarray | None
    box_indices: np.ndarray | None
    stored_iterates: list
    final_x: np.ndarray
    reference_point: np.ndarray | None
    shift_norm: float = float("nan")
    contraction_norm: float = float("nan")
    family: object = None
    family_depth: int = 1
    constraint: object = None

    def iterate_at(self, k: int) -> np.ndarray:
        """Stored iterate with the largest index not exceeding k."""
        best = self.stored_iterates[0][1]
        for idx, x in self.stored_iterates:
            if idx <= k:
                best = x
            else:
                break
        return best

    def summary_text(self) -> str:
        final_residual = self.residuals[-1]
        lines = [
            f"status: {self.status}",
            f"stop_rule: {self.stop_rule}",
            f"iterations: {self.iterations}",
            f"final_residual: {final_residual!r}",
            f"final_step_norm: {self.step_norms[-1]!r}",
            f"shift_norm: {self.shift_norm!r}",
            f"contraction_norm: {self.contraction_norm!r}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True, eq=False)
class ShiftReport:
    """Offset between the solver's fixed points and the solution set."""

    shift: np.ndarray
    contraction_norm: float
    solve_residual: float
    fixed_point_defect: float


def fixed_point_shift(q: AffineOperator, instance: LLSInstance) -> ShiftReport:
    """Solve (I - T|_rowspace) shift = data_matrix @ (b - projected rhs).

    The fixed points of x -> q.apply(x, b) are exactly the least-squares
    solutions translated by this shift; the report carries the direct
    linear-solve residual and the verified fixed-point defect at
    least_squares_solution + shift.  Requires the restricted contraction
    norm to be strictly below 1 (otherwise the solve is invalid).
    """
    if q.n != instance.n or q.m != instance.m:
        raise ValidationError(
            f"operator shape ({q.n}, {q.m}) does not match instance ({instance.n}, {instance.m})"
        )
    restricted = q.step_matrix @ instance.row_space_projector
    contraction = spectral_norm(restricted)
    if contraction >= 1.0:
        raise ValidationError(
            f"restricted step-matrix norm {contraction!r} is not below 1; "
            "the shift solve is invalid"
        )
    rhs = q.data_matrix @ (instance.left_null_space_projector @ instance.b)
    mat = np.eye(q.n) - restricted
    shift = np.linalg.solve(mat, rhs)
    solve_residual = float(np.linalg.norm(mat @ shift - rhs))
    x = instance.least_squares_solution + shift
    defect = float(np.linalg.norm(q.apply(x, instance.b) - x))
    if defect > FIXED_POINT_TOL * (1.0 + float(np.linalg.norm(x))):
        raise ValidationError(
            f"shifted least-squares point moves by {defect:.3e} under the operator"
        )
    return ShiftReport(
        shift=shift,
        contraction_norm=contraction,
        solve_residual=solve_residual,
        fixed_point_defect=defect,
    )


def _run_members(
    member_of,
    x0: np.ndarray,
    config: SolverConfig,
    *,
    residual_of=None,
    stop_residual_of=None,
    box_index_of=None,
    cond1_thresholds=None,
    family_depth: int = 1,
    constraint=None,
) -> RunTrace:
    z = config.reference_point
    track_fejer = config.monitor_fejer and z is not None
    track_cond1 = bool(cond1_thresholds) and z is not None

    x = x0.copy()
    residuals = [residual_of(x) if residual_of else float("nan")]
    steps = [float("nan")]
    fejer = [float(np.linalg.norm(x - z))] if track_fejer else None
    cond1 = [float("nan")] if track_cond1 else None
    boxes = [-1] if box_index_of else None
    stored = [(0, x.copy())]

    status = "max_iter"
    stop_rule = None
    k = 0
    for k in range(1, config.max_iter + 1):
        xnew = member_of(k)(x)
        if not np.isfinite(xnew).all():
            raise DivergenceError(k)
        step = float(np.max(np.abs(xnew - x)))
        steps.append(step)
        residuals.append(residual_of(xnew) if residual_of else float("nan"))
        if track_fejer:
            fejer.append(float(np.linalg.norm(xnew - z)))
        if track_cond1:
            defect = float("nan")
            for probe, threshold in cond1_thresholds.items():
                if k - 1 >= threshold:
                    gap = float(
                        np.linalg.norm(xnew - z) - np.linalg.norm(member_of(probe)(x) - z)
                    )
                    defect = gap if np.isnan(defect) else max(defect, gap)
            cond1.append(defect)
        if boxes is not None:
            boxes.append(box_index_of(k))
        if k % config.store_every == 0:
            stored.append((k, xnew.copy()))
        x = xnew
        if step <= config.step_tol:
            status, stop_rule = "converged", "step"
            break
        if stop_residual_of is not None and stop_residual_of(x) <= config.residual_tol:
            status, stop_rule = "converged", "residual"
            break
    if stored[-1][0] != k:
        stored.append((k, x.copy()))

    return RunTrace(
        status=status,
        stop_rule=stop_rule,
        iterations=k,
        residuals=np.asarray(residuals),
        step_norms=np.asarray(steps),
        fejer_distances=None if fejer is None else np.asarray(fejer),
        condition1_defects=None if cond1 is None else np.asarray(cond1),
        box_indices=None if boxes is None else np.asarray(boxes, dtype=int),
        stored_iterates=stored,
        final_x=x,
        reference_point=None if z is None else z.copy(),
        family=member_of,
        family_depth=family_depth,
        constraint=constraint,
    )


def run_family_iteration(operators, x0, config: SolverConfig | None = None) -> RunTrace:
    """Iterate x^k = T_k(x^{k-1}) for a family of callables.

    `operators` is one callable or a sequence indexed like a family:
    entry k produces iterate k, so entry 0 of a multi-entry sequence is
    never applied, and the last entry repeats forever.  A single callable
    is the terminal member and drives every iterate.  No residual is
    available at this level, so the residual column of the trace stays
    empty.
    """
    if callable(operators):
        members = [operators]
    else:
        members = list(operators)
        if not members:
            raise ValidationError("need at least one operator")
    config = config or SolverConfig()
    x0 = as_vector(x0, name="x0")

    def member_of(k: int):
        return members[min(k, len(members) - 1)]

    return _run_members(member_of, x0, config, family_depth=len(members))


def run_fca(
    q,
    instance: LLSInstance,
    constraint=None,
    x0=None,
    config: SolverConfig | None = None,
) -> RunTrace:
    """Constrained driver: iterate k applies constraining member k after
    solver member k.

    `q` is one AffineOperator or an OperatorSchedule; `constraint` is None,
    a verified BoxSchedule, or a SmoothingMatrix.  The shift-adjusted
    residual stopping rule and the trace's shift fields come from the
    terminal solver member.
    """
    if isinstance(q, AffineOperator):
        q = OperatorSchedule(operators=(q,))
    if not isinstance(q, OperatorSchedule):
        raise ValidationError(f"expected an operator or schedule, got {type(q).__name__}")
    if q.n != instance.n or q.m != instance.m:
        raise ValidationError(
            f"operator shape ({q.n}, {q.m}) does not match instance ({instance.n}, {instance.m})"
        )
    config = config or SolverConfig()
    x0 = np.zeros(instance.n) if x0 is None else as_vector(x0, n=instance.n, name="x0")

    box_schedule = None
    smoother = None
    if constraint is None:
        pass
    elif isinstance(constraint, BoxSchedule):
        if constraint.n != instance.n:
            raise ValidationError(
                f"box schedule dimension {constraint.n} does not match n={instance.n}"
            )
        nesting = verify_nesting(constraint)
        if not nesting.ok:
            raise ValidationError(f"box schedule is not nested: {nesting}")
        box_schedule = constraint
    elif isinstance(constraint, SmoothingMatrix):
        if constraint.n != instance.n:
            raise ValidationError(
                f"smoothing dimension {constraint.n} does not match n={instance.n}"
            )
        smoother = constraint.matrix
    else:
        raise ValidationError(f"unsupported constraint type {type(constraint).__name__}")

    data_terms = [op.data_matrix @ instance.b for op in q.operators]

    def member_of(k: int):
        j = min(k, len(q.operators) - 1)
        t = q.operators[j].step_matrix
        c = data_terms[j]
        if box_schedule is not None:
            bx = box_schedule.box_at(k)
            return lambda x: bx.project(t @ x + c)
        if smoother is not None:
            s = smoother
            return lambda x: s @ (t @ x + c)
        return lambda x: t @ x + c

    shift_report = fixed_point_shift(q.at(len(q) - 1), instance)
    projected = instance.projected_rhs()
    a = instance.a
    shift = shift_report.shift

    def stop_residual_of(x):
        return float(np.linalg.norm(a @ (x - shift) - projected))

    box_index_of = None
    if box_schedule is not None:
        box_index_of = box_schedule.effective_index

    cond1_thresholds = None
    if config.condition1_probes and config.reference_point is not None:
        cond1_thresholds = {}
        if box_schedule is not None:
            nesting = verify_nesting(box_schedule)
            for probe in config.condition1_probes:
                if probe < len(box_schedule.boxes):
                    cond1_thresholds[probe] = nesting.witnesses[probe]
        else:
            cond1_thresholds = {probe: probe for probe in config.condition1_probes}

    family_depth = max(len(q), 1)
    if box_schedule is not None:
        family_depth = max(family_depth, len(box_schedule.boxes) + 1)

    trace = _run_members(
        member_of,
        x0,
        config,
        residual_of=instance.residual_norm,
        stop_residual_of=stop_residual_of,
        box_index_of=box_index_of,
        cond1_thresholds=cond1_thresholds,
        family_depth=family_depth,
        constraint=constraint,
    )
    trace.shift_norm = float(np.linalg.norm(shift))
    trace.contraction_norm = shift_report.contraction_norm
    return trace


@dataclass(frozen=True)
class FejerReport:
    """Monotone-approach evidence for one run against one common fixed point."""

    max_increase: float  # largest one-step growth of |x^k - z|
    slack: float  # 1e-12 * (1 + |x^0 - z|)
    max_iterate_norm: float
    norm_bound: float  # |z| + |x^0 - z| + slack

    @property
    def ok(self) -> bool:
        return self.max_increase <= self.slack and self.max_iterate_norm <= self.norm_bound


def fejer_monitor(trace: RunTrace, z) -> FejerReport:
    """Check that the recorded distances to `z` never grow.

    Precondition: z is fixed by every family member; violating members are
    named.  Uses the per-iteration distance column when the run was
    monitored against the same z, otherwise the stored iterates.
    """
    z = as_vector(z, name="z")
    if trace.family is None:
        raise ValidationError("trace carries no operator family")
    tol = FIXED_POINT_TOL * (1.0 + float(np.linalg.norm(z)))
    for k in range(1, trace.family_depth + 1):
        defect = float(np.linalg.norm(trace.family(k)(z) - z))
        if defect > tol:
            raise ValidationError(
                f"reference point is not fixed by family member {k}: defect {defect:.3e}"
            )
    if trace.fejer_distances is not None and trace.reference_point is not None and np.array_equal(
        z, trace.reference_point
    ):
        distances = trace.fejer_distances
    else:
        distances = np.asarray(
            [float(np.linalg.norm(x - z)) for _, x in trace.stored_iterates]
        )
    increases = np.diff(distances)
    max_increase = float(increases.max()) if increases.size else 0.0
    slack = FEJER_SLACK * (1.0 + float(distances[0]))
    max_norm = max(float(np.linalg.norm(x)) for _, x in trace.stored_iterates)
    bound = float(np.linalg.norm(z)) + float(distances[0]) + slack
    return FejerReport(
        max_increase=max_increase, slack=slack, max_iterate_norm=max_norm, norm_bound=bound
    )


def condition1_monitor(trace: RunTrace, z, probe_indices=None) -> dict:
    """Per probed index l, the worst gap |T_{k+1}(x^k) - z| - |T_l(x^k) - z|
    over the recorded iterates with k at or beyond the nesting witness k(l).

    Returns {l: max gap} with None for probes whose comparison never
    activates (no recorded k reaches k(l), or l points into the terminal
    tail where both sides coincide).  `z` should be a common fixed point;
    certify it with fejer_monitor first.
    """
    z = as_vector(z, name="z")
    if trace.family is None:
        raise ValidationError("trace carries no operator family")
    schedule = trace.constraint if isinstance(trace.constraint, BoxSchedule) else None
    if probe_indices is None:
        probe_indices = schedule.stage_indices() if schedule is not None else [0]
    witnesses = verify_nesting(schedule).witnesses if schedule is not None else None
    thresholds = {}
    for probe in probe_indices:
        if schedule is not None:
            if probe >= len(schedule.boxes):
                thresholds[probe] = None  # terminal tail: both operators coincide
            else:
                thresholds[probe] = witnesses.get(probe)
        else:
            thresholds[probe] = probe
    out = {}
    for probe, threshold in thresholds.items():
        if threshold is None:
            out[probe] = None
            continue
        worst = None
        reference = trace.family(probe)
        for k, x in trace.stored_iterates:
            if k < threshold:
                continue
            left = float(np.linalg.norm(trace.family(k + 1)(x) - z))
            right = float(np.linalg.norm(reference(x) - z))
            gap = left - right
            worst = gap if worst is None else max(worst, gap)
        out[probe] = worst
    return out


@dataclass(frozen=True, eq=False)
class FixedPointSetReport:
    """Two-directional certificate that Fix(q) is the shifted solution set.

    All defects are relative (scaled by 1 + the natural norm).
    """

    max_forward_defect: float  # shifted solutions are fixed
    max_reverse_fix_defect: float  # constructed fixed points really are fixed
    max_reverse_solution_defect: float  # fixed points shift back to solutions
    shift_report: ShiftReport


def certify_fixed_point_set(
    q: AffineOperator, instance: LLSInstance, samples: int = 20, seed: int = 97
) -> FixedPointSetReport:
    """Sample both inclusions between Fix(q) and the shifted solution set.

    Forward: every least-squares solution plus the shift is fixed by q.
    Reverse: points solving (I - T) x = R b (plus null-space offsets) are
    fixed and drop back into the solution set after subtracting the shift.
    """
    shift_report = fixed_point_shift(q, instance)
    shift = shift_report.shift
    rng = np.random.default_rng(seed)
    p_null = instance.null_space_projector
    b = instance.b
    projected = instance.projected_rhs()
    b_scale = 1.0 + float(np.linalg.norm(b))

    forward = 0.0
    for _ in range(samples):
        solution = instance.least_squares_solution + p_null @ rng.standard_normal(instance.n)
        x = solution + shift
        defect = float(np.linalg.norm(q.apply(x, b) - x)) / (1.0 + float(np.linalg.norm(x)))
        forward = max(forward, defect)

    mat = np.eye(q.n) - q.step_matrix
    u, sigma, vt = np.linalg.svd(mat)
    rank = int((sigma > max(mat.shape) * sigma[0] * 1e-12).sum()) if sigma[0] > 0 else 0
    particular = (vt[:rank].T / sigma[:rank]) @ (u[:, :rank].T @ (q.data_matrix @ b))
    reverse_fix = 0.0
    reverse_solution = 0.0
    for _ in range(samples):
        x = particular + p_null @ rng.standard_normal(instance.n)
        fix_defect = float(np.linalg.norm(q.apply(x, b) - x)) / (1.0 + float(np.linalg.norm(x)))
        reverse_fix = max(reverse_fix, fix_defect)
        sol_defect = float(np.linalg.norm(instance.a @ (x - shift) - projected)) / b_scale
        reverse_solution = max(reverse_solution, sol_defect)

    return FixedPointSetReport(
        max_forward_defect=forward,
        max_reverse_fix_defect=reverse_fix,
        max_reverse_solution_defect=reverse_solution,
        shift_report=shift_report,
    )
