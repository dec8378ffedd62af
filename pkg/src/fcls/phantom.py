"""Binary particle phantoms on a square pixel grid, with straight-ray sums.

A phantom is a g-by-g image holding p particles (pixels set to 1).  Each
selected ray family contributes one measurement row per ray; an entry is 1
exactly when the ray crosses the pixel.  The right-hand side is the exact
ray sum of the truth image, so every generated instance is consistent and
the truth is a certified reference point for the monitors.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .constraints import Box, BoxSchedule
from .errors import ValidationError
from .linalg import as_vector
from .solver import LLSInstance, RunTrace

logger = logging.getLogger(__name__)

FAMILY_ORDER = ("rows", "cols", "diag", "anti-diag")


@dataclass(frozen=True)
class PhantomSpec:
    """Deterministic phantom description: grid side, particle count, seed,
    and which ray families to stack (always in FAMILY_ORDER order)."""

    grid: int = 8
    particles: int = 6
    seed: int = 42
    angles: tuple = FAMILY_ORDER

    def __post_init__(self):
        if self.grid < 2:
            raise ValidationError(f"grid side must be at least 2, got {self.grid}")
        if not 1 <= self.particles <= self.grid**2:
            raise ValidationError(
                f"particle count must lie in [1, {self.grid ** 2}], got {self.particles}"
            )
        if not self.angles:
            raise ValidationError("need at least one ray family")
        unknown = [name for name in self.angles if name not in FAMILY_ORDER]
        if unknown:
            raise ValidationError(
                f"unknown ray families {unknown}; choose from {list(FAMILY_ORDER)}"
            )


def _family_rays(family: str, g: int) -> np.ndarray:
    n = g * g
    if family == "rows":
        rays = np.zeros((g, n))
        for r in range(g):
            rays[r, r * g : (r + 1) * g] = 1.0
        return rays
    if family == "cols":
        rays = np.zeros((g, n))
        for c in range(g):
            rays[c, c::g] = 1.0
        return rays
    if family == "diag":
        # ray d collects pixels with row - col = d, d ascending
        rays = np.zeros((2 * g - 1, n))
        for idx, d in enumerate(range(-(g - 1), g)):
            for r in range(g):
                c = r - d
                if 0 <= c < g:
                    rays[idx, r * g + c] = 1.0
        return rays
    # ray s collects pixels with row + col = s, s ascending
    rays = np.zeros((2 * g - 1, n))
    for s in range(2 * g - 1):
        for r in range(g):
            c = s - r
            if 0 <= c < g:
                rays[s, r * g + c] = 1.0
    return rays


def generate(spec: PhantomSpec):
    """Build the ray-sum instance and the binary truth image.

    Particle positions come from one `choice` call on a fresh seeded
    generator, so equal specs give bit-identical instances.  Returns
    (instance, truth); the instance also carries the truth.
    """
    g = spec.grid
    n = g * g
    rng = np.random.default_rng(spec.seed)
    positions = rng.choice(n, size=spec.particles, replace=False)
    truth = np.zeros(n)
    truth[positions] = 1.0
    blocks = [_family_rays(name, g) for name in FAMILY_ORDER if name in spec.angles]
    a = np.vstack(blocks)
    b = a @ truth
    instance = LLSInstance(a, b, truth=truth)
    return instance, truth


def fixed_box_schedule(n: int) -> BoxSchedule:
    """The constant unit-box schedule: every iterate is clamped to [0,1]^n."""
    box = Box(lower=np.zeros(n), upper=np.ones(n))
    return BoxSchedule(boxes=(box,), terminal=box)


@dataclass(frozen=True)
class AdaptiveBoxPolicy:
    """Iteration-adaptive tightening rule for unit-box phantom runs.

    At each trigger iteration the probe iterate is thresholded per
    coordinate: above theta_hi pins the coordinate near 1, below theta_lo
    near 0, anything between stays free in [0, 1].
    """

    theta_hi: float = 0.8
    theta_lo: float = 0.2
    shrink_width: float = 0.05
    trigger_iterations: tuple = (50, 100, 200)

    def __post_init__(self):
        if not 0.0 < self.theta_lo < self.theta_hi < 1.0:
            raise ValidationError(
                f"need 0 < theta_lo < theta_hi < 1, got ({self.theta_lo}, {self.theta_hi})"
            )
        if not 0.0 < self.shrink_width < 0.5:
            raise ValidationError(
                f"shrink width must lie in (0, 0.5), got {self.shrink_width}"
            )
        triggers = tuple(int(t) for t in self.trigger_iterations)
        if not triggers:
            raise ValidationError("need at least one trigger iteration")
        if triggers[0] < 1 or any(t2 <= t1 for t1, t2 in zip(triggers, triggers[1:])):
            raise ValidationError(
                f"trigger iterations must be strictly increasing and positive, got {triggers}"
            )
        object.__setattr__(self, "trigger_iterations", triggers)


def adaptive_box_schedule(
    policy: AdaptiveBoxPolicy, probe_run: RunTrace, truth=None
) -> BoxSchedule:
    """Turn a fixed-box probe run into a tightened, still-nested schedule.

    Each trigger reads the recorded probe iterate (run the probe with a
    store_every that divides the triggers to sample them exactly), builds
    the per-coordinate candidate box, and intersects it with all earlier
    boxes, so nesting holds by construction.  With `truth` given, any
    candidate interval that would exclude a truth coordinate is widened to
    keep it and the event is logged; coordinate conflicts that would empty
    the intersection fall back to the previous bounds.  If no trigger
    changes anything, the result is exactly the fixed schedule.
    """
    n = probe_run.final_x.size
    delta = policy.shrink_width
    if truth is not None:
        truth = as_vector(truth, n=n, name="truth")
    cur_lo = np.zeros(n)
    cur_hi = np.ones(n)
    stage_changes = []
    for t in policy.trigger_iterations:
        y = probe_run.iterate_at(t)
        new_lo = np.zeros(n)
        new_hi = np.ones(n)
        new_lo[y > policy.theta_hi] = 1.0 - delta
        new_hi[y < policy.theta_lo] = delta
        if truth is not None:
            excluded = (truth < new_lo) | (truth > new_hi)
            if excluded.any():
                new_lo = np.minimum(new_lo, truth)
                new_hi = np.maximum(new_hi, truth)
                logger.warning(
                    "trigger %d: widened %d coordinate(s) to keep the reference "
                    "solution inside the box",
                    t,
                    int(excluded.sum()),
                )
        cand_lo = np.maximum(cur_lo, new_lo)
        cand_hi = np.minimum(cur_hi, new_hi)
        conflicts = cand_lo > cand_hi
        if conflicts.any():
            cand_lo[conflicts] = cur_lo[conflicts]
            cand_hi[conflicts] = cur_hi[conflicts]
            logger.warning(
                "trigger %d: kept previous bounds on %d coordinate(s) with an "
                "empty intersection",
                t,
                int(conflicts.sum()),
            )
        if not (np.array_equal(cand_lo, cur_lo) and np.array_equal(cand_hi, cur_hi)):
            stage_changes.append((t, Box(lower=cand_lo.copy(), upper=cand_hi.copy())))
            cur_lo, cur_hi = cand_lo, cand_hi
    if not stage_changes:
        return fixed_box_schedule(n)
    boxes = []
    current = Box(lower=np.zeros(n), upper=np.ones(n))
    for t, box in stage_changes:
        boxes.extend([current] * (t + 1 - len(boxes)))  # box k applies at iterate k
        current = box
    return BoxSchedule(boxes=tuple(boxes), terminal=current)


def ghost_count(x, truth, threshold: float = 0.5) -> int:
    """Number of coordinates whose thresholded value disagrees with truth."""
    x = as_vector(x, name="x")
    truth = as_vector(truth, n=x.size, name="truth")
    if not 0.0 < threshold < 1.0:
        raise ValidationError(f"threshold must lie in (0, 1), got {threshold}")
    return int(((x >= threshold) != (truth == 1.0)).sum())
