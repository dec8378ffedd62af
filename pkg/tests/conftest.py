"""Session-scoped fixtures shared by the behavioral and acceptance suites.

The phantom bundle is the frozen g=8, p=6, seed=42 instance; the fixed and
adaptive runs are computed once and reused by several acceptance criteria.
"""
import numpy as np
import pytest

from fcls.operators import build_landweber_schedule
from fcls.phantom import (
    AdaptiveBoxPolicy,
    PhantomSpec,
    adaptive_box_schedule,
    fixed_box_schedule,
    generate,
)
from fcls.solver import SolverConfig, run_fca


def make_fixed_run(instance, truth):
    schedule = build_landweber_schedule(instance.a)
    box = fixed_box_schedule(instance.n)
    config = SolverConfig(reference_point=truth)
    trace = run_fca(schedule, instance, constraint=box, config=config)
    return box, trace


def make_adaptive_run(instance, truth, probe_trace):
    boxes = adaptive_box_schedule(AdaptiveBoxPolicy(), probe_trace, truth=truth)
    schedule = build_landweber_schedule(instance.a)
    config = SolverConfig(reference_point=truth)
    trace = run_fca(schedule, instance, constraint=boxes, config=config)
    return boxes, trace


@pytest.fixture(scope="session")
def phantom_bundle():
    instance, truth = generate(PhantomSpec())
    return instance, truth


@pytest.fixture(scope="session")
def fixed_phantom_run(phantom_bundle):
    instance, truth = phantom_bundle
    return make_fixed_run(instance, truth)


@pytest.fixture(scope="session")
def adaptive_phantom_run(phantom_bundle, fixed_phantom_run):
    instance, truth = phantom_bundle
    _, probe_trace = fixed_phantom_run
    return make_adaptive_run(instance, truth, probe_trace)
