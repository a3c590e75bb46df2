import math
import os

import numpy as np
import pytest

from core.analysis import Trace, TraceMeta
from core.manifold import Euclidean, ManifoldPoint, Sphere
from core.objective import HalfSquare, Quadratic, SphereHeight
from core.optimize import FixedStep, PowerLawStep, RunConfig, ScheduleSpec, StepRule
from core.plugin_manager import ObjectiveRegistry

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
EXAMPLE_DIR = os.path.join(ROOT, "example")
PLUGIN_DIR = os.path.join(ROOT, "plugin")

QUAD_A = [[4.0, 1.0], [1.0, 3.0]]
QUAD_B = [1.0, 2.0]
X_STAR = np.array([1.0 / 11.0, 7.0 / 11.0])


@pytest.fixture
def quadratic():
    return Quadratic(A=QUAD_A, b=QUAD_B)


@pytest.fixture
def sphere():
    return Sphere(ambient_dim=3)


@pytest.fixture
def plane():
    return Euclidean(dim=2)


@pytest.fixture
def registry():
    return ObjectiveRegistry(PLUGIN_DIR)


def example_path(name: str) -> str:
    return os.path.join(EXAMPLE_DIR, name)


def sphere_start(theta: float) -> ManifoldPoint:
    coords = np.array([math.sin(theta), 0.0, math.cos(theta)])
    return ManifoldPoint(manifold=Sphere(ambient_dim=3), coords=coords / np.linalg.norm(coords))


def sphere_config(theta: float = 1e-3, max_iters: int = 10_000, **kwargs) -> RunConfig:
    x0 = sphere_start(theta)
    return RunConfig(
        objective=SphereHeight(),
        manifold=x0.manifold,
        x0=x0,
        schedule=ScheduleSpec(alpha=FixedStep(value=1.0)),
        step_rule=kwargs.pop("step_rule", StepRule.EXP_MAP),
        max_iters=max_iters,
        **kwargs,
    )


def half_square_sgd_config(gamma: float = 0.8, max_iters: int = 100, **kwargs) -> RunConfig:
    m = Euclidean(dim=1)
    return RunConfig(
        objective=HalfSquare(n=1),
        manifold=m,
        x0=ManifoldPoint(manifold=m, coords=[10.0]),
        schedule=ScheduleSpec(alpha=PowerLawStep(c=1.0, gamma=gamma)),
        max_iters=max_iters,
        **kwargs,
    )


def make_trace(k, values, seed: int = 0, column: str = "gap", config_key: str = "synthetic") -> Trace:
    k = np.asarray(k, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    n = len(k)
    meta = TraceMeta(
        method="rgd", seed=seed, objective={}, manifold="", schedule="", step_rule="",
        max_iters=max(0, n - 1), grad_tol=0.0, config_key=config_key,
    )
    cols = dict(f_value=values.copy(), grad_norm=np.zeros(n), alpha=np.zeros(n), beta=np.zeros(n))
    cols[column] = values
    return Trace(meta=meta, k=k, **cols)
