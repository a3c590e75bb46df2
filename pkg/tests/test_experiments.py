"""
长迭代与 Monte Carlo 实验：球面 1/k 界、动量下降的能量递减、随机下降的期望收敛速度

运行较慢，标记为 slow：pytest -m "not slow" 可以跳过。
"""

import math

import numpy as np
import pytest

from core.analysis import check_bound, energy_series, fit_rate, mean_trace
from core.experiment_file import ExperimentFile
from core.manifold import Euclidean, ManifoldPoint
from core.noise import NoiseFamily, NoiseSpec
from core.objective import Quadratic
from core.optimize import (
    PowerLawMomentum, PowerLawStep, RunConfig, ScheduleSpec, StepRule, run, run_momentum, run_rgd, run_sgd_batch,
)

from .conftest import QUAD_A, QUAD_B, X_STAR, example_path, half_square_sgd_config, sphere_config

SPHERE_C = math.pi ** 2 / 2

pytestmark = pytest.mark.slow


def test_sphere_bound_after_leaving_pole():
    trace = run_rgd(sphere_config(theta=1e-3))
    k, gap = trace.series("gap")
    report = check_bound(k, gap, p=1.0, anchor_k=20, C=SPHERE_C)
    assert report.satisfied
    # 北极附近梯度很小，前十几步的间隙接近 2，不满足 C/k
    early = check_bound(k, gap, p=1.0, anchor_k=0, C=SPHERE_C)
    assert not early.satisfied
    assert early.worst_k <= 20
    assert gap[3] * 3 > SPHERE_C


def test_sphere_bound_from_equator():
    trace = run_rgd(sphere_config(theta=math.pi / 2, max_iters=1000))
    k, gap = trace.series("gap")
    assert check_bound(k, gap, p=1.0, anchor_k=0, C=SPHERE_C).satisfied
    # d(x0, x*) = π/2 时界更紧
    assert check_bound(k, gap, p=1.0, anchor_k=0, C=(math.pi / 2) ** 2 / 2).satisfied


def test_normalize_retract_also_converges():
    trace = run_rgd(sphere_config(theta=1e-3, step_rule=StepRule.NORMALIZE_RETRACT))
    assert trace.gap[-1] <= SPHERE_C / 10_000


def test_euclidean_baseline_is_linear(registry):
    exp = ExperimentFile.load(example_path("euclidean_baseline.cfg"))
    trace = run(exp.build_run_config(registry), exp.method)
    expected = 0.5000005 * 0.25 ** trace.k.astype(float)
    np.testing.assert_allclose(trace.gap, expected, rtol=1e-12, atol=1e-300)
    bound = exp.bound_settings()
    assert check_bound(trace.k, trace.gap, bound["p"], 0, C=bound["C"]).satisfied


def test_momentum_energy_decreases():
    c, d = 0.2, 0.1
    m = Euclidean(dim=2)
    f = Quadratic(A=QUAD_A, b=QUAD_B)
    cfg = RunConfig(
        objective=f,
        manifold=m,
        x0=ManifoldPoint(manifold=m, coords=[0.0, 0.0]),
        schedule=ScheduleSpec(alpha=PowerLawStep(c=c, gamma=1.0), beta=PowerLawMomentum(d=d, gamma=1.0)),
        max_iters=100_000,
        record_x=True,
    )
    trace = run_momentum(cfg)
    e = energy_series(trace, X_STAR)
    assert np.all(np.diff(e[20:]) <= 1e-15)

    # 递推 E_{k+1} ≤ (1 - c/k) E_k 给出的是 k^{-2cλ_min} 而不是 k^{-2}
    p = min(2.0, 2 * c * f.eigenvalues()[0])
    fit = fit_rate(trace.k, trace.gap, (100, 100_000))
    assert fit.exponent == pytest.approx(p, abs=0.05)
    assert fit.r_squared > 0.99
    report = check_bound(trace.k, trace.gap, p=p, anchor_k=10, tolerance=0.05)
    assert report.satisfied, report
    assert report.checked == 100_000 - 10


@pytest.mark.parametrize("gamma", [0.6, 0.8, 1.0])
def test_sgd_expected_rate(gamma):
    n_iters = 10_000
    cfg = half_square_sgd_config(gamma=gamma, max_iters=n_iters, noise=NoiseSpec(family=NoiseFamily.UNIFORM))
    mean = mean_trace(run_sgd_batch(cfg, range(1, 1001)))
    k, gap = mean.series("gap")

    report = check_bound(k, gap, p=gamma - 0.5, anchor_k=10, tolerance=0.05)
    assert report.satisfied
    fit = fit_rate(k, gap, (100, n_iters))
    assert fit.exponent >= gamma - 0.5


def test_sgd_heavy_tailed_noise_still_converges():
    cfg = half_square_sgd_config(
        gamma=0.8, max_iters=2000, noise=NoiseSpec(family=NoiseFamily.STUDENT_T, dof=5.0, q=4.0),
    )
    mean = mean_trace(run_sgd_batch(cfg, range(200)))
    assert mean.gap[2000] < mean.gap[100] < mean.gap[10]
    assert fit_rate(mean.k, mean.gap, (100, 2000)).exponent >= 0.3
