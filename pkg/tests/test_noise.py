import numpy as np
import pytest

from core.noise import NoiseFamily, NoiseSpec, RngState, draw_block, empirical_moment, sample


def test_zero_noise_is_zero():
    spec = NoiseSpec(family=NoiseFamily.ZERO, dim=3)
    state = RngState.from_seed(1)
    for _ in range(5):
        xi, state = sample(spec, state)
        np.testing.assert_array_equal(xi, np.zeros(3))
    assert empirical_moment(spec, 2.0, 1000, seed=0).value == 0.0


def test_uniform_draws_in_range_and_centered():
    spec = NoiseSpec(family=NoiseFamily.UNIFORM, half_width=1.0)
    xi = draw_block(spec, seed=3, n=1_000_000)
    assert xi.shape == (1_000_000, 1)
    assert np.all(np.abs(xi) <= 1.0)
    assert abs(xi.mean()) <= 4.0 * (1.0 / np.sqrt(3.0)) / 1e3


def test_sample_matches_block_and_advances_state():
    spec = NoiseSpec(family=NoiseFamily.STUDENT_T, dof=5.0, q=4.0, dim=2)
    block = draw_block(spec, seed=11, n=4)
    state = RngState.from_seed(11)
    for i in range(4):
        xi, state = sample(spec, state)
        np.testing.assert_array_equal(xi, block[i])
    assert state.counter == 4


def test_sample_is_pure():
    spec = NoiseSpec(family=NoiseFamily.GAUSSIAN, scale=2.0)
    state = RngState.from_seed(5)
    a, _ = sample(spec, state)
    b, _ = sample(spec, state)
    np.testing.assert_array_equal(a, b)


def test_different_seeds_give_different_streams():
    spec = NoiseSpec(family=NoiseFamily.UNIFORM)
    assert not np.array_equal(draw_block(spec, 1, 10), draw_block(spec, 2, 10))


def test_uniform_moments():
    spec = NoiseSpec(family=NoiseFamily.UNIFORM, half_width=1.0)
    assert empirical_moment(spec, 2.0, 1_000_000, seed=0).value == pytest.approx(1.0 / 3.0, abs=0.01)
    assert empirical_moment(spec, 4.0, 1_000_000, seed=0).value == pytest.approx(1.0 / 5.0, abs=0.01)


def test_student_t_fourth_moment_is_stable():
    # ν = 5 时四阶矩存在（理论值 3ν²/((ν-2)(ν-4)) = 25），样本数增加十倍中位数变化不大
    spec = NoiseSpec(family=NoiseFamily.STUDENT_T, dof=5.0, q=4.0)
    small = np.median([empirical_moment(spec, 4.0, 100_000, seed=s).value for s in range(5)])
    large = np.median([empirical_moment(spec, 4.0, 1_000_000, seed=s).value for s in range(5)])
    assert abs(small - large) / large < 0.2
    assert not empirical_moment(spec, 4.0, 1000, seed=0).diverging


def test_student_t_sixth_moment_flagged():
    spec = NoiseSpec(family=NoiseFamily.STUDENT_T, dof=5.0, q=4.0)
    est = empirical_moment(spec, 6.0, 10_000, seed=0)
    assert est.diverging


def test_moment_needs_enough_samples():
    with pytest.raises(ValueError):
        empirical_moment(NoiseSpec(family=NoiseFamily.UNIFORM), 2.0, 999, seed=0)


@pytest.mark.parametrize("kwargs", [
    {"family": "student_t", "dof": 4.0, "q": 4.0},
    {"family": "student_t", "dof": 2.0},
    {"family": "uniform", "half_width": 0.0},
    {"family": "uniform", "q": 2.0},
    {"family": "cauchy"},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        NoiseSpec(**kwargs)
