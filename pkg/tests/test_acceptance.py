"""
Monte Carlo runs at full scale. These take minutes and are excluded from the
default nox session; run them with ``nox -s acceptance``.
"""

import math

import pytest

from rtbounds.harness import run_experiment
from rtbounds.kinds import SpectralFunctional
from rtbounds.models import ExperimentConfig
from rtbounds.oracle import grid_oracle, grid_tolerance
from rtbounds.samplers import TensorClass, derive_substream, sample
from rtbounds.solvers import SolverConfig, solve

F = SpectralFunctional

pytestmark = [pytest.mark.slow, pytest.mark.timeout(0)]


def test_gordon_square_matrices():
    config = ExperimentConfig(
        TensorClass.iid((50, 50)), F.l2_singular, trials=200, master_seed=1
    )
    _, summary = run_experiment(config, threads=4)
    assert summary.bound_loose == pytest.approx(2 * math.sqrt(50))
    assert summary.pass_expectation
    assert summary.mean_over_bound >= 0.90


@pytest.mark.parametrize(
    "functional, tensor_class",
    [
        (F.l2_singular, TensorClass.iid((3, 4, 5))),
        (F.ld_singular, TensorClass.iid((3, 4, 5))),
        (F.z_eig, TensorClass.symmetric(3, 5)),
        (F.h_eig, TensorClass.symmetric(3, 5)),
        (F.m_eig, TensorClass.partially_symmetric(3, 4)),
        (F.c_eig, TensorClass.piezoelectric(4)),
    ],
)
def test_expectation_bounds(functional, tensor_class):
    config = ExperimentConfig(
        tensor_class,
        functional,
        trials=500,
        master_seed=2,
        solver=SolverConfig(restarts=8),
    )
    _, summary = run_experiment(config, threads=4)
    assert summary.pass_expectation
    assert summary.excluded_trials <= 25


@pytest.mark.parametrize(
    "functional, tensor_class",
    [
        (F.l2_singular, TensorClass.iid((50, 50))),
        (F.z_eig, TensorClass.symmetric(3, 5)),
    ],
)
def test_concentration_tails(functional, tensor_class):
    config = ExperimentConfig(
        tensor_class,
        functional,
        trials=500,
        master_seed=3,
        solver=SolverConfig(restarts=8),
        tail_shifts=(0.5, 1.0, 2.0),
    )
    _, summary = run_experiment(config, threads=4)
    assert [tail.t for tail in summary.tails] == [0.5, 1.0, 2.0]
    assert all(tail.passed for tail in summary.tails)


def test_scalar_half_normal_mean():
    config = ExperimentConfig(
        TensorClass.iid((1, 1)), F.l2_singular, trials=100_000, master_seed=4
    )
    _, summary = run_experiment(config, threads=4)
    expected = math.sqrt(2.0 / math.pi)
    assert abs(summary.mean - expected) <= 3 * summary.stderr
    assert summary.stderr == pytest.approx(
        math.sqrt((1 - 2 / math.pi) / 100_000), rel=0.05
    )


@pytest.mark.parametrize(
    "functional, tensor_class",
    [
        (F.l2_singular, TensorClass.iid((2, 2, 2))),
        (F.ld_singular, TensorClass.iid((2, 2, 2))),
        (F.z_eig, TensorClass.symmetric(3, 2)),
        (F.h_eig, TensorClass.symmetric(3, 2)),
    ],
)
def test_solver_matches_grid(functional, tensor_class):
    for index in range(20):
        t = sample(tensor_class, derive_substream(5, index))
        value = solve(t, functional).value
        reference = grid_oracle(t, functional)
        assert abs(value - reference) <= max(1e-3, grid_tolerance(t))
