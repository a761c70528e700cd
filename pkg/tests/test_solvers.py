import itertools

import numpy as np
import pytest

from rtbounds import solvers
from rtbounds.kinds import SpectralFunctional
from rtbounds.linalg import ZeroGradientError
from rtbounds.registry import AscentRegistry, ascent
from rtbounds.samplers import SeedSpec, TensorClass, sample
from rtbounds.solvers import SolverConfig, solve
from rtbounds.tensor import Tensor, lp_norm, rank1_value

F = SpectralFunctional

CLASSES = {
    F.l2_singular: TensorClass.iid((3, 4, 5)),
    F.ld_singular: TensorClass.iid((3, 4, 5)),
    F.z_eig: TensorClass.symmetric(3, 4),
    F.h_eig: TensorClass.symmetric(4, 3),
    F.m_eig: TensorClass.partially_symmetric(2, 3),
    F.c_eig: TensorClass.piezoelectric(3),
}
FAST = SolverConfig(restarts=8)


def symmetrize(a):
    perms = list(itertools.permutations(range(a.ndim)))
    return sum(a.transpose(p) for p in perms) / len(perms)


class TestSolverConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"restarts": 0},
            {"max_iters": 0},
            {"tol": 0.0},
            {"shift": -1.0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

    def test_dict_round_trip(self):
        cfg = SolverConfig(restarts=5, shift=2.0, rng=SeedSpec(11, 3))
        assert SolverConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_uses_defaults(self):
        cfg = SolverConfig.from_dict({"tol": 1e-6}, defaults={"restarts": 4})
        assert cfg.restarts == 4
        assert cfg.tol == 1e-6
        assert cfg.max_iters == 500

    def test_from_missing_config_file(self, tmp_path):
        cfg = SolverConfig.from_config_file(
            tmp_path / "absent.conf", restarts=3, seed=9
        )
        assert cfg.restarts == 3
        assert cfg.rng == SeedSpec(9)
        assert cfg.tol == 1e-10


class TestSolve:
    def test_rank_one(self, unit_cube):
        result = solve(unit_cube, F.l2_singular)
        assert result.value == pytest.approx(2.0, abs=1e-9)
        assert result.converged
        for v in result.argmax:
            assert abs(v[0]) == pytest.approx(1.0)
        assert rank1_value(unit_cube, result.argmax) == pytest.approx(2.0)

    def test_matrix_singular_value(self, rng):
        a = rng.standard_normal((5, 7))
        result = solve(Tensor(a), F.l2_singular)
        expected = np.linalg.svd(a, compute_uv=False)[0]
        assert result.value == pytest.approx(expected, rel=1e-8)
        assert result.restarts == 1

    def test_tall_matrix(self, rng):
        a = rng.standard_normal((9, 3))
        result = solve(Tensor(a), F.ld_singular)
        expected = np.linalg.svd(a, compute_uv=False)[0]
        assert result.value == pytest.approx(expected, rel=1e-8)
        assert result.argmax.lengths == (9, 3)

    def test_matrix_eigen_vs_singular(self):
        t = Tensor(np.diag([1.0, -5.0]))
        assert solve(t, F.z_eig).value == pytest.approx(1.0)
        assert solve(t, F.h_eig).value == pytest.approx(1.0)
        assert solve(t, F.l2_singular).value == pytest.approx(5.0)

    def test_one_by_one(self):
        assert solve(Tensor(np.array([[-0.75]])), F.l2_singular).value == 0.75

    @pytest.mark.parametrize("functional", list(F))
    def test_zero_tensor(self, functional):
        dims = CLASSES[functional].dims
        result = solve(Tensor(np.zeros(dims)), functional)
        assert result.value == 0.0
        assert result.converged

    @pytest.mark.parametrize("functional", list(F))
    def test_feasible_argmax(self, functional):
        t = sample(CLASSES[functional], SeedSpec(3))
        result = solve(t, functional, FAST)
        p = float(t.order) if functional.uses_ld_sphere() else 2.0
        for v in result.argmax:
            assert lp_norm(v, p) == pytest.approx(1.0, abs=1e-10)
        assert result.value == pytest.approx(
            rank1_value(t, result.argmax), rel=1e-10
        )
        assert result.functional is functional

    @pytest.mark.parametrize("functional", list(F))
    def test_monotone_ascent(self, functional):
        t = sample(CLASSES[functional], SeedSpec(4))
        result = solve(t, functional, FAST)
        slack = 1e-12 * max(1.0, abs(result.value))
        assert result.histories
        for history in result.histories:
            steps = np.diff(np.asarray(history))
            assert np.all(steps >= -slack)

    @pytest.mark.parametrize("functional", list(F))
    def test_scale_equivariance(self, functional):
        t = sample(CLASSES[functional], SeedSpec(5))
        base = solve(t, functional, FAST).value
        for c in (0.25, 8.0):
            scaled = solve(c * t, functional, FAST).value
            assert scaled == pytest.approx(c * base, rel=1e-10)

    @pytest.mark.parametrize("seed", range(5))
    def test_entry_lower_bound(self, seed):
        t = sample(TensorClass.iid((3, 3, 4)), SeedSpec(seed))
        result = solve(t, F.l2_singular, SolverConfig(restarts=1))
        assert result.value >= t.max_abs_entry() - 1e-10

    @pytest.mark.parametrize("seed", range(5))
    def test_ld_dominates_l2(self, seed):
        t = sample(TensorClass.iid((3, 4, 5)), SeedSpec(seed))
        l2 = solve(t, F.l2_singular, FAST).value
        ld = solve(t, F.ld_singular, FAST).value
        assert ld >= l2 - 1e-10

    def test_singular_values_nonnegative(self, rng):
        t = Tensor(-np.abs(rng.standard_normal((2, 3, 2))))
        assert solve(t, F.l2_singular, FAST).value > 0
        assert solve(t, F.ld_singular, FAST).value > 0

    def test_z_eig_of_diagonal_symmetric_tensor(self):
        data = np.zeros((3, 3, 3))
        data[0, 0, 0], data[1, 1, 1], data[2, 2, 2] = 1.0, 3.0, -4.0
        result = solve(Tensor(data), F.z_eig)
        # Odd order: -4 e3 x e3 x e3 flips to +4 at u = -e3.
        assert result.value == pytest.approx(4.0, abs=1e-9)

    def test_deterministic(self, rng):
        t = Tensor(symmetrize(rng.standard_normal((3, 3, 3))))
        cfg = SolverConfig(restarts=6, rng=SeedSpec(17))
        first = solve(t, F.z_eig, cfg)
        second = solve(t, F.z_eig, cfg)
        assert first.value == second.value
        for u, v in zip(first.argmax, second.argmax):
            assert np.array_equal(u, v)

    def test_fixed_shift(self, rng):
        t = Tensor(symmetrize(rng.standard_normal((3, 3, 3))))
        result = solve(t, F.z_eig, SolverConfig(restarts=4, shift=5.0))
        assert result.final_shift is not None
        assert result.final_shift >= 5.0

    def test_result_to_dict(self, unit_cube):
        payload = solve(unit_cube, F.l2_singular, FAST).to_dict()
        assert payload["functional"] == "l2singular"
        assert payload["value"] == pytest.approx(2.0)
        assert len(payload["argmax"]) == 3
        assert payload["restarts"] == 8


class TestCompatibility:
    @pytest.mark.parametrize(
        "functional, data",
        [
            (F.z_eig, np.arange(8.0).reshape(2, 2, 2)),
            (F.h_eig, np.ones((2, 3))),
            (F.m_eig, np.ones((2, 2, 2))),
            (F.m_eig, np.arange(16.0).reshape(2, 2, 2, 2)),
            (F.c_eig, np.ones((3, 3))),
            (F.c_eig, np.arange(27.0).reshape(3, 3, 3)),
        ],
    )
    def test_incompatible(self, functional, data):
        with pytest.raises(solvers.IncompatibleTensorError):
            solve(Tensor(data), functional)

    def test_symmetry_checked_to_tolerance(self, rng):
        data = symmetrize(rng.standard_normal((3, 3, 3)))
        data[0, 1, 2] += 1e-6
        with pytest.raises(solvers.IncompatibleTensorError):
            solve(Tensor(data), F.z_eig)


class TestStarts:
    def test_first_coordinate_start_attains_max_entry(self, rng):
        a = rng.standard_normal((3, 4, 2))
        (start, *_) = solvers.coordinate_starts(F.l2_singular, a, 3)
        value = solvers.objective(F.l2_singular, a, start)
        assert value == pytest.approx(np.max(np.abs(a)))

    def test_layout(self):
        assert solvers.variable_layout(F.h_eig, (3, 3, 3)) == [(3, 3.0)]
        assert solvers.variable_layout(F.m_eig, (2, 5, 2, 5)) == [
            (2, 2.0),
            (5, 2.0),
        ]

    def test_expand_variables(self):
        u, v = np.ones(2), np.zeros(3)
        expanded = solvers.expand_variables(F.c_eig, (u, v), 3)
        assert expanded[0] is u and expanded[1] is v and expanded[2] is v


class TestCustomAscent:
    def test_solve_uses_given_registry(self, rng):
        local = AscentRegistry()
        calls = []

        @ascent(F.l2_singular, registry=local)
        def counting(a, start, cfg):
            calls.append(start)
            return solvers.higher_order_power_ascent(a, start, cfg)

        t = Tensor(rng.standard_normal((2, 3, 2)))
        result = solve(t, F.l2_singular, SolverConfig(restarts=5), local)
        assert len(calls) == 5
        assert result.value == pytest.approx(
            solve(t, F.l2_singular, SolverConfig(restarts=5)).value
        )

    def test_missing_registration(self, rng):
        t = Tensor(rng.standard_normal((2, 2, 2)))
        with pytest.raises(KeyError):
            solve(t, F.l2_singular, registry=AscentRegistry())

    def test_degenerate_starts_are_retried(self, rng):
        local = AscentRegistry()

        @ascent(F.l2_singular, registry=local)
        def flaky(a, start, cfg):
            if any(np.count_nonzero(v) == 1 for v in start):
                raise ZeroGradientError("coordinate start")
            return solvers.higher_order_power_ascent(a, start, cfg)

        t = Tensor(rng.standard_normal((3, 3, 3)))
        result = solve(t, F.l2_singular, SolverConfig(restarts=8), local)
        assert result.degenerate_restarts == 2
        assert result.value > 0

    def test_all_starts_degenerate(self, rng):
        local = AscentRegistry()

        @ascent(F.l2_singular, registry=local)
        def broken(a, start, cfg):
            raise ZeroGradientError("always")

        t = Tensor(rng.standard_normal((2, 2, 2)))
        with pytest.raises(solvers.DegenerateSolveError):
            solve(t, F.l2_singular, SolverConfig(restarts=2), local)
