import math

import deal
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtbounds import bounds
from rtbounds.bounds import BoundParameterError, bound
from rtbounds.kinds import SpectralFunctional
from rtbounds.samplers import TensorClass

F = SpectralFunctional


class TestGamma:
    @pytest.mark.parametrize(
        "x, expected",
        [
            (1.0, 1.0),
            (1.5, math.sqrt(math.pi) / 2),
            (1.25, 0.906402477055477),
            (5.0, 24.0),
        ],
    )
    def test_unit_values(self, x, expected):
        assert bounds.gamma_fn(x) == pytest.approx(expected, rel=1e-12)

    @given(st.floats(min_value=1e-3, max_value=170.0))
    def test_matches_reference(self, x):
        assert bounds.gamma_fn(x) == pytest.approx(math.gamma(x), rel=1e-12)

    @given(st.floats(min_value=1e-3, max_value=1e6))
    def test_log_matches_reference(self, x):
        assert bounds.log_gamma_fn(x) == pytest.approx(
            math.lgamma(x), rel=1e-12, abs=1e-12
        )

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
    def test_domain(self, x):
        with pytest.raises(deal.PreContractError):
            bounds.gamma_fn(x)


class TestHelpers:
    @pytest.mark.parametrize(
        "p, expected",
        [(0.0, 1.0), (1.0, math.sqrt(2 / math.pi)), (2.0, 1.0), (4.0, 3.0)],
    )
    def test_gaussian_abs_moment(self, p, expected):
        assert bounds.gaussian_abs_moment(p) == pytest.approx(
            expected, rel=1e-12
        )

    def test_gaussian_abs_moment_monte_carlo(self, rng):
        h = rng.standard_normal(200_000)
        for p in (1.5, 4.0 / 3.0, 1.2):
            samples = np.abs(h) ** p
            stderr = samples.std() / math.sqrt(samples.size)
            assert abs(samples.mean() - bounds.gaussian_abs_moment(p)) <= (
                5 * stderr
            )

    @pytest.mark.parametrize("d", range(2, 9))
    def test_ld_constant_closed_form(self, d):
        expected = 2 ** (d / 2) * (
            math.gamma(1 / (2 * (d - 1)) + 1) / math.sqrt(math.pi)
        ) ** ((d - 1) / d)
        assert math.exp(bounds._log_ld_constant(d)) == pytest.approx(
            expected, rel=1e-12
        )
        assert expected <= 2 ** ((d - 1) / 2) * (1 + 1e-12)

    @pytest.mark.parametrize("n, k", [(1, 3), (4, 2), (5, 3), (6, 4)])
    def test_lk_sphere_attained_by_uniform_vector(self, n, k):
        u = np.full(n, n ** (-1.0 / k))
        assert float(u @ u) == pytest.approx(
            bounds.lk_sphere_max_sq_l2(n, k), rel=1e-12
        )

    def test_lk_sphere_dominates_random_points(self, rng):
        for _ in range(100):
            v = rng.standard_normal(5)
            v = v / np.sum(np.abs(v) ** 3) ** (1 / 3)
            assert float(v @ v) <= bounds.lk_sphere_max_sq_l2(5, 3) + 1e-12

    def test_tail_prob(self):
        assert bounds.tail_prob(1e-12) == pytest.approx(1.0, abs=1e-15)
        assert bounds.tail_prob(1.0) == pytest.approx(math.exp(-0.5))
        assert bounds.tail_prob(2.0) == pytest.approx(0.1353352832366127)

    @given(st.floats(min_value=1e-6, max_value=30.0))
    def test_tail_prob_inverse(self, t):
        assert bounds.tail_prob(t) * math.exp(t * t / 2) == pytest.approx(
            1.0, rel=1e-14
        )

    def test_tail_prob_decreasing(self):
        ts = np.linspace(0.01, 5, 200)
        probs = [bounds.tail_prob(t) for t in ts]
        assert all(a > b for a, b in zip(probs, probs[1:]))

    @pytest.mark.parametrize("t", [0.0, -1.0])
    def test_tail_prob_domain(self, t):
        with pytest.raises(deal.PreContractError):
            bounds.tail_prob(t)


class TestBound:
    def test_l2_example(self):
        report = bound(F.l2_singular, TensorClass.iid((4, 9, 16)))
        assert report.bound_loose == 9.0
        assert report.bound_exact is None
        assert report.applicable == 9.0

    def test_gordon_matrix_bound(self):
        report = bound(F.l2_singular, TensorClass.iid((50, 50)))
        assert report.bound_loose == pytest.approx(2 * math.sqrt(50))

    def test_ld_examples(self):
        report = bound(F.ld_singular, TensorClass.iid((2, 2, 2)))
        assert report.bound_loose == pytest.approx(12.0, rel=1e-14)
        assert report.bound_exact == pytest.approx(10.853, abs=2e-3)
        assert report.applicable == report.bound_exact

    def test_ld_exact_formula(self):
        dims = (3, 4, 5)
        d = 3
        constant = 2 ** (d / 2) * (
            math.gamma(1 / (2 * (d - 1)) + 1) / math.sqrt(math.pi)
        ) ** ((d - 1) / d)
        rest = math.prod(dims) ** ((d - 2) / (2 * d)) * sum(
            math.sqrt(n) for n in dims
        )
        report = bound(F.ld_singular, TensorClass.iid(dims))
        assert report.bound_exact == pytest.approx(constant * rest, rel=1e-12)

    def test_ld_for_matrices(self):
        report = bound(F.ld_singular, TensorClass.iid((7, 11)))
        expected = math.sqrt(2) * (math.sqrt(7) + math.sqrt(11))
        assert report.bound_exact == pytest.approx(expected, rel=1e-12)
        assert report.bound_loose == pytest.approx(expected, rel=1e-12)

    def test_z_eig(self):
        report = bound(F.z_eig, TensorClass.symmetric(3, 5))
        assert report.bound_loose == pytest.approx(3 * math.sqrt(5))
        l2 = bound(F.l2_singular, TensorClass.symmetric(3, 5))
        assert report.bound_loose == pytest.approx(l2.bound_loose)

    def test_h_eig(self):
        d, n = 4, 3
        report = bound(F.h_eig, TensorClass.symmetric(d, n))
        loose = d * 2 ** ((d - 1) / 2) * n ** ((d - 1) / 2)
        assert report.bound_loose == pytest.approx(loose, rel=1e-12)
        assert report.bound_exact < report.bound_loose

    def test_m_and_c_eig(self):
        m_report = bound(F.m_eig, TensorClass.partially_symmetric(3, 4))
        assert m_report.bound_loose == pytest.approx(2 * math.sqrt(3) + 4)
        c_report = bound(F.c_eig, TensorClass.piezoelectric(4))
        assert c_report.bound_loose == pytest.approx(6.0)

    @pytest.mark.parametrize(
        "functional, tensor_class",
        [
            (F.z_eig, TensorClass.iid((3, 3, 3))),
            (F.h_eig, TensorClass.piezoelectric(3)),
            (F.m_eig, TensorClass.symmetric(4, 3)),
            (F.c_eig, TensorClass.symmetric(3, 3)),
        ],
    )
    def test_mismatched_class(self, functional, tensor_class):
        with pytest.raises(BoundParameterError):
            bound(functional, tensor_class)

    def test_tail(self):
        report = bound(F.z_eig, TensorClass.symmetric(3, 5), tail=2.0)
        assert report.tail_shift == 2.0
        assert report.tail_prob == pytest.approx(math.exp(-2.0))
        payload = report.to_dict()
        assert payload["tail_prob"] == report.tail_prob
        assert payload["class"] == {"kind": "symmetric", "order": 3, "n": 5}
        assert payload["functional"] == "zeig"

    def test_high_order_is_finite(self):
        report = bound(F.ld_singular, TensorClass.iid((50,) * 8))
        assert math.isfinite(report.bound_loose)
        assert report.bound_exact <= report.bound_loose

    @given(
        st.lists(st.integers(1, 50), min_size=2, max_size=8).map(tuple)
    )
    def test_chain_inequality(self, dims):
        d = len(dims)
        for functional, tensor_class in (
            (F.ld_singular, TensorClass.iid(dims)),
            (F.h_eig, TensorClass.symmetric(d, dims[0])),
        ):
            report = bound(functional, tensor_class)
            assert report.bound_exact <= report.bound_loose * (1 + 1e-12)
            assert report.bound_exact > 0

    @pytest.mark.parametrize("functional", list(F))
    def test_monotone_in_dimension(self, functional):
        kind_builders = {
            F.l2_singular: lambda n: TensorClass.iid((n, 3, 4)),
            F.ld_singular: lambda n: TensorClass.iid((3, n, 4)),
            F.z_eig: lambda n: TensorClass.symmetric(3, n),
            F.h_eig: lambda n: TensorClass.symmetric(4, n),
            F.m_eig: lambda n: TensorClass.partially_symmetric(n, 3),
            F.c_eig: lambda n: TensorClass.piezoelectric(n),
        }
        values = [
            bound(functional, kind_builders[functional](n)).applicable
            for n in range(1, 30)
        ]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_default_class(self):
        assert bounds.default_class(F.m_eig, (2, 3, 2, 3)) == (
            TensorClass.partially_symmetric(2, 3)
        )
        assert bounds.default_class(F.l2_singular, (2, 3)) == TensorClass.iid(
            (2, 3)
        )
