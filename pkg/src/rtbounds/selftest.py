"""
Randomized property suites behind the bounds: the product-distance
inequalities on unit spheres, the 1-Lipschitz property of the spectral
norm, and the ordering of the two displayed forms of each l^d bound.

Each check reports its worst slack (right-hand side minus left-hand side);
a check passes when no sample violates its inequality beyond rounding.
"""

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import tabulate
from loguru import logger

from rtbounds.bounds import bound, lk_sphere_max_sq_l2
from rtbounds.kinds import SpectralFunctional
from rtbounds.oracle import grid_oracle, grid_tolerance
from rtbounds.samplers import TensorClass, derive_substream
from rtbounds.tensor import Tensor, frobenius_norm

ROUNDING_SLACK = 1e-12


@dataclass(frozen=True)
class CheckResult:
    name: str
    samples: int
    worst_slack: float
    passed: bool

    def as_row(self) -> tuple:
        return (
            self.name,
            self.samples,
            f"{self.worst_slack:.3e}",
            "pass" if self.passed else "FAIL",
        )


def _unit_vectors(rng, dims: Sequence[int], p: float) -> list[np.ndarray]:
    vectors = []
    for n in dims:
        v = rng.standard_normal(n)
        vectors.append(v / np.sum(np.abs(v) ** p) ** (1.0 / p))
    return vectors


def _partner(rng, vectors: list[np.ndarray], p: float) -> list[np.ndarray]:
    """Independent unit vectors, or small perturbations half of the time."""
    if rng.random() < 0.5:
        return _unit_vectors(rng, [v.size for v in vectors], p)
    eps = 10.0 ** rng.uniform(-3.0, 0.0)
    partner = []
    for v in vectors:
        w = v + eps * rng.standard_normal(v.size)
        partner.append(w / np.sum(np.abs(w) ** p) ** (1.0 / p))
    return partner


def _outer_distance_sq(u: list[np.ndarray], w: list[np.ndarray]) -> float:
    diff = reduce(np.multiply.outer, u) - reduce(np.multiply.outer, w)
    return float(np.sum(diff**2))


def product_distance_check(
    samples: int = 10_000, seed: int = 0, max_dim: int = 6
) -> CheckResult:
    """
    For unit Euclidean vectors,
    ||u_1 x ... x u_d - w_1 x ... x w_d||_F^2 <= sum_j ||u_j - w_j||^2.
    """
    rng = derive_substream(seed, 0).generator()
    worst = np.inf
    for _ in range(samples):
        d = int(rng.integers(2, 5))
        dims = rng.integers(1, max_dim + 1, size=d)
        u = _unit_vectors(rng, dims, 2.0)
        w = _partner(rng, u, 2.0)
        rhs = sum(float(np.sum((a - b) ** 2)) for a, b in zip(u, w))
        worst = min(worst, rhs - _outer_distance_sq(u, w))
    return CheckResult(
        "product distance (l2 spheres)",
        samples,
        float(worst),
        bool(worst >= -ROUNDING_SLACK),
    )


def lk_sphere_check(
    samples: int = 10_000, seed: int = 0, max_dim: int = 6
) -> CheckResult:
    """
    For unit l^k vectors with k = d,
    ||u_1 x ... x u_d - w_1 x ... x w_d||_F^2
        <= 2^(d-1) sum_j prod_{i != j} n_i^((k-2)/k) ||u_j - w_j||_2^2.
    """
    rng = derive_substream(seed, 1).generator()
    worst = np.inf
    for _ in range(samples):
        d = int(rng.integers(3, 5))
        k = float(d)
        dims = [int(n) for n in rng.integers(1, max_dim + 1, size=d)]
        u = _unit_vectors(rng, dims, k)
        w = _partner(rng, u, k)
        weights = [lk_sphere_max_sq_l2(n, k) for n in dims]
        rhs = 0.0
        for j, (a, b) in enumerate(zip(u, w)):
            others = np.prod([x for i, x in enumerate(weights) if i != j])
            rhs += float(others) * float(np.sum((a - b) ** 2))
        rhs *= 2.0 ** (d - 1)
        worst = min(worst, rhs - _outer_distance_sq(u, w))
    return CheckResult(
        "product distance (l^k spheres, k = d)",
        samples,
        float(worst),
        bool(worst >= -ROUNDING_SLACK),
    )


def lipschitz_check(
    pairs: int = 100, seed: int = 0, resolution: int = 360
) -> CheckResult:
    """
    |rho(A) - rho(B)| <= ||A - B||_F on 2x2x2 pairs, with rho from the
    grid oracle and slack for both grid tolerances.
    """
    rng = derive_substream(seed, 2).generator()
    worst = np.inf
    for _ in range(pairs):
        a = Tensor(rng.standard_normal((2, 2, 2)))
        scale = 10.0 ** rng.uniform(-2.0, 0.0)
        b = Tensor(a.data + scale * rng.standard_normal((2, 2, 2)))
        rho_a = grid_oracle(a, SpectralFunctional.l2_singular, resolution)
        rho_b = grid_oracle(b, SpectralFunctional.l2_singular, resolution)
        allowed = (
            frobenius_norm(a - b)
            + grid_tolerance(a, resolution)
            + grid_tolerance(b, resolution)
        )
        worst = min(worst, allowed - abs(rho_a - rho_b))
    return CheckResult(
        "spectral norm 1-Lipschitz (2x2x2 grid)",
        pairs,
        float(worst),
        bool(worst >= -ROUNDING_SLACK),
    )


def bound_chain_check(
    shapes: int = 1000, seed: int = 0, max_order: int = 8, max_dim: int = 50
) -> CheckResult:
    """The Gamma-constant l^d bounds never exceed their loose forms."""
    rng = derive_substream(seed, 3).generator()
    worst = np.inf
    for _ in range(shapes):
        d = int(rng.integers(2, max_order + 1))
        dims = tuple(int(n) for n in rng.integers(1, max_dim + 1, size=d))
        for functional, tensor_class in (
            (SpectralFunctional.ld_singular, TensorClass.iid(dims)),
            (SpectralFunctional.h_eig, TensorClass.symmetric(d, dims[0])),
        ):
            report = bound(functional, tensor_class)
            if report.bound_exact is None:
                continue
            slack = (report.bound_loose - report.bound_exact) / max(
                report.bound_loose, 1.0
            )
            worst = min(worst, slack)
    return CheckResult(
        "exact <= loose bound constants",
        shapes,
        float(worst),
        bool(worst >= -ROUNDING_SLACK),
    )


def run_selftest(seed: int = 0, samples: int = 10_000) -> list[CheckResult]:
    results = [
        product_distance_check(samples, seed),
        lk_sphere_check(samples, seed),
        lipschitz_check(seed=seed),
        bound_chain_check(seed=seed),
    ]
    for result in results:
        if result.passed:
            logger.debug(f"{result.name}: worst slack {result.worst_slack}")
        else:
            logger.warning(f"{result.name} failed: {result.worst_slack}")
    if all(result.passed for result in results):
        logger.success("All self-test checks passed")
    return results


def format_report(
    results: Sequence[CheckResult], table_format: str = "simple"
) -> str:
    fields = ["check", "samples", "worst slack", "status"]
    rows = [result.as_row() for result in results]
    return tabulate.tabulate(rows, fields, tablefmt=table_format)
