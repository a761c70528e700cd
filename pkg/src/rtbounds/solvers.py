"""
Multi-start maximization of the six spectral functionals.

Each start runs a monotone ascent registered for its functional in
``rtbounds.registry``. Every value returned is the multilinear form
evaluated at a feasible point and therefore a lower bound on the true
maximum.

Starts are taken in a fixed order: a warm start (l^d functionals only),
coordinate starts built from the largest entries, then random starts.
Random start ``r`` draws from ``cfg.rng.child(r)`` so a solve is a pure
function of its tensor and configuration.
"""

from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from loguru import logger

from rtbounds.io import SOLVER_DEFAULTS, PathLike, configure_solver
from rtbounds.kinds import SpectralFunctional
from rtbounds.linalg import (
    ZeroGradientError,
    dual_norm_step,
    symmetric_eigen,
    top_eig_symmetric,
)
from rtbounds.registry import AscentRegistry, Registry, ascent
from rtbounds.samplers import SeedSpec
from rtbounds.tensor import (
    Tensor,
    VectorTuple,
    contract_modes,
    is_partially_symmetric,
    is_piezoelectric,
    is_symmetric,
)

F = SpectralFunctional
_SYMMETRIC = (F.z_eig, F.h_eig)

_TINY = float(np.finfo(np.float64).tiny)
# Two values closer than this (on the normalized tensor) are ties.
TIE_TOLERANCE = 1e-12
# Fresh random points tried after a start hits a zero gradient.
DEGENERATE_RETRIES = 3
# Relative gain under which an adaptive shift is halved.
STALL_GAIN = 1e-3
MIN_SHIFT = 1e-3


class IncompatibleTensorError(ValueError):
    pass


class DegenerateSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    """
    Settings shared by every start of one solve.

    ``shift`` fixes the Z/H-eigenvalue shift; ``None`` selects the adaptive
    schedule starting at ``1 + d * max|entry|``.
    """

    restarts: int = SOLVER_DEFAULTS["restarts"]
    max_iters: int = SOLVER_DEFAULTS["max_iters"]
    tol: float = SOLVER_DEFAULTS["tol"]
    shift: Optional[float] = None
    rng: SeedSpec = SeedSpec(0)

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.shift is not None and self.shift < 0:
            raise ValueError(f"shift must be nonnegative, got {self.shift}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "restarts": self.restarts,
            "max_iters": self.max_iters,
            "tol": self.tol,
            "shift": self.shift,
            "seed": self.rng.master_seed,
            "stream": self.rng.stream_index,
        }

    @classmethod
    def from_dict(
        cls, payload: dict[str, Any], defaults: Optional[dict] = None
    ) -> "SolverConfig":
        merged = dict(defaults or {})
        merged.update(payload)
        shift = merged.get("shift")
        return cls(
            restarts=int(merged.get("restarts", cls.restarts)),
            max_iters=int(merged.get("max_iters", cls.max_iters)),
            tol=float(merged.get("tol", cls.tol)),
            shift=None if shift is None else float(shift),
            rng=SeedSpec(
                int(merged.get("seed", 0)), int(merged.get("stream", 0))
            ),
        )

    @classmethod
    def from_config_file(cls, path: PathLike, **overrides) -> "SolverConfig":
        """
        Build a configuration from the on-disk defaults file, with keyword
        overrides taking precedence.
        """
        return cls.from_dict(overrides, defaults=configure_solver(path))


@dataclass(frozen=True, eq=False)
class SolveResult:
    value: float
    argmax: VectorTuple
    iterations_total: int
    converged: bool
    functional: SpectralFunctional
    restarts: int = 0
    degenerate_restarts: int = 0
    final_shift: Optional[float] = None
    # Objective trace of every start, in tensor units.
    histories: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "functional": self.functional.slug,
            "value": self.value,
            "argmax": [v.tolist() for v in self.argmax],
            "iterations_total": self.iterations_total,
            "converged": self.converged,
            "restarts": self.restarts,
            "degenerate_restarts": self.degenerate_restarts,
            "final_shift": self.final_shift,
        }


@dataclass
class _StartOutcome:
    value: float
    variables: tuple[np.ndarray, ...]
    iterations: int
    converged: bool
    history: list[float]
    shift: Optional[float] = None


def _has_converged(previous: float, current: float, tol: float) -> bool:
    return abs(current - previous) <= tol * max(abs(current), _TINY)


def _unit(v: np.ndarray, p: float) -> np.ndarray:
    v = v / np.max(np.abs(v))
    return v / float(np.sum(np.abs(v) ** p) ** (1.0 / p))


def expand_variables(
    functional: SpectralFunctional,
    variables: Sequence[np.ndarray],
    order: int,
) -> tuple[np.ndarray, ...]:
    """
    Map a functional's free vectors onto one vector per tensor mode.
    """
    if functional in _SYMMETRIC:
        return tuple(variables[0] for _ in range(order))
    if functional is F.m_eig:
        u, v = variables
        return (u, v, u, v)
    if functional is F.c_eig:
        u, v = variables
        return (u, v, v)
    return tuple(variables)


def variable_layout(
    functional: SpectralFunctional, dims: Sequence[int]
) -> list[tuple[int, float]]:
    """(length, sphere exponent) of each free vector."""
    d = len(dims)
    if functional is F.l2_singular:
        return [(n, 2.0) for n in dims]
    if functional is F.ld_singular:
        return [(n, float(d)) for n in dims]
    if functional is F.z_eig:
        return [(dims[0], 2.0)]
    if functional is F.h_eig:
        return [(dims[0], float(d))]
    if functional is F.m_eig:
        return [(dims[0], 2.0), (dims[1], 2.0)]
    return [(dims[0], 2.0), (dims[0], 2.0)]


def objective(
    functional: SpectralFunctional,
    a: np.ndarray,
    variables: Sequence[np.ndarray],
) -> float:
    expanded = expand_variables(functional, variables, a.ndim)
    return float(contract_modes(a, expanded))


def _random_start(
    layout: Sequence[tuple[int, float]], rng: np.random.Generator
) -> tuple[np.ndarray, ...]:
    vectors = []
    for n, p in layout:
        v = rng.standard_normal(n)
        while not np.any(v):
            v = rng.standard_normal(n)
        vectors.append(_unit(v, p))
    return tuple(vectors)


def _basis(n: int, i: int, sign: float = 1.0) -> np.ndarray:
    e = np.zeros(n)
    e[i] = sign
    return e


def _signed(value: float) -> float:
    return -1.0 if value < 0 else 1.0


def coordinate_starts(
    functional: SpectralFunctional, a: np.ndarray, count: int
) -> list[tuple[np.ndarray, ...]]:
    """
    Feasible starts built from basis vectors at the largest achievable
    entries. For the singular values the first start attains max |entry|.
    """
    dims = a.shape
    d = a.ndim
    starts = []
    if functional in (F.l2_singular, F.ld_singular):
        order = np.argsort(-np.abs(a).reshape(-1), kind="stable")[:count]
        for pos in order:
            idx = np.unravel_index(pos, dims)
            sign = _signed(a[idx])
            starts.append(
                tuple(
                    _basis(n, int(i), sign if mode == 0 else 1.0)
                    for mode, (n, i) in enumerate(zip(dims, idx))
                )
            )
    elif functional in _SYMMETRIC:
        n = dims[0]
        diagonal = np.array([a[(i,) * d] for i in range(n)])
        # Odd orders can flip the sign of the start; even orders cannot.
        signs = np.where(diagonal < 0, -1.0, 1.0) if d % 2 else np.ones(n)
        order = np.argsort(-(signs * diagonal), kind="stable")[:count]
        starts = [(_basis(n, int(i), signs[i]),) for i in order]
    elif functional is F.m_eig:
        m, n = dims[0], dims[1]
        diagonal = np.einsum("ijij->ij", a).reshape(-1)
        order = np.argsort(-diagonal, kind="stable")[:count]
        for pos in order:
            i, j = divmod(int(pos), n)
            starts.append((_basis(m, i), _basis(n, j)))
    else:
        n = dims[0]
        diagonal = np.einsum("ijj->ij", a).reshape(-1)
        order = np.argsort(-np.abs(diagonal), kind="stable")[:count]
        for pos in order:
            i, j = divmod(int(pos), n)
            starts.append((_basis(n, i, _signed(diagonal[pos])), _basis(n, j)))
    return starts


def _block_ascent(a, start, cfg: SolverConfig, update) -> _StartOutcome:
    vectors = list(start)
    previous = float(contract_modes(a, vectors))
    history = [previous]
    converged = False
    current = previous
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        for mode in range(a.ndim):
            g = contract_modes(a, vectors, skip=mode)
            vectors[mode] = update(g)
        current = float(np.dot(g, vectors[-1]))
        history.append(current)
        if _has_converged(previous, current, cfg.tol):
            converged = True
            break
        previous = current
    return _StartOutcome(
        current, tuple(vectors), iterations, converged, history
    )


def _unit_l2(g: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(g))
    if norm == 0.0:
        raise ZeroGradientError("Zero gradient in power step")
    return g / norm


@ascent(F.l2_singular)
def higher_order_power_ascent(a, start, cfg: SolverConfig) -> _StartOutcome:
    """Cyclic u_j <- g_j / ||g_j||_2."""
    return _block_ascent(a, start, cfg, _unit_l2)


@ascent(F.ld_singular)
def dual_norm_ascent(a, start, cfg: SolverConfig) -> _StartOutcome:
    """Cyclic u_j <- argmax over the unit l^d sphere of <g_j, u_j>."""
    d = a.ndim
    return _block_ascent(a, start, cfg, lambda g: dual_norm_step(g, d))


def _symmetric_gradient(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    return contract_modes(a, [u] * a.ndim, skip=0)


def _shifted_ascent(a, start, cfg: SolverConfig, step) -> _StartOutcome:
    """
    Shifted symmetric power iteration u <- step(g, u, alpha).

    Steps that would lower the objective are rejected and the shift is
    doubled; an adaptive shift is halved while progress is slow.
    """
    d = a.ndim
    adaptive = cfg.shift is None
    alpha = 1.0 + d * float(np.max(np.abs(a))) if adaptive else cfg.shift
    floor = MIN_SHIFT if adaptive else cfg.shift

    (u,) = start
    g = _symmetric_gradient(a, u)
    current = float(np.dot(g, u))
    history = [current]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        candidate = step(g, u, alpha)
        g_candidate = _symmetric_gradient(a, candidate)
        value = float(np.dot(g_candidate, candidate))
        if value < current:
            alpha = 2.0 * alpha if alpha > 0 else 1.0
            continue
        gain = value - current
        u, g, current = candidate, g_candidate, value
        history.append(current)
        if gain <= cfg.tol * max(abs(current), _TINY):
            converged = True
            break
        if adaptive and gain < STALL_GAIN * max(abs(current), _TINY):
            alpha = max(0.5 * alpha, floor)
    return _StartOutcome(current, (u,), iterations, converged, history, alpha)


@ascent(F.z_eig)
def shifted_power_ascent(a, start, cfg: SolverConfig) -> _StartOutcome:
    return _shifted_ascent(
        a, start, cfg, lambda g, u, alpha: _unit_l2(g + alpha * u)
    )


@ascent(F.h_eig)
def shifted_dual_ascent(a, start, cfg: SolverConfig) -> _StartOutcome:
    d = a.ndim

    def step(g, u, alpha):
        return dual_norm_step(g + alpha * np.sign(u) * np.abs(u) ** (d - 1), d)

    return _shifted_ascent(a, start, cfg, step)


def _symmetrized(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


@ascent(F.m_eig)
def alternating_m_ascent(a, start, cfg: SolverConfig) -> _StartOutcome:
    """
    Alternate v <- top eigenvector of B(u) and u <- top eigenvector of
    C(v).
    """
    u, v = start
    previous = objective(F.m_eig, a, (u, v))
    history = [previous]
    converged = False
    current = previous
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        b = _symmetrized(np.einsum("ijkl,i,k->jl", a, u, u))
        _, v = top_eig_symmetric(b)
        c = _symmetrized(np.einsum("ijkl,j,l->ik", a, v, v))
        current, u = top_eig_symmetric(c)
        history.append(current)
        if _has_converged(previous, current, cfg.tol):
            converged = True
            break
        previous = current
    return _StartOutcome(current, (u, v), iterations, converged, history)


@ascent(F.c_eig)
def alternating_c_ascent(a, start, cfg: SolverConfig) -> _StartOutcome:
    """
    Alternate v <- top eigenvector of M(u) and u <- w / ||w|| with
    w_i = sum_jk A_ijk v_j v_k.
    """
    u, v = start
    previous = objective(F.c_eig, a, (u, v))
    history = [previous]
    converged = False
    current = previous
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        _, v = top_eig_symmetric(_symmetrized(np.tensordot(u, a, axes=1)))
        w = contract_modes(a, [u, v, v], skip=0)
        u = _unit_l2(w)
        current = float(np.dot(w, u))
        history.append(current)
        if _has_converged(previous, current, cfg.tol):
            converged = True
            break
        previous = current
    return _StartOutcome(current, (u, v), iterations, converged, history)


def check_compatible(t: Tensor, functional: SpectralFunctional):
    """
    Raises
    ------
    IncompatibleTensorError
        The tensor lacks the shape or symmetry ``functional`` requires.
    """
    if functional in _SYMMETRIC and not is_symmetric(t):
        raise IncompatibleTensorError(
            f"{functional.slug} needs a symmetric tensor, got {t.shape}"
        )
    if functional is F.m_eig and not is_partially_symmetric(t):
        raise IncompatibleTensorError(
            f"{functional.slug} needs a partially symmetric (m, n, m, n) "
            f"tensor, got {t.shape}"
        )
    if functional is F.c_eig and not is_piezoelectric(t):
        raise IncompatibleTensorError(
            f"{functional.slug} needs an (n, n, n) tensor symmetric in its "
            f"last two modes, got {t.shape}"
        )


def _zero_result(t: Tensor, functional: SpectralFunctional) -> SolveResult:
    layout = variable_layout(functional, t.shape.dims)
    variables = [_basis(n, 0) for n, _ in layout]
    return SolveResult(
        value=0.0,
        argmax=VectorTuple(expand_variables(functional, variables, t.order)),
        iterations_total=0,
        converged=True,
        functional=functional,
    )


def _matrix_solve(
    a: np.ndarray, scale: float, functional: SpectralFunctional
) -> SolveResult:
    if functional in _SYMMETRIC:
        values, vectors, sweeps = symmetric_eigen(a)
        u = vectors[:, int(np.argmax(values))]
        pair = (u, u)
    else:
        rows, cols = a.shape
        gram = _symmetrized(a @ a.T if rows <= cols else a.T @ a)
        values, vectors, sweeps = symmetric_eigen(gram)
        x = vectors[:, int(np.argmax(values))]
        y = a.T @ x if rows <= cols else a @ x
        y = y / np.linalg.norm(y)
        pair = (x, y) if rows <= cols else (y, x)
    value = float(pair[0] @ a @ pair[1]) * scale
    return SolveResult(
        value=value,
        argmax=VectorTuple(pair),
        iterations_total=sweeps,
        converged=True,
        functional=functional,
        restarts=1,
    )


def _warm_start(
    t: Tensor, functional: SpectralFunctional, cfg: SolverConfig
) -> tuple[tuple[np.ndarray, ...], int]:
    """
    l^2 maximizer of the companion functional, rescaled onto the unit l^d
    spheres. Rescaling only lengthens the multilinear form when it is
    nonnegative.
    """
    companion = F.l2_singular if functional is F.ld_singular else F.z_eig
    result = solve(t, companion, cfg)
    d = t.order
    if functional is F.ld_singular:
        variables = tuple(_unit(v, d) for v in result.argmax)
    else:
        variables = (_unit(result.argmax[0], d),)
    return variables, result.iterations_total


def _run_start(
    routine,
    functional: SpectralFunctional,
    a: np.ndarray,
    start: Optional[tuple[np.ndarray, ...]],
    cfg: SolverConfig,
    index: int,
) -> tuple[Optional[_StartOutcome], int]:
    layout = variable_layout(functional, a.shape)
    rng: Optional[np.random.Generator] = None
    degenerate = 0
    for _ in range(DEGENERATE_RETRIES + 1):
        if start is None:
            if rng is None:
                rng = cfg.rng.child(index).generator()
            start = _random_start(layout, rng)
        try:
            return routine(a, start, cfg), degenerate
        except ZeroGradientError:
            degenerate += 1
            start = None
            logger.warning(
                f"{functional.slug} start {index} hit a zero gradient, "
                "restarting from a random point"
            )
    return None, degenerate


def solve(
    t: Tensor,
    functional: SpectralFunctional,
    cfg: Optional[SolverConfig] = None,
    registry: AscentRegistry = Registry,
) -> SolveResult:
    """
    Maximize ``functional`` for tensor ``t`` over ``cfg.restarts`` starts.

    Order-2 tensors are handled exactly through the symmetric eigensolver.
    The tensor is divided by its largest absolute entry before iterating
    and the value is scaled back.

    Raises
    ------
    IncompatibleTensorError
        ``t`` does not have the shape or symmetry the functional needs.
    DegenerateSolveError
        Every start degenerated to a zero gradient.
    """
    cfg = cfg or SolverConfig()
    check_compatible(t, functional)
    scale = t.max_abs_entry()
    if scale == 0.0:
        return _zero_result(t, functional)
    a = t.data / scale
    d = t.order
    if d == 2:
        return _matrix_solve(a, scale, functional)

    routine = registry[functional]
    starts: list[Optional[tuple[np.ndarray, ...]]] = []
    iterations_total = 0
    if functional in (F.ld_singular, F.h_eig):
        warm, warm_iterations = _warm_start(t, functional, cfg)
        starts.append(warm)
        iterations_total += warm_iterations
    n_coord = max(1, cfg.restarts // 4)
    coords = coordinate_starts(functional, a, n_coord)
    starts.extend(coords)
    starts.extend([None] * (cfg.restarts - len(coords)))

    outcomes: list[Optional[_StartOutcome]] = []
    degenerate_total = 0
    for index, start in enumerate(starts):
        outcome, degenerate = _run_start(
            routine, functional, a, start, cfg, index
        )
        degenerate_total += degenerate
        outcomes.append(outcome)
        if outcome is not None:
            iterations_total += outcome.iterations
            logger.debug(
                f"{functional.slug} start {index}: value "
                f"{outcome.value * scale:.12g} after {outcome.iterations} "
                f"iterations (converged={outcome.converged})"
            )

    finished = [o for o in outcomes if o is not None]
    if not finished:
        raise DegenerateSolveError(
            f"All {len(starts)} starts of {functional.slug} degenerated"
        )
    best = max(o.value for o in finished)
    chosen = next(o for o in finished if o.value >= best - TIE_TOLERANCE)
    expanded = expand_variables(functional, chosen.variables, d)

    return SolveResult(
        value=float(contract_modes(a, expanded)) * scale,
        argmax=VectorTuple(expanded),
        iterations_total=iterations_total,
        converged=chosen.converged,
        functional=functional,
        restarts=len(starts),
        degenerate_restarts=degenerate_total,
        final_shift=chosen.shift,
        histories=tuple(
            tuple(scale * value for value in o.history) for o in finished
        ),
    )
