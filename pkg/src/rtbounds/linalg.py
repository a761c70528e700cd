"""
Small dense linear algebra kernels used inside the spectral solvers.
"""

from functools import lru_cache

import deal
import numpy as np

from rtbounds.tensor import lp_norm


class AsymmetricMatrixError(ValueError):
    pass


class ZeroGradientError(ValueError):
    pass


@lru_cache(maxsize=128)
def _round_robin(m: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """
    Circle-method schedule pairing ``m`` (even) indices into m - 1 rounds of
    disjoint pairs; every unordered pair occurs exactly once per sweep.
    """
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[k], players[m - 1 - k]) for k in range(m // 2)]
        p = np.array([min(pair) for pair in pairs])
        q = np.array([max(pair) for pair in pairs])
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def symmetric_eigen(
    matrix: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    Eigen-decomposition of a real symmetric matrix by cyclic Jacobi
    rotations.

    Disjoint rotation pairs of one round-robin round are applied together.
    Sweeps stop once the off-diagonal Frobenius mass falls below
    ``tol * ||M||_F``.

    Returns
    -------
    (eigenvalues, eigenvectors, sweeps)
        Eigenvectors are the columns of the second array.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise AsymmetricMatrixError(f"Expected a square matrix, got {a.shape}")
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.any(np.abs(a - a.T) > 1e-12 * scale):
        raise AsymmetricMatrixError("Matrix is not symmetric to 1e-12")
    a = 0.5 * (a + a.T)
    v = np.eye(n)

    # Rotations preserve the Frobenius norm.
    fro = float(np.linalg.norm(a))
    if n == 1 or fro == 0.0:
        return np.diag(a).copy(), v, 0

    schedule = _round_robin(n + n % 2)
    sweeps = 0
    while sweeps < max_sweeps:
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * fro:
            break
        sweeps += 1
        for p, q in schedule:
            # Drop the padding index of odd sizes.
            keep = q < n
            p, q = p[keep], q[keep]
            apq = a[p, q]
            active = apq != 0.0
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            sign = np.where(theta >= 0.0, 1.0, -1.0)
            t = sign / (np.abs(theta) + np.hypot(theta, 1.0))
            c = 1.0 / np.hypot(t, 1.0)
            s = t * c

            # A <- J^T A J and V <- V J with J_pp = J_qq = c, J_pq = s,
            # J_qp = -s, applied to all disjoint pairs of the round at once.
            ap, aq = a[:, p], a[:, q]
            a[:, p], a[:, q] = ap * c - aq * s, ap * s + aq * c
            ap, aq = a[p, :], a[q, :]
            a[p, :] = c[:, None] * ap - s[:, None] * aq
            a[q, :] = s[:, None] * ap + c[:, None] * aq
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = vp * c - vq * s, vp * s + vq * c

    return np.diag(a).copy(), v, sweeps


def top_eig_symmetric(matrix: np.ndarray) -> tuple[float, np.ndarray]:
    """
    Largest eigenvalue of a symmetric matrix and a unit eigenvector.
    """
    values, vectors, _ = symmetric_eigen(matrix)
    k = int(np.argmax(values))
    vector = vectors[:, k]
    return float(values[k]), vector / np.linalg.norm(vector)


def dual_norm_step(g: np.ndarray, d: int) -> np.ndarray:
    """Unchecked ``dual_norm_maximizer`` for inner solver loops."""
    scale = float(np.max(np.abs(g)))
    if scale == 0.0:
        raise ZeroGradientError("Cannot maximize against a zero vector")
    if d == 2:
        return g / np.linalg.norm(g)
    g = g / scale
    u = np.sign(g) * np.abs(g) ** (1.0 / (d - 1))
    # max |u_i| = 1 here so the power sum cannot overflow.
    return u / float(np.sum(np.abs(u) ** d) ** (1.0 / d))


@deal.pre(lambda g, d: d >= 2, message="Order d must be at least 2")
@deal.ensure(
    lambda g, d, result: abs(lp_norm(result, d) - 1.0) <= 1e-12,
    message="Dual norm maximizer must lie on the unit l^d sphere",
)
def dual_norm_maximizer(g: np.ndarray, d: int) -> np.ndarray:
    """
    The unit l^d vector maximizing <g, u>.

    Components are proportional to sign(g_i) |g_i|^(1/(d-1)); the maximum
    equals the dual norm ||g||_{d/(d-1)}.

    Raises
    ------
    ZeroGradientError
        If ``g`` is identically zero.
    """
    return dual_norm_step(np.asarray(g, dtype=np.float64).reshape(-1), d)
