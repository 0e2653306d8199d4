"""Dense nonnegative-matrix kernel.

Perron eigenpairs via power iteration, Kronecker algebra, Neumann-type
inverses and diagonal similarity twists.  Everything here is a pure function
of its inputs and safe for concurrent use; matrices are plain 2-d numpy
arrays at desk scale (dimension up to a few hundred).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NoConvergence,
    NonPositiveScale,
    NotIrreducible,
    ShapeMismatch,
    SpectralRadiusNotBelowOne,
)

PF_TOL = 1e-13
PF_MAX_ITER = 10**6


@dataclass(frozen=True)
class PerronResult:
    """Perron eigenvalue with positive right and left eigenvectors.

    ``right`` and ``left`` are normalised to sum 1; ``residual`` is
    ``max|T right - value right|``.
    """

    value: float
    right: np.ndarray
    left: np.ndarray
    iterations: int
    residual: float


def as_matrix(x) -> np.ndarray:
    """Validate and return a finite 2-d float array."""
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d array, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def _check_square_nonneg(t: np.ndarray) -> np.ndarray:
    t = as_matrix(t)
    if t.shape[0] != t.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {t.shape}")
    if np.any(t < 0):
        raise ValueError("matrix must be entrywise nonnegative")
    return t


def is_irreducible(t: np.ndarray) -> bool:
    """Reachability closure on the sparsity pattern of a square matrix.

    A 1x1 matrix counts as irreducible (a single state).
    """
    t = as_matrix(t)
    n = t.shape[0]
    if n == 1:
        return True
    reach = (t != 0) | np.eye(n, dtype=bool)
    # boolean closure by repeated squaring; n is small
    for _ in range(int(np.ceil(np.log2(n))) + 1):
        reach = (reach.astype(np.uint8) @ reach.astype(np.uint8)) > 0
    return bool(reach.all())


def _power_iteration(t: np.ndarray, tol: float, max_iter: int):
    """Collatz-Wielandt power iteration on (T + I).

    Returns (eigenvalue of T, positive vector, iterations).  (T + I) is
    primitive whenever T is irreducible, so the iteration converges; the
    eigenvalue of T is recovered by subtracting 1.  The certified bounds
    (min and max of the component ratios) are checked every few steps to
    keep the per-iteration cost down.
    """
    n = t.shape[0]
    if n == 1:
        return float(t[0, 0]), np.ones(1), 0
    ts = t + np.eye(n)
    v = np.full(n, 1.0 / n)
    it = 0
    while it < max_iter:
        for _ in range(3):
            w = ts @ v
            v = w / w.sum()
            it += 1
        w = ts @ v
        ratio = w / v
        lo = float(ratio.min())
        hi = float(ratio.max())
        v = w / w.sum()
        it += 1
        if hi - lo <= tol * max(hi, 1.0):
            return 0.5 * (lo + hi) - 1.0, v, it
    raise NoConvergence(f"power iteration did not reach tol={tol} "
                        f"in {max_iter} iterations")


def pf_eigen(t, tol: float = PF_TOL, max_iter: int = PF_MAX_ITER) -> PerronResult:
    """Perron eigenvalue and positive right/left eigenvectors of an
    irreducible nonnegative matrix.

    Deterministic: the start vector is uniform.  Raises ``NotIrreducible``
    when the sparsity pattern is not strongly connected.
    """
    t = _check_square_nonneg(t)
    if not is_irreducible(t):
        raise NotIrreducible("matrix pattern is not strongly connected")
    value, right, it_r = _power_iteration(t, tol, max_iter)
    _, left, it_l = _power_iteration(t.T, tol, max_iter)
    right = right / right.sum()
    left = left / left.sum()
    residual = float(np.max(np.abs(t @ right - value * right)))
    return PerronResult(value=value, right=right, left=left,
                        iterations=it_r + it_l, residual=residual)


def pf_value(t, tol: float = PF_TOL, max_iter: int = PF_MAX_ITER) -> float:
    """Perron eigenvalue only (no left vector, no irreducibility check).

    Fast path for curve tracing where the caller has already verified the
    pattern once; the pattern of a matrix MGF does not depend on theta.
    """
    t = np.asarray(t, dtype=float)
    value, _, _ = _power_iteration(t, tol, max_iter)
    return value


def pf_right(t, tol: float = PF_TOL, max_iter: int = PF_MAX_ITER):
    """Perron eigenvalue and right eigenvector (sum 1), no checks."""
    t = np.asarray(t, dtype=float)
    value, v, _ = _power_iteration(t, tol, max_iter)
    return value, v / v.sum()


def spectral_radius(t) -> float:
    """Spectral radius of a square matrix, reducible patterns allowed.

    Dense eigenvalue solve; used for matrices like C0 + A1 G- that need not
    be irreducible.
    """
    t = as_matrix(t)
    if t.shape[0] != t.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {t.shape}")
    if t.shape[0] == 1:
        return abs(float(t[0, 0]))
    return float(np.max(np.abs(np.linalg.eigvals(t))))


def metzler_eigen(t, tol: float = PF_TOL, max_iter: int = PF_MAX_ITER):
    """Dominant (largest real) eigenvalue and positive right eigenvector of
    an irreducible matrix with nonnegative off-diagonal entries.

    Shift-and-subtract: powers run on T + cI with c = 1 + max|diag|, which
    is nonnegative and has the same eigenvectors.
    """
    t = as_matrix(t)
    n = t.shape[0]
    if n == 1:
        return float(t[0, 0]), np.ones(1)
    off = t.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        raise ValueError("off-diagonal entries must be nonnegative")
    c = 1.0 + float(np.max(np.abs(np.diag(t))))
    shifted = t + c * np.eye(n)
    if not is_irreducible(shifted):
        raise NotIrreducible("matrix pattern is not strongly connected")
    value, v, _ = _power_iteration(shifted, tol, max_iter)
    return value - c, v / v.sum()


def metzler_value(t, tol: float = PF_TOL, max_iter: int = PF_MAX_ITER) -> float:
    """Dominant (largest real part) eigenvalue of a Metzler-type matrix.

    Power iteration on the shifted matrix when its pattern is strongly
    connected; reducible (e.g. triangular subgenerator) patterns fall back
    to a dense eigenvalue solve, where the power bounds cannot close.
    """
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    if n == 1:
        return float(t[0, 0])
    c = 1.0 + float(np.max(np.abs(np.diag(t))))
    shifted = t + c * np.eye(n)
    if not is_irreducible(shifted):
        return float(np.max(np.linalg.eigvals(t).real))
    value, _, _ = _power_iteration(shifted, tol, max_iter)
    return value - c


def kron_prod(a, b) -> np.ndarray:
    """Kronecker product."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_sum(a, b) -> np.ndarray:
    """Kronecker sum A (+) B = A x I + I x B for square A, B."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise ShapeMismatch("kron_sum requires square operands")
    return np.kron(a, np.eye(b.shape[0])) + np.kron(np.eye(a.shape[0]), b)


def neumann_inverse(t, margin: float = 1e-10, clamp_tol: float = 1e-12) -> np.ndarray:
    """(I - T)^{-1} = sum_n T^n for a nonnegative T with spectral radius
    strictly below 1.

    Rejects radius > 1 - margin (the series diverges at radius 1).  Tiny
    negative entries from the solve are clamped to 0 below ``clamp_tol``.
    """
    t = _check_square_nonneg(t)
    n = t.shape[0]
    radius = spectral_radius(t)
    if radius > 1.0 - margin:
        raise SpectralRadiusNotBelowOne(
            f"spectral radius {radius:.15g} is not below 1 - {margin}")
    x = np.linalg.solve(np.eye(n) - t, np.eye(n))
    x[(x < 0) & (x > -clamp_tol)] = 0.0
    if np.any(x < 0):
        raise ValueError("Neumann inverse came out negative beyond tolerance")
    check = np.max(np.abs((np.eye(n) - t) @ x - np.eye(n)))
    if check > 1e-10:
        raise ValueError(f"Neumann inverse verification failed: {check:.3e}")
    return x


def twist(t_blocks, h, theta: float, levels) -> list[np.ndarray]:
    """Exponential tilting with a diagonal similarity transform.

    Returns ``exp(theta*l) * diag(h)^{-1} B diag(h)`` for each block B and
    signed level offset l.  When h is the Perron vector of the block MGF at
    theta, the twisted blocks sum to a matrix with constant row sums equal to
    the eigenvalue there.
    """
    h = np.asarray(h, dtype=float).ravel()
    if np.any(h <= 0):
        raise NonPositiveScale("twist vector must be strictly positive")
    blocks = [as_matrix(b) for b in t_blocks]
    levels = list(levels)
    if len(blocks) != len(levels):
        raise ShapeMismatch("one level offset per block required")
    out = []
    for b, lev in zip(blocks, levels):
        if b.shape != (h.size, h.size):
            raise ShapeMismatch(
                f"block shape {b.shape} does not match twist vector "
                f"of length {h.size}")
        out.append(np.exp(theta * lev) * (b * h[np.newaxis, :] / h[:, np.newaxis]))
    return out
