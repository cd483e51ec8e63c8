"""Dense matrix/tensor helpers and the Kronecker/Tucker algebra.

Matrices are plain 2-D ``float64`` arrays. Tensors are K-dimensional arrays
whose *vectorization* is generalized column-major (first index fastest), so
``vec(T) == vec(unfold(T, 1))``. Mode indices are 1-based, ``1 <= k <= K``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ArityError, ConvergenceError, DimensionError, PreconditionError, SizeError

MAX_ELEMENTS = 2**31 - 1
SPECTRAL_MAX_ITER = 10_000


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a finite 2-D float64 array (1-D input becomes a column)."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise PreconditionError(f"{name} has non-finite entries")
    return a


def as_tensor(t) -> np.ndarray:
    a = np.asarray(t, dtype=np.float64)
    if a.ndim < 1 or a.size == 0:
        raise DimensionError(f"tensor must have at least one mode, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("tensor has non-finite entries")
    return a


def kron(x, y) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``x[i, j] * y``."""
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    m, n = x.shape
    p, q = y.shape
    if m * p * n * q > MAX_ELEMENTS:
        raise SizeError(f"kron of {x.shape} and {y.shape} is too large")
    return (x[:, None, :, None] * y[None, :, None, :]).reshape(m * p, n * q)


def kron_all(factors: Sequence) -> np.ndarray:
    """``factors[0] ⊗ factors[1] ⊗ ...`` in the given order."""
    if len(factors) == 0:
        raise ArityError("need at least one factor")
    out = as_matrix(factors[0])
    for f in factors[1:]:
        out = kron(out, f)
    return out


def khatri_rao(x, y) -> np.ndarray:
    """Column-wise Kronecker product of two matrices with equal column counts."""
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[1] != y.shape[1]:
        raise DimensionError(f"column counts differ: {x.shape[1]} vs {y.shape[1]}")
    m, n = x.shape
    p = y.shape[0]
    return (x[:, None, :] * y[None, :, :]).reshape(m * p, n)


def vec(x) -> np.ndarray:
    """Stack the columns of ``x`` into a column vector of shape (rows*cols, 1)."""
    x = as_matrix(x)
    return x.reshape(-1, 1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape length {v.size} to {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def vec_tensor(t) -> np.ndarray:
    """Column-major vectorization of a tensor (equals vec of its mode-1 unfolding)."""
    return as_tensor(t).reshape(-1, 1, order="F")


def _check_mode(k: int, order: int) -> int:
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= order:
        raise IndexError(f"mode {k} out of range 1..{order}")
    return int(k) - 1


def mode_k_unfold(t, k: int) -> np.ndarray:
    """Mode-k unfolding: a ``p_k x prod_{i != k} p_i`` matrix.

    Column ordering follows the usual convention where the remaining indices
    vary with the lowest mode fastest.
    """
    t = as_tensor(t)
    ax = _check_mode(k, t.ndim)
    return np.moveaxis(t, ax, 0).reshape(t.shape[ax], -1, order="F")


def mode_k_fold(mat, k: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`mode_k_unfold` for a tensor of shape ``dims``."""
    dims = tuple(int(d) for d in dims)
    ax = _check_mode(k, len(dims))
    mat = np.asarray(mat, dtype=np.float64)
    moved = (dims[ax],) + dims[:ax] + dims[ax + 1:]
    if mat.shape != (moved[0], int(np.prod(moved[1:], dtype=np.int64))):
        raise DimensionError(f"matrix shape {mat.shape} does not fold into {dims} at mode {k}")
    return np.moveaxis(mat.reshape(moved, order="F"), 0, ax)


def mode_k_product(t, a, k: int) -> np.ndarray:
    """Mode-k product ``t ×_k a``; satisfies ``unfold(out, k) == a @ unfold(t, k)``."""
    t = as_tensor(t)
    a = as_matrix(a, "a")
    ax = _check_mode(k, t.ndim)
    if a.shape[1] != t.shape[ax]:
        raise DimensionError(f"a has {a.shape[1]} columns but mode {k} has size {t.shape[ax]}")
    out = np.tensordot(a, t, axes=([1], [ax]))
    return np.moveaxis(out, 0, ax)


def tucker_reconstruct(core, factors: Sequence) -> np.ndarray:
    """``core ×_1 D_1 ×_2 D_2 ... ×_K D_K``."""
    core = as_tensor(core)
    if len(factors) != core.ndim:
        raise ArityError(f"got {len(factors)} factors for an order-{core.ndim} core")
    out = core
    for k, f in enumerate(factors, start=1):
        out = mode_k_product(out, f, k)
    return out


def frobenius_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


def _power_iterate(gram: np.ndarray, v: np.ndarray, tol: float, max_iter: int) -> float:
    lam = float(v @ gram @ v)
    for _ in range(max_iter):
        w = gram @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(v @ gram @ v)
        if abs(new - lam) <= tol * max(abs(new), np.finfo(float).tiny):
            return new
        lam = new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} iterations")


SQUARINGS = 48


def _dominant_start(gram: np.ndarray) -> np.ndarray:
    """Start vector for the power iteration, filtered by repeated squaring.

    ``(xᵀx)^(2^j)`` is ``2^j`` power steps applied at once, so even nearly
    equal leading singular values separate. The filtered operator is applied
    to the normalized all-ones vector; if that start is (numerically)
    orthogonal to the dominant subspace, the column with the largest diagonal
    entry is used instead, which is never orthogonal to it.
    """
    n = gram.shape[0]
    pw = gram / np.max(np.abs(gram))
    for _ in range(SQUARINGS):
        nxt = pw @ pw
        nxt = 0.5 * (nxt + nxt.T)
        nxt /= np.max(np.abs(nxt))
        if np.array_equal(nxt, pw):
            break
        pw = nxt
    v = pw @ np.full(n, 1.0 / np.sqrt(n))
    diag = np.diag(pw)
    if np.linalg.norm(v) < 1e-8 * np.sqrt(max(float(diag.max()), 0.0)):
        v = pw[:, int(np.argmax(diag))].copy()
    return v / np.linalg.norm(v)


def spectral_norm(x, tol: float = 1e-12, max_iter: int = SPECTRAL_MAX_ITER) -> float:
    """Largest singular value by power iteration on ``xᵀx``.

    The deterministic start (normalized all-ones) is first filtered by
    repeated squaring of ``xᵀx`` (see :func:`_dominant_start`); plain power
    steps then run until the Rayleigh quotient changes by at most ``tol``
    relative.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    x = as_matrix(x)
    gram = x.T @ x
    if not np.any(np.diag(gram) > 0):
        return 0.0
    lam = _power_iterate(gram, _dominant_start(gram), tol, max_iter)
    return float(np.sqrt(max(lam, 0.0)))


def project_unit_ball(u) -> np.ndarray:
    """Return ``u`` if ``||u||_2 <= 1`` else ``u / ||u||_2``."""
    u = np.asarray(u, dtype=np.float64)
    nrm = np.linalg.norm(u)
    if nrm <= 1.0:
        return u.copy()
    return u / nrm


def project_columns(a: np.ndarray) -> np.ndarray:
    """Apply :func:`project_unit_ball` to every column."""
    a = np.asarray(a, dtype=np.float64)
    norms = np.linalg.norm(a, axis=0)
    scale = np.where(norms > 1.0, norms, 1.0)
    return a / scale
