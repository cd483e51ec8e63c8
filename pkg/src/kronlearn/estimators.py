"""Two-step Kronecker-structured estimator (K=2, square factors) and the unstructured baseline.

Both estimators threshold ``Y`` to recover ``X`` and then average
``x_l * y`` products, which is unbiased for the dictionary columns when
``E[x xᵀ] = (s/p) I``.

Index conventions (0-based, ``y`` of length ``p = p1 p2``): viewing ``y`` as
the row-major ``p1 x p2`` array ``Y_r`` (``Y_r[i, j] = y[p2 i + j]``),
``(A ⊗ B) x`` is ``A X_r Bᵀ``. The A-split is the ``p2`` columns of ``Y_r``;
the B-split is its ``p1`` rows, i.e. contiguous blocks of ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError
from .tensor_core import as_matrix, kron, project_columns

THRESHOLD = 0.5


@dataclass(frozen=True)
class SplitLayout:
    p1: int
    p2: int

    def __post_init__(self):
        if self.p1 < 1 or self.p2 < 1:
            raise PreconditionError("factor dimensions must be positive")

    @property
    def p(self) -> int:
        return self.p1 * self.p2


@dataclass
class EstimatorOutput:
    a_hat: np.ndarray
    b_hat: np.ndarray
    d_hat: np.ndarray
    x_hat: np.ndarray
    mse: float | None = None


def threshold_coefficients(y) -> np.ndarray:
    """Entrywise ``1`` if ``y > 0.5``, ``-1`` if ``y < -0.5``, else ``0``."""
    y = np.asarray(y, dtype=np.float64)
    return np.where(y > THRESHOLD, 1.0, 0.0) - np.where(y < -THRESHOLD, 1.0, 0.0)


def _check_len(y: np.ndarray, layout: SplitLayout) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != layout.p:
        raise DimensionError(f"vector has length {y.size}, layout needs {layout.p}")
    return y


def split_for_a(y, layout: SplitLayout) -> np.ndarray:
    """``p1 x p2`` array whose column ``j`` is ``(y[p2*i + j])_{i < p1}``."""
    return _check_len(y, layout).reshape(layout.p1, layout.p2)


def merge_for_a(parts, layout: SplitLayout) -> np.ndarray:
    parts = np.asarray(parts, dtype=np.float64)
    if parts.shape != (layout.p1, layout.p2):
        raise DimensionError(f"expected shape {(layout.p1, layout.p2)}, got {parts.shape}")
    return parts.reshape(-1)


def split_for_b(y, layout: SplitLayout) -> np.ndarray:
    """``p2 x p1`` array whose column ``j`` is the block ``y[p2*j : p2*(j+1)]``."""
    return _check_len(y, layout).reshape(layout.p1, layout.p2).T


def merge_for_b(parts, layout: SplitLayout) -> np.ndarray:
    parts = np.asarray(parts, dtype=np.float64)
    if parts.shape != (layout.p2, layout.p1):
        raise DimensionError(f"expected shape {(layout.p2, layout.p1)}, got {parts.shape}")
    return parts.T.reshape(-1)


def _as_cube(y, layout: SplitLayout, name: str) -> np.ndarray:
    y = as_matrix(y, name)
    if y.shape[0] != layout.p:
        raise DimensionError(f"{name} has {y.shape[0]} rows, layout needs {layout.p}")
    return y.reshape(layout.p1, layout.p2, y.shape[1])


def estimate_a(y, x_hat, layout: SplitLayout, s: int) -> np.ndarray:
    """Column ``l`` = proj((p1/(N s)) sum over samples and A-splits of ``x'_l y'``)."""
    if s < 1:
        raise PreconditionError("s must be >= 1")
    yc = _as_cube(y, layout, "Y")
    xc = _as_cube(x_hat, layout, "X")
    if yc.shape != xc.shape:
        raise DimensionError("Y and X have different sample counts")
    n = yc.shape[2]
    raw = np.einsum("ijn,ljn->il", yc, xc) * (layout.p1 / (n * s))
    return project_columns(raw)


def estimate_b(y, x_hat, layout: SplitLayout, s: int) -> np.ndarray:
    """Column ``l`` = proj((p2/(N s)) sum over samples and B-splits of ``x''_l y''``)."""
    if s < 1:
        raise PreconditionError("s must be >= 1")
    yc = _as_cube(y, layout, "Y")
    xc = _as_cube(x_hat, layout, "X")
    if yc.shape != xc.shape:
        raise DimensionError("Y and X have different sample counts")
    n = yc.shape[2]
    raw = np.einsum("ijn,iln->jl", yc, xc) * (layout.p2 / (n * s))
    return project_columns(raw)


def ks_estimate(y, layout: SplitLayout, s: int, truth=None) -> EstimatorOutput:
    """Threshold, estimate both factors from the splits, and assemble ``Â ⊗ B̂``."""
    y = as_matrix(y, "Y")
    x_hat = threshold_coefficients(y)
    a_hat = estimate_a(y, x_hat, layout, s)
    b_hat = estimate_b(y, x_hat, layout, s)
    d_hat = kron(a_hat, b_hat)
    mse = None
    if truth is not None:
        mse = float(np.sum((d_hat - as_matrix(truth, "truth")) ** 2))
    return EstimatorOutput(a_hat, b_hat, d_hat, x_hat, mse)


def unstructured_estimate(y, s: int) -> np.ndarray:
    """Column ``l`` = proj((p/(N s)) sum_n x̂_{n,l} y_n) with no structure imposed."""
    if s < 1:
        raise PreconditionError("s must be >= 1")
    y = as_matrix(y, "Y")
    p, n = y.shape
    x_hat = threshold_coefficients(y)
    return project_columns((y @ x_hat.T) * (p / (n * s)))
