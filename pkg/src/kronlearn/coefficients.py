"""Coefficient supports/values under the four coefficient models, and ``Y = D X + N``.

Separable supports use lexicographic (row-major) flat indexing,
``j = sum_k j_k * prod_{k' > k} p_k'`` with 0-based ``j_k``, which matches the
column order of ``D_1 ⊗ ... ⊗ D_K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dictionary_model import KsDictionary
from .errors import DimensionError, PreconditionError
from .tensor_core import as_matrix

MODELS = ("general-dense", "random-sparse", "separable-sparse", "ternary-sparse")


@dataclass(frozen=True)
class CoefficientSpec:
    """Coefficient distribution descriptor.

    ``s`` is the total sparsity for the random and ternary models; ``s_dims``
    the per-mode sparsities for the separable model (``s = prod(s_dims)``).
    ``sign_bias`` is P(+1) for ternary nonzeros.
    """

    model: str
    p_dims: tuple
    s: int | None = None
    s_dims: tuple | None = None
    sigma_a: float = 1.0
    sign_bias: float = 0.5

    def __post_init__(self):
        if self.model not in MODELS:
            raise PreconditionError(f"unknown coefficient model {self.model!r}")
        object.__setattr__(self, "p_dims", tuple(int(d) for d in self.p_dims))
        if self.model == "separable-sparse":
            if self.s_dims is None or len(self.s_dims) != len(self.p_dims):
                raise PreconditionError("separable model needs one sparsity per mode")
            sd = tuple(int(v) for v in self.s_dims)
            if any(not 1 <= sk <= pk for sk, pk in zip(sd, self.p_dims)):
                raise PreconditionError(f"need 1 <= s_k <= p_k, got {sd} for {self.p_dims}")
            object.__setattr__(self, "s_dims", sd)
            object.__setattr__(self, "s", math.prod(sd))
        elif self.model in ("random-sparse", "ternary-sparse"):
            if self.s is None or not 1 <= self.s <= self.p:
                raise PreconditionError(f"need 1 <= s <= p={self.p}, got {self.s}")
        if self.model != "ternary-sparse" and not self.sigma_a > 0:
            raise PreconditionError("sigma_a must be positive")
        if not 0.0 <= self.sign_bias <= 1.0:
            raise PreconditionError("sign_bias must lie in [0, 1]")

    @property
    def p(self) -> int:
        return math.prod(self.p_dims)

    @property
    def value_std(self) -> float:
        return 1.0 if self.model == "ternary-sparse" else self.sigma_a


def sample_support_random(p: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random size-``s`` subset of ``range(p)``, sorted."""
    if not 0 <= s <= p:
        raise PreconditionError(f"need 0 <= s <= p, got s={s}, p={p}")
    return np.sort(rng.choice(p, size=s, replace=False))


def sample_support_separable(p_ks: Sequence[int], s_ks: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Cartesian product of per-mode uniform subsets, as sorted flat indices."""
    if len(p_ks) != len(s_ks):
        raise DimensionError("p_ks and s_ks differ in length")
    if any(sk > pk or sk < 0 for sk, pk in zip(s_ks, p_ks)):
        raise PreconditionError(f"need s_k <= p_k, got {tuple(s_ks)} for {tuple(p_ks)}")
    parts = [np.sort(rng.choice(pk, size=sk, replace=False)) for pk, sk in zip(p_ks, s_ks)]
    grids = np.meshgrid(*parts, indexing="ij")
    flat = np.ravel_multi_index(tuple(g.ravel() for g in grids), tuple(p_ks))
    return np.sort(flat)


def sample_values_gaussian(s: int, sigma_a: float, rng: np.random.Generator) -> np.ndarray:
    if not sigma_a > 0:
        raise PreconditionError("sigma_a must be positive")
    return rng.normal(0.0, sigma_a, size=s)


def sample_values_ternary(s: int, rng: np.random.Generator, bias: float = 0.5) -> np.ndarray:
    """±1 values with P(+1) = ``bias``."""
    return np.where(rng.random(s) < bias, 1.0, -1.0)


def covariance_of(spec: CoefficientSpec) -> float:
    """Scalar ``c`` with ``Sigma_x = c I_p`` for the sparse models: ``(s/p) sigma_a^2``."""
    if spec.model == "general-dense":
        raise PreconditionError("general-dense covariance must be supplied by the caller")
    return spec.s / spec.p * spec.value_std**2


def _random_supports(p: int, s: int, n: int, rng: np.random.Generator) -> np.ndarray:
    # first s entries of a uniform random permutation per column
    keys = rng.random((p, n))
    return np.argpartition(keys, s - 1, axis=0)[:s] if s < p else np.tile(np.arange(p)[:, None], (1, n))


def sample_coefficients(spec: CoefficientSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``p x n`` matrix of i.i.d. coefficient columns."""
    p = spec.p
    if spec.model == "general-dense":
        return rng.normal(0.0, spec.sigma_a, size=(p, n))
    x = np.zeros((p, n))
    if spec.model == "separable-sparse":
        for col in range(n):
            x[sample_support_separable(spec.p_dims, spec.s_dims, rng), col] = 1.0
        mask = x != 0
        x[mask] = rng.normal(0.0, spec.sigma_a, size=int(mask.sum()))
        return x
    rows = _random_supports(p, spec.s, n, rng)
    cols = np.broadcast_to(np.arange(n), rows.shape)
    if spec.model == "ternary-sparse":
        vals = np.where(rng.random(rows.shape) < spec.sign_bias, 1.0, -1.0)
    else:
        vals = rng.normal(0.0, spec.sigma_a, size=rows.shape)
    x[rows, cols] = vals
    return x


def generate_observations(d, spec: CoefficientSpec, n: int, sigma: float,
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Y, X)`` with ``Y = D X + N`` and ``N`` i.i.d. ``N(0, sigma^2)``."""
    dm = d.assemble() if isinstance(d, KsDictionary) else as_matrix(d, "D")
    if dm.shape[1] != spec.p:
        raise DimensionError(f"dictionary has {dm.shape[1]} columns, spec has p={spec.p}")
    if sigma < 0:
        raise PreconditionError("sigma must be non-negative")
    x = sample_coefficients(spec, n, rng)
    y = dm @ x
    if sigma > 0:
        y = y + rng.normal(0.0, sigma, size=y.shape)
    return y, x


def snr(spec: CoefficientSpec, m: int, sigma: float) -> float:
    """``Tr(Sigma_x) / (m sigma^2)``."""
    if sigma == 0:
        raise PreconditionError("SNR is infinite for sigma = 0")
    if spec.model == "general-dense":
        trace = spec.p * spec.sigma_a**2
    else:
        trace = spec.s * spec.value_std**2
    return trace / (m * sigma**2)
