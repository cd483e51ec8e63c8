"""Closed-form minimax lower bounds, the K=2 MSE upper bound, and numeric checks
of the covariance/KL inequalities used to derive them.

Each lower bound has the shape ``(t/4) * min{A, r^2/(2K), C * (c1*dof - log_term - 2)}``.
Reported ``terms`` already include the ``t/4`` factor, so ``value == min(terms)``.
``log2`` is used wherever the formulas print ``log_2``; parameter ranges use
``ln 2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .dictionary_model import PackingClass
from .errors import CombinatorialError, ConvergenceError, DimensionError, PreconditionError
from .tensor_core import as_matrix, spectral_norm

TERM_NAMES = ("first", "radius", "sample")


@dataclass(frozen=True)
class BoundInputs:
    N: int
    m_dims: tuple
    p_dims: tuple
    sigma: float
    r: float
    t: float
    c1: float
    s: int = 1
    sigma_a: float = 1.0
    sigma_x_norm: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "m_dims", tuple(int(v) for v in self.m_dims))
        object.__setattr__(self, "p_dims", tuple(int(v) for v in self.p_dims))
        if len(self.m_dims) != len(self.p_dims) or not self.m_dims:
            raise DimensionError("m_dims and p_dims must be non-empty and equally long")
        if min(self.m_dims + self.p_dims) < 1 or self.N < 1 or self.s < 1:
            raise PreconditionError("counts must be positive")

    @property
    def K(self) -> int:
        return len(self.m_dims)

    @property
    def m(self) -> int:
        return math.prod(self.m_dims)

    @property
    def p(self) -> int:
        return math.prod(self.p_dims)

    @property
    def dof(self) -> int:
        """``sum_k (m_k - 1) p_k``."""
        return sum((mk - 1) * pk for mk, pk in zip(self.m_dims, self.p_dims))


@dataclass
class BoundReport:
    name: str
    value: float
    terms: tuple
    active: str
    degrees_of_freedom: int
    validity: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.validity


def _range_violations(inp: BoundInputs) -> list:
    out = []
    if not 0 < inp.t < 1:
        out.append("t-out-of-range")
    if not 0 < inp.c1 < (1 - inp.t) / (8 * math.log(2)):
        out.append("c1-out-of-range")
    if not inp.sigma > 0:
        out.append("sigma-nonpositive")
    if not inp.r > 0:
        out.append("r-nonpositive")
    return out


def _report(name: str, inp: BoundInputs, first: float, coef: float, log_term: float,
            validity: list) -> BoundReport:
    q = inp.t / 4
    bracket = inp.c1 * inp.dof - log_term - 2
    terms = (q * first, q * (inp.r**2 / (2 * inp.K)), q * (coef * bracket))
    i = int(np.argmin(terms))
    if bracket <= 0:
        validity = validity + ["vacuous"]
    return BoundReport(name, terms[i], terms, TERM_NAMES[i], inp.dof, validity)


def lower_bound_general(inp: BoundInputs) -> BoundReport:
    """Bound for any zero-mean coefficient law with covariance norm ``sigma_x_norm``."""
    validity = _range_violations(inp)
    if inp.sigma_x_norm is None or not inp.sigma_x_norm > 0:
        raise PreconditionError("sigma_x_norm must be a positive number")
    coef = inp.sigma**2 / (4 * inp.N * inp.K * inp.sigma_x_norm)
    return _report("general", inp, inp.p, coef, inp.K / 2 * math.log2(2 * inp.K), validity)


def lower_bound_sparse(inp: BoundInputs) -> BoundReport:
    """Sparse-coefficient bound: the general bound with ``||Sigma_x||_2 = s sigma_a^2 / p``."""
    rep = lower_bound_general(replace(inp, sigma_x_norm=inp.s * inp.sigma_a**2 / inp.p))
    rep.name = "sparse"
    return rep


def lower_bound_sparse_gaussian(inp: BoundInputs, separable: bool = False,
                                mode_scaled_log_term: bool = False) -> BoundReport:
    """Sparse-Gaussian bound; ``separable`` switches the first term from ``p/s`` to ``p``.

    The log term defaults to ``½ log2(2K)``; ``mode_scaled_log_term=True`` uses
    ``(K/2) log2(2K)`` instead.
    """
    validity = _range_violations(inp)
    if not inp.sigma_a > 0:
        validity.append("sigma_a-nonpositive")
    coef = inp.sigma**4 * inp.p / (36 * 3 ** (4 * inp.K) * inp.N * inp.s**2 * inp.sigma_a**4)
    scale = inp.K / 2 if mode_scaled_log_term else 0.5
    first = inp.p if separable else inp.p / inp.s
    name = "sparse_gaussian_separable" if separable else "sparse_gaussian"
    return _report(name, inp, first, coef, scale * math.log2(2 * inp.K), validity)


def mse_upper_bound_k2(p1: int, p2: int, m1: int, m2: int, N: int, snr: float, sigma: float) -> float:
    """``(8p/N)((p1 m1 + p2 m2)/(m SNR) + 3(p1 + p2)) + 8p exp(-0.08 p N / sigma^2)``."""
    p = p1 * p2
    m = m1 * m2
    main = 8 * p / N * ((p1 * m1 + p2 * m2) / (m * snr) + 3 * (p1 + p2))
    return main + 8 * p * math.exp(-0.08 * p * N / sigma**2)


@dataclass
class UpperBoundConditions:
    radius: bool
    thresholding: bool
    sample_size: bool
    noise: bool

    @property
    def all_ok(self) -> bool:
        return self.radius and self.thresholding and self.sample_size and self.noise

    def failed(self) -> list:
        return [k for k, v in vars(self).items() if not v]


def check_upper_bound_conditions(r1: float, r2: float, p1: int, p2: int, s: int, N: int,
                              sigma: float, r: float) -> UpperBoundConditions:
    return UpperBoundConditions(
        radius=r1 * math.sqrt(p2) + r2 * math.sqrt(p1) + r1 * r2 <= r,
        thresholding=(r1 + r2 + r1 * r2) * math.sqrt(s) <= 0.1,
        sample_size=max(r1**2 / p2, r2**2 / p1) <= 1 / (3 * N),
        noise=sigma <= 0.4,
    )


def max_admissible_radius(p1: int, p2: int, s: int, N: int, r: float, iters: int = 200) -> float:
    """Largest ``r1 = r2`` meeting the first three upper-bound conditions (bisection)."""
    def ok(x):
        c = check_upper_bound_conditions(x, x, p1, p2, s, N, 0.0, r)
        return c.radius and c.thresholding and c.sample_size

    lo, hi = 0.0, 1.0
    while ok(hi):
        hi *= 2
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return lo


def jacobi_eigenvalues(a, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations, ascending."""
    a = np.array(as_matrix(a), dtype=np.float64)
    n = a.shape[0]
    if a.shape[1] != n:
        raise DimensionError("matrix must be square")
    if n == 1:
        return a[0].copy()
    a = 0.5 * (a + a.T)
    scale = max(np.linalg.norm(a), 1.0)
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(a[off_mask] ** 2)))
        if off <= tol * scale:
            return np.sort(np.diag(a))
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    tt = 0.5 / theta
                else:
                    tt = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(tt * tt + 1.0)
                sn = tt * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - sn * rq
                a[q, :] = sn * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - sn * cq
                a[:, q] = sn * cp + c * cq
    raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def rip_constant(d, s: int, max_supports: int = 10**6) -> float:
    """Order-``s`` restricted isometry constant by enumerating all supports."""
    d = as_matrix(d, "d")
    p = d.shape[1]
    if not 1 <= s <= p:
        raise PreconditionError(f"need 1 <= s <= p, got s={s}")
    if math.comb(p, s) > max_supports:
        raise CombinatorialError(f"C({p},{s}) = {math.comb(p, s)} supports exceeds {max_supports}")
    gram = d.T @ d
    delta = 0.0
    for sup in itertools.combinations(range(p), s):
        ev = jacobi_eigenvalues(gram[np.ix_(sup, sup)])
        delta = max(delta, ev[-1] - 1.0, 1.0 - ev[0])
    return float(delta)


def observation_covariance(dl, support: Sequence[int], sigma_a: float, sigma: float) -> np.ndarray:
    """``sigma_a^2 D_S D_Sᵀ + sigma^2 I_m``."""
    dl = as_matrix(dl, "D")
    support = np.asarray(support, dtype=np.int64)
    if support.size and (support.min() < 0 or support.max() >= dl.shape[1]):
        raise DimensionError("support index out of range")
    ds = dl[:, support]
    return sigma_a**2 * ds @ ds.T + sigma**2 * np.eye(dl.shape[0])


def covariance_diff_bound(K: int, s: int, eps_prime: float, r: float, sigma_a: float = 1.0) -> float:
    """``sigma_a^2 3^{2K+1} sqrt(s eps' / r^2)``."""
    return sigma_a**2 * 3 ** (2 * K + 1) * math.sqrt(s * eps_prime / r**2)


@dataclass
class CovarianceCheck:
    bound: float
    max_ratio: float
    n_pairs: int
    n_supports: int

    @property
    def passed(self) -> bool:
        return self.max_ratio <= 1.0


def covariance_diff_check(cls: PackingClass, supports: Sequence[Sequence[int]], sigma_a: float = 1.0,
                          sigma: float = 1.0) -> CovarianceCheck:
    """Check ``||Sigma_l - Sigma_l'||_2`` against its analytic bound for every member
    pair (including ``l == l'``) and every given support."""
    supports = [np.asarray(sp, dtype=np.int64) for sp in supports]
    if not supports:
        raise PreconditionError("need at least one support")
    s = len(supports[0])
    prm = cls.params
    if s * prm.eps_prime / prm.r**2 > 1:
        raise PreconditionError("s eps'/r^2 must not exceed 1")
    bound = covariance_diff_bound(cls.K, s, prm.eps_prime, prm.r, sigma_a)
    members = cls.members()
    worst = 0.0
    pairs = 0
    for sup in supports:
        covs = [observation_covariance(d, sup, sigma_a, sigma) for d in members]
        for i in range(len(covs)):
            for j in range(i, len(covs)):
                diff = covs[i] - covs[j]
                nrm = spectral_norm(diff) if np.any(diff) else 0.0
                worst = max(worst, nrm / bound)
                pairs += 1
    return CovarianceCheck(bound, worst, pairs, len(supports))


def kl_fixed_coefficients(d1, d2, x, sigma: float) -> float:
    """KL divergence between ``N(D1 x_n, sigma^2 I)`` and ``N(D2 x_n, sigma^2 I)`` summed over columns."""
    if sigma == 0:
        raise PreconditionError("sigma must be positive")
    d1 = as_matrix(d1, "d1")
    d2 = as_matrix(d2, "d2")
    x = as_matrix(x, "X")
    if d1.shape != d2.shape or d1.shape[1] != x.shape[0]:
        raise DimensionError("shapes do not conform")
    r = (d1 - d2) @ x
    return float(np.sum(r**2) / (2 * sigma**2))
