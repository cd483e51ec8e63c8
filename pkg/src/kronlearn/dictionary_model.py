"""Kronecker-structured dictionaries and the local packing-class construction.

A packing class around a reference ``D0 = D_(1,0) ⊗ ... ⊗ D_(K,0)`` is built
from random sign ("generating") matrices. For every mode k, each generating
matrix ``G`` ((m_k - 1) x p_k, entries ±1/(r^{1/K} sqrt(m_k - 1))) is lifted
column by column into the orthogonal complement of the reference column::

    d_(k,1,l),j = U_(k,j) @ [0; g_j],     U_(k,j) e_1 = d_(k,0),j

and mixed with the reference factor::

    D_(k,l) = eta * D_(k,0) + nu * D_(k,1,l)
    eta = sqrt(1 - eps'/r^2),  nu = sqrt(r^{2/K} eps' / r^2)

Members are Kronecker products of one mixed factor per mode.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, PackingError, PreconditionError
from .tensor_core import as_matrix, frobenius_distance, kron_all

UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class KsDictionary:
    """Ordered coordinate dictionaries whose Kronecker product is ``D``.

    Factor k has shape ``m_k x p_k``. By default every column of every factor
    must have unit norm, which makes the assembled columns unit norm too.
    """

    factors: tuple
    check_unit_norm: bool = True

    def __post_init__(self):
        facs = tuple(as_matrix(f, f"factor {i}") for i, f in enumerate(self.factors))
        if not facs:
            raise DimensionError("a KS dictionary needs at least one factor")
        object.__setattr__(self, "factors", facs)
        if self.check_unit_norm:
            for i, f in enumerate(facs):
                dev = np.max(np.abs(np.linalg.norm(f, axis=0) - 1.0))
                if dev > UNIT_NORM_TOL:
                    raise PreconditionError(f"factor {i} columns deviate from unit norm by {dev:.3g}")

    @property
    def K(self) -> int:
        return len(self.factors)

    @property
    def m_dims(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    @property
    def p_dims(self) -> tuple:
        return tuple(f.shape[1] for f in self.factors)

    @property
    def shape(self) -> tuple:
        return (math.prod(self.m_dims), math.prod(self.p_dims))

    def assemble(self) -> np.ndarray:
        return kron_all(self.factors)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "KsDictionary":
        return cls(tuple(np.eye(d) for d in dims))


def assemble(d: KsDictionary) -> np.ndarray:
    """Kronecker product of the factors in stored order."""
    return d.assemble()


def membership_radius(d: KsDictionary, d0: KsDictionary) -> float:
    """``||D - D0||_F``; compare against the neighborhood radius ``r``."""
    if d.shape != d0.shape:
        raise DimensionError(f"assembled shapes differ: {d.shape} vs {d0.shape}")
    return frobenius_distance(d.assemble(), d0.assemble())


def householder_from_e1(col) -> np.ndarray:
    """Orthogonal ``U`` with ``U @ e_1 == col`` for a unit vector ``col``.

    Returns the identity when ``col`` is within 1e-12 of ``e_1``, otherwise the
    reflection ``I - 2 v vᵀ / (vᵀ v)`` with ``v = e_1 - col``.
    """
    col = np.asarray(col, dtype=np.float64).reshape(-1)
    n = col.size
    if abs(np.linalg.norm(col) - 1.0) > UNIT_NORM_TOL:
        raise PreconditionError("column must have unit norm")
    e1 = np.zeros(n)
    e1[0] = 1.0
    v = e1 - col
    vv = float(v @ v)
    if math.sqrt(vv) <= 1e-12:
        return np.eye(n)
    return np.eye(n) - (2.0 / vv) * np.outer(v, v)


def generating_entry(mk: int, r: float, K: int) -> float:
    return 1.0 / (r ** (1.0 / K) * math.sqrt(mk - 1))


def build_generating_matrix(mk: int, pk: int, r: float, K: int, rng: np.random.Generator) -> np.ndarray:
    """Random ``(m_k - 1) x p_k`` sign matrix with entries ±1/(r^{1/K} sqrt(m_k - 1))."""
    if mk < 2:
        raise PreconditionError("m_k must be at least 2 to build a generating matrix")
    alpha = generating_entry(mk, r, K)
    signs = rng.integers(0, 2, size=(mk - 1, pk)) * 2 - 1
    return alpha * signs.astype(np.float64)


def coherence_threshold(pk: int, t: float, r: float, K: int) -> float:
    return pk * t / r ** (2.0 / K)


def coherence_ok(g1, g2, pk: int, t: float, r: float, K: int) -> bool:
    """True iff ``|<G1, G2>| <= p_k t / r^{2/K}``."""
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    if g1.shape != g2.shape:
        raise DimensionError(f"shape mismatch {g1.shape} vs {g2.shape}")
    return bool(abs(float(np.sum(g1 * g2))) <= coherence_threshold(pk, t, r, K))


@dataclass(frozen=True)
class PackingParams:
    """Construction parameters.

    ``c1`` must lie in ``(0, t^2 / (8 ln 2))``. The bound evaluators use the
    reparameterization ``t -> 1 - t`` and write the range as ``(1-t)/(8 ln 2)``;
    here ``t`` is always the coherence/separation parameter of the construction.
    """

    r: float
    t: float
    c1: float
    eps_prime: float
    count: int
    seed: int = 0
    max_draws_factor: int = 100
    require_capacity: bool = False

    @staticmethod
    def eps_limit(r: float, K: int, p: int) -> float:
        """Strict upper limit ``min(r^2, r^4 / (2 K p))`` on eps'."""
        return min(r**2, r**4 / (2 * K * p))

    @staticmethod
    def c1_limit(t: float) -> float:
        return t**2 / (8 * math.log(2))

    def validate(self, K: int, p: int) -> None:
        if not self.r > 0:
            raise PreconditionError("r must be positive")
        if not 0 < self.t < 1:
            raise PreconditionError("t must lie in (0, 1)")
        if not 0 < self.c1 < self.c1_limit(self.t):
            raise PreconditionError(f"c1 must lie in (0, {self.c1_limit(self.t):.6g})")
        if not 0 < self.eps_prime < self.eps_limit(self.r, K, p):
            raise PreconditionError(f"eps' must lie in (0, {self.eps_limit(self.r, K, p):.6g})")
        if self.count < 1:
            raise PreconditionError("count must be at least 1")


def capacity_exponent(c1: float, mk: int, pk: int, K: int) -> int:
    """Exponent of the per-mode packing size ``L_k = 2^floor(c1 (m_k-1) p_k - ½ log2(2K))``."""
    return math.floor(c1 * (mk - 1) * pk - 0.5 * math.log2(2 * K))


@dataclass(frozen=True)
class PackingClass:
    """Reference dictionary plus ``count`` perturbed KS members.

    ``generators[k][l]`` and ``directions[k][l]`` are the sign matrix and its
    lift for mode k of member l. Member l uses the l-th perturbation in every
    mode, so distinct members differ in all modes.
    """

    reference: KsDictionary
    generators: tuple
    directions: tuple
    eta: float
    nu: float
    params: PackingParams
    capacity_log2: tuple

    @property
    def K(self) -> int:
        return self.reference.K

    @property
    def size(self) -> int:
        return len(self.directions[0])

    @property
    def capacity(self) -> tuple:
        """Theoretical ``L_k`` per mode (0 where the exponent is negative)."""
        return tuple(2**e if e >= 0 else 0 for e in self.capacity_log2)

    def member_factors(self, l: int) -> tuple:
        return tuple(
            self.eta * d0 + self.nu * dirs[l]
            for d0, dirs in zip(self.reference.factors, self.directions)
        )

    def member(self, l: int) -> np.ndarray:
        return kron_all(self.member_factors(l))

    def members(self) -> list:
        return [self.member(l) for l in range(self.size)]


def _lift(g: np.ndarray, unitaries: Sequence[np.ndarray]) -> np.ndarray:
    mk, pk = g.shape[0] + 1, g.shape[1]
    out = np.empty((mk, pk))
    for j in range(pk):
        out[:, j] = unitaries[j] @ np.concatenate(([0.0], g[:, j]))
    return out


def build_packing_class(d0: KsDictionary, params: PackingParams,
                        rng: np.random.Generator | None = None) -> PackingClass:
    """Draw ``params.count`` mutually coherent perturbations per mode and mix them in."""
    K = d0.K
    p = d0.shape[1]
    params.validate(K, p)
    if any(mk < 2 for mk in d0.m_dims):
        raise PreconditionError("every m_k must be at least 2")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    r, t = params.r, params.t
    cap = tuple(capacity_exponent(params.c1, mk, pk, K) for mk, pk in zip(d0.m_dims, d0.p_dims))
    if params.require_capacity and min(cap) < 1:
        raise PreconditionError(f"theoretical capacity below 2 (log2 L_k = {cap})")

    generators, directions = [], []
    for f0 in d0.factors:
        mk, pk = f0.shape
        unitaries = [householder_from_e1(f0[:, j]) for j in range(pk)]
        accepted: list[np.ndarray] = []
        draws = 0
        limit = params.max_draws_factor * params.count
        while len(accepted) < params.count:
            if draws >= limit:
                raise PackingError(
                    f"only {len(accepted)} of {params.count} coherent generating matrices "
                    f"after {draws} draws for a {mk}x{pk} factor")
            g = build_generating_matrix(mk, pk, r, K, rng)
            draws += 1
            if all(coherence_ok(g, h, pk, t, r, K) for h in accepted):
                accepted.append(g)
        generators.append(tuple(accepted))
        directions.append(tuple(_lift(g, unitaries) for g in accepted))

    eta = math.sqrt(1.0 - params.eps_prime / r**2)
    nu = math.sqrt(r ** (2.0 / K) * params.eps_prime / r**2)
    return PackingClass(d0, tuple(generators), tuple(directions), eta, nu, params, cap)


def corrupt_member(cls: PackingClass, l: int = 0, scale: float = 1.5) -> PackingClass:
    """Copy of ``cls`` with one direction column of member ``l`` rescaled (negative control)."""
    dirs = [list(d) for d in cls.directions]
    bad = dirs[0][l].copy()
    bad[:, 0] *= scale
    dirs[0][l] = bad
    return replace(cls, directions=tuple(tuple(d) for d in dirs))


@dataclass
class Check:
    name: str
    bound: float
    observed: float
    passed: bool


@dataclass
class PackingReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def rows(self) -> list:
        return [(c.name, c.bound, c.observed, c.passed) for c in self.checks]


def pairwise_sq_distances(members: Sequence[np.ndarray]) -> np.ndarray:
    """Squared Frobenius distances for all unordered pairs (i < j), in lexicographic order."""
    return np.array([float(np.sum((a - b) ** 2)) for a, b in itertools.combinations(members, 2)])


def verify_packing(cls: PackingClass) -> PackingReport:
    """Numerically check the separation, radius, norm and orthogonality properties."""
    prm = cls.params
    K = cls.K
    p = cls.reference.shape[1]
    r, t, eps = prm.r, prm.t, prm.eps_prime
    d0 = cls.reference.assemble()
    members = cls.members()
    rep = PackingReport()

    unit_dev = max(float(np.max(np.abs(np.linalg.norm(d, axis=0) - 1.0))) for d in members)
    rep.checks.append(Check("unit_norm_max_deviation", UNIT_NORM_TOL, unit_dev, unit_dev <= UNIT_NORM_TOL))

    radius = max(frobenius_distance(d, d0) for d in members)
    rep.checks.append(Check("max_radius", r, radius, radius <= r))
    rad_bound = 2 * K * p * eps / r**2
    rep.checks.append(Check("max_radius_sq_vs_2Kp_eps", rad_bound, radius**2, radius**2 <= rad_bound))

    orth = max(abs(float(np.sum(f0 * d)))
               for f0, dirs in zip(cls.reference.factors, cls.directions) for d in dirs)
    rep.checks.append(Check("factor_orthogonality", UNIT_NORM_TOL, orth, orth <= UNIT_NORM_TOL))

    mix = abs(cls.eta**2 + cls.nu**2 / r ** (2.0 / K) - 1.0)
    rep.checks.append(Check("eta_nu_relation", 1e-12, mix, mix <= 1e-12))

    coh = 0.0
    coh_ok = True
    for k, gens in enumerate(cls.generators):
        pk = cls.reference.p_dims[k]
        for g, h in itertools.combinations(gens, 2):
            coh = max(coh, abs(float(np.sum(g * h))) / coherence_threshold(pk, t, r, K))
            coh_ok &= coherence_ok(g, h, pk, t, r, K)
    rep.checks.append(Check("generator_coherence_ratio", 1.0, coh, coh_ok))

    if len(members) > 1:
        d2 = pairwise_sq_distances(members)
        lo = 2 * p / r**2 * (1 - t) * eps
        hi = 4 * K * p / r**2 * eps
        rep.checks.append(Check("min_pairwise_sq_distance", lo, float(d2.min()), float(d2.min()) >= lo))
        rep.checks.append(Check("max_pairwise_sq_distance", hi, float(d2.max()), float(d2.max()) <= hi))
    return rep


def min_distance_detect(dhat, cls: PackingClass | Sequence[np.ndarray]) -> int:
    """Index of the member closest to ``dhat`` in Frobenius norm (lowest index on ties)."""
    members = cls.members() if isinstance(cls, PackingClass) else list(cls)
    if not members:
        raise PreconditionError("empty packing class")
    dhat = np.asarray(dhat, dtype=np.float64)
    best, best_d = 0, math.inf
    for i, d in enumerate(members):
        dist = frobenius_distance(dhat, d)
        if dist < best_d:
            best, best_d = i, dist
    return best


@dataclass
class McDiarmidResult:
    frequency: float
    bound: float
    trials: int
    violations: int

    @property
    def applicable(self) -> bool:
        return self.bound < 1.0

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.frequency <= self.bound


def mcdiarmid_bound(alpha: float, rows: int, cols: int, beta: float, L: int) -> float:
    return 2 * L**2 * math.exp(-beta**2 / (4 * alpha**4 * rows * cols))


def mcdiarmid_check(alpha: float, rows: int, cols: int, beta: float, L: int, trials: int,
                    rng: np.random.Generator) -> McDiarmidResult:
    """Empirical probability that some pair among ``L`` random ±alpha matrices has
    ``|<A_l, A_l'>| >= beta``, compared with ``2 L^2 exp(-beta^2 / (4 alpha^4 rows cols))``."""
    n = rows * cols
    violations = 0
    iu = np.triu_indices(L, 1)
    # integer sign sums avoid rounding at the (often integral) boundary beta / alpha^2
    cut = beta / alpha**2 * (1.0 - 1e-12)
    for _ in range(trials):
        signs = rng.integers(0, 2, size=(L, n), dtype=np.int64) * 2 - 1
        ip = np.abs((signs @ signs.T)[iu])
        if np.any(ip >= cut):
            violations += 1
    return McDiarmidResult(violations / trials, mcdiarmid_bound(alpha, rows, cols, beta, L), trials, violations)
