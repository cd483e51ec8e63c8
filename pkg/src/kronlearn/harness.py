"""Seeded experiment runners producing CSV tables.

Every random draw comes from ``np.random.default_rng([seed, tag, ...indices])``
so a trial's data depends only on the master seed and its grid coordinates.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import bounds as bd
from .coefficients import CoefficientSpec, generate_observations
from .dictionary_model import (
    KsDictionary,
    PackingParams,
    build_packing_class,
    corrupt_member,
    mcdiarmid_check,
    min_distance_detect,
    verify_packing,
)
from .errors import ConfigError
from .estimators import SplitLayout, ks_estimate, unstructured_estimate
from .tensor_core import kron

log = logging.getLogger(__name__)

EXPERIMENTS = ("figure1a", "figure1b", "bounds", "packing", "detector")

# stream tags; figure1a and figure1b share one so both see the same data
TAG_FIGURE = 1
TAG_PACKING = 2
TAG_CONCENTRATION = 3
TAG_DETECTOR = 4

PRESETS = {
    "desk": {"p_values": [16, 64], "s_values": [2, 5], "N_grid": [500, 1000, 2000, 4000], "trials": 25},
    "full": {"p_values": [128, 256, 512], "s_values": [5, 5, 5], "N_grid": [1000, 2000, 4000, 8000],
             "trials": 50},
}


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 0
    output_path: str | None = None
    # figure 1
    p_values: list = field(default_factory=lambda: [128, 256, 512])
    s_values: list = field(default_factory=lambda: [5, 5, 5])
    N_grid: list = field(default_factory=lambda: [1000, 2000, 4000, 8000])
    r: float = 0.1
    sigma: float = 0.1
    trials: int | None = None
    # bounds
    m_dims: list = field(default_factory=lambda: [4, 4])
    p_dims: list = field(default_factory=lambda: [4, 4])
    s: int = 2
    sigma_a: float = 1.0
    sigma_x_norm: float | None = None
    t: float = 0.5
    c1: float | None = None
    # packing and detector
    packing_r: float = 0.5
    eps_scale: float = 0.5
    count: int = 8
    corrupt: bool = False
    concentration_dims: list = field(default_factory=lambda: [[4, 4], [8, 8], [16, 16]])
    concentration_trials: int = 10_000
    cov_s: int = 1
    sigma_grid: list = field(default_factory=lambda: [0.01, 0.1, 1.0, 10.0])
    detector_N: int = 10_000
    detector_s: int = 2

    @classmethod
    def from_dict(cls, data: dict, preset: str | None = None) -> "ExperimentConfig":
        """Build from a JSON-style dict; a preset is applied first, explicit keys win."""
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("missing config key: experiment")
        merged: dict[str, Any] = {}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            merged.update(PRESETS[preset])
        merged.update(data)
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def trial_count(self) -> int:
        if self.trials is not None:
            return self.trials
        return 200 if self.experiment == "detector" else 50

    def validate(self) -> None:
        bad = []

        def need(cond, name):
            if not cond:
                bad.append(name)

        need(self.experiment in EXPERIMENTS, "experiment")
        need(isinstance(self.seed, int) and self.seed >= 0, "seed")
        need(self.trials is None or (isinstance(self.trials, int) and self.trials >= 1), "trials")
        need(_int_list(self.N_grid) and min(self.N_grid) >= 1, "N_grid")
        need(self.sigma >= 0, "sigma")
        need(self.r >= 0, "r")
        if self.experiment in ("figure1a", "figure1b"):
            ok = _int_list(self.p_values) and _int_list(self.s_values) and len(self.p_values) == len(self.s_values)
            need(ok, "p_values/s_values")
            if ok and _int_list(self.N_grid):
                for p, s in zip(self.p_values, self.s_values):
                    need(1 <= s <= p, "s_values")
                    need(max(balanced_factors(p)) <= min(self.N_grid), "N_grid")
        need(_int_list(self.m_dims) and _int_list(self.p_dims) and len(self.m_dims) == len(self.p_dims),
             "m_dims/p_dims")
        need(self.s >= 1 and self.sigma_a > 0 and 0 < self.t < 1, "s/sigma_a/t")
        need(self.c1 is None or self.c1 > 0, "c1")
        need(self.sigma_x_norm is None or self.sigma_x_norm > 0, "sigma_x_norm")
        need(self.packing_r > 0 and 0 < self.eps_scale < 1 and self.count >= 1, "packing_r/eps_scale/count")
        need(all(isinstance(d, (list, tuple)) and len(d) == 2 and _int_list(d) for d in self.concentration_dims),
             "concentration_dims")
        need(self.concentration_trials >= 1 and self.cov_s >= 1, "concentration_trials/cov_s")
        need(all(isinstance(v, (int, float)) and v >= 0 for v in self.sigma_grid), "sigma_grid")
        need(self.detector_N >= 1 and self.detector_s >= 1, "detector_N/detector_s")
        if self.experiment == "detector":
            need(len(self.m_dims) == 2 and list(self.m_dims) == list(self.p_dims), "m_dims/p_dims")
        if bad:
            raise ConfigError(f"invalid config fields: {', '.join(dict.fromkeys(bad))}")

    def config_hash(self) -> str:
        """Short sha256 of the resolved config (output path excluded)."""
        d = dataclasses.asdict(self)
        d.pop("output_path")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _int_list(v) -> bool:
    return isinstance(v, (list, tuple)) and len(v) > 0 and all(
        isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in v)


def balanced_factors(p: int) -> tuple:
    """Most balanced ``(p1, p2)`` with ``p1 * p2 == p`` and ``p1 <= p2``."""
    p1 = math.isqrt(p)
    while p % p1:
        p1 -= 1
    return p1, p // p1


@dataclass
class Table:
    header: list
    rows: list
    failures: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(table: Table, path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(table.to_csv())


def perturbed_identity(pk: int, rk: float, rng: np.random.Generator) -> np.ndarray:
    """``I + Δ`` with unit-norm columns and ``||Δ||_F == rk``.

    Column ``j`` is ``cos θ_j e_j + sin θ_j u_j`` with ``u_j ⟂ e_j`` a random
    Gaussian direction; the per-column shares ``2 - 2 cos θ_j`` of ``rk^2`` are
    proportional to the squared column norms of a Gaussian matrix.
    """
    if rk == 0 or pk == 1:
        return np.eye(pk)
    g = rng.standard_normal((pk, pk))
    shares = np.sum(g**2, axis=0)
    shares = shares / shares.sum()
    if rk**2 * shares.max() > 4:
        raise ConfigError("perturbation radius too large for unit-norm columns")
    u = g.copy()
    u[np.arange(pk), np.arange(pk)] = 0.0
    u /= np.linalg.norm(u, axis=0)
    cos = 1.0 - rk**2 * shares / 2.0
    sin = np.sqrt(np.clip(1.0 - cos**2, 0.0, None))
    return np.eye(pk) * cos + u * sin


@dataclass
class TrialResult:
    experiment: str
    p: int
    p1: int
    p2: int
    s: int
    N: int
    trial: int
    r_k: float
    ks_mse: float
    unstructured_mse: float | None
    upper_bound: float
    ratio: float
    conditions_ok: bool


TRIAL_HEADER = [f.name for f in dataclasses.fields(TrialResult)]


def _figure_trials(cfg: ExperimentConfig, with_baseline: bool) -> list:
    out = []
    for p, s in zip(cfg.p_values, cfg.s_values):
        p1, p2 = balanced_factors(p)
        layout = SplitLayout(p1, p2)
        spec = CoefficientSpec("ternary-sparse", (p1, p2), s=s)
        snr = s / (p * cfg.sigma**2) if cfg.sigma > 0 else math.inf
        for n in cfg.N_grid:
            rk = bd.max_admissible_radius(p1, p2, s, n, cfg.r)
            conds = bd.check_upper_bound_conditions(rk, rk, p1, p2, s, n, cfg.sigma, cfg.r)
            if not conds.all_ok:
                log.warning("upper-bound conditions violated at p=%d N=%d: %s", p, n, conds.failed())
            if cfg.sigma > 0:
                ub = bd.mse_upper_bound_k2(p1, p2, p1, p2, n, snr, cfg.sigma)
            else:  # infinite-SNR limit
                ub = 8 * p / n * 3 * (p1 + p2)
            for trial in range(cfg.trial_count()):
                rng = np.random.default_rng([cfg.seed, TAG_FIGURE, p, n, trial])
                a = perturbed_identity(p1, rk, rng)
                b = perturbed_identity(p2, rk, rng)
                d = kron(a, b)
                y, _ = generate_observations(d, spec, n, cfg.sigma, rng)
                est = ks_estimate(y, layout, s, truth=d)
                un = None
                if with_baseline:
                    un = float(np.sum((unstructured_estimate(y, s) - d) ** 2))
                ratio = est.mse / ub if ub > 0 else math.nan
                out.append(TrialResult(cfg.experiment, p, p1, p2, s, n, trial, rk, est.mse, un, ub,
                                       ratio, conds.all_ok))
    return out


def run_figure1a(cfg: ExperimentConfig) -> list:
    return _figure_trials(cfg, with_baseline=False)


def run_figure1b(cfg: ExperimentConfig) -> list:
    return _figure_trials(cfg, with_baseline=True)


def trials_table(cfg: ExperimentConfig, results: Sequence[TrialResult]) -> Table:
    h = cfg.config_hash()
    rows = [[h] + [getattr(r, k) for k in TRIAL_HEADER] for r in results]
    return Table(["config_hash"] + TRIAL_HEADER, rows)


BOUNDS_HEADER = ["config_hash", "bound", "N", "value", "term_first", "term_radius", "term_sample",
                 "active", "degrees_of_freedom", "validity"]


def _c1(cfg: ExperimentConfig, limit: float) -> float:
    return cfg.c1 if cfg.c1 is not None else 0.5 * limit


def run_bounds_sweep(cfg: ExperimentConfig) -> Table:
    """Five rows per sample size: the four lower bounds and the K=2 upper bound."""
    h = cfg.config_hash()
    p = math.prod(cfg.p_dims)
    m = math.prod(cfg.m_dims)
    c1 = _c1(cfg, (1 - cfg.t) / (8 * math.log(2)))
    sx = cfg.sigma_x_norm if cfg.sigma_x_norm is not None else cfg.s * cfg.sigma_a**2 / p
    rows = []
    for n in cfg.N_grid:
        inp = bd.BoundInputs(N=n, m_dims=tuple(cfg.m_dims), p_dims=tuple(cfg.p_dims), sigma=cfg.sigma,
                             r=cfg.r, t=cfg.t, c1=c1, s=cfg.s, sigma_a=cfg.sigma_a, sigma_x_norm=sx)
        reports = [
            ("general", bd.lower_bound_general(inp)),
            ("sparse", bd.lower_bound_sparse(inp)),
            ("sparse_gaussian", bd.lower_bound_sparse_gaussian(inp)),
            ("sparse_gaussian_separable", bd.lower_bound_sparse_gaussian(inp, separable=True)),
        ]
        for name, rep in reports:
            rows.append([h, name, n, rep.value, *rep.terms, rep.active, rep.degrees_of_freedom,
                         ";".join(rep.validity) or "ok"])
        if len(cfg.m_dims) == 2 and cfg.sigma > 0:
            (m1, m2), (p1, p2) = cfg.m_dims, cfg.p_dims
            snr = cfg.s * cfg.sigma_a**2 / (m * cfg.sigma**2)
            ub = bd.mse_upper_bound_k2(p1, p2, m1, m2, n, snr, cfg.sigma)
            rk = bd.max_admissible_radius(p1, p2, cfg.s, n, cfg.r)
            flags = bd.check_upper_bound_conditions(rk, rk, p1, p2, cfg.s, n, cfg.sigma, cfg.r).failed()
            if m1 != p1 or m2 != p2:
                flags.append("non-square")
            rows.append([h, "upper_bound_k2", n, ub, None, None, None, "", inp.dof, ";".join(flags) or "ok"])
        else:
            rows.append([h, "upper_bound_k2", n, None, None, None, None, "", inp.dof, "not-applicable"])
    return Table(BOUNDS_HEADER, rows)


PACKING_HEADER = ["config_hash", "section", "name", "bound", "observed", "status"]


def _packing_class(cfg: ExperimentConfig):
    d0 = KsDictionary(tuple(np.eye(mk, pk) for mk, pk in zip(cfg.m_dims, cfg.p_dims)))
    K = len(cfg.m_dims)
    p = math.prod(cfg.p_dims)
    params = PackingParams(r=cfg.packing_r, t=cfg.t, c1=_c1(cfg, PackingParams.c1_limit(cfg.t)),
                           eps_prime=cfg.eps_scale * PackingParams.eps_limit(cfg.packing_r, K, p),
                           count=cfg.count, seed=cfg.seed)
    cls = build_packing_class(d0, params, np.random.default_rng([cfg.seed, TAG_PACKING]))
    if cfg.corrupt:
        cls = corrupt_member(cls)
    return cls


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def run_packing(cfg: ExperimentConfig) -> Table:
    """Construction checks, per-size concentration checks, and the covariance bound."""
    h = cfg.config_hash()
    cls = _packing_class(cfg)
    K = cls.K
    rows, failures = [], []
    for name, bound, observed, ok in verify_packing(cls).rows():
        rows.append([h, "construction", name, bound, observed, _status(ok)])
        if not ok:
            failures.append(name)

    for i, (mk, pk) in enumerate(cfg.concentration_dims):
        alpha = 1.0 / (cfg.packing_r ** (1.0 / K) * math.sqrt(mk - 1))
        beta = pk * cfg.t / cfg.packing_r ** (2.0 / K)
        res = mcdiarmid_check(alpha, mk - 1, pk, beta, 2, cfg.concentration_trials,
                              np.random.default_rng([cfg.seed, TAG_CONCENTRATION, i]))
        status = _status(res.passed) if res.applicable else "not-applicable"
        rows.append([h, "concentration", f"m{mk}_p{pk}", res.bound, res.frequency, status])
        if not res.passed:
            failures.append(f"concentration m{mk}_p{pk}")

    p = cls.reference.shape[1]
    supports = [list(c) for c in itertools.combinations(range(p), cfg.cov_s)]
    cov = bd.covariance_diff_check(cls, supports, cfg.sigma_a, cfg.sigma)
    rows.append([h, "covariance", "max_ratio", 1.0, cov.max_ratio, _status(cov.passed)])
    if not cov.passed:
        failures.append("covariance")
    return Table(PACKING_HEADER, rows, failures)


DETECTOR_HEADER = ["config_hash", "sigma", "trials", "errors", "error_rate", "chance_rate", "mean_mse"]


def run_detector(cfg: ExperimentConfig) -> Table:
    """Minimum-distance detection of the generating member from a KS estimate."""
    h = cfg.config_hash()
    cls = _packing_class(cfg)
    members = cls.members()
    L = len(members)
    p1, p2 = cfg.p_dims
    layout = SplitLayout(p1, p2)
    spec = CoefficientSpec("ternary-sparse", (p1, p2), s=cfg.detector_s)
    rows = []
    for i, sigma in enumerate(cfg.sigma_grid):
        errors = 0
        mses = []
        for trial in range(cfg.trial_count()):
            rng = np.random.default_rng([cfg.seed, TAG_DETECTOR, i, trial])
            l = int(rng.integers(L))
            y, _ = generate_observations(members[l], spec, cfg.detector_N, float(sigma), rng)
            est = ks_estimate(y, layout, cfg.detector_s, truth=members[l])
            mses.append(est.mse)
            errors += int(min_distance_detect(est.d_hat, members) != l)
        n = cfg.trial_count()
        rows.append([h, float(sigma), n, errors, errors / n, (L - 1) / L, float(np.mean(mses))])
    return Table(DETECTOR_HEADER, rows)


def run(cfg: ExperimentConfig) -> Table:
    if cfg.experiment == "figure1a":
        return trials_table(cfg, run_figure1a(cfg))
    if cfg.experiment == "figure1b":
        return trials_table(cfg, run_figure1b(cfg))
    if cfg.experiment == "bounds":
        return run_bounds_sweep(cfg)
    if cfg.experiment == "packing":
        return run_packing(cfg)
    return run_detector(cfg)
