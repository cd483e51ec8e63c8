import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from kronlearn.coefficients import (
    CoefficientSpec,
    covariance_of,
    generate_observations,
    sample_coefficients,
    sample_support_random,
    sample_support_separable,
    sample_values_gaussian,
    sample_values_ternary,
    snr,
)
from kronlearn.dictionary_model import KsDictionary
from kronlearn.errors import DimensionError, PreconditionError


def rng(seed=0):
    return np.random.default_rng(seed)


def test_spec_validation():
    with pytest.raises(PreconditionError):
        CoefficientSpec("nope", (2, 2), s=1)
    with pytest.raises(PreconditionError):
        CoefficientSpec("random-sparse", (2, 2), s=5)
    with pytest.raises(PreconditionError):
        CoefficientSpec("separable-sparse", (2, 2), s_dims=(3, 1))
    with pytest.raises(PreconditionError):
        CoefficientSpec("random-sparse", (2, 2), s=1, sigma_a=0)
    assert CoefficientSpec("separable-sparse", (4, 3), s_dims=(2, 3)).s == 6


def test_random_support_full_and_errors():
    np.testing.assert_array_equal(sample_support_random(5, 5, rng()), np.arange(5))
    with pytest.raises(PreconditionError):
        sample_support_random(3, 4, rng())


def test_random_support_singletons_uniform():
    g = rng(1)
    counts = np.bincount([sample_support_random(4, 1, g)[0] for _ in range(40_000)], minlength=4)
    sd = math.sqrt(40_000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 10_000) <= 3 * sd)


def test_random_support_pairs_uniform():
    g = rng(2)
    pairs = list(itertools.combinations(range(4), 2))
    counts = dict.fromkeys(pairs, 0)
    for _ in range(60_000):
        counts[tuple(sample_support_random(4, 2, g))] += 1
    assert stats.chisquare(list(counts.values())).pvalue > 1e-3


def test_separable_support_grid_structure():
    g = rng(3)
    for _ in range(50):
        sup = sample_support_separable((5, 6), (2, 3), g)
        assert sup.size == 6
        mask = np.zeros(30, bool)
        mask[sup] = True
        grid = mask.reshape(5, 6)
        rows = np.flatnonzero(grid.any(axis=1))
        cols = np.flatnonzero(grid.any(axis=0))
        assert rows.size == 2 and cols.size == 3
        assert grid[np.ix_(rows, cols)].all()
    np.testing.assert_array_equal(sample_support_separable((2, 3), (2, 3), g), np.arange(6))
    with pytest.raises(PreconditionError):
        sample_support_separable((2, 2), (3, 1), g)


def test_separable_support_singletons_uniform():
    g = rng(4)
    counts = np.bincount([sample_support_separable((2, 2), (1, 1), g)[0] for _ in range(40_000)], minlength=4)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_gaussian_values():
    v = sample_values_gaussian(100_000, 2.0, rng(5))
    assert abs(v.mean()) <= 4 * 2.0 / math.sqrt(1e5)
    assert v.var() == pytest.approx(4.0, rel=0.05)
    assert sample_values_gaussian(0, 1.0, rng()).size == 0
    with pytest.raises(PreconditionError):
        sample_values_gaussian(3, 0.0, rng())


def test_ternary_values():
    v = sample_values_ternary(100_000, rng(6), bias=0.3)
    assert set(np.unique(v)) == {-1.0, 1.0}
    frac = np.mean(v > 0)
    assert abs(frac - 0.3) <= 4 * math.sqrt(0.3 * 0.7 / 1e5)
    x = sample_coefficients(CoefficientSpec("ternary-sparse", (4, 4), s=3), 500, rng(7))
    np.testing.assert_array_equal(np.sum(x**2, axis=0), 3.0)


def test_covariance_of():
    assert covariance_of(CoefficientSpec("random-sparse", (4,), s=4)) == 1.0
    assert covariance_of(CoefficientSpec("random-sparse", (16, 8), s=5)) == 5 / 128
    with pytest.raises(PreconditionError):
        covariance_of(CoefficientSpec("general-dense", (4,)))


def test_empirical_ternary_covariance():
    spec = CoefficientSpec("ternary-sparse", (2, 4), s=3)
    x = sample_coefficients(spec, 100_000, rng(8))
    cov = x @ x.T / x.shape[1]
    assert np.max(np.abs(cov - covariance_of(spec) * np.eye(8))) <= 0.01


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["random-sparse", "ternary-sparse", "separable-sparse"]),
       st.integers(1, 20))
def test_support_sizes_exact(seed, model, n):
    kw = {"s_dims": (2, 1)} if model == "separable-sparse" else {"s": 3}
    spec = CoefficientSpec(model, (3, 4), **kw)
    x = sample_coefficients(spec, n, rng(seed))
    assert x.shape == (12, n)
    nnz = np.count_nonzero(x, axis=0)
    # Gaussian values are nonzero with probability one
    np.testing.assert_array_equal(nnz, spec.s)


def test_gaussian_energy():
    spec = CoefficientSpec("random-sparse", (8, 8), s=4, sigma_a=1.5)
    x = sample_coefficients(spec, 100_000, rng(9))
    assert np.mean(np.sum(x**2, axis=0)) == pytest.approx(4 * 1.5**2, rel=0.05)


def test_generate_observations():
    spec = CoefficientSpec("random-sparse", (2, 2), s=4)
    d = KsDictionary.identity([2, 2])
    y, x = generate_observations(d, spec, 3, 0.0, rng(10))
    np.testing.assert_array_equal(y, x)
    a = np.random.default_rng(11).normal(size=(4, 4))
    a /= np.linalg.norm(a, axis=0)
    y, x = generate_observations(a, spec, 10, 0.0, rng(12))
    np.testing.assert_allclose(y, a @ x, atol=0)

    ternary = CoefficientSpec("ternary-sparse", (4, 4), s=2)
    y, x = generate_observations(np.eye(16), ternary, 10_000, 0.3, rng(13))
    assert np.mean((y - x) ** 2) == pytest.approx(0.09, rel=0.05)
    emp_snr = np.mean(np.sum(x**2, axis=0)) / (16 * np.mean((y - x) ** 2))
    assert emp_snr == pytest.approx(snr(ternary, 16, 0.3), rel=0.1)

    y1, _ = generate_observations(np.eye(16), ternary, 5, 0.3, rng(14))
    y2, _ = generate_observations(np.eye(16), ternary, 5, 0.3, rng(14))
    np.testing.assert_array_equal(y1, y2)
    with pytest.raises(DimensionError):
        generate_observations(np.eye(3), ternary, 5, 0.3, rng())


def test_snr():
    assert snr(CoefficientSpec("random-sparse", (4, 4), s=16), 16, 1.0) == 1.0
    assert snr(CoefficientSpec("random-sparse", (16, 8), s=5), 128, 0.1) == pytest.approx(3.90625, rel=1e-14)
    spec = CoefficientSpec("ternary-sparse", (4, 4), s=2)
    assert snr(spec, 16, 0.2) == pytest.approx(snr(spec, 16, 0.1) / 4, rel=1e-14)
    with pytest.raises(PreconditionError):
        snr(spec, 16, 0.0)
