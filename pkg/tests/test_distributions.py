import numpy as np
import pytest

from conftest import random_coords
from liemeans import (
    GroupMismatch,
    MembershipError,
    euclidean_mean,
    expect_matrix,
    group_covariance,
    group_exp,
    group_log,
    invert,
    make_empirical,
    make_group,
    product_distribution,
    sample_concentrated,
    sample_uniform_haar,
    shift,
    symmetrize,
)
from liemeans.distributions import NormalStream, weighted_sum


def test_make_empirical_weights(rng):
    G = make_group("SO3")
    g = group_exp(G, rng.normal(size=(3, 3)))
    d = make_empirical(G, g[0])
    assert len(d) == 1 and d.weights[0] == 1.0
    assert np.allclose(make_empirical(G, g).weights, 1 / 3)
    d = make_empirical(G, g, [2, 1, 1])
    assert np.allclose(d.weights, [0.5, 0.25, 0.25])
    assert d.mass == 4.0
    with pytest.raises(ValueError):
        make_empirical(G, g, [1, 0, 1])
    with pytest.raises(MembershipError):
        make_empirical(G, np.stack([np.eye(3), 2 * np.eye(3)]))
    with pytest.raises(ValueError):
        make_empirical(G, np.zeros((0, 3, 3)))


def test_shift_and_invert(rng):
    G = make_group("SE3")
    d = make_empirical(G, group_exp(G, random_coords("SE3", rng, 20)), rng.uniform(1, 2, 20))
    h = group_exp(G, random_coords("SE3", rng, 1)[0])
    assert np.array_equal(shift(d, np.eye(4)).samples, d.samples)
    back = shift(shift(d, h, "left"), np.linalg.inv(h), "left")
    assert np.allclose(back.samples, d.samples, atol=1e-12)
    assert np.allclose(invert(invert(d)).samples, d.samples, atol=1e-12)
    assert np.array_equal(shift(d, h, "right").weights, d.weights)
    with pytest.raises(GroupMismatch):
        shift(d, np.eye(3))
    with pytest.raises(ValueError):
        shift(d, h, "up")


def test_expectation_shift_and_inversion_identities(rng):
    G = make_group("SO3")
    d = make_empirical(G, group_exp(G, rng.normal(size=(30, 3))), rng.uniform(1, 3, 30))
    h = group_exp(G, rng.normal(size=3))
    phi = lambda g: g @ g  # noqa: E731
    assert np.array_equal(expect_matrix(shift(d, h, "left"), phi), expect_matrix(d, lambda g: phi(h @ g)))
    assert np.array_equal(expect_matrix(invert(d), phi), expect_matrix(d, lambda g: phi(np.linalg.inv(g))))


def test_expectation_examples(rng):
    G = make_group("SO3")
    d = make_empirical(G, group_exp(G, rng.normal(size=(10, 3))))
    C = rng.normal(size=(2, 5))
    assert np.allclose(expect_matrix(d, lambda g: np.broadcast_to(C, (len(g), 2, 5))), C)
    assert np.array_equal(expect_matrix(d, lambda g: g), euclidean_mean(d))
    mu = group_exp(G, [0.2, 0.4, -0.1])
    s = symmetrize(d, mu)
    r = expect_matrix(s, lambda g: group_log(G, np.linalg.solve(mu, g)))
    assert np.max(np.abs(r)) < 1e-12


def test_weighted_sum_is_order_exact():
    w = np.array([0.5, 0.5, 0.5, 0.5])
    v = np.array([1e16, 1.0, -1e16, 1.0])
    assert weighted_sum(w, v) == 1.0


def test_normal_stream_deterministic_and_standard():
    a = NormalStream(7).normal((20_000,))
    b = NormalStream(7).normal((20_000,))
    assert np.array_equal(a, b)
    assert abs(a.mean()) < 0.03 and abs(a.std() - 1) < 0.03
    assert not np.array_equal(a, NormalStream(8).normal((20_000,)))


def test_sample_concentrated(rng):
    G = make_group("SO3")
    mu = group_exp(G, [0.3, -0.2, 0.9])
    d = sample_concentrated(G, mu, 1e-18 * np.eye(3), 10, seed=1)
    assert np.allclose(d.samples, mu, atol=1e-8)
    d = sample_concentrated(G, mu, 0.01 * np.eye(3), 10_000, seed=2)
    Sigma = group_covariance(d, mu).matrix
    assert np.max(np.abs(Sigma - 0.01 * np.eye(3))) < 0.05 * 0.01
    again = sample_concentrated(G, mu, 0.01 * np.eye(3), 10_000, seed=2)
    assert np.array_equal(d.samples, again.samples)
    with pytest.raises(ValueError):
        sample_concentrated(G, mu, -np.eye(3), 5, seed=1)


def test_symmetric_draws_are_symmetric():
    G = make_group("SE3")
    mu = group_exp(G, [0.1, 0.2, 0.3, 1.0, 0.0, -1.0])
    d = sample_concentrated(G, mu, 0.01 * np.eye(6), 50, seed=3, symmetric=True)
    x = group_log(G, np.linalg.solve(mu, d.samples))
    assert np.allclose(x[:50], -x[50:], atol=1e-12)


def test_haar_samples():
    SO2, SO3 = make_group("SO2"), make_group("SO3")
    d2 = sample_uniform_haar(SO2, 10_000, seed=4)
    assert np.linalg.norm(euclidean_mean(d2)) < 0.05
    d3 = sample_uniform_haar(SO3, 10_000, seed=5)
    assert np.max(np.abs(euclidean_mean(d3))) < 0.05
    assert np.all(SO3.contains(d3.samples))
    assert np.array_equal(d3.samples, sample_uniform_haar(SO3, 10_000, seed=5).samples)
    with pytest.raises(ValueError):
        sample_uniform_haar(make_group("SE3"), 5, seed=1)


def test_product_distribution(rng):
    G = make_group("SO3")
    g, h = group_exp(G, rng.normal(size=(2, 3)))
    prod = product_distribution(make_empirical(G, g), make_empirical(G, h), 5, seed=1)
    assert np.allclose(prod.samples, g @ h)
    d1 = sample_concentrated(G, g, 0.04 * np.eye(3), 200, seed=1)
    same = product_distribution(d1, make_empirical(G, np.eye(3)), 20_000, seed=2)
    assert np.allclose(euclidean_mean(same), euclidean_mean(d1), atol=0.02)
    d2 = sample_concentrated(G, h, 0.04 * np.eye(3), 200, seed=3)
    prod = product_distribution(d1, d2, 40_000, seed=4)
    assert np.allclose(euclidean_mean(prod), euclidean_mean(d1) @ euclidean_mean(d2), atol=0.02)
    with pytest.raises(GroupMismatch):
        product_distribution(d1, make_empirical(make_group("SO2"), np.eye(2)), 5, seed=1)
