import numpy as np
import pytest

from conftest import random_coords
from liemeans import (
    Chordal,
    SingularCovariance,
    cost_L,
    euclidean_covariance,
    frechet_mean,
    frechet_variance,
    frobenius_inner_product,
    group_covariance,
    group_exp,
    group_theoretic_mean,
    InnerProduct,
    karcher_covariance,
    make_empirical,
    make_group,
    multi_start_group_means,
    orthonormalize_basis,
    propagate,
    sample_concentrated,
    symmetrize,
    weighted_cost,
    weighted_cost_gradient,
)
from liemeans.covariance import vec
from liemeans.lie_core import symmetric_sqrt


def cloud(name, sigma, N, seed, center=None):
    G = make_group(name)
    rng = np.random.default_rng(seed)
    mu = group_exp(G, random_coords(name, rng, 1, max_angle=2.0)[0]) if center is None else center
    return sample_concentrated(G, mu, sigma**2 * np.eye(G.n), N, seed)


def assert_cov_report(rep):
    C = rep.matrix
    assert np.max(np.abs(C - C.T)) <= 1e-12
    assert np.min(np.linalg.eigvalsh(C)) >= -1e-10
    assert abs(rep.variance - np.trace(C)) <= 1e-12


def test_vec_is_column_major():
    A = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vec(A), [1, 3, 2, 4])


def test_euclidean_covariance():
    G = make_group("SO3")
    rep = euclidean_covariance(make_empirical(G, group_exp(G, [0.1, 0.2, 0.3])))
    assert np.allclose(rep.matrix, 0.0) and rep.variance == 0.0
    d = cloud("SO3", 0.4, 200, 1)
    rep = euclidean_covariance(d)
    assert rep.matrix.shape == (9, 9)
    assert_cov_report(rep)
    mu_E = np.average(d.samples, axis=0, weights=d.weights)
    direct = np.sum(d.weights * np.sum((d.samples - mu_E) ** 2, axis=(1, 2)))
    assert np.isclose(rep.variance, direct, rtol=1e-12)


def test_frechet_variance():
    G = make_group("SO3")
    g = group_exp(G, [0.1, 0.2, 0.3])
    assert frechet_variance(make_empirical(G, g), Chordal(), g) == 0.0
    d = cloud("SO3", 0.3, 100, 2)
    rep = frechet_mean(d, Chordal())
    assert np.isclose(frechet_variance(d, Chordal(), rep.mean), rep.cost, rtol=1e-12)


def test_frechet_variance_tied_minimizers():
    # two samples half a turn apart about z have two tied chordal minimizers
    G = make_group("SO2")
    th = np.pi / 2
    d = make_empirical(G, np.stack([group_exp(G, [th]), group_exp(G, [-th])]))
    from liemeans import SolverConfig

    a = frechet_mean(d, Chordal(), SolverConfig(init="given", init_element=group_exp(G, [0.3])))
    b = frechet_mean(d, Chordal(), SolverConfig(init="given", init_element=group_exp(G, [np.pi - 0.3])))
    assert not np.allclose(a.mean, b.mean, atol=1e-3)
    assert abs(frechet_variance(d, Chordal(), a.mean) - frechet_variance(d, Chordal(), b.mean)) < 1e-8


def test_group_covariance_basics(rng):
    G = make_group("SE3")
    mu = group_exp(G, random_coords("SE3", rng, 1)[0])
    rep = group_covariance(make_empirical(G, mu), mu)
    assert np.allclose(rep.matrix, 0.0)
    d = cloud("SE3", 0.2, 300, 3)
    mu = group_theoretic_mean(d).mean
    rep = group_covariance(d, mu)
    assert_cov_report(rep)
    assert np.isclose(rep.variance, cost_L(d, InnerProduct(G, np.eye(6)), mu), rtol=1e-12)


def test_group_covariance_change_of_basis(rng):
    G = make_group("SE3")
    A = rng.normal(size=(6, 6))
    W = A @ A.T + np.eye(6)
    H = orthonormalize_basis(G, W)
    d = cloud("SE3", 0.2, 100, 4)
    mu = group_theoretic_mean(d).mean
    S = symmetric_sqrt(W)
    Sigma = group_covariance(d, mu).matrix
    dH = make_empirical(H, d.samples)
    SigmaH = group_covariance(dH, mu).matrix
    assert np.allclose(SigmaH, S @ Sigma @ S.T, atol=1e-12)
    assert np.isclose(np.trace(SigmaH), cost_L(d, InnerProduct(G, W), mu), rtol=1e-10)


def test_karcher_covariance():
    G = make_group("SO3")
    ip = frobenius_inner_product(G)
    g = group_exp(G, [0.1, 0.2, 0.3])
    assert np.allclose(karcher_covariance(make_empirical(G, g), ip, g).matrix, 0.0)
    d = cloud("SO3", 0.3, 100, 5)
    mu = group_theoretic_mean(d).mean
    rep = karcher_covariance(d, ip, mu)
    assert_cov_report(rep)
    assert np.max(np.abs(rep.matrix - group_covariance(d, mu).matrix)) < 1e-8


def test_karcher_covariance_gap_is_cubic():
    G = make_group("SE3")
    ip = InnerProduct(G, np.eye(6))
    mu = group_exp(G, [0.2, -0.1, 0.4, 1.0, 0.5, -0.5])
    gaps = []
    for s in (0.05, 0.1):
        d = sample_concentrated(G, mu, s**2 * np.eye(6), 200, seed=6)
        gaps.append(np.max(np.abs(karcher_covariance(d, ip, mu).matrix - group_covariance(d, mu).matrix)))
    slope = np.log(gaps[1] / gaps[0]) / np.log(2.0)
    assert gaps[0] < 10 * 0.05**3
    assert slope > 2.5


def test_propagate_examples(rng):
    G = make_group("SE3")
    mu1 = group_exp(G, random_coords("SE3", rng, 1)[0])
    A = rng.normal(size=(6, 6))
    S1, S2 = A @ A.T, np.diag(rng.uniform(0.1, 1, 6))
    mu, S = propagate(G, mu1, S1, np.eye(4), S2)
    assert np.allclose(mu, mu1) and np.allclose(S, S1 + S2)
    mu2 = group_exp(G, random_coords("SE3", rng, 1)[0])
    mu, S = propagate(G, mu1, np.zeros((6, 6)), mu2, np.zeros((6, 6)))
    assert np.allclose(mu, mu1 @ mu2) and np.allclose(S, 0.0)
    with pytest.raises(ValueError):
        propagate(make_group("AFF1"), np.eye(2), np.eye(2), np.eye(2), np.eye(2))


def test_propagate_associativity():
    G = make_group("SE3")
    s = 0.05
    mus = [group_exp(G, [0.3, -0.2, 0.1, 1, 0, 0]), group_exp(G, [-0.5, 0.4, 0.2, 0, 1, 0]), group_exp(G, [0.1, 0.7, -0.3, 0, 0, 1])]
    S = s**2 * np.eye(6)
    m12, S12 = propagate(G, mus[0], S, mus[1], S)
    m123a, Sa = propagate(G, m12, S12, mus[2], S)
    m23, S23 = propagate(G, mus[1], S, mus[2], S)
    m123b, Sb = propagate(G, mus[0], S, m23, S23)
    assert np.allclose(m123a, m123b, atol=1e-12)
    assert np.max(np.abs(Sa - Sb)) <= 10 * s**3


def test_weighted_cost_symmetric_is_critical():
    G = make_group("SE3")
    mu = group_exp(G, [0.5, 0.1, -0.3, 1.0, 2.0, 3.0])
    d = symmetrize(cloud("SE3", 0.2, 200, 7), mu)
    assert np.linalg.norm(weighted_cost_gradient(d, mu)) < 1e-8
    assert np.isclose(weighted_cost(d, mu), 6.0, rtol=1e-10)


def test_weighted_cost_dirac_is_singular():
    G = make_group("SE3")
    with pytest.raises(SingularCovariance):
        weighted_cost(make_empirical(G, np.eye(4)), np.eye(4))


def test_weighted_cost_gradient_is_small_at_group_mean():
    # non-symmetric cloud: the gradient is only approximately zero
    d = cloud("SE3", 0.05, 400, 8)
    mu = group_theoretic_mean(d).mean
    grad = weighted_cost_gradient(d, mu)
    Sigma = group_covariance(d, mu).matrix
    # measured in covariance units the residual is third order in the spread
    assert np.linalg.norm(Sigma @ grad) < 10 * 0.05**3


def test_multi_start_tied_variance():
    G = make_group("SO3")
    d = cloud("SO3", 0.2, 50, 9)
    reports, _ = multi_start_group_means(d, n_random=2, seed=3, ip=frobenius_inner_product(G))
    variances = [group_covariance(d, r.mean).variance for r in reports]
    assert np.ptp(variances) < 1e-8
