import numpy as np
import pytest

from conftest import random_coords, rotation_angle
from liemeans import (
    BodySE,
    Chordal,
    InnerProduct,
    LogNorm,
    NonConvergence,
    ProductSE3,
    distance,
    frobenius_inner_product,
    geodesic_distance,
    geodesic_flow,
    group_exp,
    group_log,
    inner,
    is_ad_invariant,
    make_group,
    riemannian_exp,
    riemannian_log,
    weighted_trace_inner_product,
)
from liemeans.metric import DistanceKind, Geodesic


def random_spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + 0.3 * np.eye(n)


def test_inner_product_basics(rng):
    G = make_group("SO3")
    ip = frobenius_inner_product(G)
    assert np.allclose(ip.W, 2 * np.eye(3))
    x, y = rng.normal(size=(2, 3))
    assert inner(ip, x, x) > 0
    assert np.isclose(inner(ip, x, y), inner(ip, y, x))
    with pytest.raises(ValueError):
        InnerProduct(G, np.diag([1.0, -1.0, 1.0]))


def test_weighted_trace_metric():
    G = make_group("SO3")
    ip = weighted_trace_inner_product(G, np.diag([1.0, 1.0, 2.0]))
    assert np.allclose(ip.W, np.diag([3.0, 3.0, 2.0]))


def test_ad_invariance_examples(rng):
    SO3, SE3 = make_group("SO3"), make_group("SE3")
    assert is_ad_invariant(frobenius_inner_product(SO3)).invariant
    rep = is_ad_invariant(weighted_trace_inner_product(SO3, np.diag([1.0, 1.0, 2.0])))
    assert not rep.invariant and rep.failing_condition
    assert not is_ad_invariant(frobenius_inner_product(SE3)).invariant
    for _ in range(20):
        assert not is_ad_invariant(InnerProduct(SE3, random_spd(rng, 6))).invariant
    assert is_ad_invariant(InnerProduct(make_group("SO2"), [[3.0]])).invariant


def test_ad_invariance_conditions_agree(rng):
    # the report raises if (b), (e), (f) ever split
    verdicts = []
    for k in range(500):
        name = ["SO2", "SO3", "SE2", "SE3", "AFF1"][k % 5]
        G = make_group(name)
        if k % 3 == 0:
            W = rng.uniform(0.5, 3.0) * np.eye(G.n)
        elif k % 3 == 1 and name == "SO3":
            W = weighted_trace_inner_product(G, np.diag(rng.uniform(0.5, 2, 3))).W
        else:
            W = random_spd(rng, G.n)
        verdicts.append(is_ad_invariant(InnerProduct(G, W), seed=k).invariant)
    assert any(verdicts) and not all(verdicts)


def test_distance_examples():
    SO2 = make_group("SO2")
    I = np.eye(2)
    for th in [0.3, 1.0, 2.5, -2.0]:
        R = group_exp(SO2, [th])
        assert np.isclose(distance(Chordal(), I, R), 2 * abs(np.sin(th / 2)) * np.sqrt(2))
        assert np.isclose(distance(LogNorm(InnerProduct(SO2, [[1.0]])), I, R), abs(th))
        assert distance(Chordal(), R, R) == 0.0


@pytest.mark.parametrize(
    "name,kind",
    [("SO3", "chordal"), ("SO3", "lognorm"), ("SE3", "body-se"), ("SE3", "product-se3"), ("SE3", "lognorm")],
)
def test_distance_axioms(name, kind, rng):
    G = make_group(name)
    ip = frobenius_inner_product(G) if kind == "lognorm" else None
    D = DistanceKind(kind, ip, 2.0)
    g = group_exp(G, random_coords(name, rng, 50, max_angle=1.2))
    h = group_exp(G, random_coords(name, rng, 50, max_angle=1.2))
    d = distance(D, g, h, G)
    assert np.all(d > 0)
    assert np.allclose(d, distance(D, h, g, G), atol=1e-12)
    assert np.allclose(distance(D, g, g, G), 0.0, atol=1e-12)


def test_body_se_requires_positive_mass():
    with pytest.raises(ValueError):
        BodySE(0.0)


def test_geodesic_flow_ad_invariant_is_one_parameter_subgroup(rng):
    G = make_group("SO3")
    ip = frobenius_inner_product(G)
    g0 = group_exp(G, rng.normal(size=3))
    xi = rng.normal(size=3)
    tr = geodesic_flow(ip, g0, xi, 1.0, 100)
    assert np.allclose(tr.xi, xi, atol=1e-14)
    expected = g0 @ group_exp(G, tr.t[:, None] * xi)
    assert np.max(np.abs(tr.gamma - expected)) < 1e-9
    assert np.all(G.contains(tr.gamma))


def test_geodesic_energy_conserved(rng):
    for name in ["SO3", "SE3", "SE2", "AFF1"]:
        G = make_group(name)
        ip = InnerProduct(G, random_spd(rng, G.n))
        xi = rng.normal(size=G.n)
        xi /= ip.norm(xi)
        tr = geodesic_flow(ip, np.eye(G.m), xi, 1.0, 100)
        assert np.max(np.abs(tr.energy / tr.energy[0] - 1)) < 1e-8


def test_geodesic_fourth_order():
    G = make_group("SO3")
    ip = InnerProduct(G, np.diag([1.0, 1.0, 4.0]))
    xi = np.array([0.3, 1.0, 0.7])
    ref = geodesic_flow(ip, np.eye(3), xi, 1.0, 10_000, keep=False).gamma[-1]
    errs = [np.max(np.abs(geodesic_flow(ip, np.eye(3), xi, 1.0, s, keep=False).gamma[-1] - ref)) for s in (10, 20, 40)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 3.8)


def test_geodesic_flow_rejects_zero_steps():
    G = make_group("SO3")
    with pytest.raises(ValueError):
        geodesic_flow(frobenius_inner_product(G), np.eye(3), np.zeros(3), 1.0, 0)


def test_riemannian_exp_log_bi_invariant(rng):
    G = make_group("SO3")
    ip = frobenius_inner_product(G)
    g = group_exp(G, rng.normal(size=3))
    V = rng.normal(size=3)
    assert np.allclose(riemannian_exp(ip, g, np.zeros(3)), g)
    assert np.max(np.abs(riemannian_exp(ip, g, V) - g @ group_exp(G, V))) < 1e-9
    h = group_exp(G, rng.normal(size=3))
    assert np.max(np.abs(riemannian_log(ip, g, h) - group_log(G, g.T @ h))) < 1e-9
    assert np.allclose(riemannian_log(ip, g, g), 0.0)


def test_riemannian_log_roundtrip_left_invariant(rng):
    for name in ["SO3", "SE3"]:
        G = make_group(name)
        ip = InnerProduct(G, random_spd(rng, G.n))
        g = group_exp(G, random_coords(name, rng, 1, max_angle=1.0)[0])
        V = rng.normal(size=(5, G.n))
        V *= rng.uniform(0.1, 1.0, size=(5, 1)) / ip.norm(V)[:, None]
        back = riemannian_log(ip, g, riemannian_exp(ip, g, V))
        assert np.max(np.abs(back - V)) < 1e-7


def test_riemannian_log_reports_nonconvergence(rng):
    G = make_group("SO3")
    ip = InnerProduct(G, np.diag([1.0, 1.0, 4.0]))
    h = group_exp(G, [1.5, 0.5, 1.0])
    with pytest.raises(NonConvergence) as info:
        riemannian_log(ip, np.eye(3), h, max_iter=1)
    assert info.value.best is not None and info.value.residual > 0


def test_geodesic_distance_examples(rng):
    SO3 = make_group("SO3")
    ip = frobenius_inner_product(SO3)
    R, Q = group_exp(SO3, rng.normal(size=(2, 3)))
    assert np.isclose(geodesic_distance(ip, R, R), 0.0)
    assert np.isclose(geodesic_distance(ip, R, Q), np.linalg.norm(np.sqrt(2) * group_log(SO3, R.T @ Q)), atol=1e-9)
    SE3 = make_group("SE3")
    F = frobenius_inner_product(SE3)
    g = group_exp(SE3, random_coords("SE3", rng, 10, max_angle=1.5, trans_scale=1.0))
    h = group_exp(SE3, random_coords("SE3", rng, 10, max_angle=1.5, trans_scale=1.0))
    assert np.max(np.abs(geodesic_distance(F, g, h) - distance(ProductSE3(), g, h))) < 1e-6
    assert np.max(np.abs(geodesic_distance(F, g, h) - geodesic_distance(F, h, g))) < 1e-7
    assert np.max(np.abs(distance(Geodesic(F), g, h) - distance(ProductSE3(), g, h))) < 1e-6


def test_left_invariance_and_right_shift(rng):
    SO3 = make_group("SO3")
    W = np.diag([1.0, 1.0, 4.0])
    for ip, bi in [(frobenius_inner_product(SO3), True), (InnerProduct(SO3, W), False)]:
        g, h, k = group_exp(SO3, rng.normal(size=(3, 3)) * 0.5)
        d = geodesic_distance(ip, g, h)
        assert abs(geodesic_distance(ip, k @ g, k @ h) - d) < 1e-7
        if bi:
            assert abs(geodesic_distance(ip, g @ k, h @ k) - d) < 1e-7
    # right-shift witness for the non-invariant metric
    ip = InnerProduct(SO3, W)
    g, h = np.eye(3), group_exp(SO3, [0.8, 0.0, 0.0])
    k = group_exp(SO3, [0.0, np.pi / 2, 0.0])
    assert abs(geodesic_distance(ip, g @ k, h @ k) - geodesic_distance(ip, g, h)) > 1e-3
    assert rotation_angle(np.eye(3)) == 0.0
