"""Covariances on a matrix Lie group and their propagation through products.

``vec`` stacks matrix columns (column-major), so the extrinsic Euclidean
covariance of ``m x m`` samples is ``m^2 x m^2`` with entry ``(i + m j)``
referring to matrix element ``(i, j)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import EmpiricalDistribution, weighted_sum
from .errors import SingularCovariance
from .lie_core import Ad_matrix, GroupSpec, group_log, is_unimodular
from .means import cost_L, cost_L_gradient, euclidean_mean
from .metric import DistanceKind, InnerProduct, distance, riemannian_log

KINDS = ("euclidean", "group", "karcher")


@dataclass
class CovReport:
    kind: str
    matrix: np.ndarray
    variance: float
    anchor: np.ndarray


def _outer_mean(weights: np.ndarray, x: np.ndarray) -> np.ndarray:
    C = weighted_sum(weights, np.einsum("ni,nj->nij", x, x))
    return 0.5 * (C + C.T)


def _report(kind: str, C: np.ndarray, anchor: np.ndarray, variance: float | None = None) -> CovReport:
    var = float(np.trace(C)) if variance is None else float(variance)
    return CovReport(kind, C, var, np.asarray(anchor, dtype=float))


def vec(A: np.ndarray) -> np.ndarray:
    """Column-major stacking of the trailing two axes."""
    A = np.asarray(A)
    return np.swapaxes(A, -1, -2).reshape(A.shape[:-2] + (-1,))


def euclidean_covariance(d: EmpiricalDistribution) -> CovReport:
    mu_E = euclidean_mean(d)
    C = _outer_mean(d.weights, vec(d.samples - mu_E))
    return _report("euclidean", C, mu_E)


def frechet_variance(d: EmpiricalDistribution, kind: DistanceKind, mu) -> float:
    dist = distance(kind, np.asarray(mu, dtype=float)[None], d.samples, d.group)
    return float(weighted_sum(d.weights, dist**2))


def group_covariance(d: EmpiricalDistribution, mu) -> CovReport:
    """``sum_i w_i x_i x_i^T`` with ``x_i = log(mu^-1 g_i)``."""
    mu = np.asarray(mu, dtype=float)
    x = group_log(d.group, np.linalg.solve(mu, d.samples))
    return _report("group", _outer_mean(d.weights, x), mu)


def karcher_covariance(d: EmpiricalDistribution, ip: InnerProduct, mu, steps: int = 100) -> CovReport:
    """Same outer-product form with the Riemannian log (body velocity of the geodesic)."""
    mu = np.asarray(mu, dtype=float)
    V = riemannian_log(ip, mu, d.samples, steps=steps)
    return _report("karcher", _outer_mean(d.weights, V), mu)


def propagate(group: GroupSpec, mu1, Sigma1, mu2, Sigma2) -> tuple[np.ndarray, np.ndarray]:
    """First-order mean and covariance of the product of independent variables.

    ``mu12 = mu1 mu2`` and ``Sigma12 = Ad_{mu2}^-1 Sigma1 Ad_{mu2}^-T + Sigma2``.
    Only meaningful on unimodular groups; others are refused.
    """
    if not is_unimodular(group):
        raise ValueError(f"{group.name} is not unimodular; covariance propagation assumes a unimodular group")
    mu1 = np.asarray(mu1, dtype=float)
    mu2 = np.asarray(mu2, dtype=float)
    A = Ad_matrix(group, np.linalg.inv(mu2))
    S = A @ np.asarray(Sigma1, dtype=float) @ A.T + np.asarray(Sigma2, dtype=float)
    return mu1 @ mu2, 0.5 * (S + S.T)


def _precision_metric(d: EmpiricalDistribution, mu) -> InnerProduct:
    Sigma = group_covariance(d, mu).matrix
    lam = np.linalg.eigvalsh(Sigma)
    if lam[0] <= 1e-12:
        raise SingularCovariance(f"group covariance at the anchor is singular (smallest eigenvalue {lam[0]:.3e})")
    P = np.linalg.inv(Sigma)
    return InnerProduct(d.group, 0.5 * (P + P.T))


def weighted_cost(d: EmpiricalDistribution, mu, h=None) -> float:
    """``cost_L`` with ``W = Sigma^-1``, ``Sigma`` the group covariance anchored at ``mu``;
    evaluated at ``h`` (default ``mu``)."""
    ip = _precision_metric(d, mu)
    return cost_L(d, ip, mu if h is None else h)


def weighted_cost_gradient(d: EmpiricalDistribution, mu, h=None) -> np.ndarray:
    ip = _precision_metric(d, mu)
    return cost_L_gradient(d, ip, mu if h is None else h)
