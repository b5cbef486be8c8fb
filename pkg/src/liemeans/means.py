"""The five mean families on a matrix Lie group and their cost functions.

* Euclidean mean: weighted matrix average, usually off the group.
* Projected mean: the Euclidean mean pulled back to SO(d) / SE(d).
* Log-Euclidean mean centred at h: ``h exp(E[log(h^-1 g)])``.
* Group-theoretic mean: a solution of ``E[log(mu^-1 g)] = 0``, found by
  the fixed-point iteration ``mu <- mu exp(E[log(mu^-1 g)])``.
* Frechet / Karcher means: minimizers of the expected squared distance.

Solvers return a :class:`MeanReport`; running out of iterations gives
``converged=False`` together with the best iterate rather than an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import EmpiricalDistribution, quaternions_of, sample_uniform_haar, weighted_sum
from .errors import DomainError, NearZeroSum
from .groups import PoseParts, make_group, project_special_orthogonal, quat_to_so3, se_compose
from .lie_core import (
    GroupSpec,
    Ad_matrix,
    group_exp,
    group_log,
    jacobian_log_coords,
    require_same_group,
)
from .metric import DistanceKind, InnerProduct, distance, riemannian_exp, riemannian_log

INITS = ("projected", "identity", "first-sample", "given")


@dataclass(frozen=True)
class SolverConfig:
    """``init`` is one of ``projected``, ``identity``, ``first-sample`` or ``given``
    (the latter uses ``init_element``)."""

    tol: float = 1e-10
    max_iter: int = 200
    init: str = "projected"
    init_element: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if self.init == "given" and self.init_element is None:
            raise ValueError("init='given' needs init_element")


@dataclass
class MeanReport:
    mean: np.ndarray
    method: str
    iterations: int = 0
    residual: float = 0.0
    cost: Optional[float] = None
    converged: bool = True
    diagnostics: dict = field(default_factory=dict)


def _logs_at(d: EmpiricalDistribution, mu: np.ndarray) -> np.ndarray:
    """``log(mu^-1 g_i)`` for all samples; DomainError lists the failing samples."""
    return group_log(d.group, np.linalg.solve(mu, d.samples))


def _is_special_orthogonal(group: GroupSpec) -> bool:
    return group.membership is not None and group.name.split("/")[0] in ("SO2", "SO3")


def _is_special_euclidean(group: GroupSpec) -> bool:
    return group.membership is not None and group.name.split("/")[0] in ("SE2", "SE3")


# --------------------------------------------------------------------------- closed-form means

def euclidean_mean(d: EmpiricalDistribution) -> np.ndarray:
    return weighted_sum(d.weights, d.samples)


def projected_mean(d: EmpiricalDistribution) -> MeanReport:
    """Closest group element to the Euclidean mean (SO(d)), or rotation block
    projected and translation kept (SE(d))."""
    mu_E = euclidean_mean(d)
    if _is_special_orthogonal(d.group):
        mean = project_special_orthogonal(mu_E)
    elif _is_special_euclidean(d.group):
        dim = d.group.m - 1
        mean = se_compose(PoseParts(project_special_orthogonal(mu_E[:dim, :dim]), mu_E[:dim, dim]))
    else:
        raise ValueError(f"projected mean is defined for SO(d) and SE(d), not {d.group.name}")
    return MeanReport(mean, "projected", residual=float(np.linalg.norm(mean - mu_E)))


def log_euclidean_mean(d: EmpiricalDistribution, h) -> MeanReport:
    h = np.asarray(h, dtype=float)
    r = weighted_sum(d.weights, _logs_at(d, h))
    return MeanReport(h @ group_exp(d.group, r), "log-euclidean", residual=0.0, diagnostics={"center": h})


def quaternion_projected_mean(d: EmpiricalDistribution, align: bool = True) -> MeanReport:
    """Normalized weighted quaternion average, mapped back to SO(3).

    With ``align`` every quaternion is flipped into the hemisphere of the first
    sample before averaging; without it the stored representatives are used
    as-is, which exposes the sign ambiguity of the double cover.
    """
    q = np.array(quaternions_of(d), dtype=float)
    if align:
        flip = q @ q[0] < 0.0
        q[flip] *= -1.0
    s = weighted_sum(d.weights, q)
    norm = float(np.linalg.norm(s))
    if norm < 1e-8:
        raise NearZeroSum(f"weighted quaternion sum has norm {norm:.3e}; the average is undefined")
    q_mean = s / norm
    return MeanReport(quat_to_so3(q_mean), "quaternion", residual=0.0, diagnostics={"quaternion": q_mean, "sum_norm": norm})


# --------------------------------------------------------------------------- group-theoretic mean

def initial_point(d: EmpiricalDistribution, cfg: SolverConfig) -> np.ndarray:
    if cfg.init == "identity":
        return d.group.identity
    if cfg.init == "first-sample":
        return d.samples[0].copy()
    if cfg.init == "given":
        return np.asarray(cfg.init_element, dtype=float)
    if _is_special_orthogonal(d.group) or _is_special_euclidean(d.group):
        return projected_mean(d).mean
    return d.samples[0].copy()


def group_theoretic_mean(d: EmpiricalDistribution, cfg: SolverConfig = SolverConfig()) -> MeanReport:
    """Fixed point of ``mu <- mu exp(sum_i w_i log(mu^-1 g_i))``.

    ``residual`` is the norm of the left-form residual ``sum_i w_i log(mu^-1 g_i)``
    at the returned mean; ``diagnostics['right_residual']`` is the norm of the
    right form ``sum_i w_i log(g_i mu^-1)`` which equals ``Ad_mu`` applied to it.
    """
    G = d.group
    mu = initial_point(d, cfg)
    r = weighted_sum(d.weights, _logs_at(d, mu))
    rn = float(np.linalg.norm(r))
    best = (rn, mu, r)
    it = 0
    while rn >= cfg.tol and it < cfg.max_iter:
        mu = mu @ group_exp(G, r)
        it += 1
        r = weighted_sum(d.weights, _logs_at(d, mu))
        rn = float(np.linalg.norm(r))
        if rn < best[0]:
            best = (rn, mu, r)
    rn, mu, r = best
    right = weighted_sum(d.weights, group_log(G, d.samples @ np.linalg.inv(mu)))
    Ad_r = Ad_matrix(G, mu) @ r
    return MeanReport(
        mu,
        "group",
        iterations=it,
        residual=rn,
        converged=rn < cfg.tol,
        diagnostics={
            "residual_vector": r,
            "right_residual": float(np.linalg.norm(right)),
            "right_form_gap": float(np.linalg.norm(right - Ad_r)),
        },
    )


# --------------------------------------------------------------------------- Frechet / Karcher

def frechet_cost(d: EmpiricalDistribution, kind: DistanceKind, h) -> float:
    dist = distance(kind, np.asarray(h, dtype=float)[None], d.samples, d.group)
    return float(weighted_sum(d.weights, dist**2))


def _chart_gradient(d, kind, h, step):
    G = d.group
    n = G.n
    E = np.eye(n) * step
    plus = h @ group_exp(G, E)
    minus = h @ group_exp(G, -E)
    grad = np.empty(n)
    for k in range(n):
        grad[k] = (frechet_cost(d, kind, plus[k]) - frechet_cost(d, kind, minus[k])) / (2 * step)
    return grad


def frechet_mean(
    d: EmpiricalDistribution,
    kind: DistanceKind,
    cfg: SolverConfig = SolverConfig(),
    fd_step: float = 1e-6,
) -> MeanReport:
    """Local minimizer of ``C(h) = sum_i w_i D(h, g_i)^2``.

    Steepest descent in the exponential chart at the current iterate: the
    gradient of ``x -> C(h exp(x))`` at 0 is taken by central differences, the
    trial step length comes from a second difference along the gradient, and
    an Armijo backtracking search accepts or shrinks it.  Converges when the
    accepted update is shorter than ``tol``.
    """
    G = d.group
    h = initial_point(d, cfg)
    cost = frechet_cost(d, kind, h)
    it = 0
    converged = False
    grad_norm = float("nan")
    last_step = float("inf")
    while it < cfg.max_iter:
        grad = _chart_gradient(d, kind, h, fd_step)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm == 0.0:
            converged = True
            break
        u = grad / grad_norm
        # curvature along -u gives the step of an exact line search on a quadratic model
        eps = 1e-4
        c_plus = frechet_cost(d, kind, h @ group_exp(G, eps * u))
        c_minus = frechet_cost(d, kind, h @ group_exp(G, -eps * u))
        curv = (c_plus - 2 * cost + c_minus) / eps**2
        alpha = grad_norm / curv if curv > 0 else 1.0
        accepted = False
        for _ in range(60):
            cand = h @ group_exp(G, -alpha * u)
            c_new = frechet_cost(d, kind, cand)
            if c_new <= cost - 1e-4 * alpha * grad_norm:
                accepted = True
                break
            alpha *= 0.5
        it += 1
        if not accepted:
            # no decrease is measurable any more: the gradient is at its noise floor
            converged = grad_norm < 1e-6 * max(1.0, cost)
            break
        h, cost = cand, c_new
        last_step = alpha
        if last_step < cfg.tol:
            converged = True
            break
    return MeanReport(
        h,
        "frechet",
        iterations=it,
        residual=last_step if np.isfinite(last_step) else grad_norm,
        cost=cost,
        converged=converged,
        diagnostics={"distance": kind.tag, "gradient_norm": grad_norm},
    )


def karcher_mean(d: EmpiricalDistribution, ip: InnerProduct, cfg: SolverConfig = SolverConfig(), steps: int = 100) -> MeanReport:
    """Riemannian centre of mass: ``mu <- Exp_mu(sum_i w_i Log_mu(g_i))`` for the
    left-invariant metric ``ip`` (exp/log by geodesic integration and shooting)."""
    require_same_group(ip.group, d.group)
    mu = initial_point(d, cfg)
    it = 0
    while True:
        V = riemannian_log(ip, mu, d.samples, steps=steps)
        r = weighted_sum(d.weights, V)
        rn = float(np.linalg.norm(r))
        if rn < cfg.tol or it >= cfg.max_iter:
            break
        mu = riemannian_exp(ip, mu, r, steps=steps)
        it += 1
    cost = float(weighted_sum(d.weights, ip.norm(V) ** 2))
    return MeanReport(mu, "karcher", iterations=it, residual=rn, cost=cost, converged=rn < cfg.tol)


# --------------------------------------------------------------------------- cost L and its gradient

def cost_L(d: EmpiricalDistribution, ip: InnerProduct, h) -> float:
    """``int ||log(g^-1 h)||_W^2 f(g) dg`` for the (unnormalized) empirical density."""
    require_same_group(ip.group, d.group)
    x = group_log(d.group, np.linalg.solve(d.samples, np.asarray(h, dtype=float)))
    return d.mass * float(weighted_sum(d.weights, ip.norm(x) ** 2))


def cost_L_gradient(d: EmpiricalDistribution, ip: InnerProduct, h) -> np.ndarray:
    """Derivatives of ``t -> cost_L(h exp(t E_l))`` at 0:
    ``sum_i w_i 2 log(g_i^-1 h)^T W J_log(g_i^-1 h)``."""
    require_same_group(ip.group, d.group)
    x = group_log(d.group, np.linalg.solve(d.samples, np.asarray(h, dtype=float)))
    J = jacobian_log_coords(d.group, x)
    terms = 2.0 * np.einsum("ni,ij,njk->nk", x, ip.W, J)
    return d.mass * weighted_sum(d.weights, terms)


# --------------------------------------------------------------------------- multi-start

def multi_start_group_means(
    d: EmpiricalDistribution,
    cfg: SolverConfig = SolverConfig(),
    n_random: int = 4,
    seed: int = 0,
    ip: Optional[InnerProduct] = None,
) -> tuple[list[MeanReport], Optional[MeanReport]]:
    """Group-theoretic means from identity, projected and ``n_random`` Haar starts.

    Starts whose chart misses a sample are skipped.  Returns all converged
    reports and, when ``ip`` is given, the one minimizing ``cost_L``.
    """
    starts = [d.group.identity]
    try:
        starts.append(initial_point(d, SolverConfig(init="projected")))
    except (ValueError, np.linalg.LinAlgError):
        pass
    base = d.group.name.split("/")[0]
    if n_random > 0 and base in ("SO2", "SO3"):
        starts.extend(sample_uniform_haar(make_group(base), n_random, seed).samples)
    reports = []
    for s in starts:
        try:
            rep = group_theoretic_mean(d, SolverConfig(cfg.tol, cfg.max_iter, "given", s))
        except DomainError:
            continue
        if rep.converged:
            if ip is not None:
                try:
                    rep.cost = cost_L(d, ip, rep.mean)
                except DomainError:
                    rep.cost = float("inf")
            reports.append(rep)
    best = None
    if ip is not None and reports:
        best = min(reports, key=lambda r: r.cost)
    return reports, best

