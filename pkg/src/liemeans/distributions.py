"""Weighted-sample (empirical) distributions on a matrix Lie group and samplers.

All expectations are fixed-order weighted sums with exactly rounded
accumulation (``math.fsum``), so results do not depend on how the work was
split.  Random streams come from numpy's counter-based Philox generator and a
hand-written Box-Muller transform, which makes a seed reproduce the same
samples on every platform and numpy version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GroupMismatch
from .groups import check_member, quat_to_so3, so3_to_quat
from .lie_core import GroupSpec, group_exp, require_same_group, symmetric_sqrt


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Samples ``(N, m, m)`` with normalized weights ``(N,)``.

    ``mass`` is the total weight the caller supplied (1 when weights are
    defaulted).  Means and covariances only see the normalized weights;
    cost functions integrate against the unnormalized density
    ``mass * sum_i w_i delta(g_i^-1 g)``.

    ``quaternions`` optionally pins the unit-quaternion representative of each
    SO(3) sample (q and -q give the same rotation).
    """

    group: GroupSpec
    samples: np.ndarray
    weights: np.ndarray
    mass: float = 1.0
    quaternions: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.samples.shape[0]


def make_empirical(group: GroupSpec, samples, weights=None, quaternions=None, tol: float = 1e-9) -> EmpiricalDistribution:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 2:
        samples = samples[None]
    if samples.ndim != 3 or samples.shape[0] == 0:
        raise ValueError("need a nonempty stack of matrices with shape (N, m, m)")
    check_member(group, samples, tol)
    N = samples.shape[0]
    if weights is None:
        w = np.full(N, 1.0 / N)
        mass = 1.0
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != N:
            raise ValueError(f"{N} samples but {w.shape[0]} weights")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            bad = np.flatnonzero(~(np.isfinite(w) & (w > 0))).tolist()
            raise ValueError(f"weights must be positive; offending indices {bad[:10]}")
        mass = math.fsum(w)
        w = w / mass
    if quaternions is not None:
        quaternions = np.asarray(quaternions, dtype=float).reshape(N, 4)
        quaternions = quaternions / np.linalg.norm(quaternions, axis=1, keepdims=True)
    samples = samples.copy()
    samples.setflags(write=False)
    w.setflags(write=False)
    return EmpiricalDistribution(group, samples, w, float(mass), quaternions)


def _same_weights(d: EmpiricalDistribution, samples: np.ndarray) -> EmpiricalDistribution:
    samples = np.ascontiguousarray(samples)
    samples.setflags(write=False)
    return EmpiricalDistribution(d.group, samples, d.weights, d.mass, None)


def shift(d: EmpiricalDistribution, h, side: str = "left") -> EmpiricalDistribution:
    """Samples ``g -> h g`` (left) or ``g -> g h`` (right); weights unchanged."""
    h = np.asarray(h, dtype=float)
    if h.shape != (d.group.m, d.group.m):
        raise GroupMismatch(f"shift element has shape {h.shape}, group {d.group.name} needs {(d.group.m, d.group.m)}")
    if side == "left":
        return _same_weights(d, h @ d.samples)
    if side == "right":
        return _same_weights(d, d.samples @ h)
    raise ValueError("side must be 'left' or 'right'")


def invert(d: EmpiricalDistribution) -> EmpiricalDistribution:
    return _same_weights(d, np.linalg.inv(d.samples))


def symmetrize(d: EmpiricalDistribution, mu) -> EmpiricalDistribution:
    """Add the reflection ``mu (mu^-1 g)^-1`` of every sample, halving the weights."""
    mu = np.asarray(mu, dtype=float)
    reflected = mu @ np.linalg.inv(d.samples) @ mu
    samples = np.concatenate([d.samples, reflected])
    half = 0.5 * d.mass * d.weights
    return make_empirical(d.group, samples, np.concatenate([half, half]))


def weighted_sum(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """``sum_i w_i values[i]`` in fixed order with exactly rounded accumulation."""
    values = np.asarray(values, dtype=float)
    terms = (np.asarray(weights, dtype=float).reshape((-1,) + (1,) * (values.ndim - 1)) * values)
    flat = terms.reshape(terms.shape[0], -1)
    out = np.array([math.fsum(col) for col in flat.T])
    return out.reshape(values.shape[1:])


def expect_matrix(d: EmpiricalDistribution, phi: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``sum_i w_i phi(g_i)``; ``phi`` receives the whole ``(N, m, m)`` stack."""
    return weighted_sum(d.weights, phi(d.samples))


# --------------------------------------------------------------------------- samplers

class NormalStream:
    """Standard normals from a Philox counter-based generator via Box-Muller."""

    def __init__(self, seed: int):
        self._bits = np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))

    def uniform(self, size) -> np.ndarray:
        return self._bits.random(size)

    def normal(self, size) -> np.ndarray:
        count = int(np.prod(size))
        half = (count + 1) // 2
        u1 = 1.0 - self._bits.random(half)  # (0, 1]
        u2 = self._bits.random(half)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:count].reshape(size)


def sample_concentrated(group: GroupSpec, mu, Sigma, N: int, seed: int, symmetric: bool = False) -> EmpiricalDistribution:
    """``mu exp(x_k)`` with ``x_k ~ N(0, Sigma)`` in algebra coordinates, uniform weights.

    With ``symmetric=True`` each draw is paired with its reflection ``mu exp(-x_k)``
    so the result is exactly symmetric about ``mu`` (2N samples).
    """
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (group.n, group.n):
        raise ValueError(f"Sigma must be {group.n}x{group.n}")
    scale = max(1.0, float(np.max(np.abs(Sigma))))
    if np.max(np.abs(Sigma - Sigma.T)) > 1e-12 * scale or np.min(np.linalg.eigvalsh(Sigma)) <= 0:
        raise ValueError("Sigma must be symmetric positive definite")
    L = symmetric_sqrt(Sigma)
    x = NormalStream(seed).normal((N, group.n)) @ L.T
    if symmetric:
        x = np.concatenate([x, -x])
    mu = np.asarray(mu, dtype=float)
    return make_empirical(group, mu @ group_exp(group, x))


def sample_uniform_haar(group: GroupSpec, N: int, seed: int) -> EmpiricalDistribution:
    """Haar-uniform samples on SO(2) (uniform angle) or SO(3) (uniform unit quaternion)."""
    stream = NormalStream(seed)
    if group.name == "SO2":
        th = (2.0 * stream.uniform(N) - 1.0) * np.pi
        c, s = np.cos(th), np.sin(th)
        R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
        return make_empirical(group, R)
    if group.name == "SO3":
        q = stream.normal((N, 4))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        return make_empirical(group, quat_to_so3(q), quaternions=q)
    raise ValueError(f"Haar sampling is only provided for SO2 and SO3, not {group.name}")


def _draw_indices(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(weights) - 1)


def product_distribution(d1: EmpiricalDistribution, d2: EmpiricalDistribution, N: int, seed: int) -> EmpiricalDistribution:
    """Monte Carlo stand-in for the convolution: ``N`` products ``g h`` of independent draws."""
    require_same_group(d1.group, d2.group)
    stream = NormalStream(seed)
    i = _draw_indices(d1.weights, stream.uniform(N))
    j = _draw_indices(d2.weights, stream.uniform(N))
    return make_empirical(d1.group, d1.samples[i] @ d2.samples[j])


def quaternions_of(d: EmpiricalDistribution) -> np.ndarray:
    """Stored quaternion representatives, or the non-negative-scalar ones."""
    if d.group.name != "SO3":
        raise GroupMismatch("quaternions are defined for SO3 samples only")
    if d.quaternions is not None:
        return d.quaternions
    return so3_to_quat(d.samples)
