import math

import numpy as np
import pytest

from liemeans import make_group

ROTATION_COORDS = {"SO2": 1, "SO3": 3, "SE2": 1, "SE3": 3, "AFF1": 0}


def random_coords(name, rng, size, max_angle=math.pi - 1e-3, trans_scale=2.0):
    """Algebra coordinates with the rotational part strictly inside the principal ball."""
    G = make_group(name)
    k = ROTATION_COORDS[name]
    x = rng.normal(size=(size, G.n))
    if k:
        rot = x[:, :k]
        nrm = np.linalg.norm(rot, axis=1, keepdims=True)
        radius = max_angle * rng.uniform(size=(size, 1)) ** (1.0 / k)
        x[:, :k] = rot / nrm * radius
    x[:, k:] *= trans_scale
    return x


def series_exp(X, terms=30):
    """Truncated power series of the matrix exponential."""
    out = np.eye(X.shape[-1])
    term = np.eye(X.shape[-1])
    for i in range(1, terms):
        term = term @ X / i
        out = out + term
    return out


def rotation_angle(R):
    """Angle of a rotation, accurate near zero (arccos of the trace is not)."""
    w = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return float(np.arctan2(np.linalg.norm(w), (np.trace(R) - 1.0) / 2.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
