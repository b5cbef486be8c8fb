"""Command-line interface.

Exit codes: 0 success, 1 bad input or usage, 2 an iterative solver did not
converge, 3 a sample fell outside the principal-log chart (the offending
sample indices are listed in the JSON error payload).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import jsonio
from .covariance import propagate, weighted_cost_gradient
from .distributions import sample_concentrated, sample_uniform_haar, weighted_sum
from .errors import DomainError, LieMeansError, NearZeroSum, NonConvergence, SingularCovariance, SingularInput
from .groups import make_group
from .lie_core import group_log, is_unimodular
from .means import (
    SolverConfig,
    cost_L,
    cost_L_gradient,
    euclidean_mean,
    frechet_mean,
    group_theoretic_mean,
    karcher_mean,
    log_euclidean_mean,
    projected_mean,
    quaternion_projected_mean,
)
from .metric import DistanceKind, InnerProduct, distance, frobenius_inner_product, geodesic_flow, is_ad_invariant

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGENCE, EXIT_DOMAIN = 0, 1, 2, 3

METHODS = ("euclidean", "projected", "log-euclidean", "group", "frechet", "karcher", "quat")
DISTANCES = ("chordal", "lognorm", "geodesic", "body-se", "product-se3")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _add_solver_flags(p):
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.add_argument("--max-iter", type=_positive_int, default=200)
    p.add_argument("--init", choices=("projected", "identity", "first-sample"), default="projected")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="liemeans", description="Means and covariances on matrix Lie groups.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mean", help="estimate a mean of a samples file")
    p.add_argument("--group", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=METHODS, default="group")
    p.add_argument("--distance", choices=DISTANCES, default="chordal")
    p.add_argument("--metric")
    p.add_argument("--mass", type=_positive_float, default=1.0, help="translation weight of the body-se distance")
    p.add_argument("--center", help="element file for the log-Euclidean centre (default: identity)")
    p.add_argument("--no-hemisphere-align", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write JSON here instead of stdout")
    _add_solver_flags(p)

    p = sub.add_parser("check", help="verify a structural property or theorem")
    p.add_argument("what", choices=("ad-invariance", "unimodular", "critical-point", "symmetric-mean"))
    p.add_argument("--group", required=True)
    p.add_argument("--metric")
    p.add_argument("--input")
    p.add_argument("--center", help="element file; default is the group-theoretic mean of the input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write JSON here instead of stdout")
    _add_solver_flags(p)

    p = sub.add_parser("geodesic", help="integrate a left-invariant geodesic")
    p.add_argument("--group", required=True)
    p.add_argument("--metric", required=True)
    p.add_argument("--xi", required=True, help="comma-separated body velocity")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--steps", type=_positive_int, default=100)
    p.add_argument("--start", help="element file for the initial point (default: identity)")
    p.add_argument("--output", help="write JSON here instead of stdout")

    p = sub.add_parser("distance", help="distance between two elements")
    p.add_argument("--group", required=True)
    p.add_argument("--kind", "--distance", dest="kind", choices=DISTANCES, required=True)
    p.add_argument("--g", required=True, help="element file")
    p.add_argument("--h", required=True, help="element file")
    p.add_argument("--metric")
    p.add_argument("--mass", type=_positive_float, default=1.0)
    p.add_argument("--output", help="write JSON here instead of stdout")

    p = sub.add_parser("propagate", help="mean and covariance of a product of independent variables")
    p.add_argument("--group", required=True)
    p.add_argument("--input", required=True, help='JSON with "mu1", "Sigma1", "mu2", "Sigma2"')
    p.add_argument("--output", help="write JSON here instead of stdout")

    p = sub.add_parser("sample", help="draw a samples file")
    p.add_argument("--group", required=True)
    p.add_argument("--kind", choices=("concentrated", "haar"), default="concentrated")
    p.add_argument("-n", "--n", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma", type=_positive_float, default=0.1, help="isotropic standard deviation")
    p.add_argument("--cov", help="JSON file holding an n x n covariance (overrides --sigma)")
    p.add_argument("--center", help="element file (default: identity)")
    p.add_argument("--symmetric", action="store_true", help="add the reflection of every draw")
    p.add_argument("--output", help="write JSON here instead of stdout")
    return parser


# --------------------------------------------------------------------------- helpers

def _group(args):
    try:
        return make_group(args.group)
    except KeyError as exc:
        raise jsonio.InputError(str(exc.args[0])) from None


def _element(path, group, default_identity=True):
    if path is None:
        return group.identity if default_identity else None
    mat, _ = jsonio.element_from_json(jsonio.load_file(path), group, path)
    if not np.all(group.contains(mat)):
        raise jsonio.InputError(f"{path}: matrix is not an element of {group.name}")
    return mat


def _metric(args, group, required=True) -> InnerProduct | None:
    if args.metric is None:
        if required:
            raise jsonio.InputError("--metric is required for this command")
        return None
    return jsonio.metric_from_json(jsonio.load_file(args.metric), args.metric, group)


def _samples(args, group):
    if args.input is None:
        raise jsonio.InputError("--input is required for this command")
    return jsonio.samples_from_json(jsonio.load_file(args.input), args.input, group)


def _config(args) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iter=args.max_iter, init=args.init)


def _distance_kind(args, group) -> DistanceKind:
    kind = args.kind if hasattr(args, "kind") else args.distance
    ip = _metric(args, group, required=False)
    if kind in ("lognorm", "geodesic") and ip is None:
        ip = frobenius_inner_product(group)
    return DistanceKind(kind, ip if kind in ("lognorm", "geodesic") else None, args.mass)


def _threads() -> int:
    # computations are vectorized in one process; the cap is validated and echoed only
    raw = os.environ.get("LIEMEANS_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise jsonio.InputError(f"LIEMEANS_THREADS must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise jsonio.InputError(f"LIEMEANS_THREADS must be a positive integer, got {raw!r}")
    return value


# --------------------------------------------------------------------------- commands

def cmd_mean(args) -> tuple[dict, int]:
    group = _group(args)
    d = _samples(args, group)
    cfg = _config(args)
    method = args.method
    if method == "euclidean":
        return {"method": "euclidean", "mean": euclidean_mean(d)}, EXIT_OK
    if method == "projected":
        rep = projected_mean(d)
    elif method == "log-euclidean":
        rep = log_euclidean_mean(d, _element(args.center, group))
    elif method == "group":
        rep = group_theoretic_mean(d, cfg)
    elif method == "frechet":
        rep = frechet_mean(d, _distance_kind(args, group), cfg)
    elif method == "karcher":
        rep = karcher_mean(d, _metric(args, group), cfg)
    else:
        rep = quaternion_projected_mean(d, align=not args.no_hemisphere_align)
    return jsonio.mean_report_to_json(rep), EXIT_OK if rep.converged else EXIT_NONCONVERGENCE


def _anchor(args, d):
    if args.center is not None:
        return _element(args.center, d.group), None
    rep = group_theoretic_mean(d, _config(args))
    return rep.mean, rep


def cmd_check(args) -> tuple[dict, int]:
    group = _group(args)
    if args.what == "unimodular":
        traces = np.einsum("ijj->i", group.structure_constants)
        return {"check": "unimodular", "group": group.name, "unimodular": is_unimodular(group), "ad_traces": traces}, EXIT_OK
    if args.what == "ad-invariance":
        ip = _metric(args, group)
        rep = is_ad_invariant(ip, seed=args.seed)
        return {
            "check": "ad-invariance",
            "group": group.name,
            "invariant": rep.invariant,
            "failing_condition": rep.failing_condition,
            "residuals": rep.residuals,
        }, EXIT_OK
    d = _samples(args, group)
    mu, mean_rep = _anchor(args, d)
    r = weighted_sum(d.weights, group_log(group, np.linalg.solve(mu, d.samples)))
    out = {"check": args.what, "group": group.name, "point": mu, "mean_residual": float(np.linalg.norm(r))}
    if mean_rep is not None:
        out["mean_converged"] = mean_rep.converged
    if args.what == "critical-point":
        ip = _metric(args, group)
        grad = cost_L_gradient(d, ip, mu)
        out.update(
            gradient=grad,
            gradient_norm=float(np.linalg.norm(grad)),
            cost=cost_L(d, ip, mu),
            is_critical_point=bool(np.linalg.norm(grad) < 1e-8),
        )
        return out, EXIT_OK
    # symmetric-mean
    grad = weighted_cost_gradient(d, mu)
    out.update(
        unimodular=is_unimodular(group),
        weighted_gradient=grad,
        weighted_gradient_norm=float(np.linalg.norm(grad)),
        is_group_mean=bool(out["mean_residual"] < 1e-12),
        is_weighted_critical_point=bool(np.linalg.norm(grad) < 1e-8),
    )
    return out, EXIT_OK


def cmd_geodesic(args) -> tuple[dict, int]:
    group = _group(args)
    ip = _metric(args, group)
    try:
        xi = np.array([float(v) for v in args.xi.split(",")])
    except ValueError:
        raise jsonio.InputError(f"--xi: expected comma-separated numbers, got {args.xi!r}") from None
    if xi.shape != (group.n,):
        raise jsonio.InputError(f"--xi: {group.name} needs {group.n} components, got {xi.size}")
    g0 = _element(args.start, group)
    tr = geodesic_flow(ip, g0, xi, args.t, args.steps)
    e = tr.energy
    drift = float(np.max(np.abs(e - e[0])) / e[0]) if e[0] > 0 else 0.0
    return {
        "group": group.name,
        "trajectory": [{"t": float(t), "matrix": g, "xi": x} for t, g, x in zip(tr.t, tr.gamma, tr.xi)],
        "endpoint": tr.gamma[-1],
        "energy_relative_drift": drift,
    }, EXIT_OK


def cmd_distance(args) -> tuple[dict, int]:
    group = _group(args)
    kind = _distance_kind(args, group)
    g, h = _element(args.g, group), _element(args.h, group)
    return {"kind": kind.tag, "distance": float(distance(kind, g, h, group))}, EXIT_OK


def cmd_propagate(args) -> tuple[dict, int]:
    group = _group(args)
    doc = jsonio.load_file(args.input)
    if not isinstance(doc, dict):
        raise jsonio.InputError(f"{args.input}: expected a JSON object")
    parts = {}
    for key in ("mu1", "mu2"):
        if key not in doc:
            raise jsonio.InputError(f"{args.input}: missing field {key!r}")
        parts[key], _ = jsonio.element_from_json(doc[key], group, f"{args.input}.{key}")
    for key in ("Sigma1", "Sigma2"):
        if key not in doc:
            raise jsonio.InputError(f"{args.input}: missing field {key!r}")
        parts[key] = jsonio._matrix(doc[key], f"{args.input}.{key}", (group.n, group.n))
    try:
        mu, S = propagate(group, parts["mu1"], parts["Sigma1"], parts["mu2"], parts["Sigma2"])
    except ValueError as exc:
        raise jsonio.InputError(str(exc)) from None
    return {"group": group.name, "mean": mu, "covariance": S}, EXIT_OK


def cmd_sample(args) -> tuple[dict, int]:
    group = _group(args)
    if args.kind == "haar":
        d = sample_uniform_haar(group, args.n, args.seed)
    else:
        if args.cov is not None:
            cov = jsonio._matrix(jsonio.load_file(args.cov), args.cov, (group.n, group.n))
        else:
            cov = args.sigma**2 * np.eye(group.n)
        d = sample_concentrated(group, _element(args.center, group), cov, args.n, args.seed, args.symmetric)
    return jsonio.samples_to_json(d), EXIT_OK


COMMANDS = {
    "mean": cmd_mean,
    "check": cmd_check,
    "geodesic": cmd_geodesic,
    "distance": cmd_distance,
    "propagate": cmd_propagate,
    "sample": cmd_sample,
}


def _error(kind: str, message: str, **extra) -> dict:
    return {"error": kind, "message": message, **extra}


def run(argv=None) -> tuple[dict, int, str | None]:
    """Parse ``argv`` and execute; returns (payload, exit code, output path)."""
    args = build_parser().parse_args(argv)
    try:
        _threads()
        payload, code = COMMANDS[args.command](args)
    except jsonio.InputError as exc:
        return _error("InputError", str(exc)), EXIT_INPUT, args.output
    except DomainError as exc:
        return _error("DomainError", str(exc), indices=exc.indices), EXIT_DOMAIN, args.output
    except NonConvergence as exc:
        return _error("NonConvergence", str(exc), residual=exc.residual), EXIT_NONCONVERGENCE, args.output
    except (SingularInput, NearZeroSum, SingularCovariance) as exc:
        return _error(type(exc).__name__, str(exc)), EXIT_INPUT, args.output
    except (LieMeansError, ValueError) as exc:
        return _error(type(exc).__name__, str(exc)), EXIT_INPUT, args.output
    return payload, code, args.output


def main(argv=None) -> int:
    payload, code, output = run(argv)
    text = jsonio.dumps(payload)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if "error" in payload:
        sys.stderr.write(f"liemeans: {payload['error']}: {payload['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
