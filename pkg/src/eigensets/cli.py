"""Command-line front end.

Exit status: 0 success, 1 verification failed, 2 bad input (with file
location when available), 3 a size guard was hit.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .construct import example20_system, kernel_lines, simplex_system, symmetric_body_system
from .core import InvalidInputError, ResourceError, simulate
from .reach import (PointCloud, convexity_defect, eigenset_verify, hull_cloud, ivy, omega_limit,
                    prune)
from .render import render_png, render_svg
from .spectral import barabanov_norm, lyapunov_exponent, normalize

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


def _positive(kind):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return value
    return parse


def _vector(text):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _emit(obj, out) -> None:
    text = io.dumps(obj)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _example_lines(system):
    """Kernel directions to draw when the system is the two-matrix example family."""
    if system.m != 2 or system.d != 2:
        return ()
    a1, a2 = system.generators
    p = a1[0, 1]
    if 0 < p < 1:
        try:
            ref = example20_system(p)
        except InvalidInputError:
            return ()
        if all(np.array_equal(a, b) for a, b in zip(ref.generators, (a1, a2))):
            return kernel_lines(p)
    return ()


def cmd_lyapunov(args) -> int:
    system = io.load(args.system, "system")
    br = lyapunov_exponent(system, args.h, args.depth)
    _emit({"lower": br.lower, "upper": br.upper, "estimate": br.mid, "h": br.h, "depth": br.depth},
          args.out)
    return EXIT_OK


def cmd_barabanov(args) -> int:
    system = io.load(args.system, "system")
    shift = 0.0
    if args.normalize:
        system, shift = normalize(system, args.h, args.depth)
    approx = barabanov_norm(system, args.h, args.grid, args.max_iter, args.tol, seed=args.seed)
    data = approx.to_dict()
    data["shift"] = shift
    _emit(data, args.out)
    if args.svg and system.d == 2:
        render_svg(approx, args.svg, title="invariant norm ball")
    if args.png and system.d == 2:
        render_png(approx, args.png, title="invariant norm ball")
    return EXIT_OK


def _seed_cloud(args, d: int) -> PointCloud:
    eps = args.epsilon
    if args.set:
        cloud = io.load(args.set, "cloud")
        eps = eps or cloud.epsilon
        return PointCloud.from_points(cloud.points, eps)
    if args.x0 is None:
        raise InvalidInputError("give a seed with --set or --x0")
    x0 = args.x0
    if x0.shape != (d,):
        raise InvalidInputError(f"--x0 needs {d} coordinates")
    eps = eps or 0.01 * max(2.0, 2 * float(np.linalg.norm(x0)))
    return PointCloud([x0], eps)


def cmd_eigenset(args) -> int:
    system = io.load(args.system, "system")
    shift = 0.0
    if args.normalize:
        system, shift = normalize(system, args.h, args.depth)
    seed = _seed_cloud(args, system.d)
    cloud, info = omega_limit(seed, system, args.h, args.window, args.max_steps, args.tol,
                              return_info=True)
    data = io.cloud_to_dict(cloud)
    data["shift"] = shift
    data["converged"] = info["converged"]
    data["steps"] = info["steps"]
    _emit(data, args.out)
    lines = _example_lines(system)
    if args.svg and system.d == 2:
        render_svg(cloud, args.svg, lines, title="numerical eigenset")
    if args.png and system.d == 2:
        render_png(cloud, args.png, lines, title="numerical eigenset")
    return EXIT_OK


def cmd_verify(args) -> int:
    system = io.load(args.system, "system")
    if not args.set:
        raise InvalidInputError("verify needs --set")
    cloud = io.load(args.set, "cloud")
    if args.epsilon:
        cloud = PointCloud.from_points(cloud.points, args.epsilon)
    vertices = None
    if args.body:
        body = io.load(args.body, "body")
        vertices = body.vertices if body.kind == "polytope" else None
    report = eigenset_verify(cloud, system, args.alpha, args.times, args.h, args.tol, vertices)
    _emit(report.to_dict(), args.out)
    if args.svg and cloud.d == 2:
        render_svg(cloud, args.svg, _example_lines(system))
    return EXIT_OK if report.verdict else EXIT_FAIL


def cmd_construct(args) -> int:
    picked = sum(bool(x) for x in (args.body, args.simplex, args.example20))
    if picked != 1:
        raise InvalidInputError("construct needs exactly one of --body, --simplex, --example20")
    notes: list[str] = []
    if args.example20:
        system = example20_system(args.p)
    elif args.body:
        body = io.load(args.body, "body")
        system = symmetric_body_system(body, args.samples, report=notes)
    else:
        data = io.read_json(args.simplex)
        if "vertices" not in data:
            raise io.ParseError(f"{args.simplex}: missing field 'vertices'")
        system = simplex_system(data["vertices"])
    out = io.system_to_dict(system)
    if notes:
        out["skipped"] = notes
    _emit(out, args.out)
    if args.cloud_out:
        source = body.boundary_points() if args.body else (
            np.asarray(data["vertices"], float) if args.simplex else None)
        if source is not None:
            io.write_json(io.cloud_to_dict(hull_cloud(source, args.epsilon or 0.02)), args.cloud_out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    system = io.load(args.system, "system")
    if not args.schedule:
        raise InvalidInputError("simulate needs --schedule")
    sched = io.load(args.schedule, "schedule")
    if args.x0 is None:
        raise InvalidInputError("simulate needs --x0")
    traj = simulate(system, args.x0, sched, args.dt)
    _emit(io.trajectory_to_dict(traj), args.out)
    return EXIT_OK


def run_demo(out: Path, p: float = 0.5, h: float = 0.01, eps: float = 0.02,
             t_ivy: float = 20.0, tol: float = 0.05) -> dict:
    """Build, extract, verify and draw the eigensets of the two-matrix example."""
    out.mkdir(parents=True, exist_ok=True)
    system = example20_system(p)
    io.write_json(io.system_to_dict(system), out / "system.json")
    stems = {"r1": np.array([p, 1.0]), "r2": np.array([-p, 1.0])}
    ivies = {}
    for name, q in stems.items():
        ivies[name] = ivy(PointCloud([q], eps), system, h, t_ivy)
        io.write_json(io.cloud_to_dict(ivies[name]), out / f"ivy_{name}.json")
    merged_seed = PointCloud(prune(np.vstack([c.points for c in ivies.values()]), eps), eps)
    eig, info = omega_limit(merged_seed, system, h, return_info=True)
    io.write_json(io.cloud_to_dict(eig), out / "eigenset.json")
    report = eigenset_verify(eig, system, 0.0, (0.5, 1.0, 2.0), h, tol)
    io.write_json(report.to_dict(), out / "verify.json")
    defect = convexity_defect(eig)
    diameter = eig.diameter()
    summary = {
        "p": p, "h": h, "epsilon": eps,
        "omega_limit": info,
        "verdict": "pass" if report.verdict else "fail",
        "convexity_defect": defect,
        "diameter": diameter,
        "defect_over_diameter": defect / diameter if diameter > 0 else 0.0,
    }
    io.write_json(summary, out / "summary.json")
    lines = kernel_lines(p)
    render_svg(eig, out / "eigenset.svg", lines, title="numerical eigenset")
    render_png(eig, out / "eigenset.png", lines, title="numerical eigenset")
    for name, c in ivies.items():
        render_png(c, out / f"ivy_{name}.png", lines, title=f"ivy from the stem on {name}")
    return summary


def cmd_demo(args) -> int:
    if not args.out:
        raise InvalidInputError("demo needs --out DIR")
    summary = run_demo(Path(args.out), args.p, args.h, args.epsilon or 0.02, tol=args.tol or 0.05)
    sys.stdout.write(io.dumps(summary))
    return EXIT_OK if summary["verdict"] == "pass" else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eigensets",
                                     description="Eigensets of linear switching systems.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, *, tol=None):
        p.add_argument("--system", help="system JSON file")
        p.add_argument("--out", help="output path (stdout when omitted; a directory for demo)")
        p.add_argument("--h", type=_positive(float), default=0.01, help="time step")
        p.add_argument("--tol", type=_positive(float), default=tol)
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("lyapunov", help="bracket the exponent"))
    p.add_argument("--depth", type=_positive(int), default=8)
    p.set_defaults(func=cmd_lyapunov)

    p = common(sub.add_parser("barabanov", help="approximate the invariant norm"), tol=1e-9)
    p.add_argument("--grid", type=_positive(int), default=None)
    p.add_argument("--depth", type=_positive(int), default=8)
    p.add_argument("--max-iter", type=_positive(int), default=100000)
    p.add_argument("--normalize", action="store_true", help="shift the system to exponent zero first")
    p.add_argument("--svg")
    p.add_argument("--png")
    p.set_defaults(func=cmd_barabanov)

    p = common(sub.add_parser("eigenset", help="extract an eigenset from a seed"))
    p.add_argument("--set", help="seed cloud JSON file")
    p.add_argument("--x0", type=_vector, help="single seed point, comma separated")
    p.add_argument("--epsilon", type=_positive(float))
    p.add_argument("--depth", type=_positive(int), default=8)
    p.add_argument("--window", type=_positive(int), default=20)
    p.add_argument("--max-steps", type=_positive(int), default=50000)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--svg")
    p.add_argument("--png")
    p.set_defaults(func=cmd_eigenset)

    p = common(sub.add_parser("verify", help="check that a cloud is an eigenset"), tol=0.05)
    p.add_argument("--set", help="cloud JSON file")
    p.add_argument("--body", help="polytope body whose vertices get the kernel test")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--times", type=lambda s: [float(t) for t in s.split(",")], default=[0.5, 1.0, 2.0])
    p.add_argument("--epsilon", type=_positive(float))
    p.add_argument("--svg")
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("construct", help="build a system from a body, simplex or example"))
    p.add_argument("--body", help="body JSON file")
    p.add_argument("--simplex", help='JSON file {"vertices": [...]}')
    p.add_argument("--example20", action="store_true", help="the two-matrix example family")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--samples", type=_positive(int), default=32)
    p.add_argument("--epsilon", type=_positive(float))
    p.add_argument("--cloud-out", help="also write a cloud sampling the body")
    p.set_defaults(func=cmd_construct)

    p = common(sub.add_parser("simulate", help="trajectory under a schedule"))
    p.add_argument("--schedule", help="schedule JSON file")
    p.add_argument("--x0", type=_vector)
    p.add_argument("--dt", type=_positive(float), default=0.01)
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("demo", help="run the two-matrix example end to end"))
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--epsilon", type=_positive(float))
    p.add_argument("--svg", action="store_true", help="accepted for symmetry; the demo always draws")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb not in ("construct", "demo") and not args.system:
        parser.error(f"{args.verb} needs --system")
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
