"""Command-line front end.

    convexpolar conjugate   --input f.csv --output fstar.csv [--eta-grid a:b:k|auto] [--fast]
    convexpolar polar       --input body.json|f.csv --cost-matrix C.json|legendre --output env.csv
    convexpolar decompose   --cost-matrix C.json --output report.json [--input body.json|f.csv]
    convexpolar divergence  --input pairs.json --output report.json [--variant sqrt|paper]
    convexpolar ctransform  --input f.csv --cost cost.json --output fc.csv [--eta-grid ...]
    convexpolar demo        --demo NAME [--output DIR] [--svg PATH]

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 assertion failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from convexpolar import ctransform as ct
from convexpolar import divergences as dv
from convexpolar import io
from convexpolar import legendre as lg
from convexpolar import polarity as pl
from convexpolar import transforms as tf
from convexpolar.errors import ConvexPolarError, DimensionMismatch, IdealPoint, MissingGradients, OutOfGrid
from convexpolar.svg import LinePlot

log = logging.getLogger("convexpolar")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_ASSERT = 4

DEMOS = ("self-dual-parabola", "parabola-to-circle", "fig2-envelope")
COMMANDS = ("conjugate", "polar", "decompose", "divergence", "ctransform", "demo")

DEFAULTS = {
    "eta_grid": "auto",
    "variant": "sqrt",
    "fast": False,
    "strict": False,
    "tol": None,
    "samples": None,
}

DEMO_TOL = {"self-dual-parabola": 1e-9, "parabola-to-circle": 1e-9, "fig2-envelope": 1e-9}


class InputError(io.InputError):
    pass


class AssertionFailure(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convexpolar", description="Convex duality through quadratic polarities.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input")
        p.add_argument("--output")
        p.add_argument("--config", help="JSON file of option defaults (flags take precedence)")
        p.add_argument("--tol", type=float)
        p.add_argument("--strict", action="store_true", default=None, help="halve every tolerance")
        p.add_argument("--svg")
        p.add_argument("-v", "--verbose", action="store_true")
        if name in ("conjugate", "ctransform"):
            p.add_argument("--eta-grid", dest="eta_grid", help="min:max:count or auto")
        if name == "conjugate":
            p.add_argument("--fast", action="store_true", default=None)
            p.add_argument("--biconjugate", help="also write F** to this CSV")
            p.add_argument("--fy-gap", dest="fy_gap", help="also write the Fenchel-Young gap matrix to this CSV")
        if name in ("polar", "decompose"):
            p.add_argument("--cost-matrix", dest="cost_matrix", help="JSON file or 'legendre'")
        if name == "divergence":
            p.add_argument("--variant", choices=("sqrt", "paper"))
        if name == "ctransform":
            p.add_argument("--cost", help="QuadraticCost JSON file")
        if name == "demo":
            p.add_argument("--demo", help=f"one of {', '.join(DEMOS)}")
            p.add_argument("--samples", type=int)
    return parser


def resolve_config(args: argparse.Namespace) -> argparse.Namespace:
    """Apply flags > config file > defaults."""
    cfg = vars(args).copy()
    if cfg.get("config"):
        data = io.read_json(cfg["config"])
        if not isinstance(data, dict):
            raise InputError("config file must hold a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if cfg.get(key) is None:
                cfg[key] = value
    for key, value in DEFAULTS.items():
        if cfg.get(key) is None:
            cfg[key] = value
    if cfg["tol"] is not None and not cfg["tol"] > 0:
        raise InputError("--tol must be positive")
    return argparse.Namespace(**cfg)


def _tol(cfg, default: float) -> float:
    tol = cfg.tol if cfg.tol is not None else default
    return tol / 2 if cfg.strict else tol


def _require(cfg, *names):
    for name in names:
        if not getattr(cfg, name, None):
            raise InputError(f"--{name.replace('_', '-')} is required for '{cfg.command}'")


def parse_eta_grid(spec, n: int):
    if spec is None or spec == "auto":
        return None
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except (AttributeError, ValueError) as exc:
        raise InputError(f"bad --eta-grid {spec!r}; expected min:max:count or auto") from exc
    if count < 1 or not hi >= lo:
        raise InputError(f"bad --eta-grid {spec!r}")
    axis = np.linspace(lo, hi, count)
    return axis if n == 1 else lg.grid_from_axes([axis] * n)


def _load_cost(spec, n_hint=None) -> pl.CostMatrix:
    if spec is None:
        raise InputError("--cost-matrix is required")
    if spec == "legendre":
        if n_hint is None:
            raise InputError("'legendre' cost matrix needs an input to fix the dimension")
        return pl.legendre_matrix(n_hint)
    data = io.read_json(spec)
    try:
        return pl.CostMatrix.from_json(data)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{spec}: bad cost matrix: {exc}") from exc


def _load_body(path) -> pl.ConvexBody:
    if str(path).endswith(".json"):
        data = io.read_json(path)
        try:
            return pl.ConvexBody.from_json(data)
        except (KeyError, TypeError, IdealPoint) as exc:
            raise InputError(f"{path}: bad convex body: {exc}") from exc
    f = io.read_sampled_function(path)
    try:
        return lg.epigraph_body(f)
    except MissingGradients as exc:
        raise InputError(f"{path}: {exc}") from exc


def _write_svg(path, plot: LinePlot) -> None:
    if path:
        io.atomic_write(path, plot.render())


def cmd_conjugate(cfg) -> int:
    _require(cfg, "input", "output")
    f = io.read_sampled_function(cfg.input)
    eta = parse_eta_grid(cfg.eta_grid, f.n)
    if cfg.fast:
        if f.n != 1:
            raise InputError("--fast needs one-dimensional input")
        fstar = lg.conjugate_fast_1d(f, eta)
    else:
        fstar = lg.conjugate_bruteforce(f, eta)
    io.write_sampled_function(cfg.output, fstar, prefix="eta")
    if getattr(cfg, "biconjugate", None):
        io.write_sampled_function(cfg.biconjugate, lg.biconjugate(f), prefix="theta")
    if getattr(cfg, "fy_gap", None):
        fin = f.finite
        gap = f.values[fin, None] + fstar.values[None, :] - f.grid[fin] @ fstar.grid.T
        header = ["theta_index"] + [f"eta_{j}" for j in range(len(fstar))]
        rows = [[i] + list(r) for i, r in zip(np.flatnonzero(fin), gap)]
        io.atomic_write(cfg.fy_gap, io.csv_text(header, rows))
    if cfg.svg and f.n == 1:
        plot = LinePlot(title="conjugate")
        plot.polyline(f.grid[:, 0], f.values, color="#1f77b4")
        plot.polyline(fstar.grid[:, 0], fstar.values, color="#d62728")
        _write_svg(cfg.svg, plot)
    return EXIT_OK


def _envelope_csv(env: pl.EnvelopeResult, n: int) -> str:
    pts = env.dehomogenized()
    header = [f"x_{k}" for k in range(1, n + 2)] + ["degenerate"]
    rows = [list(p) + [int(d)] for p, d, ok in zip(pts, env.degenerate, env.finite) if ok]
    return io.csv_text(header, rows)


def cmd_polar(cfg) -> int:
    _require(cfg, "input", "output")
    body = _load_body(cfg.input)
    C = _load_cost(cfg.cost_matrix, body.n)
    if C.n != body.n:
        raise InputError(f"cost matrix is for n={C.n} but body has n={body.n}")
    env = pl.polar_boundary_envelope(C, body)
    io.atomic_write(cfg.output, _envelope_csv(env, body.n))
    skipped = int(np.count_nonzero(env.skipped))
    ideal = int(np.count_nonzero(env.ideal))
    log.info("%d samples, %d skipped, %d ideal (recession directions)", len(env), skipped, ideal)
    if cfg.svg and body.n == 1:
        plot = LinePlot(title="body and polar boundary")
        plot.polyline(body.samples[:, 0], body.samples[:, 1], color="#1f77b4")
        pts = env.dehomogenized()
        plot.polyline(pts[:, 0], pts[:, 1], color="#d62728")
        _write_svg(cfg.svg, plot)
    return EXIT_OK


def cmd_decompose(cfg) -> int:
    _require(cfg, "output")
    body = _load_body(cfg.input) if cfg.input else None
    C = _load_cost(cfg.cost_matrix, body.n if body else None)
    report = tf.decomposition_report(C)
    if body is not None:
        report["verify_thm_T"] = tf.verify_thm_T(C, body)
        report["verify_thm_S"] = tf.verify_thm_S(C, body)
    io.write_json(cfg.output, report)
    return EXIT_OK


def cmd_divergence(cfg) -> int:
    _require(cfg, "input", "output")
    data = io.read_json(cfg.input)
    pairs = data.get("pairs") if isinstance(data, dict) else data
    if not pairs:
        raise InputError(f"{cfg.input}: expected {{'pairs': [{{'a': [...], 'b': [...]}}, ...]}}")
    reports, gaps = [], []
    try:
        for item in pairs:
            a, b = np.asarray(item["a"], dtype=float), np.asarray(item["b"], dtype=float)
            reports.append(dv.report_from_points(a, b).to_json())
            gaps.append(dv.swap_check(a, b).max_relative_gap())
    except (KeyError, TypeError, DimensionMismatch) as exc:
        raise InputError(f"{cfg.input}: bad pair: {exc}") from exc
    key = "total_sqrt" if cfg.variant == "sqrt" else "total_paper"
    out = {
        "variant": cfg.variant,
        "total": [r[key] for r in reports],
        "reports": reports,
        "swap_max_relative_gap": max(gaps),
    }
    io.write_json(cfg.output, out)
    tol = _tol(cfg, 1e-12)
    if max(gaps) > tol:
        raise AssertionFailure(f"swap identity violated: relative gap {max(gaps):.3g} > {tol:.3g}")
    return EXIT_OK


def cmd_ctransform(cfg) -> int:
    _require(cfg, "input", "output", "cost")
    f = io.read_sampled_function(cfg.input)
    data = io.read_json(cfg.cost)
    try:
        cost = ct.QuadraticCost.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{cfg.cost}: bad cost: {exc}") from exc
    if cost.n != f.n:
        raise InputError("cost and function dimensions differ")
    fc = ct.c_transform(f, cost, parse_eta_grid(cfg.eta_grid, f.n))
    io.write_sampled_function(cfg.output, fc, prefix="eta")
    return EXIT_OK


def _quadratic(count: int, lo: float = -2.0, hi: float = 2.0) -> lg.SampledFunction:
    return lg.SampledFunction.from_callable(lambda t: 0.5 * t * t, np.linspace(lo, hi, count), grad=lambda t: t)


def demo_self_dual_parabola(cfg, out_dir) -> dict:
    count = cfg.samples or 200
    f = _quadratic(count)
    disc = lg.verify_legendre_polarity(f, lambda t: 0.5 * t * t, lambda t: t)
    pts, env = lg.legendre_envelope(f)
    if out_dir:
        rows = [[e, y] for (e, y), ok in zip(pts, env.finite) if ok]
        io.atomic_write(out_dir / "self_dual_parabola.csv", io.csv_text(["eta", "y"], rows))
    if cfg.svg:
        plot = LinePlot(title="Q and the Legendre polar of epi Q")
        plot.polyline(f.grid[:, 0], f.values, color="#1f77b4", width=3)
        plot.polyline(pts[:, 0], pts[:, 1], color="#d62728")
        _write_svg(cfg.svg, plot)
    return {"demo": "self-dual-parabola", "samples": count, "discrepancy": disc}


def demo_parabola_to_circle(cfg, out_dir) -> dict:
    count = cfg.samples or 400
    f = _quadratic(count, -10.0, 10.0)
    body = lg.epigraph_body(f)
    env = pl.polar_boundary_envelope(pl.parabola_to_sphere_matrix(1), body)
    pts = env.dehomogenized()
    # lambda = 1 in the affine chart
    residual = np.abs(np.sum(pts[env.finite] ** 2, axis=1) - 1.0)
    if out_dir:
        rows = [list(p) + [int(d)] for p, d, ok in zip(pts, env.degenerate, env.finite) if ok]
        io.atomic_write(out_dir / "parabola_to_circle.csv", io.csv_text(["x", "y", "degenerate"], rows))
    if cfg.svg:
        plot = LinePlot(title="polar of epi Q: unit circle", xlim=(-1.5, 1.5), ylim=(-1.5, 1.5), width=480)
        phi = np.linspace(0, 2 * np.pi, 361)
        plot.polyline(np.cos(phi), np.sin(phi), color="#cccccc", width=4)
        plot.polyline(pts[:, 0], pts[:, 1], color="#d62728")
        _write_svg(cfg.svg, plot)
    return {"demo": "parabola-to-circle", "samples": count, "max_residual": float(residual.max())}


def demo_polar_line_envelope(cfg, out_dir) -> dict:
    count = cfg.samples or 200

    def F(t):
        return t * t + t + 3

    def grad(t):
        return 2 * t + 1

    f = lg.SampledFunction.from_callable(F, np.linspace(-3.0, 3.0, count), grad=grad)
    pts, env = lg.legendre_envelope(f)
    ok = env.finite
    eta, y = pts[ok, 0], pts[ok, 1]
    closed = (eta**2 - 2 * eta - 11) / 4
    disc = float(np.max(np.abs(y - closed)))
    theta = f.grid[:, 0]
    if out_dir:
        io.atomic_write(out_dir / "polar_line_envelope.csv", io.csv_text(["eta", "conjugate"], zip(eta, y)))
        lines = [[t, t, -F(t)] for t in theta]
        io.atomic_write(out_dir / "polar_lines.csv", io.csv_text(["theta", "slope", "intercept"], lines))
    if cfg.svg:
        plot = LinePlot(title="polar lines of graph F and their envelope", ylim=(-6, 10))
        xs = np.array([eta.min(), eta.max()])
        for t in theta[:: max(1, count // 40)]:
            plot.polyline(xs, t * xs - F(t), color="#1f77b4", width=0.7, opacity=0.6)
        plot.polyline(eta, y, color="#d62728", width=2.5)
        _write_svg(cfg.svg, plot)
    return {"demo": "fig2-envelope", "samples": count, "discrepancy": disc}


def cmd_demo(cfg) -> int:
    if cfg.demo not in DEMOS:
        raise InputError(f"unknown demo {cfg.demo!r}; choose one of {', '.join(DEMOS)}")
    out_dir = Path(cfg.output) if cfg.output else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    runner = {
        "self-dual-parabola": demo_self_dual_parabola,
        "parabola-to-circle": demo_parabola_to_circle,
        "fig2-envelope": demo_polar_line_envelope,
    }[cfg.demo]
    report = runner(cfg, out_dir)
    tol = _tol(cfg, DEMO_TOL[cfg.demo])
    value = report.get("discrepancy", report.get("max_residual"))
    report["tolerance"] = tol
    report["passed"] = bool(value <= tol)
    if out_dir:
        io.write_json(out_dir / f"{cfg.demo}.json", report)
    sys.stdout.write(io.dumps_json(report))
    if not report["passed"]:
        raise AssertionFailure(f"{cfg.demo}: {value:.3g} exceeds {tol:.3g}")
    return EXIT_OK


HANDLERS = {
    "conjugate": cmd_conjugate,
    "polar": cmd_polar,
    "decompose": cmd_decompose,
    "divergence": cmd_divergence,
    "ctransform": cmd_ctransform,
    "demo": cmd_demo,
}


def _join_eta_grid(argv: list) -> list:
    # "--eta-grid -1:1:5" would otherwise be read as an option
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--eta-grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_eta_grid(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except (io.InputError, OutOfGrid, DimensionMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionFailure as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ConvexPolarError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
