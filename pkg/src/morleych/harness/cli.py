"""Command-line entry point: ``morleych <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..dynamics import SimulationConfig, StepFailure, initialize, run
from ..mesh import build_crisscross_mesh, morley_dof_count
from . import io
from .contour import extract_zero_level_set

log = logging.getLogger("morleych")

TABLE_H = (0.4, 0.2, 0.1, 0.05, 0.025)


class UsageError(Exception):
    pass


def parse_config(path) -> dict:
    """Flat ``key = value`` file; ``#``/``;`` comments and ``[section]`` lines ignored."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    known = set(SimulationConfig.keys())
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].split(";", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value.strip("'\""))
    return out


def _coerce(key, value):
    if key in ("n", "newton_max_iter", "output_every"):
        return int(value)
    if key in ("epsilon", "dt", "t_final", "newton_tol", "beta"):
        return float(value)
    if key == "alpha":
        return None if value.lower() in ("", "none", "auto") else float(value)
    if key in ("line_search", "retry_halving"):
        return value.lower() in ("1", "true", "yes", "on")
    return value


def load_config(path) -> SimulationConfig:
    try:
        return SimulationConfig(**parse_config(path))
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _list(text, kind=float):
    return [kind(s) for s in text.split(",") if s.strip()]


def cmd_dof_table(args) -> int:
    print("h,n,morley_dofs")
    for h in TABLE_H:
        n = int(round(2.0 / h))
        print(f"{h:g},{n},{morley_dof_count(build_crisscross_mesh(n))}")
    return 0


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out_dir or cfg.out_dir)
    result = run(cfg, raise_on_failure=False)
    io.write_trace_csv(result.trace, out / "trace.csv")
    for step, t, u in result.snapshots:
        io.write_field_vtk(u, result.mesh, out / f"field_{step:06d}.vtk")
        io.write_contour_csv(extract_zero_level_set(u, result.mesh), out / f"contour_{step:06d}.csv")
    if not args.no_figures:
        from . import plotting
        first = result.snapshots[0][2]
        plotting.plot_zero_level_set(extract_zero_level_set(first, result.mesh),
                                     out / "zero_level_set_initial.png", result.mesh.domain)
        plotting.plot_trace(result.trace, "linf", out / "linf.png", "max |u|", reference=1.0)
        plotting.plot_trace(result.trace, "energy", out / "energy.png", "discrete energy")
    print(f"wrote {len(result.trace)} trace rows to {out / 'trace.csv'}")
    if result.failure is not None:
        print(f"error: {result.failure}", file=sys.stderr)
        return 1
    return 0


def cmd_converge(args) -> int:
    from . import convergence
    cfg = load_config(args.config) if args.config else None
    if args.study == "projection":
        from ..analytic import from_string
        expr = "cos(pi*x)*cos(pi*y)"
        eps = 0.5
        if cfg is not None:
            eps = cfg.epsilon
            if cfg.initial not in ("circle-tanh", "two-circles-tanh"):
                expr = cfg.initial
        ns = _list(args.resolutions, int) if args.resolutions else (8, 16, 32)
        report = convergence.projection_study(from_string(expr), eps, ns)
    else:
        eps = cfg.epsilon if cfg else 0.5
        kw = {}
        if cfg is not None:
            kw["t_final"] = cfg.t_final
            if args.study == "space":
                kw["dt"] = cfg.dt
            else:
                kw["n"] = cfg.n
        res = None
        if args.resolutions:
            res = _list(args.resolutions, int if args.study == "space" else float)
        report = convergence.manufactured_convergence(args.study, eps=eps, resolutions=res, **kw)
    return _emit(report, args)


def _emit(report, args) -> int:
    io.write_report_csv(report, path=args.output, stream=sys.stdout)
    if args.figure:
        from . import plotting
        plotting.plot_convergence(report, args.figure)
    return 0


def cmd_interp(args) -> int:
    from . import convergence
    ns = _list(args.resolutions, int) if args.resolutions else (8, 16, 32)
    return _emit(convergence.interpolation_study(ns), args)


def cmd_enrich(args) -> int:
    from . import convergence
    ns = _list(args.resolutions, int) if args.resolutions else (8, 16, 32)
    return _emit(convergence.enrichment_study(ns), args)


def cmd_contour(args) -> int:
    cfg = load_config(args.config)
    mesh = build_crisscross_mesh(cfg.n)
    u = initialize(cfg, mesh)
    contours = extract_zero_level_set(u, mesh)
    out = Path(args.output or Path(cfg.out_dir) / "contour_initial.csv")
    io.write_contour_csv(contours, out)
    if args.figure:
        from . import plotting
        plotting.plot_zero_level_set(contours, args.figure, mesh.domain)
    print(f"wrote {len(contours)} polyline(s) to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="morleych",
                                description="Morley finite elements for the Cahn-Hilliard equation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the implicit time stepper")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("converge", help="manufactured-solution or projection rate study")
    s.add_argument("--study", choices=("space", "time", "projection"), required=True)
    s.add_argument("--config")
    s.add_argument("--resolutions", help="comma list: mesh n (space/projection) or steps (time)")
    s.add_argument("--output")
    s.add_argument("--figure")
    s.set_defaults(func=cmd_converge)

    for name, func, text in (("interp-study", cmd_interp, "Morley interpolation rates"),
                             ("enrich-study", cmd_enrich, "enriching operator rates")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--resolutions")
        s.add_argument("--output")
        s.add_argument("--figure")
        s.set_defaults(func=func)

    s = sub.add_parser("dof-table", help="Morley DOF counts on [-1,1]^2")
    s.set_defaults(func=cmd_dof_table)

    s = sub.add_parser("contour", help="zero level set of the initial field")
    s.add_argument("--config", required=True)
    s.add_argument("--output")
    s.add_argument("--figure")
    s.set_defaults(func=cmd_contour)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (StepFailure, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
