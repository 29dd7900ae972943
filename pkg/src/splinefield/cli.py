"""Command-line interface: fit, query, grid, rollout, bench, gradient-study, serve.

Every run is a deterministic function of its flags and input files; writers
are atomic, so a failed run leaves no partial outputs.  Exit codes: 0 ok,
1 domain/validation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import os
import sys

import numpy as np

from . import __version__, bench
from .dynamics import DynamicsConfig, rollout
from .errors import SplineFieldError
from .field import UnionField, query, union_query
from .io import (
    _atomic_write,
    export_field_grid,
    load_model,
    load_trajectory,
    save_model,
)
from .service import DEFAULT_PORT, DEFAULT_RATE, FieldService
from .spline import FitConfig, fit


def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip() != ""])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolution(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    try:
        if len(parts) == 1:
            n = int(parts[0])
            return n, n
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected N or NXxNY, got {text!r}")


def _probe(text: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        a, b = text.split(":")
        return _floats(a), _floats(b)
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(
            f"expected 'x0,y0,...:x1,y1,...', got {text!r}"
        )


def _perturbation(text: str):
    try:
        tick, vec = text.split(":")
        return int(tick), _floats(vec)
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"expected 'STEP:dx,dy,...', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinefield",
        description="Trajectory encoding as quadratic splines, analytic distance "
        "fields, and stable motion generation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model to one or more trajectory files")
    p.add_argument("--input", action="append", required=True, help="trajectory CSV/JSON (repeatable)")
    p.add_argument("--segments", type=int, required=True)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--terminal-zero-velocity", action="store_true")
    p.add_argument("--output", required=True, help="model JSON path")

    p = sub.add_parser("query", help="query the distance field at one point")
    p.add_argument("--model", required=True)
    p.add_argument("--point", type=_floats, required=True)
    p.add_argument("--backend", choices=("compiled", "numpy"), default=None)

    p = sub.add_parser("grid", help="export a distance/gradient/phase grid")
    p.add_argument("--model", required=True)
    p.add_argument("--bounds", type=_floats, required=True, help="xmin,xmax,ymin,ymax")
    p.add_argument("--resolution", type=_resolution, default=(50, 50))
    p.add_argument("--axes", type=_ints, default=None, help="two axis indices for D>2 slices")
    p.add_argument("--fixed", type=_floats, default=None, help="base point for D>2 slices")
    p.add_argument("--out", required=True)

    p = sub.add_parser("rollout", help="integrate the dynamical system from a start point")
    p.add_argument("--model", required=True)
    p.add_argument("--start", type=_floats, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--step-size", type=float, default=None)
    p.add_argument("--integrator", choices=("euler", "rk4"), default="euler")
    p.add_argument("--steps", type=int, default=10_000, help="max integration steps")
    p.add_argument("--perturb", type=_perturbation, action="append", default=[],
                   help="STEP:dx,dy,... applied before that step (repeatable)")
    p.add_argument("--out", required=True, help="trace CSV path")

    p = sub.add_parser("bench", help="benchmarks")
    bench_sub = p.add_subparsers(dest="bench_command", required=True)

    b = bench_sub.add_parser("encoding", help="reconstruction-error comparison")
    b.add_argument("--data-dir", required=True, help="directory of trajectory CSV/JSON files")
    b.add_argument("--params", type=_ints, default=[3, 7, 12, 17, 22])
    b.add_argument("--methods", default=",".join(bench.FAMILY_KINDS),
                   help="comma-separated family names")
    b.add_argument("--out", required=True, help="report path (.csv or .json)")

    b = bench_sub.add_parser("timing", help="batch-query wall time per backend")
    b.add_argument("--segments", type=_ints, default=[1, 5, 20])
    b.add_argument("--dims", type=_ints, default=[2, 10])
    b.add_argument("--points", type=int, default=2500)
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--backends", default="active",
                   help="'active', 'both', or comma-separated backend names")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)

    p = sub.add_parser("gradient-study", help="analytic vs sampled gradient jumps")
    p.add_argument("--model", required=True)
    p.add_argument("--probe", type=_probe, required=True, help="'x0,y0:x1,y1'")
    p.add_argument("--k", type=int, default=50, help="samples for the numerical baseline")
    p.add_argument("--n-probe", type=int, default=200)
    p.add_argument("--out", default=None, help="optional JSON report path")

    p = sub.add_parser("serve", help="run the streaming simulation service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--rate", type=float, default=DEFAULT_RATE, help="ticks per second")
    p.add_argument("--ui", action="store_true", help="also serve the browser playground")
    p.add_argument("--http-port", type=int, default=8787)
    p.add_argument("--ui-dir", default=None, help="static bundle directory (with --ui)")
    return parser


def _cmd_fit(args) -> int:
    splines = []
    for path in args.input:
        traj = load_trajectory(path)
        spline = fit(
            traj,
            FitConfig(
                n_segments=args.segments,
                ridge=args.ridge,
                terminal_zero_velocity=args.terminal_zero_velocity,
            ),
        )
        spline.metadata = {
            "source": os.path.basename(path),
            "fit_residual": spline.metadata["fit_residual"],
            "n_samples": spline.metadata["n_samples"],
        }
        print(f"{path}: residual {spline.metadata['fit_residual']:.6g}")
        splines.append(spline)
    model = splines[0] if len(splines) == 1 else UnionField(splines)
    save_model(model, args.output)
    print(f"wrote {args.output}")
    return 0


def _cmd_query(args) -> int:
    field = load_model(args.model)
    if isinstance(field, UnionField):
        q, member = union_query(field, args.point, backend=args.backend)
    else:
        q, member = query(field, args.point, backend=args.backend), 0
    print(
        json.dumps(
            {
                "distance": q.distance,
                "gradient": list(q.gradient),
                "projection": list(q.projection),
                "segment_index": q.segment_index,
                "t_local": q.t_local,
                "phase": q.phase,
                "member": member,
            },
            sort_keys=True,
        )
    )
    return 0


def _cmd_grid(args) -> int:
    field = load_model(args.model)
    axes = tuple(args.axes) if args.axes is not None else None
    export_field_grid(
        field, args.bounds, args.resolution, args.out, axes=axes, fixed=args.fixed
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_rollout(args) -> int:
    field = load_model(args.model)
    cfg = DynamicsConfig(
        lam=args.lam,
        step_size=args.step_size,
        integrator=args.integrator,
        max_steps=args.steps,
    )
    trace = rollout(field, args.start, cfg, perturbations=dict(args.perturb))
    out = _io.StringIO()
    dim = trace.states.shape[1]
    writer = csv.writer(out)
    writer.writerow(
        ["step"] + [f"x{i + 1}" for i in range(dim)] + ["distance", "phase", "lyapunov"]
    )
    for k in range(len(trace.states)):
        writer.writerow(
            [k]
            + [repr(float(v)) for v in trace.states[k]]
            + [repr(float(trace.distances[k])), repr(float(trace.phases[k])),
               repr(float(trace.lyapunov[k]))]
        )
    _atomic_write(args.out, out.getvalue())
    print(
        f"converged={trace.converged} steps={trace.steps_taken} "
        f"final_distance={trace.distances[-1]:.6g} wrote {args.out}"
    )
    return 0


def _cmd_bench(args) -> int:
    if args.bench_command == "encoding":
        paths = sorted(
            os.path.join(args.data_dir, f)
            for f in os.listdir(args.data_dir)
            if f.lower().endswith((".csv", ".json"))
        )
        if not paths:
            raise SplineFieldError(f"no trajectory files in {args.data_dir}")
        dataset = [load_trajectory(p) for p in paths]
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        report = bench.run_encoding_benchmark(dataset, args.params, methods)
    else:
        if args.backends == "active":
            backends = None
        elif args.backends == "both":
            from . import available_backends

            backends = available_backends()
        else:
            backends = [b.strip() for b in args.backends.split(",") if b.strip()]
        report = bench.run_timing_benchmark(
            segment_counts=args.segments,
            dims=args.dims,
            n_points=args.points,
            repeats=args.repeats,
            backends=backends,
            seed=args.seed,
        )
    if args.out.lower().endswith(".json"):
        report.write_json(args.out)
    else:
        report.write_csv(args.out)
    for row in report.rows():
        print(json.dumps(row, sort_keys=True))
    print(f"wrote {args.out}")
    return 0


def _cmd_gradient_study(args) -> int:
    field = load_model(args.model)
    if isinstance(field, UnionField):
        raise SplineFieldError("gradient-study expects a single-spline model")
    start, end = args.probe
    report = bench.gradient_instability_study(
        field, start, end, k_numerical=args.k, n_probe=args.n_probe
    )
    text = json.dumps(report, sort_keys=True)
    print(text)
    if args.out:
        _atomic_write(args.out, text + "\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_serve(args) -> int:
    field = load_model(args.model)
    service = FieldService(field, host=args.host, port=args.port, rate=args.rate)
    host, port = service.address
    print(f"simulation service on {host}:{port} at {args.rate:g} Hz", flush=True)
    if args.ui:
        from .webui import start_ui_server

        ui_dir = args.ui_dir
        httpd = start_ui_server(args.http_port, ui_dir, host, port)
        print(f"playground UI on http://127.0.0.1:{httpd.server_address[1]}", flush=True)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.shutdown()
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "query": _cmd_query,
    "grid": _cmd_grid,
    "rollout": _cmd_rollout,
    "bench": _cmd_bench,
    "gradient-study": _cmd_gradient_study,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SplineFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
