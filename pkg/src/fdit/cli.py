"""Command-line entry point: ``fdit {plan,bench,render,envgen}``.

Exit codes: 0 success, 1 planner found no solution, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (ENVIRONMENTS, PLANNERS, BenchmarkError, BenchmarkSpec, Case,
                    make_environment, run_benchmark, summarize)
from .environment import Environment
from .planner import Planner, PlannerConfig, load_snapshot, save_snapshot
from .render import ProjectionError, render_svg

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

DEFAULT_SPECS = {
    "dw4.spec": BenchmarkSpec(cases=(Case("dw", 4, 0.3),), name="dw4"),
    "dw8.spec": BenchmarkSpec(cases=(Case("dw", 8, 0.6),), name="dw8"),
}
ENVGEN_DIMENSIONS = (2, 4, 8, 16)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load_env(name: str, dim: int | None) -> tuple:
    """``name`` is a registered id or a path to an environment file."""
    if name in ENVIRONMENTS:
        if dim is None:
            raise UsageError("--dim is required with a registered environment")
        return name, make_environment(name, dim)
    path = Path(name)
    if not path.exists():
        raise UsageError(f"unknown environment {name!r} (ids: {', '.join(ENVIRONMENTS)})")
    env = Environment.load(path)
    if dim is not None and dim != env.dimension:
        raise UsageError(f"{name} has dimension {env.dimension}, not {dim}")
    return f"file:{path}", env


def cmd_plan(args) -> int:
    env_id, env = _load_env(args.env, args.dim)
    config = PlannerConfig(batch_size=args.batch_size, gamma_max=args.gamma_max, loop_cap=args.loop_cap,
                           time_budget=args.time_budget, seed=args.seed,
                           neighbor_mode=PLANNERS[args.planner])
    planner = Planner(env, config)
    sols = planner.run()
    if args.out:
        save_snapshot(planner.snapshot(), args.out)
    head = f"planner={args.planner} env={env_id} dim={env.dimension} seed={args.seed}"
    if not sols:
        print(f"{head} success=false batches={planner.batches}")
        return EXIT_FAILED
    print(f"{head} success=true t_init={sols[0].wall_time:.4f} c_init={sols[0].cost:.6f} "
          f"c_final={sols[-1].cost:.6f} solutions={len(sols)} batches={planner.batches}")
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = BenchmarkSpec.load(args.config)
    overrides = {}
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if overrides:
        spec = BenchmarkSpec.from_dict({**spec.to_dict(), **overrides})
    out = args.out or f"{spec.name}.jsonl"
    records = run_benchmark(spec, out, workers=args.workers)
    for stats in summarize(records):
        print(stats.table())
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    snap = load_snapshot(args.snapshot)
    out = args.out or str(Path(args.snapshot).with_suffix(".svg"))
    render_svg(snap, out, axes=args.axes)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_envgen(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    written = []
    dims = (args.dim,) if args.dim else ENVGEN_DIMENSIONS
    for env_id in ("dw", "rr"):
        for n in dims:
            env = make_environment(env_id, n)
            path = out / f"{env_id}-{n}d.json"
            env.save(path)
            written.append(path)
    for name, spec in DEFAULT_SPECS.items():
        spec.save(out / name)
        written.append(out / name)
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdit", description="Force-direction informed trees planner.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("plan", help="single planner run")
    p.add_argument("--env", default="dw", help="environment id or environment file")
    p.add_argument("--dim", type=int)
    p.add_argument("--planner", choices=sorted(PLANNERS), default="fdit")
    p.add_argument("--time-budget", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=200)
    p.add_argument("--gamma-max", type=float, default=1.0)
    p.add_argument("--loop-cap", type=int, default=5)
    p.add_argument("--out", help="write a snapshot file")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run a benchmark spec")
    p.add_argument("--config", required=True, help="benchmark spec file")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int, help="override the base seed")
    p.add_argument("--out", help="JSON-lines output path")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="snapshot to SVG")
    p.add_argument("snapshot")
    p.add_argument("--out")
    p.add_argument("--axes", type=int, nargs=2, metavar=("I", "J"))
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("envgen", help="write default environment and spec files")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dim", type=int)
    p.set_defaults(func=cmd_envgen)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (BenchmarkError, ProjectionError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"fdit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
