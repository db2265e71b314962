"""Command-line interface.

Exit codes: 0 success, 1 input error, 2 non-convergence (report still written),
3 derivative-check failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import bench as bench_mod
from . import gradcheck as gradcheck_mod
from .distance import solve_inner
from .scene_io import SceneError, export_trajectory, scene_from_dict
from .trajopt import Scene, SolveError, broad_phase_rows, solve, _place_step


def _load_scene_file(path: str, overrides: list[str]) -> Scene:
    with open(path) as f:
        text = f.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    for item in overrides:
        if "=" not in item:
            raise SceneError(f"override {item!r} must look like section.key=value")
        key, raw = item.split("=", 1)
        parts = key.split(".")
        node = doc
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = json.loads(raw)
    return scene_from_dict(doc)


def _step_clearances(scene: Scene, states) -> list[float]:
    """Narrow-phase clearance per step over broad-phase survivors (inf if none)."""
    refs = scene.primitive_refs()
    out = []
    for i in range(len(states)):
        world, _ = _place_step(scene, states[i])
        best = math.inf
        for a, b in broad_phase_rows(scene, states, i, 1.0):
            res = solve_inner((world[a], world[b]), scene.inner)
            best = min(best, math.sqrt(res.d_sq) - refs[a].margin - refs[b].margin)
        out.append(best)
    return out


def cmd_plan(args) -> int:
    try:
        scene = _load_scene_file(args.scene, args.set or [])
    except (OSError, SceneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        traj, report = solve(scene)
    except SolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    clearances = _step_clearances(scene, traj.states)
    text = export_trajectory(
        traj, scene, "csv" if args.format == "csv" else "structured", clearances=clearances
    )
    with open(args.output, "w") as f:
        f.write(text)
    run_report = {
        "seed": args.seed,
        "threads": args.threads,
        "converged": report.converged,
        "reason": report.reason,
        "iterations": report.num_iterations,
        "final_objective": report.final_objective,
        "objective_history": [it.objective for it in report.iterations],
        "min_clearance_per_step": [c if math.isfinite(c) else None for c in clearances],
    }
    with open(args.output + ".report.json", "w") as f:
        json.dump(run_report, f, indent=2)
    print(
        f"{'converged' if report.converged else 'not converged'} ({report.reason}) "
        f"after {report.num_iterations} iterations, objective {report.final_objective:.6g}",
        file=sys.stderr,
    )
    return 0 if report.converged else 2


def cmd_distance(args) -> int:
    try:
        scene = _load_scene_file(args.scene, args.set or [])
        name_a, _, name_b = args.pair.partition(":")
        refs = scene.primitive_refs()
        by_name = {r.name: k for k, r in enumerate(refs)}
        if name_a not in by_name or name_b not in by_name:
            known = ", ".join(sorted(by_name))
            raise SceneError(f"unknown pair {args.pair!r}; primitives are: {known}")
    except (OSError, SceneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    world, _ = _place_step(scene, scene.initial_row())
    a, b = by_name[name_a], by_name[name_b]
    res = solve_inner((world[a], world[b]), scene.inner)
    dist = math.sqrt(res.d_sq)
    clearance = dist - refs[a].margin - refs[b].margin
    if args.machine:
        print(
            json.dumps(
                {
                    "pair": [name_a, name_b],
                    "d_sq": res.d_sq,
                    "distance": dist,
                    "clearance": clearance,
                    "t_star": list(res.t_star),
                    "closest_a": list(res.closest_a),
                    "closest_b": list(res.closest_b),
                    "newton_steps": res.newton_steps,
                    "converged": res.converged,
                }
            )
        )
    else:
        print(f"pair:         {name_a} : {name_b}")
        print(f"d_sq:         {res.d_sq:.12g}")
        print(f"distance:     {dist:.12g}")
        print(f"clearance:    {clearance:.12g}")
        print(f"t_star:       {np.array2string(res.t_star, precision=8)}")
        print(f"closest_a:    {np.array2string(res.closest_a, precision=8)}")
        print(f"closest_b:    {np.array2string(res.closest_b, precision=8)}")
        print(f"newton_steps: {res.newton_steps}")
    return 0


def cmd_gradcheck(args) -> int:
    try:
        scene = _load_scene_file(args.scene, args.set or [])
    except (OSError, SceneError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = gradcheck_mod.run_gradcheck(scene, seed=args.seed, tol=args.tol)
    print(f"seed: {report.seed}  tolerance: {report.tol:g}")
    for section in report.sections:
        if section.skipped:
            print(f"{section.name}: {section.skipped}")
        else:
            status = "ok" if section.passed(report.tol) else "FAIL"
            print(
                f"{section.name}: worst relative error {section.worst_rel_error:.3e} "
                f"over {section.checked} checks [{status}]"
            )
    if not report.passed:
        print(f"failing quantities: {', '.join(report.failures())}", file=sys.stderr)
        return 3
    return 0


def cmd_bench(args) -> int:
    if args.mode == "pairs":
        rows = bench_mod.bench_pairs(reps=args.reps, seed=args.seed)
    else:
        rows = bench_mod.bench_approx(seed=args.seed)
    sys.stdout.write(f"# seed={args.seed}\n")
    sys.stdout.write(bench_mod.rows_to_csv(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxopt",
        description="Differentiable primitive distances and collision-free trajectory optimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1, help="accepted for interface compatibility; execution is serial")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a scene entry, e.g. weights.smoothness=0.2")

    p_plan = sub.add_parser("plan", help="solve a scene and export the trajectory")
    p_plan.add_argument("scene")
    p_plan.add_argument("-o", "--output", required=True)
    p_plan.add_argument("--format", choices=["csv", "json"], default="csv")
    common(p_plan)
    p_plan.set_defaults(func=cmd_plan)

    p_dist = sub.add_parser("distance", help="distance query between two primitives")
    p_dist.add_argument("scene")
    p_dist.add_argument("--pair", required=True, metavar="A:B")
    p_dist.add_argument("--machine", action="store_true", help="emit JSON")
    common(p_dist)
    p_dist.set_defaults(func=cmd_distance)

    p_grad = sub.add_parser("gradcheck", help="audit analytic derivatives against finite differences")
    p_grad.add_argument("scene")
    p_grad.add_argument("--tol", type=float, default=1e-3)
    common(p_grad)
    p_grad.set_defaults(func=cmd_gradcheck)

    p_bench = sub.add_parser("bench", help="benchmarks (CSV on stdout)")
    p_bench.add_argument("mode", choices=["pairs", "approx"])
    p_bench.add_argument("--reps", type=int, default=1000)
    common(p_bench)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
