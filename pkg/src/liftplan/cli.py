"""Command-line entry point: analyze, plan, query, check, bench, serve."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, asdict
from pathlib import Path

from . import counting, liftgraph, lp as lpmod, oracle, planner_approx, planner_exact, queries
from .model import ModelError, RfMdpModel, epidemic_model, parse_model

BENCH_HEADER = [
    "family",
    "n",
    "algorithm",
    "phase",
    "seconds",
    "states",
    "actions",
    "lp_variables",
    "lp_constraints",
    "status",
]


@dataclass
class BenchRecord:
    family: str
    n: int
    algorithm: str
    phase: str
    seconds: float
    states: int
    actions: int
    lp_variables: int
    lp_constraints: int
    status: str


def _load_model(args) -> RfMdpModel:
    if getattr(args, "model", None):
        return parse_model(Path(args.model).read_text())
    if getattr(args, "family", None):
        if args.family != "epidemic":
            raise ModelError(f"unknown family {args.family!r}")
        return epidemic_model(args.n)
    raise ModelError("pass --model FILE or --family NAME --n N")


def _add_model_args(parser):
    parser.add_argument("--model", help="model document (JSON file)")
    parser.add_argument("--family", help="built-in family name (epidemic)")
    parser.add_argument("--n", type=int, default=3, help="family size parameter")


def _cmd_analyze(args) -> int:
    model = _load_model(args)
    graph = liftgraph.relational_cost_graph(model)
    report = liftgraph.maximal_cliques(graph)
    total_graph, total_report = liftgraph.total_relational_cost_graph(model)
    out = {
        "c": report.c,
        "w": report.w,
        "cliques": [list(cl) for cl in report.cliques],
        "greedy_induced_width": report.greedy_induced_width,
        "state_space_size": counting.state_space_size(model),
        "total_graph": {
            "vertices": list(total_graph.vertices),
            "edges": sorted(list(e) for e in total_graph.edges),
            "greedy_induced_width": total_report.greedy_induced_width,
        },
    }
    print(json.dumps(out, indent=2))
    return 0


def _cmd_plan(args) -> int:
    model = _load_model(args)
    if args.alpha != "uniform":
        raise ModelError("only --alpha uniform is supported")
    if args.mode == "exact":
        vf = planner_exact.plan_exact(model, alpha=None, backend=args.backend)
        doc = planner_exact.value_function_to_json(model, vf)
    else:
        wv = planner_approx.plan_approx(model, backend=args.backend)
        doc = planner_approx.weights_to_json(model, wv)
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def query_result_json(model, plan_doc: dict, state_doc: dict, min_reward,
                      restrict: str | None, min_prob: float, mode: str) -> dict:
    """Shared by the CLI and the HTTP service so both answer identically."""
    state = counting.state_from_json(model, state_doc)
    predicate = queries.parse_predicate(restrict) if restrict else None
    if mode == "exact":
        plan = planner_exact.value_function_from_json(model, plan_doc)
    else:
        plan = planner_approx.weights_from_json(plan_doc)
    result = queries.conditional_action_query(
        model, plan, state, min_reward, predicate, min_prob, mode
    )
    return result.to_json(model)


def _cmd_query(args) -> int:
    model = _load_model(args)
    plan_doc = json.loads(Path(args.plan).read_text())
    state_doc = json.loads(Path(args.state).read_text())
    min_reward = float("-inf") if args.min_reward is None else args.min_reward
    mode = args.mode
    if mode == "auto":
        mode = "exact" if plan_doc.get("kind") == "exact-value-function" else "approx"
    out = query_result_json(
        model, plan_doc, state_doc, min_reward, args.restrict, args.min_prob, mode
    )
    print(json.dumps(out, indent=2))
    return 0


def _cmd_check(args) -> int:
    model = _load_model(args)
    report = oracle.check_equivalence(model, tol=args.tol)
    print(json.dumps(report, indent=2))
    return 0 if report["ok"] else 1


def _cmd_bench(args) -> int:
    algorithms = args.algorithms.split(",")
    records = run_bench(
        family=args.family or "epidemic",
        n_min=args.n_min,
        n_max=args.n_max,
        algorithms=algorithms,
        time_limit=args.time_limit,
        out=args.out,
    )
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = _load_model(args)
    app = create_app(default_model=model)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _bench_exact(model):
    t0 = time.perf_counter()
    program = planner_exact.build_exact_lp(model)
    build = time.perf_counter() - t0
    t0 = time.perf_counter()
    solution = lpmod.solve(program)
    solve_time = time.perf_counter() - t0
    if solution.status != lpmod.OPTIMAL:
        raise lpmod.LpError(f"exact LP {solution.status}")
    states = counting.state_space_size(model)
    return build, solve_time, states, program.num_constraints, program.num_variables, program.num_constraints


def _bench_approx(model):
    t0 = time.perf_counter()
    program = planner_approx.build_alp(model)
    build = time.perf_counter() - t0
    t0 = time.perf_counter()
    solution = lpmod.solve(program)
    solve_time = time.perf_counter() - t0
    if solution.status != lpmod.OPTIMAL:
        raise lpmod.LpError(f"approx LP {solution.status}")
    states = counting.state_space_size(model)
    actions = len(planner_approx.action_templates(model))
    return build, solve_time, states, actions, program.num_variables, program.num_constraints


def _bench_ground_vi(model):
    t0 = time.perf_counter()
    g = oracle.ground(model)
    build = time.perf_counter() - t0
    t0 = time.perf_counter()
    oracle.ground_value_iteration(g, eps=1e-8)
    solve_time = time.perf_counter() - t0
    return build, solve_time, g.n_states, g.n_actions, 0, 0


def _bench_ground_alp(model):
    t0 = time.perf_counter()
    g = oracle.ground(model)
    build = time.perf_counter() - t0
    t0 = time.perf_counter()
    oracle.ground_alp(g)
    solve_time = time.perf_counter() - t0
    return build, solve_time, g.n_states, g.n_actions, 0, 0


_BENCH_RUNNERS = {
    "exact": _bench_exact,
    "approx": _bench_approx,
    "ground-vi": _bench_ground_vi,
    "ground-alp": _bench_ground_alp,
}


def run_bench(family: str, n_min: int, n_max: int, algorithms: list[str],
              time_limit: float, out: str) -> list[BenchRecord]:
    """One build/solve/total record triple per (n, algorithm); an algorithm's
    series stops at its first timeout or guard refusal."""
    for name in algorithms:
        if name not in _BENCH_RUNNERS:
            raise ModelError(f"unknown algorithm {name!r}")
    records: list[BenchRecord] = []
    stopped: set[str] = set()
    for n in range(n_min, n_max + 1):
        model = epidemic_model(n) if family == "epidemic" else None
        if model is None:
            raise ModelError(f"unknown family {family!r}")
        for name in algorithms:
            if name in stopped:
                continue
            try:
                build, solve_time, states, actions, lp_vars, lp_rows = _BENCH_RUNNERS[
                    name
                ](model)
            except ModelError:
                records.append(
                    BenchRecord(family, n, name, "total", 0.0, 0, 0, 0, 0, "oom-guard")
                )
                stopped.add(name)
                continue
            status = "ok"
            if build + solve_time > time_limit:
                status = "timeout"
                stopped.add(name)
            for phase, seconds in (
                ("build", build),
                ("solve", solve_time),
                ("total", build + solve_time),
            ):
                records.append(
                    BenchRecord(
                        family=family,
                        n=n,
                        algorithm=name,
                        phase=phase,
                        seconds=round(seconds, 6),
                        states=states,
                        actions=actions,
                        lp_variables=lp_vars,
                        lp_constraints=lp_rows,
                        status=status,
                    )
                )
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=BENCH_HEADER)
        writer.writeheader()
        for record in records:
            writer.writerow(asdict(record))
    return records


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftplan",
        description="Lifted forward planning for relational factored MDPs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="cost-graph structure of a model")
    _add_model_args(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("plan", help="compute a value function or weights")
    p.add_argument("mode", choices=["exact", "approx"])
    _add_model_args(p)
    p.add_argument("--alpha", default="uniform", help="state-relevance weights")
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--backend", default="auto", choices=["auto", "builtin", "scipy"])
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("query", help="conditional action query")
    _add_model_args(p)
    p.add_argument("--plan", required=True, help="plan file from `plan`")
    p.add_argument("--state", required=True, help="state JSON file")
    p.add_argument("--min-reward", type=float, default=None)
    p.add_argument("--restrict", default=None, help='e.g. "count(Sick,false) >= 2"')
    p.add_argument("--min-prob", type=float, default=0.0)
    p.add_argument("--mode", default="auto", choices=["auto", "exact", "approx"])
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("check", help="verify against the ground oracle")
    p.add_argument("target", choices=["ground"])
    _add_model_args(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("bench", help="runtime scaling benchmark to CSV")
    p.add_argument("--family", default="epidemic")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--algorithms", default="exact,approx")
    p.add_argument("--time-limit", type=float, default=600.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("serve", help="run the HTTP session service")
    _add_model_args(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ModelError, lpmod.LpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
