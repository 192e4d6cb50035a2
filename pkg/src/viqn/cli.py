"""Reproducible experiment runs: config parsing, trace CSVs, bench suites,
and a self-check command over the library's numeric invariants.

CSV schema (column order is part of the interface):

    iter, wall_s, op_evals, jvp_evals, lambda, step_norm, metric_name, metric_value

All randomness flows from the config seed; by default wall_s is written as
0.0 so identical configs produce byte-identical files (pass --timing for
real timestamps in the CSV; summaries and the bench manifest always carry
measured wall time).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core import Ball, FullSpace
from .errors import ConfigError
from .metrics import residue
from .operators import CubicBilinearOperator, make_affine, restricted_gap
from .solve import JacobianSpec, SolverConfig, extragradient, solve_minmax, solve_vi

CSV_COLUMNS = ["iter", "wall_s", "op_evals", "jvp_evals", "lambda", "step_norm", "metric_name", "metric_value"]

METHOD_NAMES = ("eg", "perseus1", "perseus2", "viqa-broyden", "viqa-damped")

# Benchmark defaults: tuned values for the d = 50, rho = 1e-3 problem.
METHOD_DEFAULTS = {
    "eg": {"lr": 0.5},
    "perseus1": {"L0": 0.2334, "L": 1e-9, "eta": 10.0},
    "perseus2": {"L": 1e-4, "delta": 0.0, "eta": 10.0, "T_cap": 1000},
    "viqa-broyden": {"L": 1e-3, "delta": 0.4, "j0": 0.4, "m": 20, "strategy": "history", "eta": 10.0},
    "viqa-damped": {"L": 1e-3, "delta": 0.22, "j0": 0.22, "m": 20, "strategy": "history", "eta": 10.0},
}

DEFAULT_BENCH_SUITE = {
    "problem": {"kind": "cubic-bilinear", "d": 50, "rho": 1e-3},
    "T": 100_000,
    "sample_every": 500,
    "seed": 0,
    "metric": "restricted-gap",
    "beta": 1.0,
    "methods": [{"name": name} for name in METHOD_NAMES],
}


def build_problem(spec: dict):
    """Returns (operator, domain, default metric name)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("must be an object with a 'kind'", field="problem")
    kind = spec["kind"]
    if kind == "cubic-bilinear":
        d = int(spec.get("d", 50))
        rho = float(spec.get("rho", 1e-3))
        op = CubicBilinearOperator(d=d, rho=rho)
        return op, FullSpace(op.dim), "restricted-gap"
    if kind == "affine-ball":
        d = int(spec.get("d", 10))
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        A = rng.standard_normal((d, d))
        M = float(spec.get("mu", 1.0)) * np.eye(d) + float(spec.get("skew", 1.0)) * (A - A.T)
        sym = float(spec.get("sym", 0.0))
        if sym:
            B = rng.standard_normal((d, d))
            M = M + sym * (B @ B.T) / d
        q = float(spec.get("q_scale", 0.3)) * rng.standard_normal(d)
        dom = Ball(np.zeros(d), float(spec.get("radius", 1.0)))
        return make_affine(M, q), dom, "residue"
    raise ConfigError(f"unknown problem kind {kind!r}", field="problem.kind")


def build_metric(name: str, op, dom, beta: float):
    if name == "restricted-gap":
        if not isinstance(op, CubicBilinearOperator):
            raise ConfigError("restricted-gap metric needs the cubic-bilinear problem", field="metric")
        return lambda z: restricted_gap(z, beta, op)
    if name == "residue":
        return lambda x: residue(op, dom, x)
    if name == "fnorm":
        return lambda x: float(np.linalg.norm(op(x)))
    raise ConfigError(f"unknown metric {name!r}", field="metric")


def _method_params(method: dict) -> dict:
    if not isinstance(method, dict) or "name" not in method:
        raise ConfigError("each method needs a 'name'", field="methods")
    name = method["name"]
    if name not in METHOD_NAMES:
        raise ConfigError(f"unknown solver name {name!r}; choose from {METHOD_NAMES}", field="method.name")
    params = dict(METHOD_DEFAULTS[name])
    params.update({k: v for k, v in method.items() if k != "name"})
    return params


def run_method(name: str, params: dict, op, dom, T: int, seed: int, metric, metric_name: str):
    """Dispatch one named method; returns (output, trace)."""
    if name == "eg":
        return extragradient(op, dom, float(params["lr"]), T, metric=metric, metric_name=metric_name)
    opt = int(params.get("opt", 1))
    common = dict(eta=float(params.get("eta", 10.0)), opt=opt, seed=seed,
                  tau_tol=float(params.get("tau_tol", 0.5)))
    if name == "perseus1":
        cfg = SolverConfig(T=T, L=float(params["L"]), delta=float(params["L0"]), **common)
        jac = JacobianSpec(kind="zero", L0=float(params["L0"]))
    elif name == "perseus2":
        cfg = SolverConfig(T=min(T, int(params.get("T_cap", T))), L=float(params["L"]),
                           delta=float(params.get("delta", 0.0)), **common)
        jac = JacobianSpec(kind="exact")
    else:
        kind = "damped-broyden" if name == "viqa-damped" else "broyden"
        cfg = SolverConfig(T=T, L=float(params["L"]), delta=float(params["delta"]), **common)
        jac = JacobianSpec(kind=kind, m=int(params["m"]), j0=float(params["j0"]),
                           strategy=params.get("strategy", "history"))
    if isinstance(dom, FullSpace):
        return solve_minmax(op, cfg, jac, metric=metric, metric_name=metric_name)
    return solve_vi(op, dom, cfg, jac, metric=metric, metric_name=metric_name)


def write_trace_csv(path: Path, trace, sample_every: int, timing: bool) -> int:
    """Write sampled trace rows; returns the number of rows written."""
    rows = [i for i in range(len(trace)) if trace.k[i] % sample_every == 0]
    if not rows and len(trace):
        rows = [len(trace) - 1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for i in rows:
            wall = trace.wall[i] if timing else 0.0
            writer.writerow([
                trace.k[i], repr(float(wall)), trace.op_evals[i], trace.jvp_evals[i],
                repr(trace.lam[i]), repr(trace.step_norm[i]),
                trace.metric_name, repr(trace.metric[i]),
            ])
    return len(rows)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}")


def cmd_run(args) -> int:
    try:
        config = _load_json(args.config)
        op, dom, default_metric = build_problem(config.get("problem", {}))
        params = _method_params(config.get("method", {}))
        name = config["method"]["name"]
        T = int(config.get("T", 1000))
        seed = int(args.seed if args.seed is not None else config.get("seed", 0))
        sample_every = int(config.get("sample_every", 1))
        metric_name = config.get("metric", default_metric)
        metric = build_metric(metric_name, op, dom, float(config.get("beta", 1.0)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        output, trace = run_method(name, params, op, dom, T, seed, metric, metric_name)
    except Exception as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 1
    wall = time.perf_counter() - t0
    csv_path = out_dir / config.get("out", f"{name}.csv")
    n_rows = write_trace_csv(csv_path, trace, sample_every, args.timing)
    final_metric = trace.metric[-1] if len(trace) else float("nan")
    print(
        f"{name}: iters={trace.k[-1] if len(trace) else 0} final_{metric_name}={final_metric:.6e} "
        f"op_evals={op.eval_count} jvp_evals={op.jvp_count} wall={wall:.2f}s "
        f"rows={n_rows} csv={csv_path}"
    )
    return 0


def _bench_one(method: dict, suite: dict, out_dir: str, seed: int, timing: bool) -> dict:
    """Worker for one suite entry; returns its manifest record."""
    name = method["name"]
    params = _method_params(method)
    op, dom, default_metric = build_problem(suite["problem"])
    metric_name = suite.get("metric", default_metric)
    metric = build_metric(metric_name, op, dom, float(suite.get("beta", 1.0)))
    T = int(suite.get("T", 100_000))
    sample_every = int(suite.get("sample_every", 500))
    record = {"name": name, "label": method.get("label", name), "csv": f"{name}.csv"}
    t0 = time.perf_counter()
    try:
        _, trace = run_method(name, params, op, dom, T, seed, metric, metric_name)
    except Exception as exc:  # partial failure: record and keep going
        record.update({"status": f"error: {exc}", "wall_s": time.perf_counter() - t0})
        return record
    write_trace_csv(Path(out_dir) / record["csv"], trace, sample_every, timing)
    record.update({
        "status": "ok",
        "iterations": trace.k[-1] if len(trace) else 0,
        "final_metric": trace.metric[-1] if len(trace) else float("nan"),
        "op_evals": op.eval_count,
        "jvp_evals": op.jvp_count,
        "oracle_total": op.eval_count + op.jvp_count,
        "wall_s": time.perf_counter() - t0 if timing else 0.0,
    })
    return record


def cmd_bench(args) -> int:
    try:
        suite = dict(DEFAULT_BENCH_SUITE) if args.suite == "default" else _load_json(args.suite)
        methods = suite.get("methods", [])
        if not methods:
            raise ConfigError("suite lists no methods", field="methods")
        for m in methods:
            _method_params(m)
        build_problem(suite.get("problem", {}))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(args.seed if args.seed is not None else suite.get("seed", 0))

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_bench_one, m, suite, str(out_dir), seed, args.timing) for m in methods
            ]
            records = [f.result() for f in futures]
    else:
        records = [_bench_one(m, suite, str(out_dir), seed, args.timing) for m in methods]

    manifest = {
        "problem": suite["problem"],
        "metric_name": suite.get("metric", "restricted-gap"),
        "T": int(suite.get("T", 100_000)),
        "sample_every": int(suite.get("sample_every", 500)),
        "seed": seed,
        "methods": records,
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    failures = [r["name"] for r in records if r["status"] != "ok"]
    for r in records:
        extra = f"final={r.get('final_metric', float('nan')):.6e}" if r["status"] == "ok" else r["status"]
        print(f"{r['name']:13s} {extra}")
    print(f"manifest: {manifest_path}")
    return 1 if failures else 0


# -- invariant check suites --------------------------------------------------

def _suite_woodbury() -> tuple[bool, str]:
    from .jacobian import broyden_build, PairBuffer

    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(20):
        pairs = PairBuffer([(rng.standard_normal(30), rng.standard_normal(30)) for _ in range(5)])
        J = broyden_build(rng.uniform(0.5, 2.0, 30), pairs)
        sigma = rng.uniform(0.1, 1.0)
        rhs = rng.standard_normal(30)
        x = J.solve_shifted(sigma, rhs)
        ref = np.linalg.solve(J.to_dense() + sigma * np.eye(30), rhs)
        worst = max(worst, float(np.linalg.norm(x - ref) / np.linalg.norm(ref)))
    return worst <= 1e-8, f"worst relative error {worst:.2e}"


def _suite_broyden() -> tuple[bool, str]:
    from .jacobian import broyden_build, PairBuffer, delta_bound

    rng = np.random.default_rng(1)
    op = CubicBilinearOperator(d=8, rho=0.1)
    L0 = op.smoothness_bound(2.0)
    worst = -np.inf
    for _ in range(40):
        pts = []
        for _ in range(5):
            z = rng.standard_normal(16)
            z *= 2.0 * rng.uniform(0.2, 1.0) / np.linalg.norm(z)
            pts.append((z, op(z)))
        pairs = PairBuffer([(b[0] - a[0], b[1] - a[1]) for a, b in zip(pts, pts[1:])])
        for damped in (False, True):
            J = broyden_build(np.zeros(16), pairs, damped=damped)
            x = rng.standard_normal(16)
            x *= 1.8 / np.linalg.norm(x)
            measured = float(np.linalg.norm(op.dense_jacobian(x) - J.to_dense(), 2))
            worst = max(worst, measured - delta_bound(J, L0))
    return worst <= 1e-9, f"worst bound slack {worst:.2e}"


def _suite_taylor_bound(delta_scale: float = 1.0) -> tuple[bool, str]:
    from .jacobian import broyden_build, pairs_from_jvp
    from .model import ModelParams, taylor_value

    op = CubicBilinearOperator(d=10, rho=0.3)
    rng = np.random.default_rng(2)
    worst = -np.inf
    for _ in range(200):
        v, x = rng.standard_normal(20), rng.standard_normal(20)
        J = broyden_build(np.full(20, 0.05), pairs_from_jvp(op, v, 5, seed=rng))
        delta = delta_scale * float(np.linalg.norm(op.dense_jacobian(v) - J.to_dense(), 2))
        mp = ModelParams(v=v, Fv=op(v), jac=J, eta=10.0, delta=delta, L=op.L1)
        step = float(np.linalg.norm(x - v))
        lhs = float(np.linalg.norm(op(x) - taylor_value(mp, x)))
        worst = max(worst, lhs - (0.5 * op.L1 * step**2 + delta * step))
    return worst <= 1e-9, f"worst inequality slack {worst:.2e}"


def _suite_condition_replay() -> tuple[bool, str]:
    from .model import ModelParams
    from .subsolve import check_condition, check_minmax_condition

    rng = np.random.default_rng(3)
    A = rng.standard_normal((6, 6))
    op = make_affine(np.eye(6) + (A - A.T), 0.3 * rng.standard_normal(6))
    dom = Ball(np.zeros(6), 1.0)
    cfg = SolverConfig(T=40, L=1.0, delta=0.1, seed=0, store_points=True, store_jacobians=True)
    _, tr = solve_vi(op, dom, cfg, JacobianSpec(kind="perturbed", perturb_delta=0.1))
    bad = 0
    for v, x, J, dl in zip(tr.points_v, tr.points_x, tr.jacobians, tr.deltas):
        mp = ModelParams(v=v, Fv=op(v), jac=J, eta=10.0, delta=dl, L=1.0)
        if not check_condition(mp, dom, x).ok:
            bad += 1
    cb = CubicBilinearOperator(d=5, rho=1e-3)
    cfg = SolverConfig(T=40, L=cb.L1, delta=0.22, seed=0, store_points=True, store_jacobians=True)
    _, tr = solve_minmax(cb, cfg, JacobianSpec(kind="damped-broyden", m=8, j0=0.22))
    for v, z, J, dl in zip(tr.points_v, tr.points_x, tr.jacobians, tr.deltas):
        mp = ModelParams(v=v, Fv=cb(v), jac=J, eta=10.0, delta=dl, L=cb.L1)
        if not check_minmax_condition(mp, z, 0.5).ok:
            bad += 1
    return bad == 0, f"{bad} acceptance-condition violations on replay"


def _suite_lambda_bracket() -> tuple[bool, str]:
    from .solve import BRACKET_MAIN

    rng = np.random.default_rng(4)
    A = rng.standard_normal((5, 5))
    op = make_affine(np.eye(5) + (A - A.T), 0.3 * rng.standard_normal(5))
    dom = Ball(np.zeros(5), 1.0)
    cfg = SolverConfig(T=60, L=1.0, delta=0.05, seed=0)
    _, tr = solve_vi(op, dom, cfg, JacobianSpec(kind="perturbed", perturb_delta=0.05))
    lo, hi = BRACKET_MAIN
    bad = sum(
        1
        for lam, step, dl in zip(tr.lam, tr.step_norm, tr.deltas)
        if not lo - 1e-12 <= lam * (0.5 * cfg.L * step + dl) <= hi + 1e-12
    )
    return bad == 0, f"{bad} iterations left the bracket"


def _suite_gap_rate() -> tuple[bool, str]:
    from .metrics import gap_affine_ball

    rng = np.random.default_rng(5)
    d = 10
    A = rng.standard_normal((d, d))
    M = np.eye(d) + (A - A.T)
    q = 0.3 * rng.standard_normal(d)
    op = make_affine(M, q)
    dom = Ball(np.zeros(d), 1.0)
    D, L, T = 2.0, 1.0, 100
    worst = -np.inf
    for delta in (0.0, 0.1):
        kind = "exact" if delta == 0.0 else "perturbed"
        cfg = SolverConfig(T=T, L=L, delta=delta, opt=0, seed=1)
        out, _ = solve_vi(op, dom, cfg, JacobianSpec(kind=kind, perturb_delta=delta))
        gap = gap_affine_ball(M, q, dom, out)
        bound = 16 * np.sqrt(2) * L * D**3 / T**1.5 + 16 * np.sqrt(2) * delta * D**2 / T
        worst = max(worst, gap - bound)
    return worst <= 0.0, f"worst gap minus bound {worst:.2e}"


CHECK_SUITES = {
    "woodbury": _suite_woodbury,
    "broyden": _suite_broyden,
    "taylor-bound": _suite_taylor_bound,
    "condition-replay": _suite_condition_replay,
    "lambda-bracket": _suite_lambda_bracket,
    "gap-rate": _suite_gap_rate,
}


def cmd_check(args) -> int:
    names = [n for n in CHECK_SUITES if args.filter is None or args.filter in n]
    if not names:
        print(f"no check suite matches {args.filter!r}", file=sys.stderr)
        return 2
    failed = 0
    for name in names:
        ok, detail = CHECK_SUITES[name]()
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="viqn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one (problem, solver) config and write its trace CSV")
    p_run.add_argument("config")
    p_run.add_argument("--out-dir", default=".")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--timing", action="store_true", help="write measured wall time into the CSV")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run a method suite; writes one CSV per method plus manifest.json")
    p_bench.add_argument("suite", help="suite JSON path, or 'default' for the built-in benchmark")
    p_bench.add_argument("--out-dir", default=".")
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_bench.add_argument("--timing", action="store_true")
    p_bench.set_defaults(func=cmd_bench)

    p_check = sub.add_parser("check", help="run the numeric invariant suites")
    p_check.add_argument("--filter", default=None, help="run only suites whose name contains this string")
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
