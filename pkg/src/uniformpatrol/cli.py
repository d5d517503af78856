"""Command-line front end.

Exit codes: 0 success, 1 verification or tolerance failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import extensions as ext
from .errors import PatrolError, UnreachableDelay
from .interception import AttackPlan, curve_to_csv, intercept_prob, interception_curve
from .networks import Family, build_matrix, build_network, param_space
from .serialize import dumps, fmt
from .stackelberg import Objective, SolveConfig, solve

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("PATROL_THREADS")
    if env is None:
        return 1
    try:
        k = int(env)
    except ValueError:
        raise UsageError(f"PATROL_THREADS must be an integer, got {env!r}") from None
    if k < 1:
        raise UsageError("PATROL_THREADS must be >= 1")
    return k


def _positive(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _floats(s: str) -> list[float]:
    try:
        return [float(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _sizes(s: str) -> list[int]:
    """'4', '2,3,5' or '2..8'."""
    try:
        if ".." in s:
            a, b = s.split("..")
            out = list(range(int(a), int(b) + 1))
        else:
            out = [int(t) for t in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {s!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty size list")
    return out


def _network(args, n=None):
    return build_network(Family.parse(args.family), args.n if n is None else n)


def _params(net, values):
    space = param_space(net)
    if values is None:
        raise UsageError(f"--params required: {','.join(space.names)}")
    return space.validate(values)


def _emit(text: str):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    if args.extension:
        return _solve_extension(args)
    if args.family is None or args.n is None or args.m is None:
        raise UsageError("solve needs --family, --n and --m (or --extension)")
    net = _network(args)
    cfg = SolveConfig(D=args.dmax, grid_resolution=args.grid, fix_reflection=args.fix_reflect,
                      workers=_threads(args))
    res = solve(net, args.m, cfg)
    if args.json:
        _emit(dumps(res.to_dict()))
    elif args.csv:
        _emit(curve_to_csv(res.delay_curve))
    else:
        params = ", ".join(f"{k}={v:.6f}" for k, v in res.params.items())
        lines = [
            f"{net.family.value}({net.n}) m={args.m} D={args.dmax}",
            f"  params   {params}",
            f"  attacker node {res.attacker_node}, delay {res.attacker_delay}",
            f"  value    {res.value:.10f}",
            f"  limit    {'n/a' if res.limit_value is None else f'{res.limit_value:.10f}'}",
        ]
        if res.center_value is not None:
            lines.append(f"  center   {res.center_value:.10f} (gap {res.indifference_gap:.2e})")
        lines.append(f"  evals    {res.diagnostics['evals']}")
        _emit("\n".join(lines))
    return EXIT_OK


def _solve_extension(args) -> int:
    D = args.dmax if args.dmax_set else 10
    if args.extension == "memory":
        res = ext.memory_solve(n=args.n or 3, D=D, conditioning=args.conditioning)
        disc = ext.memory_discrepancies(res) if (args.n or 3) == 3 else []
    else:
        from .stackelberg import solve as solve_
        no_vision = solve_(build_network("star_in_circle", 4), 2).value
        res = ext.vision_solve(D=D, conditioning=args.conditioning, no_vision_value=no_vision)
        disc = ext.vision_discrepancies(res)
    out = res.to_dict()
    out["discrepancies"] = disc
    if args.json:
        _emit(dumps(out))
    else:
        lines = [f"{out['extension']} D={D} conditioning={out['conditioning']}",
                 "  params   " + ", ".join(f"{k}={v:.6f}" for k, v in out["params"].items()),
                 f"  value    {out['value']:.10f}",
                 f"  attacker {out['attacker']}"]
        lines.append("  discrepancies with the printed figures:")
        for d in disc:
            lines.append(f"    - {d['item']}: printed {d['printed']}, computed {d['computed']}")
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_eval(args) -> int:
    net = _network(args)
    T = build_matrix(net, _params(net, args.params))
    if args.node not in net.nodes:
        raise UsageError(f"node {args.node} not in {net.family.value}({net.n})")
    reachable = True
    try:
        pi = intercept_prob(T, AttackPlan(args.node, args.delay, args.m))
    except UnreachableDelay as e:
        # the attacker's count never completes, so no attack takes place
        sys.stderr.write(f"note: {e}; no attack occurs, reporting 0\n")
        pi, reachable = 0.0, False
    if args.json:
        _emit(dumps({"family": net.family.value, "n": net.n, "node": args.node, "delay": args.delay,
                     "m": args.m, "pi": pi, "reachable": reachable}))
    else:
        _emit(fmt(pi))
    return EXIT_OK


def _parse_grid(net, spec: str) -> tuple[list[str], np.ndarray]:
    """'p=0:0.333:0.01,s=1' -> swept names and a lattice of full parameter vectors."""
    space = param_space(net)
    axes = {}
    for part in spec.split(","):
        if "=" not in part:
            raise UsageError(f"malformed grid term {part!r}; use name=lo:hi:step or name=value")
        name, rng = (t.strip() for t in part.split("=", 1))
        if name not in space.names:
            raise UsageError(f"unknown parameter {name!r}; expected one of {space.names}")
        try:
            bits = [float(t) for t in rng.split(":")]
        except ValueError:
            raise UsageError(f"malformed grid term {part!r}") from None
        if len(bits) == 1:
            axes[name] = np.array(bits)
        elif len(bits) == 3 and bits[2] > 0 and bits[1] >= bits[0]:
            k = int(np.floor((bits[1] - bits[0]) / bits[2] + 1e-9))
            axes[name] = bits[0] + bits[2] * np.arange(k + 1)
        else:
            raise UsageError(f"malformed grid term {part!r}; use name=lo:hi:step with step > 0")
    for name in space.names:
        if name not in axes:
            if name == space.reflection:
                axes[name] = np.array([1.0])
            else:
                raise UsageError(f"parameter {name!r} missing from --param-grid")
    mesh = np.stack(np.meshgrid(*[axes[n] for n in space.names], indexing="ij"), -1).reshape(-1, space.dim)
    swept = [n for n in space.names if len(axes[n]) > 1]
    return swept, mesh


def cmd_sweep(args) -> int:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    if args.delay_curve or args.away:
        if len(args.n) != 1:
            raise UsageError("--delay-curve/--away take a single --n")
        net = _network(args, args.n[0])
        T = build_matrix(net, _params(net, args.params))
        node = args.node or 1
        if args.away:
            from .dynamics import away_sequence

            seq = away_sequence(T, node - 1, args.dmax)
            w.writerow(["t"] + [f"x_{v}" for v in net.nodes])
            for x in seq.steps:
                w.writerow([x.t] + [fmt(v) for v in x.probs])
            _emit(out.getvalue())
            return EXIT_OK
        if args.m is None:
            raise UsageError("--delay-curve needs --m")
        _emit(curve_to_csv(interception_curve(T, node, args.m, args.dmax)))
        return EXIT_OK
    if args.param_grid is None or args.m is None:
        raise UsageError("sweep needs --m and one of --param-grid, --delay-curve, --away")
    header_done = False
    for n in args.n:
        net = _network(args, n)
        space = param_space(net)
        swept, X = _parse_grid(net, args.param_grid)
        ok = space.feasible(X)
        obj = Objective(net, args.m, args.dmax, center_closed_form=net.family is Family.STAR_IN_CIRCLE)
        vals = np.full(len(X), np.nan)
        if ok.any():
            vals[ok] = obj(space.clamp(X[ok]))
        if not header_done:
            w.writerow(["n"] + list(space.names) + ["value"])
            header_done = True
        for x, v in zip(X, vals):
            if np.isnan(v):
                continue
            w.writerow([n] + [fmt(t) for t in x] + [fmt(v)])
    _emit(out.getvalue())
    return EXIT_OK


def cmd_table(args) -> int:
    from .reproduce import reproduce_table

    cfg = SolveConfig(grid_resolution=args.grid, workers=_threads(args))
    rep = reproduce_table(args.id, cfg, solver=solve)
    if args.json:
        _emit(dumps(rep.to_dict()))
    else:
        _emit(rep.format())
        if not rep.ok:
            for r in rep.rows:
                for c in r.failures():
                    sys.stderr.write(f"table {rep.table} {r.label}: {c.name} computed {c.computed} printed {c.printed}\n")
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_simulate(args) -> int:
    from .montecarlo import SimConfig, simulate, simulate_extension

    cfg = SimConfig(trials=args.trials, seed=args.seed, burn_in=args.burn_in, max_periods=args.max_periods,
                    workers=_threads(args))
    if args.variant:
        if args.params is None:
            raise UsageError("--params required")
        if args.variant == "memory":
            if args.delay is None:
                raise UsageError("memory simulation needs --delay")
            response = args.delay
            analytic = ext.memory_intercept(ext.MemoryStarChain(*args.params, n=args.n or 3), args.delay, "exact")
        else:
            if args.edge == "attack-center":
                response = "attack_center"
                analytic = args.params[1]
            else:
                if args.edge is None or args.delay is None:
                    raise UsageError("vision simulation needs --edge and --delay")
                response = (args.edge, args.delay)
                analytic = ext.vision_intercept(ext.VisionChain(*args.params), args.edge, args.delay, "exact")
        est = simulate_extension(args.variant, tuple(args.params), response, cfg, n=args.n or 3)
    else:
        if None in (args.family, args.n, args.node, args.delay, args.m):
            raise UsageError("simulate needs --family --n --params --node --delay --m (or --variant)")
        net = _network(args)
        T = build_matrix(net, _params(net, args.params))
        plan = AttackPlan(args.node, args.delay, args.m)
        est = simulate(T, plan, cfg)
        try:
            analytic = intercept_prob(T, plan)
        except UnreachableDelay:
            analytic = None
    out = {"p_hat": est.p_hat, "stderr": est.stderr, "trials": est.trials, "truncated": est.truncated_trials,
           "seed": est.seed, "trials_completed": est.trials_completed, "rng": est.rng, "analytic": analytic}
    if args.json:
        _emit(dumps(out))
    else:
        line = f"p_hat={est.p_hat:.6f} stderr={est.stderr:.6f} trials={est.trials} truncated={est.truncated_trials}"
        if analytic is not None:
            line += f" analytic={analytic:.6f} z={(est.p_hat - analytic) / est.stderr if est.stderr else 0:+.2f}"
        _emit(line)
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import reproduce

    fn = reproduce.SUITES[args.suite]
    if args.suite == "montecarlo":
        checks = fn(trials=args.trials, workers=_threads(args))
    else:
        checks = fn()
    if args.json:
        _emit(dumps({"suite": args.suite, "ok": all(c.ok for c in checks), "checks": [c.to_dict() for c in checks]}))
    else:
        for c in checks:
            _emit(f"[{'ok' if c.ok else 'FAIL'}] {c.name}: {c.detail}")
    failed = [c for c in checks if not c.ok]
    for c in failed:
        sys.stderr.write(f"failed: {c.name}\n")
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _DmaxAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.dmax_set = True


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uniformpatrol", description="Uniformed patroller game solver")
    sub = ap.add_subparsers(dest="command", required=True)
    families = [f.value for f in Family]

    def common(p, family_required=False):
        p.add_argument("--family", type=str.lower, choices=families + ["star-in-circle"], required=family_required)
        p.add_argument("--threads", type=_positive, default=None, help="worker threads (default $PATROL_THREADS or 1)")
        p.add_argument("--json", action="store_true")

    p = sub.add_parser("solve", help="solve the max-min problem")
    common(p)
    p.add_argument("--n", type=_positive)
    p.add_argument("--m", type=_positive)
    p.add_argument("--dmax", type=_positive, default=15, action=_DmaxAction)
    p.add_argument("--grid", type=_positive, default=41)
    p.add_argument("--fix-reflect", action="store_true")
    p.add_argument("--csv", action="store_true", help="print the delay curve as CSV")
    p.add_argument("--extension", choices=["memory", "vision"])
    p.add_argument("--conditioning", choices=["normalized", "exact"], default="normalized")
    p.set_defaults(func=cmd_solve, dmax_set=False)

    p = sub.add_parser("eval", help="interception probability of one attack")
    common(p, family_required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--params", type=_floats, required=True)
    p.add_argument("--node", type=_positive, required=True)
    p.add_argument("--delay", type=_positive, required=True)
    p.add_argument("--m", type=_positive, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="CSV sweeps over parameters or delays")
    common(p, family_required=True)
    p.add_argument("--n", type=_sizes, required=True, help="size, list (2,3,4) or range (2..8)")
    p.add_argument("--m", type=_positive)
    p.add_argument("--dmax", type=_positive, default=15)
    p.add_argument("--param-grid", help="e.g. p=0:0.3333:0.01,s=1")
    p.add_argument("--delay-curve", action="store_true")
    p.add_argument("--away", action="store_true", help="away distributions x^(t), t=1..dmax")
    p.add_argument("--params", type=_floats)
    p.add_argument("--node", type=_positive)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table", help="reproduce a reference table")
    p.add_argument("--id", required=True, choices=["2", "3", "4", "5", "6", "7", "8", "9"])
    p.add_argument("--grid", type=_positive, default=41)
    p.add_argument("--threads", type=_positive, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of an interception probability")
    common(p)
    p.add_argument("--n", type=_positive)
    p.add_argument("--params", type=_floats)
    p.add_argument("--node", type=_positive)
    p.add_argument("--delay", type=_positive)
    p.add_argument("--m", type=_positive)
    p.add_argument("--variant", choices=["memory", "vision"])
    p.add_argument("--edge", choices=["center", "adjacent", "attack-center"])
    p.add_argument("--trials", type=_positive, default=1_000_000)
    p.add_argument("--seed", type=int, default=20240601)
    p.add_argument("--burn-in", type=int, default=1000)
    p.add_argument("--max-periods", type=_positive, default=100_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run an invariant suite")
    p.add_argument("--suite", required=True, choices=["closed-forms", "conjecture1", "extensions", "montecarlo"])
    p.add_argument("--trials", type=_positive, default=1_000_000)
    p.add_argument("--threads", type=_positive, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, PatrolError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
