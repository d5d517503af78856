"""The fourteen acceptance criteria, each at its stated tolerance.

Every test records one PASS/FAIL line (printed inline and again in the
terminal summary) and then asserts. A FAIL here is reported as is; the
analysis of each known failure lives outside the package.
"""

import math
from functools import lru_cache

import numpy as np
import pytest

import conftest
from uniformpatrol.extensions import (
    MemoryStarChain,
    VisionChain,
    memory_algebraic,
    memory_curve,
    memory_discrepancies,
    memory_solve,
    u2,
    u3,
    vision_adjacent_d2,
    vision_center_d2,
    vision_curve,
    vision_discrepancies,
    vision_responses,
    vision_solve,
)
from uniformpatrol.dynamics import stationary_away
from uniformpatrol.interception import (
    AttackPlan,
    closed_center,
    closed_complete,
    closed_star_m2,
    closed_star_m4,
    closed_star_odd,
    intercept_prob,
    interception_curve,
)
from uniformpatrol.networks import build_matrix, build_network, random_walk_params
from uniformpatrol.reproduce import delay_guard, load_reference, reproduce_table, run_montecarlo
from uniformpatrol.stackelberg import (
    SolveConfig,
    solve,
    star_asymptote_closed,
    star_asymptote_m4,
    star_optimum_m2,
    verify_conjecture_reflection,
)

pytestmark = pytest.mark.slow


@lru_cache(maxsize=None)
def _cached(family, n, m, config):
    return solve(build_network(family, n), m, config)


def cached_solve(net, m, config=None):
    return _cached(net.family.value, net.n, m, config)


def record(capsys, number, ok, detail):
    line = f"CRITERION {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE[number] = line
    with capsys.disabled():
        print("\n" + line)
    return ok


def table_detail(rep):
    bad = [f"{r.label} {c.name}={c.computed:.4f} vs {c.printed}" if isinstance(c.computed, float)
           else f"{r.label} {c.name}={c.computed} vs {c.printed}"
           for r in rep.rows for c in r.failures()]
    return f"table {rep.table}: {len(rep.rows)} rows, max dev {rep.max_deviation:.1e}" + (
        "; failing " + "; ".join(bad) if bad else "")


def test_01_closed_forms(capsys):
    errs = {}
    worst = 0.0
    for n in range(2, 9):
        net = build_network("star", n)
        for p in np.linspace(0.0, 1.0 / n, 11)[1:]:
            T = build_matrix(net, [p, 1.0])
            worst = max(worst, abs(intercept_prob(T, AttackPlan(1, 2, 2)) - closed_star_m2(n, p)))
    errs["star m=2"] = worst

    worst = 0.0
    for n in range(2, 9):
        net = build_network("star", n)
        T = build_matrix(net, random_walk_params(net))
        for m in (3, 5, 7):
            for d in range(1, 7):
                worst = max(worst, abs(intercept_prob(T, AttackPlan(1, d, m)) - closed_star_odd(n, m)))
    errs["star odd m"] = worst

    worst = 0.0
    for n in range(2, 10):
        net = build_network("star", n)
        for p in np.linspace(0.0, 1.0 / n, 11)[1:]:
            T = build_matrix(net, [p, 1.0])
            worst = max(worst, abs(intercept_prob(T, AttackPlan(1, 2, 4)) - closed_star_m4(n, p)))
    errs["star m=4"] = worst

    worst = 0.0
    for (n, m), v in {(3, 3): 3 / 4, (4, 2): 1 / 3, (4, 3): 5 / 9, (4, 4): 19 / 27}.items():
        net = build_network("complete", n)
        T = build_matrix(net, random_walk_params(net))
        worst = max(worst, abs(closed_complete(n, m) - v))
        for d in range(1, 6):
            worst = max(worst, abs(intercept_prob(T, AttackPlan(1, d, m)) - v))
    errs["complete"] = worst

    worst = 0.0
    for n in (3, 4, 5, 6):
        net = build_network("sic", n)
        for p, q, r in [(0.2, 0.3, 0.1), (0.2835, 0.1695, 1.0 / n), (0.1, 0.7, 0.5 / n)]:
            T = build_matrix(net, [p, q, r])
            for m in range(2, 7):
                for d in range(1, 6):
                    worst = max(worst, abs(intercept_prob(T, AttackPlan(net.center, d, m)) - closed_center(q, m)))
    errs["center attack"] = worst

    ok = max(errs.values()) <= 1e-12
    record(capsys, 1, ok, "max errors " + ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))
    assert ok


def test_02_star_m2_optimum(capsys):
    rows, bad = [], []
    for n in range(2, 9):
        res = cached_solve(build_network("star", n), 2)
        p, r, v = star_optimum_m2(n)
        got_r = 1 - n * res.params["p"]
        rows.append(got_r)
        if abs(res.value - v) > 1e-6 or abs(res.params["p"] - p) > 1e-4 or abs(got_r - r) > 1e-4:
            bad.append(n)
    n2 = cached_solve(build_network("star", 2), 2).value
    trend = all(a < b for a, b in zip(rows, rows[1:])) and rows[-1] < 0.5
    ok = not bad and abs(n2 - (3 - 2 * math.sqrt(2))) <= 1e-6 and trend
    record(capsys, 2, ok, f"n=2 V={n2:.9f} (3-2*sqrt2={3 - 2 * math.sqrt(2):.9f}); r_hat "
           + " ".join(f"{x:.4f}" for x in rows) + (f"; mismatched n={bad}" if bad else ""))
    assert ok


def test_03_table_2(capsys):
    rep = reproduce_table(2, solver=cached_solve)
    ok = rep.ok and len(rep.rows) == 8
    record(capsys, 3, ok, table_detail(rep))
    assert ok


def test_04_table_3(capsys):
    rep = reproduce_table(3, solver=cached_solve)
    ok = rep.ok and len(rep.rows) == 5
    record(capsys, 4, ok, table_detail(rep))
    assert ok


def test_05_node_dominance(capsys):
    reps = [reproduce_table(4), reproduce_table(6)]
    ok = all(r.ok for r in reps)
    record(capsys, 5, ok, " | ".join(table_detail(r) for r in reps))
    assert ok


def test_06_table_5(capsys):
    rep = reproduce_table(5, solver=cached_solve)
    ok = rep.ok and len(rep.rows) == 5
    record(capsys, 6, ok, table_detail(rep))
    assert ok


def test_07_circles(capsys):
    reps = [reproduce_table(7, solver=cached_solve), reproduce_table(8, solver=cached_solve)]
    s2, s5 = math.sqrt(2), math.sqrt(5)
    closed = {
        4: np.array([0, (2 - s2) / 2, s2 - 1, (2 - s2) / 2]),
        5: np.array([0, (3 - s5) / 4, (s5 - 1) / 4, (s5 - 1) / 4, (3 - s5) / 4]),
    }
    worst = 0.0
    for n, ps in ((4, np.linspace(0.05, 0.45, 9)), (5, np.linspace(0.05, 0.5, 10))):
        vecs = []
        for p in ps:
            x = stationary_away(build_matrix(build_network("circle", n), [p]), 0).probs
            vecs.append(x)
            worst = max(worst, np.abs(x - closed[n]).max())
        spread = np.ptp(np.array(vecs), axis=0).max()
        worst = max(worst, spread)
    ok = all(r.ok for r in reps) and worst <= 1e-10
    record(capsys, 7, ok, " | ".join(table_detail(r) for r in reps) + f" | stationary max err {worst:.1e}")
    assert ok


def test_08_table_9(capsys):
    rep = reproduce_table(9, solver=cached_solve)
    gaps = [c.computed for r in rep.rows for c in r.checks if c.name == "indifference"]
    ok = rep.ok and len(rep.rows) == 3 and len(gaps) == 3 and max(gaps) < 1e-3
    record(capsys, 8, ok, table_detail(rep) + f"; indifference gaps {' '.join(f'{g:.1e}' for g in gaps)}")
    assert ok


def test_09_asymptotics(capsys):
    r_inf, a = star_asymptote_m4()
    res = solve(build_network("star", 50), 4)
    nv = 50 * res.value
    ok = abs(r_inf - 0.20196) <= 1e-4 and abs(star_asymptote_closed() - r_inf) <= 1e-10 and abs(nv - 1.0944) <= 0.05
    record(capsys, 9, ok, f"r_inf={r_inf:.6f} (radical form {star_asymptote_closed():.6f}), "
           f"limit n*V={a:.6f}; Star(50) m=4 n*V={nv:.5f}, r_hat={1 - 50 * res.params['p']:.4f}")
    assert ok


def test_10_memory(capsys):
    ref = load_reference()["extensions"]["memory"]
    res = memory_solve(ref["n"], ref["D"])
    alg = memory_algebraic(ref["n"])
    tol = ref["tol"]
    close = all(abs(getattr(res, k) - ref[k]) <= tol for k in ("p", "s", "value"))
    alg_ok = abs(alg["value"] - res.value) <= 1e-8 and abs(alg["p"] - ref["p"]) <= tol
    seq_ok = all(
        np.array_equal(np.round(memory_curve(MemoryStarChain(s["p"], s["s"]), len(s["values"])), 3), s["values"])
        for s in ref["sequences"]
    )
    worst = 0.0
    for p in np.linspace(0.01, 1 / 3, 12):
        for s in np.linspace(0.0, 1 / 3 - 1e-3, 12):
            c = memory_curve(MemoryStarChain(p, s), 3)
            worst = max(worst, abs(c[1] - u2(p, s)), abs(c[2] - u3(p, s)))
    ok = close and alg_ok and seq_ok and worst <= 1e-12
    record(capsys, 10, ok, f"grid p={res.p:.4f} s={res.s:.4f} V={res.value:.4f} delays {res.delays}; "
           f"algebraic p={alg['p']:.4f} V={alg['value']:.4f}; sequences {'match' if seq_ok else 'differ'}; "
           f"u2/u3 err {worst:.1e}; {len(memory_discrepancies(res))} discrepancies reported")
    assert ok


def test_11_vision(capsys):
    worst = 0.0
    for p in np.linspace(0.0, 0.45, 7):
        for q in np.linspace(0.0, 1 - 2 * p, 5):
            for r in np.linspace(0.0, 0.25, 6):
                ch = VisionChain(p, q, r)
                worst = max(worst, abs(vision_curve(ch, "center", 2)[1] - vision_center_d2(p, r)),
                            abs(vision_curve(ch, "adjacent", 2)[1] - vision_adjacent_d2(p, q, r)))
    no_vision = cached_solve(build_network("sic", 4), 2).value
    res = vision_solve(10, no_vision_value=no_vision)
    resp = vision_responses(VisionChain(res.p, res.q, res.r), 10)
    certified = abs(min(v["value"] for v in resp.values()) - res.value) <= 1e-12
    # no sampled feasible point may beat the reported max-min
    rng = np.random.default_rng(11)
    probe = 0.0
    for _ in range(2000):
        p = rng.uniform(0, 0.5)
        q = rng.uniform(0, 1 - 2 * p)
        r = rng.uniform(0, 0.25)
        probe = max(probe, min(v["value"] for v in vision_responses(VisionChain(p, q, r), 10).values()))
    disc = vision_discrepancies(res)
    ok = worst <= 1e-12 and certified and probe <= res.value + 1e-12 and res.value <= no_vision and bool(disc)
    record(capsys, 11, ok, f"d=2 formula err {worst:.1e}; optimum (p,q,r)=({res.p:.4f},{res.q:.4f},{res.r:.4f}) "
           f"V={res.value:.6f} vs printed (0.25,0.1667,0.25)/0.1667; best sampled {probe:.6f}; "
           f"no-vision {no_vision:.4f}; {len(disc)} discrepancies reported")
    assert ok


def test_12_montecarlo(capsys):
    results = run_montecarlo(1_000_000)
    bad = [r["name"] for r in results if not r["ok"]]
    worst = max(abs(r["z"]) for r in results)
    ok = len(results) >= 12 and not bad and all(r["estimate"].trials == 1_000_000 for r in results)
    record(capsys, 12, ok, f"{len(results)} scenarios at 1e6 trials, max |z|={worst:.2f}"
           + (f"; outside 3 sigma: {bad}" if bad else ""))
    assert ok


def test_13_conjecture_reflection(capsys):
    cfg = SolveConfig()
    reflections = {}
    for fam, n in (("star", 2), ("star", 3), ("star", 4), ("line", 4), ("line", 5)):
        for m in (2, 3, 4):
            rep = verify_conjecture_reflection(build_network(fam, n), m, cfg)
            reflections[f"{fam}{n} m={m}"] = rep.reflection
    low = {k: v for k, v in reflections.items() if v <= 1 - 1e-3}
    ok = not low
    record(capsys, 13, ok, f"{len(reflections)} free-reflection solves, min reflection {min(reflections.values()):.6f}"
           + (f"; below threshold {low}" if low else ""))
    assert ok


def test_14_delay_guard(capsys):
    ref = load_reference()["tables"]
    bad, count, worst = [], 0, -np.inf
    for spec in ref.values():
        if spec["kind"] == "compare":
            continue
        for row in spec["rows"]:
            if spec["kind"] == "star_m4":
                net, m = build_network("star", row["n"]), spec["m"]
            else:
                net, m = build_network(spec["family"], spec["n"]), row["m"]
            g = delay_guard(cached_solve(net, m), 200)
            count += 1
            worst = max(worst, g.dip)
            if not g.ok(1e-9):
                bad.append(f"{net} m={m} dips {g.dip:.1e} at d={g.curve_argmin}")
    ok = not bad
    record(capsys, 14, ok, f"{count} table optima checked to d=200, max dip {worst:.1e}"
           + (f"; {'; '.join(bad)}" if bad else ""))
    assert ok
