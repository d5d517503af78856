"""Max-min (Stackelberg) solver over family-specific patrol parameters.

The patroller announces parameters; the attacker replies with the
(node, delay) pair that minimises the interception probability. The
outer maximisation runs a coarse lattice, then a derivative-free pattern
search from the best lattice points. The objective has kinks wherever
the minimising delay switches, so no gradients are used.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .dynamics import is_irreducible
from .interception import (
    InterceptionCurve,
    batch_curves,
    best_response,
    closed_center,
    closed_star_m4,
    interception_curve,
)
from .networks import Family, Network, build_matrices, build_matrix, build_network, param_space


@dataclass(frozen=True)
class SolveConfig:
    D: int = 15
    grid_resolution: int = 41
    refine_tol: float = 1e-10
    multistart: int = 5
    fix_reflection: bool = False
    # lattice is coarsened per axis when resolution**dim would exceed this
    max_grid_points: int = 2_000_000
    # delays within tie_tol of the min are reported as co-minimisers
    tie_tol: float = 1e-10
    workers: int = 1
    chunk: int = 20_000
    nodes: tuple[int, ...] | None = None
    polish: bool = True

    def __post_init__(self):
        if self.grid_resolution < 3:
            raise ValueError("grid_resolution must be >= 3")
        if self.refine_tol <= 0:
            raise ValueError("refine_tol must be > 0")
        if self.D < 1:
            raise ValueError("D must be >= 1")
        if self.multistart < 1:
            raise ValueError("multistart must be >= 1")


@dataclass
class SolveResult:
    network: Network
    m: int
    D: int
    names: tuple[str, ...]
    x: np.ndarray
    attacker_node: int
    attacker_delay: int
    value: float
    limit_value: float | None
    delay_curve: InterceptionCurve
    minimizers: tuple[tuple[int, int], ...]
    per_node: dict
    diagnostics: dict = field(default_factory=dict)
    center_value: float | None = None

    @property
    def params(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.names, self.x)}

    @property
    def indifference_gap(self) -> float | None:
        if self.center_value is None:
            return None
        end = self.per_node.get(1)
        return None if end is None else abs(end[1] - self.center_value)

    def matrix(self) -> np.ndarray:
        return build_matrix(self.network, self.x)

    def to_dict(self) -> dict:
        out = {
            "family": self.network.family.value,
            "n": self.network.n,
            "m": self.m,
            "D": self.D,
            "params": self.params,
            "attacker": {"node": self.attacker_node, "delay": self.attacker_delay},
            "value": self.value,
            "limit_value": self.limit_value,
            "delay_curve": [
                {"d": pt.d, "pi": pt.pi, "reachable": pt.reachable}
                for pt in self.delay_curve.points
            ],
            "minimizers": [{"node": v, "delay": d} for v, d in self.minimizers],
            "per_node": {str(v): {"delay": d, "value": val} for v, (d, val) in self.per_node.items()},
            "diagnostics": self.diagnostics,
        }
        if self.center_value is not None:
            out["center_value"] = self.center_value
            out["indifference_gap"] = self.indifference_gap
        return out


# ---------------------------------------------------------------------------
# objective


class Objective:
    """Batched min over attacker responses for one (network, m, D)."""

    def __init__(self, network: Network, m: int, D: int, nodes=None, center_closed_form=False):
        self.network = network
        self.m = m
        self.D = D
        self.nodes = tuple(nodes) if nodes is not None else network.representatives()
        self.center_closed_form = center_closed_form
        if center_closed_form:
            c = network.center
            self.nodes = tuple(v for v in self.nodes if v != c)
            self._q = param_space(network).names.index("q")
        self.evals = 0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        self.evals += len(X)
        T = build_matrices(self.network, X)
        best = np.full(len(X), np.inf)
        for v in self.nodes:
            best = np.minimum(best, batch_curves(T, v, self.m, self.D).min(axis=1))
        if self.center_closed_form:
            best = np.minimum(best, closed_center(X[:, self._q], self.m))
        # A reducible patrol ends up confined to a closed class; any node
        # outside it is attacked unopposed.
        best[~is_irreducible(T)] = 0.0
        best[np.isinf(best)] = 0.0
        return best


def _evaluate_chunks(obj: Objective, X: np.ndarray, chunk: int, workers: int) -> np.ndarray:
    parts = [X[i : i + chunk] for i in range(0, len(X), chunk)]
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(obj, parts))
    else:
        vals = [obj(p) for p in parts]
    return np.concatenate(vals) if vals else np.empty(0)


def _directions(free: list[int], dim: int) -> np.ndarray:
    """Coordinate and pairwise-diagonal poll directions over free axes."""
    dirs = []
    for i in free:
        for s in (1.0, -1.0):
            e = np.zeros(dim)
            e[i] = s
            dirs.append(e)
    for i, j in itertools.combinations(free, 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            e = np.zeros(dim)
            e[i], e[j] = si, sj
            dirs.append(e)
    return np.array(dirs).reshape(-1, dim)


def pattern_search(obj, space, x0, step0, free, tol, max_iter=20_000):
    """Compass search with step halving; box is clamped, linear constraints reject.

    ``step0`` is a fraction of each coordinate's range.
    """
    lo, hi = np.asarray(space.lower), np.asarray(space.upper)
    scale = hi - lo
    dirs = _directions(free, space.dim)
    x = np.asarray(x0, dtype=float)
    fx = float(obj(x[None])[0])
    step = step0
    it = 0
    while step > tol and it < max_iter:
        it += 1
        cand = np.clip(x + step * dirs * scale, lo, hi)
        cand = cand[space.feasible(cand) & np.any(cand != x, axis=1)]
        if len(cand):
            vals = obj(cand)
            k = int(np.argmax(vals))
            if vals[k] > fx:
                x, fx = cand[k], float(vals[k])
                continue
        step *= 0.5
    return x, fx, it


def polish(obj, space, x0, free, tol=1e-12, max_iter=4000):
    """Nelder-Mead over the free coordinates, infeasible points scored -1.

    Compass moves stall on ridges where two delays tie and the ridge is
    not aligned with a poll direction; the simplex follows such ridges.
    """
    x0 = np.asarray(x0, dtype=float)
    free = list(free)
    if not free:
        return x0, float(obj(x0[None])[0])

    def neg(z):
        x = x0.copy()
        x[free] = z
        if not space.feasible(x[None])[0]:
            return 1.0
        return -float(obj(space.clamp(x)[None])[0])

    res = minimize(
        neg,
        x0[free],
        method="Nelder-Mead",
        options={"xatol": tol, "fatol": 1e-15, "maxiter": max_iter, "initial_simplex": None},
    )
    x = x0.copy()
    x[free] = res.x
    x = space.clamp(x)
    return x, float(obj(x[None])[0])


def _resolution(cfg: SolveConfig, n_free: int) -> int:
    if n_free == 0:
        return 1
    cap = int(math.floor(cfg.max_grid_points ** (1.0 / n_free) + 1e-9))
    return max(3, min(cfg.grid_resolution, cap))


def _optimize(network: Network, m: int, cfg: SolveConfig, center_closed_form: bool):
    space = param_space(network)
    fixed = {}
    if cfg.fix_reflection and space.reflection is not None:
        fixed[space.reflection] = 1.0
    free = [i for i, nm in enumerate(space.names) if nm not in fixed]
    obj = Objective(network, m, cfg.D, cfg.nodes, center_closed_form)

    res = _resolution(cfg, len(free))
    grid = space.grid(res, fixed)
    vals = _evaluate_chunks(obj, grid, cfg.chunk, cfg.workers)
    grid_evals = obj.evals

    order = np.argsort(-vals, kind="stable")
    starts = []
    for k in order:
        if len(starts) >= cfg.multistart:
            break
        if all(np.max(np.abs(grid[k] - s)) > 1e-12 for s in starts):
            starts.append(grid[k])
    step0 = 1.0 / (res - 1) if res > 1 else 0.0

    best_x, best_f, iters = None, -np.inf, []
    polished = 0
    for s in starts:
        x, fx, it = pattern_search(obj, space, s, step0, free, cfg.refine_tol)
        iters.append(it)
        if cfg.polish:
            y, fy = polish(obj, space, x, free)
            if fy > fx + 1e-15:
                # a final compass pass from the simplex point
                x, fx, _ = pattern_search(obj, space, y, 1e-4, free, cfg.refine_tol)
                polished += 1
        if fx > best_f + 1e-15:
            best_x, best_f = x, fx
    snapped = False
    if space.reflection is not None and best_x is not None:
        # Flat directions: the value is often insensitive to leaf reflection
        # (e.g. star, m=2). Among equal-value maximisers prefer reflecting.
        k = space.names.index(space.reflection)
        if best_x[k] != 1.0:
            y = best_x.copy()
            y[k] = 1.0
            fy = float(obj(y[None])[0])
            if space.feasible(y[None])[0] and fy >= best_f - 1e-12:
                best_x, best_f, snapped = y, fy, True
    diag = {
        "evals": obj.evals,
        "grid_evals": grid_evals,
        "grid_resolution": res,
        "grid_best": float(vals[order[0]]),
        "refine_iterations": iters,
        "stage": "pattern_search",
        "starts": len(starts),
        "polished": polished,
        "reflection_snapped": snapped,
    }
    return space, best_x, best_f, diag


def _finalize(network, m, cfg, space, x, diag, center_closed_form=False) -> SolveResult:
    T = build_matrix(network, x)
    nodes = cfg.nodes if cfg.nodes is not None else network.representatives()
    center_value = None
    if center_closed_form:
        # The center attack is d-invariant, so the reported delay is the
        # end-attack minimiser unless the center is strictly better.
        center_value = closed_center(float(x[space.names.index("q")]), m)
        ends = tuple(v for v in nodes if v != network.center)
        br = best_response(T, m, cfg.D, nodes=ends, tie_tol=cfg.tie_tol)
        br.per_node[network.center] = (1, center_value)
        if center_value < br.value - cfg.tie_tol:
            node, delay, value = network.center, 1, center_value
            minimizers = ((network.center, 1),)
        else:
            node, delay, value = br.node, br.delay, min(br.value, center_value)
            minimizers = br.minimizers
            if center_value <= br.value + cfg.tie_tol:
                minimizers = minimizers + ((network.center, 1),)
        per_node = br.per_node
    else:
        br = best_response(T, m, cfg.D, nodes=nodes, tie_tol=cfg.tie_tol)
        node, delay, value, minimizers, per_node = br.node, br.delay, br.value, br.minimizers, br.per_node
    curve = interception_curve(T, node, m, cfg.D)
    return SolveResult(
        network=network,
        m=m,
        D=cfg.D,
        names=space.names,
        x=np.asarray(x, dtype=float),
        attacker_node=node,
        attacker_delay=delay,
        value=value,
        limit_value=curve.limit,
        delay_curve=curve,
        minimizers=minimizers,
        per_node=per_node,
        diagnostics=diag,
        center_value=center_value,
    )


def solve(network: Network, m: int, config: SolveConfig | None = None) -> SolveResult:
    if m < 2:
        raise ValueError("attack duration m must be >= 2")
    if network.family is Family.STAR_IN_CIRCLE:
        return solve_star_in_circle(network, m, config)
    cfg = config or SolveConfig()
    space, x, _, diag = _optimize(network, m, cfg, center_closed_form=False)
    return _finalize(network, m, cfg, space, x, diag)


def solve_star_in_circle(network: Network, m: int, config: SolveConfig | None = None) -> SolveResult:
    """Max-min with the center attack scored by its closed form 1-(1-q)^(m-1)."""
    if network.family is not Family.STAR_IN_CIRCLE:
        raise ValueError("solve_star_in_circle needs a star_in_circle network")
    cfg = config or SolveConfig()
    space, x, _, diag = _optimize(network, m, cfg, center_closed_form=True)
    return _finalize(network, m, cfg, space, x, diag, center_closed_form=True)


def objective_value(network: Network, x, m: int, D: int, nodes=None) -> float:
    """Generic min over responses at one parameter point."""
    return float(Objective(network, m, D, nodes)(np.asarray(x, dtype=float)[None])[0])


# ---------------------------------------------------------------------------
# star closed forms and asymptotics


def star_optimum_m2(n: int) -> tuple[float, float, float]:
    """(p_hat, r_hat, V) for the star with m = 2."""
    root = math.sqrt(n * (n - 1))
    return 1.0 - root / n, root - (n - 1), (2 * n - 1) - 2 * root


def star_asymptote_m4() -> tuple[float, float]:
    """(r_inf, a): limiting stay-at-center probability and n*V for m = 4.

    The printed quartic r^4 - 2r^3 + 3r^2 - r - 1 is the limit of n*pi
    up to sign; ``a`` is returned positive, as an interception rate must be.
    """
    roots = np.roots([4.0, -6.0, 6.0, -1.0])
    real = [z.real for z in roots if abs(z.imag) < 1e-12 and 0.0 <= z.real <= 1.0]
    r = float(real[0])
    poly = r**4 - 2 * r**3 + 3 * r**2 - r - 1
    return r, -poly


def star_asymptote_closed() -> float:
    """r_inf from the printed radical expression."""
    t = math.sqrt(2.0) - 1.0
    return 0.5 * (1.0 - t ** (-1.0 / 3.0) + t ** (1.0 / 3.0))


def star_m4_value(n: int, p: float) -> float:
    return closed_star_m4(n, p)


@dataclass(frozen=True)
class ReflectionReport:
    network: str
    m: int
    reflection_param: str
    reflection: float
    free_value: float
    fixed_value: float
    gap: float
    free_params: dict

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_conjecture_reflection(network: Network, m: int, config: SolveConfig | None = None) -> ReflectionReport:
    """Solve with the leaf-reflection probability free and fixed at 1."""
    space = param_space(network)
    if space.reflection is None or not network.leaves:
        raise ValueError(f"{network} has no leaf nodes")
    cfg = config or SolveConfig()
    free = solve(network, m, replace(cfg, fix_reflection=False))
    fixed = solve(network, m, replace(cfg, fix_reflection=True))
    refl = free.params[space.reflection]
    return ReflectionReport(
        network=str(network),
        m=m,
        reflection_param=space.reflection,
        reflection=refl,
        free_value=free.value,
        fixed_value=fixed.value,
        gap=free.value - fixed.value,
        free_params=free.params,
    )


def solve_family(family, n: int, m: int, config: SolveConfig | None = None) -> SolveResult:
    return solve(build_network(family, n), m, config)
