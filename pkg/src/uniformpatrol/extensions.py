"""Two model variants solved on small conditional chains.

Memory patroller (star): at the center the patroller remembers whether
it arrived from an end (state ``ec``) or stayed (state ``cc``) and moves
to each end with probability ``s`` or ``p`` respectively. Ends always
reflect. The attacker sits at one end E.

Edge vision (star-in-circle E4, m = 2): the attacker sees which edge the
patroller uses to leave the attacked end and times the attack from that event.
States are C (center), A (adjacent end) and O (opposite end).

Both chains are evolved in one of two ways. ``"normalized"`` multiplies by the
row-normalised non-return matrix, x <- x A, which is the recursion that
reproduces the reference payoff sequences. ``"exact"`` applies Bayesian
conditioning, x <- normalise(x S) with S the sub-stochastic transitions
that avoid E. The two agree for the first two periods and drift apart
after that because the row normalisation ignores that rows differ in how
likely they are to re-enter E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidParams
from .networks import Family, ParamSpace, PARAM_TOL
from .stackelberg import pattern_search, polish, star_optimum_m2

MEMORY_STATES = ("cc", "ec", "e")
VISION_STATES = ("C", "A", "O")


class Conditioning(str, Enum):
    NORMALIZED = "normalized"
    EXACT = "exact"


class LeaveEdge(str, Enum):
    CENTER = "center"
    ADJACENT = "adjacent"

    @classmethod
    def parse(cls, s) -> "LeaveEdge":
        if isinstance(s, cls):
            return s
        key = str(s).strip().lower()
        aliases = {"c": cls.CENTER, "center": cls.CENTER, "a": cls.ADJACENT, "adjacent": cls.ADJACENT}
        if key not in aliases:
            raise ValueError(f"unknown leave edge {s!r}; expected center or adjacent")
        return aliases[key]


def _evolve(x0: np.ndarray, S: np.ndarray, A: np.ndarray, steps: int, mode: Conditioning) -> np.ndarray:
    """Rows x^1..x^(steps+1) starting from x^1 = x0."""
    mode = Conditioning(mode)
    out = np.empty((steps + 1, len(x0)))
    x = np.asarray(x0, dtype=float)
    out[0] = x
    for k in range(steps):
        if mode is Conditioning.NORMALIZED:
            x = x @ A
        else:
            y = x @ S
            x = y / y.sum()
        out[k + 1] = x
    return out


# ---------------------------------------------------------------------------
# memory patroller


@dataclass(frozen=True)
class MemoryStarChain:
    p: float  # center -> each end, after staying at the center
    s: float  # center -> each end, just after arriving from an end
    n: int = 3

    def __post_init__(self):
        if self.n < 2:
            raise InvalidParams(f"memory star needs n >= 2, got {self.n}")
        for name, v in (("p", self.p), ("s", self.s)):
            if not (-PARAM_TOL <= v <= 1.0 / self.n + PARAM_TOL):
                raise InvalidParams(f"{name}={v} outside [0, 1/{self.n}]")

    def substochastic(self) -> np.ndarray:
        """Transitions among (cc, ec, e) that avoid the attacked end."""
        n, p, s = self.n, self.p, self.s
        return np.array(
            [
                [1 - n * p, 0.0, (n - 1) * p],
                [1 - n * s, 0.0, (n - 1) * s],
                [0.0, 1.0, 0.0],
            ]
        )

    def matrix(self) -> np.ndarray:
        """Row-normalised non-return matrix A."""
        S = self.substochastic()
        return S / S.sum(axis=1, keepdims=True)

    @property
    def payoff(self) -> np.ndarray:
        return np.array([self.p, self.s, 0.0])


def memory_sequence(chain: MemoryStarChain, D: int, conditioning="normalized") -> np.ndarray:
    """Away distributions x^1..x^D over (cc, ec, e); x^1 = (0, 1, 0)."""
    if D < 1:
        raise ValueError("D must be >= 1")
    return _evolve(np.array([0.0, 1.0, 0.0]), chain.substochastic(), chain.matrix(), D - 1, conditioning)


def memory_curve(chain: MemoryStarChain, D: int = 10, conditioning="normalized") -> np.ndarray:
    return memory_sequence(chain, D, conditioning) @ chain.payoff


def memory_intercept(chain: MemoryStarChain, d: int, conditioning="normalized") -> float:
    """P(intercept) for an m = 2 attack at an end after d periods away."""
    if d < 1:
        raise ValueError("delay must be >= 1")
    return float(memory_curve(chain, d, conditioning)[-1])


def u2(p: float, s: float) -> float:
    return p * (1 - 3 * s) / (1 - s)


def u3(p: float, s: float) -> float:
    return p * (1 - 3 * p) * (1 - 3 * s) / ((1 - p) * (1 - s)) + 2 * s**2 / (1 - s)


def s_hat(p: float) -> float:
    """The s solving u2(p, s) = u3(p, s)."""
    return (-3 * p**2 + math.sqrt(4 * p**2 - 4 * p**3 + 9 * p**4)) / (2 * (1 - p))


def u_common(p: float) -> float:
    """u2 = u3 along s = s_hat(p), written in closed form."""
    w = math.sqrt(4 - 4 * p + 9 * p**2)
    return p * (2 - 2 * p + 9 * p**2 - 3 * p * w) / (2 - 2 * p + 3 * p**2 - p * w)


@dataclass
class MemorySolveResult:
    n: int
    D: int
    conditioning: str
    p: float
    s: float
    value: float
    delays: tuple[int, ...]
    curve: np.ndarray
    algebraic: dict
    memoryless_value: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def gain(self) -> float:
        return self.value / self.memoryless_value - 1.0

    @property
    def stay_cc(self) -> float:
        return 1.0 - self.n * self.p

    @property
    def stay_ec(self) -> float:
        return 1.0 - self.n * self.s

    def to_dict(self) -> dict:
        return {
            "extension": "memory_star",
            "n": self.n,
            "m": 2,
            "D": self.D,
            "conditioning": self.conditioning,
            "params": {"p": self.p, "s": self.s},
            "value": self.value,
            "attacker": {"delays": list(self.delays)},
            "delay_curve": [{"d": d + 1, "pi": float(v)} for d, v in enumerate(self.curve)],
            "stay": {"cc": self.stay_cc, "ec": self.stay_ec},
            "algebraic": self.algebraic,
            "memoryless_value": self.memoryless_value,
            "gain": self.gain,
            "diagnostics": self.diagnostics,
        }


def memory_space(n: int) -> ParamSpace:
    return ParamSpace(Family.STAR, n, ("p", "s"), (0.0, 0.0), (1.0 / n, 1.0 / n))


def _memory_objective(n: int, D: int, conditioning):
    mode = Conditioning(conditioning)

    def f(X):
        X = np.atleast_2d(X)
        p, s = X[:, 0], X[:, 1]
        z = np.zeros_like(p)
        S = np.stack(
            [
                np.stack([1 - n * p, z, (n - 1) * p], -1),
                np.stack([1 - n * s, z, (n - 1) * s], -1),
                np.stack([z, z + 1, z], -1),
            ],
            1,
        )
        rows = S.sum(axis=2, keepdims=True)
        A = S / np.where(rows > 0, rows, 1.0)
        pay = np.stack([p, s, z], -1)
        x = np.zeros((len(X), 3))
        x[:, 1] = 1.0
        best = np.einsum("bi,bi->b", x, pay)
        for _ in range(D - 1):
            if mode is Conditioning.NORMALIZED:
                x = np.einsum("bi,bij->bj", x, A)
            else:
                y = np.einsum("bi,bij->bj", x, S)
                tot = y.sum(axis=1, keepdims=True)
                x = y / np.where(tot > 0, tot, 1.0)
            best = np.minimum(best, np.einsum("bi,bi->b", x, pay))
        return best

    return f


def memory_algebraic(n: int = 3) -> dict:
    """Maximise u_common over p; only meaningful for n = 3."""
    if n != 3:
        raise ValueError("the two-delay algebraic route is derived for n = 3")
    res = minimize_scalar(lambda p: -u_common(p), bounds=(1e-9, 1.0 / 3), method="bounded", options={"xatol": 1e-12})
    p = float(res.x)
    s = s_hat(p)
    return {"p": p, "s": s, "value": u_common(p), "u2": u2(p, s), "u3": u3(p, s)}


def memory_solve(
    n: int = 3,
    D: int = 10,
    grid_resolution: int = 101,
    conditioning="normalized",
    refine_tol: float = 1e-10,
    tie_tol: float = 1e-6,
) -> MemorySolveResult:
    """Max over (p, s) in [0, 1/n]^2 of min over d <= D, by lattice then pattern search."""
    space = memory_space(n)
    obj = _memory_objective(n, D, conditioning)
    grid = space.grid(grid_resolution)
    vals = obj(grid)
    order = np.argsort(-vals, kind="stable")[:5]
    best_x, best_f = None, -np.inf
    for k in order:
        x, fx, _ = pattern_search(obj, space, grid[k], 1.0 / (grid_resolution - 1), [0, 1], refine_tol)
        y, fy = polish(obj, space, x, [0, 1])
        if fy > fx:
            x, fx = y, fy
        if fx > best_f:
            best_x, best_f = x, fx
    chain = MemoryStarChain(float(best_x[0]), float(best_x[1]), n)
    curve = memory_curve(chain, D, conditioning)
    v = float(curve.min())
    delays = tuple(int(d) + 1 for d in np.flatnonzero(curve <= v + tie_tol))
    alg = memory_algebraic(n) if n == 3 else {}
    return MemorySolveResult(
        n=n,
        D=D,
        conditioning=Conditioning(conditioning).value,
        p=chain.p,
        s=chain.s,
        value=v,
        delays=delays,
        curve=curve,
        algebraic=alg,
        memoryless_value=star_optimum_m2(n)[2],
        diagnostics={"grid_resolution": grid_resolution, "grid_best": float(vals[order[0]])},
    )


def memory_discrepancies(result: MemorySolveResult) -> list[dict]:
    """Printed figures that the computation does not reproduce as stated."""
    out = [
        {
            "item": "optimal s",
            "printed": [0.217, 0.136],
            "computed": result.s,
            "note": "two different printed values; the computation agrees with 0.217, 0.136 is the game value",
        },
        {
            "item": "relative gain over the memoryless patroller",
            "printed": [0.34, 0.36],
            "computed": result.gain,
            "note": "the unrounded ratio gives about 35%; 34% follows from the rounded 0.136/0.101, "
            "36% is not reproduced",
        },
    ]
    chain = MemoryStarChain(0.3, 0.21, 3)
    x3 = memory_sequence(chain, 3)[2]
    out.append(
        {
            "item": "middle entry of x^3",
            "printed": "4s/(1-s)",
            "computed": float(x3[1]),
            "note": f"equals 2s/(1-s) = {2 * 0.21 / 0.79:.6f} at s=0.21; only 2s/(1-s) is consistent with u3",
        }
    )
    return out


# ---------------------------------------------------------------------------
# edge-vision attacker on E4


@dataclass(frozen=True)
class VisionChain:
    p: float  # end -> each adjacent end
    q: float  # end -> center
    r: float  # center -> each end

    def __post_init__(self):
        tol = PARAM_TOL
        if min(self.p, self.q, self.r) < -tol or 2 * self.p + self.q > 1 + tol or 4 * self.r > 1 + tol:
            raise InvalidParams(f"(p, q, r)=({self.p}, {self.q}, {self.r}) infeasible for E4")
        if self.p >= 1 - tol or self.r >= 1 - tol:
            raise InvalidParams("p and r must be < 1")

    @property
    def a(self) -> float:
        return 1.0 - 2 * self.p - self.q

    @property
    def b(self) -> float:
        return 1.0 - 4 * self.r

    def substochastic(self) -> np.ndarray:
        """Transitions among (C, A, O) that avoid the attacked end."""
        p, q, r, a, b = self.p, self.q, self.r, self.a, self.b
        return np.array([[b, 2 * r, r], [q, a, p], [q, 2 * p, a]])

    def matrix(self) -> np.ndarray:
        """Row-normalised non-return matrix M."""
        S = self.substochastic()
        return S / S.sum(axis=1, keepdims=True)

    @property
    def payoff(self) -> np.ndarray:
        """One-step return probability to the attacked end from C, A, O."""
        return np.array([self.r, self.p, 0.0])


def vision_sequence(chain: VisionChain, edge, D: int, conditioning="normalized") -> np.ndarray:
    edge = LeaveEdge.parse(edge)
    x1 = np.array([1.0, 0.0, 0.0]) if edge is LeaveEdge.CENTER else np.array([0.0, 1.0, 0.0])
    return _evolve(x1, chain.substochastic(), chain.matrix(), D - 1, conditioning)


def vision_curve(chain: VisionChain, edge, D: int = 10, conditioning="normalized") -> np.ndarray:
    return vision_sequence(chain, edge, D, conditioning) @ chain.payoff


def vision_intercept(chain: VisionChain, edge, d: int, conditioning="normalized") -> float:
    """m = 2 attack at an end, d periods after the patroller left by ``edge``."""
    if d < 1:
        raise ValueError("delay must be >= 1")
    return float(vision_curve(chain, edge, d, conditioning)[-1])


def vision_center_d2(p: float, r: float) -> float:
    """Leave via the center, attack at d = 2."""
    return r * (1 + 2 * p - 4 * r) / (1 - r)


def vision_adjacent_d2(p: float, q: float, r: float) -> float:
    """Leave via an adjacent end, attack at d = 2."""
    return (p * (1 - q) + q * r - 2 * p**2) / (1 - p)


def vision_space() -> ParamSpace:
    return ParamSpace(
        Family.STAR_IN_CIRCLE,
        4,
        ("p", "q", "r"),
        (0.0, 0.0, 0.0),
        (0.5, 1.0, 0.25),
        constraints=(((2.0, 1.0, 0.0), 1.0),),
    )


def _vision_objective(D: int, conditioning, split: bool = False):
    mode = Conditioning(conditioning)

    def curves(X):
        X = np.atleast_2d(X)
        p, q, r = X[:, 0], X[:, 1], X[:, 2]
        a, b = 1 - 2 * p - q, 1 - 4 * r
        S = np.stack(
            [np.stack([b, 2 * r, r], -1), np.stack([q, a, p], -1), np.stack([q, 2 * p, a], -1)],
            1,
        )
        rows = S.sum(axis=2, keepdims=True)
        A = S / np.where(rows > 0, rows, 1.0)
        pay = np.stack([r, p, np.zeros_like(p)], -1)
        out = []
        for start in (1, 0):  # adjacent, center
            x = np.zeros((len(X), 3))
            x[:, start] = 1.0
            vals = [np.einsum("bi,bi->b", x, pay)]
            for _ in range(D - 1):
                if mode is Conditioning.NORMALIZED:
                    x = np.einsum("bi,bij->bj", x, A)
                else:
                    y = np.einsum("bi,bij->bj", x, S)
                    tot = y.sum(axis=1, keepdims=True)
                    x = y / np.where(tot > 0, tot, 1.0)
                vals.append(np.einsum("bi,bi->b", x, pay))
            out.append(np.stack(vals, 1))
        return out[0], out[1], q

    def f(X):
        ca, cc, q = curves(X)
        return np.minimum(np.minimum(ca.min(axis=1), cc.min(axis=1)), q)

    return curves if split else f


@dataclass
class VisionSolveResult:
    D: int
    conditioning: str
    p: float
    q: float
    r: float
    value: float
    d_adjacent: int
    d_center: int
    responses: dict
    q_range: tuple[float, float]
    no_vision_value: float | None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "extension": "vision_e4",
            "n": 4,
            "m": 2,
            "D": self.D,
            "conditioning": self.conditioning,
            "params": {"p": self.p, "q": self.q, "r": self.r},
            "value": self.value,
            "attacker": {"d_adjacent": self.d_adjacent, "d_center": self.d_center},
            "responses": self.responses,
            "q_range": list(self.q_range),
            "no_vision_value": self.no_vision_value,
            "diagnostics": self.diagnostics,
        }


def vision_responses(chain: VisionChain, D: int = 10, conditioning="normalized", tie_tol: float = 1e-12) -> dict:
    """Best delay and payoff for each of the attacker's three options.

    Delays within ``tie_tol`` of the minimum are listed; the smallest is
    reported as the best delay.
    """
    out = {}
    for edge in LeaveEdge:
        c = vision_curve(chain, edge, D, conditioning)
        v = float(c.min())
        ties = [int(k) + 1 for k in np.flatnonzero(c <= v + tie_tol)]
        out[edge.value] = {"delay": ties[0], "value": v, "ties": ties, "curve": [float(x) for x in c]}
    out["attack_center"] = {"delay": None, "value": chain.q}
    return out


def vision_solve(
    D: int = 10,
    grid_resolution: int = 41,
    conditioning="normalized",
    refine_tol: float = 1e-10,
    value_tol: float = 1e-12,
    no_vision_value: float | None = None,
) -> VisionSolveResult:
    """Max over (p, q, r) of min(adjacent-delay, center-delay, center attack)."""
    space = vision_space()
    obj = _vision_objective(D, conditioning)
    grid = space.grid(grid_resolution)
    vals = obj(grid)
    order = np.argsort(-vals, kind="stable")
    starts = []
    for k in order:
        if len(starts) >= 5:
            break
        if all(np.max(np.abs(grid[k] - s)) > 1e-12 for s in starts):
            starts.append(grid[k])
    best_x, best_f = None, -np.inf
    for s in starts:
        x, fx, _ = pattern_search(obj, space, s, 1.0 / (grid_resolution - 1), [0, 1, 2], refine_tol)
        y, fy = polish(obj, space, x, [0, 1, 2])
        if fy > fx:
            x, fx = y, fy
        if fx > best_f:
            best_x, best_f = x, fx

    # The value is flat in q above the indifference point; report the
    # smallest q that attains it together with the whole flat range.
    p, r = float(best_x[0]), float(best_x[2])
    q_hi_feasible = 1.0 - 2 * p

    def val_q(q):
        return float(obj(np.array([[p, q, r]]))[0])

    qs = np.linspace(0.0, q_hi_feasible, 2001)
    vq = obj(np.column_stack([np.full_like(qs, p), qs, np.full_like(qs, r)]))
    ok = np.flatnonzero(vq >= best_f - value_tol)
    lo_i, hi_i = int(ok[0]), int(ok[-1])

    def edge(a, b, inside_at_b):
        for _ in range(60):
            mid = 0.5 * (a + b)
            good = val_q(mid) >= best_f - value_tol
            if good == inside_at_b:
                b = mid
            else:
                a = mid
        return b

    q_lo = qs[lo_i] if lo_i == 0 else edge(qs[lo_i - 1], qs[lo_i], True)
    q_hi = qs[hi_i] if hi_i == len(qs) - 1 else edge(qs[hi_i + 1], qs[hi_i], True)
    q = float(q_lo)
    chain = VisionChain(p, q, r)
    resp = vision_responses(chain, D, conditioning)
    value = min(v["value"] for v in resp.values())
    return VisionSolveResult(
        D=D,
        conditioning=Conditioning(conditioning).value,
        p=p,
        q=q,
        r=r,
        value=value,
        d_adjacent=resp["adjacent"]["delay"],
        d_center=resp["center"]["delay"],
        responses=resp,
        q_range=(float(q_lo), float(q_hi)),
        no_vision_value=no_vision_value,
        diagnostics={"grid_resolution": grid_resolution, "grid_best": float(vals[order[0]]), "optimizer_q": float(best_x[1])},
    )


def vision_discrepancies(result: VisionSolveResult, no_vision_params=(0.2835, 0.1695, 0.25)) -> list[dict]:
    """Compare the computation with the printed edge-vision figures."""
    r_star = 1.0 - 1.0 / math.sqrt(2.0)
    old = VisionChain(*no_vision_params)
    resp_old = vision_responses(old, result.D, result.conditioning)
    out = [
        {
            "item": "payoff vector",
            "printed": "(r, q, 0)",
            "computed": "(r, p, 0)",
            "note": "from A the patroller enters the attacked end with probability p; "
            "the printed d=2 closed forms are reproduced only with (r, p, 0)",
        },
        {
            "item": "first-order condition 1 - 4r + 2r^2 = 0",
            "printed": 0.25,
            "computed": r_star,
            "note": f"the stationary point r = 1 - 1/sqrt(2) = {r_star:.6f} violates 4r <= 1; "
            "the constrained maximum of r(1-2r)/(1-r) is at the bound r = 1/4 with value 1/6",
        },
        {
            "item": "optimum",
            "printed": {"p": 0.25, "q": 0.1667, "r": 0.25, "value": 1 / 6},
            "computed": {"p": result.p, "q": result.q, "r": result.r, "value": result.value,
                         "q_range": list(result.q_range)},
            "note": "value is flat in q over q_range; q is reported at the indifference point",
        },
        {
            "item": "responses to the no-vision optimum",
            "printed": {"adjacent": 0.18, "center": 0.13},
            "computed": {
                "adjacent_d2": vision_adjacent_d2(*no_vision_params),
                "center_d2": vision_center_d2(no_vision_params[0], no_vision_params[2]),
                "adjacent_min": resp_old["adjacent"]["value"],
                "center_min": resp_old["center"]["value"],
            },
            "note": "not reproduced; the printed pair does not match either ordering",
        },
    ]
    if result.no_vision_value is not None:
        out.append(
            {
                "item": "relative reduction from vision",
                "printed": 0.017,
                "computed": 1.0 - result.value / result.no_vision_value,
                "note": "",
            }
        )
    return out
