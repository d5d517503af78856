"""Interception probabilities, attacker best responses and closed forms.

An attack (node, d, m) starts in the d-th consecutive period of the
patroller's absence and occupies m periods. The first of them is an
absence by construction, so the attack is intercepted iff the patroller
reaches the node within the remaining m - 1 moves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dynamics import (
    ABSORB_TOL,
    StationaryCycle,
    away_sequence,
    hit_vector,
    hit_within,
    stationary_away,
)
from .errors import AwayChainAbsorbed, InvalidDuration, NoConvergence, UnreachableDelay
from .networks import Network


@dataclass(frozen=True)
class AttackPlan:
    node: int  # 1-based node label
    delay: int
    duration: int

    def __post_init__(self):
        if self.duration < 2:
            raise InvalidDuration(f"attack duration must be >= 2, got {self.duration}")
        if self.delay < 1:
            raise ValueError(f"delay must be >= 1, got {self.delay}")


@dataclass(frozen=True)
class CurvePoint:
    d: int
    pi: float  # nan when unreachable
    reachable: bool


@dataclass(frozen=True)
class InterceptionCurve:
    node: int
    m: int
    points: tuple[CurvePoint, ...]
    limit: float | None  # None when the away chain absorbs
    limit_kind: str = "fixed"  # fixed | cycle | absorbed | unconverged

    @property
    def D(self) -> int:
        return len(self.points)

    def values(self) -> np.ndarray:
        return np.array([pt.pi for pt in self.points])

    def reachable(self) -> list[CurvePoint]:
        return [pt for pt in self.points if pt.reachable]

    def minimum(self, tie_tol: float = 0.0) -> tuple[int, float, tuple[int, ...]]:
        """(smallest minimizing d, min value, all d within ``tie_tol``)."""
        pts = self.reachable()
        if not pts:
            raise UnreachableDelay(1, 1)
        v = min(pt.pi for pt in pts)
        ds = tuple(pt.d for pt in pts if pt.pi <= v + tie_tol)
        return ds[0], v, ds

    def csv_rows(self) -> list[tuple]:
        rows = [(pt.d, pt.pi, pt.reachable) for pt in self.points]
        rows.append(("inf", float("nan") if self.limit is None else self.limit, self.limit is not None))
        return rows


@dataclass(frozen=True)
class BestResponse:
    node: int
    delay: int
    value: float
    minimizers: tuple[tuple[int, int], ...] = field(default=())
    per_node: dict = field(default_factory=dict, compare=False)


def intercept_prob(T: np.ndarray, plan: AttackPlan) -> float:
    i = plan.node - 1
    seq = away_sequence(T, i, plan.delay)
    if seq.truncated:
        raise UnreachableDelay(plan.delay, seq.absorbed_at)
    return hit_within(seq[-1], T, i, plan.duration - 1)


def limit_value(T: np.ndarray, node: int, m: int) -> tuple[float | None, str]:
    """pi at the stationary away distribution, or min over a 2-cycle."""
    i = node - 1
    h = hit_vector(T, i, m - 1)
    try:
        st = stationary_away(T, i)
    except AwayChainAbsorbed:
        return None, "absorbed"
    except NoConvergence:
        return None, "unconverged"
    if isinstance(st, StationaryCycle):
        return float(min(s.probs @ h for s in st.states)), "cycle"
    return float(st.probs @ h), "fixed"


def interception_curve(T: np.ndarray, node: int, m: int, D: int, with_limit: bool = True) -> InterceptionCurve:
    if m < 2:
        raise InvalidDuration(f"attack duration must be >= 2, got {m}")
    i = node - 1
    h = hit_vector(T, i, m - 1)
    seq = away_sequence(T, i, D)
    pts = [CurvePoint(x.t, float(x.probs @ h), True) for x in seq.steps]
    pts += [CurvePoint(d, float("nan"), False) for d in range(len(pts) + 1, D + 1)]
    lim, kind = limit_value(T, node, m) if with_limit else (None, "skipped")
    return InterceptionCurve(node, m, tuple(pts), lim, kind)


def best_response(
    T: np.ndarray,
    m: int,
    D: int,
    nodes: Iterable[int] | None = None,
    network: Network | None = None,
    tie_tol: float = 0.0,
) -> BestResponse:
    """Attacker's minimizing (node, delay); ties go to smallest d, then node."""
    if nodes is None:
        nodes = network.representatives() if network is not None else range(1, len(T) + 1)
    cands = []
    per_node = {}
    for v in nodes:
        curve = interception_curve(T, v, m, D, with_limit=False)
        pts = curve.reachable()
        if pts:
            d, val, _ = curve.minimum()
            per_node[v] = (d, val)
        cands.extend((pt.pi, pt.d, v) for pt in pts)
    if not cands:
        raise UnreachableDelay(1, 1)
    vmin = min(c[0] for c in cands)
    ties = sorted((d, v) for val, d, v in cands if val <= vmin + tie_tol)
    d, v = ties[0]
    return BestResponse(v, d, vmin, tuple((v_, d_) for d_, v_ in ties), per_node)


def batch_curves(T: np.ndarray, node: int, m: int, D: int) -> np.ndarray:
    """Delay curves for a batch of matrices, shape (B, D); +inf where unreachable."""
    i = node - 1
    B, N, _ = T.shape
    h = hit_vector(T, i, m - 1)
    x = np.zeros((B, N))
    x[:, i] = 1.0
    alive = np.ones(B, dtype=bool)
    out = np.full((B, D), np.inf)
    for d in range(D):
        y = np.einsum("bi,bij->bj", x, T)
        ret = y[:, i].copy()
        alive &= ret < 1.0 - ABSORB_TOL
        y[:, i] = 0.0
        denom = np.where(alive, y.sum(axis=1), 1.0)
        x = y / denom[:, None]
        x[~alive] = 0.0
        out[:, d] = np.where(alive, np.einsum("bi,bi->b", x, h), np.inf)
    return out


# ---------------------------------------------------------------------------
# closed forms


def closed_star_m2(n: int, p: float) -> float:
    """Star, m=2, reflecting ends, attacker waits d=2."""
    return (1.0 - n * p) * p / (1.0 - p)


def closed_star_odd(n: int, m: int) -> float:
    """Star under the random walk, odd m."""
    if m % 2 == 0 or m < 3:
        raise InvalidDuration(f"closed_star_odd needs odd m >= 3, got {m}")
    return 1.0 - ((n - 1) / n) ** ((m - 1) // 2)


def closed_star_m4(n: int, p: float) -> float:
    num = (
        -(n**3) * p**4
        + 2 * n**2 * p**3
        + 2 * n * p**3
        - 3 * n * p**2
        - 3 * p**2
        + 3 * p
    )
    return num / (1.0 - p)


def closed_star_m4_r(n: int, p: float) -> float:
    """Same quantity through the first (r-based) line of the m=4 formula."""
    r = 1.0 - n * p
    return p / (1.0 - p) * (2 * r - p - 2 * p * r - r**2 + r**3 + 1)


def closed_complete(n: int, m: int) -> float:
    """Complete graph K_n under the random walk."""
    return 1.0 - ((n - 2) / (n - 1)) ** (m - 1)


def closed_center(q: float, m: int) -> float:
    """Star-in-circle center attack: sum_{k=2}^{m} q (1-q)^(k-2)."""
    return 1.0 - (1.0 - q) ** (m - 1)


def closed_center_sum(q: float, m: int) -> float:
    return math.fsum(q * (1.0 - q) ** (k - 2) for k in range(2, m + 1))


def curve_to_csv(curve: InterceptionCurve) -> str:
    from .serialize import fmt

    lines = ["d,pi,reachable"]
    for d, pi, ok in curve.csv_rows():
        lines.append(f"{d},{fmt(pi)},{str(ok).lower()}")
    return "\n".join(lines) + "\n"


def all_node_minimum(T: np.ndarray, m: int, D: int, nodes: Sequence[int]) -> float:
    return min(
        np.min(batch_curves(T[None], v, m, D)[0]) for v in nodes
    )
