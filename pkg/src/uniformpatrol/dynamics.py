"""Conditional away-distribution dynamics and hitting probabilities.

The away distribution ``x^(t)`` is the patroller's location after ``t``
periods, conditioned on not having returned to the attack node in any of
them. It evolves by one step of the chain followed by removal and
renormalisation of the mass that re-entered the attack node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AwayChainAbsorbed, NoConvergence

ABSORB_TOL = 1e-15


@dataclass(frozen=True)
class AwayDistribution:
    t: int
    probs: np.ndarray
    attack_node: int  # 0-based index into probs
    return_prob: float = 0.0  # mass that re-entered the node on the last step

    def __post_init__(self):
        self.probs.setflags(write=False)


@dataclass(frozen=True)
class AwaySequence:
    """x^(1)..x^(k), truncated when the chain absorbs before ``d_max``."""

    steps: tuple[AwayDistribution, ...]
    d_max: int
    truncated: bool = False
    absorbed_at: int | None = None

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def matrix(self) -> np.ndarray:
        return np.array([a.probs for a in self.steps])


@dataclass(frozen=True)
class StationaryCycle:
    """Period-2 limit of the away map (bipartite walks, star random walk)."""

    states: tuple[AwayDistribution, AwayDistribution]
    iterations: int
    residual: float


def point_mass(size: int, node: int) -> AwayDistribution:
    x = np.zeros(size)
    x[node] = 1.0
    return AwayDistribution(0, x, node)


def away_step(x: AwayDistribution, T: np.ndarray) -> AwayDistribution:
    y = x.probs @ T
    ret = float(y[x.attack_node])
    if ret >= 1.0 - ABSORB_TOL:
        raise AwayChainAbsorbed(x.t + 1, ret)
    y[x.attack_node] = 0.0
    # Dividing by the surviving mass rather than 1 - ret keeps round-off
    # from compounding over long iterations.
    y /= y.sum()
    return AwayDistribution(x.t + 1, y, x.attack_node, ret)


def away_sequence(T: np.ndarray, attack_node: int, d_max: int) -> AwaySequence:
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    x = point_mass(len(T), attack_node)
    out = []
    for _ in range(d_max):
        try:
            x = away_step(x, T)
        except AwayChainAbsorbed as exc:
            return AwaySequence(tuple(out), d_max, truncated=True, absorbed_at=exc.t)
        out.append(x)
    return AwaySequence(tuple(out), d_max)


def stationary_away(
    T: np.ndarray, attack_node: int, tol: float = 1e-12, max_iter: int = 1_000_000
) -> AwayDistribution | StationaryCycle:
    """Limit of the away map, iterated from ``x^(1)``.

    Returns the fixed point when successive iterates agree within ``tol``.
    When iterates two apart agree but neighbours stay a fixed distance
    apart, the period-2 pair is returned as a :class:`StationaryCycle`.
    """
    x = away_step(point_mass(len(T), attack_node), T)
    prev = None
    gaps: list[float] = []
    r1 = np.inf
    for it in range(1, max_iter + 1):
        nxt = away_step(x, T)
        r1 = float(np.max(np.abs(nxt.probs - x.probs)))
        if r1 < tol:
            return nxt
        if prev is not None and len(gaps) >= 2:
            r2 = float(np.max(np.abs(nxt.probs - prev.probs)))
            # neighbour gap not shrinking -> genuine 2-cycle, not a damped oscillation
            if r2 < tol and r1 > 0.999 * gaps[-2]:
                return StationaryCycle((x, nxt), it, r2)
        gaps.append(r1)
        prev, x = x, nxt
    raise NoConvergence(max_iter, r1)


def is_irreducible(T: np.ndarray) -> np.ndarray | bool:
    """Strong connectivity of the support graph; broadcasts over a batch axis."""
    T = np.asarray(T, dtype=float)
    N = T.shape[-1]
    R = ((T > 0) | np.eye(N, dtype=bool)).astype(float)
    for _ in range(max(1, int(np.ceil(np.log2(N))))):
        R = np.minimum(R @ R, 1.0)
    return np.all(R > 0, axis=(-2, -1))


def hit_within(x, T: np.ndarray, target: int, steps: int) -> float:
    """P(chain started from ``x`` visits ``target`` within ``steps`` moves)."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    v = np.array(getattr(x, "probs", x), dtype=float)
    Ta = np.array(T, dtype=float)
    Ta[target] = 0.0
    Ta[target, target] = 1.0
    for _ in range(steps):
        v = v @ Ta
    return float(v[target])


def hit_vector(T: np.ndarray, target: int, steps: int) -> np.ndarray:
    """Per-start-node hitting probabilities within ``steps`` moves.

    Backward recursion h_{k+1} = T_abs h_k; broadcasts over a leading
    batch axis of ``T``.
    """
    T = np.asarray(T, dtype=float)
    Ta = T.copy()
    Ta[..., target, :] = 0.0
    Ta[..., target, target] = 1.0
    h = np.zeros(T.shape[:-1])
    h[..., target] = 1.0
    for _ in range(steps):
        h = np.einsum("...ij,...j->...i", Ta, h)
    return h
