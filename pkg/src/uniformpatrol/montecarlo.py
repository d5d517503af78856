"""Monte Carlo oracle for interception probabilities.

Walkers follow the patrol chain and an attacker who waits for a visit,
counts consecutive absences (resetting on every return) and attacks in
the d-th absent period. The attack is intercepted if the patroller is at
the node in any of the next m - 1 periods.

Starting states are drawn exactly from the chain's law after ``burn_in``
steps from a uniform start, plus one extra step with probability 1/2 so
that periodic chains start at a random phase. Each chunk of trials draws
from its own PCG64 stream spawned from one SeedSequence, so results are
reproducible for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .extensions import LeaveEdge, MemoryStarChain, VisionChain
from .interception import AttackPlan
from .networks import build_matrix, build_network

RNG_NAME = "numpy.random.PCG64, one SeedSequence.spawn child per chunk"


@dataclass(frozen=True)
class SimConfig:
    trials: int = 1_000_000
    seed: int = 20240601
    burn_in: int = 1000
    max_periods: int = 100_000
    chunk: int = 100_000
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.chunk < 1:
            raise ValueError("chunk must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class SimEstimate:
    p_hat: float
    stderr: float
    trials: int
    trials_completed: int
    truncated_trials: int
    seed: int
    rng: str = RNG_NAME

    def within(self, value: float, k: float = 3.0) -> bool:
        """|p_hat - value| < k * stderr (a zero stderr requires an exact hit)."""
        gap = abs(self.p_hat - value)
        return gap < k * self.stderr if self.stderr > 0 else gap < 1e-12

    def to_dict(self) -> dict:
        out = asdict(self)
        out["truncated"] = out.pop("truncated_trials")
        return out


class Variant(str, Enum):
    MEMORY_STAR = "memory_star"
    VISION_E4 = "vision_e4"

    @classmethod
    def parse(cls, s) -> "Variant":
        if isinstance(s, cls):
            return s
        key = str(s).strip().lower().replace("-", "_")
        aliases = {"memory": cls.MEMORY_STAR, "memorystar": cls.MEMORY_STAR, "memory_star": cls.MEMORY_STAR,
                   "vision": cls.VISION_E4, "visione4": cls.VISION_E4, "vision_e4": cls.VISION_E4}
        if key not in aliases:
            raise ValueError(f"unknown variant {s!r}")
        return aliases[key]


def start_distribution(P: np.ndarray, burn_in: int) -> np.ndarray:
    S = len(P)
    x = np.full(S, 1.0 / S) @ np.linalg.matrix_power(P, burn_in)
    x = 0.5 * (x + x @ P)
    x = np.clip(x, 0.0, None)
    return x / x.sum()


def _sample(rng, cum: np.ndarray, rows: np.ndarray) -> np.ndarray:
    u = rng.random(len(rows))
    nxt = (u[:, None] >= cum[rows]).sum(axis=1)
    return np.minimum(nxt, cum.shape[1] - 1)


def _run_chunk(P, start, present, depart_ok, d, m, budget, n, seed_seq):
    """Returns (intercepted, completed, truncated) for ``n`` walkers."""
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    cum = np.cumsum(P, axis=1)
    cum[:, -1] = 1.0
    pos = rng.choice(len(P), size=n, p=start)
    # count: -2 waiting for a (qualifying) visit, -1 at the node, k >= 1 absences
    count = np.where(present[pos], -1, -2)
    att = np.zeros(n, dtype=np.int64)  # remaining attack checks; 0 when not attacking
    hit = 0
    done = 0
    for _ in range(budget):
        if len(pos) == 0:
            break
        prev = pos
        pos = _sample(rng, cum, prev)
        here = present[pos]

        attacking = att > 0
        caught = attacking & here
        att = np.where(attacking & ~here, att - 1, att)
        finished = caught | (attacking & (att == 0))
        hit += int(caught.sum())

        obs = ~attacking
        left = obs & ~here & present[prev]
        if depart_ok is not None:
            ok = depart_ok[prev, pos]
            count = np.where(left & ok, 1, np.where(left & ~ok, -2, count))
        else:
            count = np.where(left, 1, count)
        count = np.where(obs & ~here & ~present[prev] & (count >= 1), count + 1, count)
        count = np.where(obs & here, -1, count)
        start_att = obs & (count == d)
        att = np.where(start_att, m - 1, att)
        count = np.where(start_att, -2, count)

        done += int(finished.sum())
        keep = ~finished
        pos, count, att = pos[keep], count[keep], att[keep]
    return hit, done, len(pos)


def _simulate_chain(P, present, plan_delay, plan_m, config: SimConfig, depart_ok=None) -> SimEstimate:
    P = np.asarray(P, dtype=float)
    if config.max_periods < config.burn_in + plan_delay + plan_m:
        raise ValueError("max_periods must be >= burn_in + delay + m")
    start = start_distribution(P, config.burn_in)
    budget = config.max_periods - config.burn_in
    sizes = [config.chunk] * (config.trials // config.chunk)
    if config.trials % config.chunk:
        sizes.append(config.trials % config.chunk)
    seeds = np.random.SeedSequence(config.seed).spawn(len(sizes))
    args = [(P, start, present, depart_ok, plan_delay, plan_m, budget, k, ss) for k, ss in zip(sizes, seeds)]
    if config.workers > 1 and len(args) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda a: _run_chunk(*a), args))
    else:
        parts = [_run_chunk(*a) for a in args]
    hit = sum(p[0] for p in parts)
    done = sum(p[1] for p in parts)
    trunc = sum(p[2] for p in parts)
    p_hat = hit / done if done else float("nan")
    se = math.sqrt(p_hat * (1 - p_hat) / done) if done else float("nan")
    return SimEstimate(p_hat, se, config.trials, done, trunc, config.seed)


def simulate(T: np.ndarray, plan: AttackPlan, config: SimConfig | None = None) -> SimEstimate:
    """Estimate intercept_prob(T, plan) by simulating the attacker's counting rule."""
    config = config or SimConfig()
    T = np.asarray(T, dtype=float)
    present = np.zeros(len(T), dtype=bool)
    present[plan.node - 1] = True
    return _simulate_chain(T, present, plan.delay, plan.duration, config)


def memory_chain_matrix(chain: MemoryStarChain) -> np.ndarray:
    """Full chain over (center-stayed, center-arrived, end 1..n)."""
    n, p, s = chain.n, chain.p, chain.s
    P = np.zeros((n + 2, n + 2))
    P[0, 0], P[0, 2:] = 1 - n * p, p
    P[1, 0], P[1, 2:] = 1 - n * s, s
    P[2:, 1] = 1.0
    return P


def simulate_extension(variant, params, response, config: SimConfig | None = None, n: int = 3) -> SimEstimate:
    """Simulate an extension with m = 2.

    MemoryStar: ``params=(p, s)``, ``response=d``; the attacker sits at end 1.
    VisionE4: ``params=(p, q, r)``; ``response`` is ``(edge, d)`` with edge
    center or adjacent, or ``"attack_center"`` for the center attack.
    """
    config = config or SimConfig()
    variant = Variant.parse(variant)
    if variant is Variant.MEMORY_STAR:
        chain = MemoryStarChain(*params, n=n)
        P = memory_chain_matrix(chain)
        present = np.zeros(len(P), dtype=bool)
        present[2] = True
        return _simulate_chain(P, present, int(response), 2, config)

    chain = VisionChain(*params)
    net = build_network("star_in_circle", 4)
    T = build_matrix(net, [chain.p, chain.q, chain.r])
    if response == "attack_center":
        return simulate(T, AttackPlan(net.center, 1, 2), config)
    edge, d = response
    edge = LeaveEdge.parse(edge)
    present = np.zeros(len(T), dtype=bool)
    present[0] = True
    ok = np.zeros((len(T), len(T)), dtype=bool)
    if edge is LeaveEdge.CENTER:
        ok[0, net.center - 1] = True
    else:
        for v in net.adjacency[1]:
            if v != net.center:
                ok[0, v - 1] = True
    return _simulate_chain(T, present, int(d), 2, config, depart_ok=ok)
