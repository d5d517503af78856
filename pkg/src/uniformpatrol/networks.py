"""Network families and symmetry-respecting patrol matrices.

Nodes are labelled 1..N everywhere in the public API. Line and circle
nodes are numbered along the path/cycle; star and star-in-circle put the
ends first (1..n) and the center last (n+1).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidParams, InvalidSize

PARAM_TOL = 1e-12


class Family(str, enum.Enum):
    STAR = "star"
    LINE = "line"
    CIRCLE = "circle"
    STAR_IN_CIRCLE = "star_in_circle"
    COMPLETE = "complete"

    @classmethod
    def parse(cls, name: str | "Family") -> "Family":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        aliases = {"sic": "star_in_circle", "starincircle": "star_in_circle", "e": "star_in_circle"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown network family {name!r}") from None


class NodeClass(str, enum.Enum):
    END = "end"
    INTERNAL = "internal"
    CENTER = "center"


MIN_SIZE = {
    Family.STAR: 2,
    Family.LINE: 3,
    Family.CIRCLE: 3,
    Family.STAR_IN_CIRCLE: 3,
    Family.COMPLETE: 3,
}


@dataclass(frozen=True)
class Network:
    family: Family
    n: int
    nodes: tuple[int, ...]
    node_class: Mapping[int, NodeClass] = field(hash=False, compare=False)
    adjacency: Mapping[int, frozenset[int]] = field(hash=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def center(self) -> int | None:
        for v in self.nodes:
            if self.node_class[v] is NodeClass.CENTER:
                return v
        return None

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(v for v in self.nodes if len(self.adjacency[v]) == 1)

    def edges(self) -> list[tuple[int, int]]:
        return sorted({(min(u, v), max(u, v)) for u in self.nodes for v in self.adjacency[u]})

    def index(self, node: int) -> int:
        if node not in self.adjacency:
            raise ValueError(f"node {node} not in {self.family.value}({self.n})")
        return node - 1

    def representatives(self) -> tuple[int, ...]:
        """One attack node per automorphism class."""
        if self.family is Family.LINE:
            return tuple(range(1, (self.n + 1) // 2 + 1))
        if self.family in (Family.CIRCLE, Family.COMPLETE):
            return (1,)
        return (1, self.n + 1)

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.size, self.size), dtype=bool)
        for u in self.nodes:
            for v in self.adjacency[u]:
                a[u - 1, v - 1] = True
        return a

    def __str__(self):
        return f"{self.family.value}({self.n})"


def build_network(family, n: int) -> Network:
    family = Family.parse(family)
    n = int(n)
    if n < MIN_SIZE[family]:
        raise InvalidSize(f"{family.value} needs n >= {MIN_SIZE[family]}, got {n}")

    adj: dict[int, set[int]] = {}
    cls: dict[int, NodeClass] = {}
    if family is Family.STAR:
        c = n + 1
        adj = {e: {c} for e in range(1, n + 1)}
        adj[c] = set(range(1, n + 1))
        cls = {e: NodeClass.END for e in range(1, n + 1)}
        cls[c] = NodeClass.CENTER
    elif family is Family.LINE:
        adj = {v: set() for v in range(1, n + 1)}
        for v in range(1, n):
            adj[v].add(v + 1)
            adj[v + 1].add(v)
        cls = {v: NodeClass.INTERNAL for v in range(1, n + 1)}
        cls[1] = cls[n] = NodeClass.END
        if n % 2 == 1:
            cls[(n + 1) // 2] = NodeClass.CENTER
    elif family is Family.CIRCLE:
        adj = {v: {(v % n) + 1, ((v - 2) % n) + 1} for v in range(1, n + 1)}
        cls = {v: NodeClass.INTERNAL for v in range(1, n + 1)}
    elif family is Family.STAR_IN_CIRCLE:
        c = n + 1
        adj = {v: {(v % n) + 1, ((v - 2) % n) + 1, c} for v in range(1, n + 1)}
        adj[c] = set(range(1, n + 1))
        cls = {v: NodeClass.END for v in range(1, n + 1)}
        cls[c] = NodeClass.CENTER
    elif family is Family.COMPLETE:
        adj = {v: set(range(1, n + 1)) - {v} for v in range(1, n + 1)}
        cls = {v: NodeClass.INTERNAL for v in range(1, n + 1)}

    nodes = tuple(sorted(adj))
    return Network(
        family=family,
        n=n,
        nodes=nodes,
        node_class=dict(cls),
        adjacency={v: frozenset(adj[v]) for v in nodes},
    )


def automorphism_generators(network: Network) -> list[tuple[int, ...]]:
    """Generators of the class-preserving automorphism group.

    Permutations are 0-based: ``perm[i]`` is the image of node index ``i``.
    The center of a star-in-circle is distinguished, so E3 keeps only its
    dihedral symmetry even though its graph is K4.
    """
    N, n = network.size, network.n
    fam = network.family
    gens = []
    if fam in (Family.STAR, Family.COMPLETE):
        # adjacent transpositions of the exchangeable nodes generate S_n
        for i in range(n - 1):
            perm = list(range(N))
            perm[i], perm[i + 1] = perm[i + 1], perm[i]
            gens.append(tuple(perm))
    elif fam is Family.LINE:
        gens.append(tuple(range(N - 1, -1, -1)))
    elif fam in (Family.CIRCLE, Family.STAR_IN_CIRCLE):
        rot = [(i + 1) % n for i in range(n)]
        ref = [(-i) % n for i in range(n)]
        if fam is Family.STAR_IN_CIRCLE:
            rot.append(n)
            ref.append(n)
        gens.extend([tuple(rot), tuple(ref)])
    return gens


# ---------------------------------------------------------------------------
# parameter spaces


@dataclass(frozen=True)
class ParamSpace:
    family: Family
    n: int
    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    # each constraint (coeffs, bound) means coeffs . x <= bound
    constraints: tuple[tuple[tuple[float, ...], float], ...] = ()
    reflection: str | None = None

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def reflection_index(self) -> int | None:
        return None if self.reflection is None else self.names.index(self.reflection)

    def feasible(self, x, tol: float = PARAM_TOL) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        ok = np.all((x >= lo - tol) & (x <= hi + tol), axis=-1)
        for coeffs, bound in self.constraints:
            ok &= x @ np.asarray(coeffs) <= bound + tol
        return ok

    def clamp(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def validate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.dim,):
            raise InvalidParams(
                f"{self.family.value}({self.n}) expects {self.dim} params {self.names}, got {x.size}"
            )
        if not np.all(np.isfinite(x)) or not self.feasible(x):
            raise InvalidParams(
                f"params {dict(zip(self.names, x.tolist()))} outside the feasible set of "
                f"{self.family.value}({self.n})"
            )
        return self.clamp(x)

    def grid(self, resolution: int, fixed: Mapping[str, float] | None = None) -> np.ndarray:
        """Feasible lattice points, ``resolution`` per free coordinate."""
        fixed = dict(fixed or {})
        axes = []
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            if name in fixed:
                axes.append(np.array([fixed[name]], dtype=float))
            else:
                axes.append(np.linspace(lo, hi, resolution))
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        return mesh[self.feasible(mesh)]

    def as_dict(self, x) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.names, np.asarray(x, dtype=float))}


def _line_pairs(n: int) -> int:
    """Number of symmetric internal (p_j, q_j) pairs on Line(n)."""
    return n // 2 - 1 if n % 2 == 0 else (n - 1) // 2 - 1


def param_space(network: Network) -> ParamSpace:
    fam, n = network.family, network.n
    if fam is Family.STAR:
        return ParamSpace(fam, n, ("p", "s"), (0.0, 0.0), (1.0 / n, 1.0), reflection="s")
    if fam is Family.LINE:
        k = _line_pairs(n)
        if k == 1:
            names = ["p", "q"]
        else:
            names = [f"{a}{j}" for j in range(2, k + 2) for a in ("p", "q")]
        lower, upper = [0.0] * len(names), [1.0] * len(names)
        cons = []
        for i in range(k):
            coeffs = [0.0] * (len(names) + (n % 2) + 1)
            coeffs[2 * i] = coeffs[2 * i + 1] = 1.0
            cons.append((tuple(coeffs), 1.0))
        if n % 2 == 1:
            names.append("c")
            lower.append(0.0)
            upper.append(0.5)
        names.append("kappa")
        lower.append(0.0)
        upper.append(1.0)
        return ParamSpace(fam, n, tuple(names), tuple(lower), tuple(upper), tuple(cons), "kappa")
    if fam is Family.CIRCLE:
        return ParamSpace(fam, n, ("p",), (0.0,), (0.5,))
    if fam is Family.STAR_IN_CIRCLE:
        return ParamSpace(
            fam, n, ("p", "q", "r"), (0.0, 0.0, 0.0), (0.5, 1.0, 1.0 / n),
            constraints=(((2.0, 1.0, 0.0), 1.0),),
        )
    if fam is Family.COMPLETE:
        return ParamSpace(fam, n, ("p",), (0.0,), (1.0 / (n - 1),))
    raise AssertionError(fam)


def random_walk_params(network: Network) -> np.ndarray:
    """Parameters of the simple random walk (never stay put)."""
    fam, n = network.family, network.n
    if fam is Family.STAR:
        return np.array([1.0 / n, 1.0])
    if fam is Family.LINE:
        x = [0.5] * (2 * _line_pairs(n))
        if n % 2 == 1:
            x.append(0.5)
        return np.array(x + [1.0])
    if fam is Family.CIRCLE:
        return np.array([0.5])
    if fam is Family.STAR_IN_CIRCLE:
        return np.array([1.0 / 3, 1.0 / 3, 1.0 / n])
    return np.array([1.0 / (n - 1)])


# ---------------------------------------------------------------------------
# transition matrices


def build_matrices(network: Network, X) -> np.ndarray:
    """Vectorised matrix construction for a batch ``X`` of shape (B, dim).

    No validation; the caller guarantees feasibility. Stay probabilities
    are clipped at zero to absorb round-off.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    B, N, n = X.shape[0], network.size, network.n
    T = np.zeros((B, N, N))
    fam = network.family

    if fam is Family.STAR:
        p, s = X[:, 0], X[:, 1]
        ends = np.arange(n)
        T[:, ends, n] = s[:, None]
        T[:, ends, ends] = (1.0 - s)[:, None]
        T[:, n, :n] = p[:, None]
        T[:, n, n] = 1.0 - n * p
    elif fam is Family.LINE:
        kappa = X[:, -1]
        T[:, 0, 1] = kappa
        T[:, 0, 0] = 1.0 - kappa
        T[:, N - 1, N - 2] = kappa
        T[:, N - 1, N - 1] = 1.0 - kappa
        for i in range(_line_pairs(n)):
            p, q = X[:, 2 * i], X[:, 2 * i + 1]
            j = i + 1  # 0-based index of node i+2, mirrored by N-1-j
            k = N - 1 - j
            T[:, j, j - 1] = p
            T[:, j, j + 1] = q
            T[:, j, j] = 1.0 - p - q
            T[:, k, k + 1] = p
            T[:, k, k - 1] = q
            T[:, k, k] = 1.0 - p - q
        if n % 2 == 1:
            c = X[:, -2]
            j = (N - 1) // 2
            T[:, j, j - 1] = c
            T[:, j, j + 1] = c
            T[:, j, j] = 1.0 - 2.0 * c
    elif fam is Family.CIRCLE:
        p = X[:, 0]
        for i in range(n):
            T[:, i, (i + 1) % n] += p
            T[:, i, (i - 1) % n] += p
            T[:, i, i] = 1.0 - 2.0 * p
    elif fam is Family.STAR_IN_CIRCLE:
        p, q, r = X[:, 0], X[:, 1], X[:, 2]
        for i in range(n):
            T[:, i, (i + 1) % n] += p
            T[:, i, (i - 1) % n] += p
            T[:, i, n] = q
            T[:, i, i] = 1.0 - 2.0 * p - q
        T[:, n, :n] = r[:, None]
        T[:, n, n] = 1.0 - n * r
    elif fam is Family.COMPLETE:
        p = X[:, 0]
        T[:] = p[:, None, None]
        idx = np.arange(N)
        T[:, idx, idx] = (1.0 - (N - 1) * p)[:, None]

    idx = np.arange(N)
    diag = T[:, idx, idx]
    T[:, idx, idx] = np.maximum(diag, 0.0)
    return T


def build_matrix(network: Network, params: Sequence[float] | Mapping[str, float]) -> np.ndarray:
    space = param_space(network)
    if isinstance(params, Mapping):
        missing = set(space.names) - set(params)
        if missing:
            raise InvalidParams(f"missing parameters {sorted(missing)} for {network}")
        params = [params[k] for k in space.names]
    x = space.validate(params)
    T = build_matrices(network, x[None, :])[0]
    T.setflags(write=False)
    return T


def is_symmetric(network: Network, T: np.ndarray, tol: float = 1e-12) -> bool:
    """True when T commutes with every automorphism generator."""
    for perm in automorphism_generators(network):
        P = np.eye(network.size)[list(perm)]
        if np.max(np.abs(P @ T @ P.T - T)) > tol:
            return False
    return True


def network_to_dict(network: Network, T: np.ndarray | None = None) -> dict:
    out = {
        "family": network.family.value,
        "n": network.n,
        "nodes": list(network.nodes),
    }
    if T is not None:
        out["matrix"] = np.asarray(T, dtype=float).tolist()
    return out


def all_automorphisms(network: Network):
    """Brute-force class-preserving automorphisms; small graphs only."""
    A = network.adjacency_matrix()
    N = network.size
    cls = [network.node_class[v] for v in network.nodes]
    for perm in itertools.permutations(range(N)):
        if any(cls[perm[i]] is not cls[i] for i in range(N)):
            continue
        if np.array_equal(A[np.ix_(perm, perm)], A):
            yield perm
