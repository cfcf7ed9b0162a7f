"""Degree-corrected block models: sampling, components, masses, kernels.

Vertices are (rank, type) pairs; rank indexes the type's weight vector.
Edges between (l, i) and (r, j) appear independently with probability
1 - exp(-Q[i][j] * w_l^i * w_r^j), which is the simple-graph law obtained
from Poisson edge multiplicities after discarding duplicates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

Vertex = tuple[int, int]  # (rank within type, type)

SYMMETRY_TOL = 1e-12
FACTOR_TOL = 1e-9


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class BlockModel:
    """Weight vectors per type plus the symmetric connection kernel Q."""

    weights: tuple[tuple[float, ...], ...]
    Q: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        m = len(self.weights)
        if len(self.Q) != m or any(len(row) != m for row in self.Q):
            raise ValueError(f"kernel must be {m}x{m} to match {m} weight vectors")
        for i in range(m):
            if not self.Q[i][i] > 0:
                raise ValueError(f"kernel diagonal must be positive (Q[{i}][{i}]={self.Q[i][i]})")
            for j in range(m):
                if self.Q[i][j] < 0:
                    raise ValueError("kernel entries must be nonnegative")
                if abs(self.Q[i][j] - self.Q[j][i]) > SYMMETRY_TOL:
                    raise ValueError(f"kernel must be symmetric (entries {i},{j})")
        fixed = []
        for i, w in enumerate(self.weights):
            if any(x <= 0 for x in w):
                raise ValueError(f"weights of type {i} must be positive")
            if list(w) != sorted(w, reverse=True):
                warnings.warn(f"weights of type {i} were not nonincreasing; sorting", stacklevel=3)
                fixed.append(tuple(sorted(w, reverse=True)))
            else:
                fixed.append(tuple(float(x) for x in w))
        object.__setattr__(self, "weights", tuple(fixed))
        object.__setattr__(self, "Q", tuple(tuple(float(x) for x in row) for row in self.Q))

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def R(self) -> tuple[tuple[float, ...], ...]:
        """Row-normalized kernel R[i][j] = Q[i][j] / Q[i][i]; unit diagonal."""
        return tuple(
            tuple(1.0 if i == j else self.Q[i][j] / self.Q[i][i] for j in range(self.m))
            for i in range(self.m)
        )

    def vertices(self) -> list[Vertex]:
        return [(l, i) for i in range(self.m) for l in range(len(self.weights[i]))]

    def weight(self, v: Vertex) -> float:
        l, i = v
        return self.weights[i][l]

    def to_json_obj(self) -> dict:
        return {"m": self.m, "weights": [list(w) for w in self.weights], "Q": [list(r) for r in self.Q]}


def edge_probability(model: BlockModel, u: Vertex, v: Vertex) -> float:
    return 1.0 - math.exp(-model.Q[u[1]][v[1]] * model.weight(u) * model.weight(v))


@dataclass(frozen=True)
class Graph:
    model: BlockModel
    edges: frozenset[frozenset[Vertex]]
    _adj: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        adj: dict[Vertex, list[Vertex]] = {v: [] for v in self.model.vertices()}
        for e in self.edges:
            u, v = tuple(e)
            if u == v:
                raise ValueError("self-loops are not allowed")
            adj[u].append(v)
            adj[v].append(u)
        for v in adj:
            adj[v].sort(key=lambda x: (x[1], x[0]))
        object.__setattr__(self, "_adj", adj)

    def neighbors(self, v: Vertex) -> list[Vertex]:
        return self._adj[v]


def sample_graph(model: BlockModel, seed) -> Graph:
    """Draw each unordered pair independently as a Bernoulli edge."""
    rng = _as_rng(seed)
    verts = model.vertices()
    edges = set()
    for a in range(len(verts)):
        for b in range(a + 1, len(verts)):
            u, v = verts[a], verts[b]
            if rng.random() < edge_probability(model, u, v):
                edges.add(frozenset((u, v)))
    return Graph(model, frozenset(edges))


# -- connected components ------------------------------------------------------


class _UnionFind:
    def __init__(self, items: Iterable[Vertex]):
        self.parent = {x: x for x in items}

    def find(self, x: Vertex) -> Vertex:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: Vertex, b: Vertex) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass(frozen=True)
class Component:
    """Vertex set of one connected component with its per-type weight."""

    vertices: tuple[Vertex, ...]
    weight_by_type: tuple[float, ...]


def component_weights(model: BlockModel, vertices: Sequence[Vertex]) -> tuple[float, ...]:
    totals = [0.0] * model.m
    for v in sorted(vertices, key=lambda x: (x[1], x[0])):
        totals[v[1]] += model.weight(v)
    return tuple(totals)


def connected_components(graph: Graph) -> list[Component]:
    """Components listed by their smallest (type, rank) vertex."""
    verts = graph.model.vertices()
    uf = _UnionFind(verts)
    for e in graph.edges:
        u, v = tuple(e)
        uf.union(u, v)
    groups: dict[Vertex, list[Vertex]] = {}
    for v in verts:
        groups.setdefault(uf.find(v), []).append(v)
    comps = []
    for members in groups.values():
        members.sort(key=lambda x: (x[1], x[0]))
        comps.append(Component(tuple(members), component_weights(graph.model, members)))
    comps.sort(key=lambda c: (c.vertices[0][1], c.vertices[0][0]))
    return comps


def scaled_mass(weight_by_type: Sequence[float], rho: Sequence[float], Q: Sequence[Sequence[float]]) -> float:
    """sum_i rho_i * Q_ii * (type-i weight); the rate used in size biasing."""
    return sum(r * Q[i][i] * w for i, (r, w) in enumerate(zip(rho, weight_by_type)))


def size_biased_order(
    components: Sequence[Component], rho: Sequence[float], Q, seed
) -> list[Component]:
    """Order components by an exponential race with their scaled masses as
    rates; zero-mass components never appear."""
    _check_rho(rho, len(Q))
    rng = _as_rng(seed)
    keyed = []
    for c in components:
        s = scaled_mass(c.weight_by_type, rho, Q)
        if s > 0:
            keyed.append((rng.exponential(1.0 / s), c))
    keyed.sort(key=lambda kc: kc[0])
    return [c for _, c in keyed]


def _check_rho(rho: Sequence[float], m: int) -> None:
    if len(rho) != m:
        raise ValueError(f"direction vector has length {len(rho)}, expected {m}")
    if any(r < 0 for r in rho):
        raise ValueError("direction vector must be nonnegative")
    if not any(r > 0 for r in rho):
        raise ValueError("direction vector must be nonzero")


# -- kernel factorization -------------------------------------------------------


@dataclass(frozen=True)
class KernelFactorization:
    """Result of attempting R[i][j] = rho_i * nu_j on the off-diagonal."""

    ok: bool
    rho: tuple[float, ...] | None
    nu: tuple[float, ...] | None
    max_residual: float
    witness: str | None = None


def factor_kernel(Q: Sequence[Sequence[float]]) -> KernelFactorization:
    """Factor the row-normalized kernel as R[i][j] = rho_i * nu_j (i != j).

    Always possible for one or two blocks, and for three blocks with
    strictly positive entries via the closed-form choice
    rho_i = Q_ij * Q_ik / Q_ii, nu_i = 1 / Q_jk (i, j, k distinct).  For
    four or more blocks the solution from the first row and column is
    checked against every remaining entry; generic kernels fail.
    """
    m = len(Q)
    R = [[Q[i][j] / Q[i][i] for j in range(m)] for i in range(m)]
    if m == 1:
        return KernelFactorization(True, (1.0,), (1.0,), 0.0)
    for i in range(m):
        for j in range(m):
            if i != j and not Q[i][j] > 0:
                return KernelFactorization(
                    False, None, None, math.inf, f"Q[{i}][{j}] = 0 blocks the factorization"
                )
    if m == 2:
        rho = (R[0][1], R[1][0])
        nu = (1.0, 1.0)
    elif m == 3:
        rho = tuple(Q[i][j] * Q[i][k] / Q[i][i] for i, j, k in ((0, 1, 2), (1, 0, 2), (2, 0, 1)))
        nu = (1.0 / Q[1][2], 1.0 / Q[0][2], 1.0 / Q[0][1])
    else:
        rho_list = [1.0] * m
        nu_list = [0.0] * m
        for j in range(1, m):
            nu_list[j] = R[0][j]
        rho_list[1] = R[1][2] / nu_list[2]
        for i in range(2, m):
            rho_list[i] = R[i][1] / nu_list[1]
        nu_list[0] = R[1][0] / rho_list[1]
        rho, nu = tuple(rho_list), tuple(nu_list)
    worst = 0.0
    where = None
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            resid = abs(R[i][j] - rho[i] * nu[j])
            if resid > worst:
                worst, where = resid, (i, j)
    if worst > FACTOR_TOL:
        return KernelFactorization(
            False, None, None, worst, f"row ratio at {where} off by {worst:.3e}"
        )
    return KernelFactorization(True, rho, nu, worst)


def build_q_parametrization(Q, rho: Sequence[float], nu: Sequence[float]) -> dict:
    """Express a factorizable kernel through a single cross rate.

    With R[i][j] = rho_i * nu_j and Q symmetric, Q_ii * rho_i / nu_i is
    constant; calling it q0 gives Q_ij = q0 * nu_i * nu_j off the diagonal
    and Q_ii = q_i * nu_i^2 with q_i = Q_ii / nu_i^2.  Edges then connect
    with the rank-one intensities of the nu-scaled weights.
    """
    m = len(Q)
    q0s = [Q[j][j] * rho[j] / nu[j] for j in range(m)]
    q0 = q0s[0]
    for j, val in enumerate(q0s):
        if abs(val - q0) > FACTOR_TOL * max(1.0, abs(q0)):
            raise ValueError(f"q0 is not constant across types (type {j}: {val} vs {q0})")
    qs = tuple(Q[i][i] / nu[i] ** 2 for i in range(m))
    return {"q0": q0, "q": qs, "scaling": tuple(nu)}


def normalize_kernel(model: BlockModel) -> BlockModel:
    """Move the kernel diagonal into the weights: w -> sqrt(Q_ii) w and
    Q -> Q_ij / sqrt(Q_ii Q_jj).  Edge probabilities are unchanged, but the
    component weight vectors of the coupled graphs differ."""
    m = model.m
    roots = [math.sqrt(model.Q[i][i]) for i in range(m)]
    weights = tuple(tuple(roots[i] * w for w in model.weights[i]) for i in range(m))
    Q = tuple(
        tuple(model.Q[i][j] / (roots[i] * roots[j]) for j in range(m)) for i in range(m)
    )
    return BlockModel(weights, Q)


# -- exploration traces ---------------------------------------------------------


@dataclass(frozen=True)
class ExplorationStep:
    index: int
    kind: str  # "root" | "child"
    vertex: Vertex
    zeta: int
    children: tuple[Vertex, ...]
    n_active_end: int
    window_low: tuple[float, ...] | None = None
    window_high: tuple[float, ...] | None = None
    root_gap: float | None = None


@dataclass(frozen=True)
class ComponentTrace:
    root: Vertex
    vertices: tuple[Vertex, ...]
    weight_by_type: tuple[float, ...]
    level: float  # cumulative root gap at which the component was found


@dataclass(frozen=True)
class ExplorationTrace:
    m: int
    rho: tuple[float, ...]
    steps: tuple[ExplorationStep, ...]
    components: tuple[ComponentTrace, ...]

    @property
    def zeta_final(self) -> int:
        return len(self.components)

    def visited(self) -> list[Vertex]:
        return [s.vertex for s in self.steps]

    def to_json_obj(self) -> list[dict]:
        return [
            {
                "k": s.index,
                "kind": s.kind,
                "vertex": list(s.vertex),
                "zeta": s.zeta,
                "children": [list(c) for c in s.children],
                "S_L": list(s.window_low) if s.window_low is not None else None,
                "S_R": list(s.window_high) if s.window_high is not None else None,
                "Y": s.root_gap,
            }
            for s in self.steps
        ]


def graph_exploration(graph: Graph, rho: Sequence[float], seed) -> ExplorationTrace:
    """Breadth-first exploration of the graph itself.

    Roots are drawn proportionally to scaled vertex mass among unexplored
    vertices, together with an exponential waiting gap at the total
    unexplored rate.  Children are the unexplored neighbors, listed by type
    and size-biased by weight within each type.  Only components meeting a
    type with positive direction weight are ever entered.
    """
    model = graph.model
    _check_rho(rho, model.m)
    rng = _as_rng(seed)
    unexplored = set(model.vertices())
    queue: list[Vertex] = []
    steps: list[ExplorationStep] = []
    components: list[ComponentTrace] = []
    current: list[Vertex] = []
    level = 0.0
    zeta = 0
    k = 0

    def positive_rate() -> list[tuple[Vertex, float]]:
        return [
            (v, rho[v[1]] * model.Q[v[1]][v[1]] * model.weight(v))
            for v in sorted(unexplored, key=lambda x: (x[1], x[0]))
            if rho[v[1]] > 0
        ]

    def close_component() -> None:
        if current:
            components.append(
                ComponentTrace(
                    current[0],
                    tuple(current),
                    component_weights(model, current),
                    level,
                )
            )

    while True:
        root_gap = None
        if not queue:
            close_component()
            current = []
            candidates = positive_rate()
            if not candidates:
                break
            rates = np.array([r for _, r in candidates])
            total = rates.sum()
            root_gap = rng.exponential(1.0 / total)
            pick = rng.choice(len(candidates), p=rates / total)
            vertex = candidates[pick][0]
            zeta += 1
            level += root_gap
            kind = "root"
            unexplored.discard(vertex)
        else:
            vertex = queue.pop(0)
            kind = "child"
        k += 1
        n_discovered = k + len(queue)  # processed so far plus the active stack
        current.append(vertex)
        found = [u for u in graph.neighbors(vertex) if u in unexplored]
        ordered: list[Vertex] = []
        for i in range(model.m):
            of_type = [u for u in found if u[1] == i]
            if not of_type:
                continue
            keys = [(rng.exponential(1.0 / model.weight(u)), u) for u in of_type]
            keys.sort(key=lambda kv: kv[0])
            ordered.extend(u for _, u in keys)
        for u in ordered:
            unexplored.discard(u)
            queue.append(u)
        steps.append(
            ExplorationStep(
                index=k,
                kind=kind,
                vertex=vertex,
                zeta=zeta,
                children=tuple(ordered),
                n_active_end=n_discovered,
                root_gap=root_gap,
            )
        )
    return ExplorationTrace(model.m, tuple(float(r) for r in rho), tuple(steps), tuple(components))
