"""Distributional checks: exact small-graph oracles, Monte Carlo, tests.

The laws being compared are stated at the level of per-type component
weight vectors, so empirical and exact distributions are both projected
onto signatures: sorted tuples of rounded weight vectors.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .field import build_field, encoded_jump, field_exploration, sample_clocks
from .model import (
    BlockModel,
    Vertex,
    _as_rng,
    _check_rho,
    component_weights,
    edge_probability,
    scaled_mass,
)

SIG_DIGITS = 12
MAX_EXACT_VERTICES = 8


def _round_vec(v: Sequence[float]) -> tuple[float, ...]:
    return tuple(round(x, SIG_DIGITS) for x in v)


# -- exact component-partition oracle ----------------------------------------------


@dataclass(frozen=True)
class PartitionDistribution:
    """Exact law of the component partition of a small model's vertex set."""

    model: BlockModel
    probs: dict[tuple, float]

    def total(self) -> float:
        return sum(self.probs.values())

    def signature_distribution(self) -> dict[tuple, float]:
        """Push forward onto multisets of per-type component weights."""
        out: dict[tuple, float] = {}
        for partition, p in self.probs.items():
            sig = partition_signature(self.model, partition)
            out[sig] = out.get(sig, 0.0) + p
        return out


def partition_signature(model: BlockModel, partition: Sequence[Sequence[Vertex]]) -> tuple:
    return tuple(
        sorted(_round_vec(component_weights(model, list(block))) for block in partition)
    )


def exact_partition_distribution(model: BlockModel) -> PartitionDistribution:
    """Exact law by conditioning on the component of the lowest vertex.

    P(the component of v0 inside S is exactly T) factors into "T internally
    connected" times "no edge leaves T", and the rest of S partitions
    independently; both pieces recurse over subsets.  Equivalent to summing
    over all 2^(pairs) edge configurations, but usable up to eight
    vertices.
    """
    verts = model.vertices()
    n = len(verts)
    if n > MAX_EXACT_VERTICES:
        raise ValueError(f"exact enumeration supports at most {MAX_EXACT_VERTICES} vertices, got {n}")
    p_edge = [[0.0] * n for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            p_edge[a][b] = p_edge[b][a] = edge_probability(model, verts[a], verts[b])

    def no_cross(mask_a: int, mask_b: int) -> float:
        out = 1.0
        for a in _bits(mask_a):
            for b in _bits(mask_b):
                out *= 1.0 - p_edge[a][b]
        return out

    conn_memo: dict[int, float] = {}

    def connected(mask: int) -> float:
        if mask in conn_memo:
            return conn_memo[mask]
        if mask & (mask - 1) == 0:
            conn_memo[mask] = 1.0
            return 1.0
        v0 = mask & (-mask)
        total = 1.0
        rest = mask & ~v0
        sub = rest
        while True:  # proper subsets of mask containing v0
            part = sub | v0
            if part != mask:
                total -= connected(part) * no_cross(part, mask & ~part)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        conn_memo[mask] = total
        return total

    dist_memo: dict[int, dict[tuple, float]] = {0: {(): 1.0}}

    def dist(mask: int) -> dict[tuple, float]:
        if mask in dist_memo:
            return dist_memo[mask]
        v0 = mask & (-mask)
        rest = mask & ~v0
        out: dict[tuple, float] = {}
        sub = rest
        while True:
            block = sub | v0
            w = connected(block) * no_cross(block, mask & ~block)
            if w > 0.0:
                key_block = tuple(sorted(verts[a] for a in _bits(block)))
                for tail, p in dist(mask & ~block).items():
                    key = tuple(sorted(tail + (key_block,)))
                    out[key] = out.get(key, 0.0) + w * p
            if sub == 0:
                break
            sub = (sub - 1) & rest
        dist_memo[mask] = out
        return out

    full = dist((1 << n) - 1)
    return PartitionDistribution(model, full)


def brute_force_partition_distribution(model: BlockModel) -> PartitionDistribution:
    """Sum over every edge configuration; only for very small graphs."""
    verts = model.vertices()
    n = len(verts)
    pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    if len(pairs) > 15:
        raise ValueError("brute force limited to 15 vertex pairs")
    probs_edge = [edge_probability(model, verts[a], verts[b]) for a, b in pairs]
    out: dict[tuple, float] = {}
    for mask in range(1 << len(pairs)):
        prob = 1.0
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for k, (a, b) in enumerate(pairs):
            if mask >> k & 1:
                prob *= probs_edge[k]
                parent[find(a)] = find(b)
            else:
                prob *= 1.0 - probs_edge[k]
        groups: dict[int, list] = {}
        for x in range(n):
            groups.setdefault(find(x), []).append(verts[x])
        key = tuple(sorted(tuple(sorted(g)) for g in groups.values()))
        out[key] = out.get(key, 0.0) + prob
    return PartitionDistribution(model, out)


def _bits(mask: int):
    while mask:
        low = mask & (-mask)
        yield low.bit_length() - 1
        mask ^= low


# -- fast batched graph sampling -----------------------------------------------------


@dataclass(frozen=True)
class _PairTable:
    verts: list[Vertex]
    pairs: list[tuple[int, int]]
    probs: np.ndarray


def _pair_table(model: BlockModel) -> _PairTable:
    verts = model.vertices()
    pairs = [(a, b) for a in range(len(verts)) for b in range(a + 1, len(verts))]
    probs = np.array([edge_probability(model, verts[a], verts[b]) for a, b in pairs])
    return _PairTable(verts, pairs, probs)


def _partition_of_mask(table: _PairTable, mask: int) -> tuple[tuple[Vertex, ...], ...]:
    n = len(table.verts)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for k, (a, b) in enumerate(table.pairs):
        if mask >> k & 1:
            parent[find(a)] = find(b)
    groups: dict[int, list[Vertex]] = {}
    for x in range(n):
        groups.setdefault(find(x), []).append(table.verts[x])
    return tuple(sorted(tuple(sorted(g)) for g in groups.values()))


def sample_partition_batch(model: BlockModel, n_reps: int, seed) -> list[tuple]:
    """n_reps independent component partitions, vectorized over the pair
    indicators; same law as sampling graphs one by one."""
    rng = _as_rng(seed)
    table = _pair_table(model)
    k = len(table.pairs)
    if k == 0:
        single = _partition_of_mask(table, 0)
        return [single] * n_reps
    draws = rng.random((n_reps, k)) < table.probs
    weights = 1 << np.arange(k, dtype=np.uint64)
    masks = (draws.astype(np.uint64) * weights).sum(axis=1)
    cache: dict[int, tuple] = {}
    out = []
    for mask in masks.tolist():
        part = cache.get(mask)
        if part is None:
            part = cache[mask] = _partition_of_mask(table, int(mask))
        out.append(part)
    return out


# -- Monte Carlo laws ----------------------------------------------------------------


@dataclass(frozen=True)
class FieldSample:
    """What one field realization contributes to the distributional checks."""

    partition_signature: tuple
    first_gap: float | None
    jump_sequence: tuple[tuple[float, ...], ...]


def sample_field_encoding(model: BlockModel, rho, rng) -> FieldSample:
    clocks = sample_clocks(model, rng)
    fld = build_field(model, clocks)
    trace = field_exploration(fld, rho)
    parts = [tuple(sorted(c.vertices)) for c in trace.components]
    sig = tuple(sorted(_round_vec(c.weight_by_type) for c in trace.components))
    first_gap = None
    for s in trace.steps:
        if s.kind == "root":
            first_gap = s.root_gap
            break
    jumps = tuple(
        _round_vec(encoded_jump(model.R, c.weight_by_type)) for c in trace.components
    )
    return FieldSample(sig, first_gap, jumps)


def mc_component_distribution(
    model: BlockModel, rho, n_reps: int, seed, sampler: str = "graph"
) -> Counter:
    """Empirical law of the component-weight signature under either the
    direct graph sampler or the field exploration."""
    _check_rho(rho, model.m)
    _check_reps(n_reps)
    counts: Counter = Counter()
    if sampler == "graph":
        for part in sample_partition_batch(model, n_reps, seed):
            counts[partition_signature(model, part)] += 1
    elif sampler == "field":
        rng = _as_rng(seed)
        for _ in range(n_reps):
            counts[sample_field_encoding(model, rho, rng).partition_signature] += 1
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    return counts


def mc_field_samples(model: BlockModel, rho, n_reps: int, seed) -> list[FieldSample]:
    _check_rho(rho, model.m)
    _check_reps(n_reps)
    rng = _as_rng(seed)
    return [sample_field_encoding(model, rho, rng) for _ in range(n_reps)]


def mc_graph_jump_sequences(model: BlockModel, rho, n_reps: int, seed) -> list[tuple]:
    """Size-biased component jump sequences read off sampled graphs."""
    _check_rho(rho, model.m)
    _check_reps(n_reps)
    rng = _as_rng(seed)
    out = []
    for part in sample_partition_batch(model, n_reps, rng):
        masses = []
        weight_vecs = []
        for block in part:
            w = component_weights(model, list(block))
            s = scaled_mass(w, rho, model.Q)
            if s > 0:
                masses.append(s)
                weight_vecs.append(w)
        if not masses:
            out.append(())
            continue
        keys = rng.exponential(1.0, size=len(masses)) / np.array(masses)
        order = np.argsort(keys)
        out.append(
            tuple(_round_vec(encoded_jump(model.R, weight_vecs[k])) for k in order)
        )
    return out


def exact_first_jump_distribution(model: BlockModel, rho) -> dict[tuple, float]:
    """Law of the first hitting-process jump: component partitions weighted
    by the scaled-mass race for which component comes first."""
    _check_rho(rho, model.m)
    exact = exact_partition_distribution(model)
    out: dict[tuple, float] = {}
    for partition, p in exact.probs.items():
        weights = [component_weights(model, list(block)) for block in partition]
        masses = [scaled_mass(w, rho, model.Q) for w in weights]
        total = sum(masses)
        if total <= 0:
            continue
        for w, s in zip(weights, masses):
            if s > 0:
                key = _round_vec(encoded_jump(model.R, w))
                out[key] = out.get(key, 0.0) + p * s / total
    return out


def _check_reps(n_reps: int) -> None:
    if n_reps < 1000:
        raise ValueError("statistical comparisons need at least 1000 replications")


# -- test statistics -----------------------------------------------------------------


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    n: int
    pooled_cells: int
    unknown_mass: int  # observations in categories the reference assigns zero

    def reject(self, alpha: float) -> bool:
        return self.p_value < alpha

    def to_json_obj(self) -> dict:
        return {
            "test": "chi_square",
            "statistic": self.statistic,
            "dof": self.dof,
            "p_value": self.p_value,
            "n": self.n,
            "pooled_cells": self.pooled_cells,
            "unknown_mass": self.unknown_mass,
        }


def chi_square(observed: Mapping, expected: Mapping[object, float], min_expected: float = 5.0) -> ChiSquareResult:
    """Goodness of fit of observed counts against reference probabilities.

    Cells whose expected count falls below ``min_expected`` are pooled into
    one remainder cell (merged further with the smallest regular cell if
    still short).  Categories unseen in the reference are reported in
    ``unknown_mass`` and excluded from the statistic.
    """
    n = sum(observed.values())
    unknown = sum(c for k, c in observed.items() if expected.get(k, 0.0) <= 0.0)
    cells = [
        (float(observed.get(k, 0)), p * n) for k, p in expected.items() if p > 0.0
    ]
    if len(cells) < 2:
        raise ValueError("chi-square needs at least two reference categories")
    cells.sort(key=lambda c: c[1])
    pooled_obs = pooled_exp = 0.0
    regular: list[tuple[float, float]] = []
    pooled_cells = 0
    for obs, exp in cells:
        if exp < min_expected:
            pooled_obs += obs
            pooled_exp += exp
            pooled_cells += 1
        else:
            regular.append((obs, exp))
    if pooled_cells:
        while pooled_exp < min_expected and regular:
            obs, exp = regular.pop(0)
            pooled_obs += obs
            pooled_exp += exp
            pooled_cells += 1
        regular.append((pooled_obs, pooled_exp))
    if len(regular) < 2:
        raise ValueError("fewer than two cells remain after pooling")
    stat = sum((obs - exp) ** 2 / exp for obs, exp in regular)
    dof = len(regular) - 1
    return ChiSquareResult(stat, dof, float(sps.chi2.sf(stat, dof)), int(n), pooled_cells, int(unknown))


def chi_square_two_sample(counts_a: Mapping, counts_b: Mapping, min_expected: float = 5.0) -> ChiSquareResult:
    """Homogeneity test for two frequency tables over the same categories."""
    cats = sorted(set(counts_a) | set(counts_b), key=repr)
    a = np.array([counts_a.get(c, 0) for c in cats], dtype=float)
    b = np.array([counts_b.get(c, 0) for c in cats], dtype=float)
    na, nb = a.sum(), b.sum()
    pooled = (a + b) / (na + nb)
    keep = pooled > 0
    a, b, pooled = a[keep], b[keep], pooled[keep]
    # pool sparse categories exactly as in the one-sample test
    order = np.argsort(pooled)
    a, b, pooled = a[order], b[order], pooled[order]
    min_n = min(na, nb)
    cells_a, cells_b = [], []
    acc_a = acc_b = acc_p = 0.0
    for xa, xb, p in zip(a, b, pooled):
        if p * min_n < min_expected:
            acc_a += xa
            acc_b += xb
            acc_p += p
        else:
            cells_a.append(xa)
            cells_b.append(xb)
    if acc_p > 0:
        cells_a.append(acc_a)
        cells_b.append(acc_b)
    arr = np.array([cells_a, cells_b])
    if arr.shape[1] < 2:
        raise ValueError("two-sample chi-square needs at least two categories")
    row = arr.sum(axis=1, keepdims=True)
    col = arr.sum(axis=0, keepdims=True)
    expected = row @ col / arr.sum()
    stat = float(((arr - expected) ** 2 / expected).sum())
    dof = arr.shape[1] - 1
    return ChiSquareResult(stat, dof, float(sps.chi2.sf(stat, dof)), int(arr.sum()), 0, 0)


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    n: int

    def reject(self, alpha: float) -> bool:
        return self.p_value < alpha

    def to_json_obj(self) -> dict:
        return {"test": "ks", "statistic": self.statistic, "p_value": self.p_value, "n": self.n}


def ks_one_sample(sample: Sequence[float], cdf: Callable[[float], float]) -> KSResult:
    stat, p = sps.kstest(np.asarray(sample), np.vectorize(cdf))
    return KSResult(float(stat), float(p), len(sample))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> KSResult:
    res = sps.ks_2samp(np.asarray(a), np.asarray(b))
    return KSResult(float(res.statistic), float(res.pvalue), len(a) + len(b))


def exponential_cdf(rate: float) -> Callable[[float], float]:
    return lambda x: -math.expm1(-rate * x) if x > 0 else 0.0


# -- experiment drivers ---------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    model: BlockModel
    rho: tuple[float, ...]
    n_reps: int = 100_000
    seed: int = 0
    alpha: float = 0.001

    def __post_init__(self) -> None:
        _check_rho(self.rho, self.model.m)
        _check_reps(self.n_reps)
        if not 0 < self.alpha < 1:
            raise ValueError("significance level must lie in (0, 1)")


def compare_component_laws(config: ExperimentConfig) -> dict:
    """Graph sampler and field exploration against the exact oracle, plus
    the two samplers against each other."""
    expected = exact_partition_distribution(config.model).signature_distribution()
    graph_counts = mc_component_distribution(
        config.model, config.rho, config.n_reps, config.seed, "graph"
    )
    field_counts = mc_component_distribution(
        config.model, config.rho, config.n_reps, config.seed + 1, "field"
    )
    graph_vs_exact = chi_square(graph_counts, expected)
    field_vs_exact = chi_square(field_counts, expected)
    both = chi_square_two_sample(graph_counts, field_counts)
    return {
        "graph_vs_exact": graph_vs_exact,
        "field_vs_exact": field_vs_exact,
        "graph_vs_field": both,
        "counts": {"graph": graph_counts, "field": field_counts},
        "expected": expected,
        "pass": not any(
            r.reject(config.alpha) or r.unknown_mass
            for r in (graph_vs_exact, field_vs_exact)
        )
        and not both.reject(config.alpha),
    }


def compare_encoding_laws(config: ExperimentConfig) -> dict:
    """Chronological hitting-process jumps against size-biased component
    jumps: first-jump law against the exact oracle on both sides, full
    sequences two-sample, and the first root gap against its exponential
    law."""
    model, rho = config.model, config.rho
    field_samples = mc_field_samples(model, rho, config.n_reps, config.seed)
    graph_seqs = mc_graph_jump_sequences(model, rho, config.n_reps, config.seed + 1)

    exact_first = exact_first_jump_distribution(model, rho)
    none_prob = 1.0 - sum(exact_first.values())
    if none_prob > 1e-12:
        exact_first["none"] = none_prob

    def first_of(seq):
        return seq[0] if seq else "none"

    field_first = Counter(first_of(s.jump_sequence) for s in field_samples)
    graph_first = Counter(first_of(s) for s in graph_seqs)
    field_vs_exact = chi_square(field_first, exact_first)
    graph_vs_exact = chi_square(graph_first, exact_first)
    seq_two_sample = chi_square_two_sample(
        Counter(s.jump_sequence for s in field_samples), Counter(graph_seqs)
    )

    total_rate = sum(
        rho[v[1]] * model.Q[v[1]][v[1]] * model.weight(v) for v in model.vertices()
    )
    gaps = [s.first_gap for s in field_samples if s.first_gap is not None]
    gap_ks = ks_one_sample(gaps, exponential_cdf(total_rate))

    support_ok = field_vs_exact.unknown_mass == 0 and graph_vs_exact.unknown_mass == 0
    if not support_ok:
        raise RuntimeError(
            "observed a jump category outside the exact support: "
            f"field={field_vs_exact.unknown_mass}, graph={graph_vs_exact.unknown_mass}"
        )
    return {
        "field_first_vs_exact": field_vs_exact,
        "graph_first_vs_exact": graph_vs_exact,
        "sequence_two_sample": seq_two_sample,
        "first_gap_ks": gap_ks,
        "pass": not any(
            r.reject(config.alpha)
            for r in (field_vs_exact, graph_vs_exact, seq_two_sample, gap_ks)
        ),
    }


@dataclass(frozen=True)
class CalibrationResult:
    n_seeds: int
    rejections: int
    alpha: float

    @property
    def rate(self) -> float:
        return self.rejections / self.n_seeds


def component_law_p_value(model: BlockModel, rho, n_reps: int, seed: int) -> float:
    """p-value of the graph sampler against the exact oracle for one seed;
    picklable, so calibration re-runs can fan out over processes."""
    expected = exact_partition_distribution(model).signature_distribution()
    counts = mc_component_distribution(model, rho, n_reps, seed, "graph")
    return chi_square(counts, expected).p_value


def calibrate(
    p_value_of_seed: Callable[[int], float], n_seeds: int, alpha: float, jobs: int = 1
) -> CalibrationResult:
    """Re-run a seeded test and count rejections; a sound test rejects at
    roughly the nominal rate.  The outcome does not depend on ``jobs``."""
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            p_values = list(pool.map(p_value_of_seed, range(n_seeds)))
    else:
        p_values = [p_value_of_seed(s) for s in range(n_seeds)]
    rejections = sum(1 for p in p_values if p < alpha)
    return CalibrationResult(n_seeds, rejections, alpha)
