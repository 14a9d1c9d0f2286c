"""Word Mover's Distance as an exact min-cost transport problem.

The distance between two documents is the cheapest way to move one document's
nBOW mass onto the other's, with per-word cost equal to the Euclidean distance
between unit-normalized embeddings (so every cost lies in [0, 2] and clipping
at 1 is meaningful).

nBOW weights are ratios of integer token counts, so the balanced transport
problem is solved on integer-scaled marginals (supply_i = count_a[i] *
total_b, demand_j = count_b[j] * total_a) with successive shortest paths and
Dijkstra potentials. Integrality guarantees termination and the result is
exactly optimal; flows are rescaled afterwards. ``wcd`` and ``rwmd`` are the
standard centroid and relaxed lower bounds, used to prune ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDoc, InputError
from .text import EmbeddingTable, ProcessedDoc

_INF = float("inf")


@dataclass(frozen=True)
class CostMatrix:
    """Pairwise embedding distances between the unique words of two docs."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: np.ndarray  # shape (len(rows), len(cols)), nonnegative


@dataclass(frozen=True)
class TransportPlan:
    """Optimal flow between two documents' nBOW masses."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    flow: np.ndarray  # T[i, j] >= 0; marginals match the nbow weights
    objective: float


def _doc_counts(doc: ProcessedDoc) -> tuple[list[str], np.ndarray]:
    counts = doc.counts()
    if not counts:
        if doc.nbow:
            raise InputError("document tokens are inconsistent with its nbow weights")
        raise EmptyDoc("document is empty after preprocessing")
    words = list(counts.keys())
    return words, np.array([counts[w] for w in words], dtype=np.int64)


def _vectors(words: list[str], table: EmbeddingTable) -> np.ndarray:
    missing = [w for w in words if w not in table]
    if missing:
        raise InputError(f"words missing from embedding table: {missing}")
    return np.stack([table[w] for w in words])


def cost_matrix(a: ProcessedDoc, b: ProcessedDoc, table: EmbeddingTable) -> CostMatrix:
    """Euclidean distances between every unique word pair of the two docs."""
    words_a, _ = _doc_counts(a)
    words_b, _ = _doc_counts(b)
    va = _vectors(words_a, table)
    vb = _vectors(words_b, table)
    diff = va[:, None, :] - vb[None, :, :]
    values = np.sqrt(np.maximum((diff * diff).sum(axis=2), 0.0))
    return CostMatrix(rows=tuple(words_a), cols=tuple(words_b), values=values)


def _solve_transport(supply: np.ndarray, demand: np.ndarray,
                     cost: np.ndarray) -> np.ndarray:
    """Exact min-cost flow for a balanced transportation problem.

    Successive shortest paths with Dijkstra over reduced costs. Supplies and
    demands are positive integers with equal totals; the returned flow matrix
    is integral with row sums == supply and column sums == demand.
    """
    m, n = len(supply), len(demand)
    flow = np.zeros((m, n), dtype=np.int64)
    rem_a = supply.astype(np.int64).copy()
    rem_b = demand.astype(np.int64).copy()
    pot_u = np.zeros(m)
    pot_v = np.zeros(n)
    remaining = int(rem_a.sum())

    while remaining > 0:
        dist_u = np.where(rem_a > 0, 0.0, _INF)
        dist_v = np.full(n, _INF)
        done_u = np.zeros(m, dtype=bool)
        done_v = np.zeros(n, dtype=bool)
        parent_v = np.full(n, -1, dtype=np.int64)  # forward arc i -> j
        parent_u = np.full(m, -1, dtype=np.int64)  # backward arc j -> i

        while True:
            best, side, idx = _INF, "", -1
            for i in range(m):
                if not done_u[i] and dist_u[i] < best:
                    best, side, idx = dist_u[i], "u", i
            for j in range(n):
                if not done_v[j] and dist_v[j] < best:
                    best, side, idx = dist_v[j], "v", j
            if side == "":
                break
            if side == "u":
                done_u[idx] = True
                base = dist_u[idx] - pot_u[idx]
                for j in range(n):
                    if not done_v[j]:
                        nd = base + cost[idx, j] - pot_v[j]
                        if nd < dist_v[j]:
                            dist_v[j] = nd
                            parent_v[j] = idx
            else:
                done_v[idx] = True
                base = dist_v[idx] + pot_v[idx]
                for i in range(m):
                    if not done_u[i] and flow[i, idx] > 0:
                        nd = base + pot_u[i] - cost[i, idx]
                        if nd < dist_u[i]:
                            dist_u[i] = nd
                            parent_u[i] = idx

        target = -1
        target_dist = _INF
        for j in range(n):
            if rem_b[j] > 0 and dist_v[j] < target_dist:
                target, target_dist = j, dist_v[j]
        if target < 0:
            raise RuntimeError("transport problem disconnected; marginals corrupt")

        # Johnson-style capped update keeps every residual reduced cost
        # (c - pot_u - pot_v for forward arcs) nonnegative.
        pot_u -= np.minimum(dist_u, target_dist)
        pot_v += np.minimum(dist_v, target_dist)

        # Walk parents back to a source, collecting the path and bottleneck.
        path: list[tuple[int, int, bool]] = []  # (i, j, forward)
        j = target
        delta = int(rem_b[target])
        while True:
            i = int(parent_v[j])
            path.append((i, j, True))
            if parent_u[i] < 0:
                delta = min(delta, int(rem_a[i]))
                source = i
                break
            j = int(parent_u[i])
            path.append((i, j, False))
            delta = min(delta, int(flow[i, j]))
        for i, j, forward in path:
            if forward:
                flow[i, j] += delta
            else:
                flow[i, j] -= delta
        rem_a[source] -= delta
        rem_b[target] -= delta
        remaining -= delta

    return flow


def wmd_exact(a: ProcessedDoc, b: ProcessedDoc,
              table: EmbeddingTable) -> tuple[float, TransportPlan]:
    """Optimal transport distance between two documents, with the plan."""
    words_a, counts_a = _doc_counts(a)
    words_b, counts_b = _doc_counts(b)
    total_a = int(counts_a.sum())
    total_b = int(counts_b.sum())
    cm = cost_matrix(a, b, table)
    flow_int = _solve_transport(counts_a * total_b, counts_b * total_a, cm.values)
    denom = float(total_a * total_b)
    flow = flow_int / denom
    objective = float((flow * cm.values).sum())
    plan = TransportPlan(rows=tuple(words_a), cols=tuple(words_b),
                         flow=flow, objective=objective)
    return objective, plan


def _weights(doc: ProcessedDoc, words: list[str]) -> np.ndarray:
    return np.array([doc.nbow[w] for w in words])


def wcd(a: ProcessedDoc, b: ProcessedDoc, table: EmbeddingTable) -> float:
    """Centroid distance: ||sum_i w_i x_i - sum_j w'_j x'_j||. Lower-bounds wmd."""
    words_a, _ = _doc_counts(a)
    words_b, _ = _doc_counts(b)
    ca = _weights(a, words_a) @ _vectors(words_a, table)
    cb = _weights(b, words_b) @ _vectors(words_b, table)
    return float(np.linalg.norm(ca - cb))


def rwmd(a: ProcessedDoc, b: ProcessedDoc, table: EmbeddingTable) -> float:
    """Relaxed transport bound: drop one marginal constraint each way, take
    the max. Tighter than wcd, still below wmd_exact."""
    cm = cost_matrix(a, b, table)
    wa = _weights(a, list(cm.rows))
    wb = _weights(b, list(cm.cols))
    left = float(wa @ cm.values.min(axis=1))
    right = float(wb @ cm.values.min(axis=0))
    return max(left, right)


def clip_unit(x: float) -> float:
    """Clip a distance to [0, 1]; values above 1 are taken as 1."""
    if x < 0:
        raise InputError(f"distance cannot be negative: {x}")
    return min(float(x), 1.0)


def rank_by_wmd(query: ProcessedDoc, candidates: list[ProcessedDoc], k: int,
                table: EmbeddingTable, prune: bool = True) -> list[tuple[int, float]]:
    """Exact top-k candidates by wmd_exact, ascending, ties to lower index.

    With ``prune`` the wcd/rwmd lower bounds skip candidates that provably
    cannot enter the top k; results are identical to the unpruned scan.
    """
    if not candidates:
        raise InputError("candidate list is empty")
    if k < 1 or k > len(candidates):
        raise InputError(f"k must be in 1..{len(candidates)}, got {k}")

    bounds = [(wcd(query, c, table), i) for i, c in enumerate(candidates)]
    bounds.sort()
    results: list[tuple[float, int]] = []

    def kth() -> float:
        return results[k - 1][0]

    for bound, i in bounds:
        if prune and len(results) >= k and bound > kth():
            break
        if prune and len(results) >= k and rwmd(query, candidates[i], table) > kth():
            continue
        dist, _ = wmd_exact(query, candidates[i], table)
        results.append((dist, i))
        results.sort()
        del results[k:]
    return [(i, dist) for dist, i in results]
