"""Victim aggregators: HodgeRank and RankCentrality."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import ComparisonGraph
from .errors import AggregationError, NumericError


@dataclass(frozen=True)
class LaplacianSystem:
    laplacian: np.ndarray
    divergence: np.ndarray

    @classmethod
    def from_graph(cls, graph: ComparisonGraph) -> LaplacianSystem:
        w = graph.matrix().astype(float)
        sym = w + w.T
        lap = np.diag(sym.sum(axis=1)) - sym
        # winners get positive divergence so they end up with higher scores
        div = (w - w.T).sum(axis=1)
        return cls(lap, div)


def _components(adjacency: np.ndarray, strong: bool = False) -> list[list[int]]:
    count, labels = connected_components(
        csr_matrix(adjacency), directed=strong, connection="strong" if strong else "weak"
    )
    return [np.flatnonzero(labels == k).tolist() for k in range(count)]


def _require_connected(graph: ComparisonGraph) -> None:
    m = graph.matrix()
    comps = _components((m + m.T) > 0)
    if len(comps) > 1:
        raise AggregationError(f"comparison graph is disconnected into {len(comps)} components", comps)


def hodgerank(graph: ComparisonGraph, rcond: float = 1e-10) -> np.ndarray:
    """Minimal-norm least-squares scores of the pairwise flow; sums to zero."""
    _require_connected(graph)
    system = LaplacianSystem.from_graph(graph)
    evals, evecs = np.linalg.eigh(system.laplacian)
    keep = evals > rcond * evals.max()
    inv = np.zeros_like(evals)
    inv[keep] = 1.0 / evals[keep]
    scores = evecs @ (inv * (evecs.T @ system.divergence))
    return scores - scores.mean()


def transition_matrix(graph: ComparisonGraph, d_max: int | None = None) -> np.ndarray:
    """Row-stochastic walk that moves toward the winner of each compared pair."""
    w = graph.matrix().astype(float)
    totals = w + w.T
    compared = totals > 0
    degree = int(compared.sum(axis=1).max())
    if d_max is None:
        d_max = degree
    elif d_max < degree:
        raise AggregationError(f"d_max={d_max} below the maximum degree {degree}")
    frac = np.divide(w.T, totals, out=np.zeros_like(w), where=compared)
    p = frac / max(d_max, 1)
    np.fill_diagonal(p, 0.0)
    np.fill_diagonal(p, 1.0 - p.sum(axis=1))
    return p


def stationary_distribution(
    p: np.ndarray, tol: float = 1e-10, max_iters: int = 10**6
) -> np.ndarray:
    """Power iteration from the uniform distribution."""
    pi = np.full(p.shape[0], 1.0 / p.shape[0])
    residual = np.inf
    for _ in range(max_iters):
        nxt = pi @ p
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).max())
        pi = nxt
        if residual <= tol:
            return pi
    raise NumericError("power iteration did not converge", residual)


def rank_centrality(
    graph: ComparisonGraph,
    tol: float = 1e-10,
    max_iters: int = 10**6,
    d_max: int | None = None,
) -> np.ndarray:
    """Stationary distribution of the empirical comparison walk."""
    _require_connected(graph)
    p = transition_matrix(graph, d_max)
    moves = p > 0
    np.fill_diagonal(moves, False)
    comps = _components(moves, strong=True)
    if len(comps) > 1:
        raise AggregationError(f"comparison walk is reducible ({len(comps)} strongly connected classes)", comps)
    return stationary_distribution(p, tol, max_iters)
