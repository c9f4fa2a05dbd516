"""Chimera hardware graph and chain generation by self-avoiding random walks.

Vertex ids run 0 .. 8*cells^2 - 1 and decompose as (row, col, side, index):
id = 8*(row*cells + col) + 4*side + index.  Side 0 vertices couple vertically
(same column, row +- 1), side 1 horizontally; inside a cell the two sides form
a complete K_{4,4}.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from .model import ChainInstance, apply_random_gauge

COUPLING_KINDS = ("ferro", "antiferro", "gauge")


class GenerationError(RuntimeError):
    """A self-avoiding walk could not be completed within the retry budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


@dataclass(frozen=True)
class ChimeraGraph:
    """cells x cells grid of K_{4,4} unit cells (8*cells^2 vertices, degree <= 6)."""

    cells: int

    def __post_init__(self) -> None:
        if self.cells < 1:
            raise ValueError("cells must be >= 1")

    @property
    def n_vertices(self) -> int:
        return 8 * self.cells * self.cells

    def decompose(self, vertex: int) -> tuple[int, int, int, int]:
        if not 0 <= vertex < self.n_vertices:
            raise ValueError(f"vertex {vertex} outside 0..{self.n_vertices - 1}")
        cell, within = divmod(vertex, 8)
        side, index = divmod(within, 4)
        row, col = divmod(cell, self.cells)
        return row, col, side, index

    def compose(self, row: int, col: int, side: int, index: int) -> int:
        if not (0 <= row < self.cells and 0 <= col < self.cells and side in (0, 1)
                and 0 <= index < 4):
            raise ValueError(f"bad coordinates {(row, col, side, index)}")
        return 8 * (row * self.cells + col) + 4 * side + index

    def neighbors(self, vertex: int) -> list[int]:
        row, col, side, index = self.decompose(vertex)
        out = [self.compose(row, col, 1 - side, k) for k in range(4)]
        if side == 0:  # vertical inter-cell couplers
            if row > 0:
                out.append(self.compose(row - 1, col, side, index))
            if row < self.cells - 1:
                out.append(self.compose(row + 1, col, side, index))
        else:  # horizontal
            if col > 0:
                out.append(self.compose(row, col - 1, side, index))
            if col < self.cells - 1:
                out.append(self.compose(row, col + 1, side, index))
        return out

    def is_adjacent(self, v: int, w: int) -> bool:
        return w in self.neighbors(v)

    def edges(self):
        """All edges as (v, w) with v < w; used for exhaustive checks."""
        for v in range(self.n_vertices):
            for w in self.neighbors(v):
                if v < w:
                    yield v, w

    def adjacency_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(n, 6) neighbour table padded with -1, plus per-vertex degrees."""
        return _adjacency_table(self.cells)


@lru_cache(maxsize=8)
def _adjacency_table(cells: int) -> tuple[np.ndarray, np.ndarray]:
    g = ChimeraGraph(cells)
    n = g.n_vertices
    table = np.full((n, 6), -1, dtype=np.int32)
    degrees = np.zeros(n, dtype=np.int8)
    for v in range(n):
        nbrs = g.neighbors(v)
        table[v, : len(nbrs)] = nbrs
        degrees[v] = len(nbrs)
    table.setflags(write=False)
    degrees.setflags(write=False)
    return table, degrees


def degree(graph: ChimeraGraph, vertex: int) -> int:
    """Number of neighbours (4 intra-cell plus 0-2 inter-cell couplers)."""
    return len(graph.neighbors(vertex))


def validate_chain_embedding(graph: ChimeraGraph, instance: ChainInstance) -> None:
    """Raise unless the instance's embedding is a self-avoiding path in `graph`."""
    emb = instance.embedding
    if emb is None:
        raise ValueError("instance has no embedding")
    if len(set(emb)) != len(emb):
        raise ValueError("embedding repeats a vertex")
    for v, w in zip(emb[:-1], emb[1:]):
        if not graph.is_adjacent(v, w):
            raise ValueError(f"vertices {v} and {w} are consecutive but not adjacent")


def saw_chain(
    graph: ChimeraGraph,
    length: int,
    seed,
    max_retries: int = 10_000,
    coupling: str = "antiferro",
    label: str = "",
) -> ChainInstance:
    """Generate a chain embedded as a self-avoiding random walk.

    The walk starts from a uniformly random vertex and repeatedly steps to a
    uniformly random unvisited neighbour; a trapped walk restarts from scratch
    (counting one attempt).  Deterministic given the seed.
    """
    instance, _ = saw_chain_stats(graph, length, seed, max_retries, coupling, label)
    return instance


def saw_chain_stats(
    graph: ChimeraGraph,
    length: int,
    seed,
    max_retries: int = 10_000,
    coupling: str = "antiferro",
    label: str = "",
) -> tuple[ChainInstance, int]:
    """`saw_chain` plus the number of walk attempts it took."""
    if length < 2:
        raise ValueError("length must be >= 2")
    if max_retries < 1:
        raise ValueError("max_retries must be >= 1")
    if length > graph.n_vertices:
        raise GenerationError(
            f"cannot place {length} distinct vertices in a graph of {graph.n_vertices}",
            attempts=0,
        )
    table, degrees = graph.adjacency_table()
    seq = np.random.SeedSequence(entropy=seed)
    walk_seed, gauge_seed = (int(v) for v in seq.generate_state(2, dtype=np.uint32))
    path, attempt = _saw_walk(table, degrees, length, walk_seed, max_retries)
    if attempt < 0:
        raise GenerationError(
            f"self-avoiding walk of length {length} failed after {max_retries} attempts",
            attempts=max_retries,
        )
    instance = _with_couplings(list(path), coupling, np.random.default_rng(gauge_seed),
                               label)
    validate_chain_embedding(graph, instance)
    return instance, int(attempt)


@njit(cache=True)
def _saw_walk(table, degrees, length, seed, max_retries):
    np.random.seed(seed)
    n_vertices = table.shape[0]
    visited = np.zeros(n_vertices, dtype=np.bool_)
    path = np.empty(length, dtype=np.int32)
    options = np.empty(6, dtype=np.int32)
    for attempt in range(1, max_retries + 1):
        visited[:] = False
        current = np.random.randint(0, n_vertices)
        path[0] = current
        visited[current] = True
        filled = 1
        while filled < length:
            n_opt = 0
            for j in range(degrees[current]):
                w = table[current, j]
                if not visited[w]:
                    options[n_opt] = w
                    n_opt += 1
            if n_opt == 0:
                break
            current = options[np.random.randint(0, n_opt)]
            path[filled] = current
            visited[current] = True
            filled += 1
        if filled == length:
            return path, attempt
    return path, -1


def _with_couplings(path: list[int], coupling: str, rng: np.random.Generator,
                    label: str) -> ChainInstance:
    n_bonds = len(path) - 1
    if coupling == "ferro":
        j = np.full(n_bonds, -1, dtype=np.int8)
    elif coupling == "antiferro":
        j = np.full(n_bonds, 1, dtype=np.int8)
    elif coupling == "gauge":
        base = ChainInstance(np.full(n_bonds, -1, dtype=np.int8))
        gauged, _ = apply_random_gauge(base, rng)
        j = gauged.couplings
    else:
        raise ValueError(f"coupling must be one of {COUPLING_KINDS}, got {coupling!r}")
    return ChainInstance(j, embedding=tuple(path), label=label)
