"""Network topologies: grids, regular meshes, and random geometric graphs.

Graphs are immutable once built: CSR adjacency with sorted, duplicate-free
neighbor lists, plus optional 2D coordinates (meters) for geometric graphs.

Mesh constructions (each regular away from the boundary):
  degree 4 -- plain grid, node (r, c) adjacent to (r+-1, c) and (r, c+-1);
  degree 6 -- grid plus one fixed diagonal (r, c)-(r+1, c+1);
  degree 3 -- brick-wall lattice: all horizontal edges, vertical edge
              (r, c)-(r+1, c) only where (r + c) is even.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .rng import unit_uniforms

UNREACHABLE = -1


@dataclass(frozen=True)
class Grid:
    rows: int
    cols: int


@dataclass(frozen=True)
class RegularMesh:
    degree: int  # 3 or 6; degree 4 is Grid
    rows: int
    cols: int


@dataclass(frozen=True)
class RandomGeometric:
    n: int
    width: float
    height: float
    radius: float
    seed: int


TopologySpec = Union[Grid, RegularMesh, RandomGeometric]


class Graph:
    """Undirected graph with sorted neighbor lists, stored in CSR form."""

    __slots__ = ("n", "indptr", "indices", "degrees", "coords")

    def __init__(self, n: int, edges: np.ndarray, coords: Optional[np.ndarray] = None):
        """Build from an (m, 2) array of edges with u < v, no duplicates."""
        if n < 1:
            raise ValueError("graph needs at least one node")
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
        both = np.concatenate([edges, edges[:, ::-1]]) if edges.size else edges
        order = np.lexsort((both[:, 1], both[:, 0])) if both.size else np.array([], dtype=np.int64)
        src = both[order, 0] if both.size else np.array([], dtype=np.int64)
        dst = both[order, 1] if both.size else np.array([], dtype=np.int64)
        if src.size and np.any((src[1:] == src[:-1]) & (dst[1:] == dst[:-1])):
            raise ValueError("duplicate edges are not allowed")
        self.n = int(n)
        self.degrees = np.bincount(src, minlength=n).astype(np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(self.degrees)]).astype(np.int64)
        self.indices = dst.astype(np.int32)
        if coords is not None:
            coords = np.asarray(coords, dtype=np.float64).reshape(n, 2)
            coords.flags.writeable = False
        self.coords = coords
        for arr in (self.indptr, self.indices, self.degrees):
            arr.flags.writeable = False

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    @property
    def edge_count(self) -> int:
        return self.indices.size // 2

    def edges(self) -> np.ndarray:
        """All edges as an (m, 2) array with u < v, lexicographically sorted."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])


@dataclass(frozen=True)
class DistanceMap:
    """Hop distances from a source node; UNREACHABLE marks other components."""

    source: int
    dist: np.ndarray

    @property
    def max_distance(self) -> int:
        reach = self.dist[self.dist != UNREACHABLE]
        return int(reach.max()) if reach.size else 0

    def counts(self) -> np.ndarray:
        """Node count at each distance 0..max_distance."""
        reach = self.dist[self.dist != UNREACHABLE]
        return np.bincount(reach, minlength=self.max_distance + 1)

    def nodes_at(self, d: int) -> np.ndarray:
        return np.flatnonzero(self.dist == d)


@dataclass(frozen=True)
class DegreeStats:
    min_degree: int
    max_degree: int
    mean_degree: float


def gather_neighbors(g: Graph, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated neighbor lists of `nodes`.

    Returns (targets, origin): `targets[j]` is a neighbor of
    `nodes[origin[j]]`, in CSR order.
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    lens = g.degrees[nodes]
    total = int(lens.sum())
    if total == 0:
        return np.array([], dtype=np.int32), np.array([], dtype=np.int64)
    starts = g.indptr[nodes]
    cum = np.cumsum(lens)
    idx = np.arange(total, dtype=np.int64) + np.repeat(starts - (cum - lens), lens)
    return g.indices[idx], np.repeat(np.arange(nodes.size, dtype=np.int64), lens)


def grid_index(rows: int, cols: int, r: int, c: int) -> int:
    """Node id of grid/mesh position (r, c) in row-major order."""
    if not (0 <= r < rows and 0 <= c < cols):
        raise ValueError(f"({r}, {c}) outside {rows}x{cols}")
    return r * cols + c


def _grid_edges(rows: int, cols: int) -> np.ndarray:
    ids = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    right = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    down = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    return np.concatenate([right, down])


def _mesh6_edges(rows: int, cols: int) -> np.ndarray:
    ids = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    diag = np.column_stack([ids[:-1, :-1].ravel(), ids[1:, 1:].ravel()])
    return np.concatenate([_grid_edges(rows, cols), diag])


def _mesh3_edges(rows: int, cols: int) -> np.ndarray:
    ids = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    horiz = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    rr, cc = np.meshgrid(np.arange(rows - 1), np.arange(cols), indexing="ij")
    keep = (rr + cc) % 2 == 0
    vert = np.column_stack([ids[:-1, :][keep], ids[1:, :][keep]])
    return np.concatenate([horiz, vert])


def _rgg(spec: RandomGeometric) -> Graph:
    n = spec.n
    u = unit_uniforms(spec.seed, np.arange(2 * n, dtype=np.int64))
    coords = np.column_stack([u[0::2] * spec.width, u[1::2] * spec.height])
    r2 = spec.radius * spec.radius
    pieces = []
    block = max(1, 2**22 // max(n, 1))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        dx = coords[lo:hi, 0:1] - coords[:, 0][None, :]
        dy = coords[lo:hi, 1:2] - coords[:, 1][None, :]
        close = (dx * dx + dy * dy) <= r2
        a, b = np.nonzero(close)
        a = a + lo
        keep = a < b  # upper triangle: excludes self-loops and mirrors
        if keep.any():
            pieces.append(np.column_stack([a[keep], b[keep]]))
    edges = np.concatenate(pieces) if pieces else np.empty((0, 2), dtype=np.int64)
    return Graph(n, edges, coords)


def build_topology(spec: TopologySpec) -> Graph:
    """Construct the graph described by `spec` (same spec, same graph)."""
    if isinstance(spec, Grid):
        if spec.rows < 1 or spec.cols < 1:
            raise ValueError("grid dimensions must be positive")
        return Graph(spec.rows * spec.cols, _grid_edges(spec.rows, spec.cols))
    if isinstance(spec, RegularMesh):
        if spec.rows < 1 or spec.cols < 1:
            raise ValueError("mesh dimensions must be positive")
        if spec.degree == 6:
            return Graph(spec.rows * spec.cols, _mesh6_edges(spec.rows, spec.cols))
        if spec.degree == 3:
            return Graph(spec.rows * spec.cols, _mesh3_edges(spec.rows, spec.cols))
        raise ValueError("mesh degree must be 3 or 6 (degree 4 is Grid)")
    if isinstance(spec, RandomGeometric):
        if spec.n < 1:
            raise ValueError("node count must be positive")
        if spec.width <= 0 or spec.height <= 0 or spec.radius <= 0:
            raise ValueError("region dimensions and radius must be positive")
        return _rgg(spec)
    raise TypeError(f"unknown topology spec: {spec!r}")


def _check_node(g: Graph, u: int) -> None:
    if not (0 <= u < g.n):
        raise ValueError(f"node {u} outside graph of size {g.n}")


def hop_distances(g: Graph, source: int) -> DistanceMap:
    """Breadth-first hop distances from `source`."""
    _check_node(g, source)
    dist = np.full(g.n, UNREACHABLE, dtype=np.int32)
    dist[source] = 0
    frontier = np.array([source], dtype=np.int64)
    d = 0
    while frontier.size:
        targets, _ = gather_neighbors(g, frontier)
        fresh = np.unique(targets[dist[targets] == UNREACHABLE])
        d += 1
        dist[fresh] = d
        frontier = fresh.astype(np.int64)
    dist.flags.writeable = False
    return DistanceMap(source=int(source), dist=dist)


def degree_stats(g: Graph) -> DegreeStats:
    return DegreeStats(
        min_degree=int(g.degrees.min()),
        max_degree=int(g.degrees.max()),
        mean_degree=float(g.degrees.mean()),
    )


def component_of(g: Graph, source: int) -> np.ndarray:
    """Sorted node ids of the connected component containing `source`."""
    dmap = hop_distances(g, source)
    return np.flatnonzero(dmap.dist != UNREACHABLE)


def ball_distances(g: Graph, center: int, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes within `radius` hops of `center` and their hop distances."""
    _check_node(g, center)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    dist = np.full(g.n, UNREACHABLE, dtype=np.int32)
    dist[center] = 0
    frontier = np.array([center], dtype=np.int64)
    for d in range(1, radius + 1):
        if not frontier.size:
            break
        targets, _ = gather_neighbors(g, frontier)
        fresh = np.unique(targets[dist[targets] == UNREACHABLE])
        dist[fresh] = d
        frontier = fresh.astype(np.int64)
    nodes = np.flatnonzero(dist != UNREACHABLE)
    return nodes, dist[nodes]


def save_edgelist(g: Graph, path_or_file) -> None:
    """Write the plain-text edge-list format (`n`, `u v`, optional `c` lines)."""
    def _write(f):
        f.write(f"n {g.n}\n")
        for u, v in g.edges():
            f.write(f"{u} {v}\n")
        if g.coords is not None:
            for i in range(g.n):
                f.write(f"c {i} {float(g.coords[i, 0])!r} {float(g.coords[i, 1])!r}\n")

    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="\n") as f:
            _write(f)
    else:
        _write(path_or_file)


def load_edgelist(path_or_file) -> Graph:
    """Read a graph written by `save_edgelist`; round-trips bit-exactly."""
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file) as f:
            text = f.read()
    else:
        text = path_or_file.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise ValueError("edge list must start with a 'n <count>' header")
    n = int(lines[0].split()[1])
    edges = []
    coords = None
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "c":
            if coords is None:
                coords = np.zeros((n, 2), dtype=np.float64)
            coords[int(parts[1])] = (float(parts[2]), float(parts[3]))
        else:
            edges.append((int(parts[0]), int(parts[1])))
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2), coords)
