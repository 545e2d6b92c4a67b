"""Weighted undirected graphs: construction, editing and basic measures.

Graphs are immutable value objects. Every editing operation returns a new
graph and leaves its input untouched.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import ArgumentError, ConfigurationError

COORD_KINDS = ("xy", "latlon")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with a dense symmetric weight matrix.

    ``coords`` is either planar ``(x, y)`` positions (``coord_kind="xy"``) or
    geographic ``(lat, lon)`` in degrees (``coord_kind="latlon"``).
    """

    weights: np.ndarray
    coords: Optional[np.ndarray] = None
    labels: Optional[tuple] = None
    coord_kind: str = "xy"
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ArgumentError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ArgumentError("weights must be finite")
        if np.any(w < 0):
            raise ArgumentError("weights must be non-negative")
        if np.any(np.diag(w) != 0):
            raise ArgumentError("weights must have a zero diagonal")
        if not np.array_equal(w, w.T):
            raise ArgumentError("weights must be symmetric")
        object.__setattr__(self, "weights", w)
        n = w.shape[0]
        if self.coords is not None:
            c = _frozen(self.coords)
            if c.shape != (n, 2):
                raise ArgumentError(f"coords must have shape ({n}, 2), got {c.shape}")
            object.__setattr__(self, "coords", c)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != n:
                raise ArgumentError(f"expected {n} labels, got {len(labels)}")
            object.__setattr__(self, "labels", labels)
        if self.coord_kind not in COORD_KINDS:
            raise ArgumentError(f"coord_kind must be one of {COORD_KINDS}")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def num_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    def edges(self):
        """Return ``(src, dst, weight)`` arrays with ``src < dst``."""
        if "edges" not in self._cache:
            src, dst = np.nonzero(np.triu(self.weights, 1))
            w = self.weights[src, dst]
            for a in (src, dst, w):
                a.setflags(write=False)
            self._cache["edges"] = (src, dst, w)
        return self._cache["edges"]

    def incidence(self):
        """Unsigned node-by-edge incidence matrix (sparse), edges as in ``edges()``."""
        if "incidence" not in self._cache:
            from scipy.sparse import csr_matrix

            src, dst, _ = self.edges()
            e = np.arange(src.size)
            rows = np.concatenate([src, dst])
            cols = np.concatenate([e, e])
            self._cache["incidence"] = csr_matrix(
                (np.ones(rows.size), (rows, cols)), shape=(self.n, src.size)
            )
        return self._cache["incidence"]

    def csr(self):
        """Cached CSR copy of the weight matrix (used by the integrator)."""
        if "csr" not in self._cache:
            from scipy.sparse import csr_matrix

            self._cache["csr"] = csr_matrix(self.weights)
        return self._cache["csr"]

    def fingerprint(self) -> str:
        """SHA-256 over node count and the exact edge list."""
        src, dst, w = self.edges()
        h = hashlib.sha256()
        h.update(np.int64(self.n).tobytes())
        h.update(src.astype(np.int64).tobytes())
        h.update(dst.astype(np.int64).tobytes())
        h.update(np.ascontiguousarray(w, dtype=np.float64).tobytes())
        return h.hexdigest()

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        src, dst, w = self.edges()
        G.add_weighted_edges_from(zip(src.tolist(), dst.tolist(), w.tolist()))
        return G

    def with_weights(self, weights: np.ndarray) -> "Graph":
        return Graph(weights, coords=self.coords, labels=self.labels, coord_kind=self.coord_kind)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_coords = (self.coords is None and other.coords is None) or (
            self.coords is not None
            and other.coords is not None
            and np.array_equal(self.coords, other.coords)
        )
        return (
            np.array_equal(self.weights, other.weights)
            and same_coords
            and self.labels == other.labels
            and self.coord_kind == other.coord_kind
        )

    __hash__ = None


@dataclass(frozen=True)
class DistanceGraphConfig:
    n: int = 400
    box_side: float = 10.0
    threshold: float = 1.95
    sigma2: Optional[float] = None  # None -> threshold**2
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigurationError("distance graph needs n >= 2")
        if not self.box_side > 0:
            raise ConfigurationError("box_side must be positive")
        if not self.threshold > 0:
            raise ConfigurationError("threshold must be positive")
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise ConfigurationError("sigma2 must be positive")

    @property
    def kernel_scale(self) -> float:
        return self.threshold**2 if self.sigma2 is None else float(self.sigma2)


@dataclass(frozen=True)
class ScaleFreeConfig:
    n: int = 500
    m: int = 3
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.m < self.n:
            raise ConfigurationError(f"scale-free graph needs 1 <= m < n (m={self.m}, n={self.n})")


def gaussian_kernel_weights(dist: np.ndarray, threshold: float, sigma2: float) -> np.ndarray:
    """Thresholded Gaussian kernel on a pairwise distance matrix, zero diagonal."""
    w = np.where(dist <= threshold, np.exp(-(dist**2) / sigma2), 0.0)
    np.fill_diagonal(w, 0.0)
    return w


def distance_graph_from_coords(coords, threshold: float, sigma2: Optional[float] = None) -> Graph:
    coords = np.asarray(coords, dtype=float)
    sigma2 = threshold**2 if sigma2 is None else sigma2
    dist = squareform(pdist(coords)) if len(coords) > 1 else np.zeros((len(coords),) * 2)
    return Graph(gaussian_kernel_weights(dist, threshold, sigma2), coords=coords)


def build_distance_graph(cfg: DistanceGraphConfig) -> Graph:
    """Random geometric graph on ``[0, box_side]^2`` with Gaussian edge weights."""
    rng = np.random.default_rng(cfg.seed)
    coords = rng.uniform(0.0, cfg.box_side, size=(cfg.n, 2))
    return distance_graph_from_coords(coords, cfg.threshold, cfg.kernel_scale)


def build_scale_free_graph(cfg: ScaleFreeConfig) -> Graph:
    """Barabasi-Albert preferential attachment with a complete seed graph on m nodes.

    The result is binary, connected, has minimum degree m and exactly
    ``m*(m-1)/2 + m*(n-m)`` edges.
    """
    n, m = cfg.n, cfg.m
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros((n, n))
    w[:m, :m] = 1.0
    np.fill_diagonal(w, 0.0)
    # each node appears once per incident edge endpoint
    endpoints = [i for i in range(m) for _ in range(m - 1)]
    for v in range(m, n):
        pool = endpoints if endpoints else list(range(v))
        targets: set = set()
        while len(targets) < m:
            targets.add(pool[int(rng.integers(len(pool)))])
        for u in sorted(targets):
            w[u, v] = w[v, u] = 1.0
            endpoints.append(u)
        endpoints.extend([v] * m)
    # circular layout so plot exports always have coordinates
    theta = 2 * np.pi * np.arange(n) / n
    return Graph(w, coords=np.column_stack([np.cos(theta), np.sin(theta)]))


def degrees(g: Graph) -> np.ndarray:
    return g.weights.sum(axis=1)


def laplacian(g: Graph) -> np.ndarray:
    """Combinatorial Laplacian ``D - W``."""
    return np.diag(degrees(g)) - g.weights


def isolate_nodes(g: Graph, nodes: Iterable[int]) -> Graph:
    """Remove every edge incident to ``nodes``; other edges are kept as is."""
    idx = np.array(sorted({int(v) for v in nodes}), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= g.n):
        raise ArgumentError(f"node ids must lie in [0, {g.n}), got {idx.tolist()}")
    w = np.array(g.weights)
    w[idx, :] = 0.0
    w[:, idx] = 0.0
    return g.with_weights(w)


def _hop_graph(g: Graph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    src, dst, _ = g.edges()
    G.add_edges_from(zip(src.tolist(), dst.tolist()))
    return G


def betweenness_centrality(g: Graph) -> np.ndarray:
    """Unnormalized shortest-path betweenness on hop counts.

    Each unordered pair of endpoints contributes once, so the middle node of a
    3-node path scores 1.
    """
    bc = nx.betweenness_centrality(_hop_graph(g), normalized=False)
    return np.array([bc[i] for i in range(g.n)])


def closeness_centrality(g: Graph) -> np.ndarray:
    """Reciprocal mean hop distance to the nodes reachable from each node.

    Nodes with no reachable peer score 0.
    """
    cc = nx.closeness_centrality(_hop_graph(g), wf_improved=False)
    return np.array([cc[i] for i in range(g.n)])


def rank_nodes(scores: Sequence[float]) -> np.ndarray:
    """Node indices by descending score, ties broken by ascending index."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(scores.size), -scores))
