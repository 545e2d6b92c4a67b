"""Variation of temporally evolving graph signals.

All functions take a signal matrix ``X`` of shape ``(N, T)``; column ``t`` is the
graph signal at time step ``t``. A single frame may be passed as a length-N
vector wherever only one time step is involved.

Local variation of node i is ``sum_j w_ij (x_i - x_j)^2``; total variation is
its sum over nodes, which counts every edge from both ends and therefore equals
``2 x^T L x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .graph import Graph

METRICS = ("TV", "LV", "TLV", "TLV_N")


@dataclass(frozen=True, eq=False)
class VariationField:
    """Per-node, per-step values of one variation metric."""

    values: np.ndarray
    metric: str
    alpha: float | None = None
    times: np.ndarray | None = None  # time stamps of the columns, 1-based steps by default

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ArgumentError(f"unknown metric {self.metric!r}")
        if self.times is None:
            object.__setattr__(self, "times", np.arange(1, self.values.shape[1] + 1))


def _as_matrix(g: Graph, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[0] != g.n:
        raise ArgumentError(f"signal has {X.shape[0]} rows, graph has {g.n} nodes")
    return X


def sign_phi(delta):
    """Sign of a temporal difference; exactly zero maps to 0."""
    return np.sign(delta)


def local_variation(g: Graph, X) -> np.ndarray:
    """Local variation per node (and per column when ``X`` is a matrix)."""
    X = _as_matrix(g, X)
    src, dst, w = g.edges()
    diff = X[src] - X[dst]
    per_edge = (w * diff.T).T * diff if X.ndim > 1 else w * diff * diff
    # each edge's term is credited to both endpoints
    return np.asarray(g.incidence() @ per_edge)


def total_variation(g: Graph, x) -> float:
    x = _as_matrix(g, x)
    if x.ndim != 1:
        raise ArgumentError("total_variation takes a single frame")
    return float(local_variation(g, x).sum())


def temporal_difference(X) -> np.ndarray:
    """One-step difference with a zero first column."""
    X = np.asarray(X, dtype=float)
    diff = np.zeros_like(X)
    diff[:, 1:] = X[:, 1:] - X[:, :-1]
    return diff


def temporal_variation(X) -> np.ndarray:
    return temporal_difference(X) ** 2


def tlv(g: Graph, X, alpha: float) -> VariationField:
    """Unnormalized temporal local variation.

    ``alpha * sign(dx) * dx^2 + (1 - alpha) * LV``; the first column has no
    temporal term.
    """
    _check_alpha(alpha)
    X = _as_matrix(g, X)
    dx = temporal_difference(X)
    values = alpha * sign_phi(dx) * dx**2 + (1 - alpha) * local_variation(g, X)
    return VariationField(values, "TLV", alpha)


def tlv_normalized(g: Graph, X_window, alpha: float) -> VariationField:
    """Temporal local variation with both terms scaled by their window maxima.

    Temporal term lies in [-1, 1] and local term in [0, 1]. A term whose window
    maximum is zero contributes zero.
    """
    _check_alpha(alpha)
    temporal, local = normalized_terms(g, X_window)
    return VariationField(alpha * temporal + (1 - alpha) * local, "TLV_N", alpha)


def normalized_terms(g: Graph, X_window):
    """Signed temporal term in [-1, 1] and local term in [0, 1] of normalized TLV."""
    X = _as_matrix(g, X_window)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ArgumentError("normalized TLV needs a window of at least 2 steps")
    dx = temporal_difference(X)
    tv = dx**2
    lv = local_variation(g, X)
    tv_max, lv_max = tv.max(), lv.max()
    temporal = sign_phi(dx) * (tv / tv_max) if tv_max > 0 else np.zeros_like(tv)
    local = lv / lv_max if lv_max > 0 else np.zeros_like(lv)
    return temporal, local


def _check_alpha(alpha):
    if not 0.0 <= alpha <= 1.0:
        raise ArgumentError(f"alpha must lie in [0, 1], got {alpha}")
