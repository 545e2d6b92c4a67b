"""Laplacian spectrum, graph Fourier transform, high-pass filtering and SGWT."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ArgumentError, CapacityError, ConfigurationError
from .graph import Graph, laplacian


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of a symmetric Laplacian, eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size


def eigendecompose(L: np.ndarray, *, symmetry_tol: float = 0.0) -> Spectrum:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ArgumentError(f"Laplacian must be square, got shape {L.shape}")
    if np.max(np.abs(L - L.T), initial=0.0) > symmetry_tol:
        raise ArgumentError("Laplacian must be symmetric")
    lam, U = np.linalg.eigh(L)
    # eigh already returns ascending order; a stable sort keeps solver order on ties
    order = np.argsort(lam, kind="stable")
    lam, U = lam[order], U[:, order]
    lam.setflags(write=False)
    U.setflags(write=False)
    return Spectrum(lam, U)


def graph_spectrum(g: Graph) -> Spectrum:
    return eigendecompose(laplacian(g))


def _check_rows(spec: Spectrum, x: np.ndarray):
    if x.shape[0] != spec.n:
        raise ArgumentError(f"signal has {x.shape[0]} rows, spectrum has {spec.n} nodes")


def gft(spec: Spectrum, x) -> np.ndarray:
    """Graph Fourier coefficients ``U^T x`` (works column-wise on a matrix)."""
    x = np.asarray(x, dtype=float)
    _check_rows(spec, x)
    return spec.eigenvectors.T @ x


def igft(spec: Spectrum, coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    _check_rows(spec, coeffs)
    return spec.eigenvectors @ coeffs


@dataclass(frozen=True)
class HpfConfig:
    fraction: float = 0.25

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise ConfigurationError(f"HPF fraction must lie in (0, 1], got {self.fraction}")


def hpf_mask(n: int, fraction: float) -> np.ndarray:
    """Binary response keeping the top ``ceil(fraction * n)`` graph frequencies."""
    keep = min(n, math.ceil(fraction * n - 1e-12))
    h = np.zeros(n)
    if keep:
        h[n - keep :] = 1.0
    return h


def spectral_filter(spec: Spectrum, X, response) -> np.ndarray:
    U = spec.eigenvectors
    X = np.asarray(X, dtype=float)
    _check_rows(spec, X)
    return U @ (np.asarray(response)[:, None] * (U.T @ X.reshape(spec.n, -1))).reshape(X.shape)


def graph_hpf(spec: Spectrum, X, cfg: HpfConfig = HpfConfig()) -> np.ndarray:
    return spectral_filter(spec, X, hpf_mask(spec.n, cfg.fraction))


def hpf_operator(spec: Spectrum, cfg: HpfConfig = HpfConfig()) -> np.ndarray:
    U = spec.eigenvectors
    return (U * hpf_mask(spec.n, cfg.fraction)) @ U.T


# --- spectral graph wavelets ------------------------------------------------


def mexican_hat_kernel(x):
    """Band-pass ``x * exp(1 - x)``; zero at 0, peak value 1 at x = 1."""
    x = np.asarray(x, dtype=float)
    return x * np.exp(1.0 - x)


KERNELS = {"mexican_hat": mexican_hat_kernel}


@dataclass(frozen=True)
class SgwtConfig:
    scales: Optional[tuple] = None  # None -> log-spaced from the product spectrum
    n_scales: int = 4
    kernel: str = "mexican_hat"
    temporal_graph_len: Optional[int] = None  # None -> all columns of X
    max_nodes: int = 3000
    scale_range: float = 20.0  # largest/smallest scale when derived automatically

    def __post_init__(self):
        if self.scales is not None:
            if len(self.scales) == 0 or any(not s > 0 for s in self.scales):
                raise ConfigurationError("SGWT scales must be positive")
        if self.n_scales < 1:
            raise ConfigurationError("n_scales must be >= 1")
        if self.kernel not in KERNELS:
            raise ConfigurationError(f"unknown SGWT kernel {self.kernel!r}")
        if self.temporal_graph_len is not None and self.temporal_graph_len < 2:
            raise ConfigurationError("temporal_graph_len must be >= 2")


def path_adjacency(t: int) -> np.ndarray:
    a = np.zeros((t, t))
    idx = np.arange(t - 1)
    a[idx, idx + 1] = a[idx + 1, idx] = 1.0
    return a


def strong_product(w: np.ndarray, t: int) -> np.ndarray:
    """Adjacency of ``G x P_t`` (strong product with an unweighted path).

    Node ``(v, k)`` (vertex v at window step k) has index ``k * N + v``.
    """
    n = w.shape[0]
    p = path_adjacency(t)
    return np.kron(np.eye(t), w) + np.kron(p, np.eye(n)) + np.kron(p, w)


def default_scales(lmax: float, n_scales: int, scale_range: float) -> np.ndarray:
    # the kernel peaks at s*lambda = 1, so scales sweep peaks from lmax down to lmax/range
    s_min = 1.0 / lmax
    return np.geomspace(s_min, s_min * scale_range, n_scales)


def sgwt_coefficients(g: Graph, X, cfg: SgwtConfig = SgwtConfig()):
    """Exact-spectrum wavelet coefficients on the graph-time strong product.

    Uses the last ``temporal_graph_len`` columns of ``X``. Returns
    ``(coeffs, scales)`` with ``coeffs[v, k, j]`` the coefficient of vertex v at
    window step k for scale ``scales[j]``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != g.n:
        raise ArgumentError(f"X must have shape ({g.n}, T), got {X.shape}")
    t = X.shape[1] if cfg.temporal_graph_len is None else cfg.temporal_graph_len
    if X.shape[1] < 2 or t > X.shape[1]:
        raise ArgumentError("SGWT needs at least 2 time steps and no more window steps than columns")
    size = g.n * t
    if size > cfg.max_nodes:
        raise CapacityError(f"strong product has {size} nodes, cap is {cfg.max_nodes}")
    a = strong_product(g.weights, t)
    spec = eigendecompose(np.diag(a.sum(axis=1)) - a)
    x = X[:, -t:].T.reshape(-1)  # time-major flattening matches strong_product
    xhat = spec.eigenvectors.T @ x
    lam = np.clip(spec.eigenvalues, 0.0, None)
    lmax = lam[-1]
    if cfg.scales is not None:
        scales = np.asarray(cfg.scales, dtype=float)
    elif lmax > 0:
        scales = default_scales(lmax, cfg.n_scales, cfg.scale_range)
    else:
        scales = np.ones(cfg.n_scales)
    kernel = KERNELS[cfg.kernel]
    response = kernel(np.outer(lam, scales))  # (size, n_scales)
    coeffs = spec.eigenvectors @ (response * xhat[:, None])
    coeffs = coeffs.reshape(t, g.n, len(scales)).transpose(1, 0, 2)
    return coeffs, scales


def sgwt_top_nodes(coeffs, s_total: int) -> list:
    """The ``s_total`` (vertex, step) pairs with largest summed |coefficient|.

    Ordered by descending aggregate magnitude, ties by ascending flat index.
    """
    coeffs = np.asarray(coeffs)
    agg = np.abs(coeffs).sum(axis=2)
    n, t = agg.shape
    if not 0 <= s_total <= n * t:
        raise ArgumentError(f"s_total must lie in [0, {n * t}]")
    flat = agg.T.reshape(-1)  # index k*N + v
    order = np.lexsort((np.arange(flat.size), -flat))[:s_total]
    return [(int(i % n), int(i // n)) for i in order]
