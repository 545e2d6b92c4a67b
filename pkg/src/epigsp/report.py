"""Plot-ready node fields in decibels.

For each step ``t >= r`` the field is computed on the window ending at ``t``,
divided by its maximum over that window and converted with ``10 log10``.
Nodes whose normalized TLV is negative are shown with their local term only.
Values that are not positive after scaling are written as the floor value.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import ArgumentError
from .graph import Graph
from .spectral import Spectrum, graph_spectrum, hpf_mask
from .variation import local_variation, normalized_terms


def window_field(g: Graph, window: np.ndarray, metric: str, alpha: float = 0.5,
                 hpf_fraction: float = 0.25, spectrum: Optional[Spectrum] = None) -> np.ndarray:
    """Non-negative display field over the whole window, before scaling."""
    if metric == "TLV":
        temporal, local = normalized_terms(g, window)
        full = alpha * temporal + (1 - alpha) * local
        return np.where(full < 0, (1 - alpha) * local, full)
    if metric == "LV":
        return local_variation(g, window)
    if metric == "Max":
        return np.array(window, dtype=float)
    if metric == "HPF":
        spectrum = spectrum or graph_spectrum(g)
        U = spectrum.eigenvectors
        h = hpf_mask(spectrum.n, hpf_fraction)
        return np.abs(U @ (h[:, None] * (U.T @ window)))
    raise ArgumentError(f"unknown report metric {metric!r}")


def to_db(values, reference: float, floor: float = -120.0) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    scaled = values / reference if reference > 0 else np.zeros_like(values)
    out = np.full(values.shape, float(floor))
    pos = scaled > 0
    out[pos] = np.maximum(10.0 * np.log10(scaled[pos]), floor)
    return out


def plot_field(g: Graph, X, *, metric: str = "TLV", alpha: float = 0.5, r: int = 10,
               hpf_fraction: float = 0.25, floor: float = -120.0, times=None) -> np.ndarray:
    """dB field of shape ``(N, len(times))``; ``times`` default to steps r..T."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != g.n:
        raise ArgumentError(f"X must have shape ({g.n}, T), got {X.shape}")
    times = list(range(r, X.shape[1] + 1)) if times is None else list(times)
    spectrum = graph_spectrum(g) if metric == "HPF" else None
    out = np.empty((g.n, len(times)))
    for k, t in enumerate(times):
        if not r <= t <= X.shape[1]:
            raise ArgumentError(f"step {t} outside [{r}, {X.shape[1]}]")
        field = window_field(g, X[:, t - r : t], metric, alpha, hpf_fraction, spectrum)
        out[:, k] = to_db(field[:, -1], field.max(), floor)
    return out
