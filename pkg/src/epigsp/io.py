"""File formats: graphs, run records, result tables and case-data ingestion.

Floats are written with ``repr`` so every value round-trips exactly. All
writers go through ``atomic_write_text``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .epidemic import BetaEvent, IntegratorConfig, RunRecord, ScenarioSpec, SirParams
from .errors import IngestionError
from .graph import Graph, gaussian_kernel_weights
from .variation import VariationField

EARTH_RADIUS_KM = 6371.0088


def fmt(x) -> str:
    """Shortest exact text for a number; integral floats keep a ``.0``."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else ("" if v is None else fmt(v)) for v in row])
    atomic_write_text(path, buf.getvalue())


def write_json(path, payload):
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_rows(path, required: Sequence[str]):
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise IngestionError(f"{path}: empty file")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise IngestionError(f"{path}: missing columns {missing}")
        # row numbers count the header as line 1
        return [(k + 2, row) for k, row in enumerate(reader)]


def _num(path, lineno, row, key, cast=float):
    try:
        return cast(row[key])
    except (TypeError, ValueError):
        raise IngestionError(f"{path}:{lineno}: bad {key} value {row.get(key)!r}") from None


# --- graphs --------------------------------------------------------------------


def write_graph(g: Graph, directory):
    """``edges.csv`` (src,dst,weight with src < dst) plus ``nodes.csv``."""
    directory = Path(directory)
    src, dst, w = g.edges()
    write_csv(directory / "edges.csv", ["src", "dst", "weight"], zip(src, dst, w))
    cols = ["x", "y"] if g.coord_kind == "xy" else ["lat", "lon"]
    labels = g.labels or tuple("" for _ in range(g.n))
    coords = g.coords if g.coords is not None else [(None, None)] * g.n
    rows = [(i, labels[i], c[0], c[1]) for i, c in enumerate(coords)]
    write_csv(directory / "nodes.csv", ["id", "label", *cols], rows)


def read_graph(directory) -> Graph:
    directory = Path(directory)
    nodes_path = directory / "nodes.csv"
    nodes = _read_rows(nodes_path, ["id", "label"])
    with open(nodes_path, newline="", encoding="utf-8") as f:
        header = next(csv.reader(f))
    kind = "latlon" if "lat" in header else "xy"
    ckeys = ("lat", "lon") if kind == "latlon" else ("x", "y")
    n = len(nodes)
    labels, coords = [], []
    for k, (lineno, row) in enumerate(nodes):
        if _num(nodes_path, lineno, row, "id", int) != k:
            raise IngestionError(f"{nodes_path}:{lineno}: node ids must be 0..N-1 in order")
        labels.append(row["label"])
        if all(c in row and row[c] not in ("", None) for c in ckeys):
            coords.append([_num(nodes_path, lineno, row, c) for c in ckeys])
    edges_path = directory / "edges.csv"
    w = np.zeros((n, n))
    for lineno, row in _read_rows(edges_path, ["src", "dst", "weight"]):
        i = _num(edges_path, lineno, row, "src", int)
        j = _num(edges_path, lineno, row, "dst", int)
        if not (0 <= i < j < n):
            raise IngestionError(f"{edges_path}:{lineno}: need 0 <= src < dst < {n}")
        w[i, j] = w[j, i] = _num(edges_path, lineno, row, "weight")
    return Graph(
        w,
        coords=np.array(coords) if len(coords) == n and n else None,
        labels=labels if any(labels) else None,
        coord_kind=kind,
    )


def write_dense(g: Graph, path):
    write_csv(path, [str(i) for i in range(g.n)], g.weights.tolist())


def read_dense(path) -> Graph:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))[1:]
    try:
        return Graph(np.array([[float(v) for v in r] for r in rows]))
    except ValueError as e:
        raise IngestionError(f"{path}: {e}") from None


# --- signals and run records ----------------------------------------------------


def write_series(path, X, times=None):
    X = np.asarray(X, dtype=float)
    times = np.arange(1, X.shape[1] + 1) if times is None else times
    header = ["node"] + [fmt(_intlike(t)) for t in times]
    write_csv(path, header, ([i, *row] for i, row in enumerate(X.tolist())))


def _intlike(t):
    t = float(t)
    return int(t) if t.is_integer() else t


def read_series(path):
    """Return ``(X, times)`` from a ``node,<t1>,<t2>,...`` matrix file."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][0] != "node":
        raise IngestionError(f"{path}: expected a header starting with 'node'")
    try:
        times = np.array([float(t) for t in rows[0][1:]])
        X = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    except ValueError as e:
        raise IngestionError(f"{path}: {e}") from None
    return X.reshape(len(rows) - 1, times.size), times


def write_run(run: RunRecord, directory, *, with_sir: bool = True):
    directory = Path(directory)
    meta = {
        "graph_hash": run.graph_fingerprint,
        "params": run.params.to_dict() if run.params is not None else None,
        "scenario": run.scenario.to_dict() if run.scenario is not None else None,
        "schedule": [e.to_dict() for e in run.schedule],
        "seed": run.seed,
        "integrator": asdict(run.integrator),
        "n_nodes": int(run.series.shape[0]),
        "n_records": int(run.series.shape[1]),
    }
    write_json(directory / "run.json", meta)
    write_series(directory / "infection.csv", run.series, run.times)
    if with_sir and run.full_state is not None:
        rows = []
        for c, name in enumerate("SIR"):
            for i in range(run.series.shape[0]):
                rows.append([name, i, *run.full_state[:, c, i].tolist()])
        header = ["compartment", "node"] + [fmt(_intlike(t)) for t in run.times]
        write_csv(directory / "sir.csv", header, rows)


def read_run(directory) -> RunRecord:
    directory = Path(directory)
    try:
        meta = json.loads((directory / "run.json").read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise IngestionError(f"{directory}/run.json: {e}") from None
    X, times = read_series(directory / "infection.csv")
    full = None
    sir_path = directory / "sir.csv"
    if sir_path.exists():
        with open(sir_path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))[1:]
        n = X.shape[0]
        full = np.empty((times.size, 3, n))
        for r in rows:
            full[:, "SIR".index(r[0]), int(r[1])] = [float(v) for v in r[2:]]
    p = meta.get("params")
    sc = meta.get("scenario")
    return RunRecord(
        series=X,
        times=times,
        full_state=full,
        params=SirParams(p["beta"], p["gamma"], p["kappa"]) if p else None,
        scenario=ScenarioSpec.from_dict(sc) if sc else None,
        schedule=tuple(BetaEvent(e["time"], tuple(e["nodes"]), e["beta"]) for e in meta["schedule"]),
        graph_fingerprint=meta.get("graph_hash"),
        seed=meta.get("seed"),
        integrator=IntegratorConfig(**meta["integrator"]),
    )


# --- result tables ----------------------------------------------------------------


def write_influential(path, sets):
    rows = []
    for s in sets:
        for rank, (v, score) in enumerate(zip(s.nodes, s.scores), start=1):
            rows.append([s.time, rank, v, score, s.strategy])
    write_csv(path, ["time", "rank", "node", "score", "strategy"], rows)


def write_variation_field(path, field: VariationField):
    alpha = "" if field.alpha is None else fmt(field.alpha)
    rows = []
    for i in range(field.values.shape[0]):
        for k, t in enumerate(field.times):
            rows.append([i, _intlike(t), field.metric, alpha, field.values[i, k]])
    write_csv(path, ["node", "time", "metric", "alpha", "value"], rows)


def write_sgwt_coefficients(path, coeffs, scales):
    n, t, s = coeffs.shape
    rows = [[v, k + 1, scales[j], coeffs[v, k, j]] for v in range(n) for k in range(t) for j in range(s)]
    write_csv(path, ["node", "time", "scale", "value"], rows)


def control_outcome_payload(outcome, ground_truth_final: Optional[float] = None) -> dict:
    return {
        "strategy": outcome.strategy,
        "alpha": outcome.alpha,
        "plan": outcome.plan.to_dict(),
        "stages": [
            {"time": s.time, "isolated": list(s.nodes), "overlap_with_earlier": o}
            for s, o in zip(outcome.stages, outcome.overlap())
        ],
        "isolated": list(outcome.isolated),
        "final_cumulative": outcome.final_cumulative,
        "final_step_total": float(outcome.cumulative_curve[-1]),
        "no_control_final_cumulative": ground_truth_final,
    }


def write_sweep(directory, result):
    directory = Path(directory)
    write_csv(directory / "sweep.csv", ["trial", "alpha", "final_cumulative"], result.rows())
    rows = []
    for method, curve in result.mean_curves().items():
        rows.extend([method, t + 1, v] for t, v in enumerate(curve.tolist()))
    write_csv(directory / "method_curves.csv", ["method", "time", "mean_cumulative"], rows)
    summary = {
        "best_alpha": result.best_alphas(),
        "mean_final_cumulative": result.mean_finals(),
        "peaks": [t.peak for t in result.trials],
        "alpha_grid": [float(a) for a in result.alphas],
    }
    write_json(directory / "sweep_summary.json", summary)


# --- real-world case data ------------------------------------------------------


@dataclass(frozen=True)
class RegionRecord:
    id: str
    label: str
    lat: float
    lon: float
    population: float

    def __post_init__(self):
        if not self.population > 0:
            raise IngestionError(f"region {self.id}: population must be positive")
        if not (abs(self.lat) <= 90 and abs(self.lon) <= 180):
            raise IngestionError(f"region {self.id}: coordinates out of range")


@dataclass(frozen=True, eq=False)
class CaseTable:
    regions: tuple
    dates: tuple
    confirmed: np.ndarray  # (regions, dates) cumulative counts

    @property
    def n(self) -> int:
        return len(self.regions)

    @property
    def populations(self) -> np.ndarray:
        return np.array([r.population for r in self.regions])


def read_regions(path) -> list:
    out, seen = [], set()
    for lineno, row in _read_rows(path, ["id", "label", "lat", "lon", "population"]):
        rid = row["id"].strip()
        if not rid:
            raise IngestionError(f"{path}:{lineno}: empty region id")
        if rid in seen:
            raise IngestionError(f"{path}:{lineno}: duplicate region id {rid!r}")
        seen.add(rid)
        try:
            rec = RegionRecord(rid, row["label"], _num(path, lineno, row, "lat"),
                               _num(path, lineno, row, "lon"),
                               _num(path, lineno, row, "population"))
        except IngestionError as e:
            raise IngestionError(f"{path}:{lineno}: {e}") from None
        out.append(rec)
    return out


def ingest_cases(regions_path, cases_path, *, repair: bool = False, warnings: Optional[list] = None) -> CaseTable:
    """Align cumulative confirmed counts to a region x date grid.

    Dates missing for a region carry the previous cumulative value forward
    (zero before the first report). Decreasing cumulative counts are an error
    unless ``repair`` is set, in which case they are clamped to the previous
    value and described in ``warnings``.
    """
    regions = read_regions(regions_path)
    index = {r.id: k for k, r in enumerate(regions)}
    entries = {}
    for lineno, row in _read_rows(cases_path, ["region_id", "date", "confirmed"]):
        rid = row["region_id"].strip()
        if rid not in index:
            raise IngestionError(f"{cases_path}:{lineno}: unknown region id {rid!r}")
        try:
            day = date.fromisoformat(row["date"].strip())
        except (ValueError, AttributeError):
            raise IngestionError(f"{cases_path}:{lineno}: bad date {row['date']!r}") from None
        value = _num(cases_path, lineno, row, "confirmed")
        if value < 0 or not math.isfinite(value):
            raise IngestionError(f"{cases_path}:{lineno}: confirmed count must be non-negative")
        if (rid, day) in entries:
            raise IngestionError(f"{cases_path}:{lineno}: duplicate entry for {rid} on {day}")
        entries[(rid, day)] = (value, lineno)
    dates = sorted({d for _, d in entries})
    confirmed = np.zeros((len(regions), len(dates)))
    problems = []
    for r in regions:
        k = index[r.id]
        prev, prev_line = 0.0, None
        for t, d in enumerate(dates):
            if (r.id, d) in entries:
                value, lineno = entries[(r.id, d)]
                if value < prev:
                    problems.append(
                        f"{cases_path}:{lineno}: {r.id} cumulative count drops from {prev:g}"
                        f" (line {prev_line}) to {value:g}"
                    )
                    value = prev
                prev, prev_line = value, lineno
            confirmed[k, t] = prev
    if problems and not repair:
        raise IngestionError("non-monotone cumulative counts:\n" + "\n".join(problems))
    if warnings is not None:
        warnings.extend(problems)
    return CaseTable(tuple(regions), tuple(dates), confirmed)


def export_cases(table: CaseTable, regions_path, cases_path):
    write_csv(regions_path, ["id", "label", "lat", "lon", "population"],
              ([r.id, r.label, r.lat, r.lon, r.population] for r in table.regions))
    rows = []
    for k, r in enumerate(table.regions):
        for t, d in enumerate(table.dates):
            rows.append([r.id, d.isoformat(), table.confirmed[k, t]])
    write_csv(cases_path, ["region_id", "date", "confirmed"], rows)


def daily_from_cumulative(series) -> np.ndarray:
    """First differences along time; the first day keeps its cumulative value."""
    series = np.asarray(series, dtype=float)
    out = series.copy()
    out[..., 1:] = np.diff(series, axis=-1)
    return out


def normalize_signal(table: CaseTable, *, daily: bool = False) -> np.ndarray:
    counts = daily_from_cumulative(table.confirmed) if daily else table.confirmed
    return counts / table.populations[:, None]


def haversine_km(lat, lon) -> np.ndarray:
    """Pairwise great-circle distances (km) between points given in degrees."""
    phi = np.radians(np.asarray(lat, dtype=float))
    lam = np.radians(np.asarray(lon, dtype=float))
    dphi = phi[:, None] - phi[None, :]
    dlam = lam[:, None] - lam[None, :]
    a = np.sin(dphi / 2) ** 2 + np.cos(phi)[:, None] * np.cos(phi)[None, :] * np.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def planar_km(lat, lon) -> np.ndarray:
    """Euclidean distances after an equirectangular projection about the mean latitude."""
    lat = np.radians(np.asarray(lat, dtype=float))
    lon = np.radians(np.asarray(lon, dtype=float))
    x = EARTH_RADIUS_KM * lon * np.cos(lat.mean())
    y = EARTH_RADIUS_KM * lat
    return np.hypot(x[:, None] - x[None, :], y[:, None] - y[None, :])


def build_geo_graph(regions: Sequence[RegionRecord], threshold_km: float = 100.0,
                    sigma_km: Optional[float] = None, *, planar: bool = False) -> Graph:
    lat = np.array([r.lat for r in regions])
    lon = np.array([r.lon for r in regions])
    dist = planar_km(lat, lon) if planar else haversine_km(lat, lon)
    dist = np.minimum(dist, dist.T)  # exact symmetry
    sigma = threshold_km if sigma_km is None else sigma_km
    w = gaussian_kernel_weights(dist, threshold_km, sigma**2)
    return Graph(w, coords=np.column_stack([lat, lon]), labels=[r.id for r in regions],
                 coord_kind="latlon")
