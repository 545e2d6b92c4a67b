"""Command-line entry point.

Exit status: 0 success, 2 usage error, 3 validation error (bad config, bad
input data, bad arguments), 4 runtime failure (integration, I/O).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import PipelineConfig, load_config
from .control import identify_all
from .epidemic import integrate, make_scenario
from .errors import (
    ArgumentError,
    CapacityError,
    ConfigurationError,
    IngestionError,
    IntegrationError,
)
from .experiments import alpha_sweep, prepare_control, run_method
from .graph import build_distance_graph, build_scale_free_graph
from .report import plot_field
from .spectral import graph_spectrum, sgwt_coefficients
from .variation import VariationField, local_variation, tlv, tlv_normalized

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--config", type=Path, help="YAML pipeline configuration")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")


def _signal_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--run", type=Path, help="directory written by 'simulate'")
    src.add_argument("--series", type=Path, help="node x time CSV, e.g. from 'ingest'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epigsp", description="Graph-signal epidemic analysis pipeline")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("graph", help="generate, validate or convert graphs")
    gsub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
    gen = gsub.add_parser("generate", help="build a synthetic graph")
    _common(gen)
    gen.add_argument("--out", type=Path, required=True)
    gen.add_argument("--kind", choices=["distance", "scale-free"])
    gen.add_argument("--n", type=int)
    val = gsub.add_parser("validate", help="check a graph directory")
    _common(val)
    val.add_argument("path", type=Path)
    conv = gsub.add_parser("convert", help="edge-list directory <-> dense weight CSV")
    _common(conv)
    conv.add_argument("source", type=Path)
    conv.add_argument("--out", type=Path, required=True)

    s = sub.add_parser("simulate", help="integrate a scenario on a graph")
    _common(s)
    s.add_argument("--graph", type=Path, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--scenario", help="scenario kind (overrides the config)")
    s.add_argument("--horizon", type=int)
    s.add_argument("--no-sir", action="store_true", help="skip the per-compartment sir.csv")

    i = sub.add_parser("identify", help="influential nodes over time")
    _common(i)
    i.add_argument("--graph", type=Path, required=True)
    _signal_source(i)
    i.add_argument("--out", type=Path, required=True, help="influential.csv path")
    i.add_argument("--strategy")
    i.add_argument("--alpha", type=float)
    i.add_argument("--r", type=int)
    i.add_argument("--p", type=float)
    i.add_argument("--times", type=int, nargs="+")
    i.add_argument("--field-out", type=Path, help="also write the underlying variation field")

    c = sub.add_parser("control", help="staged isolation with one method")
    _common(c)
    c.add_argument("--graph", type=Path, required=True)
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--strategy")
    c.add_argument("--alpha", type=float)

    sw = sub.add_parser("sweep", help="alpha Monte Carlo over control trials")
    _common(sw)
    sw.add_argument("--graph", type=Path, required=True)
    sw.add_argument("--out", type=Path, required=True)
    sw.add_argument("--trials", type=int)
    sw.add_argument("--workers", type=int)

    ing = sub.add_parser("ingest", help="region and case files -> graph + signal")
    _common(ing)
    ing.add_argument("--regions", type=Path, required=True)
    ing.add_argument("--cases", type=Path, required=True)
    ing.add_argument("--out", type=Path, required=True)
    ing.add_argument("--threshold-km", type=float)
    ing.add_argument("--daily", action="store_true", default=None)
    ing.add_argument("--repair", action="store_true", default=None)
    ing.add_argument("--planar", action="store_true", default=None)

    rep = sub.add_parser("report", help="plot-ready dB field")
    _common(rep)
    rep.add_argument("--graph", type=Path, required=True)
    _signal_source(rep)
    rep.add_argument("--out", type=Path, required=True, help="plot_field.csv path")
    rep.add_argument("--metric", choices=["TLV", "LV", "HPF", "Max"])
    rep.add_argument("--alpha", type=float)
    rep.add_argument("--r", type=int)
    return parser


def _override(section, **values):
    values = {k: v for k, v in values.items() if v is not None}
    if not values:
        return section
    try:
        return dataclasses.replace(section, **values)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(str(e)) from None


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config).with_seed(args.seed)
    cfg.validate()
    return cfg


def _signal(args):
    if args.run is not None:
        run = io.read_run(args.run)
        return run.series
    X, _ = io.read_series(args.series)
    return X


def _check_shape(g, X):
    if X.shape[0] != g.n:
        raise ArgumentError(f"signal has {X.shape[0]} nodes but the graph has {g.n}")


# --- commands ------------------------------------------------------------------


def cmd_graph(args):
    if args.action == "generate":
        cfg = _config(args)
        section = _override(cfg.graph, kind=args.kind, n=args.n)
        gcfg = section.build_config(cfg.seed)
        g = build_distance_graph(gcfg) if section.kind == "distance" else build_scale_free_graph(gcfg)
        io.write_graph(g, args.out)
        print(f"graph: {g.n} nodes, {g.num_edges} edges -> {args.out}")
    elif args.action == "validate":
        g = io.read_graph(args.path) if args.path.is_dir() else io.read_dense(args.path)
        print(f"ok: {g.n} nodes, {g.num_edges} edges, fingerprint {g.fingerprint()}")
    else:
        if args.source.is_dir():
            io.write_dense(io.read_graph(args.source), args.out)
        else:
            io.write_graph(io.read_dense(args.source), args.out)
        print(f"converted {args.source} -> {args.out}")


def cmd_simulate(args):
    cfg = _config(args)
    g = io.read_graph(args.graph)
    section = _override(cfg.scenario, kind=args.scenario, horizon=args.horizon)
    spec = section.spec()
    params = cfg.sir.params(g.n)
    init, schedule = make_scenario(spec, g, cfg.seed)
    run = integrate(g, params, init, cfg.integrator, spec.horizon, schedule,
                    keep_full=not args.no_sir, scenario=spec, seed=cfg.seed)
    io.write_run(run, args.out, with_sir=not args.no_sir)
    sources = [int(v) for v in np.flatnonzero(init.i)]
    print(f"simulated {spec.kind} to t={spec.horizon}; sources {sources} -> {args.out}")


def cmd_identify(args):
    cfg = _config(args)
    section = _override(cfg.identify, strategy=args.strategy, alpha=args.alpha, r=args.r,
                        p=args.p, times=tuple(args.times) if args.times else None)
    icfg = section.config()
    g = io.read_graph(args.graph)
    X = _signal(args)
    _check_shape(g, X)
    spectrum = graph_spectrum(g) if icfg.strategy == "HPF" else None
    sets = identify_all(g, X, icfg, section.times, spectrum)
    io.write_influential(args.out, sets)
    if args.field_out is not None:
        _write_field(args.field_out, g, X, icfg, [s.time for s in sets])
    print(f"{icfg.strategy}: {len(sets)} steps, top {icfg.top_count(g.n)} nodes each -> {args.out}")


def _write_field(path, g, X, icfg, times):
    if icfg.strategy == "SGWT":
        t = times[-1]
        coeffs, scales = sgwt_coefficients(g, X[:, t - icfg.r : t], icfg.sgwt)
        io.write_sgwt_coefficients(path, coeffs, scales)
        return
    if icfg.strategy == "LV":
        values = local_variation(g, X[:, [t - 1 for t in times]])
        field = VariationField(values, "LV", None, np.array(times))
    elif icfg.strategy == "TLV":
        cols = []
        for t in times:
            window = X[:, t - icfg.r : t]
            f = tlv_normalized(g, window, icfg.alpha) if icfg.normalized else tlv(g, window, icfg.alpha)
            cols.append(f.values[:, -1])
        metric = "TLV_N" if icfg.normalized else "TLV"
        field = VariationField(np.column_stack(cols), metric, icfg.alpha, np.array(times))
    else:
        raise ArgumentError(f"--field-out supports LV, TLV and SGWT, not {icfg.strategy}")
    io.write_variation_field(path, field)


def cmd_control(args):
    cfg = _config(args)
    g = io.read_graph(args.graph)
    exp = cfg.experiment()
    strategy = args.strategy or cfg.control.strategy
    alpha = cfg.identify.alpha if args.alpha is None else args.alpha
    _override(cfg.identify, strategy=strategy, alpha=alpha).config()
    setup = prepare_control(g, exp, cfg.seed)
    truth = run_method(setup, exp, None)
    outcome = run_method(setup, exp, strategy, alpha)
    out = Path(args.out)
    payload = io.control_outcome_payload(outcome, truth.final_cumulative)
    payload["peak"] = setup.peak
    payload["seed"] = cfg.seed
    payload["schedule"] = [e.to_dict() for e in setup.schedule]
    io.write_json(out / "control_outcome.json", payload)
    io.write_series(out / "controlled_infection.csv", outcome.controlled_series)
    io.write_series(out / "uncontrolled_infection.csv", truth.controlled_series)
    io.write_influential(out / "influential.csv", outcome.stages)
    io.write_csv(out / "cumulative.csv", ["time", "controlled", "uncontrolled"],
                 ([t + 1, a, b] for t, (a, b) in
                  enumerate(zip(outcome.cumulative_curve.tolist(), truth.cumulative_curve.tolist()))))
    print(f"{strategy}: burden {outcome.final_cumulative:.6g} vs {truth.final_cumulative:.6g}"
          f" without control -> {out}")


def cmd_sweep(args):
    cfg = _config(args)
    section = _override(cfg.sweep, trials=args.trials, workers=args.workers)
    g = io.read_graph(args.graph)
    result = alpha_sweep(g, cfg.experiment(), section.trials, cfg.seed, section.workers)
    io.write_sweep(args.out, result)
    best = [a for a in result.best_alphas() if a is not None]
    share = np.mean([a >= 0.6 for a in best]) if best else float("nan")
    print(f"{section.trials} trials; best alpha >= 0.6 in {share:.0%} -> {args.out}")


def cmd_ingest(args):
    cfg = _config(args)
    section = _override(cfg.ingest, threshold_km=args.threshold_km, daily=args.daily,
                        repair=args.repair, planar=args.planar)
    warnings = []
    table = io.ingest_cases(args.regions, args.cases, repair=section.repair, warnings=warnings)
    for w in warnings:
        print(f"warning: repaired {w}", file=sys.stderr)
    g = io.build_geo_graph(table.regions, section.threshold_km, section.sigma_km,
                           planar=section.planar)
    X = io.normalize_signal(table, daily=section.daily)
    out = Path(args.out)
    io.write_graph(g, out)
    io.write_series(out / "infection.csv", X)
    io.write_csv(out / "dates.csv", ["time", "date"],
                 ([t + 1, d.isoformat()] for t, d in enumerate(table.dates)))
    print(f"ingested N = {table.n} regions x {len(table.dates)} dates, {g.num_edges} edges -> {out}")


def cmd_report(args):
    cfg = _config(args)
    section = _override(cfg.report, metric=args.metric, alpha=args.alpha, r=args.r)
    g = io.read_graph(args.graph)
    X = _signal(args)
    _check_shape(g, X)
    times = list(range(section.r, X.shape[1] + 1))
    db = plot_field(g, X, metric=section.metric, alpha=section.alpha, r=section.r,
                    hpf_fraction=section.hpf_fraction, floor=section.db_floor, times=times)
    if g.coords is None:
        xy = [(None, None)] * g.n
    elif g.coord_kind == "latlon":
        xy = [(lon, lat) for lat, lon in g.coords.tolist()]
    else:
        xy = [tuple(c) for c in g.coords.tolist()]
    rows = ([v, t, db[v, k], *xy[v]] for k, t in enumerate(times) for v in range(g.n))
    io.write_csv(args.out, ["node", "time", "value_db", "x", "y"], rows)
    print(f"{section.metric} field for steps {section.r}..{X.shape[1]} -> {args.out}")


COMMANDS = {
    "graph": cmd_graph,
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "control": cmd_control,
    "sweep": cmd_sweep,
    "ingest": cmd_ingest,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    try:
        COMMANDS[args.command](args)
    except (ConfigurationError, ArgumentError, IngestionError, CapacityError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        # a missing input is a bad argument, not a failed computation
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except IntegrationError as e:
        print(f"runtime error: {e} (t={e.time})", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, RuntimeError, MemoryError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
