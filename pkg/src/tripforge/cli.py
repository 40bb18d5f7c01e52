"""Command-line surface: synth -> generate -> eval pipelines.

Exit codes: 0 success, 2 configuration or file-format problems, 3 runtime
failures (unreachable demand, frozen chain, missing data).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import evaluation, io
from .candidates import CandidateError, HistoryRecord, TripHistory, build_candidate_set, history_lookup
from .evaluation import EvalConfig
from .planner import PlannerError, k_top_routes
from .sampler import AnnealingSchedule, FrozenChainError, SamplerConfig, run
from .synth import SynthCollection, SynthConfig, SynthError, build_grid_network, generate_collection


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Synth config file: line-oriented "key value" pairs.
# ---------------------------------------------------------------------------

_SYNTH_INT_KEYS = {
    "seed", "days", "start_weekday", "trips_per_day", "planner_k", "od_pool_size",
    "grid_rows", "grid_cols", "network_seed",
}
_SYNTH_FLOAT_KEYS = {
    "weekend_scale", "p_round", "p_detour", "detour_rank_decay", "dwell_mean_s",
    "round_dwell_mean_s", "weekend_round_factor", "weekend_dwell_factor",
    "grid_spacing_m",
}
_PROBABILITY_KEYS = {"p_round", "p_detour", "weekend_scale"}


def parse_synth_config(path) -> SynthConfig:
    raw: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise io.FormatError(path, lineno, f"expected 'key value', got {line!r}")
        key, value = parts
        if key in raw:
            raise io.FormatError(path, lineno, f"duplicate key {key!r}")
        raw[key] = value

    values: dict[str, object] = {}
    for key, value in raw.items():
        if key in _SYNTH_INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"field {key!r}: expected integer, got {value!r}") from None
        elif key in _SYNTH_FLOAT_KEYS:
            try:
                values[key] = float(value)
            except ValueError:
                raise ConfigError(f"field {key!r}: expected number, got {value!r}") from None
        elif key in ("network", "day_types"):
            values[key] = value
        else:
            raise ConfigError(f"unknown field {key!r}")

    for key in _PROBABILITY_KEYS:
        if key in values and not 0.0 <= values[key] <= 1.0:
            raise ConfigError(f"field {key!r}: probability {values[key]} outside [0, 1]")

    if "network" in values:
        network = io.read_network(values.pop("network"))
    else:
        network = build_grid_network(
            rows=int(values.pop("grid_rows", 5)),
            cols=int(values.pop("grid_cols", 6)),
            spacing_m=float(values.pop("grid_spacing_m", 600.0)),
            seed=int(values.pop("network_seed", 0)),
        )
    for key in ("grid_rows", "grid_cols", "grid_spacing_m", "network_seed"):
        values.pop(key, None)

    day_types = values.pop("day_types", None)
    if day_types is not None:
        day_types = tuple(day_types.split(","))

    try:
        return SynthConfig(network=network, day_types=day_types, **values)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = parse_synth_config(args.config)
    collection = generate_collection(cfg)
    io.write_collection(collection, args.out_dir)
    counts = {}
    for d in collection.days:
        counts[d.day_type] = counts.get(d.day_type, 0) + 1
    label = ", ".join(f"{v} {k}" for k, v in sorted(counts.items()))
    print(f"wrote {len(collection.days)} days ({label}) to {args.out_dir}")
    return 0


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        iterations=args.iterations,
        schedule=AnnealingSchedule(l0=args.l0, decay=args.decay, l_min=args.l_min),
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
        epsilon=args.epsilon,
    )


def cmd_generate(args) -> int:
    network = io.read_network(args.network)
    stops_by_id = {s.stop_id: s for s in network.stops}
    triples = io.read_demand(args.demand, stops_by_id)
    if not triples:
        raise ConfigError(f"demand file {args.demand} is empty")
    spec = io.read_targets(args.targets)

    history = TripHistory([])
    if args.history_dir:
        _, days = io.read_collection(args.history_dir, network)
        for d in days:
            for route in d.routes:
                history.add(HistoryRecord(route=route, day=d.day, day_type=d.day_type))

    candidate_sets = []
    kept = []
    dropped = []
    for triple in triples:
        planner_routes = k_top_routes(network, triple, k=args.planner_k)
        hist_routes = history_lookup(history, triple, args.slot_width) if len(history) else []
        if not planner_routes and not hist_routes:
            dropped.append(triple.demand_id)
            continue
        candidate_sets.append(build_candidate_set(triple, planner_routes, hist_routes, args.lambda_mix))
        kept.append(triple)
    if not candidate_sets:
        raise SynthError("no demand could be served by planner or history")

    trace = run(candidate_sets, spec, _sampler_config(args))

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_trace(trace, out / "trace.csv")
    routes = trace.best_state.assigned_routes()
    io.write_trips(
        [(0, "working", t.demand_id, r) for t, r in zip(kept, routes)],
        out / "assigned.trips",
    )
    if dropped:
        (out / "dropped.txt").write_text("\n".join(dropped) + "\n", encoding="utf-8")
    print(
        f"assigned {len(kept)} demands (dropped {len(dropped)}); "
        f"error {trace.initial_error:.4f} -> {trace.best_error:.4f}"
    )
    return 0


def _eval_config(args) -> EvalConfig:
    return EvalConfig(
        iterations=args.iterations,
        checkpoint_every=args.checkpoint_every,
        seed=args.seed,
        l0=args.l0,
        decay=args.decay,
        l_min=args.l_min,
        epsilon=args.epsilon,
        planner_k=args.planner_k,
        lambda_mix=args.lambda_mix,
        slot_width_s=args.slot_width,
    )


def cmd_eval(args) -> int:
    network, days = io.read_collection(args.history_dir)
    if not days:
        raise ConfigError(f"no day files found in {args.history_dir}")
    synth_cfg = SynthConfig(
        network=network,
        days=len(days),
        day_types=tuple(d.day_type for d in days),
        trips_per_day=max(len(d.triples) for d in days),
    )
    collection = SynthCollection(config=synth_cfg, days=tuple(days))
    cfg = _eval_config(args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if args.mode == "oneday":
        if args.test_day is None:
            raise ConfigError("--test-day is required for mode 'oneday'")
        result = evaluation.one_day_eval(collection, args.test_day, cfg)
        io.write_trace(result.trace, out / "trace.csv")
        records = []
        for comp_before, comp_after in zip(
            result.report_before.comparisons, result.report_after.comparisons
        ):
            records.append(
                {
                    "characteristic": comp_before.tag,
                    "l1_before": comp_before.l1,
                    "l1_after": comp_after.l1,
                    "observed_mean": comp_before.observed_mean,
                    "simulated_mean_before": comp_before.simulated_mean,
                    "simulated_mean_after": comp_after.simulated_mean,
                }
            )
        io.write_table(records, out / "oneday.csv")
        _write_histogram_series(result, out / "distributions.csv")
        print(f"day {args.test_day}: error {result.initial_error:.4f} -> {result.final_error:.4f}")
    elif args.mode == "online":
        day_types = tuple(args.day_types.split(","))
        result = evaluation.online_eval(collection, day_types, cfg)
        io.write_table([r.as_record() for r in result.rows], out / "online.csv")
        print(f"evaluated {len(result.rows)} days -> {out / 'online.csv'}")
    elif args.mode == "daytype":
        result = evaluation.daytype_mix_eval(collection, cfg)
        io.write_table(
            [
                {
                    "test_day": r.test_day,
                    "day_type": r.day_type,
                    "matched_error": r.matched_error,
                    "pooled_error": r.pooled_error,
                }
                for r in result.rows
            ],
            out / "daytype.csv",
        )
        print(f"evaluated {len(result.rows)} days -> {out / 'daytype.csv'}")
    else:
        raise ConfigError(f"unknown eval mode {args.mode!r}")
    return 0


def _write_histogram_series(result, path) -> None:
    """Plot-ready long-format series: per characteristic and bin, the target,
    observed, initial and final masses."""
    records = []
    spec_by_tag = {e.tag: e for e in result.prepared.spec.entries}
    for comp_b, comp_a in zip(result.report_before.comparisons, result.report_after.comparisons):
        target = spec_by_tag[comp_b.tag].target
        edges = comp_b.observed.edges
        for b in range(len(edges) - 1):
            records.append(
                {
                    "characteristic": comp_b.tag,
                    "bin_left": float(edges[b]),
                    "bin_right": float(edges[b + 1]),
                    "target_mass": float(target.masses[b]),
                    "observed_mass": float(comp_b.observed.masses[b]),
                    "initial_mass": float(comp_b.simulated.masses[b]),
                    "final_mass": float(comp_a.simulated.masses[b]),
                }
            )
    io.write_table(records, path)


# ---------------------------------------------------------------------------
# Argument parsing.
# ---------------------------------------------------------------------------


def _add_sampler_flags(p: argparse.ArgumentParser, iterations_default: int) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed (all runs are reproducible)")
    p.add_argument("--iterations", type=int, default=iterations_default, help="proposal count")
    p.add_argument("--decay", type=float, default=0.99, help="temperature decay per sweep")
    p.add_argument("--l0", type=float, default=1.0, help="initial temperature")
    p.add_argument("--l-min", dest="l_min", type=float, default=1e-3, help="temperature floor")
    p.add_argument("--checkpoint-every", type=int, default=25_000, help="trace sampling period")
    p.add_argument("--epsilon", type=float, default=1e-9, help="objective stabilizer near zero")
    p.add_argument("--planner-k", type=int, default=5, help="planner recommendations per demand")
    p.add_argument("--lambda-mix", type=float, default=0.5, help="planner share of candidate mass")
    p.add_argument("--slot-width", type=int, default=1200, help="history match window, seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripforge",
        description="Generate transit trips whose characteristics match target distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic multi-day trip collection")
    p_synth.add_argument("--config", required=True, help="synth config file")
    p_synth.add_argument("--out-dir", required=True, help="output directory")
    p_synth.set_defaults(fn=cmd_synth)

    p_gen = sub.add_parser("generate", help="assign routes to a demand file via annealed sampling")
    p_gen.add_argument("--network", required=True, help="network file")
    p_gen.add_argument("--demand", required=True, help="demand file")
    p_gen.add_argument("--targets", required=True, help="targets spec file")
    p_gen.add_argument("--history-dir", default=None, help="optional trip history directory")
    p_gen.add_argument("--out-dir", required=True, help="output directory")
    _add_sampler_flags(p_gen, iterations_default=100_000)
    p_gen.set_defaults(fn=cmd_generate)

    p_eval = sub.add_parser("eval", help="run an evaluation protocol on a collection")
    p_eval.add_argument("--mode", required=True, choices=["oneday", "online", "daytype"])
    p_eval.add_argument("--history-dir", required=True, help="collection directory")
    p_eval.add_argument("--out-dir", required=True, help="output directory")
    p_eval.add_argument("--test-day", type=int, default=None, help="test day for mode 'oneday'")
    p_eval.add_argument("--day-types", default="working", help="comma list for mode 'online'")
    _add_sampler_flags(p_eval, iterations_default=100_000)
    p_eval.set_defaults(fn=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors already
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (ConfigError, io.FormatError, PlannerError, CandidateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SynthError, FrozenChainError, evaluation.EvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
