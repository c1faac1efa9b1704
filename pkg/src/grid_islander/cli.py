"""Command-line interface.

Subcommands mirror the pipeline stages: parse, simulate, sync-times,
partition, metrics, run-all. Every artifact is JSON or CSV; a run
manifest ties the outputs of one invocation together. Exit codes: 0
success, 2 input error, 3 numerical failure, 4 validation failure.
Verbosity follows the GRID_ISLANDER_LOG environment variable (error,
warn, info, debug).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .centralized import centralized_partition
from .decentralized import run_decentralized
from .errors import (ConfigError, DegenerateBranch, DegenerateEstimate,
                     EmptyLayer, GridError, GridIslanderError,
                     InitialIslandsOverlap, MissingSection, NoGenerator,
                     NotConverged, NotFound, NotSynchronized,
                     NumericalDivergence, ParseError, SchemaError,
                     SingularSystem, Stalled, Unreachable, UndefinedSize)
from .kuramoto import build_layer, derivative, ensemble_integrate, sync_times
from .matpower import build_network, load_case
from .metrics import compute_metrics, metrics_to_dict
from .network import Island, PowerNetwork, apply_fault, validate_partition
from .scenario import ScenarioConfig, load_scenario, with_overrides
from .serialize import (network_to_dict, partition_from_dict,
                        partition_to_dict, save_json, sync_table_from_dict,
                        sync_table_to_dict)

logger = logging.getLogger("grid_islander.cli")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

_INPUT_ERRORS = (ConfigError, ParseError, MissingSection, SchemaError,
                 NotFound, Unreachable, EmptyLayer, FileNotFoundError,
                 IsADirectoryError, PermissionError)
_NUMERICAL_ERRORS = (NotConverged, NumericalDivergence, SingularSystem,
                     NotSynchronized, GridError, DegenerateBranch,
                     DegenerateEstimate, UndefinedSize)
_VALIDATION_ERRORS = (InitialIslandsOverlap, Stalled, NoGenerator)


class _ValidationFailure(GridIslanderError):
    """Raised internally when a produced partition fails its checks."""


def _configure_logging() -> None:
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    name = os.environ.get("GRID_ISLANDER_LOG", "warn").lower()
    logging.basicConfig(level=levels.get(name, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _emit_error(exc: BaseException, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc),
               "exit_code": code}
    print(json.dumps(payload), file=sys.stderr)
    return code


def _scenario_network(cfg: ScenarioConfig) -> PowerNetwork:
    case = load_case(cfg.case_path)
    network = build_network(case, cfg.generator_set)
    for pair in cfg.fault_branches:
        network = apply_fault(network, pair)
    return network


def _initial_islands(cfg: ScenarioConfig) -> list[Island]:
    return [Island(label=k + 1, node_set=frozenset(nodes))
            for k, nodes in enumerate(cfg.initial_islands)]


def _scenario_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _manifest(cfg_path: Path, cfg: ScenarioConfig, algorithm: str,
              artifacts: dict[str, str]) -> dict:
    return {
        "schema_version": 1,
        "tool_version": __version__,
        "scenario_hash": _scenario_hash(cfg_path),
        "seed": cfg.seed,
        "algorithm": algorithm,
        "mode": cfg.mode,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "artifacts": artifacts,
    }


def _write_trajectory_csv(path: Path, layer, times, phases) -> None:
    """Rows of t,node_id,phase,frequency for one run."""
    freqs = derivative(layer, phases)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "node_id", "phase", "frequency"])
        for k, t in enumerate(times):
            for a, node in enumerate(layer.node_ids):
                writer.writerow([repr(float(t)), node,
                                 repr(float(phases[k, a])),
                                 repr(float(freqs[k, a]))])


def _write_sync_csv(path: Path, table) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["i", "j", "t_sync"])
        for (a, b), t in table.items():
            writer.writerow([a, b, "inf" if t == float("inf") else repr(t)])


def cmd_parse(args) -> int:
    case = load_case(args.case)
    gens = ([int(tok) for tok in args.generator_set.split(",")]
            if args.generator_set else None)
    network = build_network(case, gens)
    print(f"{case.n_buses} buses, {case.n_branches} branches, "
          f"{case.n_gens} generators, base {case.base_mva:g} MVA")
    if args.out:
        save_json(network_to_dict(network), args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    network = _scenario_network(cfg)
    layer = build_layer(network, network.node_ids(), label="grid")
    ensemble = ensemble_integrate(layer, cfg.ensemble_size, cfg.seed,
                                  t_max=cfg.t_max, dt=cfg.dt)
    run = args.run
    if not 0 <= run < ensemble.n_runs:
        raise ConfigError(f"run index {run} out of range "
                          f"(ensemble has {ensemble.n_runs})")
    final_freq = derivative(layer, ensemble.phases[run, -1])
    print(f"simulated {ensemble.n_runs} runs x {len(ensemble.times) - 1} "
          f"steps on {layer.size} nodes")
    print(f"run {run}: final frequency spread "
          f"{final_freq.max() - final_freq.min():.3e} pu around mean "
          f"{final_freq.mean():.6f} pu")
    if args.out:
        _write_trajectory_csv(Path(args.out), layer, ensemble.times,
                              ensemble.phases[run])
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_sync_times(args) -> int:
    cfg = _load_config(args)
    network = _scenario_network(cfg)
    layer = build_layer(network, network.node_ids(), label="grid")
    ensemble = ensemble_integrate(layer, cfg.ensemble_size, cfg.seed,
                                  t_max=cfg.t_max, dt=cfg.dt)
    table = sync_times(ensemble, network.edge_set(),
                       threshold=cfg.rho_threshold)
    finite = [t for _, t in table.items() if t != float("inf")]
    print(f"{len(table.entries)} edges: {len(finite)} synchronized, "
          f"{len(table.entries) - len(finite)} never")
    if args.out:
        save_json(sync_table_to_dict(table), args.out)
        print(f"wrote {args.out}")
    if args.csv:
        _write_sync_csv(Path(args.csv), table)
        print(f"wrote {args.csv}")
    return EXIT_OK


def _run_partition(cfg: ScenarioConfig, network: PowerNetwork,
                   sync_table=None):
    """Returns (partition, log_name, log_payload)."""
    initial = _initial_islands(cfg)
    if cfg.algorithm == "centralized":
        if sync_table is None:
            layer = build_layer(network, network.node_ids(), label="grid")
            ensemble = ensemble_integrate(layer, cfg.ensemble_size, cfg.seed,
                                          t_max=cfg.t_max, dt=cfg.dt)
            sync_table = sync_times(ensemble, network.edge_set(),
                                    threshold=cfg.rho_threshold)
        result = centralized_partition(network, initial, sync_table)
        log = {"steps": [
            {"step": s.step, "island": s.island_label, "node": s.node,
             "sync_time": ("inf" if s.sync_time == float("inf")
                           else s.sync_time),
             "imbalances": {str(k): v for k, v in s.imbalances.items()}}
            for s in result.steps]}
        return result.partition, "steps", log
    result = run_decentralized(
        network, initial, mode=cfg.mode, epsilon=cfg.freq_epsilon,
        t_max=cfg.t_max, dt=cfg.dt,
        max_stalled_rounds=cfg.max_stalled_rounds)
    log = {"rounds": result.rounds,
           "layer_evaluations": list(result.layer_evaluations),
           "evaluation_bound": result.evaluation_bound,
           "fallback_nodes": list(result.fallback_nodes),
           "events": list(result.events)}
    return result.partition, "events", log


def _validate_or_fail(network: PowerNetwork, partition) -> None:
    report = validate_partition(network, partition)
    if not report.all_ok:
        raise _ValidationFailure("; ".join(report.issues))


def cmd_partition(args) -> int:
    cfg = _load_config(args)
    network = _scenario_network(cfg)
    sync_table = None
    if args.sync_table:
        sync_table = sync_table_from_dict(
            json.loads(Path(args.sync_table).read_text(encoding="utf-8")))
    partition, log_name, log = _run_partition(cfg, network, sync_table)
    _validate_or_fail(network, partition)
    for isl in partition.islands:
        total = sum((network.bus(n).p_gen_scheduled - network.bus(n).p_demand)
                    for n in isl.node_set)
        print(f"island {isl.label}: {isl.size} nodes, "
              f"imbalance {total:+.1f} MW")
    print(f"cut set: {len(partition.cut_set)} edges")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_json(partition_to_dict(partition), out_dir / "partition.json")
    save_json(log, out_dir / f"{log_name}.json")
    artifacts = {"partition": "partition.json", log_name: f"{log_name}.json"}
    save_json(_manifest(Path(args.config), cfg, cfg.algorithm, artifacts),
              out_dir / "run_manifest.json")
    print(f"wrote {out_dir}/partition.json")
    return EXIT_OK


def cmd_metrics(args) -> int:
    cfg = _load_config(args)
    network = _scenario_network(cfg)
    partition = partition_from_dict(
        json.loads(Path(args.partition).read_text(encoding="utf-8")))
    _validate_or_fail(network, partition)
    report = compute_metrics(network, partition)
    print(f"J1={report.j1:.1f} MW  J2={report.j2:.4f}  "
          f"J3={report.j3:.1f} MW  J4={report.j4:.1f} MW")
    if args.out:
        save_json(metrics_to_dict(report), args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def cmd_run_all(args) -> int:
    cfg = _load_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    network = _scenario_network(cfg)
    artifacts: dict[str, str] = {}

    save_json(network_to_dict(network), out_dir / "network.json")
    artifacts["network"] = "network.json"

    sync_table = None
    if cfg.algorithm == "centralized":
        layer = build_layer(network, network.node_ids(), label="grid")
        ensemble = ensemble_integrate(layer, cfg.ensemble_size, cfg.seed,
                                      t_max=cfg.t_max, dt=cfg.dt)
        sync_table = sync_times(ensemble, network.edge_set(),
                                threshold=cfg.rho_threshold)
        save_json(sync_table_to_dict(sync_table),
                  out_dir / "sync_times.json")
        artifacts["sync_times"] = "sync_times.json"

    partition, log_name, log = _run_partition(cfg, network, sync_table)
    _validate_or_fail(network, partition)
    save_json(partition_to_dict(partition), out_dir / "partition.json")
    save_json(log, out_dir / f"{log_name}.json")
    artifacts["partition"] = "partition.json"
    artifacts[log_name] = f"{log_name}.json"

    report = compute_metrics(network, partition)
    save_json(metrics_to_dict(report), out_dir / "metrics.json")
    artifacts["metrics"] = "metrics.json"

    save_json(_manifest(Path(args.config), cfg, cfg.algorithm, artifacts),
              out_dir / "run_manifest.json")
    sizes = ", ".join(f"{isl.label}:{isl.size}" for isl in partition.islands)
    print(f"partition ({cfg.algorithm}): islands {sizes}, "
          f"{len(partition.cut_set)} cut edges")
    print(f"J1={report.j1:.1f} MW  J2={report.j2:.4f}  "
          f"J3={report.j3:.1f} MW  J4={report.j4:.1f} MW")
    print(f"wrote artifacts to {out_dir}")
    return EXIT_OK


def _load_config(args) -> ScenarioConfig:
    cfg = load_scenario(args.config)
    overrides = {}
    if getattr(args, "algorithm", None):
        overrides["algorithm"] = args.algorithm
    if getattr(args, "mode", None):
        overrides["mode"] = args.mode
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return with_overrides(cfg, **overrides) if overrides else cfg


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True,
                        help="scenario JSON file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the scenario seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grid-islander",
        description="Partition a transmission grid into self-sufficient "
                    "microgrids via oscillator synchronization.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a MATPOWER case file")
    p.add_argument("case", help="path to the .m case file")
    p.add_argument("--generator-set",
                   help="comma-separated generator bus ids")
    p.add_argument("--out", help="write network JSON here")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("simulate",
                       help="integrate the post-fault oscillator ensemble")
    _add_config_arg(p)
    p.add_argument("--run", type=int, default=0,
                   help="which run's trajectory to export (default 0)")
    p.add_argument("--out", help="trajectory CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sync-times",
                       help="compute internode synchronization times")
    _add_config_arg(p)
    p.add_argument("--out", help="sync table JSON path")
    p.add_argument("--csv", help="per-edge CSV path")
    p.set_defaults(func=cmd_sync_times)

    p = sub.add_parser("partition", help="grow a partition")
    _add_config_arg(p)
    p.add_argument("--algorithm",
                   choices=["centralized", "decentralized"])
    p.add_argument("--mode", choices=["analytic", "simulated"])
    p.add_argument("--sync-table",
                   help="reuse a sync table JSON (centralized only)")
    p.add_argument("--out-dir", default=".", help="artifact directory")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("metrics", help="score an existing partition")
    _add_config_arg(p)
    p.add_argument("--partition", required=True,
                   help="partition JSON to score")
    p.add_argument("--out", help="metrics report JSON path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("run-all", help="full pipeline, all artifacts")
    _add_config_arg(p)
    p.add_argument("--algorithm",
                   choices=["centralized", "decentralized"])
    p.add_argument("--mode", choices=["analytic", "simulated"])
    p.add_argument("--out-dir", default=".", help="artifact directory")
    p.set_defaults(func=cmd_run_all)
    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ValidationFailure as exc:
        return _emit_error(exc, EXIT_VALIDATION)
    except _VALIDATION_ERRORS as exc:
        return _emit_error(exc, EXIT_VALIDATION)
    except _NUMERICAL_ERRORS as exc:
        return _emit_error(exc, EXIT_NUMERICAL)
    except _INPUT_ERRORS as exc:
        return _emit_error(exc, EXIT_INPUT)
    except (ValueError, json.JSONDecodeError) as exc:
        return _emit_error(exc, EXIT_INPUT)


if __name__ == "__main__":
    sys.exit(main())
