"""Command-line interface.

Subcommands cover the full lifecycle: simulate a synthetic world, calibrate
a snapshot from a response matrix, route queries, evaluate the tradeoff
curve on held-out data, onboard a new configuration adaptively, and serve
the HTTP API.

Exit codes: 0 success, 2 validation failure, 3 I/O or data-format failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .core import Scalarization, TradeoffProfile, build_pool, load_matrix, save_matrix
from .costing import compute_costs, load_prices, save_prices
from .embed import load_embedding_store, save_embedding_store
from .errors import (
    DataFormatError,
    EngineError,
    NoSnapshotError,
    NumericalError,
    RemoteEmbeddingError,
    ThresholdUnreachableError,
    ValidationError,
)
from .irt import TrainingConfig, ability_ordering, predict_grid, train
from .metrics import evaluation_report, realize_curve, reference_point
from .scalarize import default_weight_grid, pools_from_predictions, sweep
from .snapshot import load_snapshot, make_snapshot, route_embedding, save_snapshot
from .synth import generate_world, sample_matrix, world_manifest

log = logging.getLogger("routeiq")

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        doc = {"level": record.levelname.lower(), "event": record.getMessage()}
        extra = getattr(record, "fields", None)
        if extra:
            doc.update(extra)
        return json.dumps(doc, sort_keys=True)


def _setup_logging(json_logs: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(_JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    root = logging.getLogger("routeiq")
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO)


def _event(event: str, **fields) -> None:
    log.info(event, extra={"fields": fields})


def _emit(doc: dict) -> None:
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


# -- subcommand implementations ---------------------------------------------


def cmd_simulate(args) -> int:
    world = generate_world(args.configs, args.queries, args.dim, seed=args.seed)
    matrix = sample_matrix(world, density=args.density)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    matrix_path = out / "matrix.ldjson"
    embed_path = out / "embeddings.ldjson"
    prices_path = out / "prices.json"
    world_path = out / "world.json"
    save_matrix(matrix, matrix_path, dim=world.dim)
    save_embedding_store(embed_path, world.embeddings)
    save_prices(world.prices, prices_path)
    with open(world_path, "w", encoding="utf-8") as fh:
        json.dump(world_manifest(world), fh, sort_keys=True)
        fh.write("\n")
    _event("simulated", configs=args.configs, queries=args.queries, cells=len(matrix.cells))
    _emit({
        "matrix": str(matrix_path), "embeddings": str(embed_path),
        "prices": str(prices_path), "world": str(world_path),
        "n_cells": len(matrix.cells),
    })
    return EXIT_OK


def cmd_calibrate(args) -> int:
    matrix, dim = load_matrix(args.matrix)
    store = load_embedding_store(args.embeddings, dim=dim)
    prices = load_prices(args.prices)
    pool = build_pool(matrix.configs, prices)
    training = TrainingConfig(
        epochs=args.epochs, learning_rate=args.learning_rate,
        batch_size=args.batch_size, grad_clip_norm=args.grad_clip,
        seed=args.seed, positive_discrimination=args.positive_discrimination)
    _event("training", configs=len(matrix.configs), queries=len(matrix.queries),
           cells=len(matrix.cells), epochs=training.epochs)
    result = train(matrix, store, training)
    cost_table = compute_costs(matrix, pool, pool_version=result.params.version)
    snap = make_snapshot(result.params, cost_table, pool)
    save_snapshot(snap, args.out)
    _event("calibrated", version=snap.version, final_loss=result.final_loss)
    _emit({
        "snapshot": str(args.out),
        "version": snap.version,
        "final_loss": result.final_loss,
        "ability_ordering": ability_ordering(result.params),
    })
    return EXIT_OK


def _query_ids(args) -> list[str]:
    if args.queries:
        return [q for q in args.queries.split(",") if q]
    if args.queries_file:
        with open(args.queries_file, "r", encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip()]
    raise ValidationError("provide --queries or --queries-file")


def cmd_route(args) -> int:
    snap = load_snapshot(args.snapshot)
    store = load_embedding_store(args.embeddings, dim=snap.dim)
    profile = TradeoffProfile(w1=args.w1, scalarization=Scalarization(args.scalarization))
    qids = _query_ids(args)
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for qid in qids:
            decision = route_embedding(snap, store.embed(qid), profile)
            sink.write(json.dumps({
                "query_id": qid,
                "config_id": decision.config_id,
                "predicted_performance": decision.predicted_performance,
                "predicted_cost": decision.predicted_cost,
                "scalar_score": decision.scalar_score,
                "w1": profile.w1,
                "scalarization": profile.scalarization.value,
            }, sort_keys=True) + "\n")
    finally:
        if args.out:
            sink.close()
    _event("routed", queries=len(qids), w1=args.w1)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    snap = load_snapshot(args.snapshot)
    test_matrix, _ = load_matrix(args.matrix)
    store = load_embedding_store(args.embeddings, dim=snap.dim)

    config_ids = list(snap.config_ids)
    E = store.matrix(list(test_matrix.queries))
    P = predict_grid(snap.params, config_ids, E)
    pools = pools_from_predictions(config_ids, P, snap.cost_table.normalized_cost)
    pool_map = {qid: pools[j] for j, qid in enumerate(test_matrix.queries)}

    weights = default_weight_grid(args.grid)
    decisions = sweep(weights, Scalarization(args.scalarization), pool_map)
    curve = realize_curve(decisions, list(test_matrix.queries), test_matrix,
                          snap.cost_table)

    reference = args.reference_config or ability_ordering(snap.params)[0]
    ref_perf, ref_cost = reference_point(test_matrix, snap.cost_table, reference)
    thresholds = args.cpt if args.cpt else [90.0]
    report = evaluation_report(curve, thresholds, ref_perf, ref_cost,
                               reference_config=reference)

    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    if args.csv:
        import csv

        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["w1", "performance", "cost", "dollar_cost"])
            for pt in curve.points:
                writer.writerow([pt.w1, pt.performance, pt.cost, pt.dollar_cost])
    _event("evaluated", points=len(curve.points), hypervolume=report["hypervolume"])
    _emit({"report": str(args.out), "hypervolume": report["hypervolume"],
           "cpt": report["cpt"]})
    return EXIT_OK


def cmd_add_config(args) -> int:
    from .core import parse_config_id
    from .service import RoutingEngine

    snap = load_snapshot(args.snapshot)
    model, budget = parse_config_id(args.config)
    engine = RoutingEngine(snapshot_dir=None, snapshot=snap)
    outcome = engine.add_config(model, budget, args.price, args.responses,
                                embeddings_path=args.embeddings,
                                budget_queries=args.budget)
    save_snapshot(engine.snapshot, args.out)
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            for step in outcome["steps"]:
                fh.write(json.dumps(step, sort_keys=True) + "\n")
    _event("config-added", config=outcome["config_id"], ability=outcome["ability"],
           probed=outcome["probed_queries"])
    _emit({
        "snapshot": str(args.out),
        "version": outcome["version"],
        "config_id": outcome["config_id"],
        "ability": outcome["ability"],
        "probed_queries": outcome["probed_queries"],
    })
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app, engine_from_config

    cfg = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    if args.snapshot_dir:
        cfg["snapshot_dir"] = args.snapshot_dir
    engine = engine_from_config(cfg)
    host = args.host or cfg.get("host", "127.0.0.1")
    port = args.port or int(cfg.get("port", 8201))
    _event("serving", host=host, port=port)
    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="routeiq",
        description="Learned performance/cost routing across model configurations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="seed for stochastic steps")
    parser.add_argument("--json-logs", action="store_true",
                        help="emit structured JSON log lines on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic world and sampled matrix")
    p.add_argument("--configs", type=int, required=True)
    p.add_argument("--queries", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--density", type=float, default=1.0,
                   help="fraction of config/query cells observed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="fit parameters and publish a snapshot file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--prices", required=True)
    p.add_argument("--out", required=True, help="snapshot file to write")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--grad-clip", type=float, default=1.0)
    p.add_argument("--positive-discrimination", action="store_true",
                   help="constrain discriminations positive via softplus")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("route", help="route stored queries against a snapshot")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--w1", type=float, required=True)
    p.add_argument("--scalarization", choices=[s.value for s in Scalarization],
                   default="linear")
    p.add_argument("--queries", help="comma-separated query ids")
    p.add_argument("--queries-file", help="file with one query id per line")
    p.add_argument("--out", help="write decisions here instead of stdout")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("evaluate", help="sweep weights and score the tradeoff curve")
    p.add_argument("--snapshot", required=True)
    p.add_argument("--matrix", required=True, help="held-out response matrix")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--grid", type=int, default=101, help="number of weights in [0, 1]")
    p.add_argument("--scalarization", choices=[s.value for s in Scalarization],
                   default="linear")
    p.add_argument("--cpt", type=float, action="append", default=None,
                   help="performance threshold percent (repeatable)")
    p.add_argument("--reference-config",
                   help="reference config id for cpt (default: highest ability)")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--csv", help="also write curve points as CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("add-config", help="onboard a new configuration adaptively")
    p.add_argument("--snapshot", required=True, help="input snapshot file")
    p.add_argument("--out", required=True, help="output snapshot file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--config", required=True, help="canonical id, e.g. m3@1024")
    p.add_argument("--price", type=float, required=True, help="dollars per token")
    p.add_argument("--responses", required=True, help="response log for the new config")
    p.add_argument("--budget", type=int, default=None,
                   help="probe budget (default: 12%% of candidates)")
    p.add_argument("--transcript", help="write the session transcript here")
    p.set_defaults(func=cmd_add_config)

    p = sub.add_parser("serve", help="run the HTTP routing service")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--snapshot-dir")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(args.json_logs)
    try:
        return args.func(args)
    except (ValidationError, ThresholdUnreachableError) as exc:
        _fail(args, exc, EXIT_VALIDATION)
        return EXIT_VALIDATION
    except (DataFormatError, RemoteEmbeddingError, NoSnapshotError, OSError) as exc:
        _fail(args, exc, EXIT_IO)
        return EXIT_IO
    except (NumericalError, FloatingPointError) as exc:
        _fail(args, exc, EXIT_NUMERIC)
        return EXIT_NUMERIC
    except EngineError as exc:
        _fail(args, exc, EXIT_VALIDATION)
        return EXIT_VALIDATION


def _fail(args, exc: Exception, code: int) -> None:
    name = getattr(exc, "code", exc.__class__.__name__.lower())
    if getattr(args, "json_logs", False):
        sys.stderr.write(json.dumps(
            {"event": "error", "error": name, "message": str(exc), "exit_code": code},
            sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"error ({name}): {exc}\n")
