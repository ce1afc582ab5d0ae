"""Batch command line: run, sample, scaling-study, validate.

Every command reads a JSON experiment config, checks it against
``CONFIG_SCHEMA`` and writes line-delimited JSON records. Exit codes:
0 success, 1 invalid structures found by ``validate``, 2 config error,
3 runtime error (records written so far stay on disk).
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import logging
import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import jsonschema
import numpy as np
from scipy.stats import spearmanr

from .design import DesignConfig, EpochRecord, Mode, Toolkit, run_design
from .domain import Domain, validate
from .errors import ConfigError, PolydesignError
from .estimators import (
    CompositeEstimator,
    Estimator,
    ReferenceDistanceEstimator,
    RoadCostEstimator,
    RoadScenario,
    ShadowWaveEstimator,
    WaveScenario,
)
from .evolution import MutationConfig, Operator
from .geometry import Kind, Polygon, Structure
from .io import RecordWriter, read_records, structure_from_json, structure_to_json
from .optimizers import SPEA2, GAConfig, GeneticOptimizer, Variation, ga_run
from .problems import make_reference
from .sampler import SamplerConfig, StandardSampler

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

# stream purposes for seeds derived outside the design loop
_SAMPLE_STREAM, _REFERENCE_STREAM, _STUDY_STREAM = 3, 4, 5

_point = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_ring = {"type": "array", "items": _point, "minItems": 2}
_count = {"type": "integer", "minimum": 1}

_ESTIMATOR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"enum": ["reference_distance", "road_npv", "shadow_waves"]},
        # reference_distance
        "reference": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "n_polygons": _count,
                "n_points": _count,
                "polygons": {"type": "array", "items": _ring},
                "kind": {"enum": ["open", "closed"]},
            },
        },
        "samples": {"type": "integer", "minimum": 16},
        # road_npv
        "wells": {"type": "array", "items": _point},
        "r_road": {"type": "number", "exclusiveMinimum": 0},
        # shadow_waves
        "wind_direction": _point,
        "h0": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "minimum": 0},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domain", "toolkit"],
    "properties": {
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["allowed_area"],
            "properties": {
                "allowed_area": _ring,
                "prohibited": {"type": "array", "items": _ring},
                "targets": {"type": "array", "items": _point},
                "min_points": {"type": "integer", "minimum": 2},
                "max_points": {"type": "integer", "minimum": 2},
                "min_polygons": _count,
                "max_polygons": _count,
                "polygon_kind": {"enum": ["open", "closed"]},
                "fixed_endpoints": {"type": "array", "items": _point, "minItems": 2, "maxItems": 2},
            },
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_points": {"type": "integer", "minimum": 2},
                "attempt_cap": _count,
                "n_polygons": _count,
            },
        },
        "toolkit": {
            "type": "object",
            "additionalProperties": False,
            "required": ["estimator"],
            "properties": {
                "mode": {"enum": [m.value for m in Mode]},
                "estimator": {
                    "oneOf": [
                        _ESTIMATOR,
                        {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["name", "cheap", "accurate"],
                            "properties": {
                                "name": {"const": "composite"},
                                "cheap": _ESTIMATOR,
                                "accurate": _ESTIMATOR,
                                "threshold": {"type": "number"},
                            },
                        },
                    ]
                },
                "optimizer": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["name"],
                    "properties": {
                        "name": {"enum": ["ga", "spea2", "none"]},
                        "elite": {"type": "integer", "minimum": 0},
                        "archive_size": _count,
                        "k_neighbors": {"type": "integer", "minimum": 0},
                        "monotone_archive": {"type": "boolean"},
                        "p_crossover": {"type": "number", "minimum": 0, "maximum": 1},
                        "p_mutation": {"type": "number", "minimum": 0, "maximum": 1},
                        "mutation": {
                            "type": "object",
                            "additionalProperties": False,
                            "properties": {
                                "max_rotation_deg": {"type": "number", "minimum": 0},
                                "displacement_fraction": {"type": "number", "exclusiveMinimum": 0},
                                "operator_weights": {
                                    "type": "object",
                                    "additionalProperties": False,
                                    "properties": {op.value: {"type": "number", "minimum": 0} for op in Operator},
                                },
                            },
                        },
                    },
                },
            },
        },
        "design": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "population_size": {"type": "integer", "minimum": 2},
                "k_select": _count,
                "max_epochs": _count,
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "time_budget_s": {"type": "number", "exclusiveMinimum": 0},
                "target_value": {"type": "number"},
                "workers": _count,
                "reference_point": {"type": "array", "items": {"type": "number"}, "minItems": 2},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string"}},
        },
        "scaling_study": {
            "type": "object",
            "additionalProperties": False,
            "required": ["axis", "values"],
            "properties": {
                "axis": {"enum": ["polygons", "vertices", "domain_scale"]},
                "values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "repetitions": _count,
                "generations": _count,
                "population_size": {"type": "integer", "minimum": 2},
            },
        },
    },
}


# --- config handling ------------------------------------------------------


def load_config(path) -> tuple[dict, str]:
    """Parse and schema-check a config file. Returns (config, sha256 of its bytes)."""
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}", field="") from exc
    check_config(cfg)
    return cfg, digest


def check_config(cfg: dict) -> None:
    """Schema plus the cross-field rules the schema cannot express."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path)
        raise ConfigError(exc.message, field=where) from exc
    design = cfg.get("design", {})
    if "k_select" in design and design["k_select"] > design.get("population_size", 30):
        raise ConfigError("k_select must not exceed population_size", field="design.k_select")
    dom = cfg["domain"]
    if dom.get("min_points", 3) > dom.get("max_points", 10):
        raise ConfigError("min_points exceeds max_points", field="domain.min_points")
    if dom.get("min_polygons", 1) > dom.get("max_polygons", 1):
        raise ConfigError("min_polygons exceeds max_polygons", field="domain.min_polygons")


def build_domain(block: dict, scale: float = 1.0) -> Domain:
    def ring(pts, kind=Kind.CLOSED):
        return Polygon(np.asarray(pts, float) * scale, kind)

    ends = block.get("fixed_endpoints")
    try:
        return Domain(
            allowed_area=ring(block["allowed_area"]),
            prohibited=[ring(p) for p in block.get("prohibited", [])],
            targets=[tuple(np.asarray(t, float) * scale) for t in block.get("targets", [])],
            min_points=block.get("min_points", 3),
            max_points=block.get("max_points", 10),
            min_polygons=block.get("min_polygons", 1),
            max_polygons=block.get("max_polygons", 1),
            polygon_kind=Kind(block.get("polygon_kind", "closed")),
            fixed_endpoints=None if ends is None else tuple(tuple(np.asarray(e, float) * scale) for e in ends),
        )
    except ValueError as exc:
        raise ConfigError(str(exc), field="domain") from exc


def build_sampler(block: dict, d: Domain) -> StandardSampler:
    kw = {k: block[k] for k in ("max_points", "attempt_cap", "n_polygons") if k in block}
    try:
        cfg = SamplerConfig.for_domain(d, **kw)
        cfg.check(d)
    except ValueError as exc:
        raise ConfigError(str(exc), field="sampler") from exc
    return StandardSampler(d, cfg)


def _reference(block: dict, d: Domain, seed: int) -> Structure:
    if "polygons" in block:
        return structure_from_json(block, d.polygon_kind)
    rng = np.random.default_rng([block.get("seed", seed), _REFERENCE_STREAM])
    return make_reference(d, rng, block.get("n_polygons", 1), block.get("n_points"))


def build_estimator(block: dict, d: Domain, seed: int) -> Estimator:
    name = block["name"]
    if name == "composite":
        return CompositeEstimator(
            build_estimator(block["cheap"], d, seed),
            build_estimator(block["accurate"], d, seed),
            block.get("threshold", 6.0),
        )
    if name == "reference_distance":
        ref = _reference(block.get("reference", {}), d, seed)
        return ReferenceDistanceEstimator(ref, d, block.get("samples", 200))
    if name == "road_npv":
        if d.fixed_endpoints is None:
            raise ConfigError("road_npv needs domain.fixed_endpoints", field="domain.fixed_endpoints")
        sc = RoadScenario(block.get("wells", d.targets), d.fixed_endpoints, block.get("r_road", 1000.0))
        return RoadCostEstimator(sc, d)
    if name == "shadow_waves":
        if not d.targets:
            raise ConfigError("shadow_waves needs domain.targets", field="domain.targets")
        sc = WaveScenario(d.targets, tuple(block.get("wind_direction", (1.0, 0.0))),
                          block.get("h0", 2.5), block.get("gamma", math.log(2.0)))
        return ShadowWaveEstimator(sc, d)
    raise ConfigError(f"unknown estimator {name!r}", field="toolkit.estimator.name")


def build_variation(block: dict, d: Domain, sampler) -> Variation:
    m = block.get("mutation", {})
    weights = {op: 1.0 for op in Operator}
    weights.update({Operator(k): float(v) for k, v in m.get("operator_weights", {}).items()})
    if sum(weights.values()) <= 0:
        raise ConfigError("operator weights sum to zero", field="toolkit.optimizer.mutation.operator_weights")
    mcfg = MutationConfig(m.get("max_rotation_deg", 45.0), m.get("displacement_fraction", 0.05), weights)
    return Variation(d, sampler, mcfg, block.get("p_crossover", 0.7), block.get("p_mutation", 0.9))


def build_run(cfg: dict, seed: int | None = None, epochs: int | None = None):
    """Domain, toolkit and design config for ``cmd_run``."""
    d = build_domain(cfg["domain"])
    sampler = build_sampler(cfg.get("sampler", {}), d)
    dblock = dict(cfg.get("design", {}))
    if seed is not None:
        dblock["seed"] = seed
    if epochs is not None:
        dblock["max_epochs"] = epochs
    tblock = cfg["toolkit"]
    est = build_estimator(tblock["estimator"], d, dblock.get("seed", 0))
    oblock = tblock.get("optimizer", {"name": "ga"})
    optimizer = None
    if oblock["name"] != "none":
        var = build_variation(oblock, d, sampler)
        if oblock["name"] == "ga":
            if est.objective_count != 1:
                raise ConfigError("the ga optimizer needs a single-objective estimator", field="toolkit.optimizer.name")
            optimizer = GeneticOptimizer(var, oblock.get("elite", 2))
        else:
            optimizer = SPEA2(var, oblock.get("archive_size", 15), oblock.get("k_neighbors", 0),
                              dblock.get("reference_point"), oblock.get("monotone_archive", True))
    mode = Mode(tblock.get("mode", "traditional" if optimizer is not None else "random_search"))
    if optimizer is None and mode is not Mode.RANDOM_SEARCH:
        raise ConfigError(f"mode {mode.value} needs an optimizer", field="toolkit.mode")
    try:
        dcfg = DesignConfig(mode=mode, **dblock)
    except ValueError as exc:
        raise ConfigError(str(exc), field="design") from exc
    return d, Toolkit(sampler, est, optimizer), dcfg


def _call_split(est) -> dict:
    out = {"total": int(est.call_counter)}
    if isinstance(est, CompositeEstimator):
        out["cheap"] = int(est.cheap.call_counter)
        out["accurate"] = int(est.accurate.call_counter)
    return out


def epoch_record(rec: EpochRecord) -> dict:
    return {
        "type": "epoch",
        "epoch": rec.epoch,
        "best_objectives": rec.best_objectives,
        "hypervolume": rec.hypervolume,
        "estimator_calls": rec.estimator_calls,
        "structures": [structure_to_json(s) for s in rec.structures],
    }


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


# --- commands -------------------------------------------------------------


def cmd_run(config_path, seed=None, epochs=None, out=None, timing=False) -> int:
    try:
        cfg, digest = load_config(config_path)
        d, tk, dcfg = build_run(cfg, seed, epochs)
    except ConfigError as exc:
        logger.error("config error in %s: %s", exc.field or "<root>", exc)
        return EXIT_CONFIG
    except PolydesignError as exc:
        # e.g. no room to sample a reference structure
        logger.error("setup failed: %s", exc)
        return EXIT_RUNTIME
    path = out or cfg.get("output", {}).get("path")
    start = time.perf_counter()
    with _output(path) as fh:
        writer = RecordWriter(fh)
        try:
            result = run_design(tk, d, dcfg, lambda rec: writer.write(epoch_record(rec)))
        except Exception as exc:
            logger.error("run failed after %d epochs: %s", len(getattr(exc, "partial_records", [])), exc)
            return EXIT_RUNTIME
        wall = time.perf_counter() - start
        last = result.records[-1]
        writer.write({
            "type": "summary",
            "best_objectives": last.best_objectives,
            "hypervolume": last.hypervolume,
            "estimator_calls": _call_split(tk.estimator),
            # wall time breaks byte-identical reruns, so it is opt-in
            "wall_time_s": wall if timing else None,
            "seed": dcfg.seed,
            "config_digest": digest,
            "epochs": len(result.records),
            "stop_reason": result.stop_reason,
        })
    logger.info("run finished: %d epochs in %.1fs, best %s", len(result.records), wall, last.best_objectives)
    return EXIT_OK


def cmd_sample(config_path, count: int, seed=None, out=None) -> int:
    try:
        cfg, _ = load_config(config_path)
        d = build_domain(cfg["domain"])
        sampler = build_sampler(cfg.get("sampler", {}), d)
    except ConfigError as exc:
        logger.error("config error in %s: %s", exc.field or "<root>", exc)
        return EXIT_CONFIG
    if count < 0:
        logger.error("count must be >= 0")
        return EXIT_CONFIG
    seed = cfg.get("design", {}).get("seed", 0) if seed is None else seed
    rng = np.random.default_rng([seed, _SAMPLE_STREAM])
    with _output(out or cfg.get("output", {}).get("path")) as fh:
        writer = RecordWriter(fh)
        try:
            # one at a time so a failure still leaves the earlier samples on disk
            for i in range(count):
                s = sampler.sample_one(rng)
                writer.write({"type": "structure", "index": i, "structure": structure_to_json(s)})
        except Exception as exc:
            logger.error("sampling failed after %d structures: %s", writer.count, exc)
            return EXIT_RUNTIME
    return EXIT_OK


def _structures_in(record: dict):
    if "structure" in record:
        yield record["structure"]
    for s in record.get("structures", []):
        yield s


def cmd_validate(config_path, inp=None, out=None) -> int:
    try:
        cfg, _ = load_config(config_path)
        d = build_domain(cfg["domain"])
    except ConfigError as exc:
        logger.error("config error in %s: %s", exc.field or "<root>", exc)
        return EXIT_CONFIG
    n = n_valid = 0
    src = sys.stdin if inp is None or inp == "-" else open(inp, encoding="utf-8")
    try:
        with _output(out) as fh:
            writer = RecordWriter(fh)
            for record in read_records(src):
                for obj in _structures_in(record):
                    try:
                        rep = validate(structure_from_json(obj, d.polygon_kind), d).to_dict()
                    except (KeyError, ValueError) as exc:
                        rep = {"valid": False, "violations": [], "error": str(exc)}
                    writer.write({"type": "report", "index": n, **rep})
                    n += 1
                    n_valid += rep["valid"]
            writer.write({"type": "validation_summary", "count": n, "valid": n_valid})
    except json.JSONDecodeError as exc:
        logger.error("unreadable record stream: %s", exc)
        return EXIT_RUNTIME
    finally:
        if src is not sys.stdin:
            src.close()
    return EXIT_OK if n_valid == n else EXIT_INVALID


def _study_domain(cfg: dict, axis: str, value: float) -> Domain:
    block = copy.deepcopy(cfg["domain"])
    block["polygon_kind"] = "closed"
    block.pop("fixed_endpoints", None)
    if axis == "polygons":
        block["max_polygons"] = max(int(value), block.get("max_polygons", 1))
    elif axis == "vertices":
        block["max_points"] = max(int(value), block.get("max_points", 10))
    return build_domain(block, scale=value if axis == "domain_scale" else 1.0)


def scaling_study(cfg: dict, seed: int, writer: RecordWriter | None = None) -> list[dict]:
    """Reference-reconstruction runs for every sweep value and repetition.

    Each repetition draws a fresh reference and runs the GA from a fresh
    population; the row holds the final normalised chamfer error.
    """
    study = cfg["scaling_study"]
    axis, values = study["axis"], study["values"]
    reps = study.get("repetitions", 5)
    gcfg = GAConfig(study.get("population_size", 30), study.get("generations", 100))
    oblock = cfg["toolkit"].get("optimizer", {"name": "ga"})
    samples = cfg["toolkit"]["estimator"].get("samples", 200)
    rows = []
    for vi, value in enumerate(values):
        d = _study_domain(cfg, axis, value)
        for rep in range(reps):
            rng = np.random.default_rng([seed, _STUDY_STREAM, vi, rep])
            n_poly = int(value) if axis == "polygons" else 1
            n_pts = int(value) if axis == "vertices" else None
            ref = make_reference(d, rng, n_poly, n_pts)
            sampler = build_sampler(cfg.get("sampler", {}), d)
            est = ReferenceDistanceEstimator(ref, d, samples)
            res = ga_run(sampler, est, build_variation(oblock, d, sampler), gcfg, rng)
            row = {"type": "study_row", "axis": axis, "value": value, "repetition": rep,
                   "error": float(res.best.objectives[0]), "estimator_calls": est.call_counter}
            rows.append(row)
            if writer is not None:
                writer.write(row)
            logger.info("%s=%s rep %d: error %.4g", axis, value, rep, row["error"])
    return rows


def study_summary(rows: list[dict]) -> dict:
    values = sorted({r["value"] for r in rows})
    medians = [float(np.median([r["error"] for r in rows if r["value"] == v])) for v in values]
    rho = float(spearmanr(values, medians).statistic) if len(values) > 1 else None
    if rho is not None and math.isnan(rho):
        rho = None
    return {"type": "study_summary", "values": values, "median_error": medians, "spearman": rho}


def cmd_scaling_study(config_path, seed=None, out=None) -> int:
    try:
        cfg, digest = load_config(config_path)
        if "scaling_study" not in cfg:
            raise ConfigError("scaling-study needs a scaling_study block", field="scaling_study")
        if cfg["toolkit"]["estimator"]["name"] != "reference_distance":
            raise ConfigError("scaling-study reconstructs references", field="toolkit.estimator.name")
        _study_domain(cfg, cfg["scaling_study"]["axis"], cfg["scaling_study"]["values"][0])
    except ConfigError as exc:
        logger.error("config error in %s: %s", exc.field or "<root>", exc)
        return EXIT_CONFIG
    seed = cfg.get("design", {}).get("seed", 0) if seed is None else seed
    with _output(out or cfg.get("output", {}).get("path")) as fh:
        writer = RecordWriter(fh)
        try:
            rows = scaling_study(cfg, seed, writer)
        except Exception as exc:
            logger.error("scaling study failed: %s", exc)
            return EXIT_RUNTIME
        writer.write({**study_summary(rows), "seed": seed, "config_digest": digest})
    return EXIT_OK


# --- entry point ----------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polydesign", description="Generative design of 2-D polygonal structures.")
    parser.add_argument("--log-level", default="WARNING", help="logging level for stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, epochs=False):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=_u64, default=None, help="override design.seed")
        p.add_argument("--out", default=None, help="output JSONL path ('-' for stdout)")
        if epochs:
            p.add_argument("--epochs", type=int, default=None, help="override design.max_epochs")

    p = sub.add_parser("run", help="run the design loop")
    common(p, epochs=True)
    p.add_argument("--timing", action="store_true", help="record wall time in the summary")
    p = sub.add_parser("sample", help="draw structures with the standard sampler")
    common(p)
    p.add_argument("--count", type=int, default=50)
    p = sub.add_parser("scaling-study", help="reconstruction error across a parameter sweep")
    common(p)
    p = sub.add_parser("validate", help="check structure records against the config's domain")
    p.add_argument("--config", required=True)
    p.add_argument("--input", default=None, help="JSONL records to check (default stdin)")
    p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.config, args.seed, args.epochs, args.out, args.timing)
        if args.command == "sample":
            return cmd_sample(args.config, args.count, args.seed, args.out)
        if args.command == "scaling-study":
            return cmd_scaling_study(args.config, args.seed, args.out)
        return cmd_validate(args.config, args.input, args.out)
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
