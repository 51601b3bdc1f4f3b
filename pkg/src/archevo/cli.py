"""Command line interface.

Subcommands:

  run     execute one search run and export its artifacts
  oracle  enumerate the space and export the exact front
  bench   run several variants/seeds and tabulate the comparison
  resume  continue an interrupted run from its checkpoint

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python 3.10
    import tomli as tomllib

from . import metrics as metrics_mod
from .engine import Engine, EngineConfig, RunResult, VARIANTS
from .evaluators import make_evaluator
from .objectives import ObjectiveConfig
from .surrogate import ForestSettings


class ConfigError(ValueError):
    """The config file is malformed or holds an unknown key."""


_SECTION_TYPES = {
    "engine": EngineConfig,
    "objective": ObjectiveConfig,
    "forest": ForestSettings,
}
_EVALUATOR_KEYS = {
    "kind",
    "table",
    "command",
    "timeout",
    "noise_sigma",
    "noise_seed",
    "total_epochs",
}


def load_config(path: str | Path) -> dict:
    """Parse and validate a TOML config into constructor-ready sections.

    Unknown sections or keys are errors naming the offender; every key is
    optional and defaults to the built-in value.
    """
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    known_sections = set(_SECTION_TYPES) | {"evaluator"}
    for section in raw:
        if section not in known_sections:
            raise ConfigError(f"unknown config section [{section}]")
    sections: dict = {}
    for name, cls in _SECTION_TYPES.items():
        data = raw.get(name, {})
        allowed = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{name}]")
        try:
            sections[name] = cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value in section [{name}]: {exc}") from exc
    evaluator = dict(raw.get("evaluator", {}))
    for key in evaluator:
        if key not in _EVALUATOR_KEYS:
            raise ConfigError(f"unknown key {key!r} in section [evaluator]")
    evaluator.setdefault("kind", "synthetic")
    if evaluator["kind"] not in ("synthetic", "tabular", "external"):
        raise ConfigError(f"unknown evaluator kind {evaluator['kind']!r}")
    sections["evaluator"] = evaluator
    return sections


def _front_summary_for(sections: dict):
    """Exact front for enumerable evaluators, None for external ones."""
    spec = sections["evaluator"]
    if spec["kind"] == "external":
        return None
    evaluator = make_evaluator(spec)
    try:
        if spec["kind"] == "tabular":
            genomes = sorted(evaluator.genomes(), key=lambda g: g.values())
            return metrics_mod.true_front(
                evaluator, sections["objective"], genomes=genomes
            )
        return metrics_mod.true_front(evaluator, sections["objective"])
    finally:
        evaluator.close()


def _write_summary(
    result: RunResult,
    sections: dict,
    wall_seconds: float,
    oracle=None,
) -> dict:
    points = [rec.objectives.as_tuple() for rec in result.archive]
    summary = {
        "variant": sections["engine"].variant,
        "seed": sections["engine"].seed,
        "completed_generation": result.completed_generation,
        "archive_size": len(points),
        "counters": result.counters.as_dict(),
        "wall_seconds": wall_seconds,
    }
    if oracle is not None and points:
        hv = metrics_mod.hypervolume(points, oracle.reference_point)
        summary["hypervolume"] = hv
        summary["oracle_hypervolume"] = oracle.hypervolume
        summary["hypervolume_ratio"] = hv / oracle.hypervolume
        summary["igd"] = metrics_mod.igd(points, list(oracle.points))
        summary["reference_point"] = list(oracle.reference_point)
    with open(result.out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def _engine_for(sections: dict, out_dir: Path) -> Engine:
    return Engine(
        sections["engine"],
        sections["objective"],
        sections["forest"],
        out_dir,
        evaluator_spec=sections["evaluator"],
    )


def cmd_run(args: argparse.Namespace) -> int:
    sections = load_config(args.config)
    if args.seed is not None:
        sections["engine"] = dataclasses.replace(sections["engine"], seed=args.seed)
    if args.variant is not None:
        sections["engine"] = dataclasses.replace(sections["engine"], variant=args.variant)
    engine_cfg = sections["engine"]
    out_dir = Path(
        args.out
        if args.out is not None
        else f"runs/{engine_cfg.variant}-seed{engine_cfg.seed}"
    )
    started = time.monotonic()
    with _engine_for(sections, out_dir) as engine:
        result = engine.run()
    oracle = _front_summary_for(sections)
    summary = _write_summary(result, sections, time.monotonic() - started, oracle)
    line = (
        f"{summary['variant']} seed={summary['seed']}: "
        f"archive={summary['archive_size']} trained={summary['counters']['trained']}"
    )
    if "hypervolume_ratio" in summary:
        line += f" hv_ratio={summary['hypervolume_ratio']:.4f}"
    print(line)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    sections = load_config(args.config)
    if sections["evaluator"]["kind"] == "external":
        raise ConfigError("oracle requires an enumerable evaluator, not external")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = _front_summary_for(sections)
    assert summary is not None
    metrics_mod.write_front_csv(out_dir / "front.csv", summary)
    with open(out_dir / "oracle_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary.to_json_dict(), fh, indent=2)
        fh.write("\n")
    print(
        f"front={len(summary.points)} points over {summary.enumerated} genomes, "
        f"hypervolume={summary.hypervolume:.6f}"
    )
    return 0


def _parse_seeds(text: str) -> list[int]:
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError(f"no seeds in {text!r}")
    return seeds


def cmd_bench(args: argparse.Namespace) -> int:
    sections = load_config(args.config)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for variant in variants:
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}")
    seeds = _parse_seeds(args.seeds)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle = _front_summary_for(sections)
    rows = []
    for variant in variants:
        for seed in seeds:
            run_sections = dict(sections)
            run_sections["engine"] = dataclasses.replace(
                sections["engine"], variant=variant, seed=seed
            )
            run_dir = out_dir / f"{variant}-seed{seed}"
            started = time.monotonic()
            with _engine_for(run_sections, run_dir) as engine:
                result = engine.run()
            summary = _write_summary(
                result, run_sections, time.monotonic() - started, oracle
            )
            rows.append(summary)
    import csv

    columns = [
        "variant",
        "seed",
        "proposed",
        "trained",
        "cache_hits",
        "discarded",
        "archive_size",
        "hypervolume_ratio",
        "igd",
    ]
    with open(out_dir / "bench.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [
                    row["variant"],
                    row["seed"],
                    row["counters"]["proposed"],
                    row["counters"]["trained"],
                    row["counters"]["cache_hits"],
                    row["counters"]["discarded"],
                    row["archive_size"],
                    row.get("hypervolume_ratio", ""),
                    row.get("igd", ""),
                ]
            )
    print(
        f"{'variant':<8} {'seed':>4} {'trained':>7} {'cache':>5} "
        f"{'archive':>7} {'hv_ratio':>8} {'igd':>8}"
    )
    for row in rows:
        hv = row.get("hypervolume_ratio")
        tail = (
            f"{hv:>8.4f} {row['igd']:>8.4f}" if hv is not None else f"{'-':>8} {'-':>8}"
        )
        print(
            f"{row['variant']:<8} {row['seed']:>4} "
            f"{row['counters']['trained']:>7} {row['counters']['cache_hits']:>5} "
            f"{row['archive_size']:>7} {tail}"
        )
    return 0


def cmd_resume(args: argparse.Namespace) -> int:
    checkpoint = Path(args.checkpoint)
    engine = Engine.from_checkpoint(checkpoint)
    sections = {
        "engine": engine.config,
        "objective": engine.objective,
        "forest": engine.forest_settings,
        "evaluator": engine.evaluator_spec,
    }
    started = time.monotonic()
    already_done = engine.completed_generation >= engine.config.generations
    with engine:
        result = engine.continue_run()
    oracle = _front_summary_for(sections) if sections["evaluator"] else None
    summary = _write_summary(result, sections, time.monotonic() - started, oracle)
    if already_done:
        print("checkpoint is already at the final generation; artifacts rewritten")
    else:
        print(
            f"resumed to generation {result.completed_generation}: "
            f"archive={summary['archive_size']} trained={summary['counters']['trained']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archevo",
        description="Surrogate-assisted multiobjective architecture search",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one search run")
    p_run.add_argument("--config", required=True, help="TOML config path")
    p_run.add_argument(
        "--out", default=None, help="output directory (default runs/<variant>-seed<N>)"
    )
    p_run.add_argument("--seed", type=int, default=None, help="override engine seed")
    p_run.add_argument(
        "--variant", choices=VARIANTS, default=None, help="override engine variant"
    )
    p_run.set_defaults(func=cmd_run)

    p_oracle = sub.add_parser("oracle", help="enumerate the exact front")
    p_oracle.add_argument("--config", required=True)
    p_oracle.add_argument("--out", default="oracle-out")
    p_oracle.set_defaults(func=cmd_oracle)

    p_bench = sub.add_parser("bench", help="compare variants across seeds")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", default="bench-out")
    p_bench.add_argument(
        "--variants", default="samea,mea,random", help="comma list of variants"
    )
    p_bench.add_argument(
        "--seeds", default="0..4", help="comma list and/or lo..hi ranges"
    )
    p_bench.set_defaults(func=cmd_bench)

    p_resume = sub.add_parser("resume", help="continue from a checkpoint")
    p_resume.add_argument("--checkpoint", required=True, help="checkpoint.json path")
    p_resume.set_defaults(func=cmd_resume)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures: engine aborts, protocol errors
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
