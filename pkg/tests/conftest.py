"""Shared helpers and fixtures for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from archevo.engine import Engine, EngineConfig
from archevo.objectives import ObjectiveConfig
from archevo.surrogate import ForestSettings


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def tiny_engine_config(**overrides) -> EngineConfig:
    """Small but phase-complete configuration for fast end-to-end runs."""
    base = dict(
        population=6,
        neighborhood=3,
        generations=6,
        learning_generations=3,
        seed=7,
    )
    base.update(overrides)
    return EngineConfig(**base)


def tiny_forest_settings(**overrides) -> ForestSettings:
    base = dict(n_estimators=20)
    base.update(overrides)
    return ForestSettings(**base)


@pytest.fixture
def engine_factory(tmp_path):
    """Build engines over the synthetic evaluator in per-test directories.

    Keeps track of open engines and closes them at teardown so external
    worker processes never leak, whatever the test outcome.
    """
    open_engines = []
    counter = [0]

    def build(
        config: EngineConfig | None = None,
        objective: ObjectiveConfig | None = None,
        forest: ForestSettings | None = None,
        evaluator_spec: dict | None = None,
        out_dir: Path | None = None,
        **engine_kwargs,
    ) -> Engine:
        if out_dir is None:
            out_dir = tmp_path / f"run{counter[0]}"
            counter[0] += 1
        engine = Engine(
            config=config or tiny_engine_config(),
            objective=objective or ObjectiveConfig(),
            forest=forest or tiny_forest_settings(),
            out_dir=out_dir,
            evaluator_spec=evaluator_spec or {"kind": "synthetic"},
            **engine_kwargs,
        )
        open_engines.append(engine)
        return engine

    yield build
    for engine in open_engines:
        engine.close()
