"""Regenerate the worker's golden fixtures from the engine.

The fixtures freeze what the in-process implementations produce so the
TypeScript tests can hold the worker to bitwise agreement.  Serialized
through repr-faithful JSON, every double round-trips exactly.

Run from the repository root with the engine package installed:

    python3 frontend/scripts/make_fixtures.py
"""

import json
import math
from pathlib import Path

import numpy as np

from archevo.evaluators import synthetic_metrics
from archevo.genome import (
    FIELD_DOMAINS,
    FIELD_NAMES,
    Genome,
    count_params,
    decode,
    enumerate_space,
)
from archevo.objectives import ObjectiveConfig
from archevo.portable import portable_exp, portable_log

OUT_DIR = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def random_genome(rng) -> Genome:
    return Genome(
        *(
            FIELD_DOMAINS[name][int(rng.integers(len(FIELD_DOMAINS[name])))]
            for name in FIELD_NAMES
        )
    )


def portable_cases(rng) -> dict:
    log_inputs = [1.0, 0.5, 0.75, 2.0, 10.0, 2000.0, 7.1e6, 1e300, 1e-300, 5e-324, 1e-310]
    for _ in range(200):
        m = float(rng.uniform(0.5, 1.0))
        e = int(rng.integers(-1000, 1001))
        log_inputs.append(math.ldexp(m, e))
    exp_inputs = [0.0, 1.0, -1.0, 0.5, -0.5, 700.0, -700.0, -0.000244140625]
    for _ in range(200):
        exp_inputs.append(float(rng.uniform(-700.0, 700.0)))
    # the values the formula actually feeds to exp
    for genome in (random_genome(rng) for _ in range(50)):
        p = count_params(decode(genome), 4)
        exp_inputs.append(-portable_log(float(p)) / 12.0)
    return {
        "log": [[x, portable_log(x)] for x in log_inputs],
        "exp": [[x, portable_exp(x)] for x in exp_inputs],
    }


def corner_genomes() -> list[Genome]:
    space = enumerate_space()
    first = next(space)
    last = None
    for last in enumerate_space():
        pass
    assert last is not None
    return [
        first,
        last,
        Genome(1, 2, 3, "CONV3D", "CONV3D", "CONV3D", "CONV3D", 4, 5, 4),
        Genome(0, 0, 0, "CONV2D", "CONV2D", "CONV2D", "CONV2D", 2, 3, 9),
        Genome(0, 1, 2, "P3D", "P3D", "P3D", "P3D", 3, 4, 1),
    ]


def metrics_cases(rng) -> list[dict]:
    cases = []
    settings = [(60, 4)] * 100 + [(30, 2)] * 10 + [(100, 6)] * 10
    genomes = [random_genome(rng) for _ in settings]
    genomes[: len(corner_genomes())] = corner_genomes()
    for genome, (epochs, num_classes) in zip(genomes, settings):
        config = ObjectiveConfig(num_classes=num_classes, total_epochs=epochs)
        metrics = synthetic_metrics(genome, config)
        cases.append(
            {
                "genome": genome.to_dict(),
                "epochs": epochs,
                "num_classes": num_classes,
                "mc_dice_train": metrics.mc_dice_train,
                "mc_dice_val": metrics.mc_dice_val,
                "e_max": metrics.e_max,
            }
        )
    return cases


def params_cases(rng) -> list[dict]:
    cases = []
    for genome in corner_genomes() + [random_genome(rng) for _ in range(100)]:
        for num_classes in (2, 4):
            cases.append(
                {
                    "genome": genome.to_dict(),
                    "num_classes": num_classes,
                    "params": count_params(decode(genome), num_classes),
                }
            )
    return cases


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240817)
    (OUT_DIR / "portable.json").write_text(json.dumps(portable_cases(rng)) + "\n")
    (OUT_DIR / "metrics.json").write_text(json.dumps(metrics_cases(rng)) + "\n")
    (OUT_DIR / "params.json").write_text(json.dumps(params_cases(rng)) + "\n")
    print(f"fixtures written to {OUT_DIR}")


if __name__ == "__main__":
    main()
