"""The search engine: initialization, learning and exploitation phases.

A run is organized in generations over a fixed population of scalar
subproblems.  Generation 1 seeds the search with a Latin hypercube
sample.  Learning generations improve each subproblem in round-robin
order with uniform variation.  Exploitation generations draw subproblems
by utility, mutate along the learned value distributions, and screen
every candidate with the surrogate before spending a real evaluation.

All engine randomness flows through streams derived from the master seed
(see seeds.py); the run log uses logical sequence numbers, so two runs
with the same seed and config produce byte-identical logs.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .adaptive import SubproblemUtilities, ValueScoreTable
from .decomposition import DecompositionState
from .evaluators import (
    EvaluationError,
    EvaluationRecord,
    PHASE_EXPLOIT,
    PHASE_INIT,
    PHASE_LEARN,
    PHASE_RANDOM,
    make_evaluator,
    record_for,
)
from .genome import FIELD_DOMAINS, FIELD_NAMES, Genome, count_params, decode
from .objectives import MetricRangeError, ObjectiveConfig, size_objective
from .seeds import derive_rng, derive_seed
from .surrogate import ForestRegressor, ForestSettings, GenomeEncoder

VARIANTS = ("samea", "mea", "random")

CRITERION_PBI = "pbi_improvement"
CRITERION_NONDOMINATED = "predicted_nondominated"
CRITERION_MIN_PREDICTED = "min_predicted"
CRITERION_MAX_DISPERSION = "max_dispersion"

RUN_LOG_NAME = "run_log.jsonl"
CHECKPOINT_NAME = "checkpoint.json"
NDS_CSV_NAME = "nds.csv"

_UNIFORM_PROBS = {
    name: [1.0 / len(FIELD_DOMAINS[name])] * len(FIELD_DOMAINS[name])
    for name in FIELD_NAMES
}


class EngineAbort(RuntimeError):
    """The run cannot make progress (a whole generation failed)."""


class CheckpointError(RuntimeError):
    """A checkpoint file is missing pieces or inconsistent."""


@dataclass(frozen=True)
class EngineConfig:
    population: int = 10
    neighborhood: int = 4
    generations: int = 40
    learning_generations: int = 10
    epsilon: float = 0.002
    epsilon_subproblem: float = 0.002
    theta_pbi: float = 5.0
    gamma: float = 0.9
    mutation_rate: float = 0.2
    max_attempts: int = 10
    seed: int = 0
    variant: str = "samea"

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not (2 <= self.neighborhood <= self.population):
            raise ValueError("neighborhood must be in [2, population]")
        if self.generations < 2:
            raise ValueError("generations must be at least 2")
        if not (1 < self.learning_generations < self.generations):
            raise ValueError(
                "learning_generations must lie strictly between 1 and generations"
            )
        if not (0.0 < self.mutation_rate <= 1.0):
            raise ValueError("mutation_rate must be in (0, 1]")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must be in [0, 1]")
        if self.epsilon < 0 or self.epsilon_subproblem < 0:
            raise ValueError("epsilon values must be non-negative")
        if self.theta_pbi < 0:
            raise ValueError("theta_pbi must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")


@dataclass
class BudgetCounters:
    proposed: int = 0
    trained: int = 0
    cache_hits: int = 0
    discarded: int = 0
    evaluation_failures: int = 0
    surrogate_fits: int = 0
    surrogate_predictions: int = 0

    def as_dict(self) -> dict:
        return {
            "proposed": self.proposed,
            "trained": self.trained,
            "cache_hits": self.cache_hits,
            "discarded": self.discarded,
            "evaluation_failures": self.evaluation_failures,
            "surrogate_fits": self.surrogate_fits,
            "surrogate_predictions": self.surrogate_predictions,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BudgetCounters":
        return cls(**{k: int(data[k]) for k in cls().as_dict()})


class RunLogWriter:
    """Append-only JSONL run log with logical sequence numbers."""

    def __init__(self, path: str | Path, resume_lines: int | None = None):
        self.path = Path(path)
        if resume_lines is not None:
            self._truncate_to(resume_lines)
            self._fh = open(self.path, "a", encoding="utf-8")
            self.lines = resume_lines
        else:
            self._fh = open(self.path, "w", encoding="utf-8")
            self.lines = 0

    def _truncate_to(self, n: int) -> None:
        with open(self.path, encoding="utf-8") as fh:
            kept = fh.readlines()[:n]
        if len(kept) < n:
            raise CheckpointError(
                f"run log has {len(kept)} lines, checkpoint expects {n}"
            )
        with open(self.path, "w", encoding="utf-8") as fh:
            fh.writelines(kept)

    def write(self, record: dict) -> None:
        out = {"seq": self.lines}
        out.update(record)
        self._fh.write(json.dumps(out, separators=(",", ":")) + "\n")
        self.lines += 1

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


@dataclass
class RunResult:
    archive: list[EvaluationRecord]
    counters: BudgetCounters
    completed_generation: int
    out_dir: Path
    interrupted: bool

    @property
    def nds_path(self) -> Path:
        return self.out_dir / NDS_CSV_NAME

    @property
    def log_path(self) -> Path:
        return self.out_dir / RUN_LOG_NAME

    @property
    def checkpoint_path(self) -> Path:
        return self.out_dir / CHECKPOINT_NAME


def write_nds_csv(path: str | Path, archive: Sequence[EvaluationRecord]) -> None:
    """Export the archive, sorted by objectives then genome for stability.

    The columns double as a metrics table: the file can be fed back in as
    a tabular evaluator.
    """
    import csv

    rows = sorted(
        archive,
        key=lambda r: (r.objectives.f1, r.objectives.f2, r.genome.values()),
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [*FIELD_NAMES, "mc_dice_train", "mc_dice_val", "e_max", "f1", "f2"]
        )
        for rec in rows:
            writer.writerow(
                [
                    *rec.genome.values(),
                    repr(rec.metrics.mc_dice_train),
                    repr(rec.metrics.mc_dice_val),
                    rec.metrics.e_max,
                    repr(rec.objectives.f1),
                    repr(rec.objectives.f2),
                ]
            )


def lhs_unit(n: int, dims: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube sample in [0, 1)^dims: one point per row stratum."""
    sample = np.empty((n, dims), dtype=np.float64)
    for k in range(dims):
        perm = rng.permutation(n)
        sample[:, k] = (perm + rng.random(n)) / n
    return sample


def lhs_genomes(n: int, rng: np.random.Generator) -> list[Genome]:
    """Stratified initial population, unit coordinates binned per domain.

    Equal-width binning: coordinate u maps to value floor(u * K) of a
    K-value domain, so when n is a multiple of K every value appears
    exactly n / K times.
    """
    unit = lhs_unit(n, len(FIELD_NAMES), rng)
    population = []
    for row in unit:
        values = []
        for k, name in enumerate(FIELD_NAMES):
            domain = FIELD_DOMAINS[name]
            j = min(int(row[k] * len(domain)), len(domain) - 1)
            values.append(domain[j])
        population.append(Genome(*values))
    return population


def make_child(
    parents: tuple[Genome, Genome],
    mutation_rate: float,
    probs: dict[str, list[float]],
    rng: np.random.Generator,
) -> Genome:
    """Uniform crossover, then per-gene mutation along probs.

    Mutation resamples from the gene's whole domain (the current value
    included), one uniform draw per mutated gene against the
    distribution's running sum.
    """
    a, b = parents
    values = [
        getattr(a, name) if rng.random() < 0.5 else getattr(b, name)
        for name in FIELD_NAMES
    ]
    for k, name in enumerate(FIELD_NAMES):
        if rng.random() < mutation_rate:
            u = rng.random()
            domain = FIELD_DOMAINS[name]
            acc = 0.0
            j = len(domain) - 1
            for idx, p in enumerate(probs[name]):
                acc += p
                if u < acc:
                    j = idx
                    break
            values[k] = domain[j]
    return Genome(*values)


class Engine:
    """One search run over a fixed evaluator.

    The constructor takes an evaluator_spec (config-file section used to
    build and, on resume, rebuild the evaluator) or a prebuilt evaluator
    instance for embedding; runs driven by an instance without a spec
    cannot be resumed from their checkpoints.
    """

    def __init__(
        self,
        config: EngineConfig,
        objective: ObjectiveConfig,
        forest: ForestSettings,
        out_dir: str | Path,
        evaluator_spec: Mapping | None = None,
        evaluator=None,
        _resume_log_lines: int | None = None,
    ):
        if evaluator is None and evaluator_spec is None:
            raise ValueError("need an evaluator or an evaluator_spec")
        self.config = config
        self.objective = objective
        self.forest_settings = forest
        self.evaluator_spec = dict(evaluator_spec) if evaluator_spec else None
        self.evaluator = evaluator if evaluator is not None else make_evaluator(self.evaluator_spec)
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.log = RunLogWriter(self.out_dir / RUN_LOG_NAME, _resume_log_lines)

        self.state = DecompositionState(config.population, config.neighborhood, config.theta_pbi)
        self.table = ValueScoreTable()
        self.utilities = SubproblemUtilities(config.population)
        self.counters = BudgetCounters()
        self.records: list[EvaluationRecord] = []
        self.cache: dict[Genome, EvaluationRecord] = {}
        self.completed_generation = 0

        self._rng = derive_rng(config.seed, "engine")
        self._encoder = GenomeEncoder()
        self._stp_rows: list[np.ndarray] = []
        self._stp_targets: list[float] = []
        self._forest: ForestRegressor | None = None
        self._forest_size = -1
        self._contributed: set[int] = set()
        self._gen_min_predicted: float | None = None
        self._gen_max_dispersion: float | None = None
        self._active_mutation_probs: dict[str, list[float]] | None = None
        self._active_subproblem_probs: list[float] | None = None

    # -- candidate pipeline --------------------------------------------------

    def _commit_trained(self, record: EvaluationRecord, origin: int | None) -> tuple[int, bool]:
        objectives = record.objectives.as_tuple()
        self.state.observe(objectives)
        replaced = self.state.update_pns(record, origin) if origin is not None else 0
        entered = self.state.update_archive(record)
        self.records.append(record)
        self.cache[record.genome] = record
        self._stp_rows.append(self._encoder.transform([record.genome])[0])
        self._stp_targets.append(record.objectives.f1)
        if self.config.variant != "random":
            self.table.record_trained(record.genome, record.objectives.f1, self.objective)
        if origin is not None and (replaced > 0 or entered):
            self._contributed.add(origin)
        self.counters.trained += 1
        return replaced, entered

    def _try_candidate(
        self,
        genome: Genome,
        generation: int,
        phase: str,
        origin: int | None,
        attempt: int,
        predicted: tuple[float, float, float] | None = None,
        criterion: str | None = None,
    ) -> str:
        """Evaluate (or reuse) a candidate and fold it into the state.

        Returns "trained", "cache" or "failed".  predicted carries the
        exploitation phase's (predicted f1, dispersion, exact f2) triple.
        """
        self.counters.proposed += 1
        entry: dict = {
            "type": "proposal",
            "generation": generation,
            "phase": phase,
            "origin": origin,
            "attempt": attempt,
            "genome": genome.to_dict(),
        }
        if predicted is not None:
            entry["predicted_f1"] = predicted[0]
            entry["predicted_dispersion"] = predicted[1]
            entry["exact_f2"] = predicted[2]
            entry["accepted"] = True
            entry["criterion"] = criterion
        if genome in self.cache:
            record = self.cache[genome]
            replaced = self.state.update_pns(record, origin) if origin is not None else 0
            if origin is not None and replaced > 0:
                self._contributed.add(origin)
            self.counters.cache_hits += 1
            entry["cache_hit"] = True
            entry["trained"] = False
            entry["objectives"] = {"f1": record.objectives.f1, "f2": record.objectives.f2}
            entry["replacements"] = replaced
            entry["entered_archive"] = False
            self.log.write(entry)
            return "cache"
        entry["cache_hit"] = False
        try:
            metrics = self.evaluator.evaluate(genome, self.objective)
            record = record_for(genome, metrics, self.objective, generation, phase, attempt)
        except (EvaluationError, MetricRangeError) as exc:
            self.counters.evaluation_failures += 1
            entry["trained"] = False
            entry["error"] = str(exc)
            self.log.write(entry)
            return "failed"
        replaced, entered = self._commit_trained(record, origin)
        entry["trained"] = True
        entry["metrics"] = {
            "mc_dice_train": record.metrics.mc_dice_train,
            "mc_dice_val": record.metrics.mc_dice_val,
            "e_max": record.metrics.e_max,
        }
        entry["objectives"] = {"f1": record.objectives.f1, "f2": record.objectives.f2}
        entry["replacements"] = replaced
        entry["entered_archive"] = entered
        self.log.write(entry)
        return "trained"

    # -- variation -----------------------------------------------------------

    def _parents(self, origin: int) -> tuple[Genome, Genome]:
        neighbors = self.state.subproblems[origin].neighbors
        picked = self._rng.choice(len(neighbors), size=2, replace=False)
        first = self.state.subproblems[neighbors[picked[0]]].current
        second = self.state.subproblems[neighbors[picked[1]]].current
        assert first is not None and second is not None
        return first.genome, second.genome

    def _make_child(
        self, parents: tuple[Genome, Genome], probs: dict[str, list[float]]
    ) -> Genome:
        return make_child(parents, self.config.mutation_rate, probs, self._rng)

    def _random_genome(self) -> Genome:
        values = []
        for name in FIELD_NAMES:
            domain = FIELD_DOMAINS[name]
            values.append(domain[int(self._rng.integers(len(domain)))])
        return Genome(*values)

    def _draw_subproblem(self, probs: Sequence[float]) -> int:
        u = self._rng.random()
        acc = 0.0
        for i, p in enumerate(probs):
            acc += p
            if u < acc:
                return i
        return len(probs) - 1

    # -- surrogate -----------------------------------------------------------

    def _fit_forest(self) -> None:
        size = len(self._stp_targets)
        forest = ForestRegressor(
            n_estimators=self.forest_settings.n_estimators,
            min_samples_split=self.forest_settings.min_samples_split,
            max_features=self.forest_settings.max_features,
            random_state=derive_seed(self.config.seed, "forest", size),
        )
        forest.fit(np.vstack(self._stp_rows), np.asarray(self._stp_targets))
        self._forest = forest
        self._forest_size = size

    def _predict(self, genome: Genome) -> tuple[float, float]:
        if len(self._stp_targets) != self._forest_size:
            self._fit_forest()
            self.counters.surrogate_fits += 1
        elif self._forest is None:
            # After a resume the pool can already match the last fit; rebuild
            # the forest the interrupted process held (same derived seed, same
            # rows) rather than counting a fresh fit.
            self._fit_forest()
        assert self._forest is not None
        row = self._encoder.transform([genome])
        mean, std = self._forest.predict(row, return_std=True)
        self.counters.surrogate_predictions += 1
        return float(mean[0]), float(std[0])

    def _acceptance(
        self, predicted_objectives: tuple[float, float], dispersion: float
    ) -> tuple[bool, str | None]:
        """The four screening criteria, in order, on predicted objectives."""
        if self.state.would_replace_any(predicted_objectives):
            return True, CRITERION_PBI
        if self.state.nondominated_vs_archive(predicted_objectives):
            return True, CRITERION_NONDOMINATED
        if (
            self._gen_min_predicted is None
            or predicted_objectives[0] < self._gen_min_predicted
        ):
            return True, CRITERION_MIN_PREDICTED
        if self._gen_max_dispersion is None or dispersion > self._gen_max_dispersion:
            return True, CRITERION_MAX_DISPERSION
        return False, None

    def _note_prediction(self, predicted_f1: float, dispersion: float) -> None:
        if self._gen_min_predicted is None or predicted_f1 < self._gen_min_predicted:
            self._gen_min_predicted = predicted_f1
        if self._gen_max_dispersion is None or dispersion > self._gen_max_dispersion:
            self._gen_max_dispersion = dispersion

    # -- generations ---------------------------------------------------------

    def _phase_for(self, generation: int) -> str:
        if generation == 1:
            return PHASE_INIT
        if self.config.variant == "random":
            return PHASE_RANDOM
        if self.config.variant == "mea":
            return PHASE_LEARN
        if generation <= self.config.learning_generations:
            return PHASE_LEARN
        return PHASE_EXPLOIT

    def _begin_generation(self, generation: int, phase: str) -> None:
        if phase == PHASE_EXPLOIT:
            self._active_mutation_probs = {
                name: self.table.mutation_probs(name, self.config.epsilon)
                for name in FIELD_NAMES
            }
            self._active_subproblem_probs = self.utilities.selection_probs(
                self.config.epsilon_subproblem
            )
        elif phase == PHASE_LEARN:
            self._active_mutation_probs = _UNIFORM_PROBS
            self._active_subproblem_probs = None
        else:
            self._active_mutation_probs = None
            self._active_subproblem_probs = None
        self.log.write(
            {
                "type": "generation",
                "generation": generation,
                "phase": phase,
                "mutation_probs": self._active_mutation_probs,
                "subproblem_probs": self._active_subproblem_probs,
                "score_table": self.table.snapshot(),
                "utilities": self.utilities.snapshot(),
                "counters": self.counters.as_dict(),
            }
        )

    def _end_generation(self, generation: int, committed: int) -> None:
        if committed == 0:
            raise EngineAbort(
                f"generation {generation} produced no successful evaluations"
            )
        if self.config.variant != "random":
            self.utilities.decay_and_credit(self._contributed, self.config.gamma)
        self._contributed = set()
        self._gen_min_predicted = None
        self._gen_max_dispersion = None
        archive_points = sorted(
            rec.objectives.as_tuple() for rec in self.state.archive
        )
        self.log.write(
            {
                "type": "generation_end",
                "generation": generation,
                "archive": [list(p) for p in archive_points],
                "counters": self.counters.as_dict(),
            }
        )
        self.completed_generation = generation
        self._write_checkpoint()
        self.log.flush()

    def _init_generation(self) -> int:
        self._begin_generation(1, PHASE_INIT)
        rng = derive_rng(self.config.seed, "lhs")
        committed = 0
        # committed in canonical genome order (the sample itself is unordered)
        initial = sorted(lhs_genomes(self.config.population, rng), key=lambda g: g.values())
        for slot, genome in enumerate(initial):
            for attempt in range(self.config.max_attempts):
                outcome = self._try_candidate(genome, 1, PHASE_INIT, None, attempt)
                if outcome != "failed":
                    committed += 1
                    break
            else:
                raise EngineAbort(
                    f"initial evaluation failed for slot {slot} after "
                    f"{self.config.max_attempts} attempts"
                )
        if not self.records:
            raise EngineAbort("initialization produced no evaluated candidates")
        self.state.assign_initial(self.records)
        return committed

    def _learn_generation(self, generation: int, phase: str) -> int:
        committed = 0
        assert self._active_mutation_probs is not None
        for origin in range(self.config.population):
            for attempt in range(self.config.max_attempts):
                child = self._make_child(self._parents(origin), self._active_mutation_probs)
                outcome = self._try_candidate(child, generation, phase, origin, attempt)
                if outcome != "failed":
                    committed += 1
                    break
        return committed

    def _exploit_generation(self, generation: int) -> int:
        committed = 0
        assert self._active_mutation_probs is not None
        assert self._active_subproblem_probs is not None
        for _slot in range(self.config.population):
            for attempt in range(self.config.max_attempts):
                origin = self._draw_subproblem(self._active_subproblem_probs)
                child = self._make_child(self._parents(origin), self._active_mutation_probs)
                predicted_f1, dispersion = self._predict(child)
                exact_f2 = size_objective(
                    count_params(decode(child), self.objective.num_classes)
                )
                accepted, criterion = self._acceptance(
                    (predicted_f1, exact_f2), dispersion
                )
                self._note_prediction(predicted_f1, dispersion)
                if not accepted:
                    # screened out: the slot is spent and nothing trains,
                    # which is where the surrogate saves real evaluations
                    self.counters.proposed += 1
                    self.counters.discarded += 1
                    self.log.write(
                        {
                            "type": "proposal",
                            "generation": generation,
                            "phase": PHASE_EXPLOIT,
                            "origin": origin,
                            "attempt": attempt,
                            "genome": child.to_dict(),
                            "predicted_f1": predicted_f1,
                            "predicted_dispersion": dispersion,
                            "exact_f2": exact_f2,
                            "accepted": False,
                            "criterion": None,
                        }
                    )
                    break
                outcome = self._try_candidate(
                    child,
                    generation,
                    PHASE_EXPLOIT,
                    origin,
                    attempt,
                    predicted=(predicted_f1, dispersion, exact_f2),
                    criterion=criterion,
                )
                if outcome != "failed":
                    committed += 1
                    break
                # evaluation failed; spend another attempt on a fresh draw
        return committed

    def _random_generation(self, generation: int) -> int:
        committed = 0
        for _slot in range(self.config.population):
            for attempt in range(self.config.max_attempts):
                outcome = self._try_candidate(
                    self._random_genome(), generation, PHASE_RANDOM, None, attempt
                )
                if outcome != "failed":
                    committed += 1
                    break
        return committed

    def _run_generation(self, generation: int) -> None:
        phase = self._phase_for(generation)
        self._begin_generation(generation, phase)
        if phase == PHASE_LEARN:
            committed = self._learn_generation(generation, phase)
        elif phase == PHASE_EXPLOIT:
            committed = self._exploit_generation(generation)
        else:
            committed = self._random_generation(generation)
        self._end_generation(generation, committed)

    # -- run / resume ----------------------------------------------------------

    def run(self, stop_after_generation: int | None = None) -> RunResult:
        """Execute the configured run from scratch.

        stop_after_generation ends the run at a generation boundary with
        the checkpoint written but no archive export, simulating an
        interrupted process for resume testing.
        """
        self.log.write(
            {
                "type": "config",
                "engine": asdict(self.config),
                "objective": asdict(self.objective),
                "forest": asdict(self.forest_settings),
                "evaluator": self.evaluator_spec,
            }
        )
        committed = self._init_generation()
        self._end_generation(1, committed)
        if stop_after_generation == 1:
            return self._result(interrupted=True)
        return self._generation_loop(2, stop_after_generation)

    def continue_run(self, stop_after_generation: int | None = None) -> RunResult:
        """Continue a checkpoint-restored run to completion."""
        if self.completed_generation < 1:
            raise CheckpointError("nothing to continue: no completed generation")
        if self.completed_generation >= self.config.generations:
            return self._finalize()
        return self._generation_loop(self.completed_generation + 1, stop_after_generation)

    def _generation_loop(self, start: int, stop_after: int | None) -> RunResult:
        for generation in range(start, self.config.generations + 1):
            self._run_generation(generation)
            if stop_after == generation and generation < self.config.generations:
                return self._result(interrupted=True)
        return self._finalize()

    def _result(self, interrupted: bool) -> RunResult:
        archive = sorted(
            self.state.archive,
            key=lambda r: (r.objectives.f1, r.objectives.f2, r.genome.values()),
        )
        return RunResult(
            archive=archive,
            counters=self.counters,
            completed_generation=self.completed_generation,
            out_dir=self.out_dir,
            interrupted=interrupted,
        )

    def _finalize(self) -> RunResult:
        result = self._result(interrupted=False)
        write_nds_csv(self.out_dir / NDS_CSV_NAME, result.archive)
        self.log.flush()
        return result

    def close(self) -> None:
        self.log.close()
        self.evaluator.close()

    def __enter__(self) -> "Engine":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- checkpointing ---------------------------------------------------------

    def _write_checkpoint(self) -> None:
        index_of = {id(rec): i for i, rec in enumerate(self.records)}
        pns = []
        for sub in self.state.subproblems:
            assert sub.current is not None
            pns.append(index_of[id(sub.current)])
        archive = [index_of[id(rec)] for rec in self.state.archive]
        rng_state = self._rng.bit_generator.state
        payload = {
            "format": 1,
            "engine": asdict(self.config),
            "objective": asdict(self.objective),
            "forest": asdict(self.forest_settings),
            "evaluator": self.evaluator_spec,
            "completed_generation": self.completed_generation,
            "counters": self.counters.as_dict(),
            "forest_size": self._forest_size,
            "records": [rec.to_json_dict() for rec in self.records],
            "pns": pns,
            "archive": archive,
            "z_ideal": self.state.z_ideal,
            "z_nadir": self.state.z_nadir,
            "score_table": self.table.snapshot(),
            "utilities": self.utilities.snapshot(),
            "rng": {
                "bit_generator": rng_state["bit_generator"],
                "state": str(rng_state["state"]["state"]),
                "inc": str(rng_state["state"]["inc"]),
                "has_uint32": rng_state["has_uint32"],
                "uinteger": rng_state["uinteger"],
            },
            "log_lines": self.log.lines,
        }
        tmp_path = self.out_dir / (CHECKPOINT_NAME + ".tmp")
        with open(tmp_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
        os.replace(tmp_path, self.out_dir / CHECKPOINT_NAME)

    @classmethod
    def from_checkpoint(cls, checkpoint_path: str | Path, evaluator=None) -> "Engine":
        """Rebuild an engine mid-run from its checkpoint.

        The evaluator is reconstructed from the stored spec unless an
        instance is supplied.  The run log is truncated to the length the
        checkpoint saw, so a crash after the boundary leaves no trace.
        """
        checkpoint_path = Path(checkpoint_path)
        try:
            with open(checkpoint_path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
        if data.get("format") != 1:
            raise CheckpointError(f"unsupported checkpoint format {data.get('format')!r}")
        if evaluator is None and data.get("evaluator") is None:
            raise CheckpointError(
                "checkpoint has no evaluator spec; pass an evaluator to resume"
            )
        try:
            config = EngineConfig(**data["engine"])
            objective = ObjectiveConfig(**data["objective"])
            forest = ForestSettings(**data["forest"])
            engine = cls(
                config,
                objective,
                forest,
                checkpoint_path.parent,
                evaluator_spec=data.get("evaluator"),
                evaluator=evaluator,
                _resume_log_lines=int(data["log_lines"]),
            )
            engine.records = [EvaluationRecord.from_json_dict(r) for r in data["records"]]
            engine.cache = {rec.genome: rec for rec in engine.records}
            engine.counters = BudgetCounters.from_dict(data["counters"])
            engine.completed_generation = int(data["completed_generation"])
            engine._forest_size = int(data["forest_size"])
            engine.state.z_ideal = [float(v) for v in data["z_ideal"]]
            engine.state.z_nadir = [float(v) for v in data["z_nadir"]]
            for sub, rec_index in zip(engine.state.subproblems, data["pns"]):
                sub.current = engine.records[rec_index]
            engine.state.archive = [engine.records[i] for i in data["archive"]]
            engine.table = ValueScoreTable.restore(data["score_table"])
            engine.utilities = SubproblemUtilities.restore(data["utilities"])
            engine._stp_rows = [
                engine._encoder.transform([rec.genome])[0] for rec in engine.records
            ]
            engine._stp_targets = [rec.objectives.f1 for rec in engine.records]
            engine._rng.bit_generator.state = {
                "bit_generator": data["rng"]["bit_generator"],
                "state": {
                    "state": int(data["rng"]["state"]),
                    "inc": int(data["rng"]["inc"]),
                },
                "has_uint32": data["rng"]["has_uint32"],
                "uinteger": data["rng"]["uinteger"],
            }
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise CheckpointError(f"inconsistent checkpoint: {exc}") from exc
        return engine
