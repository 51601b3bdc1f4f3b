"""Candidate evaluators and the line-delimited JSON evaluation protocol.

Three interchangeable evaluator kinds:

* SyntheticEvaluator - a closed-form stand-in for real training, frozen so
  that independent reimplementations produce bit-identical metrics.
* TabularEvaluator - replays metrics from a CSV of precomputed rows.
* ExternalEvaluator - drives a worker subprocess over stdin/stdout, one
  JSON object per line.
"""

from __future__ import annotations

import csv
import functools
import itertools
import json
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .genome import (
    CONV2D,
    CONV3D,
    P3D,
    FIELD_NAMES,
    Genome,
    count_params,
    decode,
    longest_chain,
)
from .objectives import (
    ObjectiveConfig,
    ObjectiveVector,
    TrainingMetrics,
    objectives_for,
)
from .portable import portable_exp, portable_log, round_half_up

PHASE_INIT = "INIT"
PHASE_LEARN = "LEARN"
PHASE_EXPLOIT = "EXPLOIT"
PHASE_RANDOM = "RANDOM"  # used by the random-search ablation only
PHASES = (PHASE_INIT, PHASE_LEARN, PHASE_EXPLOIT, PHASE_RANDOM)

OPERATION_QUALITY = {CONV3D: 1.00, P3D: 0.92, CONV2D: 0.80}


class EvaluationError(RuntimeError):
    """An evaluator failed to produce metrics for a candidate."""


class MissingRowError(EvaluationError, KeyError):
    """A tabular evaluator has no row for the requested genome."""


class ProtocolError(EvaluationError):
    """The external worker violated the line protocol."""


class EvaluationTimeoutError(ProtocolError):
    """The external worker did not answer within the deadline."""


@dataclass(frozen=True)
class EvaluationRecord:
    """One completed evaluation, as stored, logged and checkpointed."""

    genome: Genome
    metrics: TrainingMetrics
    objectives: ObjectiveVector
    generation: int
    phase: str
    attempt_id: int

    def to_json_dict(self) -> dict:
        return {
            "genome": self.genome.to_dict(),
            "metrics": {
                "mc_dice_train": self.metrics.mc_dice_train,
                "mc_dice_val": self.metrics.mc_dice_val,
                "e_max": self.metrics.e_max,
                "total_epochs": self.metrics.total_epochs,
            },
            "objectives": {"f1": self.objectives.f1, "f2": self.objectives.f2},
            "generation": self.generation,
            "phase": self.phase,
            "attempt_id": self.attempt_id,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "EvaluationRecord":
        metrics = TrainingMetrics(
            mc_dice_train=float(data["metrics"]["mc_dice_train"]),
            mc_dice_val=float(data["metrics"]["mc_dice_val"]),
            e_max=int(data["metrics"]["e_max"]),
            total_epochs=int(data["metrics"]["total_epochs"]),
        )
        return cls(
            genome=Genome.from_dict(data["genome"]),
            metrics=metrics,
            objectives=ObjectiveVector(
                float(data["objectives"]["f1"]), float(data["objectives"]["f2"])
            ),
            generation=int(data["generation"]),
            phase=str(data["phase"]),
            attempt_id=int(data["attempt_id"]),
        )


def record_for(
    genome: Genome,
    metrics: TrainingMetrics,
    config: ObjectiveConfig,
    generation: int,
    phase: str,
    attempt_id: int,
) -> EvaluationRecord:
    """Build a record with its objectives derived from genome + metrics."""
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    return EvaluationRecord(
        genome=genome,
        metrics=metrics,
        objectives=objectives_for(genome, metrics, config),
        generation=generation,
        phase=phase,
        attempt_id=attempt_id,
    )


# ---------------------------------------------------------------------------
# synthetic evaluator


@functools.lru_cache(maxsize=65536)
def _structure_terms(
    structural: tuple, num_classes: int, total_epochs: int
) -> tuple[float, int]:
    """Learning-rate-independent part of the synthetic formula.

    Returns (val_base, e_max) where mc_dice_val = clip(val_base * pen).
    Caching this makes full-space enumeration cheap; the arithmetic is
    identical to evaluating the formula inline because the pinned
    multiplication order groups the pen factor last.
    """
    genome = Genome(*structural, lr_level=1)
    arch = decode(genome)
    p = count_params(arch, num_classes)
    capacity = portable_log(float(p))
    quality = (
        OPERATION_QUALITY[genome.o1]
        + OPERATION_QUALITY[genome.o2]
        + OPERATION_QUALITY[genome.o3]
        + OPERATION_QUALITY[genome.o4]
    ) / 4.0
    chain = longest_chain(arch)
    connectivity = 0.9 + 0.025 * chain
    t = 1.0 - portable_exp(-capacity / 12.0)
    val_base = float(num_classes) * t * quality * connectivity
    e_raw = total_epochs * (0.5 + 0.5 * t)
    e_max = round_half_up(e_raw)
    if e_max < 1:
        e_max = 1
    elif e_max > total_epochs:
        e_max = total_epochs
    return val_base, e_max


def synthetic_metrics(genome: Genome, config: ObjectiveConfig) -> TrainingMetrics:
    """The frozen synthetic training formula.

    Deterministic closed form standing in for actually training the
    decoded network.  The exact operation order below (and the portable
    log/exp it uses) is part of the contract: external reimplementations
    are expected to reproduce these doubles bit for bit.

        capacity = ln(count_params(...))
        quality  = mean of per-node operation quality
                   (CONV3D 1.00, P3D 0.92, CONV2D 0.80)
        conn     = 0.9 + 0.025 * longest node chain
        pen      = 1 - 0.02 * |lr_level - 4|
        t        = 1 - exp(-capacity / 12)
        mc_dice_val   = clip(C * t * quality * conn * pen, 0, C)
        mc_dice_train = min(C, 1.05 * mc_dice_val)
        e_max    = clip(round_half_up(E * (0.5 + 0.5 * t)), 1, E)
    """
    structural = tuple(getattr(genome, name) for name in FIELD_NAMES[:-1])
    val_base, e_max = _structure_terms(
        structural, config.num_classes, config.total_epochs
    )
    pen = 1.0 - 0.02 * abs(genome.lr_level - 4)
    c = float(config.num_classes)
    val = val_base * pen
    if val < 0.0:
        val = 0.0
    elif val > c:
        val = c
    train = 1.05 * val
    if train > c:
        train = c
    return TrainingMetrics(
        mc_dice_train=train,
        mc_dice_val=val,
        e_max=e_max,
        total_epochs=config.total_epochs,
    )


class SyntheticEvaluator:
    """Closed-form evaluator; optionally adds seeded Gaussian noise.

    With noise off (the default) this is a pure function of the genome.
    With noise_sigma > 0 every call draws fresh perturbations from the
    instance's generator, so repeated evaluations of the same genome are
    distinct observations.
    """

    kind = "synthetic"

    def __init__(self, noise_sigma: float = 0.0, noise_seed: int = 0):
        if noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        self.noise_sigma = noise_sigma
        self._rng = np.random.default_rng(noise_seed) if noise_sigma > 0 else None

    def evaluate(self, genome: Genome, config: ObjectiveConfig) -> TrainingMetrics:
        metrics = synthetic_metrics(genome, config)
        if self._rng is None:
            return metrics
        c = float(config.num_classes)
        val = min(c, max(0.0, metrics.mc_dice_val + self._rng.normal(0.0, self.noise_sigma)))
        train = min(c, max(0.0, metrics.mc_dice_train + self._rng.normal(0.0, self.noise_sigma)))
        return TrainingMetrics(train, val, metrics.e_max, metrics.total_epochs)

    def close(self) -> None:
        pass

    def __enter__(self) -> "SyntheticEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# ---------------------------------------------------------------------------
# tabular evaluator

_TABLE_METRIC_COLUMNS = ("mc_dice_train", "mc_dice_val", "e_max")
_STRING_FIELDS = {"o1", "o2", "o3", "o4"}


class TabularEvaluator:
    """Replays metrics for genomes listed in a CSV file.

    The file must carry one column per genome field plus the metric
    columns; any extra columns (objectives, bookkeeping) are ignored, so
    an exported archive CSV is directly loadable.
    """

    kind = "tabular"

    def __init__(self, table_path: str | Path, total_epochs: int = 60):
        self.table_path = Path(table_path)
        self._rows: dict[tuple, TrainingMetrics] = {}
        self.total_epochs = total_epochs
        with open(self.table_path, newline="") as fh:
            reader = csv.DictReader(fh)
            missing = [
                c
                for c in (*FIELD_NAMES, *_TABLE_METRIC_COLUMNS)
                if c not in (reader.fieldnames or [])
            ]
            if missing:
                raise ValueError(
                    f"{self.table_path}: missing columns {missing}"
                )
            for row in reader:
                genome = Genome.from_dict(
                    {
                        name: (row[name] if name in _STRING_FIELDS else int(row[name]))
                        for name in FIELD_NAMES
                    }
                )
                self._rows[genome.values()] = TrainingMetrics(
                    mc_dice_train=float(row["mc_dice_train"]),
                    mc_dice_val=float(row["mc_dice_val"]),
                    e_max=int(row["e_max"]),
                    total_epochs=total_epochs,
                )

    def __len__(self) -> int:
        return len(self._rows)

    def genomes(self) -> Iterable[Genome]:
        for values in self._rows:
            yield Genome(*values)

    def evaluate(self, genome: Genome, config: ObjectiveConfig) -> TrainingMetrics:
        try:
            return self._rows[genome.values()]
        except KeyError:
            raise MissingRowError(f"no table row for genome {genome.to_dict()}") from None

    def close(self) -> None:
        pass

    def __enter__(self) -> "TabularEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_table(
    path: str | Path, rows: Iterable[tuple[Genome, TrainingMetrics]]
) -> None:
    """Write a metrics table that TabularEvaluator can load back."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([*FIELD_NAMES, *_TABLE_METRIC_COLUMNS])
        for genome, metrics in rows:
            writer.writerow(
                [
                    *genome.values(),
                    repr(metrics.mc_dice_train),
                    repr(metrics.mc_dice_val),
                    metrics.e_max,
                ]
            )


# ---------------------------------------------------------------------------
# external evaluator and its wire protocol


def encode_request(
    request_id: int, genome: Genome, config: ObjectiveConfig
) -> str:
    """One protocol request line (no trailing newline)."""
    payload = {
        "id": request_id,
        "genome": genome.to_dict(),
        "epochs": config.total_epochs,
        "num_classes": config.num_classes,
    }
    return json.dumps(payload, separators=(",", ":"))


def parse_response(line: str) -> dict:
    """Parse and shape-check one worker response line.

    Returns a dict with "id" plus either the three metric fields or an
    "error" string.  Raises ProtocolError for anything else.
    """
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"unparseable response line: {line!r}") from exc
    if not isinstance(data, dict) or "id" not in data:
        raise ProtocolError(f"response without id: {line!r}")
    if "error" in data:
        return {"id": data["id"], "error": str(data["error"])}
    try:
        return {
            "id": data["id"],
            "mc_dice_train": float(data["mc_dice_train"]),
            "mc_dice_val": float(data["mc_dice_val"]),
            "e_max": int(data["e_max"]),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed response fields: {line!r}") from exc


class ExternalEvaluator:
    """Evaluates candidates through a worker subprocess.

    Requests and responses are single JSON lines; responses may arrive out
    of order and are matched by id.  A malformed line, a closed pipe or a
    missed deadline surfaces as ProtocolError / EvaluationTimeoutError.
    """

    kind = "external"

    def __init__(self, command: Sequence[str], timeout: float = 30.0):
        if not command:
            raise ValueError("external evaluator needs a non-empty command")
        self.command = list(command)
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self._reader: threading.Thread | None = None
        self._lock = threading.Lock()
        self._ready = threading.Condition(self._lock)
        self._responses: dict[int, dict] = {}
        self._broken: str | None = None
        self._ids = itertools.count(1)

    def _ensure_proc(self) -> None:
        if self._proc is not None:
            return
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        for line in proc.stdout:
            line = line.strip()
            if not line:
                continue
            try:
                response = parse_response(line)
            except ProtocolError as exc:
                with self._ready:
                    self._broken = str(exc)
                    self._ready.notify_all()
                return
            with self._ready:
                self._responses[response["id"]] = response
                self._ready.notify_all()
        with self._ready:
            if self._broken is None:
                self._broken = "worker closed its output stream"
            self._ready.notify_all()

    def evaluate(self, genome: Genome, config: ObjectiveConfig) -> TrainingMetrics:
        self._ensure_proc()
        assert self._proc is not None and self._proc.stdin is not None
        request_id = next(self._ids)
        line = encode_request(request_id, genome, config)
        with self._ready:
            if self._broken is not None:
                raise ProtocolError(self._broken)
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ProtocolError(f"could not write to worker: {exc}") from exc
        limit = time.monotonic() + self.timeout
        with self._ready:
            while request_id not in self._responses:
                if self._broken is not None:
                    raise ProtocolError(self._broken)
                remaining = limit - time.monotonic()
                if remaining <= 0:
                    raise EvaluationTimeoutError(
                        f"no response for request {request_id} within {self.timeout}s"
                    )
                self._ready.wait(remaining)
            response = self._responses.pop(request_id)
        if "error" in response:
            raise EvaluationError(
                f"worker error for request {request_id}: {response['error']}"
            )
        metrics = TrainingMetrics(
            mc_dice_train=response["mc_dice_train"],
            mc_dice_val=response["mc_dice_val"],
            e_max=response["e_max"],
            total_epochs=config.total_epochs,
        )
        metrics.validate(config)
        return metrics

    def close(self) -> None:
        proc = self._proc
        if proc is None:
            return
        self._proc = None
        try:
            if proc.stdin is not None:
                proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()
        if self._reader is not None:
            self._reader.join(timeout=5)
            self._reader = None

    def __enter__(self) -> "ExternalEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def make_evaluator(spec: Mapping):
    """Build an evaluator from a config-file section."""
    kind = spec.get("kind", "synthetic")
    if kind == "synthetic":
        return SyntheticEvaluator(
            noise_sigma=float(spec.get("noise_sigma", 0.0)),
            noise_seed=int(spec.get("noise_seed", 0)),
        )
    if kind == "tabular":
        if "table" not in spec:
            raise ValueError("tabular evaluator needs a 'table' path")
        return TabularEvaluator(
            spec["table"], total_epochs=int(spec.get("total_epochs", 60))
        )
    if kind == "external":
        if "command" not in spec:
            raise ValueError("external evaluator needs a 'command' list")
        command = spec["command"]
        if isinstance(command, str):
            command = command.split()
        return ExternalEvaluator(command, timeout=float(spec.get("timeout", 30.0)))
    raise ValueError(f"unknown evaluator kind {kind!r}")
