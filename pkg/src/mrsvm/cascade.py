"""Iterative map/reduce SVM training over data partitions.

Every iteration maps each fixed partition to its union with the current
global support-vector set, reduces each merged set to the support vectors
of an SVM trained on it, and folds those into the global set. The
iteration's hypothesis is an SVM trained on the global set alone; its
empirical risk on the full data decides when to stop.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

from .core import PARTITION_STRATEGIES, Dataset, LabeledSample, partition
from .errors import ContractViolation, DegenerateTrainingError, TrainingFailedError
from .mapreduce import BACKENDS, MapReduceJob, run_job
from .solver import LOSSES, SolverConfig, SvmModel, empirical_risk, train_binary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CascadeConfig:
    num_partitions: int = 4
    gamma: float = 0.0
    max_iterations: int = 20
    solver: SolverConfig = SolverConfig()
    risk_loss: str = "zero_one"
    partition_strategy: str = "stratified"
    seed: int = 0
    workers: int = 1
    backend: str = "thread"

    def __post_init__(self):
        if self.num_partitions < 1:
            raise ContractViolation("num_partitions must be at least 1")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ContractViolation(f"gamma must be a finite non-negative number, got {self.gamma}")
        if self.max_iterations < 1:
            raise ContractViolation("max_iterations must be at least 1")
        if self.risk_loss not in LOSSES:
            raise ContractViolation(f"unknown loss {self.risk_loss!r}")
        if self.partition_strategy not in PARTITION_STRATEGIES:
            raise ContractViolation(f"unknown partition strategy {self.partition_strategy!r}")
        if self.workers < 1:
            raise ContractViolation("workers must be at least 1")
        if self.backend not in BACKENDS:
            raise ContractViolation(f"unknown backend {self.backend!r}")


@dataclass
class CascadeState:
    global_svs: dict[int, LabeledSample] = field(default_factory=dict)
    iteration: int = 0
    risk_history: list[float] = field(default_factory=list)
    sv_counts: list[int] = field(default_factory=list)
    current_model: SvmModel | None = None
    converged: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def global_sv_ids(self) -> list[int]:
        return sorted(self.global_svs)


def cascade_map(partition_id: int, part: Dataset, global_svs) -> tuple[int, Dataset]:
    """Union of a partition with the global SVs, deduplicated by sample id.

    The partition's samples come first in their own order, followed by the
    global SVs it does not already hold, in id order.
    """
    extra = []
    for s in sorted(global_svs, key=lambda s: s.id):
        if s.features.dimension != part.dimension:
            raise ContractViolation("global support vectors and partition differ in dimension")
        if s.id not in part:
            extra.append(s)
    if not extra:
        return partition_id, part
    return partition_id, Dataset(part.samples + tuple(extra), part.dimension)


def cascade_reduce(partition_id: int, merged: Dataset, solver: SolverConfig):
    """Train on a merged partition; returns ``(support_samples, model)``."""
    if len(merged) == 0:
        raise ContractViolation(f"partition {partition_id} is empty")
    model = train_binary(merged, solver)
    return list(model.support_samples), model


def _map_task(key, part, global_svs):
    return [cascade_map(key, part, global_svs)]


def _reduce_task(key, merged_sets, solver):
    (merged,) = merged_sets
    try:
        svs, _ = cascade_reduce(key, merged, solver)
    except DegenerateTrainingError as exc:
        return [(key, str(exc))]
    return [(key, svs)]


def train_cascade(data: Dataset, config: CascadeConfig = CascadeConfig()) -> tuple[SvmModel, CascadeState]:
    """Train a binary SVM with the iterative partition/merge scheme.

    Stops when two consecutive hypotheses differ in empirical risk by at most
    ``config.gamma`` (or the global SV set stops changing), or after
    ``config.max_iterations``. A converged run returns the last hypothesis;
    otherwise the lowest-risk one (latest on ties) with ``state.converged``
    left False.
    """
    if len(data) == 0:
        raise ContractViolation("training data is empty")
    labels = set(data.labels)
    if not labels <= {-1, 1}:
        raise ContractViolation(f"cascade training needs labels in {{-1, +1}}, got {sorted(labels)}")
    if len(labels) < 2:
        raise DegenerateTrainingError("training data has a single class")

    parts = partition(data, config.num_partitions, config.partition_strategy, config.seed)
    inputs = list(enumerate(parts))
    reduce_fn = functools.partial(_reduce_task, solver=config.solver)
    state = CascadeState()
    models: list[SvmModel] = []

    while state.iteration < config.max_iterations:
        # Tasks only ever see this immutable snapshot; the state is updated after the barrier.
        snapshot = tuple(state.global_svs[k] for k in sorted(state.global_svs))
        job = MapReduceJob(functools.partial(_map_task, global_svs=snapshot), reduce_fn, inputs)
        outputs = run_job(job, workers=config.workers, backend=config.backend)
        state.iteration += 1
        t = state.iteration

        trained = 0
        previous_ids = set(state.global_svs)
        for pid, result in outputs:
            if isinstance(result, str):
                msg = f"iteration {t}: partition {pid} skipped ({result})"
                log.warning(msg)
                state.warnings.append(msg)
                continue
            trained += 1
            for s in result:
                state.global_svs.setdefault(s.id, s)
        if trained == 0:
            raise TrainingFailedError(f"iteration {t}: every partition was single-class")

        unchanged = models and set(state.global_svs) == previous_ids
        if unchanged:
            model, risk = models[-1], state.risk_history[-1]
        else:
            pooled = Dataset(tuple(state.global_svs[k] for k in sorted(state.global_svs)), data.dimension)
            model = train_binary(pooled, config.solver)
            risk = empirical_risk(model, data, config.risk_loss)
        models.append(model)
        state.risk_history.append(risk)
        state.sv_counts.append(len(state.global_svs))
        state.current_model = model
        log.info("iteration %d: %d global SVs, risk %.6f", t, len(state.global_svs), risk)

        if t >= 2 and abs(state.risk_history[-2] - risk) <= config.gamma:
            state.converged = True
            return model, state

    msg = f"no convergence within {config.max_iterations} iterations"
    log.warning(msg)
    state.warnings.append(msg)
    best = min(range(len(models)), key=lambda k: (state.risk_history[k], -k))
    return models[best], state
