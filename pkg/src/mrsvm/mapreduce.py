"""A local map/reduce job runner with a barrier between the two phases."""

from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Sequence

from .errors import ContractViolation, JobFailedError

BACKENDS = ("thread", "process")

KeyValue = tuple[Hashable, Any]


@dataclass(frozen=True)
class MapReduceJob:
    """``map_fn(key, value) -> [(key2, value2)]``, ``reduce_fn(key2, [value2]) -> [(key3, value3)]``."""

    map_fn: Callable[[Any, Any], Sequence[KeyValue]]
    reduce_fn: Callable[[Any, list], Sequence[KeyValue]]
    inputs: Sequence[KeyValue]


def _make_executor(workers: int, backend: str):
    if backend == "process":
        return cf.ProcessPoolExecutor(max_workers=workers)
    return cf.ThreadPoolExecutor(max_workers=workers)


def _run_phase(executor, phase: str, fn, tasks: list[KeyValue]) -> list[list[KeyValue]]:
    """Run every task, wait for all of them, and re-raise the first failure in task order."""
    if executor is None:
        results = []
        for key, value in tasks:
            try:
                results.append(list(fn(key, value)))
            except Exception as exc:
                raise JobFailedError(phase, key, exc) from exc
        return results

    futures = [executor.submit(fn, key, value) for key, value in tasks]
    cf.wait(futures)
    results = []
    for (key, _), fut in zip(tasks, futures):
        exc = fut.exception()
        if exc is not None:
            raise JobFailedError(phase, key, exc) from exc
        results.append(list(fut.result()))
    return results


def run_job(job: MapReduceJob, workers: int = 1, backend: str = "thread") -> list[KeyValue]:
    """Execute ``job`` and return the reduce outputs ordered by reduce key.

    Map outputs are grouped by exact key equality; values inside a group keep
    the order of their input records. All map tasks finish before any reduce
    task starts. With ``workers == 1`` everything runs in the calling thread.
    The job never returns partial results: the first failing task (in input
    order) aborts it with :class:`JobFailedError`.
    """
    if not job.inputs:
        raise ContractViolation("a job needs at least one input record")
    if workers < 1:
        raise ContractViolation("workers must be at least 1")
    if backend not in BACKENDS:
        raise ContractViolation(f"unknown backend {backend!r}")

    executor = None if workers == 1 else _make_executor(workers, backend)
    try:
        mapped = _run_phase(executor, "map", job.map_fn, list(job.inputs))

        groups: dict[Hashable, list] = {}
        for emitted in mapped:
            for key, value in emitted:
                groups.setdefault(key, []).append(value)
        try:
            keys = sorted(groups)
        except TypeError as exc:
            raise ContractViolation(f"reduce keys must be mutually orderable: {exc}") from exc

        reduced = _run_phase(executor, "reduce", job.reduce_fn, [(k, groups[k]) for k in keys])
    finally:
        if executor is not None:
            executor.shutdown(wait=True, cancel_futures=True)
    return [kv for out in reduced for kv in out]
