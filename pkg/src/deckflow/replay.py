"""Headless, single-threaded replay of a recorded client session.

The log is re-executed against a deterministic engine with mock adapters.
A synthetic warm worker runs in-process: after each envelope, every pending
assignment is executed to completion before the next envelope is applied, so
replay order (and therefore the final document) is a pure function of the log.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union

from .adapters import AdapterSet
from .docfile import document_hash, read_log, save_document
from .document import Document
from .engine import Engine
from .hub import JobType
from .worker import STATUS_LABELS, execute_job


def drain_assignments(engine: Engine, assignments: list) -> None:
    """Execute assigned jobs synchronously until the hub goes quiet."""
    pending = list(assignments)
    while pending:
        assign = pending.pop(0)
        job = assign.job
        try:
            engine.worker_status(job.job_id, 1, STATUS_LABELS.get(job.type, "Working"))
        except Exception:
            pass  # job may have been cancelled between dispatch and pickup
        try:
            result = execute_job(engine.adapters, job.type, job.payload)
        except Exception as exc:
            outcome = engine.fail_job(job.job_id, str(exc))
        else:
            if isinstance(result, str):
                outcome = engine.complete_job(job.job_id, result.encode("utf-8"), "text/plain")
            else:
                data, media_type = result
                outcome = engine.complete_job(job.job_id, data, media_type)
        pending.extend(outcome.assignments)


def replay_log(
    log_path: Union[str, Path],
    out_path: Optional[Union[str, Path]] = None,
    adapters: Optional[AdapterSet] = None,
) -> str:
    """Re-run a deckflow-log/1 file; returns the final document hash."""
    doc_id, entries = read_log(log_path)
    engine = Engine(store=None, adapters=adapters or AdapterSet.mocks(), deterministic=True)
    engine.worker_register(list(JobType), loaded_models=engine.adapters.model_names.values())
    doc = engine.open_doc(doc_id)
    for entry in entries:
        result = engine.handle_client(entry["envelope"])
        drain_assignments(engine, result.assignments)
    final: Document = engine.get_doc(doc_id)
    if out_path is not None:
        save_document(final, out_path)
    return document_hash(final)
