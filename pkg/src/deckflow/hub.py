"""Worker registry, per-type FIFO job queues, and model-affinity dispatch.

The hub is transport-free and single-threaded by contract: the gateway (or a
test) feeds it worker events in arrival order, and every method returns a
list of effects — assignments to deliver and card updates to apply — instead
of performing I/O itself. That keeps scheduling decisions deterministic and
directly simulable.

Dispatch rule, per type queue head: among idle workers with the capability,
prefer ones that already have the required model loaded, then the least
recently assigned, then the lowest worker id. A queue head that no capable
worker can take blocks its queue (strict FIFO per type).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from .errors import DuplicateRegistration, TargetMissing, UnknownJob
from .model import GenStateName

DEFAULT_MAX_ATTEMPTS = 2


class JobType(str, Enum):
    generate_text = "GenerateText"
    generate_image = "GenerateImage"
    generate_audio = "GenerateAudio"
    interpret_data = "InterpretData"
    expand_prompt = "ExpandPrompt"


class JobState(str, Enum):
    queued = "queued"
    assigned = "assigned"
    running = "running"
    done = "done"
    failed = "failed"
    cancelled = "cancelled"


CAPABILITY_JOB_TYPES = {
    "text_gen": JobType.generate_text,
    "image_gen": JobType.generate_image,
    "audio_gen": JobType.generate_audio,
    "vision_describe": JobType.interpret_data,
    "prompt_expand": JobType.expand_prompt,
}


@dataclass
class Job:
    job_id: str
    type: JobType
    payload: dict
    required_model: str
    target_card: str
    doc_id: str
    state: JobState = JobState.queued
    attempts: int = 0
    enqueue_time: int = 0
    worker_id: Optional[str] = None
    last_seq: int = 0

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "type": self.type.value,
            "payload": self.payload,
            "required_model": self.required_model,
            "target_card": self.target_card,
            "doc_id": self.doc_id,
            "state": self.state.value,
            "attempts": self.attempts,
            "enqueue_time": self.enqueue_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Job":
        return cls(
            job_id=d["job_id"],
            type=JobType(d["type"]),
            payload=dict(d["payload"]),
            required_model=d["required_model"],
            target_card=d["target_card"],
            doc_id=d["doc_id"],
            state=JobState(d["state"]),
            attempts=int(d.get("attempts", 0)),
            enqueue_time=int(d.get("enqueue_time", 0)),
        )


@dataclass
class WorkerInfo:
    worker_id: str
    capabilities: set[JobType]
    loaded_models: set[str]
    reg_seq: int
    busy: bool = False
    last_assigned_at: int = -1
    in_flight: Optional[str] = None


# -- effects the caller must carry out -----------------------------------------


@dataclass
class Assign:
    worker_id: str
    job: Job


@dataclass
class CancelWorkerJob:
    worker_id: str
    job_id: str


@dataclass
class CardLoading:
    doc_id: str
    card_id: str
    bubble: str


@dataclass
class CardBubble:
    doc_id: str
    card_id: str
    bubble: str


@dataclass
class CardSuccess:
    doc_id: str
    card_id: str
    data: bytes
    media_type: str
    job_id: str


@dataclass
class CardError:
    doc_id: str
    card_id: str
    message: str


@dataclass
class CardCancelled:
    doc_id: str
    card_id: str


Effect = object


class WorkerHub:
    def __init__(
        self,
        card_state: Optional[Callable[[str, str], Optional[GenStateName]]] = None,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    ):
        # card_state(doc_id, card_id) -> state or None; used to vet enqueues
        self._card_state = card_state
        self.max_attempts = max_attempts
        self.jobs: dict[str, Job] = {}
        self.queues: dict[JobType, list[str]] = {t: [] for t in JobType}
        self.workers: dict[str, WorkerInfo] = {}
        self._tick = 0
        self._worker_seq = 0

    # -- workers -----------------------------------------------------------

    def register_worker(
        self,
        capabilities: Iterable[JobType],
        loaded_models: Iterable[str] = (),
        worker_id: Optional[str] = None,
    ) -> tuple[str, list[Effect]]:
        caps = set(capabilities)
        if not caps:
            raise ValueError("worker capabilities must be nonempty")
        if worker_id is not None and worker_id in self.workers:
            raise DuplicateRegistration(f"worker {worker_id!r} already registered")
        self._worker_seq += 1
        wid = worker_id or f"w{self._worker_seq}"
        if wid in self.workers:
            raise DuplicateRegistration(f"worker {wid!r} already registered")
        self.workers[wid] = WorkerInfo(
            worker_id=wid,
            capabilities=caps,
            loaded_models=set(loaded_models),
            reg_seq=self._worker_seq,
        )
        return wid, self.dispatch()

    def deregister_worker(self, worker_id: str) -> list[Effect]:
        worker = self.workers.pop(worker_id, None)
        if worker is None:
            return []
        if worker.in_flight is not None:
            job = self.jobs.get(worker.in_flight)
            if job is not None and job.state in (JobState.assigned, JobState.running):
                self._requeue(job)  # attempts unchanged: the worker, not the job, failed
        return self.dispatch()

    def heartbeat(self, worker_id: str, loaded_models: Optional[Iterable[str]] = None) -> list[Effect]:
        worker = self.workers.get(worker_id)
        if worker is None:
            return []
        if loaded_models is not None:
            worker.loaded_models = set(loaded_models)
        return self.dispatch()

    # -- queue -------------------------------------------------------------

    def enqueue(self, job: Job) -> list[Effect]:
        if self._card_state is not None:
            state = self._card_state(job.doc_id, job.target_card)
            if state != GenStateName.waiting:
                raise TargetMissing(
                    f"job target {job.target_card!r} is not a waiting card"
                )
        job.state = JobState.queued
        job.enqueue_time = self._tick
        self._tick += 1
        self.jobs[job.job_id] = job
        self.queues[job.type].append(job.job_id)
        return self.dispatch()

    def _requeue(self, job: Job, front: bool = False) -> None:
        job.state = JobState.queued
        job.worker_id = None
        job.last_seq = 0
        if front:
            self.queues[job.type].insert(0, job.job_id)
        else:
            self.queues[job.type].append(job.job_id)

    def dispatch(self) -> list[Effect]:
        effects: list[Effect] = []
        assigned_any = True
        while assigned_any:
            assigned_any = False
            for job_type in JobType:
                queue = self.queues[job_type]
                if not queue:
                    continue
                job = self.jobs[queue[0]]
                worker = self._pick_worker(job)
                if worker is None:
                    continue  # head blocks: strict FIFO within the type
                queue.pop(0)
                job.state = JobState.assigned
                job.worker_id = worker.worker_id
                worker.busy = True
                worker.in_flight = job.job_id
                worker.last_assigned_at = self._tick
                self._tick += 1
                effects.append(Assign(worker.worker_id, job))
                assigned_any = True
        return effects

    def _pick_worker(self, job: Job) -> Optional[WorkerInfo]:
        candidates = [
            w
            for w in self.workers.values()
            if not w.busy and job.type in w.capabilities
        ]
        if not candidates:
            return None
        return min(
            candidates,
            key=lambda w: (
                0 if job.required_model in w.loaded_models else 1,
                w.last_assigned_at,
                w.reg_seq,
            ),
        )

    # -- worker reports ------------------------------------------------------

    def _live_job(self, job_id: str) -> Job:
        job = self.jobs.get(job_id)
        if job is None or job.state in (JobState.cancelled, JobState.done, JobState.failed):
            raise UnknownJob(f"no active job {job_id!r}")
        return job

    def report_status(self, job_id: str, seq: int, message: str) -> list[Effect]:
        job = self._live_job(job_id)
        if job.state not in (JobState.assigned, JobState.running):
            raise UnknownJob(f"job {job_id!r} is {job.state.value}, not in flight")
        if seq <= job.last_seq:
            return []  # stale or duplicate status
        job.last_seq = seq
        first = job.state == JobState.assigned
        job.state = JobState.running
        if first:
            return [CardLoading(job.doc_id, job.target_card, message)]
        return [CardBubble(job.doc_id, job.target_card, message)]

    def _release_worker(self, job: Job) -> None:
        worker = self.workers.get(job.worker_id or "")
        if worker is not None and worker.in_flight == job.job_id:
            worker.busy = False
            worker.in_flight = None

    def complete(self, job_id: str, data: bytes, media_type: str) -> list[Effect]:
        job = self.jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"no job {job_id!r}")
        if job.state == JobState.cancelled:
            # late result for a cancelled job: free the worker, drop the bytes
            self._release_worker(job)
            return self.dispatch()
        if job.state not in (JobState.assigned, JobState.running):
            raise UnknownJob(f"job {job_id!r} is {job.state.value}, not in flight")
        job.state = JobState.done
        worker = self.workers.get(job.worker_id or "")
        if worker is not None:
            worker.loaded_models.add(job.required_model)  # cold start warmed it
        self._release_worker(job)
        effects: list[Effect] = [
            CardSuccess(job.doc_id, job.target_card, data, media_type, job.job_id)
        ]
        effects.extend(self.dispatch())
        return effects

    def fail(self, job_id: str, error: str) -> list[Effect]:
        job = self.jobs.get(job_id)
        if job is None:
            raise UnknownJob(f"no job {job_id!r}")
        if job.state == JobState.cancelled:
            self._release_worker(job)
            return self.dispatch()
        if job.state not in (JobState.assigned, JobState.running):
            raise UnknownJob(f"job {job_id!r} is {job.state.value}, not in flight")
        job.attempts += 1
        self._release_worker(job)
        effects: list[Effect] = []
        if job.attempts < self.max_attempts:
            self._requeue(job, front=True)
            effects.append(CardBubble(job.doc_id, job.target_card, "retrying"))
        else:
            job.state = JobState.failed
            effects.append(CardError(job.doc_id, job.target_card, error))
        effects.extend(self.dispatch())
        return effects

    # -- cancellation ----------------------------------------------------------

    def cancel_jobs_for(self, card_ids: Iterable[str]) -> tuple[int, list[Effect]]:
        targets = set(card_ids)
        effects: list[Effect] = []
        count = 0
        for job in self.jobs.values():
            if job.target_card not in targets:
                continue
            if job.state == JobState.queued:
                self.queues[job.type].remove(job.job_id)
                job.state = JobState.cancelled
                count += 1
                effects.append(CardCancelled(job.doc_id, job.target_card))
            elif job.state in (JobState.assigned, JobState.running):
                job.state = JobState.cancelled
                count += 1
                if job.worker_id is not None:
                    effects.append(CancelWorkerJob(job.worker_id, job.job_id))
        return count, effects

    def job_state(self, job_id: str) -> JobState:
        job = self.jobs.get(job_id)
        if job is None or job.state == JobState.cancelled:
            raise UnknownJob(f"no job {job_id!r}")
        return job.state

    # -- durability --------------------------------------------------------------

    def snapshot(self) -> dict:
        """Serializable queue state. Workers are transient and not included."""
        return {
            "jobs": [self.jobs[jid].to_dict() for jid in sorted(self.jobs)],
            "queues": {t.value: list(q) for t, q in self.queues.items()},
            "tick": self._tick,
        }

    @classmethod
    def restore(
        cls,
        payload: dict,
        card_state: Optional[Callable[[str, str], Optional[GenStateName]]] = None,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    ) -> "WorkerHub":
        """Rebuild after a restart: anything that was in flight is requeued."""
        hub = cls(card_state=card_state, max_attempts=max_attempts)
        hub._tick = int(payload.get("tick", 0))
        for jd in payload.get("jobs", []):
            job = Job.from_dict(jd)
            hub.jobs[job.job_id] = job
        for type_name, job_ids in payload.get("queues", {}).items():
            hub.queues[JobType(type_name)] = [
                jid for jid in job_ids if jid in hub.jobs
            ]
        for job in sorted(hub.jobs.values(), key=lambda j: j.enqueue_time):
            if job.state in (JobState.assigned, JobState.running):
                hub._requeue(job)
        return hub
