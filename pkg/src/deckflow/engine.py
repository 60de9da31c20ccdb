"""Transport-free session engine.

Everything the server does between receiving a JSON envelope and sending
JSON back lives here, so a WebSocket session and a headless replay run the
exact same code path. Handlers return the single response envelope plus any
broadcast events and worker assignments; the caller owns delivery.

Determinism: with deterministic=True the engine uses a fixed clock and
documents mint ids as pure functions of (doc_id, rev, index), so replaying a
recorded log reproduces the same canonical document byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import composition, lifecycle
from .adapters import AdapterSet
from .assets import AssetStore
from .docfile import document_payload, log_entry
from .document import Document
from .errors import (
    DeckFlowError,
    DocNotFound,
    MediaImmutable,
    MissingCard,
    StorageFailure,
)
from .hub import (
    Assign,
    CancelWorkerJob,
    CAPABILITY_JOB_TYPES,
    CardBubble,
    CardCancelled,
    CardError,
    CardLoading,
    CardSuccess,
    Job,
    WorkerHub,
)
from .ids import Clock, FixedClock, IdGenerator
from .lifecycle import CANCELLED_BUBBLE
from .model import AssetRef, GenStateName, Modality, Position, Size
from .store import DocumentStore
from .templates import TemplateStore


class _BadRequest(DeckFlowError):
    code = "bad_request"


@dataclass
class ClientResult:
    response: dict
    events: list[dict] = field(default_factory=list)
    assignments: list[Assign] = field(default_factory=list)
    cancels: list[CancelWorkerJob] = field(default_factory=list)


@dataclass
class WorkerResult:
    events: list[dict] = field(default_factory=list)
    assignments: list[Assign] = field(default_factory=list)
    cancels: list[CancelWorkerJob] = field(default_factory=list)


class Engine:
    def __init__(
        self,
        store: Optional[DocumentStore] = None,
        adapters: Optional[AdapterSet] = None,
        templates: Optional[TemplateStore] = None,
        deterministic: bool = False,
        max_attempts: int = 2,
    ):
        self.store = store
        self.assets: AssetStore = store.assets if store else AssetStore()
        self.adapters = adapters or AdapterSet.mocks()
        self.templates = templates or TemplateStore()
        self.deterministic = deterministic
        self.clock: Clock = FixedClock() if deterministic else Clock()
        self.docs: dict[str, Document] = {}
        self._doc_ids = IdGenerator()
        self._doc_seq = 0
        jobs_payload = store.load_jobs() if store else None
        if jobs_payload:
            self.hub = WorkerHub.restore(
                jobs_payload, card_state=self._card_state, max_attempts=max_attempts
            )
        else:
            self.hub = WorkerHub(card_state=self._card_state, max_attempts=max_attempts)
        self.recording: Optional[list[dict]] = None

    # -- documents -----------------------------------------------------------

    def _card_state(self, doc_id: str, card_id: str) -> Optional[GenStateName]:
        doc = self.docs.get(doc_id)
        if doc is None:
            return None
        card = doc.data_cards.get(card_id)
        return card.gen_state.state if card else None

    def _new_doc_id(self) -> str:
        if self.deterministic:
            self._doc_seq += 1
            return f"doc-{self._doc_seq}"
        return self._doc_ids.new_id()

    def open_doc(self, doc_id: Optional[str] = None) -> Document:
        if doc_id is None:
            doc_id = self._new_doc_id()
        doc = self.docs.get(doc_id)
        if doc is not None:
            return doc
        if self.store is not None and self.store.exists(doc_id):
            doc = self.store.load(doc_id, clock=self.clock, deterministic=self.deterministic)
        else:
            doc = Document(doc_id, clock=self.clock, deterministic=self.deterministic)
            if self.store is not None:
                self.store.save(doc)
        self.docs[doc_id] = doc
        return doc

    def get_doc(self, doc_id: str) -> Document:
        doc = self.docs.get(doc_id)
        if doc is None:
            if self.store is not None and self.store.exists(doc_id):
                return self.open_doc(doc_id)
            raise DocNotFound(f"no document {doc_id!r}")
        return doc

    def list_docs(self) -> list[dict]:
        listed = {d["doc_id"]: d for d in (self.store.list_docs() if self.store else [])}
        for doc in self.docs.values():
            listed[doc.doc_id] = {
                "doc_id": doc.doc_id,
                "rev": doc.rev,
                "modified_at": doc.modified_at,
            }
        return sorted(listed.values(), key=lambda d: d["doc_id"])

    def persist_all(self) -> None:
        if self.store is None:
            return
        for doc in self.docs.values():
            self.store.save(doc)
        self.store.save_jobs(self.hub.snapshot())

    # -- envelope plumbing -----------------------------------------------------

    def handle_client(self, envelope: dict) -> ClientResult:
        msg_id = envelope.get("msg_id")
        try:
            if not isinstance(envelope, dict) or not isinstance(envelope.get("kind"), str):
                raise _BadRequest("envelope needs a string 'kind'")
            kind = envelope["kind"]
            handler = _CLIENT_HANDLERS.get(kind)
            if handler is None:
                raise _BadRequest(f"unknown message kind {kind!r}")
            if self.recording is not None:
                self.recording.append(log_entry(self.clock.now_iso(), envelope))
            body = envelope.get("body") or {}
            if not isinstance(body, dict):
                raise _BadRequest("body must be an object")
            return handler(self, msg_id, envelope.get("doc_id"), body)
        except DeckFlowError as exc:
            return ClientResult(response=_error_envelope(msg_id, exc))

    # -- mutation helpers ---------------------------------------------------------

    def _persist(self, doc: Document, before: dict) -> Optional[dict]:
        """Write-through. On failure the in-memory doc rolls back and the
        caller gets a server_status event to broadcast alongside the error."""
        if self.store is None:
            return None
        try:
            self.store.save(doc)
            return None
        except StorageFailure as exc:
            restored = Document.from_dict(
                before, clock=self.clock, deterministic=self.deterministic
            )
            self.docs[doc.doc_id] = restored
            raise _StorageRejected(exc) from exc

    def _save_jobs(self) -> None:
        if self.store is not None:
            self.store.save_jobs(self.hub.snapshot())

    def _mutating(self, doc: Document):
        return _MutationScope(self, doc)

    def _event(self, doc: Document) -> dict:
        mut = doc.last_mutation
        assert mut is not None
        entities = {
            "data_cards": [
                doc.data_cards[i].to_dict() for i in mut.touched_data if i in doc.data_cards
            ],
            "action_cards": [
                doc.action_cards[i].to_dict()
                for i in mut.touched_actions
                if i in doc.action_cards
            ],
            "clusters": [
                doc.clusters[i].to_dict() for i in mut.touched_clusters if i in doc.clusters
            ],
        }
        return {
            "kind": "event",
            "doc_id": doc.doc_id,
            "rev": mut.rev,
            "body": {"op": mut.op, "entities": entities, "removed_ids": list(mut.removed)},
        }

    def _ack(self, msg_id, doc: Optional[Document], result: Optional[dict] = None) -> dict:
        out = {"msg_id": msg_id, "kind": "ack", "body": result or {}}
        if doc is not None:
            out["doc_id"] = doc.doc_id
            out["rev"] = doc.rev
        return out

    # -- hub effect application -----------------------------------------------------

    def _apply_effects(self, effects: list) -> WorkerResult:
        out = WorkerResult()
        for effect in effects:
            if isinstance(effect, Assign):
                out.assignments.append(effect)
            elif isinstance(effect, CancelWorkerJob):
                out.cancels.append(effect)
            elif isinstance(effect, CardLoading):
                out.events.extend(
                    self._transition(
                        effect.doc_id, effect.card_id, GenStateName.loading, effect.bubble
                    )
                )
            elif isinstance(effect, CardBubble):
                out.events.extend(self._bubble(effect.doc_id, effect.card_id, effect.bubble))
            elif isinstance(effect, CardSuccess):
                out.events.extend(self._complete_card(effect))
            elif isinstance(effect, CardError):
                out.events.extend(
                    self._transition(
                        effect.doc_id, effect.card_id, GenStateName.error, effect.message
                    )
                )
            elif isinstance(effect, CardCancelled):
                out.events.extend(
                    self._transition(
                        effect.doc_id, effect.card_id, GenStateName.error, CANCELLED_BUBBLE
                    )
                )
        self._save_jobs()
        if self.store is not None:
            for doc_id in {e["doc_id"] for e in out.events}:
                self.store.save(self.docs[doc_id])
        return out

    def _transition(self, doc_id: str, card_id: str, to: GenStateName, bubble: str) -> list[dict]:
        doc = self.docs.get(doc_id)
        if doc is None or card_id not in doc.data_cards:
            return []  # the card went away; nothing to update
        try:
            lifecycle.transition(doc, card_id, to, bubble=bubble)
        except DeckFlowError:
            return []  # stale effect racing a delete or cancel
        return [self._event(doc)]

    def _bubble(self, doc_id: str, card_id: str, bubble: str) -> list[dict]:
        doc = self.docs.get(doc_id)
        if doc is None or card_id not in doc.data_cards:
            return []
        lifecycle.update_bubble(doc, card_id, bubble)
        return [self._event(doc)]

    def _complete_card(self, effect: CardSuccess) -> list[dict]:
        doc = self.docs.get(effect.doc_id)
        if doc is None or effect.card_id not in doc.data_cards:
            return []
        card = doc.data_cards[effect.card_id]
        if card.kind == Modality.text:
            payload: object = effect.data.decode("utf-8")
        else:
            payload = self.assets.put(effect.data, effect.media_type)
        try:
            lifecycle.transition(doc, effect.card_id, GenStateName.success, payload=payload)
        except DeckFlowError:
            return []
        return [self._event(doc)]

    # -- worker entry points -----------------------------------------------------

    def worker_register(self, capabilities, loaded_models=(), worker_id=None):
        wid, effects = self.hub.register_worker(capabilities, loaded_models, worker_id)
        return wid, self._apply_effects(effects)

    def worker_heartbeat(self, worker_id: str, loaded_models=None) -> WorkerResult:
        return self._apply_effects(self.hub.heartbeat(worker_id, loaded_models))

    def worker_lost(self, worker_id: str) -> WorkerResult:
        return self._apply_effects(self.hub.deregister_worker(worker_id))

    def worker_status(self, job_id: str, seq: int, message: str) -> WorkerResult:
        return self._apply_effects(self.hub.report_status(job_id, seq, message))

    def complete_job(self, job_id: str, data: bytes, media_type: str) -> WorkerResult:
        return self._apply_effects(self.hub.complete(job_id, data, media_type))

    def fail_job(self, job_id: str, error: str) -> WorkerResult:
        return self._apply_effects(self.hub.fail(job_id, error))

    # -- client handlers ------------------------------------------------------------

    def _h_join(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.open_doc(doc_id)
        snapshot = {
            "msg_id": msg_id,
            "kind": "snapshot",
            "doc_id": doc.doc_id,
            "rev": doc.rev,
            "body": document_payload(doc),
        }
        return ClientResult(response=snapshot)

    def _h_create_card(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        position = _position(body)
        card_type = body.get("card_type", "data")
        with self._mutating(doc) as scope:
            if card_type == "action":
                entity = doc.create_action(
                    position,
                    _modality(body.get("target_modality", "image")),
                    labels=body.get("labels"),
                )
            elif card_type == "data":
                content = body.get("content")
                if isinstance(content, dict):
                    content = AssetRef.from_dict(content)
                    if not self.assets.exists(content.id):
                        raise MissingCard(f"no asset {content.id!r}")
                entity = doc.create_card(
                    _modality(body.get("kind", "text")),
                    position,
                    content=content,
                    annotation=body.get("annotation"),
                    filename=body.get("filename"),
                )
            else:
                raise _BadRequest(f"unknown card_type {card_type!r}")
        return scope.result(self._ack(msg_id, doc, {"id": entity.id}))

    def _h_update_text(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            doc.update_text(
                _require_str(body, "card_id"),
                _require_str(body, "text", allow_empty=True),
                target=body.get("target", "content"),
            )
        return scope.result(self._ack(msg_id, doc))

    def _h_move(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            doc.move(_require_str(body, "entity_id"), _position(body))
        return scope.result(self._ack(msg_id, doc))

    def _h_resize(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        size = body.get("size")
        if not isinstance(size, dict):
            raise _BadRequest("resize needs a size object")
        with self._mutating(doc) as scope:
            doc.resize(_require_str(body, "card_id"), Size.from_dict(size))
        return scope.result(self._ack(msg_id, doc))

    def _h_connect(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            doc.connect(
                _require_str(body, "action_id"),
                _require_str(body, "slot_id"),
                _require_str(body, "source_id"),
            )
        return scope.result(self._ack(msg_id, doc))

    def _h_disconnect(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            changed = doc.disconnect(
                _require_str(body, "action_id"), _require_str(body, "slot_id")
            )
            if not changed:
                scope.no_mutation()
        return scope.result(self._ack(msg_id, doc, {"changed": changed}))

    def _h_add_slot(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            slot = doc.add_slot(_require_str(body, "action_id"), body.get("label", ""))
        return scope.result(self._ack(msg_id, doc, {"slot_id": slot.slot_id}))

    def _h_remove_slot(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            doc.remove_slot(_require_str(body, "action_id"), _require_str(body, "slot_id"))
        return scope.result(self._ack(msg_id, doc))

    def _h_rename_slot(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            doc.rename_slot(
                _require_str(body, "action_id"),
                _require_str(body, "slot_id"),
                _require_str(body, "label", allow_empty=True),
            )
        return scope.result(self._ack(msg_id, doc))

    def _h_form_cluster(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        members = body.get("member_ids")
        if not isinstance(members, list):
            raise _BadRequest("form_cluster needs member_ids")
        with self._mutating(doc) as scope:
            cluster = doc.form_cluster(members, _position(body), body.get("label"))
        return scope.result(self._ack(msg_id, doc, {"id": cluster.id}))

    def _h_set_cluster_label(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            doc.set_cluster_label(_require_str(body, "cluster_id"), body.get("label"))
        return scope.result(self._ack(msg_id, doc))

    def _h_trigger_action(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            result = composition.trigger_action(
                doc, _require_str(body, "action_id"), self.adapters, self.templates
            )
        out = scope.result(
            self._ack(
                msg_id,
                doc,
                {
                    "prompt_card_ids": result.prompt_card_ids,
                    "output_card_ids": result.output_card_ids,
                    "job_ids": [spec["job_id"] for spec in result.job_specs],
                },
            )
        )
        effects = []
        for spec in result.job_specs:
            job = Job(
                job_id=spec["job_id"],
                type=CAPABILITY_JOB_TYPES[spec["capability"]],
                payload={
                    "prompt": spec["prompt"],
                    "seed": spec["seed"],
                    "sample_index": spec["sample_index"],
                    "row": spec["row"],
                },
                required_model=self.adapters.model_for(spec["capability"]),
                target_card=spec["target_card"],
                doc_id=doc.doc_id,
            )
            effects.extend(self.hub.enqueue(job))
        applied = self._apply_effects(effects)
        out.events.extend(applied.events)
        out.assignments.extend(applied.assignments)
        out.cancels.extend(applied.cancels)
        return out

    def _h_decompose(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        card = doc.require_data(_require_str(body, "card_id"))
        if card.kind != Modality.text:
            raise MediaImmutable("only text cards can be decomposed")
        goal = card.content or ""
        decomposition = composition.decompose_goal(goal, self.adapters, self.templates)
        if "position" in body:
            position = _position(body)
        else:
            position = Position(
                card.position.x + card.size.width + 2 * composition.COLUMN_GAP
                + composition.ACTION_CARD_WIDTH,
                card.position.y,
            )
        with self._mutating(doc) as scope:
            action = composition.materialize_decomposition(
                doc, decomposition, position, goal_card_id=card.id, goal_text=goal
            )
        return scope.result(self._ack(msg_id, doc, {"action_id": action.id}))

    def _h_interpret_cluster(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        with self._mutating(doc) as scope:
            card = composition.materialize_cluster_text(
                doc, _require_str(body, "cluster_id"), self.adapters, self.templates
            )
        return scope.result(self._ack(msg_id, doc, {"card_id": card.id, "text": card.content}))

    def _h_duplicate(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        ids = body.get("entity_ids")
        if not isinstance(ids, list):
            raise _BadRequest("duplicate needs entity_ids")
        with self._mutating(doc) as scope:
            mapping = doc.duplicate(ids, offset=float(body.get("offset", 24.0)))
        return scope.result(self._ack(msg_id, doc, {"mapping": mapping}))

    def _h_delete(self, msg_id, doc_id, body) -> ClientResult:
        doc = self.get_doc(doc_id)
        ids = body.get("entity_ids")
        if not isinstance(ids, list):
            raise _BadRequest("delete needs entity_ids")
        with self._mutating(doc) as scope:
            removed = doc.delete(ids)
            if not removed:
                scope.no_mutation()
        out = scope.result(self._ack(msg_id, doc, {"removed": removed}))
        if removed:
            _, effects = self.hub.cancel_jobs_for(removed)
            applied = self._apply_effects(effects)
            out.events.extend(applied.events)
            out.assignments.extend(applied.assignments)
            out.cancels.extend(applied.cancels)
        return out

    def _h_paste(self, msg_id, doc_id, body) -> ClientResult:
        from .docfile import clipboard_assets

        doc = self.get_doc(doc_id)
        payload = body.get("payload")
        if not isinstance(payload, dict):
            raise _BadRequest("paste needs a clipboard payload object")
        for asset_id, data in clipboard_assets(payload).items():
            stored = self.assets.put(data, payload["assets"][asset_id]["media_type"])
            if stored.id != asset_id:
                # inlined bytes do not match their claimed id; refuse the paste
                raise _BadRequest(f"clipboard asset {asset_id!r} fails its hash")
        with self._mutating(doc) as scope:
            mapping = doc.paste(payload, _position(body))
        return scope.result(self._ack(msg_id, doc, {"mapping": mapping}))

    # -- uploads (HTTP side channel) ---------------------------------------------

    def ingest_upload(self, doc_id: str, data: bytes, filename: str, position: Position):
        from .uploads import sniff_media_type

        doc = self.get_doc(doc_id)
        media_type, kind = sniff_media_type(data, filename)
        with self._mutating(doc) as scope:
            if kind == Modality.text:
                card = doc.create_card(
                    Modality.text,
                    position,
                    content=data.decode("utf-8", errors="replace"),
                    annotation=filename,
                    filename=filename,
                )
            else:
                ref = self.assets.put(data, media_type)
                card = doc.create_card(
                    kind, position, content=ref, annotation=filename, filename=filename
                )
        return card, scope.result(self._ack(None, doc, {"id": card.id}))


class _StorageRejected(DeckFlowError):
    code = "storage_failure"

    def __init__(self, cause: StorageFailure):
        super().__init__(f"document not saved: {cause.message}")


class _MutationScope:
    """Snapshot-first write scope: run the op, persist, and on storage failure
    roll the document back and turn the request into an error + status event."""

    def __init__(self, engine: Engine, doc: Document):
        self.engine = engine
        self.doc = doc
        self.before: Optional[dict] = None
        self.mutated = True

    def __enter__(self):
        if self.engine.store is not None:
            self.before = self.doc.to_dict()
        return self

    def no_mutation(self) -> None:
        self.mutated = False

    def __exit__(self, exc_type, exc, tb):
        return False

    def result(self, ack: dict) -> ClientResult:
        if not self.mutated:
            return ClientResult(response=ack)
        try:
            self.engine._persist(self.doc, self.before or {})
        except _StorageRejected as rejected:
            status = {
                "kind": "server_status",
                "body": {"status": "storage_failure", "message": rejected.message},
            }
            return ClientResult(
                response=_error_envelope(ack.get("msg_id"), rejected), events=[status]
            )
        return ClientResult(response=ack, events=[self.engine._event(self.doc)])


def _error_envelope(msg_id, exc: DeckFlowError) -> dict:
    body = {"code": exc.code, "message": exc.message}
    position = getattr(exc, "position", None)
    if position is not None:
        body["position"] = position
    raw = getattr(exc, "raw", None)
    if raw is not None:
        body["raw"] = raw
    return {"msg_id": msg_id, "kind": "error", "body": body}


def _require_str(body: dict, key: str, allow_empty: bool = False) -> str:
    value = body.get(key)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise _BadRequest(f"field {key!r} must be a nonempty string")
    return value


def _position(body: dict) -> Position:
    position = body.get("position")
    if not isinstance(position, dict):
        raise _BadRequest("a position object is required")
    try:
        return Position.from_dict(position)
    except (KeyError, TypeError) as exc:
        raise _BadRequest(f"bad position: {exc}") from exc


def _modality(value) -> Modality:
    try:
        return Modality(value)
    except ValueError as exc:
        raise _BadRequest(f"unknown modality {value!r}") from exc


_CLIENT_HANDLERS = {
    "join": Engine._h_join,
    "create_card": Engine._h_create_card,
    "update_text": Engine._h_update_text,
    "move": Engine._h_move,
    "resize": Engine._h_resize,
    "connect": Engine._h_connect,
    "disconnect": Engine._h_disconnect,
    "add_slot": Engine._h_add_slot,
    "remove_slot": Engine._h_remove_slot,
    "rename_slot": Engine._h_rename_slot,
    "form_cluster": Engine._h_form_cluster,
    "set_cluster_label": Engine._h_set_cluster_label,
    "trigger_action": Engine._h_trigger_action,
    "decompose": Engine._h_decompose,
    "interpret_cluster": Engine._h_interpret_cluster,
    "duplicate": Engine._h_duplicate,
    "delete": Engine._h_delete,
    "paste": Engine._h_paste,
}
