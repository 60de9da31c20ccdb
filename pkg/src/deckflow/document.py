"""The canvas document: an aggregate of cards and clusters with batched edits.

Every public operation commits exactly one mutation, which bumps ``rev`` by
one and records the touched and removed entity ids. The gateway turns that
record into a single broadcast event, so clients never observe half-applied
operations. Operations validate their inputs before the mutation opens; code
inside an open mutation only assigns and appends.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .errors import (
    AlreadyClustered,
    ContentTypeMismatch,
    EmptySelection,
    MalformedClipboard,
    MediaImmutable,
    MissingAction,
    MissingCard,
    MissingEndpoint,
    MissingSlot,
    NonDataMember,
    SelfConnection,
)
from .ids import Clock, IdGenerator, make_ulid
from .model import (
    ActionCard,
    AssetRef,
    Cluster,
    DataCard,
    GenState,
    GenStateName,
    Modality,
    Position,
    Size,
    Slot,
    default_size,
)

Entity = Union[DataCard, ActionCard, Cluster]

_TS48_MASK = (1 << 48) - 1


@dataclass
class Mutation:
    """Record of one committed operation, consumed by the event layer."""

    op: str
    rev: int = 0
    touched_data: list[str] = field(default_factory=list)
    touched_actions: list[str] = field(default_factory=list)
    touched_clusters: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    seq: int = 0  # ids minted so far inside this mutation

    def touch_data(self, card_id: str) -> None:
        if card_id not in self.touched_data:
            self.touched_data.append(card_id)

    def touch_action(self, action_id: str) -> None:
        if action_id not in self.touched_actions:
            self.touched_actions.append(action_id)

    def touch_cluster(self, cluster_id: str) -> None:
        if cluster_id not in self.touched_clusters:
            self.touched_clusters.append(cluster_id)


class Document:
    def __init__(
        self,
        doc_id: str,
        clock: Optional[Clock] = None,
        deterministic: bool = False,
        created_at: Optional[str] = None,
        modified_at: Optional[str] = None,
    ):
        self.doc_id = doc_id
        self.rev = 0
        self.data_cards: dict[str, DataCard] = {}
        self.action_cards: dict[str, ActionCard] = {}
        self.clusters: dict[str, Cluster] = {}
        self.clock = clock or Clock()
        self.deterministic = deterministic
        self.created_at = created_at or self.clock.now_iso()
        self.modified_at = modified_at or self.created_at
        self._idgen = IdGenerator()
        self._mut: Optional[Mutation] = None
        self.last_mutation: Optional[Mutation] = None

    # -- identity ---------------------------------------------------------

    def new_id(self) -> str:
        """Mint an entity or job id. Only valid inside an open mutation.

        In deterministic mode the id is a pure function of
        (doc_id, rev being built, mint index), so a reloaded document resumes
        minting without colliding with ids it minted before the restart.
        """
        mut = self._require_mutation()
        if not self.deterministic:
            return self._idgen.new_id()
        k = mut.seq
        mut.seq += 1
        ts = (((self.rev + 1) << 12) | (k & 0xFFF)) & _TS48_MASK
        digest = hashlib.sha256(f"{self.doc_id}:{self.rev + 1}:{k}".encode()).digest()
        return make_ulid(ts, int.from_bytes(digest[:10], "big"))

    # -- mutation batching -------------------------------------------------

    @contextmanager
    def mutate(self, op: str) -> Iterator[Mutation]:
        if self._mut is not None:
            raise RuntimeError("nested mutations are not allowed")
        mut = Mutation(op=op)
        self._mut = mut
        try:
            yield mut
        except BaseException:
            self._mut = None
            raise
        self._mut = None
        self.rev += 1
        mut.rev = self.rev
        self.modified_at = self.clock.now_iso()
        self.last_mutation = mut

    def _require_mutation(self) -> Mutation:
        if self._mut is None:
            raise RuntimeError("this operation must run inside an open mutation")
        return self._mut

    # -- lookups -----------------------------------------------------------

    def entity(self, entity_id: str) -> Optional[Entity]:
        return (
            self.data_cards.get(entity_id)
            or self.action_cards.get(entity_id)
            or self.clusters.get(entity_id)
        )

    def require_data(self, card_id: str) -> DataCard:
        card = self.data_cards.get(card_id)
        if card is None:
            raise MissingCard(f"no data card {card_id!r}")
        return card

    def require_action(self, action_id: str) -> ActionCard:
        action = self.action_cards.get(action_id)
        if action is None:
            raise MissingAction(f"no action card {action_id!r}")
        return action

    def require_cluster(self, cluster_id: str) -> Cluster:
        cluster = self.clusters.get(cluster_id)
        if cluster is None:
            raise MissingCard(f"no cluster {cluster_id!r}")
        return cluster

    def cluster_of(self, card_id: str) -> Optional[Cluster]:
        for cluster in self.clusters.values():
            if card_id in cluster.members:
                return cluster
        return None

    # -- low-level adders (shared with composition and paste) --------------

    def add_data_card(self, card: DataCard) -> DataCard:
        mut = self._require_mutation()
        self.data_cards[card.id] = card
        mut.touch_data(card.id)
        return card

    def add_action_card(self, action: ActionCard) -> ActionCard:
        mut = self._require_mutation()
        self.action_cards[action.id] = action
        mut.touch_action(action.id)
        return action

    def add_cluster(self, cluster: Cluster) -> Cluster:
        mut = self._require_mutation()
        self.clusters[cluster.id] = cluster
        mut.touch_cluster(cluster.id)
        return cluster

    def touch_card(self, card_id: str) -> DataCard:
        """Mark an existing card as changed inside the current mutation."""
        card = self.require_data(card_id)
        self._require_mutation().touch_data(card_id)
        return card

    # -- card operations ----------------------------------------------------

    def create_card(
        self,
        kind: Modality,
        position: Position,
        content: Union[str, AssetRef, None] = None,
        size: Optional[Size] = None,
        annotation: Optional[str] = None,
        filename: Optional[str] = None,
    ) -> DataCard:
        if kind == Modality.text:
            if content is not None and not isinstance(content, str):
                raise ContentTypeMismatch("text cards hold a string")
            content = content or ""
        elif content is not None and not isinstance(content, AssetRef):
            raise ContentTypeMismatch(f"{kind.value} cards hold an asset reference")
        with self.mutate("create_card"):
            card = DataCard(
                id=self.new_id(),
                kind=kind,
                position=position,
                size=size or default_size(kind),
                content=content,
                annotation=annotation,
                gen_state=GenState(GenStateName.success),
                filename=filename,
            )
            self.add_data_card(card)
        return card

    def create_action(
        self,
        position: Position,
        target_modality: Modality,
        labels: Optional[Iterable[str]] = None,
    ) -> ActionCard:
        with self.mutate("create_card"):
            action = ActionCard(
                id=self.new_id(), position=position, target_modality=target_modality
            )
            for label in labels or []:
                self._append_slot(action, label)
            self.add_action_card(action)
        return action

    def update_text(self, card_id: str, text: str, target: str = "content") -> DataCard:
        card = self.require_data(card_id)
        if target == "content" and card.kind != Modality.text:
            raise MediaImmutable(f"{card.kind.value} card content cannot be edited")
        if target not in ("content", "annotation"):
            raise MissingCard(f"unknown text target {target!r}")
        cluster = self.cluster_of(card_id)
        with self.mutate("update_text") as mut:
            if target == "content":
                card.content = text
                card.truncated = False
            else:
                card.annotation = text
            mut.touch_data(card_id)
            if cluster is not None:
                # member text feeds the cluster summary, so the cache is stale
                cluster.cached_interpretation = None
                mut.touch_cluster(cluster.id)
        return card

    def move(self, entity_id: str, position: Position) -> Entity:
        entity = self.entity(entity_id)
        if entity is None:
            raise MissingCard(f"no entity {entity_id!r}")
        with self.mutate("move") as mut:
            if isinstance(entity, Cluster):
                dx = position.x - entity.position.x
                dy = position.y - entity.position.y
                entity.position = position
                mut.touch_cluster(entity.id)
                for member_id in entity.members:
                    member = self.data_cards[member_id]
                    member.position = Position(member.position.x + dx, member.position.y + dy)
                    mut.touch_data(member_id)
            elif isinstance(entity, ActionCard):
                entity.position = position
                mut.touch_action(entity.id)
            else:
                entity.position = position
                mut.touch_data(entity.id)
        return entity

    def resize(self, card_id: str, size: Size) -> DataCard:
        card = self.require_data(card_id)
        with self.mutate("resize") as mut:
            card.size = size
            mut.touch_data(card_id)
        return card

    # -- slots and wiring ---------------------------------------------------

    def _append_slot(self, action: ActionCard, label: str) -> Slot:
        slot = Slot(slot_id=f"s{action.slot_seq}", label=label)
        action.slot_seq += 1
        action.slots.append(slot)
        return slot

    def add_slot(self, action_id: str, label: str = "") -> Slot:
        action = self.require_action(action_id)
        with self.mutate("add_slot") as mut:
            slot = self._append_slot(action, label)
            mut.touch_action(action_id)
        return slot

    def remove_slot(self, action_id: str, slot_id: str) -> None:
        action = self.require_action(action_id)
        slot = action.slot(slot_id)
        if slot is None:
            raise MissingSlot(f"no slot {slot_id!r} on {action_id!r}")
        with self.mutate("remove_slot") as mut:
            action.slots.remove(slot)
            mut.touch_action(action_id)

    def rename_slot(self, action_id: str, slot_id: str, label: str) -> Slot:
        action = self.require_action(action_id)
        slot = action.slot(slot_id)
        if slot is None:
            raise MissingSlot(f"no slot {slot_id!r} on {action_id!r}")
        with self.mutate("rename_slot") as mut:
            slot.label = label
            mut.touch_action(action_id)
        return slot

    def connect(self, action_id: str, slot_id: str, source_id: str) -> Slot:
        action = self.require_action(action_id)
        slot = action.slot(slot_id)
        if slot is None:
            raise MissingSlot(f"no slot {slot_id!r} on {action_id!r}")
        if source_id == action_id:
            raise SelfConnection("an action card cannot feed its own slot")
        if source_id not in self.data_cards and source_id not in self.clusters:
            raise MissingEndpoint(f"no data card or cluster {source_id!r}")
        with self.mutate("connect") as mut:
            slot.connection = source_id
            mut.touch_action(action_id)
        return slot

    def disconnect(self, action_id: str, slot_id: str) -> bool:
        """Clear a slot. Returns False (and commits nothing) if already empty."""
        action = self.require_action(action_id)
        slot = action.slot(slot_id)
        if slot is None:
            raise MissingSlot(f"no slot {slot_id!r} on {action_id!r}")
        if slot.connection is None:
            return False
        with self.mutate("disconnect") as mut:
            slot.connection = None
            mut.touch_action(action_id)
        return True

    # -- clusters ------------------------------------------------------------

    def form_cluster(
        self, member_ids: Iterable[str], position: Position, label: Optional[str] = None
    ) -> Cluster:
        members = list(member_ids)
        if not members:
            raise EmptySelection("a cluster needs at least one member")
        for member_id in members:
            if member_id in self.action_cards or member_id in self.clusters:
                raise NonDataMember(f"{member_id!r} is not a data card")
            if member_id not in self.data_cards:
                raise MissingCard(f"no data card {member_id!r}")
            owner = self.cluster_of(member_id)
            if owner is not None:
                raise AlreadyClustered(f"{member_id!r} already belongs to {owner.id!r}")
        if len(set(members)) != len(members):
            raise AlreadyClustered("duplicate ids in cluster selection")
        with self.mutate("form_cluster"):
            cluster = Cluster(
                id=self.new_id(), position=position, label=label, members=members
            )
            self.add_cluster(cluster)
        return cluster

    def set_cluster_label(self, cluster_id: str, label: Optional[str]) -> Cluster:
        cluster = self.require_cluster(cluster_id)
        with self.mutate("set_cluster_label") as mut:
            cluster.label = label
            cluster.cached_interpretation = None
            mut.touch_cluster(cluster_id)
        return cluster

    # -- selection, duplication, deletion -------------------------------------

    def expand_selection(self, entity_ids: Iterable[str]) -> list[str]:
        """Resolve a user selection: picking a cluster picks its members too."""
        seen: list[str] = []

        def add(eid: str) -> None:
            if eid not in seen:
                seen.append(eid)

        for entity_id in entity_ids:
            entity = self.entity(entity_id)
            if entity is None:
                raise MissingCard(f"no entity {entity_id!r}")
            add(entity_id)
            if isinstance(entity, Cluster):
                for member_id in entity.members:
                    add(member_id)
        return seen

    def selection_payload(self, entity_ids: Iterable[str]) -> dict:
        """Entity part of a clipboard payload; media bytes are attached later."""
        ids = self.expand_selection(entity_ids)
        if not ids:
            raise EmptySelection("nothing selected")
        payload: dict = {"data_cards": [], "action_cards": [], "clusters": []}
        for entity_id in ids:
            entity = self.entity(entity_id)
            if isinstance(entity, DataCard):
                payload["data_cards"].append(entity.to_dict())
            elif isinstance(entity, ActionCard):
                payload["action_cards"].append(entity.to_dict())
            else:
                payload["clusters"].append(entity.to_dict())
        return payload

    def paste(self, payload: dict, position: Position) -> dict[str, str]:
        """Instantiate clipboard entities at ``position`` with fresh ids.

        Wiring survives only when both endpoints travelled together; a slot
        whose source stayed behind is pasted empty, and a cluster keeps only
        the members that came with it. Returns the old-id to new-id mapping.
        """
        parsed = _parse_clipboard_entities(payload)
        data_cards, action_cards, clusters = parsed
        if not (data_cards or action_cards or clusters):
            raise EmptySelection("clipboard payload holds no entities")

        xs = [c.position.x for c in data_cards + action_cards + clusters]
        ys = [c.position.y for c in data_cards + action_cards + clusters]
        dx = position.x - min(xs)
        dy = position.y - min(ys)

        with self.mutate("paste"):
            remap: dict[str, str] = {}
            for old in data_cards + action_cards + clusters:
                remap[old.id] = self.new_id()
            for card in data_cards:
                card.id = remap[card.id]
                card.position = Position(card.position.x + dx, card.position.y + dy)
                self.add_data_card(card)
            for action in action_cards:
                action.id = remap[action.id]
                action.position = Position(action.position.x + dx, action.position.y + dy)
                for slot in action.slots:
                    slot.connection = remap.get(slot.connection) if slot.connection else None
                self.add_action_card(action)
            for cluster in clusters:
                cluster.id = remap[cluster.id]
                cluster.position = Position(cluster.position.x + dx, cluster.position.y + dy)
                cluster.members = [remap[m] for m in cluster.members if m in remap]
                self.add_cluster(cluster)
        return remap

    def duplicate(self, entity_ids: Iterable[str], offset: float = 24.0) -> dict[str, str]:
        payload = self.selection_payload(entity_ids)
        everything = payload["data_cards"] + payload["action_cards"] + payload["clusters"]
        min_x = min(e["position"]["x"] for e in everything)
        min_y = min(e["position"]["y"] for e in everything)
        mapping = self.paste(payload, Position(min_x + offset, min_y + offset))
        self.last_mutation.op = "duplicate"  # type: ignore[union-attr]
        return mapping

    def delete(self, entity_ids: Iterable[str]) -> list[str]:
        """Remove entities and everything that references them.

        Unknown ids are skipped and deleting nothing commits nothing; a
        cluster's members outlive their cluster.
        """
        ids = [eid for eid in entity_ids if self.entity(eid) is not None]
        if not ids:
            return []
        with self.mutate("delete") as mut:
            for entity_id in ids:
                entity = self.entity(entity_id)
                if entity is None:
                    continue  # removed as a side effect earlier in this batch
                if isinstance(entity, DataCard):
                    self._delete_data_card(entity_id, mut)
                elif isinstance(entity, ActionCard):
                    del self.action_cards[entity_id]
                    mut.removed.append(entity_id)
                else:
                    del self.clusters[entity_id]
                    mut.removed.append(entity_id)
                    self._clear_connections_to(entity_id, mut)
        return list(mut.removed)

    def _delete_data_card(self, card_id: str, mut: Mutation) -> None:
        del self.data_cards[card_id]
        mut.removed.append(card_id)
        if card_id in mut.touched_data:
            mut.touched_data.remove(card_id)
        self._clear_connections_to(card_id, mut)
        cluster = self.cluster_of(card_id)
        if cluster is not None:
            cluster.members.remove(card_id)
            cluster.cached_interpretation = None
            mut.touch_cluster(cluster.id)

    def _clear_connections_to(self, source_id: str, mut: Mutation) -> None:
        for action in self.action_cards.values():
            for slot in action.slots:
                if slot.connection == source_id:
                    slot.connection = None
                    mut.touch_action(action.id)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "rev": self.rev,
            "created_at": self.created_at,
            "modified_at": self.modified_at,
            "data_cards": [self.data_cards[k].to_dict() for k in sorted(self.data_cards)],
            "action_cards": [self.action_cards[k].to_dict() for k in sorted(self.action_cards)],
            "clusters": [self.clusters[k].to_dict() for k in sorted(self.clusters)],
        }

    @classmethod
    def from_dict(
        cls, d: dict, clock: Optional[Clock] = None, deterministic: bool = False
    ) -> Document:
        doc = cls(
            d["doc_id"],
            clock=clock,
            deterministic=deterministic,
            created_at=d["created_at"],
            modified_at=d["modified_at"],
        )
        doc.rev = int(d["rev"])
        for cd in d.get("data_cards", []):
            card = DataCard.from_dict(cd)
            doc.data_cards[card.id] = card
        for ad in d.get("action_cards", []):
            action = ActionCard.from_dict(ad)
            doc.action_cards[action.id] = action
        for gd in d.get("clusters", []):
            cluster = Cluster.from_dict(gd)
            doc.clusters[cluster.id] = cluster
        return doc


def _parse_clipboard_entities(
    payload: dict,
) -> tuple[list[DataCard], list[ActionCard], list[Cluster]]:
    if not isinstance(payload, dict):
        raise MalformedClipboard("clipboard payload is not an object")
    try:
        data_cards = [DataCard.from_dict(d) for d in payload.get("data_cards", [])]
        action_cards = [ActionCard.from_dict(d) for d in payload.get("action_cards", [])]
        clusters = [Cluster.from_dict(d) for d in payload.get("clusters", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedClipboard(f"clipboard payload is malformed: {exc}") from exc
    return data_cards, action_cards, clusters
