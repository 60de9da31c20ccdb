import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fake_ref, text_card

from deckflow.document import Document
from deckflow.errors import (
    AlreadyClustered,
    ContentTypeMismatch,
    EmptySelection,
    MalformedClipboard,
    MediaImmutable,
    MissingCard,
    MissingEndpoint,
    MissingSlot,
    NonDataMember,
    SelfConnection,
)
from deckflow.ids import FixedClock
from deckflow.model import AssetRef, Modality, Position, Size


def make_doc() -> Document:
    return Document("doc-t", clock=FixedClock(), deterministic=True)


# -- rev discipline -------------------------------------------------------------


def test_every_public_op_bumps_rev_exactly_once(doc):
    assert doc.rev == 0
    card = text_card(doc, "hello")
    assert doc.rev == 1
    doc.update_text(card.id, "edited")
    assert doc.rev == 2
    action = doc.create_action(Position(300, 0), Modality.image, labels=["a", "b"])
    assert doc.rev == 3
    doc.connect(action.id, action.slots[0].slot_id, card.id)
    assert doc.rev == 4
    doc.delete([card.id, action.id])
    assert doc.rev == 5


def test_abandoned_mutation_rolls_back_rev(doc):
    with pytest.raises(RuntimeError):
        with doc.mutate("broken"):
            raise RuntimeError("op failed midway")
    assert doc.rev == 0
    assert doc.last_mutation is None
    # the document still accepts new mutations afterwards
    text_card(doc, "fine")
    assert doc.rev == 1


def test_nested_mutations_rejected(doc):
    with pytest.raises(RuntimeError):
        with doc.mutate("outer"):
            with doc.mutate("inner"):
                pass


def test_deterministic_ids_are_stable_and_sorted():
    a, b = make_doc(), make_doc()
    ids_a = [text_card(a, f"c{i}").id for i in range(5)]
    ids_b = [text_card(b, f"c{i}").id for i in range(5)]
    assert ids_a == ids_b
    assert ids_a == sorted(ids_a)


def test_deterministic_ids_resume_after_reload(doc):
    text_card(doc, "one")
    reloaded = Document.from_dict(doc.to_dict(), clock=FixedClock(), deterministic=True)
    fresh = text_card(doc, "two")
    resumed = text_card(reloaded, "two")
    assert fresh.id == resumed.id


# -- card ops ----------------------------------------------------------------


def test_create_card_content_type_checks(doc):
    with pytest.raises(ContentTypeMismatch):
        doc.create_card(Modality.text, Position(0, 0), content=fake_ref())
    with pytest.raises(ContentTypeMismatch):
        doc.create_card(Modality.image, Position(0, 0), content="not an asset")
    assert doc.rev == 0  # nothing committed


def test_media_content_not_editable(doc):
    card = doc.create_card(Modality.image, Position(0, 0), content=fake_ref())
    with pytest.raises(MediaImmutable):
        doc.update_text(card.id, "nope")
    doc.update_text(card.id, "a caption", target="annotation")
    assert card.annotation == "a caption"


def test_update_text_clears_truncated_flag(doc):
    card = text_card(doc, "t")
    card.truncated = True
    doc.update_text(card.id, "new text")
    assert card.truncated is False


def test_move_cluster_moves_members_by_same_delta(doc):
    a = text_card(doc, "a", 0, 0)
    b = text_card(doc, "b", 100, 50)
    cluster = doc.form_cluster([a.id, b.id], Position(10, 10))
    doc.move(cluster.id, Position(110, 10))
    assert (a.position.x, a.position.y) == (100, 0)
    assert (b.position.x, b.position.y) == (200, 50)


def test_resize(doc):
    card = text_card(doc, "r")
    doc.resize(card.id, Size(300, 200))
    assert card.size.width == 300


# -- slots and wiring ----------------------------------------------------------


def test_slot_ids_never_reused(doc):
    action = doc.create_action(Position(0, 0), Modality.image, labels=["x"])
    first = action.slots[0].slot_id
    doc.remove_slot(action.id, first)
    replacement = doc.add_slot(action.id, "y")
    assert replacement.slot_id != first


def test_connect_validation(doc):
    card = text_card(doc, "src")
    action = doc.create_action(Position(0, 0), Modality.image, labels=["in"])
    sid = action.slots[0].slot_id
    with pytest.raises(SelfConnection):
        doc.connect(action.id, sid, action.id)
    with pytest.raises(MissingEndpoint):
        doc.connect(action.id, sid, "nope")
    with pytest.raises(MissingSlot):
        doc.connect(action.id, "s999", card.id)
    doc.connect(action.id, sid, card.id)
    other = text_card(doc, "other")
    doc.connect(action.id, sid, other.id)  # replacing is allowed
    assert action.slots[0].connection == other.id


def test_disconnect_empty_slot_commits_nothing(doc):
    action = doc.create_action(Position(0, 0), Modality.image, labels=["in"])
    rev = doc.rev
    assert doc.disconnect(action.id, action.slots[0].slot_id) is False
    assert doc.rev == rev


# -- clusters -------------------------------------------------------------------


def test_cluster_membership_rules(doc):
    a = text_card(doc, "a")
    b = text_card(doc, "b")
    action = doc.create_action(Position(0, 0), Modality.image)
    with pytest.raises(EmptySelection):
        doc.form_cluster([], Position(0, 0))
    with pytest.raises(NonDataMember):
        doc.form_cluster([a.id, action.id], Position(0, 0))
    with pytest.raises(MissingCard):
        doc.form_cluster([a.id, "ghost"], Position(0, 0))
    with pytest.raises(AlreadyClustered):
        doc.form_cluster([a.id, a.id], Position(0, 0))
    doc.form_cluster([b.id, a.id], Position(0, 0), label="pair")
    with pytest.raises(AlreadyClustered):
        doc.form_cluster([a.id], Position(0, 0))


def test_cluster_keeps_formation_order(doc):
    cards = [text_card(doc, f"m{i}") for i in range(4)]
    picked = [cards[2].id, cards[0].id, cards[3].id]
    cluster = doc.form_cluster(picked, Position(0, 0))
    assert cluster.members == picked


def test_cache_invalidation_on_member_edit_label_change_and_delete(doc):
    a = text_card(doc, "a")
    b = text_card(doc, "b")
    cluster = doc.form_cluster([a.id, b.id], Position(0, 0))

    cluster.cached_interpretation = "cached"
    doc.update_text(a.id, "a2")
    assert cluster.cached_interpretation is None

    cluster.cached_interpretation = "cached"
    doc.set_cluster_label(cluster.id, "new label")
    assert cluster.cached_interpretation is None

    cluster.cached_interpretation = "cached"
    doc.delete([b.id])
    assert cluster.cached_interpretation is None
    assert cluster.members == [a.id]


def test_annotation_edit_also_invalidates_cluster_cache(doc):
    # media members fall back to annotations during interpretation,
    # so any member text change makes the summary stale
    a = text_card(doc, "a")
    cluster = doc.form_cluster([a.id], Position(0, 0))
    cluster.cached_interpretation = "cached"
    doc.update_text(a.id, "note", target="annotation")
    assert cluster.cached_interpretation is None


# -- delete ---------------------------------------------------------------------


def test_delete_is_lenient_and_cascades(doc):
    card = text_card(doc, "x")
    action = doc.create_action(Position(0, 0), Modality.image, labels=["in"])
    doc.connect(action.id, action.slots[0].slot_id, card.id)
    rev = doc.rev
    assert doc.delete(["ghost", "another-ghost"]) == []
    assert doc.rev == rev  # deleting nothing is a no-op
    removed = doc.delete([card.id, "ghost"])
    assert removed == [card.id]
    assert action.slots[0].connection is None


def test_delete_cluster_releases_members(doc):
    a = text_card(doc, "a")
    cluster = doc.form_cluster([a.id], Position(0, 0))
    doc.delete([cluster.id])
    assert a.id in doc.data_cards
    assert doc.cluster_of(a.id) is None


def test_deleting_connected_cluster_clears_slots(doc):
    a = text_card(doc, "a")
    cluster = doc.form_cluster([a.id], Position(0, 0))
    action = doc.create_action(Position(0, 0), Modality.image, labels=["in"])
    doc.connect(action.id, action.slots[0].slot_id, cluster.id)
    doc.delete([cluster.id])
    assert action.slots[0].connection is None


# -- selection / clipboard / paste ----------------------------------------------


def test_selecting_cluster_includes_members(doc):
    a = text_card(doc, "a")
    b = text_card(doc, "b")
    cluster = doc.form_cluster([a.id, b.id], Position(0, 0))
    ids = doc.expand_selection([cluster.id])
    assert set(ids) == {cluster.id, a.id, b.id}


def test_paste_remaps_connections_only_when_both_endpoints_travel(doc):
    src = text_card(doc, "src", 0, 0)
    outside = text_card(doc, "outside", 500, 0)
    action = doc.create_action(Position(100, 0), Modality.image, labels=["a", "b"])
    doc.connect(action.id, action.slots[0].slot_id, src.id)
    doc.connect(action.id, action.slots[1].slot_id, outside.id)

    payload = doc.selection_payload([src.id, action.id])
    mapping = doc.paste(payload, Position(1000, 1000))

    new_action = doc.action_cards[mapping[action.id]]
    assert new_action.slots[0].connection == mapping[src.id]
    assert new_action.slots[1].connection is None  # source stayed behind
    # originals untouched
    assert action.slots[1].connection == outside.id


def test_paste_translates_bbox_to_target(doc):
    a = text_card(doc, "a", 50, 80)
    b = text_card(doc, "b", 150, 180)
    payload = doc.selection_payload([a.id, b.id])
    mapping = doc.paste(payload, Position(0, 0))
    pasted_a = doc.data_cards[mapping[a.id]]
    pasted_b = doc.data_cards[mapping[b.id]]
    assert (pasted_a.position.x, pasted_a.position.y) == (0, 0)
    assert (pasted_b.position.x, pasted_b.position.y) == (100, 100)


def test_paste_cluster_filters_absent_members(doc):
    a = text_card(doc, "a")
    b = text_card(doc, "b")
    cluster = doc.form_cluster([a.id, b.id], Position(0, 0))
    payload = doc.selection_payload([cluster.id])
    # drop one member from the payload to simulate a partial clip
    payload["data_cards"] = [d for d in payload["data_cards"] if d["id"] == a.id]
    mapping = doc.paste(payload, Position(10, 10))
    pasted = doc.clusters[mapping[cluster.id]]
    assert pasted.members == [mapping[a.id]]


def test_paste_rejects_malformed_payload(doc):
    with pytest.raises(MalformedClipboard):
        doc.paste({"data_cards": [{"bogus": True}]}, Position(0, 0))
    with pytest.raises(EmptySelection):
        doc.paste({"data_cards": []}, Position(0, 0))


def test_duplicate_offsets_and_maps(doc):
    a = text_card(doc, "a", 10, 10)
    mapping = doc.duplicate([a.id])
    copy = doc.data_cards[mapping[a.id]]
    assert (copy.position.x, copy.position.y) == (34, 34)
    assert copy.content == "a"
    assert doc.last_mutation.op == "duplicate"


# -- serialization ---------------------------------------------------------------


def test_round_trip_simple(doc):
    text_card(doc, "hello")
    action = doc.create_action(Position(5, 5), Modality.audio, labels=["x"])
    doc.add_slot(action.id, "y")
    again = Document.from_dict(doc.to_dict())
    assert again.to_dict() == doc.to_dict()


# -- property-based round-trips ---------------------------------------------------

_TEXT = st.text(max_size=40)
_COORD = st.integers(min_value=-2000, max_value=2000)


@st.composite
def documents(draw) -> Document:
    doc = make_doc()
    n_cards = draw(st.integers(min_value=1, max_value=6))
    kinds = draw(st.lists(st.sampled_from(list(Modality)), min_size=n_cards, max_size=n_cards))
    cards = []
    for kind in kinds:
        pos = Position(draw(_COORD), draw(_COORD))
        if kind == Modality.text:
            card = doc.create_card(kind, pos, content=draw(_TEXT))
        else:
            seed = draw(st.sampled_from("0123456789abcdef"))
            mt = "image/png" if kind == Modality.image else "audio/wav"
            card = doc.create_card(kind, pos, content=AssetRef(seed * 64, mt, 16))
        cards.append(card)
    if draw(st.booleans()):
        action = doc.create_action(
            Position(draw(_COORD), draw(_COORD)),
            draw(st.sampled_from(list(Modality))),
            labels=draw(st.lists(_TEXT, max_size=3)),
        )
        for slot in action.slots:
            if draw(st.booleans()):
                doc.connect(action.id, slot.slot_id, draw(st.sampled_from(cards)).id)
    free = [c for c in cards if doc.cluster_of(c.id) is None]
    if len(free) >= 2 and draw(st.booleans()):
        doc.form_cluster(
            [c.id for c in free[:2]], Position(0, 0), label=draw(st.none() | _TEXT)
        )
    return doc


@given(documents())
@settings(max_examples=60, deadline=None)
def test_document_round_trip_property(doc):
    payload = doc.to_dict()
    assert Document.from_dict(payload).to_dict() == payload


@given(documents(), st.integers(min_value=-500, max_value=500), st.integers(min_value=-500, max_value=500))
@settings(max_examples=40, deadline=None)
def test_paste_preserves_relative_geometry(doc, px, py):
    ids = list(doc.data_cards)
    payload = doc.selection_payload(ids)
    originals = {i: doc.data_cards[i].position for i in ids}
    mapping = doc.paste(payload, Position(px, py))
    min_x = min(p.x for p in originals.values())
    min_y = min(p.y for p in originals.values())
    for old_id, new_id in mapping.items():
        if old_id not in originals:
            continue
        old = originals[old_id]
        new = doc.data_cards[new_id].position
        assert new.x - px == old.x - min_x
        assert new.y - py == old.y - min_y
