import pytest

from conftest import fake_ref, text_card

from deckflow import composition
from deckflow.adapters import AdapterSet
from deckflow.adapters.mock import EXPAND_SUFFIX, FixtureTable
from deckflow.composition import (
    PromptBundle,
    PromptVariant,
    SlotBinding,
    combine_concat,
    combine_creative,
    compose_bundle,
    decompose_goal,
    interpret_cluster,
    interpret_input,
    materialize_cluster_text,
    materialize_decomposition,
    parse_decomposition,
    trigger_action,
)
from deckflow.errors import (
    DecompositionParseError,
    EmptyCluster,
    EmptyGoal,
    InterpretationFailed,
    NoInputs,
    SourceNotReady,
)
from deckflow.lifecycle import spawn_pending
from deckflow.model import GenStateName, Modality, Position, Provenance


def bare_adapters() -> AdapterSet:
    return AdapterSet.mocks(FixtureTable())  # no scripted fixtures


def binding(label, text, origin="o1"):
    return SlotBinding(label=label, source_kind="text", resolved_text=text, origin_id=origin)


# -- interpretation ----------------------------------------------------------------


def test_text_card_interprets_verbatim(doc, templates):
    card = text_card(doc, "  exactly this  ")
    assert interpret_input(doc, card.id, "lbl", bare_adapters(), templates) == "  exactly this  "


def test_pending_card_is_not_ready(doc, templates):
    with doc.mutate("trigger_action"):
        card = spawn_pending(doc, Modality.image, Position(0, 0), Provenance((), "concat", "p"))
    with pytest.raises(SourceNotReady):
        interpret_input(doc, card.id, "", bare_adapters(), templates)


def test_image_goes_through_vision_adapter(doc, templates):
    ref = fake_ref("9")
    card = doc.create_card(Modality.image, Position(0, 0), content=ref)
    adapters = bare_adapters()
    out = interpret_input(doc, card.id, "sky", adapters, templates)
    assert out == f"image {'9' * 8} described for 'sky'"
    assert adapters.vision.calls == 1


def test_image_without_asset_falls_back_to_provenance_then_annotation(doc, templates):
    with doc.mutate("trigger_action"):
        card = spawn_pending(
            doc, Modality.image, Position(0, 0), Provenance((), "concat", "its prompt")
        )
    card.gen_state.state = GenStateName.success  # content never assigned (legacy doc)
    assert interpret_input(doc, card.id, "", bare_adapters(), templates) == "its prompt"


def test_audio_uses_provenance_prompt_not_a_model(doc, templates):
    with doc.mutate("create_card"):
        card = spawn_pending(
            doc, Modality.audio, Position(0, 0), Provenance((), "concat", "drum loop")
        )
    card.gen_state.state = GenStateName.success
    card.content = fake_ref("a", "audio/wav")
    adapters = bare_adapters()
    assert interpret_input(doc, card.id, "", adapters, templates) == "drum loop"
    assert adapters.vision.calls == 0


def test_audio_fallback_chain_annotation_then_filename(doc, templates):
    card = doc.create_card(
        Modality.audio, Position(0, 0), content=fake_ref("b", "audio/wav"),
        annotation="a note", filename="loop.wav",
    )
    assert interpret_input(doc, card.id, "", bare_adapters(), templates) == "a note"
    object.__setattr__(card, "annotation", None)
    assert interpret_input(doc, card.id, "", bare_adapters(), templates) == "loop.wav"
    object.__setattr__(card, "filename", None)
    with pytest.raises(InterpretationFailed):
        interpret_input(doc, card.id, "", bare_adapters(), templates)


# -- combination --------------------------------------------------------------------


def test_concat_joins_label_colon_value():
    out = combine_concat([binding("Style", "inky"), binding("", "bare"), binding("X", "  ")])
    assert out == "Style: inky, bare"


def test_concat_with_nothing_usable_raises():
    with pytest.raises(NoInputs):
        combine_concat([binding("a", "   ")])
    with pytest.raises(NoInputs):
        combine_concat([])


def test_creative_expands_the_concat_prompt():
    assert combine_creative("base", bare_adapters()) == "base" + EXPAND_SUFFIX
    with pytest.raises(NoInputs):
        combine_creative("  ", bare_adapters())


def test_bundle_order_is_enforced():
    with pytest.raises(ValueError):
        PromptBundle(
            prompts=[
                PromptVariant("coherent", "a"),
                PromptVariant("concat", "b"),
                PromptVariant("creative", "c"),
            ]
        )


def test_compose_bundle_round(doc, templates):
    a = text_card(doc, "misty hills")
    action = doc.create_action(Position(0, 0), Modality.image, labels=["Scene"])
    doc.connect(action.id, action.slots[0].slot_id, a.id)
    bundle = compose_bundle(doc, action.id, bare_adapters(), templates)
    assert [v.method for v in bundle.prompts] == ["concat", "coherent", "creative"]
    assert bundle.prompts[0].prompt == "Scene: misty hills"
    assert bundle.prompts[1].prompt == "Combined: Scene: misty hills"
    assert bundle.prompts[2].prompt == "Scene: misty hills" + EXPAND_SUFFIX


def test_unconnected_action_has_no_inputs(doc, templates):
    action = doc.create_action(Position(0, 0), Modality.image, labels=["a", "b"])
    with pytest.raises(NoInputs):
        compose_bundle(doc, action.id, bare_adapters(), templates)


# -- goal decomposition ---------------------------------------------------------------


def test_parse_decomposition_strict_format():
    parsed = parse_decomposition("A :: 1\n\nB :: NONE\nC :: x :: y")
    assert [(e.label, e.value) for e in parsed.entries] == [
        ("A", "1"),
        ("B", None),
        ("C", "x :: y"),
    ]


@pytest.mark.parametrize(
    "bad",
    ["no separator here", "A :: 1\nB : 2", " :: value", "A ::  ", "A :: 1\nA :: 2", "   "],
)
def test_parse_decomposition_rejects(bad):
    with pytest.raises(DecompositionParseError) as exc_info:
        parse_decomposition(bad)
    assert exc_info.value.raw == bad  # raw text travels with the error


def test_decompose_goal_empty(templates):
    with pytest.raises(EmptyGoal):
        decompose_goal("   ", bare_adapters(), templates)


def test_materialize_decomposition_wires_values_and_skips_none(doc, templates, adapters):
    goal = text_card(doc, "Chinese style landscape, with traditional pavilion, soft and diffuse light")
    decomposition = decompose_goal(goal.content, adapters, templates)
    rev_before = doc.rev
    action = materialize_decomposition(
        doc, decomposition, Position(600, 80), goal_card_id=goal.id, goal_text=goal.content
    )
    assert doc.rev == rev_before + 1  # a single committed mutation
    labels = [s.label for s in action.slots]
    assert labels == ["Style", "Subject", "Key Elements", "Lighting", "Natural Features"]
    filled = [s for s in action.slots if s.connection]
    assert len(filled) == 4
    assert action.slots[-1].connection is None
    value_card = doc.data_cards[action.slots[0].connection]
    assert value_card.content == "Chinese traditional"
    assert value_card.provenance.method == "goal-decompose"
    assert value_card.provenance.influencers == (goal.id,)
    assert value_card.provenance.prompt == goal.content
    # value cards sit in a column left of the action card
    xs = {doc.data_cards[s.connection].position.x for s in filled}
    assert xs == {600 - 240 - 24}


# -- clusters ---------------------------------------------------------------------------


def test_interpret_cluster_caches_and_reuses(doc, templates):
    a = text_card(doc, "first desc")
    b = text_card(doc, "second desc")
    cluster = doc.form_cluster([a.id, b.id], Position(0, 0), label="sun")
    adapters = bare_adapters()
    first = interpret_cluster(doc, cluster.id, adapters, templates)
    assert first.startswith("shared: ")
    calls_after_first = adapters.text.calls
    rev_after_first = doc.rev
    second = interpret_cluster(doc, cluster.id, adapters, templates)
    assert second == first
    assert adapters.text.calls == calls_after_first  # cache hit: no adapter call
    assert doc.rev == rev_after_first  # cache hit commits nothing


def test_cluster_reinterprets_after_member_edit(doc, templates):
    a = text_card(doc, "old text")
    cluster = doc.form_cluster([a.id], Position(0, 0))
    adapters = bare_adapters()
    first = interpret_cluster(doc, cluster.id, adapters, templates)
    doc.update_text(a.id, "completely different")
    second = interpret_cluster(doc, cluster.id, adapters, templates)
    assert first != second


def test_empty_cluster_rejected(doc, templates):
    a = text_card(doc, "a")
    cluster = doc.form_cluster([a.id], Position(0, 0))
    doc.delete([a.id])
    with pytest.raises(EmptyCluster):
        interpret_cluster(doc, cluster.id, bare_adapters(), templates)


def test_materialize_cluster_text_card(doc, templates):
    a = text_card(doc, "alpha")
    b = text_card(doc, "beta")
    cluster = doc.form_cluster([a.id, b.id], Position(100, 200), label="pair")
    card = materialize_cluster_text(doc, cluster.id, bare_adapters(), templates)
    assert card.kind == Modality.text
    assert card.position.x == 100 + 240 + 24
    assert card.provenance.method == "cluster-interpret"
    assert card.provenance.influencers == (a.id, b.id)
    assert "alpha" in card.provenance.prompt and "pair" in card.provenance.prompt
    assert cluster.cached_interpretation == card.content


def test_cluster_as_action_input(doc, templates):
    a = text_card(doc, "a desc")
    cluster = doc.form_cluster([a.id], Position(0, 0), label="sun")
    action = doc.create_action(Position(0, 0), Modality.image, labels=["Sun"])
    doc.connect(action.id, action.slots[0].slot_id, cluster.id)
    bundle = compose_bundle(doc, action.id, bare_adapters(), templates)
    assert bundle.prompts[0].prompt.startswith("Sun: shared: ")


# -- trigger fanout --------------------------------------------------------------------


def wired_action(doc, target=Modality.image, texts=("inky", "hills")):
    cards = [text_card(doc, t, x=-400, y=i * 160) for i, t in enumerate(texts)]
    action = doc.create_action(
        Position(0, 0), target, labels=[f"L{i}" for i in range(len(texts))]
    )
    for slot, card in zip(action.slots, cards):
        doc.connect(action.id, slot.slot_id, card.id)
    return action, cards


def test_trigger_image_fanout_counts_and_single_rev(doc, templates):
    action, _ = wired_action(doc)
    rev = doc.rev
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    assert doc.rev == rev + 1
    assert len(result.prompt_card_ids) == 3
    assert len(result.output_card_ids) == 9
    assert len(result.job_specs) == 9
    assert action.trigger_count == 1
    for spec in result.job_specs:
        assert spec["capability"] == "image_gen"
        out = doc.data_cards[spec["target_card"]]
        assert out.gen_state.state == GenStateName.waiting
        assert out.provenance.job_id == spec["job_id"]


def test_trigger_text_target_prompts_are_the_outputs(doc, templates):
    action, _ = wired_action(doc, target=Modality.text)
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    assert len(result.prompt_card_ids) == 3
    assert result.output_card_ids == []
    assert result.job_specs == []
    for card_id in result.prompt_card_ids:
        assert doc.data_cards[card_id].gen_state.state == GenStateName.success


def test_trigger_audio_uses_audio_capability(doc, templates):
    action, _ = wired_action(doc, target=Modality.audio)
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    assert {s["capability"] for s in result.job_specs} == {"audio_gen"}


def test_trigger_rows_carry_method_and_prompt(doc, templates):
    action, _ = wired_action(doc)
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    by_row: dict[int, list[dict]] = {}
    for spec in result.job_specs:
        by_row.setdefault(spec["row"], []).append(spec)
    assert sorted(by_row) == [0, 1, 2]
    for i, variant in enumerate(result.bundle.prompts):
        specs = by_row[i]
        assert len(specs) == 3
        assert {s["prompt"] for s in specs} == {variant.prompt}
        assert [s["sample_index"] for s in sorted(specs, key=lambda s: s["seed"])] == [0, 1, 2]
        prompt_card = doc.data_cards[result.prompt_card_ids[i]]
        assert prompt_card.content == variant.prompt
        assert prompt_card.provenance.method == variant.method


def test_trigger_provenance_snapshots_inputs(doc, templates):
    action, cards = wired_action(doc)
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    expected = tuple(c.id for c in cards)
    for card_id in result.prompt_card_ids + result.output_card_ids:
        assert doc.data_cards[card_id].provenance.influencers == expected
    # mutating an input afterwards must not affect recorded prompts
    doc.update_text(cards[0].id, "changed")
    for card_id in result.prompt_card_ids:
        assert "changed" not in doc.data_cards[card_id].provenance.prompt


def test_trigger_dedupes_influencers(doc, templates):
    card = text_card(doc, "same source")
    action = doc.create_action(Position(0, 0), Modality.image, labels=["a", "b"])
    for slot in action.slots:
        doc.connect(action.id, slot.slot_id, card.id)
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    first = doc.data_cards[result.prompt_card_ids[0]]
    assert first.provenance.influencers == (card.id,)


def test_second_trigger_lands_below_first(doc, templates):
    action, _ = wired_action(doc)
    first = trigger_action(doc, action.id, bare_adapters(), templates)
    second = trigger_action(doc, action.id, bare_adapters(), templates)
    assert action.trigger_count == 2
    first_max_y = max(doc.data_cards[i].position.y for i in first.output_card_ids)
    second_min_y = min(doc.data_cards[i].position.y for i in second.output_card_ids)
    assert second_min_y > first_max_y
    # no overlap in ids either
    assert not set(first.output_card_ids) & set(second.output_card_ids)


def test_trigger_grid_geometry(doc, templates):
    action, _ = wired_action(doc)
    result = trigger_action(doc, action.id, bare_adapters(), templates)
    prompts = [doc.data_cards[i] for i in result.prompt_card_ids]
    assert {p.position.x for p in prompts} == {0 + 240 + 24}
    row0 = [doc.data_cards[i] for i in result.output_card_ids[:3]]
    assert [c.position.x for c in row0] == [264 + 240 + 24 + j * 264 for j in range(3)]
    assert {c.position.y for c in row0} == {prompts[0].position.y}


def test_trigger_failure_commits_nothing(doc, templates):
    card = text_card(doc, "src")
    action = doc.create_action(Position(0, 0), Modality.image, labels=["in"])
    doc.connect(action.id, action.slots[0].slot_id, card.id)
    doc.update_text(card.id, "")  # resolves to empty -> NoInputs during compose
    rev = doc.rev
    count = len(doc.data_cards)
    with pytest.raises(NoInputs):
        trigger_action(doc, action.id, bare_adapters(), templates)
    assert doc.rev == rev
    assert len(doc.data_cards) == count
    assert action.trigger_count == 0


def test_truncation_flag_propagates_to_prompt_card(doc, templates):
    long_text = " ".join(f"word{i}" for i in range(40))
    card = text_card(doc, long_text)
    action = doc.create_action(Position(0, 0), Modality.image, labels=[""])
    doc.connect(action.id, action.slots[0].slot_id, card.id)
    result = trigger_action(doc, action.id, bare_adapters(), templates, max_tokens=8)
    coherent_card = doc.data_cards[result.prompt_card_ids[1]]
    assert coherent_card.truncated is True
    assert len(coherent_card.content.split()) == 8
    concat_card = doc.data_cards[result.prompt_card_ids[0]]
    assert concat_card.truncated is False  # concat is never model-generated
