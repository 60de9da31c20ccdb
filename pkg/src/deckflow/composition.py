"""The interpretation engine.

Resolves whatever is connected to an action card into text, combines the
texts into three prompt variants, and fans a trigger out into prompt cards,
pending output cards, and generation jobs. Everything that can fail (adapter
calls, readiness checks) happens before the document mutation opens, so a
trigger either commits completely or not at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import templates as tpl
from .adapters import CAP_AUDIO, CAP_IMAGE, AdapterSet
from .adapters.mock import TEMPLATE_COHERENT, TEMPLATE_DECOMPOSE, TEMPLATE_SHARED
from .document import Document
from .errors import (
    AdapterFailure,
    DecompositionParseError,
    DeckFlowError,
    EmptyCluster,
    EmptyGoal,
    InterpretationFailed,
    NoInputs,
    SourceNotReady,
)
from .lifecycle import spawn_pending
from .model import (
    ActionCard,
    AssetRef,
    Cluster,
    DataCard,
    GenStateName,
    Modality,
    Position,
    Provenance,
    default_size,
)

METHOD_CONCAT = "concat"
METHOD_COHERENT = "coherent"
METHOD_CREATIVE = "creative"
METHOD_DECOMPOSE = "goal-decompose"
METHOD_CLUSTER = "cluster-interpret"

DEFAULT_MAX_TOKENS = 256
SAMPLES_PER_PROMPT = 3

ACTION_CARD_WIDTH = 240.0
COLUMN_GAP = 24.0
ROW_GAP = 24.0


@dataclass
class SlotBinding:
    label: str
    source_kind: str  # text | image | audio | cluster
    resolved_text: str
    origin_id: str


@dataclass
class PromptVariant:
    method: str
    prompt: str
    truncated: bool = False


@dataclass
class PromptBundle:
    prompts: list[PromptVariant]

    def __post_init__(self):
        methods = [p.method for p in self.prompts]
        if methods != [METHOD_CONCAT, METHOD_COHERENT, METHOD_CREATIVE]:
            raise ValueError(f"bundle methods out of order: {methods}")


@dataclass
class DecompositionEntry:
    label: str
    value: Optional[str]


@dataclass
class GoalDecomposition:
    entries: list[DecompositionEntry]


@dataclass
class ClusterReading:
    text: str
    prompt: str  # the rendered shared-features request
    from_cache: bool


@dataclass
class TriggerResult:
    prompt_card_ids: list[str]
    output_card_ids: list[str]
    job_specs: list[dict] = field(default_factory=list)
    bundle: Optional[PromptBundle] = None


# -- input interpretation -----------------------------------------------------


def interpret_input(
    doc: Document,
    source_id: str,
    label: str,
    adapters: AdapterSet,
    templates: Optional[tpl.TemplateStore] = None,
) -> str:
    cluster = doc.clusters.get(source_id)
    if cluster is not None:
        return read_cluster(doc, cluster, adapters, templates or tpl.TemplateStore()).text
    card = doc.require_data(source_id)
    if card.gen_state.state != GenStateName.success:
        raise SourceNotReady(
            f"card {source_id!r} is {card.gen_state.state.value}, not success"
        )
    if card.kind == Modality.text:
        return card.content or ""
    if card.kind == Modality.image:
        return _interpret_image(card, label, adapters)
    return _interpret_audio(card)


def _interpret_image(card: DataCard, label: str, adapters: AdapterSet) -> str:
    if adapters.vision is not None and isinstance(card.content, AssetRef):
        try:
            return adapters.vision.describe(card.content.id, label)
        except DeckFlowError:
            raise
        except Exception as exc:
            raise InterpretationFailed(f"vision adapter failed: {exc}") from exc
    if card.provenance is not None and card.provenance.prompt:
        return card.provenance.prompt
    if card.annotation:
        return card.annotation
    raise InterpretationFailed(
        f"image card {card.id!r} has no vision adapter, provenance, or annotation"
    )


def _interpret_audio(card: DataCard) -> str:
    # audio is never sent to a model: its generating prompt stands in for it
    if card.provenance is not None and card.provenance.prompt:
        return card.provenance.prompt
    if card.annotation:
        return card.annotation
    if card.filename:
        return card.filename
    raise InterpretationFailed(
        f"audio card {card.id!r} has no provenance, annotation, or filename"
    )


# -- combination strategies ----------------------------------------------------


def combine_concat(bindings: list[SlotBinding]) -> str:
    parts = []
    for b in bindings:
        text = b.resolved_text.strip()
        if not text:
            continue
        parts.append(f"{b.label}: {text}" if b.label else text)
    if not parts:
        raise NoInputs("every connected input resolved to empty text")
    return ", ".join(parts)


def combine_coherent(
    bindings: list[SlotBinding],
    adapters: AdapterSet,
    templates: tpl.TemplateStore,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> tuple[str, bool, str]:
    """Returns (prompt text, truncated, the rewrite instruction used)."""
    concat = combine_concat(bindings)
    instruction = templates.render(tpl.COHERENT_REWRITE, concat=concat)
    try:
        text, truncated = adapters.text.run(
            TEMPLATE_COHERENT, {"concat": concat}, max_tokens, prompt=instruction
        )
    except DeckFlowError as exc:
        raise AdapterFailure(f"coherent: {exc.message}") from exc
    return text, truncated, instruction


def combine_creative(concat_prompt: str, adapters: AdapterSet) -> str:
    if not concat_prompt.strip():
        raise NoInputs("nothing to expand")
    try:
        return adapters.expand.expand(concat_prompt)
    except DeckFlowError as exc:
        raise AdapterFailure(f"creative: {exc.message}") from exc


def _collect_bindings(
    doc: Document,
    action: ActionCard,
    adapters: AdapterSet,
    templates: tpl.TemplateStore,
) -> list[SlotBinding]:
    bindings: list[SlotBinding] = []
    for slot in action.slots:
        if slot.connection is None:
            continue
        source_id = slot.connection
        if source_id in doc.clusters:
            kind = "cluster"
        else:
            kind = doc.require_data(source_id).kind.value
        resolved = interpret_input(doc, source_id, slot.label, adapters, templates)
        bindings.append(
            SlotBinding(
                label=slot.label, source_kind=kind, resolved_text=resolved, origin_id=source_id
            )
        )
    if not bindings:
        raise NoInputs(f"action {action.id!r} has no connected slots")
    return bindings


def compose_bundle(
    doc: Document,
    action_id: str,
    adapters: AdapterSet,
    templates: Optional[tpl.TemplateStore] = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> PromptBundle:
    templates = templates or tpl.TemplateStore()
    action = doc.require_action(action_id)
    bindings = _collect_bindings(doc, action, adapters, templates)
    bundle, _ = _compose_from_bindings(bindings, adapters, templates, max_tokens)
    return bundle


def _compose_from_bindings(
    bindings: list[SlotBinding],
    adapters: AdapterSet,
    templates: tpl.TemplateStore,
    max_tokens: int,
) -> tuple[PromptBundle, str]:
    concat = combine_concat(bindings)
    coherent, coherent_truncated, instruction = combine_coherent(
        bindings, adapters, templates, max_tokens
    )
    creative = combine_creative(concat, adapters)
    bundle = PromptBundle(
        prompts=[
            PromptVariant(METHOD_CONCAT, concat),
            PromptVariant(METHOD_COHERENT, coherent, coherent_truncated),
            PromptVariant(METHOD_CREATIVE, creative),
        ]
    )
    return bundle, instruction


# -- goal decomposition ----------------------------------------------------------


def decompose_goal(
    goal: str,
    adapters: AdapterSet,
    templates: Optional[tpl.TemplateStore] = None,
) -> GoalDecomposition:
    if not goal.strip():
        raise EmptyGoal("goal text is empty")
    templates = templates or tpl.TemplateStore()
    instruction = templates.render(tpl.GOAL_DECOMPOSE, goal=goal)
    text, _ = adapters.text.run(TEMPLATE_DECOMPOSE, {"goal": goal}, None, prompt=instruction)
    return parse_decomposition(text)


def parse_decomposition(text: str) -> GoalDecomposition:
    """Strict 'label :: value|NONE' line parser; no repair heuristics."""
    entries: list[DecompositionEntry] = []
    seen: set[str] = set()
    for line in text.splitlines():
        if not line.strip():
            continue
        if " :: " not in line:
            raise DecompositionParseError(f"unparseable line {line!r}", raw=text)
        label, _, value = line.partition(" :: ")
        label = label.strip()
        value = value.strip()
        if not label or not value:
            raise DecompositionParseError(f"empty label or value in {line!r}", raw=text)
        if label in seen:
            raise DecompositionParseError(f"duplicate label {label!r}", raw=text)
        seen.add(label)
        entries.append(DecompositionEntry(label, None if value == "NONE" else value))
    if not entries:
        raise DecompositionParseError("no attribute lines found", raw=text)
    return GoalDecomposition(entries)


def materialize_decomposition(
    doc: Document,
    decomposition: GoalDecomposition,
    position: Position,
    goal_card_id: Optional[str] = None,
    goal_text: str = "",
) -> ActionCard:
    """One committed mutation: the action card, its slots, and a column of
    text cards connected where the goal supplied a value."""
    text_size = default_size(Modality.text)
    influencers = (goal_card_id,) if goal_card_id else ()
    with doc.mutate("decompose"):
        action = ActionCard(
            id=doc.new_id(), position=position, target_modality=Modality.image
        )
        slots = []
        for entry in decomposition.entries:
            slots.append(doc._append_slot(action, entry.label))
        doc.add_action_card(action)
        for i, entry in enumerate(decomposition.entries):
            if entry.value is None:
                continue
            card = DataCard(
                id=doc.new_id(),
                kind=Modality.text,
                position=Position(
                    position.x - text_size.width - COLUMN_GAP,
                    position.y + i * (text_size.height + ROW_GAP),
                ),
                size=default_size(Modality.text),
                content=entry.value,
                provenance=Provenance(
                    influencers=influencers,
                    method=METHOD_DECOMPOSE,
                    prompt=goal_text,
                ),
            )
            doc.add_data_card(card)
            slots[i].connection = card.id
    return action


# -- clusters ------------------------------------------------------------------


def read_cluster(
    doc: Document,
    cluster: Cluster,
    adapters: AdapterSet,
    templates: tpl.TemplateStore,
) -> ClusterReading:
    """Compute (or reuse) a cluster's shared-features text without mutating."""
    if not cluster.members:
        raise EmptyCluster(f"cluster {cluster.id!r} has no members")
    if cluster.cached_interpretation is not None:
        return ClusterReading(
            text=cluster.cached_interpretation,
            prompt=getattr(cluster, "_last_prompt", None) or "",
            from_cache=True,
        )
    label = cluster.label or ""
    descriptions = [
        interpret_input(doc, member_id, label, adapters, templates)
        for member_id in cluster.members
    ]
    items = "\n".join(f"{i + 1}. {d}" for i, d in enumerate(descriptions))
    focus = f", focusing on {label}" if label else ""
    instruction = templates.render(tpl.SHARED_FEATURES, focus=focus, items=items)
    text, _ = adapters.text.run(
        TEMPLATE_SHARED, {"label": label, "items": items}, None, prompt=instruction
    )
    return ClusterReading(text=text, prompt=instruction, from_cache=False)


def _store_cluster_cache(doc: Document, cluster: Cluster, reading: ClusterReading) -> None:
    """Cache inside an open mutation; the memoized prompt backs provenance."""
    if not reading.from_cache:
        cluster.cached_interpretation = reading.text
        cluster._last_prompt = reading.prompt  # type: ignore[attr-defined]
        doc._require_mutation().touch_cluster(cluster.id)


def interpret_cluster(
    doc: Document,
    cluster_id: str,
    adapters: AdapterSet,
    templates: Optional[tpl.TemplateStore] = None,
) -> str:
    """Interpret and cache as one committed mutation (cache hits commit nothing)."""
    templates = templates or tpl.TemplateStore()
    cluster = doc.require_cluster(cluster_id)
    reading = read_cluster(doc, cluster, adapters, templates)
    if not reading.from_cache:
        with doc.mutate("interpret_cluster"):
            _store_cluster_cache(doc, cluster, reading)
    return reading.text


def materialize_cluster_text(
    doc: Document,
    cluster_id: str,
    adapters: AdapterSet,
    templates: Optional[tpl.TemplateStore] = None,
) -> DataCard:
    templates = templates or tpl.TemplateStore()
    cluster = doc.require_cluster(cluster_id)
    reading = read_cluster(doc, cluster, adapters, templates)
    text_size = default_size(Modality.text)
    with doc.mutate("interpret_cluster"):
        _store_cluster_cache(doc, cluster, reading)
        card = DataCard(
            id=doc.new_id(),
            kind=Modality.text,
            position=Position(
                cluster.position.x + ACTION_CARD_WIDTH + COLUMN_GAP, cluster.position.y
            ),
            size=text_size,
            content=reading.text,
            provenance=Provenance(
                influencers=tuple(cluster.members),
                method=METHOD_CLUSTER,
                prompt=reading.prompt,
            ),
        )
        doc.add_data_card(card)
    return card


# -- triggering -----------------------------------------------------------------


def trigger_action(
    doc: Document,
    action_id: str,
    adapters: AdapterSet,
    templates: Optional[tpl.TemplateStore] = None,
    max_tokens: int = DEFAULT_MAX_TOKENS,
) -> TriggerResult:
    """Compose prompts, spawn the fanout, and describe the jobs to enqueue.

    Non-text targets get 3 prompt cards plus a 3x3 grid of pending outputs
    (rows by prompt, columns by sample); text targets get the 3 prompt cards
    as the outputs and no jobs. The caller hands job_specs to the hub after
    this commits.
    """
    templates = templates or tpl.TemplateStore()
    action = doc.require_action(action_id)
    bindings = _collect_bindings(doc, action, adapters, templates)
    bundle, _ = _compose_from_bindings(bindings, adapters, templates, max_tokens)

    # cluster readings were computed above; persist any fresh ones with the trigger
    pending_cache: list[tuple[Cluster, ClusterReading]] = []
    for b in bindings:
        if b.source_kind == "cluster":
            cluster = doc.require_cluster(b.origin_id)
            if cluster.cached_interpretation is None:
                pending_cache.append(
                    (cluster, ClusterReading(b.resolved_text, "", from_cache=False))
                )

    influencers = tuple(dict.fromkeys(b.origin_id for b in bindings))
    target = action.target_modality
    text_size = default_size(Modality.text)
    out_size = default_size(target)
    row_h = max(text_size.height, out_size.height) + ROW_GAP
    grid_h = SAMPLES_PER_PROMPT * row_h
    base_x = action.position.x + ACTION_CARD_WIDTH + COLUMN_GAP
    base_y = action.position.y + action.trigger_count * grid_h

    result = TriggerResult(prompt_card_ids=[], output_card_ids=[], bundle=bundle)
    with doc.mutate("trigger_action") as mut:
        for cluster, reading in pending_cache:
            _store_cluster_cache(doc, cluster, reading)
        for i, variant in enumerate(bundle.prompts):
            prompt_card = DataCard(
                id=doc.new_id(),
                kind=Modality.text,
                position=Position(base_x, base_y + i * row_h),
                size=default_size(Modality.text),
                content=variant.prompt,
                truncated=variant.truncated,
                provenance=Provenance(
                    influencers=influencers, method=variant.method, prompt=variant.prompt
                ),
            )
            doc.add_data_card(prompt_card)
            result.prompt_card_ids.append(prompt_card.id)
            if target == Modality.text:
                continue
            for j in range(SAMPLES_PER_PROMPT):
                job_id = doc.new_id()
                out = spawn_pending(
                    doc,
                    target,
                    Position(
                        base_x + text_size.width + COLUMN_GAP + j * (out_size.width + COLUMN_GAP),
                        base_y + i * row_h,
                    ),
                    Provenance(
                        influencers=influencers,
                        method=variant.method,
                        prompt=variant.prompt,
                        job_id=job_id,
                    ),
                )
                result.output_card_ids.append(out.id)
                result.job_specs.append(
                    {
                        "job_id": job_id,
                        "capability": CAP_IMAGE if target == Modality.image else CAP_AUDIO,
                        "prompt": variant.prompt,
                        "seed": j,
                        "sample_index": j,
                        "row": i,
                        "target_card": out.id,
                    }
                )
        action.trigger_count += 1
        mut.touch_action(action.id)
    return result
