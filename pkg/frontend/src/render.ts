/**
 * DOM renderer. Rebuilds the scene from the replica on every change; the
 * replica is small (a canvas, not a spreadsheet) and a full rebuild keeps
 * rendering a pure function of (model, view), which is what the conformance
 * tests rely on: same state in, same DOM out.
 */

import type { DocModel } from "./docmodel.js";
import type {
  ActionCardDict,
  AssetRefDict,
  ClusterDict,
  DataCardDict,
  GenStateName,
  Position,
} from "./protocol.js";
import { textCardSize, type ViewState } from "./view.js";

// action card layout, shared with the controller's port hit-testing
export const ACTION_WIDTH = 240;
export const ACTION_HEADER_H = 40;
export const SLOT_ROW_H = 28;

export const STATE_CLASS: Record<GenStateName, string> = {
  waiting: "df-shake-slow",
  loading: "df-shake-fast",
  success: "df-jump",
  error: "df-jump",
};

/** Screen position of a slot's input port (left edge, row center). */
export function slotPortPosition(
  action: ActionCardDict,
  slotIndex: number,
  view: ViewState,
): Position {
  return view.worldToScreen({
    x: action.position.x,
    y: action.position.y + ACTION_HEADER_H + slotIndex * SLOT_ROW_H + SLOT_ROW_H / 2,
  });
}

function isAssetRef(content: DataCardDict["content"]): content is AssetRefDict {
  return typeof content === "object" && content !== null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  node.className = className;
  return node;
}

function place(node: HTMLElement, x: number, y: number, w?: number, h?: number): void {
  node.style.position = "absolute";
  node.style.left = `${x}px`;
  node.style.top = `${y}px`;
  if (w !== undefined) node.style.width = `${w}px`;
  if (h !== undefined) node.style.height = `${h}px`;
}

function renderDataCard(
  doc: Document,
  card: DataCardDict,
  view: ViewState,
  assetBase: string,
): HTMLElement {
  const state = card.gen_state.state;
  const node = el(
    doc,
    "div",
    `df-card df-data df-${card.kind} df-state-${state} ${STATE_CLASS[state]}`,
  );
  node.dataset.id = card.id;
  let { width, height } = card.size;
  if (card.kind === "text" && typeof card.content === "string") {
    ({ width, height } = textCardSize(card.content)); // dynamic, view-side only
  }
  place(node, card.position.x, card.position.y, width, height);
  if (view.selection.has(card.id)) node.classList.add("df-selected");

  if (card.kind === "text") {
    const body = el(doc, "div", "df-text");
    body.textContent = typeof card.content === "string" ? card.content : "";
    node.appendChild(body);
  } else if (card.kind === "image" && isAssetRef(card.content)) {
    const img = el(doc, "img", "df-thumb");
    img.setAttribute("src", `${assetBase}/assets/${card.content.asset_id}`);
    node.appendChild(img);
  } else if (card.kind === "audio") {
    const play = el(doc, "button", "df-play");
    play.textContent = "▶";
    if (isAssetRef(card.content)) {
      play.dataset.src = `${assetBase}/assets/${card.content.asset_id}`;
    }
    node.appendChild(play);
    node.appendChild(el(doc, "div", "df-waveform"));
  }

  if (card.gen_state.bubble) {
    const bubble = el(doc, "div", "df-bubble");
    bubble.textContent = card.gen_state.bubble;
    node.appendChild(bubble);
  }
  if (card.truncated) {
    const badge = el(doc, "span", "df-truncated");
    badge.textContent = "truncated";
    node.appendChild(badge);
  }
  return node;
}

function renderActionCard(
  doc: Document,
  action: ActionCardDict,
  view: ViewState,
): HTMLElement {
  const node = el(doc, "div", "df-card df-action");
  node.dataset.id = action.id;
  place(
    node,
    action.position.x,
    action.position.y,
    ACTION_WIDTH,
    ACTION_HEADER_H + action.slots.length * SLOT_ROW_H + 8,
  );
  if (view.selection.has(action.id)) node.classList.add("df-selected");

  const header = el(doc, "div", "df-action-header");
  header.textContent = `→ ${action.target_modality}`;
  const trigger = el(doc, "button", "df-trigger");
  trigger.textContent = "trigger";
  header.appendChild(trigger);
  node.appendChild(header);

  const hover = view.drag?.type === "socket-drag" ? view.drag.hover : null;
  for (const slot of action.slots) {
    const row = el(doc, "div", "df-slot");
    row.dataset.slotId = slot.slot_id;
    if (slot.connection !== null) row.classList.add("df-connected");
    if (hover && hover.actionId === action.id && hover.slotId === slot.slot_id) {
      row.classList.add("df-snap-target");
    }
    row.appendChild(el(doc, "span", "df-port"));
    const label = el(doc, "span", "df-slot-label");
    label.textContent = slot.label;
    row.appendChild(label);
    node.appendChild(row);
  }
  return node;
}

function renderCluster(doc: Document, cluster: ClusterDict, view: ViewState): HTMLElement {
  const node = el(doc, "div", "df-cluster");
  node.dataset.id = cluster.id;
  place(node, cluster.position.x, cluster.position.y);
  if (view.selection.has(cluster.id)) node.classList.add("df-selected");
  const label = el(doc, "div", "df-cluster-label");
  label.textContent = cluster.label ?? `${cluster.members.length} cards`;
  node.appendChild(label);
  return node;
}

function renderWires(doc: Document, model: DocModel, view: ViewState): SVGElement {
  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("class", "df-wires");
  for (const action of model.actionCards.values()) {
    action.slots.forEach((slot, index) => {
      if (slot.connection === null) return;
      const source = model.entity(slot.connection);
      if (source === undefined || !("position" in source)) return;
      const line = doc.createElementNS("http://www.w3.org/2000/svg", "line");
      line.setAttribute("class", "df-wire");
      line.setAttribute("data-slot-id", slot.slot_id);
      line.setAttribute("x1", String(source.position.x));
      line.setAttribute("y1", String(source.position.y));
      line.setAttribute("x2", String(action.position.x));
      line.setAttribute(
        "y2",
        String(action.position.y + ACTION_HEADER_H + index * SLOT_ROW_H + SLOT_ROW_H / 2),
      );
      svg.appendChild(line);
    });
  }
  return svg;
}

export interface InfoViewHooks {
  /** called with the influencer id when a live reference is clicked */
  onInfluencerClick?: (id: string) => void;
}

export function renderInfoView(
  doc: Document,
  model: DocModel,
  cardId: string,
  hooks: InfoViewHooks = {},
): HTMLElement {
  const panel = el(doc, "div", "df-info");
  const card = model.dataCards.get(cardId);
  if (card === undefined) return panel;
  const state = el(doc, "div", "df-info-state");
  state.textContent = `${card.kind} · ${card.gen_state.state}`;
  panel.appendChild(state);
  if (card.provenance === null) return panel;

  const method = el(doc, "div", "df-info-method");
  method.textContent = card.provenance.method;
  panel.appendChild(method);
  const prompt = el(doc, "div", "df-info-prompt");
  prompt.textContent = card.provenance.prompt;
  panel.appendChild(prompt);

  const refs = el(doc, "div", "df-info-influencers");
  for (const ref of card.provenance.influencers) {
    const button = el(doc, "button", "df-influencer");
    button.dataset.ref = ref;
    button.textContent = ref.slice(0, 8);
    if (!model.isLive(ref)) {
      // deleted influencers stay listed: provenance is history, not a link
      button.classList.add("df-ghost");
      button.disabled = true;
    } else if (hooks.onInfluencerClick) {
      const target = ref;
      button.addEventListener("click", () => hooks.onInfluencerClick!(target));
    }
    refs.appendChild(button);
  }
  panel.appendChild(refs);
  return panel;
}

export interface RenderOptions {
  assetBase?: string;
  infoHooks?: InfoViewHooks;
}

export function render(
  root: HTMLElement,
  model: DocModel,
  view: ViewState,
  options: RenderOptions = {},
): void {
  const doc = root.ownerDocument;
  const assetBase = options.assetBase ?? "";
  root.textContent = "";
  root.classList.add("df-root");

  // the Hand: always visible, even over an empty document
  const hand = el(doc, "div", "df-hand");
  for (const kind of ["text", "image", "audio"] as const) {
    const proto = el(doc, "button", `df-hand-card df-hand-${kind}`);
    proto.dataset.kind = kind;
    proto.textContent = kind;
    hand.appendChild(proto);
  }
  const protoAction = el(doc, "button", "df-hand-card df-hand-action");
  protoAction.dataset.kind = "action";
  protoAction.textContent = "action";
  hand.appendChild(protoAction);
  root.appendChild(hand);

  const viewport = el(doc, "div", "df-viewport");
  const canvas = el(doc, "div", "df-canvas");
  canvas.style.transform =
    `translate(${view.panX * view.zoom}px, ${view.panY * view.zoom}px) ` +
    `scale(${view.zoom})`;
  canvas.appendChild(renderWires(doc, model, view));
  for (const cluster of model.clusters.values()) {
    canvas.appendChild(renderCluster(doc, cluster, view));
  }
  for (const card of model.dataCards.values()) {
    canvas.appendChild(renderDataCard(doc, card, view, assetBase));
  }
  for (const action of model.actionCards.values()) {
    canvas.appendChild(renderActionCard(doc, action, view));
  }
  viewport.appendChild(canvas);
  root.appendChild(viewport);

  if (view.infoCardId !== null) {
    root.appendChild(renderInfoView(doc, model, view.infoCardId, options.infoHooks));
  }
}
