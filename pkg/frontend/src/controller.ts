/**
 * Turns pointer and palette intents into protocol requests.
 *
 * The controller owns no document state. Disabled-looking outcomes (cluster
 * with an action selected, decomposing an empty card, releasing a socket drag
 * in the void) resolve locally and send nothing; everything else round-trips
 * through the server and lands on the canvas only via the committed event.
 */

import type { DocModel } from "./docmodel.js";
import type { AckFrame } from "./protocol.js";
import type { ClientKind, ModalityName, Position } from "./protocol.js";
import { slotPortPosition } from "./render.js";
import { SNAP_RADIUS_PX, type ViewState } from "./view.js";

export type RequestFn = (
  kind: ClientKind,
  body: Record<string, unknown>,
) => Promise<AckFrame>;

export type FetchLike = (
  url: string,
  init: { method: string; body: unknown; headers: Record<string, string> },
) => Promise<unknown>;

export interface ActionResult {
  sent: boolean;
  /** inline UI error when nothing was sent */
  error?: string;
  request?: Promise<AckFrame>;
}

const notSent = (error: string): ActionResult => ({ sent: false, error });

export class CanvasController {
  private readonly model: DocModel;
  private readonly view: ViewState;
  private readonly request: RequestFn;
  private readonly httpBase: string;
  private readonly fetchFn: FetchLike | null;

  constructor(
    model: DocModel,
    view: ViewState,
    request: RequestFn,
    options: { httpBase?: string; fetchFn?: FetchLike } = {},
  ) {
    this.model = model;
    this.view = view;
    this.request = request;
    this.httpBase = options.httpBase ?? "";
    this.fetchFn = options.fetchFn ?? null;
  }

  // -- Hand ------------------------------------------------------------------

  /** Drop a proto-card dragged from the Hand. */
  handDrop(kind: ModalityName | "action", screenPos: Position): ActionResult {
    const position = this.view.screenToWorld(screenPos);
    const body =
      kind === "action"
        ? { card_type: "action", position, target_modality: "image" }
        : { kind, position };
    return { sent: true, request: this.request("create_card", body) };
  }

  /** A file dropped onto the canvas goes up the HTTP side channel. */
  ingestFile(
    filename: string,
    bytes: ArrayBuffer | Uint8Array,
    contentType: string,
    screenPos: Position,
  ): Promise<unknown> {
    if (this.fetchFn === null) {
      return Promise.reject(new Error("no fetch implementation configured"));
    }
    const { x, y } = this.view.screenToWorld(screenPos);
    const url =
      `${this.httpBase}/docs/${this.model.docId}/ingest` +
      `?filename=${encodeURIComponent(filename)}&x=${x}&y=${y}`;
    return this.fetchFn(url, {
      method: "POST",
      body: bytes,
      headers: { "content-type": contentType },
    });
  }

  // -- socket drags -------------------------------------------------------------

  beginSocketDrag(sourceId: string): void {
    if (!this.model.isLive(sourceId)) return;
    this.view.drag = {
      type: "socket-drag",
      sourceId,
      pointer: { x: 0, y: 0 },
      hover: null,
    };
  }

  /**
   * Track the pointer during a socket drag; highlights the nearest eligible
   * slot within the snap radius (24 screen px). Returns the hover target.
   */
  dragPointer(screenPos: Position): { actionId: string; slotId: string } | null {
    const drag = this.view.drag;
    if (drag === null || drag.type !== "socket-drag") return null;
    drag.pointer = screenPos;
    let best: { actionId: string; slotId: string } | null = null;
    let bestDist = SNAP_RADIUS_PX;
    for (const action of this.model.actionCards.values()) {
      if (action.id === drag.sourceId) continue; // never its own body
      action.slots.forEach((slot, index) => {
        const port = slotPortPosition(action, index, this.view);
        const dist = Math.hypot(port.x - screenPos.x, port.y - screenPos.y);
        if (dist <= bestDist) {
          bestDist = dist;
          best = { actionId: action.id, slotId: slot.slot_id };
        }
      });
    }
    drag.hover = best;
    return best;
  }

  /** Release: connect if snapped, otherwise cancel silently. */
  endSocketDrag(screenPos: Position): ActionResult {
    const drag = this.view.drag;
    if (drag === null || drag.type !== "socket-drag") return notSent("no drag");
    this.dragPointer(screenPos);
    const { sourceId, hover } = drag;
    this.view.drag = null;
    if (hover === null) return notSent("released outside any slot");
    return {
      sent: true,
      request: this.request("connect", {
        action_id: hover.actionId,
        slot_id: hover.slotId,
        source_id: sourceId,
      }),
    };
  }

  /** Esc during any drag. */
  cancelDrag(): void {
    this.view.drag = null;
  }

  // -- buttons -------------------------------------------------------------------

  /** Cluster the current selection; actions cannot be cluster members. */
  clusterSelection(): ActionResult {
    const ids = [...this.view.selection];
    if (ids.length === 0) return notSent("nothing selected");
    for (const id of ids) {
      if (this.model.actionCards.has(id)) {
        return notSent("clusters hold data cards only");
      }
      if (!this.model.dataCards.has(id)) {
        return notSent("selection must be data cards");
      }
    }
    const cards = ids.map((id) => this.model.dataCards.get(id)!);
    const position = {
      x: Math.min(...cards.map((c) => c.position.x)) - 16,
      y: Math.min(...cards.map((c) => c.position.y)) - 16,
    };
    return {
      sent: true,
      request: this.request("form_cluster", { member_ids: ids, position }),
    };
  }

  triggerAction(actionId: string): ActionResult {
    if (!this.model.actionCards.has(actionId)) return notSent("no such action");
    return { sent: true, request: this.request("trigger_action", { action_id: actionId }) };
  }

  decomposeCard(cardId: string): ActionResult {
    const card = this.model.dataCards.get(cardId);
    if (card === undefined || card.kind !== "text") {
      return notSent("decompose needs a text card");
    }
    if (typeof card.content !== "string" || card.content.trim() === "") {
      return notSent("write a goal first"); // inline error, no request
    }
    return { sent: true, request: this.request("decompose", { card_id: cardId }) };
  }

  interpretCluster(clusterId: string): ActionResult {
    if (!this.model.clusters.has(clusterId)) return notSent("no such cluster");
    return {
      sent: true,
      request: this.request("interpret_cluster", { cluster_id: clusterId }),
    };
  }
}
