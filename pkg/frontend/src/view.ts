/**
 * Pure view state: pan, zoom, selection and drag previews.
 *
 * Nothing here touches the document; this is the only state the client is
 * allowed to hold optimistically. World coordinates are canvas units (the
 * positions the server stores); screen coordinates are CSS pixels.
 */

import type { Position, Size } from "./protocol.js";
import type { DocModel } from "./docmodel.js";

export const MIN_ZOOM = 0.1;
export const MAX_ZOOM = 8;
/** Socket snapping distance, measured on screen (24 px at zoom 1). */
export const SNAP_RADIUS_PX = 24;

export const TEXT_CARD_MIN: Size = { width: 160, height: 64 };
export const TEXT_CARD_MAX: Size = { width: 480, height: 400 };

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}

export interface CardMoveDrag {
  type: "card-move";
  cardId: string;
  /** optimistic preview offset, world units; discarded when the event lands */
  preview: Position;
}

export interface SocketDrag {
  type: "socket-drag";
  sourceId: string;
  pointer: Position; // screen
  hover: { actionId: string; slotId: string } | null;
}

export interface MarqueeDrag {
  type: "marquee";
  origin: Position; // screen
  pointer: Position; // screen
}

export type DragState = CardMoveDrag | SocketDrag | MarqueeDrag;

export class ViewState {
  panX = 0;
  panY = 0;
  private _zoom = 1;
  readonly selection = new Set<string>();
  drag: DragState | null = null;
  /** card whose provenance the Info View is showing, if open */
  infoCardId: string | null = null;

  get zoom(): number {
    return this._zoom;
  }

  worldToScreen(p: Position): Position {
    return { x: (p.x + this.panX) * this._zoom, y: (p.y + this.panY) * this._zoom };
  }

  screenToWorld(p: Position): Position {
    return { x: p.x / this._zoom - this.panX, y: p.y / this._zoom - this.panY };
  }

  panBy(dxScreen: number, dyScreen: number): void {
    this.panX += dxScreen / this._zoom;
    this.panY += dyScreen / this._zoom;
  }

  /** Zoom keeping the given screen point over the same world point. */
  setZoom(zoom: number, anchor?: Position): void {
    const next = clampZoom(zoom);
    if (anchor !== undefined) {
      const world = this.screenToWorld(anchor);
      this.panX = anchor.x / next - world.x;
      this.panY = anchor.y / next - world.y;
    }
    this._zoom = next;
  }

  /** Pan so the given world rect is centered in a viewport of this size. */
  centerOn(position: Position, size: Size, viewport: Size): void {
    const cx = position.x + size.width / 2;
    const cy = position.y + size.height / 2;
    this.panX = viewport.width / (2 * this._zoom) - cx;
    this.panY = viewport.height / (2 * this._zoom) - cy;
  }

  /** Selection may only reference live entities. */
  pruneSelection(model: DocModel): void {
    for (const id of [...this.selection]) {
      if (!model.isLive(id)) this.selection.delete(id);
    }
  }
}

/** World-space snapping distance for the current zoom (24 screen px). */
export function snapRadiusWorld(zoom: number): number {
  return SNAP_RADIUS_PX / clampZoom(zoom);
}

/**
 * Deterministic autosize for text cards: grows with content, clamped to the
 * min/max bounds. Line metrics are approximations, not font measurements;
 * what matters is that size is a pure function of the text.
 */
export function textCardSize(content: string): Size {
  const CHAR_W = 7;
  const LINE_H = 20;
  const PAD_W = 32;
  const PAD_H = 28;
  const lines = content.length === 0 ? [""] : content.split("\n");
  const longest = Math.max(...lines.map((l) => l.length));
  const width = Math.min(
    TEXT_CARD_MAX.width,
    Math.max(TEXT_CARD_MIN.width, PAD_W + longest * CHAR_W),
  );
  const charsPerLine = Math.max(1, Math.floor((width - PAD_W) / CHAR_W));
  let wrapped = 0;
  for (const line of lines) wrapped += Math.max(1, Math.ceil(line.length / charsPerLine));
  const height = Math.min(
    TEXT_CARD_MAX.height,
    Math.max(TEXT_CARD_MIN.height, PAD_H + wrapped * LINE_H),
  );
  return { width, height };
}
