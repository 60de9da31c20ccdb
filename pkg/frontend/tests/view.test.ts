import { describe, expect, it } from "vitest";

import {
  clampZoom,
  MAX_ZOOM,
  MIN_ZOOM,
  SNAP_RADIUS_PX,
  snapRadiusWorld,
  TEXT_CARD_MAX,
  TEXT_CARD_MIN,
  textCardSize,
  ViewState,
} from "../src/view.js";
import { eventDelete, modelFromSnapshot, waterId } from "./helpers.js";

describe("zoom", () => {
  it("clamps to [0.1, 8]", () => {
    expect(clampZoom(0.0001)).toBe(MIN_ZOOM);
    expect(clampZoom(1000)).toBe(MAX_ZOOM);
    expect(clampZoom(1)).toBe(1);
    const view = new ViewState();
    view.setZoom(0);
    expect(view.zoom).toBe(MIN_ZOOM);
    view.setZoom(99);
    expect(view.zoom).toBe(MAX_ZOOM);
  });

  it("zooming about an anchor keeps that screen point fixed", () => {
    const view = new ViewState();
    view.panBy(40, -20);
    const anchor = { x: 300, y: 200 };
    const worldBefore = view.screenToWorld(anchor);
    view.setZoom(2.5, anchor);
    const worldAfter = view.screenToWorld(anchor);
    expect(worldAfter.x).toBeCloseTo(worldBefore.x, 9);
    expect(worldAfter.y).toBeCloseTo(worldBefore.y, 9);
  });
});

describe("coordinate transforms", () => {
  it("screenToWorld inverts worldToScreen at any pan/zoom", () => {
    const view = new ViewState();
    view.setZoom(3.5);
    view.panBy(-120, 77);
    const p = { x: 123.25, y: -456.5 };
    const round = view.screenToWorld(view.worldToScreen(p));
    expect(round.x).toBeCloseTo(p.x, 9);
    expect(round.y).toBeCloseTo(p.y, 9);
  });

  it("centerOn puts the card center at the viewport center", () => {
    const view = new ViewState();
    view.setZoom(2);
    view.centerOn({ x: 100, y: 50 }, { width: 240, height: 140 }, { width: 1280, height: 800 });
    const screen = view.worldToScreen({ x: 100 + 120, y: 50 + 70 });
    expect(screen.x).toBeCloseTo(640);
    expect(screen.y).toBeCloseTo(400);
  });
});

describe("snapping", () => {
  it("is 24 screen px at zoom 1 and scales in world units", () => {
    expect(SNAP_RADIUS_PX).toBe(24);
    expect(snapRadiusWorld(1)).toBe(24);
    expect(snapRadiusWorld(2)).toBe(12);
    expect(snapRadiusWorld(0.5)).toBe(48);
  });
});

describe("selection", () => {
  it("references live ids only after pruning", () => {
    const model = modelFromSnapshot();
    const view = new ViewState();
    view.selection.add(waterId);
    view.selection.add("never-existed");
    view.pruneSelection(model);
    expect(view.selection.has(waterId)).toBe(true);
    expect(view.selection.has("never-existed")).toBe(false);
    model.applyEvent(eventDelete);
    view.pruneSelection(model);
    expect(view.selection.size).toBe(0);
  });
});

describe("text card autosize", () => {
  it("stays within the min/max bounds", () => {
    for (const text of ["", "hi", "x".repeat(40), "long line ".repeat(200), "a\n".repeat(80)]) {
      const size = textCardSize(text);
      expect(size.width).toBeGreaterThanOrEqual(TEXT_CARD_MIN.width);
      expect(size.width).toBeLessThanOrEqual(TEXT_CARD_MAX.width);
      expect(size.height).toBeGreaterThanOrEqual(TEXT_CARD_MIN.height);
      expect(size.height).toBeLessThanOrEqual(TEXT_CARD_MAX.height);
    }
  });

  it("grows with content and is deterministic", () => {
    const small = textCardSize("hi");
    const wide = textCardSize("a much longer single line of card text here");
    const tall = textCardSize("line\n".repeat(12));
    expect(wide.width).toBeGreaterThan(small.width);
    expect(tall.height).toBeGreaterThan(small.height);
    expect(textCardSize("same text")).toEqual(textCardSize("same text"));
  });
});
