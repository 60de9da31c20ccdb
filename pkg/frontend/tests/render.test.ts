import { describe, expect, it } from "vitest";

import { DocModel } from "../src/docmodel.js";
import { render, renderInfoView, slotPortPosition } from "../src/render.js";
import { injectStyles, STYLE_ELEMENT_ID } from "../src/styles.js";
import { TEXT_CARD_MAX, TEXT_CARD_MIN, ViewState } from "../src/view.js";
import {
  actionId,
  eventDelete,
  eventsGeneration,
  eventTrigger,
  modelAt,
  modelFromSnapshot,
  snapshotEmpty,
  waterId,
} from "./helpers.js";

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

describe("scene rendering", () => {
  it("an empty document still shows the Hand", () => {
    const model = new DocModel("doc-1");
    model.hydrate(snapshotEmpty);
    const root = mount();
    render(root, model, new ViewState());
    expect(root.querySelector(".df-hand")).not.toBeNull();
    expect(root.querySelectorAll(".df-hand-card")).toHaveLength(4);
    expect(root.querySelectorAll(".df-card")).toHaveLength(0);
  });

  it("the decomposed scene shows a 5-slot action with 4 connections", () => {
    const model = modelAt(2); // goal card + decomposition
    const root = mount();
    render(root, model, new ViewState());
    const action = root.querySelector(`.df-action[data-id="${actionId}"]`)!;
    expect(action).not.toBeNull();
    const slots = action.querySelectorAll(".df-slot");
    expect(slots).toHaveLength(5);
    expect(action.querySelectorAll(".df-slot.df-connected")).toHaveLength(4);
    const labels = [...slots].map((s) => s.querySelector(".df-slot-label")!.textContent);
    expect(labels).toEqual(["Style", "Subject", "Key Elements", "Lighting", "Natural Features"]);
    // four wires for four connections
    expect(root.querySelectorAll(".df-wire")).toHaveLength(4);
  });

  it("a trigger fans out as 12 cards, the 9 placeholders shaking slowly", () => {
    const model = modelAt(eventTrigger.rev);
    const root = mount();
    render(root, model, new ViewState());
    const waiting = root.querySelectorAll(".df-card.df-state-waiting");
    expect(waiting).toHaveLength(9);
    for (const node of waiting) {
      expect(node.classList.contains("df-shake-slow")).toBe(true);
      expect(node.textContent).toContain("queued"); // the spawn bubble
    }
    // goal + its four decomposed values + water + the 12 trigger products
    expect(root.querySelectorAll(".df-card.df-data")).toHaveLength(6 + 12);
  });

  it("loading cards shake faster and carry the worker's bubble", () => {
    const firstLoading = eventsGeneration[0]!;
    const model = modelAt(firstLoading.rev);
    const root = mount();
    render(root, model, new ViewState());
    const loading = root.querySelectorAll(".df-card.df-state-loading");
    expect(loading).toHaveLength(1);
    expect(loading[0]!.classList.contains("df-shake-fast")).toBe(true);
    expect(loading[0]!.querySelector(".df-bubble")!.textContent).toBe("painting");
  });

  it("successful images jump and show asset thumbnails", () => {
    const model = modelFromSnapshot();
    const root = mount();
    render(root, model, new ViewState(), { assetBase: "http://gw:8700" });
    const done = root.querySelectorAll(".df-card.df-image.df-state-success");
    expect(done).toHaveLength(9);
    for (const node of done) {
      expect(node.classList.contains("df-jump")).toBe(true);
      const src = node.querySelector("img.df-thumb")!.getAttribute("src")!;
      expect(src).toMatch(/^http:\/\/gw:8700\/assets\/[0-9a-f]{64}$/);
    }
  });

  it("text cards autosize within bounds regardless of stored size", () => {
    const model = modelFromSnapshot();
    const root = mount();
    render(root, model, new ViewState());
    for (const node of root.querySelectorAll<HTMLElement>(".df-card.df-text, .df-card.df-data.df-text")) {
      const width = parseFloat(node.style.width);
      const height = parseFloat(node.style.height);
      expect(width).toBeGreaterThanOrEqual(TEXT_CARD_MIN.width);
      expect(width).toBeLessThanOrEqual(TEXT_CARD_MAX.width);
      expect(height).toBeGreaterThanOrEqual(TEXT_CARD_MIN.height);
      expect(height).toBeLessThanOrEqual(TEXT_CARD_MAX.height);
    }
  });

  it("replaying events renders the identical frame to the snapshot", () => {
    const byEvents = modelAt(23);
    const bySnapshot = modelFromSnapshot();
    const a = mount();
    const b = mount();
    render(a, byEvents, new ViewState(), { assetBase: "x" });
    render(b, bySnapshot, new ViewState(), { assetBase: "x" });
    expect(a.innerHTML).toBe(b.innerHTML);
  });

  it("pan and zoom land in the canvas transform only", () => {
    const model = modelFromSnapshot();
    const view = new ViewState();
    view.setZoom(2);
    view.panBy(100, 60); // screen px
    const root = mount();
    render(root, model, view);
    const canvas = root.querySelector<HTMLElement>(".df-canvas")!;
    expect(canvas.style.transform).toBe("translate(100px, 60px) scale(2)");
  });

  it("injects the stylesheet once, with the three state animations", () => {
    injectStyles(document);
    injectStyles(document);
    const sheets = document.querySelectorAll(`#${STYLE_ELEMENT_ID}`);
    expect(sheets).toHaveLength(1);
    const css = sheets[0]!.textContent!;
    for (const name of ["df-shake-slow", "df-shake-fast", "df-jump"]) {
      expect(css).toContain(`@keyframes ${name}`);
    }
  });
});

describe("info view", () => {
  it("shows provenance and ghosts deleted influencers", () => {
    const model = modelFromSnapshot();
    model.applyEvent(eventDelete); // water card gone, provenance remains
    const output = [...model.dataCards.values()].find(
      (c) => c.provenance?.job_id != null,
    )!;
    const centered: string[] = [];
    const panel = renderInfoView(document, model, output.id, {
      onInfluencerClick: (id) => centered.push(id),
    });
    expect(panel.querySelector(".df-info-method")!.textContent).toBe(
      output.provenance!.method,
    );
    expect(panel.querySelector(".df-info-prompt")!.textContent).toBe(
      output.provenance!.prompt,
    );
    const refs = panel.querySelectorAll<HTMLButtonElement>(".df-influencer");
    expect(refs.length).toBe(output.provenance!.influencers.length);
    const ghost = panel.querySelector<HTMLButtonElement>(
      `.df-influencer[data-ref="${waterId}"]`,
    )!;
    expect(ghost.classList.contains("df-ghost")).toBe(true);
    expect(ghost.disabled).toBe(true);
    ghost.click();
    expect(centered).toHaveLength(0); // ghosts are inert
    const live = [...refs].find((r) => !r.classList.contains("df-ghost"))!;
    live.click();
    expect(centered).toEqual([live.dataset.ref]);
  });

  it("renders inside the scene when a card is inspected", () => {
    const model = modelFromSnapshot();
    const view = new ViewState();
    view.infoCardId = [...model.dataCards.keys()][0]!;
    const root = mount();
    render(root, model, view);
    expect(root.querySelector(".df-info")).not.toBeNull();
  });
});

describe("slot port geometry", () => {
  it("matches the rendered slot rows", () => {
    const model = modelAt(2);
    const view = new ViewState();
    const action = model.actionCards.get(actionId)!;
    const p0 = slotPortPosition(action, 0, view);
    const p4 = slotPortPosition(action, 4, view);
    expect(p0.x).toBe(action.position.x);
    expect(p4.y - p0.y).toBe(4 * 28);
  });
});
