/**
 * Frames recorded from a live server (frontend/scripts/make_ui_fixtures.py).
 * Tests parse them through the real codec so the client is exercised against
 * the authentic wire format, not a hand-written imitation.
 */

import rawFrames from "./fixtures/frames.json";
import { DocModel } from "../src/docmodel.js";
import {
  type AckFrame,
  type ErrorFrame,
  type EventFrame,
  type SnapshotFrame,
  parseServerFrame,
  isAck,
  isError,
  isEvent,
  isSnapshot,
} from "../src/protocol.js";

function reparse<T>(frame: unknown, guard: (f: ReturnType<typeof parseServerFrame>) => boolean): T {
  const parsed = parseServerFrame(JSON.stringify(frame));
  if (!guard(parsed)) throw new Error("fixture frame has unexpected kind");
  return parsed as T;
}

const f = rawFrames as Record<string, unknown>;

export const snapshotEmpty = reparse<SnapshotFrame>(f.snapshot_empty, isSnapshot);
export const snapshotFull = reparse<SnapshotFrame>(f.snapshot_full, isSnapshot);
export const errorFrame = reparse<ErrorFrame>(f.error_frame, isError);
export const ackTrigger = reparse<AckFrame>(f.ack_trigger, isAck);

export const eventCreateGoal = reparse<EventFrame>(f.event_create_goal, isEvent);
export const eventDecompose = reparse<EventFrame>(f.event_decompose, isEvent);
export const eventCreateWater = reparse<EventFrame>(f.event_create_water, isEvent);
export const eventConnect = reparse<EventFrame>(f.event_connect, isEvent);
export const eventTrigger = reparse<EventFrame>(f.event_trigger, isEvent);
export const eventDelete = reparse<EventFrame>(f.event_delete, isEvent);
export const eventsGeneration = (f.events_generation as unknown[]).map((e) =>
  reparse<EventFrame>(e, isEvent),
);

/** Every committed event of the session, in rev order, delete included. */
export const allEvents: EventFrame[] = [
  eventCreateGoal,
  eventDecompose,
  eventCreateWater,
  eventConnect,
  eventTrigger,
  ...eventsGeneration,
  eventDelete,
];

/** Model hydrated from the empty snapshot with events applied through rev. */
export function modelAt(rev: number): DocModel {
  const model = new DocModel("doc-1");
  model.hydrate(snapshotEmpty);
  for (const event of allEvents) {
    if (event.rev <= rev) model.applyEvent(event);
  }
  return model;
}

export function modelFromSnapshot(): DocModel {
  const model = new DocModel("doc-1");
  model.hydrate(snapshotFull);
  return model;
}

export const goalId = eventCreateGoal.body.entities.data_cards[0]!.id;
export const waterId = eventCreateWater.body.entities.data_cards[0]!.id;
export const actionId = eventDecompose.body.entities.action_cards[0]!.id;
