/**
 * Wire types for the gateway client protocol.
 *
 * These mirror the server's JSON frames field for field; the test suite
 * checks them against frames recorded from a live server, so a drift on
 * either side fails loudly instead of rendering garbage.
 */

export interface Position {
  x: number;
  y: number;
}

export interface Size {
  width: number;
  height: number;
}

export interface AssetRefDict {
  asset_id: string;
  media_type: string;
  byte_length: number;
}

export type ModalityName = "text" | "image" | "audio";
export type GenStateName = "waiting" | "loading" | "error" | "success";

export interface GenStateDict {
  state: GenStateName;
  bubble: string | null;
}

export interface ProvenanceDict {
  influencers: string[];
  method: string;
  prompt: string;
  job_id: string | null;
}

export interface DataCardDict {
  id: string;
  kind: ModalityName;
  position: Position;
  size: Size;
  content: string | AssetRefDict | null;
  annotation: string | null;
  gen_state: GenStateDict;
  provenance: ProvenanceDict | null;
  truncated: boolean;
  filename: string | null;
}

export interface SlotDict {
  slot_id: string;
  label: string;
  connection: string | null;
}

export interface ActionCardDict {
  id: string;
  position: Position;
  target_modality: ModalityName;
  slots: SlotDict[];
  trigger_count: number;
  slot_seq: number;
}

export interface ClusterDict {
  id: string;
  position: Position;
  label: string | null;
  members: string[];
  cached_interpretation: string | null;
}

export interface EntitiesPayload {
  data_cards: DataCardDict[];
  action_cards: ActionCardDict[];
  clusters: ClusterDict[];
}

export interface DocumentPayload extends EntitiesPayload {
  format: string;
  doc_id: string;
  rev: number;
  created_at: string;
  modified_at: string;
}

// -- server -> client frames -----------------------------------------------

export interface AckFrame {
  kind: "ack";
  msg_id: string;
  body: Record<string, unknown>;
  doc_id?: string;
  rev?: number;
}

export interface ErrorFrame {
  kind: "error";
  msg_id?: string;
  body: { code: string; message: string; position?: number; raw?: string };
}

export interface SnapshotFrame {
  kind: "snapshot";
  msg_id: string;
  doc_id: string;
  rev: number;
  body: DocumentPayload;
}

export interface EventFrame {
  kind: "event";
  doc_id: string;
  rev: number;
  body: {
    op: string;
    entities: EntitiesPayload;
    removed_ids: string[];
  };
}

export type ServerFrame = AckFrame | ErrorFrame | SnapshotFrame | EventFrame;

export class ProtocolError extends Error {}

export function isAck(f: ServerFrame): f is AckFrame {
  return f.kind === "ack";
}

export function isError(f: ServerFrame): f is ErrorFrame {
  return f.kind === "error";
}

export function isSnapshot(f: ServerFrame): f is SnapshotFrame {
  return f.kind === "snapshot";
}

export function isEvent(f: ServerFrame): f is EventFrame {
  return f.kind === "event";
}

const SERVER_KINDS = new Set(["ack", "error", "snapshot", "event"]);

export function parseServerFrame(raw: string): ServerFrame {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError("frame is not JSON");
  }
  if (typeof data !== "object" || data === null) {
    throw new ProtocolError("frame is not an object");
  }
  const frame = data as Record<string, unknown>;
  const kind = frame.kind;
  if (typeof kind !== "string" || !SERVER_KINDS.has(kind)) {
    throw new ProtocolError(`unknown server frame kind ${JSON.stringify(kind)}`);
  }
  if (typeof frame.body !== "object" || frame.body === null) {
    throw new ProtocolError(`${kind} frame has no body`);
  }
  if ((kind === "event" || kind === "snapshot") && typeof frame.rev !== "number") {
    throw new ProtocolError(`${kind} frame has no rev`);
  }
  return frame as unknown as ServerFrame;
}

// -- client -> server envelopes ----------------------------------------------

export const CLIENT_KINDS = [
  "join",
  "create_card",
  "update_text",
  "move",
  "resize",
  "connect",
  "disconnect",
  "add_slot",
  "remove_slot",
  "rename_slot",
  "form_cluster",
  "set_cluster_label",
  "interpret_cluster",
  "decompose",
  "trigger_action",
  "duplicate",
  "delete",
  "paste",
] as const;

export type ClientKind = (typeof CLIENT_KINDS)[number];

export interface ClientEnvelope {
  msg_id: string;
  kind: ClientKind;
  doc_id: string;
  body: Record<string, unknown>;
}

export function makeEnvelope(
  msgId: string,
  kind: ClientKind,
  docId: string,
  body: Record<string, unknown> = {},
): ClientEnvelope {
  return { msg_id: msgId, kind, doc_id: docId, body };
}

/** Derive the http(s) base for assets and ingest from the configured URL. */
export function httpBase(serverUrl: string): string {
  const url = serverUrl.replace(/\/+$/, "");
  if (url.startsWith("ws://")) return "http://" + url.slice(5);
  if (url.startsWith("wss://")) return "https://" + url.slice(6);
  return url;
}

/** Derive the client websocket URL from the configured URL. */
export function wsUrl(serverUrl: string): string {
  const url = serverUrl.replace(/\/+$/, "");
  let base: string;
  if (url.startsWith("http://")) base = "ws://" + url.slice(7);
  else if (url.startsWith("https://")) base = "wss://" + url.slice(8);
  else base = url;
  return base + "/ws/client";
}
