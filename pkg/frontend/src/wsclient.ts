/**
 * The single websocket to the gateway.
 *
 * The client never mutates its replica directly: every change is a request
 * envelope, and the replica moves only when the server's committed event (or
 * snapshot) comes back. While disconnected, requests queue; on reconnect the
 * socket re-joins, rehydrates from the fresh snapshot, and only then flushes
 * the queue, so nothing is sent against state the server has moved past.
 */

import { DocModel } from "./docmodel.js";
import {
  type AckFrame,
  type ClientEnvelope,
  type ClientKind,
  isAck,
  isError,
  isEvent,
  isSnapshot,
  makeEnvelope,
  parseServerFrame,
  ProtocolError,
  wsUrl,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class RequestFailed extends Error {
  readonly code: string;
  constructor(code: string, message: string) {
    super(message);
    this.code = code;
  }
}

export class ConnectionLost extends Error {}

export type SocketStatus = "connecting" | "open" | "closed";
export type SocketEvent = "change" | "snapshot" | "status";

export interface CanvasSocketOptions {
  factory?: SocketFactory;
  /** injectable setTimeout for tests */
  scheduler?: (fn: () => void, ms: number) => void;
  baseBackoffMs?: number;
  maxBackoffMs?: number;
}

const defaultFactory: SocketFactory = (url) =>
  new WebSocket(url) as unknown as SocketLike;

export class CanvasSocket {
  readonly model: DocModel;
  status: SocketStatus = "closed";

  private readonly serverUrl: string;
  private readonly factory: SocketFactory;
  private readonly scheduler: (fn: () => void, ms: number) => void;
  private readonly baseBackoffMs: number;
  private readonly maxBackoffMs: number;

  private socket: SocketLike | null = null;
  private seq = 0;
  private attempt = 0;
  private joinMsgId: string | null = null;
  private stopped = false;
  private queue: ClientEnvelope[] = [];
  private inflight = new Map<
    string,
    { resolve: (ack: AckFrame) => void; reject: (err: Error) => void }
  >();
  private listeners: Record<SocketEvent, Array<() => void>> = {
    change: [],
    snapshot: [],
    status: [],
  };

  constructor(serverUrl: string, docId: string, options: CanvasSocketOptions = {}) {
    this.serverUrl = serverUrl;
    this.model = new DocModel(docId);
    this.factory = options.factory ?? defaultFactory;
    this.scheduler = options.scheduler ?? ((fn, ms) => setTimeout(fn, ms));
    this.baseBackoffMs = options.baseBackoffMs ?? 500;
    this.maxBackoffMs = options.maxBackoffMs ?? 10_000;
  }

  on(event: SocketEvent, cb: () => void): void {
    this.listeners[event].push(cb);
  }

  connect(): void {
    this.stopped = false;
    this.open();
  }

  close(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
    this.setStatus("closed");
  }

  /** Queue depth, for tests and a connection indicator. */
  get queuedCount(): number {
    return this.queue.length;
  }

  request(kind: ClientKind, body: Record<string, unknown> = {}): Promise<AckFrame> {
    const envelope = makeEnvelope(`c${++this.seq}`, kind, this.model.docId, body);
    return new Promise<AckFrame>((resolve, reject) => {
      this.inflight.set(envelope.msg_id, { resolve, reject });
      if (this.status === "open" && this.model.hydrated) {
        this.socket!.send(JSON.stringify(envelope));
      } else {
        this.queue.push(envelope);
      }
    });
  }

  private open(): void {
    this.setStatus("connecting");
    const socket = this.factory(wsUrl(this.serverUrl));
    this.socket = socket;
    socket.onopen = () => {
      this.setStatus("open");
      this.joinMsgId = `c${++this.seq}`;
      socket.send(
        JSON.stringify(makeEnvelope(this.joinMsgId, "join", this.model.docId)),
      );
    };
    socket.onmessage = (ev) => this.handleFrame(ev.data);
    socket.onclose = () => {
      if (this.socket !== socket) return; // superseded
      this.socket = null;
      this.setStatus("closed");
      // requests already on the wire have unknown fates; their callers must
      // decide whether to repeat them. Unsent ones stay queued.
      for (const envelope of [...this.inflight.keys()]) {
        if (!this.queue.some((q) => q.msg_id === envelope)) {
          const waiter = this.inflight.get(envelope)!;
          this.inflight.delete(envelope);
          waiter.reject(new ConnectionLost("socket closed before ack"));
        }
      }
      if (!this.stopped) this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    const delay = Math.min(
      this.maxBackoffMs,
      this.baseBackoffMs * 2 ** this.attempt,
    );
    this.attempt += 1;
    this.scheduler(() => {
      if (!this.stopped) this.open();
    }, delay);
  }

  private handleFrame(raw: string): void {
    let frame;
    try {
      frame = parseServerFrame(raw);
    } catch (err) {
      if (err instanceof ProtocolError) return; // tolerate unknown frames
      throw err;
    }
    if (isSnapshot(frame)) {
      // a connection only counts as recovered once the server answered the
      // join; an open that dies before that keeps the backoff growing
      this.attempt = 0;
      this.model.hydrate(frame);
      this.joinMsgId = null;
      this.emit("snapshot");
      this.emit("change");
      this.flushQueue();
      return;
    }
    if (isEvent(frame)) {
      if (this.model.applyEvent(frame)) this.emit("change");
      return;
    }
    const msgId = frame.msg_id;
    if (msgId === undefined) return;
    const waiter = this.inflight.get(msgId);
    if (waiter === undefined) return;
    this.inflight.delete(msgId);
    if (isAck(frame)) waiter.resolve(frame);
    else waiter.reject(new RequestFailed(frame.body.code, frame.body.message));
  }

  private flushQueue(): void {
    if (this.status !== "open" || this.socket === null) return;
    const queued = this.queue;
    this.queue = [];
    for (const envelope of queued) this.socket.send(JSON.stringify(envelope));
  }

  private setStatus(status: SocketStatus): void {
    if (this.status === status) return;
    this.status = status;
    this.emit("status");
  }

  private emit(event: SocketEvent): void {
    for (const cb of this.listeners[event]) cb();
  }
}
