/**
 * The client-side replica of a document.
 *
 * The replica is never authoritative: it hydrates from a snapshot and then
 * applies committed events strictly in rev order. Events that arrive early
 * (rev gap) are buffered until the gap closes; events at or below the current
 * rev are duplicates of state we already hold and are dropped. A reconnect
 * simply rehydrates from the fresh snapshot and drains whatever buffered
 * events are still newer than it.
 */

import type {
  ActionCardDict,
  ClusterDict,
  DataCardDict,
  EventFrame,
  SnapshotFrame,
} from "./protocol.js";

export type Entity = DataCardDict | ActionCardDict | ClusterDict;

export class DocModel {
  readonly docId: string;
  rev = -1; // not hydrated yet
  readonly dataCards = new Map<string, DataCardDict>();
  readonly actionCards = new Map<string, ActionCardDict>();
  readonly clusters = new Map<string, ClusterDict>();
  private pending = new Map<number, EventFrame>();

  constructor(docId: string) {
    this.docId = docId;
  }

  get hydrated(): boolean {
    return this.rev >= 0;
  }

  get pendingCount(): number {
    return this.pending.size;
  }

  hydrate(snapshot: SnapshotFrame): void {
    if (snapshot.doc_id !== this.docId) return;
    this.dataCards.clear();
    this.actionCards.clear();
    this.clusters.clear();
    for (const card of snapshot.body.data_cards) this.dataCards.set(card.id, card);
    for (const action of snapshot.body.action_cards) this.actionCards.set(action.id, action);
    for (const cluster of snapshot.body.clusters) this.clusters.set(cluster.id, cluster);
    this.rev = snapshot.rev;
    for (const rev of [...this.pending.keys()]) {
      if (rev <= this.rev) this.pending.delete(rev);
    }
    this.drain();
  }

  /**
   * Returns true when the event (or any buffered successors) changed state.
   * Stale events return false and change nothing; future events return false
   * and wait in the buffer.
   */
  applyEvent(event: EventFrame): boolean {
    if (event.doc_id !== this.docId) return false;
    if (!this.hydrated || event.rev > this.rev + 1) {
      if (this.hydrated && event.rev <= this.rev) return false;
      this.pending.set(event.rev, event);
      return false;
    }
    if (event.rev <= this.rev) return false;
    this.applyNow(event);
    this.drain();
    return true;
  }

  entity(id: string): Entity | undefined {
    return this.dataCards.get(id) ?? this.actionCards.get(id) ?? this.clusters.get(id);
  }

  isLive(id: string): boolean {
    return this.entity(id) !== undefined;
  }

  private applyNow(event: EventFrame): void {
    const { entities, removed_ids } = event.body;
    for (const card of entities.data_cards) this.dataCards.set(card.id, card);
    for (const action of entities.action_cards) this.actionCards.set(action.id, action);
    for (const cluster of entities.clusters) this.clusters.set(cluster.id, cluster);
    for (const id of removed_ids) {
      this.dataCards.delete(id);
      this.actionCards.delete(id);
      this.clusters.delete(id);
    }
    this.rev = event.rev;
  }

  private drain(): void {
    let next = this.pending.get(this.rev + 1);
    while (next !== undefined) {
      this.pending.delete(next.rev);
      this.applyNow(next);
      next = this.pending.get(this.rev + 1);
    }
  }
}
