/** Client-side queue state.
 *
 * The visible queue is always recomputed from the last fetched payload plus
 * the local decision map, so a poll can never lose an in-progress decision.
 * Decisions move one way: pending -> labeled | skipped. The only way back is
 * an explicit rollback after a rejected POST, which undoes an optimistic
 * transition that never took effect server-side.
 */

import type { ApiQuery, Decision, QueryView } from "./types.js";
import { queryKey } from "./types.js";

export interface QueueCounts {
  total: number;
  pending: number;
  labeled: number;
  skipped: number;
}

function byMargin(a: QueryView, b: QueryView): number {
  return a.margin - b.margin || a.series.localeCompare(b.series) || a.t - b.t;
}

export class QueueStore {
  private payload = new Map<string, ApiQuery>();
  private decisions = new Map<string, Decision>();
  private stale = new Set<string>();
  private inflight = new Set<string>();
  private focusedKey: string | null = null;

  ingest(queries: ApiQuery[]): void {
    this.payload = new Map(queries.map((q) => [queryKey(q), q]));
    for (const key of [...this.decisions.keys()]) {
      if (!this.payload.has(key)) this.decisions.delete(key);
    }
    for (const key of [...this.stale]) {
      if (!this.payload.has(key)) this.stale.delete(key);
    }
    if (this.focusedKey === null || !this.isVisible(this.focusedKey)) {
      this.focusFirst();
    }
  }

  private isVisible(key: string): boolean {
    return this.payload.has(key) && !this.stale.has(key);
  }

  private decisionFor(key: string): Decision {
    return this.decisions.get(key) ?? { kind: "pending" };
  }

  /** Payload plus decisions, ascending margin; stale entries are hidden. */
  visible(): QueryView[] {
    const views: QueryView[] = [];
    for (const [key, q] of this.payload) {
      if (this.stale.has(key)) continue;
      views.push({ ...q, decision: this.decisionFor(key) });
    }
    return views.sort(byMargin);
  }

  counts(): QueueCounts {
    const out = { total: 0, pending: 0, labeled: 0, skipped: 0 };
    for (const view of this.visible()) {
      out.total += 1;
      out[view.decision.kind] += 1;
    }
    return out;
  }

  /** Apply a one-way transition; refuses anything already decided. */
  decide(key: string, decision: Exclude<Decision, { kind: "pending" }>): boolean {
    if (!this.isVisible(key)) return false;
    if (this.decisionFor(key).kind !== "pending") return false;
    this.decisions.set(key, decision);
    return true;
  }

  /** Undo an optimistic decision whose POST was rejected. */
  rollback(key: string): void {
    this.decisions.delete(key);
  }

  /** Hide a query the server reported as already answered (409). */
  markStale(key: string): void {
    this.stale.add(key);
    this.decisions.delete(key);
    if (this.focusedKey === key) this.focusNext() || this.focusFirst();
  }

  beginSubmit(key: string): boolean {
    if (this.inflight.has(key)) return false;
    this.inflight.add(key);
    return true;
  }

  endSubmit(key: string): void {
    this.inflight.delete(key);
  }

  focused(): QueryView | null {
    if (this.focusedKey === null || !this.isVisible(this.focusedKey)) return null;
    const q = this.payload.get(this.focusedKey)!;
    return { ...q, decision: this.decisionFor(this.focusedKey) };
  }

  focusedId(): string | null {
    return this.focused() ? this.focusedKey : null;
  }

  focus(key: string): boolean {
    if (!this.isVisible(key)) return false;
    this.focusedKey = key;
    return true;
  }

  private focusFirst(): void {
    const first = this.visible()[0];
    this.focusedKey = first ? queryKey(first) : null;
  }

  private shift(delta: number): boolean {
    const keys = this.visible().map(queryKey);
    if (keys.length === 0) {
      this.focusedKey = null;
      return false;
    }
    const at = this.focusedKey === null ? -1 : keys.indexOf(this.focusedKey);
    const next = at === -1 ? 0 : at + delta;
    if (next < 0 || next >= keys.length) return false;
    this.focusedKey = keys[next]!;
    return true;
  }

  focusNext(): boolean {
    return this.shift(1);
  }

  focusPrev(): boolean {
    return this.shift(-1);
  }
}
