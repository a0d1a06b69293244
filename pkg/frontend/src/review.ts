/** Review-queue controller: optimistic decisions with conflict handling.
 *
 * An item leaves the queue the moment the curator clicks; exactly one POST
 * goes out per click (an in-flight guard suppresses double clicks). A 409
 * means another curator got there first: the item stays out and is flagged
 * "decided elsewhere", and the local decision count rolls back. Any other
 * failure restores the item to its queue position.
 */

import type { HubApi } from "./api.js";
import type { QueueItem, SynonymMention } from "./types.js";

export type DecideResult = "ok" | "conflict" | "suppressed" | "error";

export interface ConflictNote {
  pmid: number;
  message: string;
}

export class ReviewQueueController {
  items: QueueItem[] = [];
  iteration = 0;
  conflicts: ConflictNote[] = [];
  myDecisions = 0;
  lastError = "";
  private inflight = new Set<number>();

  constructor(
    private readonly api: HubApi,
    public curator: string,
  ) {}

  async load(k: number): Promise<void> {
    const payload = await this.api.reviewQueue(k);
    this.iteration = payload.iteration;
    this.items = payload.items;
  }

  async decide(pmid: number, label: "accept" | "reject"): Promise<DecideResult> {
    if (this.inflight.has(pmid)) {
      return "suppressed";
    }
    const index = this.items.findIndex((item) => item.pmid === pmid);
    if (index < 0) {
      return "suppressed";
    }
    this.inflight.add(pmid);
    const [removed] = this.items.splice(index, 1); // optimistic removal
    this.myDecisions += 1;
    try {
      const outcome = await this.api.decide(pmid, label, this.curator);
      if (outcome.kind === "conflict") {
        this.myDecisions -= 1; // not our decision after all
        this.conflicts.push({ pmid, message: "decided elsewhere" });
        return "conflict";
      }
      return "ok";
    } catch (error) {
      this.myDecisions -= 1;
      this.items.splice(index, 0, removed); // full rollback
      this.lastError = error instanceof Error ? error.message : String(error);
      return "error";
    } finally {
      this.inflight.delete(pmid);
    }
  }

  next(): QueueItem | undefined {
    return this.items[0];
  }
}

export interface TextSegment {
  text: string;
  highlight: boolean;
}

/** Split text on server-provided mention offsets; no client re-matching. */
export function highlightSegments(
  text: string,
  mentions: SynonymMention[],
  field: "title" | "abstract",
): TextSegment[] {
  const spans = mentions
    .filter((m) => m.field === field)
    .sort((a, b) => a.start - b.start);
  const segments: TextSegment[] = [];
  let cursor = 0;
  for (const span of spans) {
    if (span.start > cursor) {
      segments.push({ text: text.slice(cursor, span.start), highlight: false });
    }
    segments.push({ text: text.slice(span.start, span.end), highlight: true });
    cursor = span.end;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), highlight: false });
  }
  return segments;
}

export interface SignalRowView {
  name: string;
  value: number;
}

export function signalRows(item: QueueItem): SignalRowView[] {
  return Object.entries(item.signals).map(([name, value]) => ({ name, value }));
}
