/** Review-screen contract: queue order mirrors the API; one POST per click;
 * 409 flags the item as decided elsewhere; other failures roll back. */

import { describe, expect, it } from "vitest";

import { HubApi } from "../src/api.js";
import { ReviewQueueController, highlightSegments } from "../src/review.js";
import type { QueuePayload } from "../src/types.js";
import { jsonRoute, makeFetch, recorded, type MockRoute, type RecordedCall } from "./helpers.js";

const queuePayload = recorded<QueuePayload>("queue.json");

function controllerWith(routes: MockRoute[]) {
  const calls: RecordedCall[] = [];
  const api = new HubApi("", makeFetch(routes, calls));
  return { controller: new ReviewQueueController(api, "curator-1"), calls };
}

function postRoute(status: number, body: unknown): MockRoute {
  return {
    match: (url, method) => method === "POST" && url.includes("/api/review/"),
    respond: () => ({ status, body }),
  };
}

describe("queue rendering", () => {
  it("renders the queue in exactly the API's order", async () => {
    const { controller } = controllerWith([jsonRoute("/api/review/queue", queuePayload)]);
    await controller.load(10);
    expect(controller.items.map((i) => i.pmid)).toEqual(
      queuePayload.items.map((i) => i.pmid),
    );
    expect(controller.iteration).toBe(queuePayload.iteration);
  });

  it("exposes the 8-signal vector untouched", async () => {
    const { controller } = controllerWith([jsonRoute("/api/review/queue", queuePayload)]);
    await controller.load(10);
    controller.items.forEach((item, i) => {
      expect(item.signals).toEqual(queuePayload.items[i].signals);
    });
  });
});

describe("decision flow", () => {
  it("posts exactly one decision per click", async () => {
    const pmid = queuePayload.items[0].pmid;
    const { controller, calls } = controllerWith([
      jsonRoute("/api/review/queue", queuePayload),
      postRoute(200, { pmid, status: "accepted", decided_by: "curator-1", decided_at: "t" }),
    ]);
    await controller.load(10);
    const result = await controller.decide(pmid, "accept");
    expect(result).toBe("ok");
    const posts = calls.filter((c) => c.method === "POST");
    expect(posts.length).toBe(1);
    expect(posts[0].url).toContain(`/api/review/${pmid}`);
    expect(posts[0].body).toEqual({ label: "accept", curator: "curator-1" });
    expect(controller.items.map((i) => i.pmid)).not.toContain(pmid);
    expect(controller.myDecisions).toBe(1);
  });

  it("suppresses the second click while the first is in flight", async () => {
    const pmid = queuePayload.items[0].pmid;
    let release: (() => void) | undefined;
    const gate = new Promise<void>((resolve) => (release = resolve));
    const calls: RecordedCall[] = [];
    const slowFetch = async (url: string, init?: RequestInit) => {
      const method = init?.method ?? "GET";
      calls.push({ url, method, body: init?.body ? JSON.parse(String(init.body)) : null });
      if (method === "POST") {
        await gate;
        return new Response(
          JSON.stringify({ pmid, status: "accepted", decided_by: "c", decided_at: "t" }),
          { status: 200 },
        );
      }
      return new Response(JSON.stringify(queuePayload), { status: 200 });
    };
    const controller = new ReviewQueueController(new HubApi("", slowFetch), "curator-1");
    await controller.load(10);
    const first = controller.decide(pmid, "accept");
    const second = controller.decide(pmid, "accept"); // double click
    release!();
    expect(await second).toBe("suppressed");
    expect(await first).toBe("ok");
    expect(calls.filter((c) => c.method === "POST").length).toBe(1);
  });

  it("handles 409: item stays removed, flagged decided-elsewhere, count rolls back", async () => {
    const pmid = queuePayload.items[0].pmid;
    const { controller, calls } = controllerWith([
      jsonRoute("/api/review/queue", queuePayload),
      postRoute(409, { status: 409, code: "already_decided", message: "already accepted" }),
    ]);
    await controller.load(10);
    const result = await controller.decide(pmid, "reject");
    expect(result).toBe("conflict");
    expect(calls.filter((c) => c.method === "POST").length).toBe(1);
    expect(controller.items.map((i) => i.pmid)).not.toContain(pmid);
    expect(controller.conflicts).toEqual([{ pmid, message: "decided elsewhere" }]);
    expect(controller.myDecisions).toBe(0);
    // the next-priority item moved up
    expect(controller.next()?.pmid).toBe(queuePayload.items[1].pmid);
  });

  it("restores the item at its position on a network-level failure", async () => {
    const pmid = queuePayload.items[1].pmid;
    const { controller } = controllerWith([
      jsonRoute("/api/review/queue", queuePayload),
      postRoute(500, { status: 500, code: "http_error", message: "boom" }),
    ]);
    await controller.load(10);
    const result = await controller.decide(pmid, "accept");
    expect(result).toBe("error");
    expect(controller.items.map((i) => i.pmid)).toEqual(
      queuePayload.items.map((i) => i.pmid),
    );
    expect(controller.myDecisions).toBe(0);
  });
});

describe("synonym highlighting", () => {
  it("uses server offsets verbatim and reconstructs the source text", () => {
    for (const item of queuePayload.items) {
      for (const field of ["title", "abstract"] as const) {
        const source = field === "title" ? item.title : item.abstract;
        const segments = highlightSegments(source, item.synonym_mentions, field);
        expect(segments.map((s) => s.text).join("")).toBe(source);
        const highlighted = segments.filter((s) => s.highlight).map((s) => s.text);
        const expected = item.synonym_mentions
          .filter((m) => m.field === field)
          .map((m) => source.slice(m.start, m.end));
        expect(highlighted).toEqual(expected);
      }
    }
  });
});
