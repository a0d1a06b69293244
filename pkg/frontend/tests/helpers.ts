import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function recorded<T>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", name), "utf-8")) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export interface MockRoute {
  match: (url: string, method: string) => boolean;
  respond: () => { status: number; body: unknown };
}

/** A fetch stub that replays recordings and logs every call it receives. */
export function makeFetch(routes: MockRoute[], calls: RecordedCall[]): FetchLike {
  return async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    calls.push({
      url,
      method,
      body: init?.body ? JSON.parse(String(init.body)) : null,
    });
    for (const route of routes) {
      if (route.match(url, method)) {
        const { status, body } = route.respond();
        return new Response(JSON.stringify(body), {
          status,
          headers: { "Content-Type": "application/json", "X-Snapshot-Id": "snap-000001" },
        });
      }
    }
    return new Response(
      JSON.stringify({ status: 404, code: "route_not_found", message: url }),
      { status: 404, headers: { "X-Snapshot-Id": "snap-000001" } },
    );
  };
}

export function jsonRoute(prefix: string, payload: unknown, status = 200): MockRoute {
  return {
    match: (url, method) => method === "GET" && url.includes(prefix),
    respond: () => ({ status, body: payload }),
  };
}
