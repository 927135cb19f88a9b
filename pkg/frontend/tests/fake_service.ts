/**
 * In-memory stand-in for the annotation service, exposing the same JSON
 * API through a fetch-shaped function.  Semantics mirror the server
 * contract the UI depends on: stable task until submitted, per-item
 * overwrite, distribution fractions, no client-side kappa (the fake
 * just reports a canned value once two raters exist).
 */

import type { Mode } from "../src/types.js";

interface Record_ {
  item_id: string;
  annotator: string;
  ranks: string[];
  reason: string;
}

const LABELS = new Set([
  "color",
  "isolation",
  "shape",
  "symmetric",
  "asymmetric",
  "crystallographic",
  "regular",
  "progressive",
  "flowing",
]);

export class FakeService {
  readonly items: string[];
  mode: Mode;
  kappa: number | null = null;
  submissions: Record_[] = [];
  requests: { method: string; url: string }[] = [];
  failStats = false;

  private index = new Map<string, Record_>();

  constructor(items: string[], mode: Mode = "ranked") {
    this.items = items;
    this.mode = mode;
  }

  /** fetch-compatible entry point for ApiClient. */
  fetch = async (
    input: RequestInfo | URL,
    init?: RequestInit,
  ): Promise<Response> => {
    const url = String(input);
    const method = init?.method ?? "GET";
    this.requests.push({ method, url });
    const path = url.split("?")[0];
    if (this.failStats && path === "/api/stats") {
      throw new TypeError("network down");
    }
    if (path === "/api/next") {
      const annotator = new URLSearchParams(url.split("?")[1]).get("annotator")!;
      return this.json(this.next(annotator));
    }
    if (path === "/api/annotation" && method === "POST") {
      return this.submit(JSON.parse(String(init!.body)));
    }
    if (path === "/api/stats") {
      return this.json(this.stats());
    }
    return this.json({ error: "unknown-item", message: `no route ${path}` }, 404);
  };

  private json(body: unknown, status = 200): Response {
    return {
      ok: status < 400,
      status,
      json: async () => body,
    } as Response;
  }

  private next(annotator: string) {
    const done = new Set(
      [...this.index.values()]
        .filter((r) => r.annotator === annotator)
        .map((r) => r.item_id),
    );
    for (const item of this.items) {
      if (!done.has(item)) {
        return {
          done: false,
          item_id: item,
          image_url: `/api/image/${item}`,
          domain: "SDV1",
          mode: this.mode,
          remaining: this.items.length - done.size,
        };
      }
    }
    return { done: true };
  }

  private submit(body: {
    item_id: string;
    annotator: string;
    ranks: string[];
    mode: Mode;
    reason?: string;
  }): Response {
    if (body.mode !== this.mode) {
      return this.json(
        { error: "invalid-annotation", message: "mode mismatch" },
        422,
      );
    }
    if (new Set(body.ranks).size !== body.ranks.length) {
      return this.json(
        { error: "invalid-annotation", message: "duplicate labels" },
        422,
      );
    }
    for (const label of body.ranks) {
      if (!LABELS.has(label)) {
        return this.json(
          { error: "invalid-label", message: `unknown label ${label}` },
          422,
        );
      }
    }
    const rec: Record_ = {
      item_id: body.item_id,
      annotator: body.annotator,
      ranks: [...body.ranks],
      reason: body.ranks.length ? "" : body.reason || "none",
    };
    const key = `${rec.item_id}|${rec.annotator}`;
    const overwrote = this.index.has(key);
    this.index.set(key, rec);
    this.submissions.push(rec);
    return this.json({ ok: true, item_id: rec.item_id, overwrote });
  }

  stats() {
    const raters = [...new Set([...this.index.values()].map((r) => r.annotator))];
    const annotators: Record<string, unknown> = {};
    for (const rater of raters.sort()) {
      const mine = [...this.index.values()].filter((r) => r.annotator === rater);
      const total = mine.length;
      const counts = { 1: 0, 2: 0, 3: 0 } as Record<number, number>;
      const skipped: Record<string, number> = { none: 0, other: 0 };
      for (const r of mine) {
        if (r.ranks.length) counts[r.ranks.length] += 1;
        else skipped[r.reason] += 1;
      }
      annotators[rater] = {
        submitted: total,
        label_fractions: {
          "1": total ? counts[1] / total : 0,
          "2": total ? counts[2] / total : 0,
          "3": total ? counts[3] / total : 0,
        },
        skipped,
      };
    }
    return {
      mode: this.mode,
      items: this.items.length,
      annotators,
      insufficient_data: raters.length < 2,
      kappa: raters.length < 2 ? null : this.kappa,
      kappa_items: raters.length < 2 ? 0 : this.items.length,
      kappa_dropped: 0,
      pairwise: {},
    };
  }
}
