import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { FakeService } from "./fake_service.js";

describe("api client", () => {
  it("fetches the next task with the annotator encoded", async () => {
    const svc = new FakeService(["item_a"]);
    const api = new ApiClient("", svc.fetch);
    const res = await api.next("rater one");
    expect(res).toMatchObject({ done: false, item_id: "item_a" });
    expect(svc.requests[0].url).toBe("/api/next?annotator=rater%20one");
  });

  it("posts annotations as JSON and decodes the ack", async () => {
    const svc = new FakeService(["item_a"]);
    const api = new ApiClient("", svc.fetch);
    const ack = await api.submit({
      item_id: "item_a",
      annotator: "r1",
      ranks: ["color", "shape"],
      mode: "ranked",
    });
    expect(ack).toEqual({ ok: true, item_id: "item_a", overwrote: false });
    expect(svc.submissions[0].ranks).toEqual(["color", "shape"]);
  });

  it("raises ApiError with the server's code on validation failure", async () => {
    const svc = new FakeService(["item_a"]);
    const api = new ApiClient("", svc.fetch);
    const bad = api.submit({
      item_id: "item_a",
      annotator: "r1",
      ranks: ["color", "color"],
      mode: "ranked",
    });
    await expect(bad).rejects.toThrowError(ApiError);
    await expect(bad).rejects.toMatchObject({
      code: "invalid-annotation",
      status: 422,
    });
  });

  it("prefixes every route with the configured base", async () => {
    const svc = new FakeService(["item_a"]);
    const seen: string[] = [];
    const spy: typeof fetch = (input, init) => {
      seen.push(String(input));
      return svc.fetch(String(input).replace("http://h:9", ""), init);
    };
    const api = new ApiClient("http://h:9", spy);
    await api.stats();
    expect(seen).toEqual(["http://h:9/api/stats"]);
    expect(api.imageUrl("/api/image/x")).toBe("http://h:9/api/image/x");
  });

  it("wraps a non-JSON failure body as a plain http error", async () => {
    const broken: typeof fetch = async () =>
      ({
        ok: false,
        status: 502,
        json: async () => {
          throw new SyntaxError("not json");
        },
      }) as Response;
    const api = new ApiClient("", broken);
    await expect(api.stats()).rejects.toMatchObject({
      code: "http-error",
      status: 502,
    });
  });
});
