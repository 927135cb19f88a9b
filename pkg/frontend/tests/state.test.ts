import { describe, expect, it } from "vitest";

import { rankOf, toggleRank } from "../src/state.js";

describe("rank selection", () => {
  it("appends in click order", () => {
    let ranks = toggleRank([], "color", 3);
    ranks = toggleRank(ranks, "flowing", 3);
    ranks = toggleRank(ranks, "shape", 3);
    expect(ranks).toEqual(["color", "flowing", "shape"]);
  });

  it("deselects and renumbers the later picks", () => {
    const ranks = toggleRank(["color", "flowing", "shape"], "flowing", 3);
    expect(ranks).toEqual(["color", "shape"]);
    expect(rankOf(ranks, "shape")).toBe(2);
    expect(rankOf(ranks, "flowing")).toBe(0);
  });

  it("ignores a fourth distinct pick at the ranked limit", () => {
    const ranks = toggleRank(["color", "flowing", "shape"], "regular", 3);
    expect(ranks).toEqual(["color", "flowing", "shape"]);
  });

  it("holds one label at the single-mode limit", () => {
    const one = toggleRank([], "symmetric", 1);
    expect(one).toEqual(["symmetric"]);
    expect(toggleRank(one, "color", 1)).toEqual(["symmetric"]);
    expect(toggleRank(one, "symmetric", 1)).toEqual([]);
  });

  it("never mutates its input", () => {
    const before: ("color" | "shape")[] = ["color"];
    toggleRank(before, "shape", 3);
    toggleRank(before, "color", 3);
    expect(before).toEqual(["color"]);
  });
});
