import { describe, expect, it } from "vitest";

import { CLASSES, CLASS_LABELS, labelForKey, PRINCIPLES } from "../src/taxonomy.js";

describe("taxonomy", () => {
  it("lists the nine classes in fixed order", () => {
    expect(CLASS_LABELS).toEqual([
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
  });

  it("groups three classes under each principle in order", () => {
    expect(PRINCIPLES).toEqual(["emphasis", "balance", "rhythm"]);
    expect(CLASSES.map((c) => c.principle)).toEqual([
      ...Array(3).fill("emphasis"),
      ...Array(3).fill("balance"),
      ...Array(3).fill("rhythm"),
    ]);
  });

  it("maps digits 1-9 onto the taxonomy order", () => {
    for (let i = 0; i < 9; i++) {
      expect(labelForKey(String(i + 1))).toBe(CLASS_LABELS[i]);
      expect(CLASSES[i].key).toBe(String(i + 1));
    }
  });

  it("rejects anything that is not a single digit 1-9", () => {
    for (const key of ["0", "a", "10", "", " ", "-1", "Enter"]) {
      expect(labelForKey(key)).toBeNull();
    }
  });
});
