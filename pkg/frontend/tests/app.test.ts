// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App, mount } from "../src/app.js";
import { FakeService } from "./fake_service.js";

const ITEMS = ["img_001", "img_002", "img_003"];

function setup(mode: "single" | "ranked" = "ranked", items = ITEMS) {
  const svc = new FakeService(items, mode);
  const root = document.createElement("div");
  document.body.append(root);
  const app = mount(root, new ApiClient("", svc.fetch), "tester");
  return { svc, root, app };
}

function classButton(root: HTMLElement, label: string): HTMLButtonElement {
  const btn = root.querySelector<HTMLButtonElement>(
    `button[data-label="${label}"]`,
  );
  if (!btn) throw new Error(`no button for ${label}`);
  return btn;
}

function badge(root: HTMLElement, label: string): HTMLElement {
  return classButton(root, label).querySelector<HTMLElement>(".rank-badge")!;
}

async function click(app: App, el: HTMLElement) {
  el.click();
  await app.whenIdle();
}

function key(root: HTMLElement, k: string) {
  root.dispatchEvent(new KeyboardEvent("keydown", { key: k, bubbles: true }));
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("screen layout", () => {
  it("renders nine class buttons grouped under the three principles", async () => {
    const { root, app } = setup();
    await app.start();
    const groups = root.querySelectorAll("fieldset.principle-group");
    expect(groups.length).toBe(3);
    const legends = [...groups].map(
      (g) => g.querySelector("legend")!.textContent,
    );
    expect(legends).toEqual(["emphasis", "balance", "rhythm"]);
    for (const g of groups) {
      expect(g.querySelectorAll("button.class-btn").length).toBe(3);
    }
    expect(classButton(root, "color").querySelector("kbd")!.textContent).toBe(
      "1",
    );
    expect(classButton(root, "flowing").querySelector("kbd")!.textContent).toBe(
      "9",
    );
  });

  it("shows the first task's image and identity line", async () => {
    const { root, app } = setup();
    await app.start();
    const img = root.querySelector<HTMLImageElement>("img.task-image")!;
    expect(img.getAttribute("src")).toBe("/api/image/img_001");
    expect(root.querySelector(".item-line")!.textContent).toContain("img_001");
    expect(root.querySelector(".item-line")!.textContent).toContain("SDV1");
  });
});

describe("ranked selection", () => {
  it("badges picks 1-3 in click order", async () => {
    const { root, app } = setup();
    await app.start();
    await click(app, classButton(root, "shape"));
    await click(app, classButton(root, "color"));
    await click(app, classButton(root, "flowing"));
    expect(badge(root, "shape").textContent).toBe("1");
    expect(badge(root, "color").textContent).toBe("2");
    expect(badge(root, "flowing").textContent).toBe("3");
    expect(classButton(root, "shape").classList.contains("selected")).toBe(true);
  });

  it("deselecting renumbers the later ranks", async () => {
    const { root, app } = setup();
    await app.start();
    await click(app, classButton(root, "shape"));
    await click(app, classButton(root, "color"));
    await click(app, classButton(root, "flowing"));
    await click(app, classButton(root, "color"));
    expect(badge(root, "shape").textContent).toBe("1");
    expect(badge(root, "flowing").textContent).toBe("2");
    expect(badge(root, "color").hidden).toBe(true);
  });

  it("ignores a fourth pick", async () => {
    const { root, app } = setup();
    await app.start();
    for (const label of ["shape", "color", "flowing", "regular"]) {
      await click(app, classButton(root, label));
    }
    expect(badge(root, "regular").hidden).toBe(true);
    expect(app.ranks.length).toBe(3);
  });

  it("submits ranks in click order and advances", async () => {
    const { svc, root, app } = setup();
    await app.start();
    await click(app, classButton(root, "symmetric"));
    await click(app, classButton(root, "color"));
    const submit = root.querySelector<HTMLButtonElement>(".submit-btn")!;
    expect(submit.disabled).toBe(false);
    await click(app, submit);
    expect(svc.submissions).toHaveLength(1);
    expect(svc.submissions[0]).toMatchObject({
      item_id: "img_001",
      annotator: "tester",
      ranks: ["symmetric", "color"],
    });
    expect(root.querySelector(".item-line")!.textContent).toContain("img_002");
    expect(app.ranks).toEqual([]);
    expect(submit.disabled).toBe(true);
  });

  it("keeps the submit button disabled with nothing selected", async () => {
    const { svc, root, app } = setup();
    await app.start();
    const submit = root.querySelector<HTMLButtonElement>(".submit-btn")!;
    expect(submit.disabled).toBe(true);
    await click(app, submit);
    expect(svc.submissions).toHaveLength(0);
  });
});

describe("single mode", () => {
  it("auto-submits on a class click and advances", async () => {
    const { svc, root, app } = setup("single");
    await app.start();
    await click(app, classButton(root, "progressive"));
    expect(svc.submissions).toEqual([
      {
        item_id: "img_001",
        annotator: "tester",
        ranks: ["progressive"],
        reason: "",
      },
    ]);
    expect(root.querySelector(".item-line")!.textContent).toContain("img_002");
  });

  it("hides the ranked-mode submit and clear buttons", async () => {
    const { root, app } = setup("single");
    await app.start();
    expect(root.querySelector<HTMLElement>(".submit-btn")!.hidden).toBe(true);
    expect(root.querySelector<HTMLElement>(".clear-btn")!.hidden).toBe(true);
  });
});

describe("other/none and keyboard", () => {
  it("skip posts an empty rank list with the other tag", async () => {
    const { svc, root, app } = setup();
    await app.start();
    await click(app, root.querySelector<HTMLButtonElement>(".skip-btn")!);
    expect(svc.submissions[0]).toMatchObject({ ranks: [], reason: "other" });
  });

  it("digits toggle, 0 skips, Enter submits", async () => {
    const { svc, root, app } = setup();
    await app.start();
    key(root, "1");
    await app.whenIdle();
    key(root, "9");
    await app.whenIdle();
    expect(badge(root, "color").textContent).toBe("1");
    expect(badge(root, "flowing").textContent).toBe("2");
    key(root, "Enter");
    await app.whenIdle();
    expect(svc.submissions[0].ranks).toEqual(["color", "flowing"]);
    key(root, "0");
    await app.whenIdle();
    expect(svc.submissions[1]).toMatchObject({
      item_id: "img_002",
      ranks: [],
      reason: "other",
    });
  });
});

describe("progress and completion", () => {
  it("tracks submitted over total from the service", async () => {
    const { root, app } = setup();
    await app.start();
    expect(root.querySelector(".progress-text")!.textContent).toBe("0 / 3");
    await click(app, classButton(root, "color"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    expect(root.querySelector(".progress-text")!.textContent).toBe("1 / 3");
  });

  it("shows the done pane after the last item", async () => {
    const { root, app } = setup("ranked", ["only_one"]);
    await app.start();
    await click(app, classButton(root, "color"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    expect(root.querySelector<HTMLElement>(".task-pane")!.hidden).toBe(true);
    expect(root.querySelector<HTMLElement>(".done-pane")!.hidden).toBe(false);
    expect(root.querySelector(".progress-text")!.textContent).toBe("1 / 1");
  });
});

describe("stats panel", () => {
  it("renders fractions and kappa exactly as the service reports them", async () => {
    const { svc, root, app } = setup();
    svc.kappa = 0.3612345678;
    await app.start();
    await click(app, classButton(root, "color"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    // a second rater makes kappa reportable
    const other = new ApiClient("", svc.fetch);
    await other.next("peer");
    await other.submit({
      item_id: "img_001",
      annotator: "peer",
      ranks: ["color", "shape"],
      mode: "ranked",
    });
    await click(app, classButton(root, "shape"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);

    const card = root.querySelector<HTMLElement>(
      '.annotator-card[data-annotator="tester"]',
    )!;
    const rows = card.querySelectorAll<HTMLElement>(".dist-row");
    expect(rows[0].dataset.fraction).toBe("1"); // both submissions 1-label
    expect(rows[1].dataset.fraction).toBe("0");
    expect(rows[2].dataset.fraction).toBe("0");
    const kappa = root.querySelector<HTMLElement>(".kappa")!;
    expect(kappa.dataset.kappa).toBe("0.3612345678");
    expect(kappa.textContent).toContain("0.3612");
  });

  it("reports insufficient data with a single rater", async () => {
    const { root, app } = setup();
    await app.start();
    await click(app, classButton(root, "color"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    expect(root.querySelector(".kappa")!.textContent).toContain(
      "at least two annotators",
    );
  });
});

describe("failure handling", () => {
  it("shows the offline banner when stats are unreachable, then recovers", async () => {
    const { svc, root, app } = setup();
    await app.start();
    svc.failStats = true;
    await click(app, classButton(root, "color"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    const banner = root.querySelector<HTMLElement>(".offline-banner")!;
    expect(banner.hidden).toBe(false);
    expect(svc.submissions).toHaveLength(1); // the annotation still landed
    svc.failStats = false;
    await click(app, classButton(root, "shape"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    expect(banner.hidden).toBe(true);
  });

  it("surfaces a validation error and stays on the task", async () => {
    const { svc, root, app } = setup();
    await app.start();
    svc.mode = "single"; // the service now rejects ranked submissions
    await click(app, classButton(root, "color"));
    await click(app, root.querySelector<HTMLButtonElement>(".submit-btn")!);
    const bannerText = root.querySelector(".error-banner")!.textContent!;
    expect(bannerText).toContain("invalid-annotation");
    expect(root.querySelector(".item-line")!.textContent).toContain("img_001");
    expect(svc.submissions).toHaveLength(0);
  });

  it("offers a retry that reloads the image", async () => {
    const { root, app } = setup();
    await app.start();
    const img = root.querySelector<HTMLImageElement>("img.task-image")!;
    img.dispatchEvent(new Event("error"));
    const pane = root.querySelector<HTMLElement>(".image-error")!;
    expect(pane.hidden).toBe(false);
    await click(app, pane.querySelector<HTMLButtonElement>(".retry")!);
    expect(pane.hidden).toBe(true);
    expect(img.getAttribute("src")).toContain("/api/image/img_001?retry=");
  });
});
