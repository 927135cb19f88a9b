/**
 * Annotation screen: image pane, nine class buttons grouped under the
 * three principles, other/none, progress bar, and a live agreement
 * panel.  All numbers shown come from the service; the client does no
 * metric arithmetic of its own.
 *
 * Digit keys 1-9 toggle the classes in taxonomy order, 0 is other/none,
 * Enter submits in ranked mode.  A submit advances only after the
 * server acknowledges it.
 */
import { ApiError } from "./api.js";
import { RANK_LIMIT, rankOf, toggleRank } from "./state.js";
import { CLASSES, labelForKey, PRINCIPLES } from "./taxonomy.js";
function el(tag, className = "", text = "") {
    const node = document.createElement(tag);
    if (className)
        node.className = className;
    if (text)
        node.textContent = text;
    return node;
}
export class App {
    constructor(root, api, annotator) {
        this.task = null;
        this.done = false;
        this.ranks = [];
        this.stats = null;
        this.busy = false;
        this.pending = Promise.resolve();
        this.classButtons = new Map();
        this.root = root;
        this.api = api;
        this.annotator = annotator;
        this.build();
        this.root.addEventListener("keydown", (e) => this.onKey(e));
    }
    /** Fetch the first task and stats; resolves when the screen is live. */
    start() {
        return this.enqueue(async () => {
            await this.advance();
            await this.refreshStats();
        });
    }
    /** Resolves once every queued action has settled; for scripts/tests. */
    whenIdle() {
        return this.pending;
    }
    // -- actions --------------------------------------------------------------
    toggle(label) {
        return this.enqueue(async () => {
            if (!this.task)
                return;
            if (this.task.mode === "single") {
                await this.post([label], "");
                return;
            }
            this.ranks = toggleRank(this.ranks, label, RANK_LIMIT.ranked);
            this.update();
        });
    }
    submitRanks() {
        return this.enqueue(async () => {
            if (!this.task || this.ranks.length === 0)
                return;
            await this.post(this.ranks, "");
        });
    }
    /** Other/none: an empty rank list tagged with why. */
    skip(reason = "other") {
        return this.enqueue(async () => {
            if (!this.task)
                return;
            await this.post([], reason);
        });
    }
    clearRanks() {
        return this.enqueue(async () => {
            this.ranks = [];
            this.update();
        });
    }
    // -- internals ------------------------------------------------------------
    /** Run one action at a time; drop input that arrives mid-flight. */
    enqueue(fn) {
        if (this.busy)
            return this.pending;
        this.busy = true;
        this.pending = fn().finally(() => {
            this.busy = false;
        });
        return this.pending;
    }
    async post(ranks, reason) {
        if (!this.task)
            return;
        try {
            await this.api.submit({
                item_id: this.task.item_id,
                annotator: this.annotator,
                ranks,
                mode: this.task.mode,
                reason,
            });
        }
        catch (err) {
            this.showError(err);
            return;
        }
        this.errorBanner.hidden = true;
        await this.advance();
        await this.refreshStats();
    }
    async advance() {
        let res;
        try {
            res = await this.api.next(this.annotator);
        }
        catch (err) {
            this.showError(err);
            return;
        }
        this.ranks = [];
        if (res.done) {
            this.task = null;
            this.done = true;
        }
        else {
            this.task = res;
            this.img.src = this.api.imageUrl(res.image_url);
            this.imageError.hidden = true;
        }
        this.update();
    }
    async refreshStats() {
        try {
            this.stats = await this.api.stats();
            this.offlineBanner.hidden = true;
        }
        catch {
            this.offlineBanner.hidden = false;
            return;
        }
        this.renderStats();
        this.update();
    }
    showError(err) {
        const msg = err instanceof ApiError
            ? `${err.code}: ${err.message}`
            : "request failed; check the connection";
        this.errorBanner.textContent = msg;
        this.errorBanner.hidden = false;
    }
    // -- DOM ------------------------------------------------------------------
    build() {
        this.root.innerHTML = "";
        this.root.classList.add("app");
        this.root.tabIndex = -1; // so key events land here in tests too
        const header = el("header");
        header.append(el("h1", "", "composition annotation"));
        const who = el("span", "who");
        who.append("annotator ", el("b", "", this.annotator));
        header.append(who);
        const progress = el("div", "progress");
        this.progressBar = el("div", "progress-bar");
        this.progressText = el("span", "progress-text", "");
        progress.append(this.progressBar, this.progressText);
        header.append(progress);
        this.root.append(header);
        const main = el("main");
        this.taskPane = el("section", "task-pane");
        const imagePane = el("div", "image-pane");
        this.img = el("img", "task-image");
        this.img.alt = "composition to annotate";
        this.img.addEventListener("error", () => {
            this.imageError.hidden = false;
        });
        this.imageError = el("div", "image-error");
        this.imageError.hidden = true;
        this.imageError.append(el("span", "", "image failed to load "));
        const retry = el("button", "retry", "retry");
        retry.addEventListener("click", () => {
            if (!this.task)
                return;
            this.imageError.hidden = true;
            this.img.src =
                this.api.imageUrl(this.task.image_url) + `?retry=${Date.now()}`;
        });
        this.imageError.append(retry);
        this.itemLine = el("div", "item-line");
        imagePane.append(this.img, this.imageError, this.itemLine);
        this.taskPane.append(imagePane);
        const classes = el("div", "classes");
        for (const principle of PRINCIPLES) {
            const group = el("fieldset", "principle-group");
            group.append(el("legend", "", principle));
            for (const info of CLASSES.filter((c) => c.principle === principle)) {
                const btn = el("button", "class-btn");
                btn.dataset.label = info.label;
                btn.append(el("kbd", "", info.key), el("span", "", info.label));
                const badge = el("i", "rank-badge");
                badge.hidden = true;
                btn.append(badge);
                btn.addEventListener("click", () => void this.toggle(info.label));
                this.classButtons.set(info.label, btn);
                group.append(btn);
            }
            classes.append(group);
        }
        this.taskPane.append(classes);
        const actions = el("div", "actions");
        this.skipButton = el("button", "skip-btn");
        this.skipButton.append(el("kbd", "", "0"), el("span", "", "other / none"));
        this.skipButton.addEventListener("click", () => void this.skip());
        this.submitButton = el("button", "submit-btn", "submit");
        this.submitButton.addEventListener("click", () => void this.submitRanks());
        this.clearButton = el("button", "clear-btn", "clear");
        this.clearButton.addEventListener("click", () => void this.clearRanks());
        actions.append(this.skipButton, this.submitButton, this.clearButton);
        this.taskPane.append(actions);
        this.errorBanner = el("div", "error-banner");
        this.errorBanner.hidden = true;
        this.taskPane.append(this.errorBanner);
        this.donePane = el("section", "done-pane");
        this.donePane.append(el("h2", "", "all items annotated"));
        this.donePane.append(el("p", "", "every image in the corpus has your label; thank you"));
        this.donePane.hidden = true;
        this.statsPane = el("aside", "stats-pane");
        this.offlineBanner = el("div", "offline-banner", "stats unavailable; the service is not reachable");
        this.offlineBanner.hidden = true;
        this.statsPane.append(el("h2", "", "agreement"), this.offlineBanner);
        main.append(this.taskPane, this.donePane, this.statsPane);
        this.root.append(main);
    }
    /** Sync the task side of the screen with current state. */
    update() {
        const t = this.task;
        this.taskPane.hidden = this.done;
        this.donePane.hidden = !this.done;
        if (t) {
            this.itemLine.textContent = `${t.domain} · ${t.item_id}`;
            const inRanked = t.mode === "ranked";
            this.submitButton.hidden = !inRanked;
            this.clearButton.hidden = !inRanked;
            this.submitButton.disabled = this.ranks.length === 0;
            this.clearButton.disabled = this.ranks.length === 0;
        }
        for (const [label, btn] of this.classButtons) {
            const rank = rankOf(this.ranks, label);
            const badge = btn.querySelector(".rank-badge");
            btn.classList.toggle("selected", rank > 0);
            badge.hidden = rank === 0;
            badge.textContent = rank > 0 ? String(rank) : "";
        }
        const total = this.stats?.items ?? 0;
        if (t && total > 0) {
            const doneCount = total - t.remaining;
            this.progressBar.style.width = `${(100 * doneCount) / total}%`;
            this.progressText.textContent = `${doneCount} / ${total}`;
        }
        else if (this.done && total > 0) {
            this.progressBar.style.width = "100%";
            this.progressText.textContent = `${total} / ${total}`;
        }
    }
    /** Rebuild the agreement panel from the latest stats snapshot. */
    renderStats() {
        const s = this.stats;
        this.statsPane.innerHTML = "";
        this.statsPane.append(el("h2", "", "agreement"), this.offlineBanner);
        if (!s)
            return;
        const kappa = el("div", "kappa");
        if (s.insufficient_data || s.kappa === null) {
            kappa.textContent = "kappa needs at least two annotators";
            kappa.dataset.kappa = "";
        }
        else {
            kappa.dataset.kappa = String(s.kappa);
            kappa.append(el("span", "kappa-value", s.kappa.toFixed(4)), el("span", "kappa-n", ` over ${s.kappa_items} co-rated items`));
        }
        this.statsPane.append(kappa);
        for (const [name, a] of Object.entries(s.annotators)) {
            const card = el("div", "annotator-card");
            card.dataset.annotator = name;
            card.append(el("h3", "", name));
            card.append(el("div", "submitted", `${a.submitted} submitted`));
            const dist = el("div", "label-dist");
            for (const n of ["1", "2", "3"]) {
                const frac = a.label_fractions[n];
                const row = el("div", "dist-row");
                row.dataset.labels = n;
                row.dataset.fraction = String(frac);
                const bar = el("div", "dist-bar");
                bar.style.width = `${100 * frac}%`;
                row.append(el("span", "dist-name", `${n}-label`), bar, el("span", "dist-pct", `${(100 * frac).toFixed(1)}%`));
                dist.append(row);
            }
            card.append(dist);
            const skips = Object.entries(a.skipped)
                .filter(([, count]) => count > 0)
                .map(([why, count]) => `${why} ${count}`)
                .join(", ");
            if (skips)
                card.append(el("div", "skipped", `skipped: ${skips}`));
            this.statsPane.append(card);
        }
        const pairs = Object.entries(s.pairwise);
        if (pairs.length > 0) {
            const list = el("div", "pairwise");
            list.append(el("h3", "", "pairwise match rates"));
            for (const [pair, r] of pairs) {
                const row = el("div", "pair-row");
                row.dataset.pair = pair;
                row.textContent =
                    `${pair.replace("|", " vs ")}: rank-1 ${(100 * r.rank1).toFixed(0)}%` +
                        `, any ${(100 * r.any_single).toFixed(0)}% on ${r.items} items`;
                list.append(row);
            }
            this.statsPane.append(list);
        }
    }
    onKey(e) {
        if (e.target instanceof HTMLInputElement)
            return;
        if (this.done || !this.task)
            return;
        if (e.key === "0") {
            e.preventDefault();
            void this.skip();
            return;
        }
        if (e.key === "Enter" && this.task.mode === "ranked") {
            e.preventDefault();
            void this.submitRanks();
            return;
        }
        const label = labelForKey(e.key);
        if (label) {
            e.preventDefault();
            void this.toggle(label);
        }
    }
}
export function mount(root, api, annotator) {
    return new App(root, api, annotator);
}
