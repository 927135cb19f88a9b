"""HTTP annotation service: hands out corpus images in a per-annotator
order, persists ranked labels to an append-only journal, and reports
live agreement computed by the metrics module.

Every write is flushed and fsynced before the request is acknowledged,
and the journal is replayed on startup, so a crash loses at most an
unacknowledged record.  Resubmitting an (item, annotator) pair replaces
the visible cell while the journal keeps the full audit trail.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from .composition import CLASS_LABELS
from .dataset import read_manifest, resolve_path
from .errors import (
    InvalidAnnotation,
    InvalidLabel,
    UnknownAnnotator,
    UnknownItem,
    VdpError,
)
from .metrics import RatingTable, fleiss_details, match_rates

MODES = ("single", "ranked")
SKIP_REASONS = ("none", "other")
_RANK_LIMIT = {"single": 1, "ranked": 3}


class AnnotationIn(BaseModel):
    """POST /api/annotation body; the server stamps the timestamp."""

    item_id: str
    annotator: str
    ranks: list[str] = []
    mode: str
    reason: str = ""


def _order_seed(base: int, annotator: str) -> int:
    """Stable per-annotator shuffle seed; independent of interpreter hash."""
    digest = hashlib.blake2s(f"{base}|{annotator}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class AnnotationService:
    """Corpus state, journal, and stats; the HTTP app is a shell over this."""

    def __init__(
        self,
        manifest_path: str | Path,
        journal_path: str | Path,
        mode: str = "ranked",
        order_seed: int = 0,
        labels: tuple[str, ...] = CLASS_LABELS,
    ) -> None:
        if mode not in MODES:
            raise VdpError(f"mode must be one of {MODES}, got {mode!r}")
        self.mode = mode
        self.labels = tuple(labels)
        self.order_seed = order_seed
        self.manifest_path = Path(manifest_path)
        self.journal_path = Path(journal_path)
        self._lock = threading.Lock()
        self._entries = {}
        self._item_ids: list[str] = []
        for entry in read_manifest(self.manifest_path):
            item_id = Path(entry.path).stem
            if item_id in self._entries:
                raise VdpError(f"duplicate item id {item_id!r} in manifest")
            self._entries[item_id] = entry
            self._item_ids.append(item_id)
        self._annotators: set[str] = set()
        self._index: dict[tuple[str, str], dict] = {}
        self._replay()
        self.journal_path.parent.mkdir(parents=True, exist_ok=True)
        self._journal = open(self.journal_path, "a", encoding="utf-8")

    # -- journal ------------------------------------------------------------

    def _replay(self) -> None:
        if not self.journal_path.exists():
            return
        for line in self.journal_path.read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            if rec["kind"] == "register":
                self._annotators.add(rec["annotator"])
            elif rec["kind"] == "annotation":
                self._annotators.add(rec["annotator"])
                self._index[(rec["item_id"], rec["annotator"])] = rec

    def _append(self, rec: dict) -> None:
        self._journal.write(json.dumps(rec, sort_keys=True) + "\n")
        self._journal.flush()
        os.fsync(self._journal.fileno())

    def close(self) -> None:
        self._journal.close()

    # -- task flow ----------------------------------------------------------

    def _order(self, annotator: str) -> list[str]:
        rng = np.random.default_rng(_order_seed(self.order_seed, annotator))
        perm = rng.permutation(len(self._item_ids))
        return [self._item_ids[i] for i in perm]

    def register(self, annotator: str) -> None:
        if not annotator:
            raise UnknownAnnotator("annotator id must be non-empty")
        with self._lock:
            if annotator not in self._annotators:
                self._append(
                    {"kind": "register", "annotator": annotator, "ts": time.time()}
                )
                self._annotators.add(annotator)

    def next_task(self, annotator: str) -> dict | None:
        """First unsubmitted item in this annotator's shuffle, or None.

        First contact registers the annotator; the same task is returned
        until it is submitted.
        """
        self.register(annotator)
        with self._lock:
            done = {i for (i, a) in self._index if a == annotator}
            for item_id in self._order(annotator):
                if item_id not in done:
                    entry = self._entries[item_id]
                    return {
                        "item_id": item_id,
                        "image_url": f"/api/image/{item_id}",
                        "domain": entry.domain,
                        "mode": self.mode,
                        "remaining": len(self._item_ids) - len(done),
                    }
        return None

    def submit(
        self,
        annotator: str,
        item_id: str,
        ranks: list[str],
        mode: str,
        reason: str = "",
    ) -> dict:
        if annotator not in self._annotators:
            raise UnknownAnnotator(f"annotator {annotator!r} never requested a task")
        if item_id not in self._entries:
            raise UnknownItem(f"item {item_id!r} not in corpus")
        if mode != self.mode:
            raise InvalidAnnotation(
                f"service runs in {self.mode!r} mode, record says {mode!r}"
            )
        ranks = list(ranks)
        if len(ranks) > _RANK_LIMIT[mode]:
            raise InvalidAnnotation(
                f"{len(ranks)} ranks exceeds {mode} mode limit {_RANK_LIMIT[mode]}"
            )
        if len(set(ranks)) != len(ranks):
            raise InvalidAnnotation(f"duplicate labels in ranks {ranks}")
        for label in ranks:
            if label not in self.labels:
                raise InvalidLabel(f"unknown label {label!r}")
        if ranks:
            if reason:
                raise InvalidAnnotation("reason is only valid for empty ranks")
        else:
            reason = reason or "none"
            if reason not in SKIP_REASONS:
                raise InvalidAnnotation(
                    f"empty ranks need a reason in {SKIP_REASONS}"
                )
        rec = {
            "kind": "annotation",
            "ts": time.time(),
            "item_id": item_id,
            "annotator": annotator,
            "ranks": ranks,
            "mode": mode,
            "reason": reason,
        }
        with self._lock:
            overwrote = (item_id, annotator) in self._index
            self._append(rec)
            self._index[(item_id, annotator)] = rec
        return {"ok": True, "item_id": item_id, "overwrote": overwrote}

    # -- reporting ----------------------------------------------------------

    def image_path(self, item_id: str) -> Path:
        if item_id not in self._entries:
            raise UnknownItem(f"item {item_id!r} not in corpus")
        return resolve_path(self.manifest_path, self._entries[item_id])

    def export_table(self) -> RatingTable:
        table = RatingTable()
        with self._lock:
            records = list(self._index.values())
        for rec in records:
            table.add(
                rec["item_id"],
                rec["annotator"],
                rec["ranks"],
                domain=self._entries[rec["item_id"]].domain,
            )
        return table

    def stats(self) -> dict:
        """Per-annotator tallies plus agreement over the current table.

        Kappa covers items rated by every annotator who has submitted at
        least once; a skip counts as the "none" category at rank 1.
        """
        table = self.export_table()
        raters = table.raters
        with self._lock:
            records = list(self._index.values())
        per_annotator: dict[str, dict] = {}
        for rater in sorted(self._annotators):
            column = table.column(rater)
            total = len(column)
            label_counts = {1: 0, 2: 0, 3: 0}
            reasons = {r: 0 for r in SKIP_REASONS}
            for ranks in column.values():
                if ranks:
                    label_counts[len(ranks)] += 1
            for rec in records:
                if rec["annotator"] == rater and not rec["ranks"]:
                    reasons[rec["reason"]] += 1
            per_annotator[rater] = {
                "submitted": total,
                "label_fractions": {
                    str(k): (label_counts[k] / total if total else 0.0)
                    for k in (1, 2, 3)
                },
                "skipped": reasons,
            }
        insufficient = len(raters) < 2
        out: dict = {
            "mode": self.mode,
            "items": len(self._item_ids),
            "annotators": per_annotator,
            "insufficient_data": insufficient,
            "kappa": None,
            "kappa_items": 0,
            "kappa_dropped": 0,
            "pairwise": {},
        }
        if not insufficient:
            res = fleiss_details(table, rank=1)
            out["kappa"] = None if math.isnan(res.kappa) else res.kappa
            out["kappa_items"] = res.items_used
            out["kappa_dropped"] = res.items_dropped
            for i, a in enumerate(raters):
                col_a = table.column(a)
                for b in raters[i + 1 :]:
                    col_b = table.column(b)
                    common = sorted(set(col_a) & set(col_b))
                    rates = match_rates(
                        {k: col_a[k] for k in common},
                        {k: col_b[k] for k in common},
                    )
                    out["pairwise"][f"{a}|{b}"] = dict(
                        rates.as_dict(), items=len(common)
                    )
        return out


def create_app(
    manifest_path: str | Path,
    journal_path: str | Path,
    mode: str = "ranked",
    order_seed: int = 0,
    static_dir: str | Path | None = None,
):
    """FastAPI wrapper exposing the annotation API (and optional UI files)."""
    from fastapi import FastAPI
    from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

    service = AnnotationService(
        manifest_path, journal_path, mode=mode, order_seed=order_seed
    )
    app = FastAPI(title="vdp annotation service")
    app.state.service = service

    @app.exception_handler(VdpError)
    async def _vdp_error(request, exc: VdpError):
        status = 404 if exc.code in ("unknown-annotator", "unknown-item") else 422
        return JSONResponse(status_code=status, content=exc.to_json())

    @app.get("/api/next")
    def api_next(annotator: str):
        task = service.next_task(annotator)
        if task is None:
            return {"done": True}
        return dict(task, done=False)

    @app.post("/api/annotation")
    def api_annotation(body: AnnotationIn):
        return service.submit(
            body.annotator, body.item_id, body.ranks, body.mode, body.reason
        )

    @app.get("/api/stats")
    def api_stats():
        return service.stats()

    @app.get("/api/image/{item_id}")
    def api_image(item_id: str):
        return FileResponse(service.image_path(item_id), media_type="image/png")

    @app.get("/api/export")
    def api_export():
        lines = service.export_table().jsonl_lines()
        text = "".join(line + "\n" for line in lines)
        return PlainTextResponse(text, media_type="application/x-ndjson")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True))
    return app
