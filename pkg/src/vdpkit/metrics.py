"""Evaluation metrics: confusion matrices, per-class scores, top-k
accuracy, Fleiss' kappa, and match rates over ranked label tables."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidLabel, ShapeMismatch

NONE_LABEL = "none"
_MAX_RANKS = 3


# ---------------------------------------------------------------------------
# confusion matrices


@dataclass(frozen=True)
class ConfusionMatrix:
    """Count matrix with rows = predicted labels, columns = actual labels."""

    labels: tuple[str, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def display_counts(self) -> np.ndarray:
        """Transpose for tables that list actual labels down the side."""
        return self.counts.T.copy()


@dataclass(frozen=True)
class NormalizedConfusion:
    labels: tuple[str, ...]
    matrix: np.ndarray
    empty_actuals: tuple[str, ...]


def confusion(
    predictions: Sequence[str],
    actuals: Sequence[str],
    labels: Sequence[str] | None = None,
) -> ConfusionMatrix:
    """Tally predicted-vs-actual counts over a fixed label order."""
    if len(predictions) != len(actuals):
        raise ShapeMismatch(
            f"{len(predictions)} predictions vs {len(actuals)} actuals"
        )
    if labels is None:
        order = tuple(sorted(set(predictions) | set(actuals)))
    else:
        order = tuple(labels)
    index = {label: i for i, label in enumerate(order)}
    counts = np.zeros((len(order), len(order)), dtype=np.int64)
    for pred, act in zip(predictions, actuals):
        if pred not in index:
            raise InvalidLabel(f"prediction {pred!r} not in label order")
        if act not in index:
            raise InvalidLabel(f"actual {act!r} not in label order")
        counts[index[pred], index[act]] += 1
    return ConfusionMatrix(labels=order, counts=counts)


def normalize_columns(cm: ConfusionMatrix) -> NormalizedConfusion:
    """Scale each actual-label column to sum to 1; empty columns stay zero."""
    counts = cm.counts.astype(np.float64)
    sums = counts.sum(axis=0)
    empty = tuple(cm.labels[j] for j in range(len(cm.labels)) if sums[j] == 0)
    safe = np.where(sums == 0, 1.0, sums)
    return NormalizedConfusion(
        labels=cm.labels, matrix=counts / safe, empty_actuals=empty
    )


@dataclass(frozen=True)
class ClassReport:
    labels: tuple[str, ...]
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    undefined: tuple[str, ...]

    def as_dict(self) -> dict:
        per_class = {
            label: {
                "precision": self.precision[i],
                "recall": self.recall[i],
                "f1": self.f1[i],
            }
            for i, label in enumerate(self.labels)
        }
        return {
            "per_class": per_class,
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "undefined": list(self.undefined),
        }


def class_report(cm: ConfusionMatrix) -> ClassReport:
    """Per-class precision, recall, F1 plus unweighted macro averages.

    A 0/0 ratio scores 0 and the affected label/metric pair is listed in
    ``undefined`` rather than raising.
    """
    counts = cm.counts.astype(np.float64)
    predicted = counts.sum(axis=1)
    actual = counts.sum(axis=0)
    precision: list[float] = []
    recall: list[float] = []
    f1: list[float] = []
    undefined: list[str] = []
    for i, label in enumerate(cm.labels):
        tp = counts[i, i]
        if predicted[i] == 0:
            precision.append(0.0)
            undefined.append(f"{label}/precision")
        else:
            precision.append(float(tp / predicted[i]))
        if actual[i] == 0:
            recall.append(0.0)
            undefined.append(f"{label}/recall")
        else:
            recall.append(float(tp / actual[i]))
        if precision[-1] + recall[-1] == 0:
            f1.append(0.0)
            undefined.append(f"{label}/f1")
        else:
            p, r = precision[-1], recall[-1]
            f1.append(2 * p * r / (p + r))
    n = len(cm.labels)
    return ClassReport(
        labels=cm.labels,
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        macro_precision=sum(precision) / n,
        macro_recall=sum(recall) / n,
        macro_f1=sum(f1) / n,
        undefined=tuple(undefined),
    )


def topk_accuracy(
    ranked_predictions: Sequence[Sequence[str]],
    actuals: Sequence[str],
    k: int,
) -> float:
    """Fraction of items whose actual label is among the first k guesses."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(ranked_predictions) != len(actuals):
        raise ShapeMismatch(
            f"{len(ranked_predictions)} rankings vs {len(actuals)} actuals"
        )
    if not actuals:
        return 0.0
    hits = sum(
        1 for ranks, act in zip(ranked_predictions, actuals) if act in ranks[:k]
    )
    return hits / len(actuals)


# ---------------------------------------------------------------------------
# ranked rating tables


@dataclass(frozen=True)
class Rating:
    item_id: str
    domain: str
    rater: str
    ranks: tuple[str, ...]


class RatingTable:
    """Items x raters table of ranked labels.

    Each cell holds 0 to 3 distinct labels in preference order; an empty
    cell is an explicit "none of the labels apply" answer.  Adding a row
    for an existing (item, rater) pair replaces the earlier cell, so an
    append-only journal replays into the latest state.
    """

    def __init__(self) -> None:
        self._cells: dict[tuple[str, str], tuple[str, ...]] = {}
        self._domains: dict[str, str] = {}

    def add(
        self, item_id: str, rater: str, ranks: Sequence[str], domain: str = ""
    ) -> None:
        ranks = tuple(ranks)
        if len(ranks) > _MAX_RANKS:
            raise InvalidLabel(f"{len(ranks)} ranked labels, limit {_MAX_RANKS}")
        if len(set(ranks)) != len(ranks):
            raise InvalidLabel(f"duplicate label in ranks {ranks!r}")
        self._cells[(item_id, rater)] = ranks
        if domain:
            self._domains[item_id] = domain

    @property
    def raters(self) -> tuple[str, ...]:
        return tuple(sorted({rater for _, rater in self._cells}))

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(sorted({item for item, _ in self._cells}))

    def domain(self, item_id: str) -> str:
        return self._domains.get(item_id, "")

    def column(self, rater: str) -> dict[str, tuple[str, ...]]:
        return {
            item: ranks
            for (item, cell_rater), ranks in self._cells.items()
            if cell_rater == rater
        }

    def rows(self) -> list[Rating]:
        out = [
            Rating(item, self.domain(item), rater, ranks)
            for (item, rater), ranks in self._cells.items()
        ]
        out.sort(key=lambda r: (r.item_id, r.rater))
        return out

    def jsonl_lines(self) -> list[str]:
        return [
            json.dumps(
                {
                    "item_id": r.item_id,
                    "domain": r.domain,
                    "rater": r.rater,
                    "ranks": list(r.ranks),
                }
            )
            for r in self.rows()
        ]

    def to_jsonl(self, path: str | Path) -> None:
        lines = self.jsonl_lines()
        Path(path).write_text("".join(line + "\n" for line in lines))

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "RatingTable":
        table = cls()
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            table.add(
                row["item_id"],
                row["rater"],
                row["ranks"],
                domain=row.get("domain", ""),
            )
        return table


# ---------------------------------------------------------------------------
# agreement


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    items_used: int
    items_dropped: int
    categories: tuple[str, ...]


def _rank_label(ranks: tuple[str, ...], rank: int) -> str | None:
    """Label a cell contributes at a 1-based rank, or None if unrated.

    An empty cell is a deliberate first-rank answer, so at rank 1 it maps
    to the reserved "none" category; at deeper ranks a short cell simply
    has no rating.
    """
    if rank == 1:
        return ranks[0] if ranks else NONE_LABEL
    if len(ranks) >= rank:
        return ranks[rank - 1]
    return None


def fleiss_details(
    table: RatingTable, rank: int = 1, include_none: bool = True
) -> KappaResult:
    """Fleiss' kappa over one rank of the table, with drop accounting.

    Items not rated at ``rank`` by every rater are dropped so each kept
    item has the same rater count.  With ``include_none`` false, "none"
    answers also count as missing instead of forming their own category.
    """
    raters = table.raters
    if len(raters) < 2:
        raise ValueError("kappa needs at least 2 raters")
    if rank < 1 or rank > _MAX_RANKS:
        raise ValueError(f"rank must be 1..{_MAX_RANKS}")
    columns = {rater: table.column(rater) for rater in raters}
    kept: list[list[str]] = []
    dropped = 0
    for item in table.items:
        labels: list[str] = []
        complete = True
        for rater in raters:
            cell = columns[rater].get(item)
            label = None if cell is None else _rank_label(cell, rank)
            if label == NONE_LABEL and not include_none:
                label = None
            if label is None:
                complete = False
                break
            labels.append(label)
        if complete:
            kept.append(labels)
        else:
            dropped += 1
    categories = tuple(sorted({label for labels in kept for label in labels}))
    if not kept:
        return KappaResult(math.nan, 0, dropped, categories)
    cat_index = {c: i for i, c in enumerate(categories)}
    n_items = len(kept)
    n_raters = len(raters)
    counts = np.zeros((n_items, len(categories)), dtype=np.float64)
    for i, labels in enumerate(kept):
        for label in labels:
            counts[i, cat_index[label]] += 1
    p_item = (np.square(counts).sum(axis=1) - n_raters) / (
        n_raters * (n_raters - 1)
    )
    p_bar = float(p_item.mean())
    p_cat = counts.sum(axis=0) / (n_items * n_raters)
    p_expected = float(np.square(p_cat).sum())
    if p_expected >= 1.0:
        # every rating fell in one category: chance agreement saturates
        return KappaResult(math.nan, n_items, dropped, categories)
    kappa = (p_bar - p_expected) / (1.0 - p_expected)
    return KappaResult(kappa, n_items, dropped, categories)


def fleiss_kappa(
    table: RatingTable, rank: int = 1, include_none: bool = True
) -> float:
    return fleiss_details(table, rank=rank, include_none=include_none).kappa


# ---------------------------------------------------------------------------
# pairwise match rates


@dataclass(frozen=True)
class MatchRates:
    rank1: float
    rank2: float
    rank3: float
    any_single: float

    def as_dict(self) -> dict:
        return {
            "rank1": self.rank1,
            "rank2": self.rank2,
            "rank3": self.rank3,
            "any_single": self.any_single,
        }


def match_rates(
    a: Mapping[str, tuple[str, ...]], b: Mapping[str, tuple[str, ...]]
) -> MatchRates:
    """Agreement rates between two rater columns over the same items.

    rank_i counts items where both columns assigned an i-th label and the
    labels are equal; any_single counts items whose label sets intersect,
    so an empty cell never matches anything.
    """
    if set(a) != set(b):
        raise ShapeMismatch("rating columns cover different items")
    items = sorted(a)
    if not items:
        return MatchRates(0.0, 0.0, 0.0, 0.0)
    rank_hits = [0, 0, 0]
    any_hits = 0
    for item in items:
        ra, rb = a[item], b[item]
        for i in range(_MAX_RANKS):
            if len(ra) > i and len(rb) > i and ra[i] == rb[i]:
                rank_hits[i] += 1
        if set(ra) & set(rb):
            any_hits += 1
    n = len(items)
    return MatchRates(
        rank1=rank_hits[0] / n,
        rank2=rank_hits[1] / n,
        rank3=rank_hits[2] / n,
        any_single=any_hits / n,
    )


@dataclass(frozen=True)
class OracleAccuracy:
    overall: MatchRates
    by_domain: dict[str, MatchRates] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "overall": self.overall.as_dict(),
            "by_domain": {d: r.as_dict() for d, r in self.by_domain.items()},
        }


def oracle_accuracy(
    rater: Mapping[str, tuple[str, ...]],
    oracle: Mapping[str, tuple[str, ...]],
    domains: Mapping[str, str] | None = None,
) -> OracleAccuracy:
    """Match rates of a rater against a reference labeling.

    The oracle must label every item the rater saw.  When ``domains``
    maps item ids to tags, per-tag rates are reported alongside the
    overall numbers.
    """
    for item in rater:
        if item not in oracle or not oracle[item]:
            raise InvalidLabel(f"oracle has no label for item {item!r}")
    trimmed = {item: oracle[item] for item in rater}
    overall = match_rates(rater, trimmed)
    by_domain: dict[str, MatchRates] = {}
    if domains:
        tags = sorted({domains[i] for i in rater if domains.get(i)})
        for tag in tags:
            keep = [i for i in rater if domains.get(i) == tag]
            by_domain[tag] = match_rates(
                {i: rater[i] for i in keep}, {i: trimmed[i] for i in keep}
            )
    return OracleAccuracy(overall=overall, by_domain=by_domain)
