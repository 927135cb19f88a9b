"""Dataset manifests, stratified splits, and training-balance schemes.

A manifest is a JSONL file, one entry per image. Entries carry the class
label, the generating rule, a domain tag (image source), the split, and the
per-sample seed. Manifest paths are stored relative to the manifest file's
own directory so corpora can be moved around freely.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientData, VdpError

SPLITS = ("train", "val", "test")

# Labels grouped into the three top-level principles, used by the model5
# scheme and by principle-level training runs.
PRINCIPLE_OF_LABEL = {
    "color": "emphasis", "isolation": "emphasis", "shape": "emphasis",
    "symmetric": "balance", "asymmetric": "balance",
    "crystallographic": "balance",
    "regular": "rhythm", "progressive": "rhythm", "flowing": "rhythm",
}

SCHEMES = ("model1", "model2", "model3", "model4", "model5")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    rule_id: int
    domain: str
    split: str
    seed: int

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(d: dict) -> "ManifestEntry":
        return ManifestEntry(path=str(d["path"]), label=str(d["label"]),
                             rule_id=int(d["rule_id"]), domain=str(d["domain"]),
                             split=str(d["split"]), seed=int(d["seed"]))


def write_manifest(entries: list[ManifestEntry], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for e in entries:
            fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    out = []
    with open(path) as fh:
        for li, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(ManifestEntry.from_json(json.loads(line)))
            except (KeyError, ValueError, TypeError) as exc:
                raise VdpError(f"bad manifest line {li + 1} in {path}: {exc}")
    return out


def resolve_path(manifest_path: str | Path, entry: ManifestEntry) -> Path:
    """Absolute image path for an entry of the given manifest file."""
    p = Path(entry.path)
    return p if p.is_absolute() else Path(manifest_path).parent / p


def _by_key(entries, key):
    groups: dict = {}
    for e in entries:
        groups.setdefault(key(e), []).append(e)
    return groups


def _shuffled(group: list[ManifestEntry], rng: np.random.Generator):
    """Deterministic order regardless of input order: sort, then shuffle."""
    g = sorted(group, key=lambda e: (e.path, e.seed))
    perm = rng.permutation(len(g))
    return [g[i] for i in perm]


def split(entries: list[ManifestEntry], train_fraction: float,
          seed: int = 0) -> tuple[list[ManifestEntry], list[ManifestEntry]]:
    """Stratified train/val split, per-label counts within one of exact.

    Single-item labels land in train. Returns (train, val) with entries'
    split fields rewritten.
    """
    if not 0.0 < train_fraction <= 1.0:
        raise VdpError(f"train_fraction {train_fraction} outside (0, 1]")
    train: list[ManifestEntry] = []
    val: list[ManifestEntry] = []
    groups = _by_key(entries, lambda e: e.label)
    for gi, label in enumerate(sorted(groups)):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 101, gi]))
        g = _shuffled(groups[label], rng)
        n_train = int(round(len(g) * train_fraction))
        n_train = min(max(n_train, 1), len(g))
        for i, e in enumerate(g):
            tgt = "train" if i < n_train else "val"
            (train if i < n_train else val).append(
                ManifestEntry(e.path, e.label, e.rule_id, e.domain, tgt, e.seed))
    return train, val


@dataclass(frozen=True)
class SplitScheme:
    """One of the five published train/test balancing schemes.

    All schemes first set aside ``test_per_cell`` items per (domain, label)
    cell, then balance the remaining training pool:

    model1: per-cell corpora kept as-is (one corpus per domain).
    model2: training pools of all domains merged, labels untouched.
    model3: every cell truncated to the same size: the smallest cell's
        remainder rounded down to a multiple of ten.
    model4: the model3-balanced cells merged across domains.
    model5: labels collapsed to their principle; per (domain, principle) the
        pool is truncated to the smallest principle remainder (no rounding),
        drawn as evenly as possible from the constituent labels, then merged.
    """

    scheme_id: str
    test_per_cell: int = 50

    def __post_init__(self):
        if self.scheme_id not in SCHEMES:
            raise VdpError(f"unknown scheme {self.scheme_id!r}; "
                           f"expected one of {', '.join(SCHEMES)}")
        if self.test_per_cell < 1:
            raise VdpError("test_per_cell must be >= 1")


def _round_down_ten(n: int) -> int:
    return (n // 10) * 10


def _relabel(e: ManifestEntry, label: str, split_name: str) -> ManifestEntry:
    return ManifestEntry(e.path, label, e.rule_id, e.domain, split_name, e.seed)


def apply_scheme(entries: list[ManifestEntry], scheme: SplitScheme,
                 seed: int = 0) -> tuple[list[ManifestEntry], list[ManifestEntry]]:
    """Materialize a scheme: returns (train, test), splits rewritten.

    Raises insufficient-data naming the first short (domain, label) cell.
    """
    cells = _by_key(entries, lambda e: (e.domain, e.label))
    test: list[ManifestEntry] = []
    pools: dict[tuple[str, str], list[ManifestEntry]] = {}
    for ci, key in enumerate(sorted(cells)):
        domain, label = key
        rng = np.random.default_rng(np.random.SeedSequence([seed, 211, ci]))
        g = _shuffled(cells[key], rng)
        if len(g) < scheme.test_per_cell + 1:
            raise InsufficientData(
                f"cell domain={domain} label={label} has {len(g)} items; "
                f"needs at least {scheme.test_per_cell + 1}",
                domain=domain, label=label, available=len(g),
                needed=scheme.test_per_cell + 1)
        test.extend(_relabel(e, label, "test") for e in g[:scheme.test_per_cell])
        pools[key] = g[scheme.test_per_cell:]

    sid = scheme.scheme_id
    train: list[ManifestEntry] = []
    if sid in ("model1", "model2"):
        for key in sorted(pools):
            train.extend(_relabel(e, key[1], "train") for e in pools[key])
    elif sid in ("model3", "model4"):
        base = _round_down_ten(min(len(g) for g in pools.values()))
        if base < 10:
            raise InsufficientData(
                f"smallest cell leaves {base} after rounding down to tens",
                base=base)
        for key in sorted(pools):
            train.extend(_relabel(e, key[1], "train")
                         for e in pools[key][:base])
    else:  # model5
        pcells: dict[tuple[str, str], list[list[ManifestEntry]]] = {}
        for key in sorted(pools):
            domain, label = key
            principle = PRINCIPLE_OF_LABEL.get(label)
            if principle is None:
                raise VdpError(f"label {label!r} has no principle mapping")
            pcells.setdefault((domain, principle), []).append(pools[key])
        base = min(sum(len(g) for g in gs) for gs in pcells.values())
        if base < 1:
            raise InsufficientData("a (domain, principle) pool is empty", base=base)
        for key in sorted(pcells):
            picked = _draw_evenly(pcells[key], base)
            train.extend(_relabel(e, key[1], "train") for e in picked)
        test = [_relabel(e, PRINCIPLE_OF_LABEL[e.label], "test") for e in test]
    return train, test


def _draw_evenly(groups: list[list[ManifestEntry]], total: int
                 ) -> list[ManifestEntry]:
    """Take ``total`` items spread as evenly as the group sizes allow.

    Round-robin over groups ordered by size so scarce groups are exhausted
    before plentiful ones absorb the remainder.
    """
    remaining = [list(g) for g in sorted(groups, key=len)]
    out: list[ManifestEntry] = []
    while len(out) < total:
        took = False
        for g in remaining:
            if g and len(out) < total:
                out.append(g.pop(0))
                took = True
        if not took:
            raise InsufficientData("groups exhausted before quota met",
                                   needed=total, available=len(out))
    return out


def corpora(train: list[ManifestEntry], scheme: SplitScheme
            ) -> dict[str, list[ManifestEntry]]:
    """Group scheme output into the corpora that get trained separately.

    model1/model3 keep one training corpus per domain; the pooled schemes
    (model2/model4/model5) train a single model on everything.
    """
    if scheme.scheme_id in ("model1", "model3"):
        groups = _by_key(train, lambda e: e.domain)
        return {d: groups[d] for d in sorted(groups)}
    return {"pooled": list(train)}


def scheme_summary(train: list[ManifestEntry], test: list[ManifestEntry]) -> dict:
    """Per-cell counts for reporting."""
    def counts(rows):
        c: dict = {}
        for e in rows:
            k = f"{e.domain}/{e.label}"
            c[k] = c.get(k, 0) + 1
        return dict(sorted(c.items()))
    return {"train": counts(train), "train_total": len(train),
            "test": counts(test), "test_total": len(test)}
