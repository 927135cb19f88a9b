"""A small convolutional classifier and its trainer, in plain numpy.

Three conv/relu/maxpool blocks feed a global average pool and one linear
layer. Everything is written against the BLAS that ships with numpy (im2col
plus matmul), trains on a CPU in minutes at 64x64, and is exactly
reproducible from a seed.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .augment import normalize, sample_plan, apply_plan
from .dataset import ManifestEntry, split as split_entries
from .errors import InvalidLabel, ShapeMismatch, VdpError
from .raster import load_png

_KSIZE = 3
_PAD = 1
_POOLS = 3


def _im2col(x: np.ndarray) -> np.ndarray:
    """(N,C,H,W) -> (N, C*9, H*W) patches for 3x3 stride-1 pad-1 conv."""
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (_PAD, _PAD), (_PAD, _PAD)))
    cols = np.empty((n, c, _KSIZE * _KSIZE, h, w), dtype=x.dtype)
    k = 0
    for di in range(_KSIZE):
        for dj in range(_KSIZE):
            cols[:, :, k] = xp[:, :, di:di + h, dj:dj + w]
            k += 1
    return cols.reshape(n, c * _KSIZE * _KSIZE, h * w)


def _col2im(dcols: np.ndarray, shape: tuple) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patch gradients back to the input."""
    n, c, h, w = shape
    dxp = np.zeros((n, c, h + 2 * _PAD, w + 2 * _PAD), dtype=dcols.dtype)
    d = dcols.reshape(n, c, _KSIZE * _KSIZE, h, w)
    k = 0
    for di in range(_KSIZE):
        for dj in range(_KSIZE):
            dxp[:, :, di:di + h, dj:dj + w] += d[:, :, k]
            k += 1
    return dxp[:, :, _PAD:_PAD + h, _PAD:_PAD + w]


def _maxpool(x: np.ndarray):
    n, c, h, w = x.shape
    win = (x.reshape(n, c, h // 2, 2, w // 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, h // 2, w // 2, 4))
    arg = win.argmax(axis=-1)
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return out, arg


def _maxpool_back(dout: np.ndarray, arg: np.ndarray, shape: tuple):
    n, c, h, w = shape
    dwin = np.zeros((n, c, h // 2, w // 2, 4), dtype=dout.dtype)
    np.put_along_axis(dwin, arg[..., None], dout[..., None], axis=-1)
    return (dwin.reshape(n, c, h // 2, w // 2, 2, 2)
                .transpose(0, 1, 2, 4, 3, 5)
                .reshape(n, c, h, w))


class CnnModel:
    """conv16-conv32-conv64 feature stack with a linear head.

    Weights are Kaiming-uniform, biases zero, all drawn from the seed.
    """

    def __init__(self, num_classes: int, channels=(16, 32, 64),
                 in_channels: int = 3, seed: int = 0,
                 dtype=np.float32):
        if num_classes < 2:
            raise VdpError("need at least two classes")
        self.num_classes = num_classes
        self.channels = tuple(channels)
        self.in_channels = in_channels
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(np.random.SeedSequence([0x4E4E, seed]))
        self.params: dict[str, np.ndarray] = {}
        cin = in_channels
        for i, cout in enumerate(self.channels, start=1):
            fan_in = cin * _KSIZE * _KSIZE
            bound = math.sqrt(6.0 / fan_in)
            self.params[f"w{i}"] = rng.uniform(
                -bound, bound, (cout, fan_in)).astype(self.dtype)
            self.params[f"b{i}"] = np.zeros(cout, dtype=self.dtype)
            cin = cout
        bound = math.sqrt(6.0 / cin)
        self.params["wf"] = rng.uniform(
            -bound, bound, (num_classes, cin)).astype(self.dtype)
        self.params["bf"] = np.zeros(num_classes, dtype=self.dtype)

    def astype(self, dtype) -> "CnnModel":
        """Copy with parameters cast (float64 for gradient checking)."""
        out = CnnModel(self.num_classes, self.channels, self.in_channels,
                       seed=0, dtype=dtype)
        for k, v in self.params.items():
            out.params[k] = v.astype(dtype)
        return out

    def _check_input(self, x: np.ndarray):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise ShapeMismatch(
                f"expected (N,{self.in_channels},H,W), got {x.shape}")
        div = 2 ** _POOLS
        if x.shape[2] % div or x.shape[3] % div:
            raise ShapeMismatch(
                f"input sides must be multiples of {div}, got {x.shape[2:]}",
                height=int(x.shape[2]), width=int(x.shape[3]))

    def forward(self, x: np.ndarray, cache: dict | None = None) -> np.ndarray:
        """Logits (N,C). Pass a dict as cache to keep intermediates for
        backward and for activation maps."""
        self._check_input(x)
        x = x.astype(self.dtype, copy=False)
        h = x
        if cache is not None:
            cache["x"] = x
        for i in range(1, len(self.channels) + 1):
            cols = _im2col(h)
            pre = (np.matmul(self.params[f"w{i}"], cols)
                   + self.params[f"b{i}"][:, None])
            n = h.shape[0]
            hh, ww = h.shape[2], h.shape[3]
            pre = pre.reshape(n, -1, hh, ww)
            act = np.maximum(pre, 0)
            pooled, arg = _maxpool(act)
            if cache is not None:
                cache[f"cols{i}"] = cols
                cache[f"shape{i}"] = h.shape
                cache[f"mask{i}"] = pre > 0
                cache[f"act{i}"] = act
                cache[f"arg{i}"] = arg
            h = pooled
        feats = h.mean(axis=(2, 3))
        if cache is not None:
            cache["pooled_shape"] = h.shape
            cache["feats"] = feats
        return feats @ self.params["wf"].T + self.params["bf"]

    def backward(self, cache: dict, dlogits: np.ndarray,
                 want_activation: int | None = None):
        """Parameter gradients for the cached forward pass.

        When want_activation = i, also returns d(objective)/d(act_i), the
        gradient at block i's relu output (used for class activation maps).
        """
        grads: dict[str, np.ndarray] = {}
        feats = cache["feats"]
        grads["wf"] = dlogits.T @ feats
        grads["bf"] = dlogits.sum(axis=0)
        dfeats = dlogits @ self.params["wf"]
        n, c, ph, pw = cache["pooled_shape"]
        dh = np.broadcast_to(dfeats[:, :, None, None] / (ph * pw),
                             (n, c, ph, pw)).astype(dlogits.dtype)
        d_act_out = None
        for i in range(len(self.channels), 0, -1):
            act = cache[f"act{i}"]
            dact = _maxpool_back(dh, cache[f"arg{i}"], act.shape)
            if want_activation == i:
                d_act_out = dact.copy()
            dpre = dact * cache[f"mask{i}"]
            nn_, cc, hh, ww = dpre.shape
            dflat = dpre.reshape(nn_, cc, hh * ww)
            cols = cache[f"cols{i}"]
            grads[f"w{i}"] = np.einsum("nop,ncp->oc", dflat, cols)
            grads[f"b{i}"] = dpre.sum(axis=(0, 2, 3))
            dcols = np.matmul(self.params[f"w{i}"].T, dflat)
            dh = _col2im(dcols, cache[f"shape{i}"])
        if want_activation is not None:
            return grads, d_act_out
        return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grads(model: CnnModel, batch: np.ndarray, labels: np.ndarray):
    """Mean cross entropy and gradients for every parameter."""
    labels = np.asarray(labels)
    if labels.ndim != 1 or len(labels) != len(batch):
        raise InvalidLabel(f"labels must be (N,), got {labels.shape}")
    if labels.min() < 0 or labels.max() >= model.num_classes:
        raise InvalidLabel("label outside [0, num_classes)",
                           num_classes=model.num_classes)
    cache: dict = {}
    logits = model.forward(batch, cache)
    p = softmax(logits.astype(np.float64))
    n = len(batch)
    loss = float(-np.log(p[np.arange(n), labels] + 1e-300).mean())
    dlogits = p.copy()
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grads = model.backward(cache, dlogits.astype(model.dtype))
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch: int = 32
    lr0: float = 0.0256
    decay_gamma: float = 0.97
    decay_period: float = 2.4
    seed: int = 0
    val_fraction: float = 0.1
    augment: bool = False
    # 0 keeps the best-validation checkpoint; k > 0 instead retains the mean
    # of the last k epochs' parameters, which is far less sensitive to
    # val-split noise on small corpora.
    tail_average: int = 0

    def __post_init__(self):
        if self.lr0 <= 0:
            raise VdpError("lr0 must be positive")
        if not 0 < self.decay_gamma <= 1:
            raise VdpError("decay_gamma must be in (0, 1]")
        if self.epochs < 1:
            raise VdpError("epochs must be >= 1")
        if self.batch < 1:
            raise VdpError("batch must be >= 1")
        if self.tail_average < 0:
            raise VdpError("tail_average must be >= 0")


def lr_at(config: TrainConfig, epoch: float) -> float:
    """Stepwise-exponential schedule: decays by gamma every decay_period."""
    if epoch < 0:
        raise VdpError("epoch must be >= 0")
    return config.lr0 * config.decay_gamma ** math.floor(
        epoch / config.decay_period)


@dataclass
class TrainingReport:
    label_order: list[str]
    epochs: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    best_val_top1: float = 0.0
    retained: str = "best-val"

    def to_json(self) -> dict:
        return {"label_order": self.label_order, "epochs": self.epochs,
                "best_epoch": self.best_epoch,
                "best_val_top1": self.best_val_top1,
                "retained": self.retained}


def label_order_for(entries: list[ManifestEntry],
                    taxonomy: tuple[str, ...]) -> list[str]:
    """Deterministic class order: taxonomy position first, then alphabetic
    for labels outside it (e.g. principle-level runs)."""
    present = sorted({e.label for e in entries})
    ranked = [l for l in taxonomy if l in present]
    return ranked + [l for l in present if l not in taxonomy]


def _load_images(entries, manifest_dir) -> np.ndarray:
    root = Path(manifest_dir)
    imgs = []
    for e in entries:
        p = Path(e.path)
        imgs.append(load_png(p if p.is_absolute() else root / p))
    shapes = {im.shape for im in imgs}
    if len(shapes) > 1:
        raise ShapeMismatch(f"mixed image sizes in corpus: {sorted(shapes)}")
    return np.stack(imgs)


def _accuracy(model, x, labels, batch=64):
    hit = 0
    for i in range(0, len(x), batch):
        logits = model.forward(x[i:i + batch])
        hit += int((logits.argmax(axis=1) == labels[i:i + batch]).sum())
    return hit / len(x)


def train(model: CnnModel, entries: list[ManifestEntry],
          manifest_dir: str | Path, config: TrainConfig,
          taxonomy: tuple[str, ...] = ()) -> TrainingReport:
    """SGD over the manifest's train split.

    The model keeps the best-validation parameters, or the mean of the last
    config.tail_average epochs when that is set. Deterministic for a given
    config: shuffling and augmentation draw from per-epoch substreams of
    config.seed, never from global state.
    """
    if not any(e.split == "val" for e in entries):
        tr_part, va_part = split_entries(entries, 1.0 - config.val_fraction,
                                         config.seed)
        entries = tr_part + va_part
    order = label_order_for(entries, taxonomy)
    if len(order) != model.num_classes:
        raise VdpError(f"model has {model.num_classes} outputs but corpus "
                       f"has {len(order)} labels")
    index_of = {l: i for i, l in enumerate(order)}
    tr = [e for e in entries if e.split == "train"]
    va = [e for e in entries if e.split == "val"]
    if not tr or not va:
        raise VdpError("need both train and val samples")
    x_tr_raw = _load_images(tr, manifest_dir)
    y_tr = np.array([index_of[e.label] for e in tr])
    x_va = np.stack([normalize(im) for im in _load_images(va, manifest_dir)])
    y_va = np.array([index_of[e.label] for e in va])

    report = TrainingReport(label_order=order)
    best_params = {k: v.copy() for k, v in model.params.items()}
    tail: deque[dict] = deque(maxlen=max(config.tail_average, 1))
    n = len(tr)
    batches = max(1, math.ceil(n / config.batch))
    for epoch in range(config.epochs):
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, 311, epoch]))
        perm = rng.permutation(n)
        total = 0.0
        for bi in range(batches):
            idx = perm[bi * config.batch:(bi + 1) * config.batch]
            if len(idx) == 0:
                continue
            raw = x_tr_raw[idx]
            if config.augment:
                raw = np.stack([apply_plan(im, sample_plan(rng))
                                for im in raw])
            xb = np.stack([normalize(im) for im in raw])
            loss, grads = loss_and_grads(model, xb, y_tr[idx])
            lr = lr_at(config, epoch + bi / batches)
            for k, g in grads.items():
                model.params[k] -= (lr * g).astype(model.dtype)
            total += loss * len(idx)
        val_top1 = _accuracy(model, x_va, y_va)
        report.epochs.append({"epoch": epoch, "loss": total / n,
                              "lr": lr_at(config, epoch),
                              "val_top1": val_top1})
        if val_top1 > report.best_val_top1:
            report.best_val_top1 = val_top1
            report.best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        if config.tail_average > 0:
            tail.append({k: v.copy() for k, v in model.params.items()})
    if config.tail_average > 0:
        model.params = {k: np.mean([s[k] for s in tail], axis=0)
                        .astype(model.dtype) for k in model.params}
        report.retained = f"tail-{len(tail)}"
    else:
        model.params = best_params
    return report


def predict_topk(model: CnnModel, image: np.ndarray, k: int):
    """Top-k (class index, probability), ties broken toward lower index."""
    if not 1 <= k <= model.num_classes:
        raise VdpError(f"k must be in [1, {model.num_classes}]")
    x = normalize(image)[None] if image.ndim == 3 and image.dtype == np.uint8 \
        else np.asarray(image)[None] if image.ndim == 3 else np.asarray(image)
    p = softmax(model.forward(x).astype(np.float64))[0]
    order = np.argsort(-p, kind="stable")
    return [(int(i), float(p[i])) for i in order[:k]]


def save_checkpoint(model: CnnModel, path: str | Path, meta: dict | None = None):
    """Single .npz holding parameters plus a JSON metadata blob."""
    head = {"num_classes": model.num_classes, "channels": list(model.channels),
            "in_channels": model.in_channels, "dtype": model.dtype.name,
            "meta": meta or {}}
    np.savez(path, _head=np.frombuffer(
        json.dumps(head, sort_keys=True).encode(), dtype=np.uint8),
        **model.params)


def load_checkpoint(path: str | Path):
    """Returns (model, meta)."""
    with np.load(path) as z:
        head = json.loads(bytes(z["_head"]).decode())
        model = CnnModel(head["num_classes"], tuple(head["channels"]),
                         head["in_channels"], dtype=np.dtype(head["dtype"]))
        for k in model.params:
            model.params[k] = z[k].astype(model.dtype)
    return model, head["meta"]
