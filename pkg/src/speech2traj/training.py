"""Training loop: Adam over MSE with per-epoch validation and
best-validation checkpoint retention (the best epoch is usually not the
last one).

Reproducibility contract: the same config, seed, and dataset produce an
identical report and identical best-checkpoint bytes. All randomness
(init, shuffling, dropout, augmentation) derives from config.rng_seed
through separate spawned streams.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .audio import read_wav
from .checkpoint import save_checkpoint
from .dataset import DatasetManifest, FeatureCache, LabelMap, make_batches, mix_noise
from .errors import EmptyDataset, InvalidConfig, NonFiniteLoss
from .features import feature_of
from .model import NetworkSpec, build_network
from .nn import Adam, GradientDescent, mse_loss, rmse


@dataclass
class TrainConfig:
    filters2: int = 256
    epochs: int = 100
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dropout_rate: float = 0.5
    rng_seed: int = 0
    augment: bool = False
    snr_db_range: tuple = (5.0, 15.0)
    noise_clips: list = field(default_factory=list)
    out_dir: Path | None = None
    optimizer: str = "adam"  # "gd" exists solely for the monotonicity check
    full_batch: bool = False
    command_words_only: bool = False
    dtype: str = "f32"  # "f64" for numerical property checks only

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise InvalidConfig(f"batch_size must be >= 2, got {self.batch_size}")
        if self.optimizer not in ("adam", "gd"):
            raise InvalidConfig(f"unknown optimizer {self.optimizer!r}")
        if self.dtype not in ("f32", "f64"):
            raise InvalidConfig(f"dtype must be f32 or f64, got {self.dtype!r}")


@dataclass
class EpochRow:
    epoch: int
    train_mse: float
    train_rmse: float
    val_mse: float
    val_rmse: float
    seconds: float


@dataclass
class TrainReport:
    rows: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_rmse: float = float("inf")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f.name for f in fields(EpochRow)])
            for row in self.rows:
                writer.writerow([row.epoch, f"{row.train_mse:.9g}", f"{row.train_rmse:.9g}",
                                 f"{row.val_mse:.9g}", f"{row.val_rmse:.9g}",
                                 f"{row.seconds:.3f}"])


def _augmented_batches(manifest, split, config, rng, label_map, cache, noise_rng):
    """Training batches, optionally remixed with background noise. Noisy
    variants bypass the cache (the mix differs every epoch)."""
    if not config.augment or not config.noise_clips:
        yield from make_batches(manifest, split, config.batch_size, rng, label_map, cache)
        return
    examples = manifest.split_examples(split)
    order = rng.permutation(len(examples))
    lo, hi = config.snr_db_range
    for start in range(0, len(examples), config.batch_size):
        chunk = [examples[i] for i in order[start : start + config.batch_size]]
        feats = []
        for e in chunk:
            clip = read_wav(e.path)
            noise = config.noise_clips[int(noise_rng.integers(0, len(config.noise_clips)))]
            snr = float(noise_rng.uniform(lo, hi))
            try:
                clip = mix_noise(clip, noise, snr, noise_rng)
            except Exception:
                pass  # silent clips stay clean
            feats.append(feature_of(clip))
        labels = np.stack([label_map.label_of(e.word) for e in chunk])
        yield np.stack(feats)[..., None], labels


def _filtered(manifest, label_map, command_words_only):
    if not command_words_only:
        return manifest
    words = set(label_map.words)
    out = DatasetManifest(root=manifest.root)
    out.examples = [e for e in manifest.examples if e.word in words]
    return out


def evaluate_network(network, manifest: DatasetManifest, split: str,
                     label_map: LabelMap, cache: FeatureCache | None = None,
                     chunk: int = 64):
    """Infer-mode forward over a full split. Returns (mse, rmse, per-word
    dict word -> (mse, rmse, count))."""
    examples = manifest.split_examples(split)
    if not examples:
        raise EmptyDataset(f"split {split!r} is empty")
    cache = cache if cache is not None else FeatureCache()
    sq_sum = 0.0
    count = 0
    per_word: dict = {}
    for start in range(0, len(examples), chunk):
        part = examples[start : start + chunk]
        feats = np.stack([cache.get(e.path) for e in part])[..., None]
        labels = np.stack([label_map.label_of(e.word) for e in part])
        out = network.forward_batch(feats.astype(network.dtype, copy=False),
                                    training=False)
        errs = ((labels - out) ** 2).sum(axis=1)  # per-example l'l
        sq_sum += float(errs.sum())
        count += len(part)
        for e, err in zip(part, errs):
            acc = per_word.setdefault(e.word, [0.0, 0])
            acc[0] += float(err)
            acc[1] += 1
    mse = sq_sum / (5 * count)
    table = {w: (s / (5 * n), rmse(s / (5 * n)), n) for w, (s, n) in sorted(per_word.items())}
    return mse, rmse(mse), table


def train(config: TrainConfig, manifest: DatasetManifest, label_map: LabelMap,
          log=None):
    """Runs the full protocol and returns (best_checkpoint_path, TrainReport)."""
    manifest = _filtered(manifest, label_map, config.command_words_only)
    n_train = len(manifest.split_examples("train"))
    n_val = len(manifest.split_examples("val1"))
    if n_train == 0 or n_val == 0:
        raise EmptyDataset(f"need non-empty train and val1 splits, got {n_train}/{n_val}")

    seeds = np.random.SeedSequence(config.rng_seed).spawn(4)
    init_seed = int(seeds[0].generate_state(1)[0])
    shuffle_rng = np.random.default_rng(seeds[1])
    dropout_rng = np.random.default_rng(seeds[2])
    noise_rng = np.random.default_rng(seeds[3])

    spec = NetworkSpec(filters2=config.filters2, dropout_rate=config.dropout_rate)
    dtype = np.float32 if config.dtype == "f32" else np.float64
    network = build_network(spec, rng_seed=init_seed, dtype=dtype)
    network.dropout.rng = dropout_rng
    params = network.trainable_params()
    if config.optimizer == "adam":
        optimizer = Adam(params, lr=config.lr, beta1=config.beta1,
                         beta2=config.beta2, eps=config.eps)
    else:
        optimizer = GradientDescent(params, lr=config.lr)

    batch_size = n_train if config.full_batch else config.batch_size
    cache = FeatureCache()
    report = TrainReport()
    best_mse = float("inf")
    out_dir = Path(config.out_dir) if config.out_dir is not None else None
    best_path = out_dir / "best.ckpt" if out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        sq_sum = 0.0
        seen = 0
        if config.full_batch:
            batches = make_batches(manifest, "train", batch_size, shuffle_rng,
                                   label_map, cache, shuffle=False)
        else:
            batches = _augmented_batches(manifest, "train", config, shuffle_rng,
                                         label_map, cache, noise_rng)
        for batch_idx, (feats, labels) in enumerate(batches):
            out = network.forward_batch(feats.astype(dtype, copy=False), training=True)
            mse, grad = mse_loss(labels, out)
            if not np.isfinite(mse):
                raise NonFiniteLoss(f"epoch {epoch} batch {batch_idx}: loss {mse}")
            grads = network.backward_batch(grad.astype(out.dtype))
            optimizer.step(grads)
            sq_sum += mse * 5 * len(feats)
            seen += len(feats)
        train_mse = sq_sum / (5 * seen)

        val_mse, val_rmse, _ = evaluate_network(network, manifest, "val1", label_map, cache)
        row = EpochRow(epoch, train_mse, rmse(train_mse), val_mse, val_rmse,
                       time.perf_counter() - t0)
        report.rows.append(row)
        if log:
            log(f"epoch {epoch:4d}  train_rmse {row.train_rmse:.4f}  "
                f"val_rmse {val_rmse:.4f}  ({row.seconds:.1f}s)")
        if val_mse < best_mse:
            best_mse = val_mse
            report.best_epoch = epoch
            report.best_val_rmse = val_rmse
            if best_path:
                save_checkpoint(network, _metadata(config, epoch, val_mse), best_path)

    # re-estimate batchnorm statistics over the train split: the EMA lags
    # the final parameters, which costs precision at inference time
    def calibration_batches():
        for feats, _ in make_batches(manifest, "train", batch_size,
                                     np.random.default_rng(0), label_map, cache,
                                     shuffle=False):
            yield feats.astype(dtype, copy=False)

    network.calibrate_batchnorm(calibration_batches)

    if out_dir:
        save_checkpoint(network, _metadata(config, config.epochs, best_mse), out_dir / "last.ckpt")
        report.write_csv(out_dir / "report.csv")
    return best_path, report


def _metadata(config: TrainConfig, epoch: int, best_val_mse: float) -> dict:
    return {
        "epoch": epoch,
        "best_val_mse": float(best_val_mse),
        "rng_seed": config.rng_seed,
    }
