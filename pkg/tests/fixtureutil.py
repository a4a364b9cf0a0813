"""Builds the shared test fixtures: a small trained checkpoint plus
reference utterances, cached under var/fixtures/ so repeated test runs
(and the browser-client tests) reuse them.

Also runnable directly:  python tests/fixtureutil.py [out_dir]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from synthaudio import (  # noqa: E402
    COMMAND_WORDS,
    SAMPLE_RATE,
    word_wave,
    write_wav,
)

FIXTURE_VERSION = "fixture-v5-filters32"


def linear_decimate(samples: np.ndarray, in_rate: int, out_rate: int) -> np.ndarray:
    """Mirror of the browser client's resampler: 4-tap boxcar anti-alias
    then linear interpolation. Keeping training data consistent with the
    capture path makes the fixture checkpoint robust to it."""
    x = samples.astype(np.float64)
    kernel = np.ones(4) / 4.0
    smoothed = np.convolve(x, kernel, mode="same")
    n_out = int(len(x) * out_rate / in_rate)
    pos = np.arange(n_out) * (in_rate / out_rate)
    i0 = np.minimum(pos.astype(np.int64), len(x) - 1)
    i1 = np.minimum(i0 + 1, len(x) - 1)
    frac = pos - i0
    return ((1 - frac) * smoothed[i0] + frac * smoothed[i1]).astype(np.float64)


def build_fixtures(out_dir: Path, log=print) -> Path:
    from speech2traj.dataset import LabelMap, scan_dataset
    from speech2traj.training import TrainConfig, train

    out_dir = Path(out_dir)
    stamp = out_dir / "VERSION"
    ckpt = out_dir / "best.ckpt"
    if stamp.is_file() and stamp.read_text().strip() == FIXTURE_VERSION and ckpt.is_file():
        return out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    # training corpus: jittered variants per command word, plus variants
    # that went through the 48k->16k capture-path decimation
    data_dir = out_dir / "train_tree"
    rng = np.random.default_rng(2024)
    val_lines = []
    for word in COMMAND_WORDS:
        word_dir = data_dir / word
        word_dir.mkdir(parents=True, exist_ok=True)
        for i in range(22):
            write_wav(word_dir / f"{word}_{i:03d}.wav", word_wave(word, rng))
        for i in range(4):
            hi = word_wave(word, rng, sample_rate=48_000)
            lo = np.clip(linear_decimate(hi, 48_000, SAMPLE_RATE), -32767, 32767)
            write_wav(word_dir / f"{word}_ds{i:03d}.wav", lo.astype(np.int16))
        for i in range(4):
            name = f"{word}_val{i:03d}.wav"
            write_wav(word_dir / name, word_wave(word, rng))
            val_lines.append(f"{word}/{name}")
    (data_dir / "validation_list.txt").write_text("\n".join(val_lines) + "\n")
    (data_dir / "testing_list.txt").write_text("")

    label_map = LabelMap.default()
    manifest = scan_dataset(data_dir, label_map)
    config = TrainConfig(filters2=32, epochs=40, batch_size=16, dropout_rate=0.0,
                         rng_seed=42, out_dir=out_dir)
    _, report = train(config, manifest, label_map, log=log)
    log(f"fixture checkpoint: best epoch {report.best_epoch}, "
        f"val RMSE {report.best_val_rmse:.4f}")

    # reference utterances for runtime/service/browser tests
    for word in ("one", "two", "zero"):
        write_wav(out_dir / f"{word}_16k.wav", word_wave(word))
    hi = word_wave("two", sample_rate=48_000).astype(np.float32) / 32768.0
    hi.astype("<f4").tofile(out_dir / "two_48k_float32.raw")
    (out_dir / "two_48k_meta.json").write_text(json.dumps(
        {"sample_rate": 48_000, "format": "float32le", "word": "two",
         "trajectory": [1, 0, 0, 1, 1]}))
    stamp.write_text(FIXTURE_VERSION + "\n")
    return out_dir


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "var" / "fixtures"
    build_fixtures(target)
    print(f"fixtures ready in {target}")
