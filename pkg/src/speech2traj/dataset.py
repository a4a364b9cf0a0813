"""Dataset ingestion: word-labeled WAV trees with validation/testing
split lists, word-to-trajectory labeling, batching, noise mixing.

Expected layout (the speech-commands convention):

    <root>/<word>/*.wav
    <root>/validation_list.txt   -> val1
    <root>/testing_list.txt      -> val2
    everything else              -> train

A trajectory is a 5-vector of finger flexion targets in [0, 1], ordered
thumb, index, middle, ring, pinky; 0 is fully open, 1 fully closed.
Words missing from the label map get the zero vector (fully relaxed) for
safety. The shipped default table covers "zero".."five", "on", "off";
only the "one" and "two" rows are fixed by the labeling scheme, the rest
are editable project defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .audio import WINDOW_SAMPLES, AudioClip, read_wav
from .errors import EmptyDataset, MissingSplitLists, NoiseTooShort, ZeroSignalPower
from .features import feature_of

SPLITS = ("train", "val1", "val2")
NOISE_DIR = "_background_noise_"

ZERO_TRAJECTORY = np.zeros(5, dtype=np.float32)


def validate_trajectory(values, context: str = "trajectory") -> np.ndarray:
    arr = np.asarray(values, dtype=np.float32)
    if arr.shape != (5,):
        raise ValueError(f"{context}: need 5 components, got shape {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{context}: components must lie in [0, 1], got {arr.tolist()}")
    return arr


class LabelMap:
    """word -> trajectory table; unlisted words map to the zero vector."""

    def __init__(self, entries: dict):
        self.entries = {}
        for word, traj in entries.items():
            if word == "__default__":
                default = validate_trajectory(traj, "__default__")
                if np.any(default != 0):
                    raise ValueError("__default__ must be the zero vector")
                continue
            self.entries[word.strip().lower()] = validate_trajectory(traj, word)

    @classmethod
    def from_json(cls, path) -> "LabelMap":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @classmethod
    def default(cls) -> "LabelMap":
        raw = resources.files("speech2traj").joinpath("data/labels.json").read_text("utf-8")
        return cls(json.loads(raw))

    def label_of(self, word: str) -> np.ndarray:
        return self.entries.get(word.strip().lower(), ZERO_TRAJECTORY).copy()

    @property
    def words(self):
        return sorted(self.entries)


def label_of(word: str, label_map: LabelMap) -> np.ndarray:
    return label_map.label_of(word)


@dataclass
class ManifestEntry:
    path: Path
    word: str
    split: str


@dataclass
class DatasetManifest:
    root: Path
    examples: list = field(default_factory=list)

    def split_examples(self, split: str):
        return [e for e in self.examples if e.split == split]

    def counts(self) -> dict:
        out: dict = {}
        for e in self.examples:
            out.setdefault(e.word, {s: 0 for s in SPLITS})
            out[e.word][e.split] += 1
        return out

    def totals(self) -> dict:
        t = {s: 0 for s in SPLITS}
        for e in self.examples:
            t[e.split] += 1
        t["total"] = len(self.examples)
        return t

    def command_word_count(self, label_map: LabelMap, split: str = "train") -> int:
        words = set(label_map.words)
        return sum(1 for e in self.examples if e.split == split and e.word in words)


def scan_dataset(root_dir, label_map: LabelMap) -> DatasetManifest:
    """Walk the dataset tree and assign every WAV to a split."""
    root = Path(root_dir)
    val_list = root / "validation_list.txt"
    test_list = root / "testing_list.txt"
    if not val_list.is_file() or not test_list.is_file():
        raise MissingSplitLists(
            f"{root} must contain validation_list.txt and testing_list.txt")

    def read_list(path):
        with open(path, encoding="utf-8") as fh:
            return {line.strip() for line in fh if line.strip()}

    val1 = read_list(val_list)
    val2 = read_list(test_list)

    manifest = DatasetManifest(root=root)
    for word_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        word = word_dir.name
        if word == NOISE_DIR:
            continue
        for wav in sorted(word_dir.glob("*.wav")):
            rel = f"{word}/{wav.name}"
            split = "val1" if rel in val1 else "val2" if rel in val2 else "train"
            manifest.examples.append(ManifestEntry(path=wav, word=word, split=split))
    if not manifest.examples:
        raise EmptyDataset(f"no WAV files under {root}")
    return manifest


def format_counts_report(manifest: DatasetManifest, label_map: LabelMap) -> str:
    counts = manifest.counts()
    lines = [f"{'word':<16}{'train':>8}{'val1':>8}{'val2':>8}{'total':>8}"]
    command = [w for w in label_map.words if w in counts]
    other = [w for w in sorted(counts) if w not in label_map.words]
    for word in command + other:
        c = counts[word]
        total = sum(c.values())
        lines.append(f"{word:<16}{c['train']:>8}{c['val1']:>8}{c['val2']:>8}{total:>8}")
    t = manifest.totals()
    lines.append(f"{'TOTAL':<16}{t['train']:>8}{t['val1']:>8}{t['val2']:>8}{t['total']:>8}")
    lines.append(f"command-word train utterances: "
                 f"{manifest.command_word_count(label_map, 'train')}")
    return "\n".join(lines)


class FeatureCache:
    """Per-path feature memo so multi-epoch training extracts each file once."""

    def __init__(self):
        self._cache: dict = {}

    def get(self, path) -> np.ndarray:
        key = str(path)
        feat = self._cache.get(key)
        if feat is None:
            feat = feature_of(read_wav(path))
            self._cache[key] = feat
        return feat


def make_batches(manifest: DatasetManifest, split: str, batch_size: int,
                 rng: np.random.Generator, label_map: LabelMap,
                 cache: FeatureCache | None = None, shuffle: bool = True):
    """One shuffled epoch of (features (B,129,71,1), trajectories (B,5))
    batches; the final short batch is emitted. shuffle=False keeps manifest
    order (used by the full-batch descent mode, where reordering would
    perturb float summation order)."""
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2 (batchnorm needs it)")
    examples = manifest.split_examples(split)
    order = rng.permutation(len(examples)) if shuffle else np.arange(len(examples))
    cache = cache if cache is not None else FeatureCache()
    for start in range(0, len(examples), batch_size):
        chunk = [examples[i] for i in order[start : start + batch_size]]
        feats = np.stack([cache.get(e.path) for e in chunk])[..., None]
        labels = np.stack([label_map.label_of(e.word) for e in chunk])
        yield feats, labels


def mix_noise(clip: AudioClip, noise: AudioClip | np.ndarray, snr_db: float,
              rng: np.random.Generator) -> AudioClip:
    """Add a random one-second crop of `noise` at the requested
    clip-to-noise power ratio; output saturates to int16."""
    noise_samples = noise.samples if isinstance(noise, AudioClip) else np.asarray(noise)
    if len(noise_samples) < WINDOW_SAMPLES:
        raise NoiseTooShort(
            f"noise must hold >= {WINDOW_SAMPLES} samples, got {len(noise_samples)}")
    signal = clip.samples.astype(np.float64)
    signal_power = float(np.mean(signal**2))
    if signal_power == 0:
        raise ZeroSignalPower("silent clip: SNR gain is undefined")
    start = int(rng.integers(0, len(noise_samples) - WINDOW_SAMPLES + 1))
    crop = np.asarray(noise_samples[start : start + WINDOW_SAMPLES], dtype=np.float64)
    crop_power = float(np.mean(crop**2))
    if crop_power == 0:
        raise ZeroSignalPower("silent noise crop: SNR gain is undefined")
    gain = np.sqrt(signal_power / (crop_power * 10.0 ** (snr_db / 10.0)))
    mixed = np.clip(signal + gain * crop, -32768, 32767)
    return AudioClip(np.round(mixed).astype(np.int16), source_id=clip.source_id)
