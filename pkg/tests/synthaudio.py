"""Synthetic word-like audio for tests.

Each word gets a fixed two-tone signature with a raised-cosine envelope,
so words are acoustically distinguishable and a small network can learn
the word -> trajectory mapping from them. WAV files are written with the
stdlib wave module, which doubles as the independent writer oracle for
the decoder tests.
"""

from __future__ import annotations

import io
import wave
import zlib
from pathlib import Path

import numpy as np

SAMPLE_RATE = 16_000

WORD_TONES = {
    "zero": (400.0, 1150.0),
    "one": (520.0, 1400.0),
    "two": (640.0, 1700.0),
    "three": (760.0, 2000.0),
    "four": (880.0, 2300.0),
    "five": (1000.0, 2600.0),
    "on": (1150.0, 2900.0),
    "off": (1300.0, 3250.0),
    "bed": (340.0, 3600.0),
    "cat": (470.0, 3950.0),
    "dog": (590.0, 4300.0),
    "tree": (710.0, 4650.0),
}

COMMAND_WORDS = ("zero", "one", "two", "three", "four", "five", "on", "off")
FILLER_WORDS = ("bed", "cat", "dog", "tree")


def word_wave(word: str, rng: np.random.Generator | None = None,
              sample_rate: int = SAMPLE_RATE, seconds: float = 1.0,
              amplitude: float = 9000.0) -> np.ndarray:
    """One synthetic utterance as int16. A seeded rng jitters frequency,
    level, onset, and duration; without it the clip is the word's
    canonical form. Every clip carries a small deterministic noise floor:
    recorded speech is never silent, and a floor keeps the batchnorm
    statistics away from the degenerate near-zero-variance regime."""
    f1, f2 = WORD_TONES[word]
    word_rng = np.random.default_rng(zlib.crc32(word.encode()))
    # canonical per-word level/timing spread: clips that differ only in
    # tone rows produce near-identical deep activations, which leaves
    # output units dead or alive purely by init luck
    amplitude *= 0.65 + 0.9 * word_rng.random()
    onset = 0.04 + 0.24 * word_rng.random()
    duration = 0.35 + 0.3 * word_rng.random()
    floor_rng = rng if rng is not None else word_rng
    if rng is not None:
        f1 *= 1.0 + rng.uniform(-0.02, 0.02)
        f2 *= 1.0 + rng.uniform(-0.02, 0.02)
        amplitude *= 1.0 + rng.uniform(-0.35, 0.2)
        onset = rng.uniform(0.02, 0.3)
        duration = rng.uniform(0.45, 0.6)
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    envelope = np.zeros(n)
    inside = (t >= onset) & (t < onset + duration)
    phase = (t[inside] - onset) / duration
    envelope[inside] = 0.5 * (1 - np.cos(2 * np.pi * phase))
    x = amplitude * envelope * (np.sin(2 * np.pi * f1 * t) + 0.7 * np.sin(2 * np.pi * f2 * t + 1.0))
    x = x + floor_rng.normal(0.0, amplitude * 0.02, n)
    return np.clip(x, -32767, 32767).astype(np.int16)


def wav_bytes(samples: np.ndarray, sample_rate: int = SAMPLE_RATE,
              sampwidth: int = 2, channels: int = 1) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(sampwidth)
        wf.setframerate(sample_rate)
        wf.writeframes(np.asarray(samples).tobytes())
    return buf.getvalue()


def write_wav(path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> None:
    Path(path).write_bytes(wav_bytes(samples, sample_rate))


def make_dataset_tree(root: Path, per_word_train: dict, per_word_val: dict,
                      seed: int = 0, per_word_test: dict | None = None) -> None:
    """Write a speech-commands-shaped tree: word dirs plus the two split
    list files. Counts are per word; file seeds are deterministic."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    val_lines = []
    test_lines = []
    rng = np.random.default_rng(seed)
    per_word_test = per_word_test or {}
    for word in sorted(set(per_word_train) | set(per_word_val) | set(per_word_test)):
        word_dir = root / word
        word_dir.mkdir(exist_ok=True)
        idx = 0
        for count, bucket in ((per_word_train.get(word, 0), None),
                              (per_word_val.get(word, 0), val_lines),
                              (per_word_test.get(word, 0), test_lines)):
            for _ in range(count):
                name = f"{word}_{idx:04d}.wav"
                write_wav(word_dir / name, word_wave(word, rng))
                if bucket is not None:
                    bucket.append(f"{word}/{name}")
                idx += 1
    (root / "validation_list.txt").write_text("\n".join(val_lines) + "\n")
    (root / "testing_list.txt").write_text("\n".join(test_lines) + "\n")
