"""WAV decoding and the live-input ring buffer.

Everything downstream works on exactly one second of mono 16 kHz 16-bit
PCM (16,000 samples). Shorter clips are zero-padded at the end, longer
ones truncated, so word onsets stay aligned to the window start.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedContainer, UnsupportedFormat

SAMPLE_RATE_HZ = 16_000
WINDOW_SAMPLES = 16_000


@dataclass
class AudioClip:
    """One second of mono 16 kHz signed-16-bit PCM."""

    samples: np.ndarray  # int16, shape (16000,)
    sample_rate_hz: int = SAMPLE_RATE_HZ
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.int16)
        if self.samples.shape != (WINDOW_SAMPLES,):
            raise ValueError(
                f"AudioClip needs exactly {WINDOW_SAMPLES} samples, "
                f"got shape {self.samples.shape}"
            )
        if self.sample_rate_hz != SAMPLE_RATE_HZ:
            raise ValueError(f"AudioClip is fixed at {SAMPLE_RATE_HZ} Hz")


def _fit_length(samples: np.ndarray) -> np.ndarray:
    if len(samples) >= WINDOW_SAMPLES:
        return samples[:WINDOW_SAMPLES]
    out = np.zeros(WINDOW_SAMPLES, dtype=np.int16)
    out[: len(samples)] = samples
    return out


def decode_wav(data: bytes, source_id: str = "") -> AudioClip:
    """Parse a RIFF/WAVE container into an AudioClip.

    Accepts only PCM (format code 1), mono, 16-bit, 16 kHz. Unknown
    chunks are skipped. Raises MalformedContainer for broken framing and
    UnsupportedFormat (with the offending values) for anything else.
    """
    if len(data) < 12 or data[:4] != b"RIFF":
        raise MalformedContainer("missing RIFF header")
    if data[8:12] != b"WAVE":
        raise MalformedContainer(f"not a WAVE form (got {data[8:12]!r})")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        pos += 8
        if pos + size > len(data):
            raise MalformedContainer(f"chunk {cid!r} overruns file")
        body = data[pos : pos + size]
        pos += size + (size & 1)  # chunks are word-aligned
        if cid == b"fmt ":
            if size < 16:
                raise MalformedContainer("fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            payload = body
    if fmt is None:
        raise MalformedContainer("no fmt chunk")
    if payload is None:
        raise MalformedContainer("no data chunk")

    audio_format, channels, rate, _byte_rate, _block_align, bits = fmt
    if audio_format != 1:
        raise UnsupportedFormat(f"audio format {audio_format}, need PCM (1)")
    if channels != 1:
        raise UnsupportedFormat(f"{channels} channels, need mono")
    if bits != 16:
        raise UnsupportedFormat(f"{bits}-bit samples, need 16-bit")
    if rate != SAMPLE_RATE_HZ:
        raise UnsupportedFormat(f"sample rate {rate} Hz, need {SAMPLE_RATE_HZ} Hz")

    samples = np.frombuffer(payload[: len(payload) & ~1], dtype="<i2")
    return AudioClip(_fit_length(samples), source_id=source_id)


def read_wav(path, source_id: str | None = None) -> AudioClip:
    with open(path, "rb") as fh:
        return decode_wav(fh.read(), source_id=source_id if source_id is not None else str(path))


@dataclass
class RingBuffer:
    """Fixed one-second sample history. Single writer; snapshots copy
    under the lock so another thread may read safely."""

    capacity: int = WINDOW_SAMPLES
    _data: np.ndarray = field(init=False)
    _cursor: int = field(init=False, default=0)
    _lock: threading.Lock = field(init=False, default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        self._data = np.zeros(self.capacity, dtype=np.int16)

    def push(self, chunk) -> None:
        chunk = np.asarray(chunk, dtype=np.int16)
        n = len(chunk)
        if n == 0:
            return
        with self._lock:
            if n >= self.capacity:
                self._data[:] = chunk[-self.capacity:]
                self._cursor = 0
                return
            end = self._cursor + n
            if end <= self.capacity:
                self._data[self._cursor:end] = chunk
            else:
                head = self.capacity - self._cursor
                self._data[self._cursor:] = chunk[:head]
                self._data[: end - self.capacity] = chunk[head:]
            self._cursor = end % self.capacity

    def clear(self) -> None:
        with self._lock:
            self._data[:] = 0
            self._cursor = 0

    def snapshot(self) -> np.ndarray:
        """The last `capacity` samples in chronological order (zero-filled
        history before the first writes)."""
        with self._lock:
            return np.concatenate([self._data[self._cursor:], self._data[: self._cursor]])


def ring_push(buf: RingBuffer, chunk) -> RingBuffer:
    buf.push(chunk)
    return buf
