"""Streaming inference: sliding one-second window, fixed-cadence forward
passes, clamped trajectory events, latency measurement.

The network's final ReLU guarantees nonnegative outputs but nothing
bounds them above 1, so trajectories are clamped to [0, 1] here, at the
boundary where they leave the model. Overruns skip ticks instead of
queueing: a newer trajectory supersedes an older one.
"""

from __future__ import annotations

import math
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, RingBuffer
from .checkpoint import load_checkpoint
from .errors import EngineStopped, InvalidConfig
from .features import feature_of
from .model import Network

MIN_PERIOD_MS = 20.0


@dataclass
class RuntimeConfig:
    checkpoint_path: Path | None = None
    period_ms: float = 200.0
    latency_log_path: Path | None = None

    def __post_init__(self):
        if self.period_ms < MIN_PERIOD_MS:
            raise InvalidConfig(
                f"inference period must be >= {MIN_PERIOD_MS} ms, got {self.period_ms}")


@dataclass
class TrajectoryEvent:
    trajectory: np.ndarray  # 5 floats in [0, 1]
    inference_latency_ms: float
    window_end_timestamp: float

    def to_dict(self) -> dict:
        return {
            "trajectory": [float(v) for v in self.trajectory],
            "latency_ms": self.inference_latency_ms,
            "ts_ms": int(self.window_end_timestamp * 1000),
        }


def clamp_trajectory(raw: np.ndarray) -> np.ndarray:
    return np.clip(raw, 0.0, 1.0)


class InferenceEngine:
    """Loaded network in infer mode; immutable and shareable."""

    def __init__(self, network: Network, latency_log_path=None):
        self.network = network
        self._log_fh = open(latency_log_path, "a") if latency_log_path else None
        if self._log_fh and self._log_fh.tell() == 0:
            self._log_fh.write("timestamp_ms,latency_ms\n")

    @classmethod
    def from_checkpoint(cls, path, latency_log_path=None) -> "InferenceEngine":
        network, _ = load_checkpoint(path)
        return cls(network, latency_log_path=latency_log_path)

    def infer_clip(self, clip: AudioClip) -> TrajectoryEvent:
        t0 = time.perf_counter()
        raw = self.network.forward(feature_of(clip), mode="infer")
        latency_ms = (time.perf_counter() - t0) * 1000.0
        now = time.monotonic()
        if self._log_fh:
            self._log_fh.write(f"{int(now * 1000)},{latency_ms:.3f}\n")
            self._log_fh.flush()
        return TrajectoryEvent(clamp_trajectory(raw), latency_ms, now)

    def bench(self, iterations: int = 100, seed: int = 0) -> dict:
        """Repeated infer_clip on one fixed random clip; wall-clock stats."""
        if iterations < 30:
            raise InvalidConfig(f"bench needs >= 30 iterations, got {iterations}")
        rng = np.random.default_rng(seed)
        clip = AudioClip(rng.integers(-2000, 2000, 16000, dtype=np.int16),
                         source_id="bench")
        self.infer_clip(clip)  # warm-up outside the measurement
        samples = [self.infer_clip(clip).inference_latency_ms for _ in range(iterations)]
        arr = np.array(samples)
        return {
            "iterations": iterations,
            "mean_ms": float(arr.mean()),
            "p50_ms": float(np.percentile(arr, 50)),
            "p95_ms": float(np.percentile(arr, 95)),
            "max_ms": float(arr.max()),
            "samples_ms": samples,
        }

    def close(self):
        if self._log_fh:
            self._log_fh.close()
            self._log_fh = None


def advance_deadline(deadline: float, now: float, period_s: float) -> float:
    """Next tick strictly after `now`, skipping any ticks an overrun
    swallowed (no queue growth)."""
    steps = max(1, math.ceil((now - deadline) / period_s))
    nxt = deadline + steps * period_s
    if nxt <= now:
        nxt += period_s
    return nxt


class StreamLoop:
    """Fixed-cadence inference over a ring buffer fed by an external
    producer. Events arrive in order on a single-consumer queue."""

    def __init__(self, engine: InferenceEngine, ring: RingBuffer, period_ms: float):
        if period_ms < MIN_PERIOD_MS:
            raise InvalidConfig(f"period must be >= {MIN_PERIOD_MS} ms")
        self.engine = engine
        self.ring = ring
        self.period_s = period_ms / 1000.0
        self._queue: queue.Queue = queue.Queue()
        self._stop = threading.Event()
        self._stopped = False
        self._thread = None

    def start(self):
        if self._stopped:
            raise EngineStopped("stream loop cannot be restarted")
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        return self

    def _run(self):
        deadline = time.monotonic()
        while not self._stop.is_set():
            now = time.monotonic()
            if now < deadline:
                if self._stop.wait(deadline - now):
                    break
            clip = AudioClip(self.ring.snapshot(), source_id="stream")
            self._queue.put(self.engine.infer_clip(clip))
            deadline = advance_deadline(deadline, time.monotonic(), self.period_s)
        self._queue.put(None)  # sentinel

    def stop(self):
        self._stop.set()
        self._stopped = True
        if self._thread:
            self._thread.join(timeout=5)

    def events(self):
        """Yields TrajectoryEvents in order; raises EngineStopped when the
        loop has shut down and the queue is drained."""
        while True:
            event = self._queue.get()
            if event is None:
                raise EngineStopped("stream loop stopped")
            yield event
