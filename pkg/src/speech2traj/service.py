"""Live-demo network endpoint.

Wire protocol on ``/stream`` (WebSocket):
  client -> server  binary frames: raw mono 16 kHz little-endian 16-bit
                    PCM chunks appended to the session's ring buffer
  client -> server  text frames: JSON control, currently {"cmd": "reset"}
                    which clears the ring
  server -> client  text frames: one JSON object per trajectory event,
                    {"trajectory": [5 reals], "latency_ms": real, "ts_ms": int}

Sessions are fully isolated (one ring each); the loaded network weights
are the only shared state. A slow reader never blocks anyone: each
session has a bounded outbox and the oldest event is dropped on overflow,
because a newer trajectory supersedes an older one. No authentication or
TLS — this is a demo service for a trusted network.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import socket
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from . import __version__
from .audio import AudioClip, RingBuffer
from .errors import BindFailure, Speech2TrajError
from .runtime import InferenceEngine, TrajectoryEvent, advance_deadline

OUTBOX_DEPTH = 8


class OddFrameLength(Speech2TrajError):
    pass


@dataclass
class Session:
    session_id: int
    ring: RingBuffer = field(default_factory=RingBuffer)
    last_event: TrajectoryEvent | None = None
    client: str = ""
    opened_at: float = field(default_factory=time.monotonic)


def handle_audio_frame(session: Session, frame: bytes) -> None:
    if len(frame) % 2 != 0:
        raise OddFrameLength(f"binary frame length {len(frame)} is odd")
    session.ring.push(np.frombuffer(frame, dtype="<i2"))


def event_message(event: TrajectoryEvent) -> str:
    return json.dumps(event.to_dict())


def create_app(engine: InferenceEngine, period_ms: float = 200.0,
               outbox_depth: int = OUTBOX_DEPTH, ui_dir=None) -> FastAPI:
    if period_ms < 20.0:
        from .errors import InvalidConfig

        raise InvalidConfig(f"inference period must be >= 20 ms, got {period_ms}")
    app = FastAPI(title="speech2traj demo service")
    app.state.engine = engine
    app.state.sessions = {}
    app.state.period_ms = period_ms
    counter = itertools.count(1)

    @app.get("/healthz")
    async def healthz():
        net = engine.network
        return {
            "status": "ok",
            "version": __version__,
            "filters2": net.spec.filters2,
            "trainable_params": net.trainable_param_count(),
            "period_ms": period_ms,
            "sessions": len(app.state.sessions),
        }

    async def inference_loop(session: Session, outbox: asyncio.Queue,
                             stop: asyncio.Event):
        loop = asyncio.get_running_loop()
        period_s = period_ms / 1000.0
        deadline = loop.time()
        while not stop.is_set():
            now = loop.time()
            if now < deadline:
                await asyncio.sleep(deadline - now)
            clip = AudioClip(session.ring.snapshot(),
                             source_id=f"session-{session.session_id}")
            event = await loop.run_in_executor(None, engine.infer_clip, clip)
            session.last_event = event
            if outbox.full():
                outbox.get_nowait()  # drop oldest: superseded anyway
            outbox.put_nowait(event)
            deadline = advance_deadline(deadline, loop.time(), period_s)

    async def sender(ws: WebSocket, outbox: asyncio.Queue):
        while True:
            event = await outbox.get()
            await ws.send_text(event_message(event))

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        session = Session(session_id=next(counter),
                          client=f"{ws.client.host}:{ws.client.port}" if ws.client else "")
        app.state.sessions[session.session_id] = session
        outbox: asyncio.Queue = asyncio.Queue(maxsize=outbox_depth)
        stop = asyncio.Event()
        tasks = [asyncio.create_task(inference_loop(session, outbox, stop)),
                 asyncio.create_task(sender(ws, outbox))]
        try:
            while True:
                message = await ws.receive()
                if message["type"] == "websocket.disconnect":
                    break
                if message.get("bytes") is not None:
                    try:
                        handle_audio_frame(session, message["bytes"])
                    except OddFrameLength as exc:
                        await ws.send_text(json.dumps({"error": str(exc)}))
                        break
                elif message.get("text") is not None:
                    try:
                        control = json.loads(message["text"])
                        cmd = control["cmd"]
                    except (ValueError, TypeError, KeyError):
                        await ws.send_text(json.dumps({"error": "malformed control frame"}))
                        break
                    if cmd == "reset":
                        session.ring.clear()
                    else:
                        await ws.send_text(json.dumps({"error": f"unknown cmd {cmd!r}"}))
                        break
        except WebSocketDisconnect:
            pass
        finally:
            # unregister synchronously first: if this handler is being
            # cancelled, any await below may never return
            app.state.sessions.pop(session.session_id, None)
            stop.set()
            for task in tasks:
                task.cancel()
            try:
                await asyncio.gather(*tasks, return_exceptions=True)
            except BaseException:
                pass
            try:
                await ws.close()
            except BaseException:
                pass

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(checkpoint_path, host: str = "127.0.0.1", port: int = 8765,
          period_ms: float = 200.0, ui_dir=None) -> None:
    """Load the checkpoint, verify the port binds, then run until killed."""
    import uvicorn

    engine = InferenceEngine.from_checkpoint(checkpoint_path)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as exc:
        raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
    finally:
        probe.close()
    app = create_app(engine, period_ms=period_ms, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
