"""Streaming simulation service: live rollouts over newline-delimited JSON.

The protocol state machine (`SimSession`) is transport-agnostic and fully
deterministic: control messages queue up and take effect on the next tick,
so the emitted state stream is a pure function of (model, start message,
tick-indexed message schedule).  `FieldService` drives sessions over TCP at
a fixed wall-clock tick rate; `replay_script` re-runs a recorded schedule
and must reproduce the stream byte for byte.

Client -> server message types: load, start, pause, resume, perturb,
set_lambda, set_state, grid.  Server -> client: state, grid_data, ack,
error.  One JSON object per line.
"""

from __future__ import annotations

import json
import queue
import socket
import socketserver
import threading
import time
from collections import deque

import numpy as np

from .dynamics import DynamicsConfig, RolloutSession
from .errors import IntegrationError, SplineFieldError
from .field import UnionField
from .io import field_from_dict, field_grid
from .spline import QuadraticSpline

DEFAULT_PORT = 7878
DEFAULT_RATE = 60.0
# Ticks' worth of states a slow client may lag before frames drop (oldest first).
OUTBOX_LIMIT = 512


def encode_message(msg: dict) -> str:
    """Canonical wire encoding; replay comparisons are done on these strings."""
    return json.dumps(msg, sort_keys=True, separators=(",", ":"))


def _error(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}


class SimSession:
    """One client's deterministic simulation state machine.

    `handle` applies control messages (mutations land on the next tick);
    `tick` advances one integration step and returns the state message.
    """

    def __init__(self, field=None):
        self.field = field
        self.session: RolloutSession | None = None
        self.running = False
        self.tick_count = 0
        self._pending: list[dict] = []

    # -- message handling ----------------------------------------------------

    def handle(self, msg) -> list[dict]:
        if not isinstance(msg, dict) or "type" not in msg:
            return [_error("bad-message", "messages are JSON objects with a 'type'")]
        kind = msg["type"]
        handler = getattr(self, f"_on_{kind.replace('-', '_')}", None)
        if handler is None:
            return [_error("unknown-type", f"unknown message type {kind!r}")]
        try:
            return handler(msg)
        except (SplineFieldError, ValueError, TypeError, KeyError) as exc:
            return [_error("bad-message", f"{kind}: {exc}")]

    def _ack(self, kind: str) -> dict:
        # at_tick is the stream index the message landed at: its effect is
        # visible from state at_tick + 1 onward.  Recording (at_tick, msg)
        # pairs yields a script that replay_script reproduces exactly.
        return {"type": "ack", "ack": kind, "at_tick": self.tick_count}

    def _on_load(self, msg) -> list[dict]:
        self.field = field_from_dict(msg["model"], source="load message")
        self.session = None
        self.running = False
        self.tick_count = 0
        self._pending.clear()
        return [self._ack("load")]

    def _on_start(self, msg) -> list[dict]:
        if self.field is None:
            return [_error("no-model", "load a model before starting")]
        config = DynamicsConfig(
            lam=float(msg.get("lambda", 1.0)),
            step_size=(None if msg.get("step_size") is None else float(msg["step_size"])),
            integrator=msg.get("integrator", "euler"),
            max_steps=1,  # stepping is driven by ticks, not by rollout()
            speed_cap=(None if msg.get("speed_cap") is None else float(msg["speed_cap"])),
        )
        x0 = np.asarray(msg["x0"], dtype=float)
        self.session = RolloutSession(self.field, x0, config)
        self.running = True
        self.tick_count = 0
        self._pending.clear()
        return [self._ack("start")]

    def _on_pause(self, msg) -> list[dict]:
        if self.session is None:
            return [_error("no-session", "pause before start")]
        self.running = False
        return [self._ack("pause")]

    def _on_resume(self, msg) -> list[dict]:
        if self.session is None:
            return [_error("no-session", "resume before start")]
        self.running = True
        return [self._ack("resume")]

    def _on_perturb(self, msg) -> list[dict]:
        if self.session is None:
            return [_error("no-session", "perturb before start")]
        delta = np.asarray(msg["delta"], dtype=float)
        if delta.shape != (self.field.dim,) or not np.all(np.isfinite(delta)):
            return [_error("bad-message", f"delta must be a finite {self.field.dim}-vector")]
        self._pending.append(msg)
        return [self._ack("perturb")]

    def _on_set_lambda(self, msg) -> list[dict]:
        if self.session is None:
            return [_error("no-session", "set_lambda before start")]
        lam = float(msg["lambda"])
        if not lam > 0:
            return [_error("bad-message", "lambda must be > 0")]
        self._pending.append(msg)
        return [self._ack("set_lambda")]

    def _on_set_state(self, msg) -> list[dict]:
        if self.session is None:
            return [_error("no-session", "set_state before start")]
        x = np.asarray(msg["x"], dtype=float)
        if x.shape != (self.field.dim,) or not np.all(np.isfinite(x)):
            return [_error("bad-message", f"x must be a finite {self.field.dim}-vector")]
        self._pending.append(msg)
        return [self._ack("set_state")]

    def _on_grid(self, msg) -> list[dict]:
        if self.field is None:
            return [_error("no-model", "load a model before requesting a grid")]
        if msg.get("bounds") is not None:
            bounds = [float(b) for b in msg["bounds"]]
        else:
            lo, hi = self.field.bounding_box(margin=0.25)
            bounds = [float(lo[0]), float(hi[0]), float(lo[1]), float(hi[1])]
        resolution = msg.get("resolution", 100)
        if isinstance(resolution, (list, tuple)):
            nx, ny = (int(v) for v in resolution)
        else:
            nx = ny = int(resolution)
        rows = field_grid(
            self.field, bounds, (nx, ny), axes=msg.get("axes"), fixed=msg.get("fixed")
        )
        members = (
            self.field.members if isinstance(self.field, UnionField) else [self.field]
        )
        curves = []
        for m in members:
            s = np.linspace(0.0, m.n_segments, 200)
            curves.append([[float(v) for v in m.evaluate(si)] for si in s])
        return [
            {
                "type": "grid_data",
                "bounds": bounds,
                "resolution": [nx, ny],
                "distance": [r["distance"] for r in rows],
                "phase": [r["phase"] for r in rows],
                "curves": curves,
                "dim": self.field.dim,
            }
        ]

    # -- time ----------------------------------------------------------------

    def _apply_pending(self) -> None:
        for msg in self._pending:
            if msg["type"] == "perturb":
                self.session.perturb(np.asarray(msg["delta"], dtype=float))
            elif msg["type"] == "set_lambda":
                self.session.config.lam = float(msg["lambda"])
            elif msg["type"] == "set_state":
                self.session.x = np.asarray(msg["x"], dtype=float)
        self._pending.clear()

    def state_message(self) -> dict:
        q, v = self.session.measure()
        return {
            "type": "state",
            "tick": self.tick_count,
            "x": [float(c) for c in self.session.x],
            "distance": q.distance,
            "phase": q.phase,
            "velocity": [float(c) for c in v],
            "lyapunov": 0.5 * q.distance * q.distance,
        }

    def tick(self) -> dict | None:
        """Advance one step if running; returns the new state message."""
        if not self.running or self.session is None:
            return None
        self._apply_pending()
        try:
            self.session.advance()
        except IntegrationError as exc:
            self.running = False
            return _error("diverged", str(exc))
        self.tick_count += 1
        return self.state_message()


def replay_script(script: list[dict], n_ticks: int, model: dict | None = None) -> list[str]:
    """Re-run a recorded message schedule; returns the encoded state stream.

    `script` is the arrival-ordered list of {"at_tick": k, "msg": {...}}
    entries, where k is the session tick the message landed at (the `at_tick`
    field of its live ack).  Messages landing at tick k affect state k + 1
    onward; messages that arrived while the session was paused share the
    frozen tick and re-apply in arrival order.  The stream stops after
    n_ticks states or when a paused session has no further messages.
    """
    session = SimSession()
    if model is not None:
        session.handle({"type": "load", "model": model})
    stream: list[str] = []
    idx = 0
    while len(stream) < n_ticks:
        while idx < len(script) and int(script[idx]["at_tick"]) == session.tick_count:
            session.handle(script[idx]["msg"])
            idx += 1
        out = session.tick()
        if out is None:
            break  # paused with nothing left that could resume it
        stream.append(encode_message(out))
    return stream


class _SessionHandler(socketserver.StreamRequestHandler):
    def handle(self):
        service: FieldService = self.server.service  # type: ignore[attr-defined]
        session = SimSession(service.field)
        inbox: queue.Queue = queue.Queue()
        outbox: deque = deque(maxlen=OUTBOX_LIMIT)
        wake = threading.Condition()
        alive = True

        def read_loop():
            nonlocal alive
            for raw in self.rfile:
                inbox.put(raw)
            alive = False

        def write_loop():
            while True:
                with wake:
                    while not outbox and alive:
                        wake.wait(0.05)
                    if not outbox and not alive:
                        return
                    msg = outbox.popleft()
                try:
                    self.wfile.write((encode_message(msg) + "\n").encode())
                except (BrokenPipeError, ConnectionResetError, OSError):
                    return

        reader = threading.Thread(target=read_loop, daemon=True)
        writer = threading.Thread(target=write_loop, daemon=True)
        reader.start()
        writer.start()

        period = 1.0 / service.rate
        next_tick = time.monotonic()
        try:
            while alive and not service.stopping.is_set():
                next_tick += period
                while True:
                    try:
                        raw = inbox.get_nowait()
                    except queue.Empty:
                        break
                    try:
                        msg = json.loads(raw)
                    except json.JSONDecodeError as exc:
                        replies = [_error("bad-json", str(exc))]
                    else:
                        replies = session.handle(msg)
                    with wake:
                        outbox.extend(replies)
                        wake.notify()
                state = session.tick()
                if state is not None:
                    with wake:
                        outbox.append(state)
                        wake.notify()
                delay = next_tick - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
                else:
                    next_tick = time.monotonic()  # fell behind: don't burst
        finally:
            alive = False
            with wake:
                wake.notify()
            writer.join(timeout=1.0)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class FieldService:
    """TCP server streaming simulation state at a fixed tick rate."""

    def __init__(self, field, host="127.0.0.1", port=DEFAULT_PORT, rate=DEFAULT_RATE):
        if rate <= 0:
            raise ValueError(f"rate must be > 0, got {rate}")
        self.field = field
        self.rate = float(rate)
        self.stopping = threading.Event()
        self._server = _Server((host, port), _SessionHandler)
        self._server.service = self  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def serve_forever(self):
        self._server.serve_forever(poll_interval=0.1)

    def start_background(self):
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def shutdown(self):
        self.stopping.set()
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def connect(host: str, port: int, timeout: float = 5.0) -> socket.socket:
    """Convenience client socket for scripts and tests."""
    sock = socket.create_connection((host, port), timeout=timeout)
    return sock
