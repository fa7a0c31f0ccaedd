"""Interactive session host.

One live simulation session over a websocket: the client streams handle
targets (mouse drags), the server steps the same fixed-step world the batch
runner uses and broadcasts state frames, task completions and the set summary.
Physics always advances in fixed 100 Hz steps regardless of client cadence;
missing input holds the last handle target (zero-order hold). Real-time pacing
can be disabled for scripted clients and tests.

Protocol (JSON frames):
  client -> server: {"type": "start_set", "seed": <u64>}
                    {"type": "leader_input", "pos": [x, y], "t": <client_ms>}
                    {"type": "abort"}
  server -> client: {"type": "state", "phase", "cmo": [x, y, yaw], "goal": [x, y],
                     "base": [x, y], "task_index", "elapsed"}
                    {"type": "task_complete", "completion_time", "scaled_path_length"}
                    {"type": "set_complete", "summary": {...}}
                    {"type": "error", "detail"}
"""

from __future__ import annotations

import asyncio
import logging
import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket

from . import _layout as L
from ._backend import kernel
from .metrics import scaled_path_length
from .model import Vec2
from .sim import (
    ParamBundle,
    SessionLog,
    SetResult,
    TrialResult,
    World,
    bundle_config_dict,
    export_session,
    goal_sequence,
    hold_rows,
)
from .tasks import enumerate_valid_sets, sample_distinct_indices

log = logging.getLogger("comanip.server")

IDLE = "idle"
COUNTDOWN = "countdown"
TASK_ACTIVE = "task_active"
PAUSE = "pause"
SET_COMPLETE = "set_complete"

COUNTDOWN_SECONDS = 3.0
BROADCAST_HZ = 30.0


class LiveSession:
    """Single-owner live world; messages apply between fixed steps."""

    def __init__(self, bundle: ParamBundle, out_dir=None):
        self.bundle = bundle
        self.out_dir = out_dir
        self.phase = IDLE
        self.world: World | None = None
        self.library = None
        self.seed = None
        self.library_index = -1
        self.task_set = None
        self.goals = []
        self.task_index = 0
        self.task_start_time = 0.0
        self.countdown_remaining = 0.0
        self.pause_remaining = 0.0
        self.handle_target: Vec2 | None = None
        self.last_input_ms = -math.inf
        self.trials: list = []
        self.events: list = []
        # per-task trace state
        self._trace = None
        self._rows = 0
        self._hold = 0
        self._set_exported = False

    # --- message handling -------------------------------------------------
    def handle_message(self, msg: dict) -> None:
        if not isinstance(msg, dict) or "type" not in msg:
            self.events.append({"type": "error", "detail": "malformed message"})
            return
        kind = msg["type"]
        if kind == "start_set":
            try:
                seed = int(msg["seed"])
            except (KeyError, TypeError, ValueError):
                self.events.append({"type": "error", "detail": "start_set requires an integer seed"})
                return
            self.start_set(seed)
        elif kind == "leader_input":
            pos = msg.get("pos")
            if (not isinstance(pos, (list, tuple)) or len(pos) != 2
                    or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in pos)):
                self.events.append({"type": "error", "detail": "leader_input requires pos [x, y]"})
                return
            t_ms = msg.get("t", 0)
            if not isinstance(t_ms, (int, float)) or t_ms < self.last_input_ms:
                return  # stale or unusable timestamp: ignore
            self.last_input_ms = t_ms
            self.handle_target = Vec2(float(pos[0]), float(pos[1]))
            if self.phase == IDLE and self.world is not None:
                # an interrupted session resumes on fresh input
                self.phase = TASK_ACTIVE
        elif kind == "abort":
            self.phase = IDLE
            self.world = None
            self.trials = []
            self._trace = None
        else:
            self.events.append({"type": "error", "detail": f"unknown message type {kind!r}"})

    def start_set(self, seed: int) -> None:
        if self.library is None:
            self.library = enumerate_valid_sets(self.bundle.sim.workspace_half_width)
        self.seed = seed
        self.library_index = sample_distinct_indices(len(self.library), 1, seed)[0]
        self.task_set = self.library[self.library_index]
        self.world = World(self.bundle)
        self.goals = goal_sequence(self.task_set, Vec2(0.0, 0.0))
        self.task_index = 0
        self.trials = []
        self.handle_target = self.world.handle_position()
        self.last_input_ms = -math.inf
        self.countdown_remaining = COUNTDOWN_SECONDS
        self.phase = COUNTDOWN
        self._set_exported = False

    # --- stepping -----------------------------------------------------------
    def _center_target(self) -> Vec2:
        """Live handle target -> center target (grip acts on the outline)."""
        s = self.world.S
        yaw = s[L.S_CMO_YAW]
        c = math.cos(yaw)
        sn = math.sin(yaw)
        off = self.bundle.cmo.handle_offset
        return Vec2(self.handle_target.x - (c * off.x - sn * off.y),
                    self.handle_target.y - (sn * off.x + c * off.y))

    def _begin_task(self) -> None:
        cfg = self.bundle.sim
        n_max = int(round(cfg.task_timeout / cfg.dt))
        self._trace = np.zeros((n_max + 1, L.RECORD_SIZE))
        tgt = self._center_target()
        kernel.record_state(self.world.S, self.world.P, tgt.x, tgt.y, self._trace[0])
        self._rows = 1
        self.task_start_time = self.world.time
        goal = self.goals[self.task_index]
        ref = self.world.reference_point()
        tol = cfg.completion_tolerance
        aligned = (ref.x - goal.x) ** 2 + (ref.y - goal.y) ** 2 <= tol * tol
        self._hold = 1 if aligned else 0
        self.phase = TASK_ACTIVE

    def _finish_task(self, completed: bool, completion_time) -> None:
        goal = self.goals[self.task_index]
        start = self.goals[self.task_index - 1] if self.task_index else Vec2(0.0, 0.0)
        trace = self._trace[: self._rows].copy()
        trial = TrialResult(self.task_set.ordering[self.task_index], start, goal,
                           trace, completed, completion_time)
        self.trials.append(trial)
        spl = scaled_path_length(trace, start, goal,
                                 self.bundle.controller.reference_point,
                                 self.bundle.cmo.plate_offset)
        self.events.append({
            "type": "task_complete",
            "completion_time": completion_time,
            "scaled_path_length": spl,
        })
        self._trace = None
        if self.task_index + 1 < len(self.goals):
            self.task_index += 1
            self.pause_remaining = self.bundle.sim.pause_duration
            self.phase = PAUSE
        else:
            self.phase = SET_COMPLETE
            self.events.append({"type": "set_complete", "summary": self._summary()})
            if self.out_dir is not None:
                self.export(self.out_dir)

    def _summary(self) -> dict:
        return {
            "seed": self.seed,
            "tasks": [
                {
                    "task": t.task.code,
                    "completed": t.completed,
                    "completion_time": t.completion_time,
                    "scaled_path_length": scaled_path_length(
                        t.trace, t.start, t.goal,
                        self.bundle.controller.reference_point,
                        self.bundle.cmo.plate_offset),
                }
                for t in self.trials
            ],
        }

    def step(self) -> None:
        """One fixed physics step appropriate for the current phase."""
        if self.phase not in (COUNTDOWN, TASK_ACTIVE, PAUSE) or self.world is None:
            return
        dt = self.bundle.sim.dt
        tgt = self._center_target()

        if self.phase == COUNTDOWN:
            self.world.step_with_target(tgt)
            self.countdown_remaining -= dt
            if self.countdown_remaining <= 0.0:
                self._begin_task()
            return

        if self.phase == PAUSE:
            self.world.step_with_target(tgt)
            self.pause_remaining -= dt
            if self.pause_remaining <= 0.0:
                self._begin_task()
            return

        # task_active: record into the trial trace and check completion
        row = self._trace[self._rows]
        kernel.step_target(self.world.S, self.world.P, tgt.x, tgt.y, row)
        self._rows += 1
        cfg = self.bundle.sim
        goal = self.goals[self.task_index]
        rx, ry = kernel.reference_xy(self.world.S, self.world.P)
        tol = cfg.completion_tolerance
        if (rx - goal.x) ** 2 + (ry - goal.y) ** 2 <= tol * tol:
            self._hold += 1
        else:
            self._hold = 0
        if self._hold >= hold_rows(cfg):
            self._finish_task(True, float(row[L.R_T] - self._trace[0, L.R_T]))
        elif self._rows >= self._trace.shape[0]:
            self._finish_task(False, None)

    def state_frame(self) -> dict:
        if self.world is None:
            return {"type": "state", "phase": self.phase, "cmo": None, "goal": None,
                    "base": None, "task_index": self.task_index, "elapsed": 0.0}
        pose = self.world.cmo_pose
        base = self.world.base_position
        goal = None
        if self.goals:
            if self.phase == PAUSE:
                # hold the completed goal; the next one appears at task start
                goal = self.goals[max(self.task_index - 1, 0)]
            else:
                goal = self.goals[self.task_index]
        elapsed = 0.0
        if self.phase == TASK_ACTIVE:
            elapsed = self.world.time - self.task_start_time
        return {
            "type": "state",
            "phase": self.phase,
            "cmo": [pose.position.x, pose.position.y, pose.heading],
            "goal": [goal.x, goal.y] if goal else None,
            "base": [base.x, base.y],
            "task_index": self.task_index,
            "elapsed": elapsed,
        }

    def export(self, out_dir) -> None:
        if self._set_exported or not self.trials:
            return
        log_obj = SessionLog(
            seed=self.seed or 0,
            n_sets=1,
            workspace_half_width=self.bundle.sim.workspace_half_width,
            sets=[SetResult(self.library_index, self.task_set, self.trials)],
            config=bundle_config_dict(self.bundle),
        )
        target = Path(out_dir) / f"session_{self.seed}"
        export_session(log_obj, target)
        self._set_exported = True
        log.info("exported interactive session to %s", target)


def create_app(bundle: ParamBundle | None = None, out_dir=None, realtime: bool = True,
               static_dir=None, steps_per_broadcast: int | None = None):
    """FastAPI app hosting one live session at /session."""
    bundle = bundle or ParamBundle()
    app = FastAPI(title="comanip session server")
    session = LiveSession(bundle, out_dir=out_dir)
    app.state.session = session
    app.state.connected = False

    dt = bundle.sim.dt
    chunk = steps_per_broadcast or max(1, int(round(1.0 / (BROADCAST_HZ * dt))))
    interval = chunk * dt

    @app.websocket("/session")
    async def session_socket(ws: WebSocket):
        await ws.accept()
        if app.state.connected:
            await ws.send_json({"type": "error", "detail": "a session client is already connected"})
            await ws.close()
            return
        app.state.connected = True
        inbox: asyncio.Queue = asyncio.Queue()

        async def receiver():
            while True:
                try:
                    msg = await ws.receive_json()
                except Exception:
                    return  # disconnect or malformed socket data ends the session
                await inbox.put(msg)

        async def runner():
            # Real-time mode paces against the wall clock and tolerates any
            # client cadence (zero-order hold). Fast mode runs in lockstep,
            # one broadcast chunk per inbound message, so scripted clients
            # can drive the session as fast as the socket allows.
            loop = asyncio.get_running_loop()
            next_tick = loop.time()
            await ws.send_json(session.state_frame())
            while True:
                if realtime:
                    while not inbox.empty():
                        session.handle_message(inbox.get_nowait())
                else:
                    session.handle_message(await inbox.get())
                    while not inbox.empty():
                        session.handle_message(inbox.get_nowait())
                for _ in range(chunk):
                    session.step()
                    if session.phase in (IDLE, SET_COMPLETE):
                        break
                await ws.send_json(session.state_frame())
                while session.events:
                    await ws.send_json(session.events.pop(0))
                if realtime:
                    next_tick += interval
                    delay = next_tick - loop.time()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    else:
                        next_tick = loop.time()

        recv_task = asyncio.create_task(receiver())
        run_task_ = asyncio.create_task(runner())
        try:
            _, pending = await asyncio.wait(
                {recv_task, run_task_}, return_when=asyncio.FIRST_COMPLETED
            )
            for task in pending:
                task.cancel()
        finally:
            app.state.connected = False
            if session.phase in (COUNTDOWN, TASK_ACTIVE, PAUSE):
                session.phase = IDLE  # paused; fresh leader_input resumes

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(bundle: ParamBundle, host: str = "127.0.0.1", port: int = 8700,
          out_dir=None, realtime: bool = True, static_dir=None) -> None:
    import uvicorn

    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
    app = create_app(bundle, out_dir=out_dir, realtime=realtime, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
