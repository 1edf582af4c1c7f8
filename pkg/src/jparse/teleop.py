"""Live teleoperation service for a simulated arm.

A single tick loop owns the session state and advances the simulation at a
fixed rate; websocket handlers only enqueue validated commands and relay the
state broadcast, so there is no shared mutable state across tasks.  All
session logic lives in TeleopSession, which is deterministic given the tick
schedule and command sequence.

Wire protocol (JSON text frames): {"type": .., "seq": .., "payload": {..}}
with client types set_goal, set_twist, set_resolver, set_gains, reset and
server types state and error.  Client seq must be strictly increasing.
"""

from __future__ import annotations

import argparse
import asyncio
import contextlib
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .controller import ControllerGains, step
from .geometry import PoseSE3
from .kinematics import (
    ManipulatorModel,
    fk_and_jacobian,
    joint_world_positions,
    load_model,
)
from .models import builtin_model, builtin_model_names
from .resolvers import (
    JParse,
    ResolverConfig,
    config_from_dict,
    config_to_dict,
    resolve,
    singularity_metrics,
    svd,
)

STALE_TWIST_S = 0.5
GOAL_FOLLOW = "goal_follow"
DIRECT_TWIST = "direct_twist"


class CommandError(ValueError):
    """Client message rejected; the session state is unchanged."""


@dataclass
class TeleopConfig:
    model_ref: str = "spatial7"
    tick_hz: float = 30.0
    initial_q: Optional[tuple[float, ...]] = None
    k_pos: float = 2.0
    k_ori: float = 1.0
    twist_cap: float = 1.0
    resolver: ResolverConfig = field(default_factory=lambda: JParse(gamma=0.1))

    def load_model(self) -> ManipulatorModel:
        if self.model_ref in builtin_model_names():
            return builtin_model(self.model_ref)
        return load_model(self.model_ref)


class TeleopSession:
    """Deterministic simulation core: commands in, state snapshots out."""

    def __init__(self, config: TeleopConfig):
        self.config = config
        self.model = config.load_model()
        m = self.model.task_dim
        dt = 1.0 / config.tick_hz
        self.gains = ControllerGains.uniform(
            m=m, k_pos=config.k_pos, k_ori=config.k_ori, dt=dt,
            twist_cap=config.twist_cap,
        )
        if config.initial_q is not None:
            self.initial_q = np.asarray(config.initial_q, dtype=float)
        else:
            self.initial_q = np.full(self.model.dof, 0.3)
        self.model.check_q(self.initial_q)
        self.q = self.initial_q.copy()
        self.resolver = config.resolver
        self.mode = GOAL_FOLLOW
        self.goal: Optional[PoseSE3] = None
        self.twist = np.zeros(m)
        self.twist_tick = -(10 ** 9)
        self.tick_index = 0
        self.last_client_seq: Optional[int] = None
        self._out_seq = 0

    # -- commands ---------------------------------------------------------

    def apply_command(self, msg: dict) -> None:
        """Validate and apply one wire message; raises CommandError (state
        untouched) on any invalid input."""
        if not isinstance(msg, dict):
            raise CommandError("message must be a JSON object")
        seq = msg.get("seq")
        if not isinstance(seq, int):
            raise CommandError("missing integer seq")
        if self.last_client_seq is not None and seq <= self.last_client_seq:
            raise CommandError(
                f"seq must be strictly increasing (got {seq} after {self.last_client_seq})"
            )
        kind = msg.get("type")
        payload = msg.get("payload") or {}
        handler = {
            "set_goal": self._cmd_set_goal,
            "set_twist": self._cmd_set_twist,
            "set_resolver": self._cmd_set_resolver,
            "set_gains": self._cmd_set_gains,
            "reset": self._cmd_reset,
        }.get(kind)
        if handler is None:
            raise CommandError(f"unknown message type {kind!r}")
        handler(payload)
        self.last_client_seq = seq

    def _cmd_set_goal(self, payload: dict) -> None:
        try:
            position = np.asarray(payload["position"], dtype=float).reshape(3)
            axis = np.asarray(payload.get("axis", [1.0, 0.0, 0.0]), dtype=float).reshape(3)
            angle = float(payload.get("angle", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise CommandError(f"bad goal payload: {exc}") from None
        if not (np.isfinite(position).all() and np.isfinite(axis).all() and math.isfinite(angle)):
            raise CommandError("goal entries must be finite")
        try:
            goal = PoseSE3(position=position, axis=axis, angle=angle)
        except ValueError as exc:
            raise CommandError(str(exc)) from None
        self.goal = goal
        self.mode = GOAL_FOLLOW

    def _cmd_set_twist(self, payload: dict) -> None:
        try:
            twist = np.asarray(payload["twist"], dtype=float).reshape(-1)
        except (KeyError, TypeError, ValueError) as exc:
            raise CommandError(f"bad twist payload: {exc}") from None
        m = self.model.task_dim
        if twist.shape[0] != m:
            raise CommandError(f"twist must have {m} entries")
        if not np.isfinite(twist).all():
            raise CommandError("twist entries must be finite")
        self.twist = twist
        self.twist_tick = self.tick_index
        self.mode = DIRECT_TWIST

    def _cmd_set_resolver(self, payload: dict) -> None:
        try:
            self.resolver = config_from_dict(payload)
        except (ValueError, TypeError) as exc:
            raise CommandError(str(exc)) from None

    def _cmd_set_gains(self, payload: dict) -> None:
        try:
            k_pos = float(payload.get("k_pos", self.gains.k_pos))
            k_ori = float(payload.get("k_ori", self.gains.k_ori))
            twist_cap = float(payload.get("twist_cap", self.gains.twist_cap))
        except (TypeError, ValueError) as exc:
            raise CommandError(f"bad gains payload: {exc}") from None
        dt = self.gains.dt
        k_max = max(k_pos, k_ori)
        if k_max <= 0:
            raise CommandError("gains must be positive")
        if k_max * dt > 2.0:
            raise CommandError(
                f"rejected: k*dt = {k_max * dt:.3g} violates the stability "
                f"bound k*dt <= 2 at tick rate {1.0 / dt:.0f} Hz"
            )
        self.gains = ControllerGains.uniform(
            m=self.model.task_dim, k_pos=k_pos, k_ori=k_ori, dt=dt, twist_cap=twist_cap
        )

    def _cmd_reset(self, payload: dict) -> None:
        self.q = self.initial_q.copy()
        self.goal = None
        self.mode = GOAL_FOLLOW
        self.twist = np.zeros(self.model.task_dim)
        self.twist_tick = -(10 ** 9)

    # -- simulation -------------------------------------------------------

    def _twist_is_stale(self) -> bool:
        age_s = (self.tick_index - self.twist_tick) * self.gains.dt
        return age_s > STALE_TWIST_S

    def tick(self) -> dict:
        """Advance one step and return the state message to broadcast."""
        gamma = self.resolver.gamma if isinstance(self.resolver, JParse) else 0.1
        warnings = []
        if self.mode == GOAL_FOLLOW and self.goal is not None:
            result = step(self.model, self.q, self.goal, self.gains, self.resolver)
            q_dot = result.log.q_dot
            sigma = result.log.sigma
            twist_norm = result.log.twist_norm
            self.q = result.q_next
        else:
            twist = self.twist
            if self.mode == DIRECT_TWIST and self._twist_is_stale():
                twist = np.zeros_like(twist)
            cap = self.gains.twist_cap
            norm = float(np.linalg.norm(twist))
            if cap > 0.0 and norm > cap:
                twist = twist * (cap / norm)
            _, _, J = fk_and_jacobian(self.model, self.q)
            factors = svd(J)
            q_dot = resolve(J, twist, self.resolver, factors=factors)
            sigma = factors.sigma
            twist_norm = float(np.linalg.norm(twist))
            self.q = self.q + self.gains.dt * q_dot

        # speed envelope of the step just taken, against its pre-step spectrum
        sigma_max = float(sigma[0])
        speed = float(np.linalg.norm(q_dot))
        bound = twist_norm / (gamma * sigma_max) if sigma_max > 0 else float("inf")
        speed_bound_ok = speed <= bound + 1e-9
        if not speed_bound_ok:
            warnings.append(
                f"joint speed {speed:.3g} exceeds the threshold envelope "
                f"{bound:.3g} (resolver {self.resolver.algorithm})"
            )

        # consistent snapshot of the post-step configuration
        points = joint_world_positions(self.model, self.q)
        _, p_ee, J_now = fk_and_jacobian(self.model, self.q)
        factors_now = svd(J_now)
        metrics_now = singularity_metrics(factors_now, gamma)
        # principal axes of the manipulability ellipsoid: columns of U
        # scaled by the corresponding singular values (linear rows shown)
        lin_rows = 3 if self.model.task_dim == 6 else 2
        ellipse = (factors_now.U * factors_now.sigma[None, :])[:lin_rows, :]

        state = {
            "type": "state",
            "seq": self._out_seq,
            "payload": {
                "tick": self.tick_index,
                "t": self.tick_index * self.gains.dt,
                "mode": self.mode,
                "q": [float(v) for v in self.q],
                "q_dot": [float(v) for v in q_dot],
                "joint_positions": [[float(v) for v in row] for row in points],
                "position": [float(v) for v in p_ee],
                "sigma": [float(v) for v in factors_now.sigma],
                "inv_cond": float(metrics_now.inverse_condition_number),
                "manipulability": float(metrics_now.manipulability),
                "singular_flags": [bool(v) for v in metrics_now.singular_flags],
                "gamma": gamma,
                "ellipse_axes": [[float(v) for v in row] for row in ellipse],
                "speed_bound_ok": speed_bound_ok,
                "warnings": warnings,
                "resolver": config_to_dict(self.resolver),
                "gains": {
                    "k_pos": self.gains.k_pos,
                    "k_ori": self.gains.k_ori,
                    "dt": self.gains.dt,
                    "twist_cap": self.gains.twist_cap,
                },
                "goal": None if self.goal is None else {
                    "position": [float(v) for v in self.goal.position],
                    "axis": [float(v) for v in self.goal.axis],
                    "angle": float(self.goal.angle),
                },
            },
        }
        self.tick_index += 1
        self._out_seq += 1
        return state

    def error_message(self, text: str, in_reply_to=None) -> dict:
        msg = {
            "type": "error",
            "seq": self._out_seq,
            "payload": {"message": text, "in_reply_to": in_reply_to},
        }
        self._out_seq += 1
        return msg


# ---------------------------------------------------------------------------
# ASGI service
# ---------------------------------------------------------------------------

def create_app(config: TeleopConfig) -> FastAPI:
    session = TeleopSession(config)
    clients: dict[int, asyncio.Queue] = {}
    state = {"command_queue": None}

    async def tick_loop():
        period = 1.0 / config.tick_hz
        loop = asyncio.get_running_loop()
        queue: asyncio.Queue = state["command_queue"]
        next_due = loop.time()
        while True:
            while not queue.empty():
                client_id, msg = queue.get_nowait()
                try:
                    session.apply_command(msg)
                except CommandError as exc:
                    reply = session.error_message(str(exc), in_reply_to=msg.get("seq"))
                    out = clients.get(client_id)
                    if out is not None:
                        out.put_nowait(reply)
            broadcast = session.tick()
            for out in clients.values():
                out.put_nowait(broadcast)
            next_due += period
            delay = next_due - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                next_due = loop.time()
                await asyncio.sleep(0)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        # queues must be created on the serving event loop
        state["command_queue"] = asyncio.Queue()
        task = asyncio.create_task(tick_loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="arm teleoperation service", lifespan=lifespan)
    app.state.session = session

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        client_id = id(ws)
        outbox: asyncio.Queue = asyncio.Queue()
        clients[client_id] = outbox

        async def pump_out():
            while True:
                msg = await outbox.get()
                await ws.send_text(json.dumps(msg))

        sender = asyncio.create_task(pump_out())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    outbox.put_nowait(session.error_message("malformed JSON"))
                    continue
                state["command_queue"].put_nowait((client_id, msg))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            clients.pop(client_id, None)

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="jparse-teleop",
        description="serve a simulated arm over a websocket JSON protocol",
    )
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--model", default="spatial7",
                        help="builtin model name or model JSON file")
    parser.add_argument("--tick-hz", type=float, default=30.0)
    parser.add_argument("--k-pos", type=float, default=2.0)
    parser.add_argument("--k-ori", type=float, default=1.0)
    parser.add_argument("--twist-cap", type=float, default=1.0)
    parser.add_argument("--gamma", type=float, default=0.1)
    args = parser.parse_args(argv)

    config = TeleopConfig(
        model_ref=args.model,
        tick_hz=args.tick_hz,
        k_pos=args.k_pos,
        k_ori=args.k_ori,
        twist_cap=args.twist_cap,
        resolver=JParse(gamma=args.gamma),
    )
    import uvicorn

    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
