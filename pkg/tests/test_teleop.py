import json

import numpy as np
import pytest

from jparse.teleop import (
    CommandError,
    TeleopConfig,
    TeleopSession,
    create_app,
)


def make_session(**overrides):
    config = TeleopConfig(model_ref="planar3r", tick_hz=50.0, k_pos=1.0,
                          k_ori=1.0, twist_cap=1.0, **overrides)
    return TeleopSession(config)


def run_script(session, script, ticks):
    """Apply (tick_index, message) pairs at the scheduled ticks and collect
    every broadcast state."""
    states = []
    pending = sorted(script, key=lambda item: item[0])
    k = 0
    for i in range(ticks):
        while k < len(pending) and pending[k][0] == i:
            session.apply_command(pending[k][1])
            k += 1
        states.append(session.tick())
    return states


class TestCommands:
    def test_zero_twist_keeps_q(self):
        s = make_session()
        q0 = s.q.copy()
        s.apply_command({"type": "set_twist", "seq": 1,
                         "payload": {"twist": [0.0, 0.0]}})
        state = s.tick()
        assert np.allclose(state["payload"]["q"], q0)
        assert state["payload"]["mode"] == "direct_twist"

    def test_set_resolver_changes_flag_threshold(self):
        s = make_session()
        s.apply_command({"type": "set_resolver", "seq": 1,
                         "payload": {"algorithm": "jparse", "params": {"gamma": 0.07}}})
        state = s.tick()
        assert state["payload"]["gamma"] == pytest.approx(0.07)
        assert state["payload"]["resolver"]["params"]["gamma"] == pytest.approx(0.07)

    def test_reset_restores_initial_q(self):
        s = make_session()
        s.apply_command({"type": "set_twist", "seq": 1,
                         "payload": {"twist": [0.5, 0.0]}})
        for _ in range(10):
            s.tick()
        assert not np.allclose(s.q, s.initial_q)
        s.apply_command({"type": "reset", "seq": 2, "payload": {}})
        assert np.allclose(s.q, s.initial_q)

    def test_gain_change_rejected_beyond_stability_bound(self):
        s = make_session()  # dt = 0.02 -> k limit 100
        with pytest.raises(CommandError, match="k\\*dt"):
            s.apply_command({"type": "set_gains", "seq": 1,
                             "payload": {"k_pos": 500.0}})
        # state unchanged: old gains still active
        assert s.gains.k_pos == pytest.approx(1.0)
        s.apply_command({"type": "set_gains", "seq": 2, "payload": {"k_pos": 50.0}})
        assert s.gains.k_pos == pytest.approx(50.0)

    def test_non_finite_twist_rejected(self):
        s = make_session()
        with pytest.raises(CommandError, match="finite"):
            s.apply_command({"type": "set_twist", "seq": 1,
                             "payload": {"twist": [float("nan"), 0.0]}})

    def test_unknown_type_rejected(self):
        s = make_session()
        with pytest.raises(CommandError, match="unknown message type"):
            s.apply_command({"type": "warp", "seq": 1, "payload": {}})

    def test_seq_must_increase(self):
        s = make_session()
        s.apply_command({"type": "reset", "seq": 5, "payload": {}})
        with pytest.raises(CommandError, match="strictly increasing"):
            s.apply_command({"type": "reset", "seq": 5, "payload": {}})
        s.apply_command({"type": "reset", "seq": 6, "payload": {}})

    def test_wrong_twist_length_rejected(self):
        s = make_session()
        with pytest.raises(CommandError, match="entries"):
            s.apply_command({"type": "set_twist", "seq": 1,
                             "payload": {"twist": [0.1, 0.2, 0.3, 0.4]}})


class TestSessionDynamics:
    def test_stale_twist_decays_to_zero(self):
        s = make_session()  # 50 Hz -> stale after 25 ticks
        s.apply_command({"type": "set_twist", "seq": 1,
                         "payload": {"twist": [0.3, 0.0]}})
        moved = [np.linalg.norm(s.tick()["payload"]["q_dot"]) for _ in range(40)]
        assert moved[0] > 1e-6          # fresh twist moves the arm
        assert max(moved[30:]) == 0.0   # stale beyond 0.5 s: zero velocity

    def test_goal_follow_converges(self):
        s = make_session()
        s.apply_command({"type": "set_goal", "seq": 1,
                         "payload": {"position": [1.2, 0.8, 0.0]}})
        for _ in range(600):
            state = s.tick()
        p = np.array(state["payload"]["position"])
        assert np.linalg.norm(p[:2] - [1.2, 0.8]) < 1e-2

    def test_goal_outside_workspace_respects_speed_bound(self):
        s = make_session()
        s.apply_command({"type": "set_goal", "seq": 1,
                         "payload": {"position": [5.0, 0.0, 0.0]}})
        for _ in range(400):
            state = s.tick()
            assert state["payload"]["speed_bound_ok"]
        assert state["payload"]["inv_cond"] < 0.1  # parked at the boundary

    def test_pinv_near_singularity_emits_warning(self):
        s = make_session()
        s.apply_command({"type": "set_goal", "seq": 1,
                         "payload": {"position": [5.0, 0.0, 0.0]}})
        for _ in range(400):
            s.tick()
        s.apply_command({"type": "set_resolver", "seq": 2,
                         "payload": {"algorithm": "pinv", "params": {}}})
        warned = False
        for _ in range(50):
            state = s.tick()
            if not state["payload"]["speed_bound_ok"]:
                warned = True
                assert state["payload"]["warnings"]
        assert warned

    def test_state_message_schema(self):
        s = make_session()
        state = s.tick()
        payload = state["payload"]
        assert state["type"] == "state"
        for key in ("tick", "t", "q", "q_dot", "joint_positions", "position",
                    "sigma", "inv_cond", "manipulability", "singular_flags",
                    "ellipse_axes", "gains", "resolver", "mode", "warnings"):
            assert key in payload
        assert len(payload["joint_positions"]) == 4  # 3 joints + end-effector
        assert len(payload["ellipse_axes"]) == 2     # planar model: x, y rows

    def test_ellipse_axis_lengths_match_sigma(self):
        s = make_session()
        state = s.tick()
        axes = np.array(state["payload"]["ellipse_axes"])  # 2 x m
        sigma = np.array(state["payload"]["sigma"])
        lengths = np.linalg.norm(axes, axis=0)
        assert np.allclose(lengths, sigma, rtol=1e-9)


class TestDeterministicReplay:
    def test_scripted_sequence_replays_identically(self):
        script = [
            (0, {"type": "set_goal", "seq": 1, "payload": {"position": [1.0, 1.0, 0.0]}}),
            (40, {"type": "set_twist", "seq": 2, "payload": {"twist": [0.2, -0.1]}}),
            (60, {"type": "set_resolver", "seq": 3,
                  "payload": {"algorithm": "jparse", "params": {"gamma": 0.05, "a": 2.0}}}),
            (80, {"type": "set_goal", "seq": 4, "payload": {"position": [0.5, -0.5, 0.0]}}),
            (120, {"type": "reset", "seq": 5, "payload": {}}),
        ]
        a = run_script(make_session(), script, 200)
        b = run_script(make_session(), script, 200)
        assert json.dumps(a) == json.dumps(b)

    def test_different_schedule_differs(self):
        goal = {"type": "set_goal", "seq": 1, "payload": {"position": [1.0, 1.0, 0.0]}}
        a = run_script(make_session(), [(0, goal)], 50)
        b = run_script(make_session(), [(10, goal)], 50)
        assert json.dumps(a) != json.dumps(b)


class TestWebsocketService:
    @pytest.fixture()
    def client(self):
        from fastapi.testclient import TestClient

        config = TeleopConfig(model_ref="planar3r", tick_hz=200.0, k_pos=1.0,
                              k_ori=1.0, twist_cap=1.0)
        with TestClient(create_app(config)) as client:
            yield client

    def test_state_stream_and_commands(self, client):
        with client.websocket_connect("/ws") as ws:
            first = json.loads(ws.receive_text())
            assert first["type"] == "state"
            ws.send_text(json.dumps({"type": "set_goal", "seq": 1,
                                     "payload": {"position": [1.0, 0.5, 0.0]}}))
            seqs = []
            for _ in range(12):
                msg = json.loads(ws.receive_text())
                assert msg["type"] == "state"
                seqs.append(msg["seq"])
            assert seqs == sorted(seqs)
            assert all(b > a for a, b in zip(seqs, seqs[1:]))

    def test_malformed_message_answered_with_error_connection_kept(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"type": "bogus", "seq": 1, "payload": {}}))
            got_error = False
            for _ in range(30):
                msg = json.loads(ws.receive_text())
                if msg["type"] == "error":
                    got_error = True
                    assert "unknown message type" in msg["payload"]["message"]
                    break
            assert got_error
            # connection still alive: states keep flowing
            assert json.loads(ws.receive_text())["type"] == "state"

    def test_gain_rejection_cites_bound(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.receive_text()
            ws.send_text(json.dumps({"type": "set_gains", "seq": 1,
                                     "payload": {"k_pos": 1000.0}}))
            for _ in range(30):
                msg = json.loads(ws.receive_text())
                if msg["type"] == "error":
                    assert "k*dt" in msg["payload"]["message"]
                    return
            pytest.fail("expected an error reply")
