import json

import pytest

from isc3route import edge
from isc3route.edge import EdgeClient, EdgeServer, handle_line, solve_params, solve_remote
from isc3route.errors import RemoteError, TransportError
from isc3route.instance import Isc3Demands, generate_instance
from isc3route.solvers import SolverConfig, solve


@pytest.fixture(scope="module")
def server():
    srv = EdgeServer(("127.0.0.1", 0))
    srv.start_background()
    yield srv
    srv.shutdown()
    srv.server_close()


def test_health(server):
    with EdgeClient(server.address) as c:
        assert c.call("health") == "ok"


@pytest.mark.parametrize("frame, code", [
    (b"{oops\n", 1),
    (b"\xff\xfe\n", 1),
    (b"[1, 2]\n", 2),
    (b'{"id": "a"}\n', 2),
    (b'{"id": "a", "method": "fly"}\n', 3),
    (b'{"id": "a", "method": "solve", "params": {}}\n', 2),
    (b'{"id": "a", "method": "health", "extra": 1}\n', 2),
])
def test_bad_frames_get_one_error_and_keep_connection(server, frame, code):
    with EdgeClient(server.address) as c:
        c.send_raw(frame)
        resp = c.read_response()
        assert resp["error"]["code"] == code and resp["error"]["message"]
        assert c.call("health") == "ok"


def test_oversize_frame(server, monkeypatch):
    monkeypatch.setattr(edge, "MAX_FRAME", 1024)
    with EdgeClient(server.address) as c:
        c.send_raw(b'{"id": "big", "pad": "' + b"x" * 5000 + b'"}\n')
        assert c.read_response()["error"]["code"] == 1
        assert c.call("health") == "ok"


def test_solver_error_code():
    inst = generate_instance(0, n_stations=3, n_base_stations=0)
    params = solve_params(inst, Isc3Demands(), SolverConfig("sa", eval_budget=50))
    resp = handle_line(json.dumps({"id": "x", "method": "solve", "params": params}).encode())
    assert resp["id"] == "x" and resp["error"]["code"] == 4


def test_remote_equals_local(server):
    inst = generate_instance(8, n_stations=7)
    cfg = SolverConfig("ga", seed=4, eval_budget=1500)
    local = solve(inst, Isc3Demands(), None, cfg)
    remote = solve_remote(server.address, inst, Isc3Demands(), cfg)
    assert remote.to_dict(include_wall_time=False) == local.to_dict(include_wall_time=False)


def test_pipelined_requests_matched_by_id(server):
    inst = generate_instance(8, n_stations=5)
    reqs = [("solve", solve_params(inst, Isc3Demands(), SolverConfig(a, seed=1, eval_budget=300)))
            for a in ("sa", "aco")] + [("health", {}), ("nope", {})]
    with EdgeClient(server.address) as c:
        out = c.call_many(reqs)
    assert [r["id"] for r in out] == ["r1", "r2", "r3", "r4"]
    assert out[0]["result"]["algorithm"] == "sa" and out[1]["result"]["algorithm"] == "aco"
    assert out[2]["result"] == "ok" and out[3]["error"]["code"] == 3


def test_cognize(server):
    with EdgeClient(server.address) as c:
        task = c.call("cognize", {"demands": {}, "scene_summary": {"n_stations": 30}, "seed": 2})
        assert task["solver"]["algorithm"] == "ga" and task["offload"] is True
        with pytest.raises(RemoteError) as info:
            c.call("cognize", {"demands": {}})
        assert info.value.code == 2


def test_unreachable():
    with pytest.raises(TransportError):
        EdgeClient("127.0.0.1:1", timeout=1.0).call("health")
