"""Edge solve service: newline-delimited JSON over TCP, plus its client.

Each request line is ``{"id": str, "method": "solve" | "cognize" | "health",
"params": {...}}``; each gets exactly one response line carrying the same id
and either ``result`` or ``error: {code, message}``.  Error codes: 1 parse,
2 schema, 3 unknown method, 4 solver error.
"""

from __future__ import annotations

import itertools
import json
import logging
import socket
import socketserver
import threading
from typing import Any, Iterable, Mapping

from .constraints import PhysicsModels
from .errors import BindError, Isc3Error, RemoteError, SchemaError, TransportError, ValidationError
from .instance import DeliveryInstance, Isc3Demands, instance_from_dict, instance_to_dict
from .solvers import SolverConfig, SolverResult, solve

log = logging.getLogger(__name__)

MAX_FRAME = 16 * 1024 * 1024
DEFAULT_TIMEOUT = 30.0

PARSE_ERROR = 1
SCHEMA_ERROR = 2
UNKNOWN_METHOD = 3
SOLVER_ERROR = 4

METHODS = ("solve", "cognize", "health")


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must look like host:port, got {address!r}")
    return host or "127.0.0.1", int(port)


def encode_frame(message: Mapping[str, Any]) -> bytes:
    return (json.dumps(message, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def _error(req_id: Any, code: int, message: str) -> dict[str, Any]:
    return {"id": req_id, "error": {"code": code, "message": message or "error"}}


def solve_params(instance: DeliveryInstance, demands: Isc3Demands, config: SolverConfig,
                 models: PhysicsModels | None = None) -> dict[str, Any]:
    return {
        "instance": instance_to_dict(instance),
        "demands": demands.to_dict(),
        "config": config.full_dict(),
        "models": (models or PhysicsModels()).to_dict(),
    }


def _do_solve(params: Mapping[str, Any]) -> dict[str, Any]:
    try:
        instance = instance_from_dict(params.get("instance"))
        demands = Isc3Demands.from_dict(params.get("demands"))
        config = SolverConfig.from_dict(params.get("config"))
        models = PhysicsModels.from_dict(params.get("models"))
    except (SchemaError, ValidationError) as exc:
        raise _WireError(SCHEMA_ERROR, str(exc)) from None
    try:
        return solve(instance, demands, models, config).to_dict()
    except Isc3Error as exc:
        raise _WireError(SOLVER_ERROR, f"{type(exc).__name__}: {exc}") from None


def _do_cognize(params: Mapping[str, Any]) -> dict[str, Any]:
    from .pipeline import RuleBasedAgent

    summary = params.get("scene_summary")
    if not isinstance(summary, Mapping):
        raise _WireError(SCHEMA_ERROR, "params.scene_summary: expected an object")
    try:
        demands = Isc3Demands.from_dict(params.get("demands"))
    except (SchemaError, ValidationError) as exc:
        raise _WireError(SCHEMA_ERROR, str(exc)) from None
    seed = params.get("seed", 0)
    budget = params.get("eval_budget", 20_000)
    if not isinstance(seed, int) or not isinstance(budget, int):
        raise _WireError(SCHEMA_ERROR, "params.seed and params.eval_budget must be integers")
    try:
        agent = RuleBasedAgent(seed=seed, eval_budget=budget)
        return agent.plan(demands, dict(summary)).to_dict()
    except Isc3Error as exc:
        raise _WireError(SOLVER_ERROR, str(exc)) from None


class _WireError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def handle_line(line: bytes) -> dict[str, Any]:
    """Turn one request frame into its response object.  Never raises."""
    try:
        request = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        return _error(None, PARSE_ERROR, f"malformed JSON frame: {exc}")
    if not isinstance(request, dict):
        return _error(None, SCHEMA_ERROR, "request must be a JSON object")
    req_id = request.get("id")
    if not isinstance(req_id, str) or not req_id:
        return _error(req_id if isinstance(req_id, str) else None, SCHEMA_ERROR, "id must be a non-empty string")
    method = request.get("method")
    if not isinstance(method, str):
        return _error(req_id, SCHEMA_ERROR, "method must be a string")
    extra = set(request) - {"id", "method", "params"}
    if extra:
        return _error(req_id, SCHEMA_ERROR, f"unknown request key {sorted(extra)[0]!r}")
    if method not in METHODS:
        return _error(req_id, UNKNOWN_METHOD, f"unknown method {method!r}")
    params = request.get("params", {})
    if not isinstance(params, dict):
        return _error(req_id, SCHEMA_ERROR, "params must be an object")
    try:
        if method == "health":
            result: Any = "ok"
        elif method == "solve":
            result = _do_solve(params)
        else:
            result = _do_cognize(params)
    except _WireError as exc:
        return _error(req_id, exc.code, str(exc))
    except Exception as exc:  # a bad request must never take the connection down
        log.exception("request %s failed", req_id)
        return _error(req_id, SOLVER_ERROR, f"{type(exc).__name__}: {exc}")
    return {"id": req_id, "result": result}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        while True:
            try:
                line = self.rfile.readline(MAX_FRAME + 1)
            except OSError:
                return
            if not line:
                return
            if len(line) > MAX_FRAME:
                while not line.endswith(b"\n"):
                    line = self.rfile.readline(MAX_FRAME + 1)
                    if not line:
                        break
                response = _error(None, PARSE_ERROR, f"frame exceeds {MAX_FRAME} bytes")
            else:
                response = handle_line(line)
            try:
                self.wfile.write(encode_frame(response))
                self.wfile.flush()
            except OSError:
                return


class EdgeServer(socketserver.ThreadingTCPServer):
    """One thread per connection; requests on a connection are served in order."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int]):
        try:
            super().__init__(address, _Handler)
        except OSError as exc:
            raise BindError(f"cannot bind {address[0]}:{address[1]}: {exc}") from None

    @property
    def address(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, name="edge-server", daemon=True)
        thread.start()
        return thread


def serve(bind: str) -> None:
    """Serve until interrupted."""
    server = EdgeServer(parse_address(bind))
    log.info("edge service listening on %s", server.address)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


class EdgeClient:
    """Blocking client holding one connection; supports pipelined requests."""

    def __init__(self, address: str, timeout: float = DEFAULT_TIMEOUT):
        self.address = address
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._reader = None
        self._ids = itertools.count(1)

    def __enter__(self) -> "EdgeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _connect(self) -> None:
        if self._sock is not None:
            return
        try:
            host, port = parse_address(self.address)
            self._sock = socket.create_connection((host, port), timeout=self.timeout)
        except (OSError, ValueError) as exc:
            raise TransportError(f"cannot reach edge service at {self.address}: {exc}") from None
        self._reader = self._sock.makefile("rb")

    def close(self) -> None:
        if self._reader is not None:
            self._reader.close()
        if self._sock is not None:
            self._sock.close()
        self._sock = self._reader = None

    def send_raw(self, data: bytes) -> None:
        self._connect()
        try:
            self._sock.sendall(data)
        except OSError as exc:
            self.close()
            raise TransportError(f"send failed: {exc}") from None

    def read_response(self) -> dict[str, Any]:
        self._connect()
        try:
            line = self._reader.readline(MAX_FRAME + 1)
        except OSError as exc:  # includes socket.timeout
            self.close()
            raise TransportError(f"receive failed: {exc}") from None
        if not line:
            self.close()
            raise TransportError("connection closed by edge service")
        try:
            return json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise TransportError(f"malformed response frame: {exc}") from None

    def call_many(self, requests: Iterable[tuple[str, Mapping[str, Any]]]) -> list[dict[str, Any]]:
        """Send all requests before reading; returns raw responses in request order, matched by id."""
        ids = []
        payload = bytearray()
        for method, params in requests:
            req_id = f"r{next(self._ids)}"
            ids.append(req_id)
            payload += encode_frame({"id": req_id, "method": method, "params": params})
        self.send_raw(bytes(payload))
        by_id = {}
        for _ in ids:
            resp = self.read_response()
            by_id[resp.get("id")] = resp
        missing = [i for i in ids if i not in by_id]
        if missing:
            raise TransportError(f"no response for request {missing[0]}")
        return [by_id[i] for i in ids]

    def call(self, method: str, params: Mapping[str, Any] | None = None) -> Any:
        resp = self.call_many([(method, params or {})])[0]
        if "error" in resp:
            err = resp["error"]
            raise RemoteError(int(err.get("code", 0)), str(err.get("message", "")))
        return resp["result"]


def solve_remote(address: str, instance: DeliveryInstance, demands: Isc3Demands, config: SolverConfig,
                 models: PhysicsModels | None = None, timeout: float = DEFAULT_TIMEOUT) -> SolverResult:
    with EdgeClient(address, timeout) as client:
        data = client.call("solve", solve_params(instance, demands, config, models))
    return SolverResult.from_dict(data)
