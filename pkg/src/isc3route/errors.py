"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations

from typing import Any


class Isc3Error(Exception):
    """Base class for all package errors."""


class ParseError(Isc3Error):
    """Input is not decodable (bad JSON, unreadable file)."""


class SchemaError(Isc3Error):
    """A field is missing, unknown or has the wrong type."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ValidationError(Isc3Error):
    """Well-formed input that breaks a domain invariant."""


class ArgumentError(Isc3Error, ValueError):
    """A function argument violates its precondition."""


class FrameMismatch(Isc3Error):
    """Two points live in different coordinate frames."""


class UnknownStation(Isc3Error):
    def __init__(self, station_id: str):
        super().__init__(f"unknown station {station_id!r}")
        self.station_id = station_id


class InstanceInfeasible(Isc3Error):
    """Some station cannot be served even by a dedicated round trip."""

    def __init__(self, station_id: str, reason: str):
        super().__init__(f"station {station_id!r} is not servable: {reason}")
        self.station_id = station_id
        self.reason = reason


class TooLarge(Isc3Error):
    pass


class NoFeasiblePlan(Isc3Error):
    pass


class NoFeasibleFound(Isc3Error):
    """Budget exhausted with only penalised plans; ``result`` holds the least-penalised one."""

    def __init__(self, result: Any):
        super().__init__(
            f"{result.algorithm}: no feasible plan within {result.evaluations_used} evaluations "
            f"(best penalty {result.best_objective.penalty:.6g})"
        )
        self.result = result


class AgentUnavailable(Isc3Error):
    pass


class AgentInvalidResponse(Isc3Error):
    pass


class InfeasiblePlanRejected(Isc3Error):
    pass


class TransportError(Isc3Error):
    """Connection, timeout or framing failure talking to the edge service."""


class RemoteError(Isc3Error):
    def __init__(self, code: int, message: str):
        super().__init__(f"remote error {code}: {message}")
        self.code = code
        self.message = message


class BindError(Isc3Error):
    pass
