"""Error types shared by the engine, the service, and the CLI.

Two families matter to callers: ``InputError`` means the input itself could
not be understood (malformed JSON shape, bad rational literal, unknown
symbol) and maps to HTTP 422 / exit code 1; every other ``AgencyError``
subclass is a domain error raised by a well-formed but unanswerable request
and maps to HTTP 409 / exit code 2.
"""

from __future__ import annotations

from typing import Any


class AgencyError(Exception):
    code = "agency-error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def payload(self) -> dict:
        # details must already be JSON-serializable; raisers stringify
        # Fractions, variables and patterns before attaching them.
        return {"code": self.code, "message": str(self), "details": self.details}


class InputError(AgencyError):
    code = "malformed-input"


class InvalidChain(AgencyError):
    code = "invalid-chain"


class SupportCapExceeded(AgencyError):
    code = "support-cap-exceeded"


class EntityCapExceeded(AgencyError):
    code = "entity-cap-exceeded"


class ConditionHasZeroProbability(AgencyError):
    code = "condition-zero-probability"


class PatternNotInTrajectory(AgencyError):
    code = "pattern-not-in-trajectory"


class QueryInvariantViolated(AgencyError):
    code = "query-invariant-violated"


class AnchorSliceMissing(AgencyError):
    code = "anchor-slice-missing"


class EmptyEnvironmentSet(AgencyError):
    code = "empty-environment-set"


class HorizonExceedsChain(AgencyError):
    code = "horizon-exceeds-chain"


class InterpenetratingEntitySet(AgencyError):
    code = "interpenetrating-entity-set"


class EnvironmentNotCoPerception(AgencyError):
    code = "environment-not-co-perception"


class NotAPaLoop(AgencyError):
    code = "not-a-pa-loop"


class UnknownFixture(AgencyError):
    code = "unknown-fixture"
