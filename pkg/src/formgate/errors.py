"""Exception hierarchy shared by the store, the policy engine, and the service."""

from __future__ import annotations


class FormgateError(Exception):
    """Base class for all errors raised by this package."""


class UnknownUser(FormgateError):
    """No user record exists for the given username."""


class ZeroRoles(FormgateError):
    """User authenticated but holds no role assignment."""


class UnknownObject(FormgateError):
    """A referenced table (or other schema object) does not exist.

    Deliberately shares its external error shape with NoAccessibleFields so
    callers cannot distinguish a missing table from one they may not see.
    """


class NoAccessibleFields(UnknownObject):
    """The table exists but the caller has no visible fields in it.

    Subclasses UnknownObject on purpose: probing a hidden table must look
    exactly like probing a nonexistent one.
    """


class UnknownField(FormgateError):
    """A named field is unknown to the caller.

    Raised identically for fields that do not exist and for fields the
    caller is not allowed to see, so the response never confirms existence.
    """

    def __init__(self, field: str):
        super().__init__(f"unknown field: {field}")
        self.field = field


class PermissionDenied(FormgateError):
    """Operation denied on an object the caller is allowed to see."""

    def __init__(self, field: str | None = None):
        super().__init__("permission denied" if field is None else f"permission denied: {field}")
        self.field = field


class MissingRequired(FormgateError):
    """A non-nullable, defaultless field the caller can see was not supplied."""

    def __init__(self, field: str):
        super().__init__(f"missing required field: {field}")
        self.field = field


class PolicySchemaConflict(FormgateError):
    """The policy makes a valid row impossible (a required field has no value source).

    Carries no field name: the offending field may be one the caller is not
    allowed to see.
    """

    def __init__(self) -> None:
        super().__init__("policy and schema conflict: no valid row can be produced")


class RowNotFound(FormgateError):
    """No row matches the given primary key."""


class ParseError(FormgateError):
    """Seed document is syntactically malformed."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(FormgateError):
    """An entity violates a type or referential invariant."""

    def __init__(self, entity: str, reason: str):
        super().__init__(f"{entity}: {reason}")
        self.entity = entity
        self.reason = reason


class ConflictError(FormgateError):
    """A concurrent writer already advanced past the version the caller supplied."""


class AuthFailed(FormgateError):
    """Login failed; single shape for wrong password and unknown user."""


class StoreLocked(FormgateError):
    """The store file is held by a running service writer."""
