"""Domain model: signs, actions, permission scopes, schema metadata, decision matrices.

Everything here is an immutable value type. Absence of a permission record is a
meaningful third state ("unspecified") and is never stored as a record.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from .errors import ValidationError


class Sign(Enum):
    """Polarity of a stored permission. Stored records always carry one."""

    GRANT = "grant"
    DENY = "deny"

    @property
    def symbol(self) -> str:
        return "+" if self is Sign.GRANT else "-"

    @classmethod
    def from_symbol(cls, token: str) -> "Sign":
        if token == "+":
            return cls.GRANT
        if token == "-":
            return cls.DENY
        raise ValidationError("sign", f"expected '+' or '-', got {token!r}")


class Action(Enum):
    """The four gated operations. Closed set."""

    SELECT = "Select"
    INSERT = "Insert"
    UPDATE = "Update"
    DELETE = "Delete"

    @classmethod
    def parse(cls, token: str) -> "Action":
        for action in cls:
            if action.value == token:
                return action
        raise ValidationError("action", f"unknown action {token!r}")


#: Actions resolved per field; Delete is resolved per table.
FIELD_ACTIONS: tuple[Action, ...] = (Action.SELECT, Action.INSERT, Action.UPDATE)


class DataType(Enum):
    TEXT = "text"
    INTEGER = "integer"
    DECIMAL = "decimal"
    BOOLEAN = "boolean"
    DATE = "date"

    @classmethod
    def parse(cls, token: str) -> "DataType":
        for dt in cls:
            if dt.value == token:
                return dt
        raise ValidationError("data_type", f"unknown data type {token!r}")


def check_value(value: Any, data_type: DataType, *, nullable: bool, context: str) -> Any:
    """Validate (and lightly normalize) a stored value against a field's type."""
    if value is None:
        if not nullable:
            raise ValidationError(context, "null value in non-nullable field")
        return None
    if data_type is DataType.TEXT:
        if not isinstance(value, str):
            raise ValidationError(context, f"expected text, got {type(value).__name__}")
        return value
    if data_type is DataType.INTEGER:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(context, f"expected integer, got {type(value).__name__}")
        return value
    if data_type is DataType.DECIMAL:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(context, f"expected decimal, got {type(value).__name__}")
        return float(value)
    if data_type is DataType.BOOLEAN:
        if not isinstance(value, bool):
            raise ValidationError(context, f"expected boolean, got {type(value).__name__}")
        return value
    # DATE: ISO yyyy-mm-dd strings keep rows and wire payloads plain.
    if not isinstance(value, str):
        raise ValidationError(context, f"expected ISO date string, got {type(value).__name__}")
    try:
        datetime.date.fromisoformat(value)
    except ValueError:
        raise ValidationError(context, f"invalid ISO date {value!r}") from None
    return value


@dataclass(frozen=True)
class Scope:
    """Target of a permission: a whole table, or a single column of it."""

    table: str
    field: str | None = None

    @property
    def is_table(self) -> bool:
        return self.field is None

    def __str__(self) -> str:
        return f"{self.table}.{self.field if self.field is not None else '*'}"


@dataclass(frozen=True)
class Permission:
    """A signed action right owned by a role.

    Duplicate (role, sign, action, scope) quadruples are idempotent: the store
    keeps at most one.
    """

    role: str
    sign: Sign
    action: Action
    scope: Scope

    def __post_init__(self) -> None:
        if self.action is Action.DELETE and not self.scope.is_table:
            raise ValidationError(
                "permission", f"Delete permissions are table-scoped; got field scope {self.scope}"
            )

    def __str__(self) -> str:
        return f"({self.role}, {self.sign.symbol}, {self.action.value}, {self.scope})"


@dataclass(frozen=True)
class FieldDef:
    name: str
    data_type: DataType
    nullable: bool = False
    has_default: bool = False
    default: Any = None
    ordinal: int = 0


@dataclass(frozen=True)
class TableDef:
    name: str
    fields: tuple[FieldDef, ...]
    primary_key: tuple[str, ...]

    def __post_init__(self) -> None:
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValidationError(self.name, "duplicate field names")
        if [f.ordinal for f in self.fields] != list(range(len(self.fields))):
            raise ValidationError(self.name, "field ordinals must be dense from 0")
        if not self.primary_key:
            raise ValidationError(self.name, "table has no primary key")
        for pk in self.primary_key:
            if pk not in names:
                raise ValidationError(self.name, f"primary key field {pk!r} does not exist")
            if self.field(pk).nullable:
                raise ValidationError(self.name, f"primary key field {pk!r} cannot be nullable")
        for f in self.fields:
            if f.has_default:
                check_value(
                    f.default, f.data_type, nullable=f.nullable, context=f"{self.name}.{f.name}"
                )

    def field(self, name: str) -> FieldDef:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def has_field(self, name: str) -> bool:
        return any(f.name == name for f in self.fields)

    def field_names(self) -> list[str]:
        return [f.name for f in self.fields]


@dataclass(frozen=True)
class SchemaModel:
    """Tables with their field metadata; the object permissions are validated against."""

    tables: tuple[TableDef, ...] = ()

    def __post_init__(self) -> None:
        names = [t.name for t in self.tables]
        if len(set(names)) != len(names):
            raise ValidationError("schema", "duplicate table names")

    def table(self, name: str) -> TableDef | None:
        for t in self.tables:
            if t.name == name:
                return t
        return None

    def table_names(self) -> list[str]:
        return [t.name for t in self.tables]

    def validate_scope(self, scope: Scope) -> None:
        table = self.table(scope.table)
        if table is None:
            raise ValidationError("scope", f"unknown table {scope.table!r}")
        if scope.field is not None and not table.has_field(scope.field):
            raise ValidationError("scope", f"unknown field {scope.table}.{scope.field}")


@dataclass(frozen=True)
class UserRecord:
    """Stored account: the password survives only as a salted one-way digest."""

    username: str
    password_digest: str

    def __post_init__(self) -> None:
        if not self.username:
            raise ValidationError("user", "username must be non-empty")


@dataclass(frozen=True)
class EffectiveMatrix:
    """Fully-resolved decision for every (action, field) plus per-table Delete.

    Total by construction: anything absent from every permission record is an
    explicit Deny here. A pure function of (policy set, schema, user), stamped
    with the policy version it was computed from.
    """

    username: str
    policy_version: int
    field_decisions: Mapping[tuple[Action, str, str], Sign] = field(default_factory=dict)
    delete_decisions: Mapping[str, Sign] = field(default_factory=dict)

    def decision(self, action: Action, table: str, fieldname: str) -> Sign:
        return self.field_decisions.get((action, table, fieldname), Sign.DENY)

    def delete_decision(self, table: str) -> Sign:
        return self.delete_decisions.get(table, Sign.DENY)

    def granted(self, action: Action, table: str, fieldname: str) -> bool:
        return self.decision(action, table, fieldname) is Sign.GRANT

    def can_delete(self, table: str) -> bool:
        return self.delete_decision(table) is Sign.GRANT

    def has_any_grant(self, schema: SchemaModel, table: str) -> bool:
        """True if the user holds at least one Grant of any action on the table."""
        t = schema.table(table)
        if t is None:
            return False
        if self.can_delete(table):
            return True
        return any(
            self.granted(action, table, f.name) for action in FIELD_ACTIONS for f in t.fields
        )
