"""Enforcement gate: every data operation passes through the effective matrix.

Select is rewritten to the granted column set before any row is touched, so a
denied column never reaches a response, not even as a null. Writes are checked
field by field with two error tiers: a visible but write-denied field earns a
PermissionDenied naming it; a field the user cannot Select fails exactly like
a field that does not exist, so probing writes reveal nothing.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from .errors import (
    MissingRequired,
    NoAccessibleFields,
    PermissionDenied,
    PolicySchemaConflict,
    UnknownField,
    UnknownObject,
    ValidationError,
)
from .model import Action, EffectiveMatrix, SchemaModel, TableDef
from .store import Store, StoreState


@dataclass(frozen=True)
class Projection:
    table: str
    columns: tuple[str, ...]


@dataclass(frozen=True)
class RowPatch:
    table: str
    key: tuple[Any, ...]
    assignments: Mapping[str, Any]

    def __post_init__(self) -> None:
        if not self.assignments:
            raise ValidationError("patch", "no assignments")


def _table_or_unknown(schema: SchemaModel, table: str) -> TableDef:
    tdef = schema.table(table)
    if tdef is None:
        raise UnknownObject(f"unknown table {table!r}")
    return tdef


def rewrite_select(matrix: EffectiveMatrix, table: str, schema: SchemaModel) -> Projection:
    """Granted columns in schema-ordinal order; an empty projection is an error."""
    tdef = _table_or_unknown(schema, table)
    columns = tuple(
        f.name for f in tdef.fields if matrix.granted(Action.SELECT, table, f.name)
    )
    if not columns:
        raise NoAccessibleFields(f"no selectable fields on {table!r}")
    return Projection(table=table, columns=columns)


def fetch_rows(
    matrix: EffectiveMatrix,
    table: str,
    state: StoreState,
    page: int = 0,
    page_size: int | None = None,
) -> list[dict[str, Any]]:
    """Projected rows in primary-key order; denied columns are absent, not null."""
    projection = rewrite_select(matrix, table, state.schema)
    rows = state.rows.get(table, ())
    if page_size is not None:
        start = page * page_size
        rows = rows[start : start + page_size]
    return [{column: row[column] for column in projection.columns} for row in rows]


def _check_write_fields(
    matrix: EffectiveMatrix,
    tdef: TableDef,
    table: str,
    action: Action,
    names: Mapping[str, Any],
) -> None:
    """Field-granular write check, deterministic order, existence-hiding tiers."""
    for name in sorted(names):
        if not tdef.has_field(name):
            raise UnknownField(name)
        if not matrix.granted(action, table, name):
            if matrix.granted(Action.SELECT, table, name):
                raise PermissionDenied(name)
            raise UnknownField(name)


def check_and_insert(
    matrix: EffectiveMatrix, table: str, values: Mapping[str, Any], store: Store
) -> tuple[Any, ...]:
    """Insert iff every named field is Insert-granted and the row is completable.

    A required field the user left out raises MissingRequired only when they
    can see it; when they cannot, the single unnamed conflict error keeps the
    field's existence private.
    """
    state = store.snapshot()
    tdef = _table_or_unknown(state.schema, table)
    _check_write_fields(matrix, tdef, table, Action.INSERT, values)
    for f in tdef.fields:
        if f.name in values or f.nullable or f.has_default:
            continue
        if matrix.granted(Action.INSERT, table, f.name) and matrix.granted(
            Action.SELECT, table, f.name
        ):
            raise MissingRequired(f.name)
        raise PolicySchemaConflict()
    return store.insert_row(table, values)


def check_and_update(matrix: EffectiveMatrix, patch: RowPatch, store: Store) -> int:
    """Update iff every assigned field is Update-granted; untouched fields keep."""
    state = store.snapshot()
    tdef = _table_or_unknown(state.schema, patch.table)
    _check_write_fields(matrix, tdef, patch.table, Action.UPDATE, patch.assignments)
    return store.update_row(patch.table, patch.key, patch.assignments)


def check_and_delete(
    matrix: EffectiveMatrix, table: str, key: tuple[Any, ...], store: Store
) -> int:
    """Delete iff the per-table Delete decision is Grant."""
    state = store.snapshot()
    _table_or_unknown(state.schema, table)
    if not matrix.can_delete(table):
        raise PermissionDenied(None)
    return store.delete_row(table, key)


def table_addressable(matrix: EffectiveMatrix, schema: SchemaModel, table: str) -> bool:
    """Whether the user may address the table at all.

    Any grant of any action qualifies; a table carrying none behaves exactly
    like a table that does not exist, for every operation on it.
    """
    return matrix.has_any_grant(schema, table)
