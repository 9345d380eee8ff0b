"""Single-writer, multi-reader store for policies, schema, rows, and catalogues.

Readers take immutable snapshots; every mutation builds a fresh state and swaps
it in atomically, so no reader ever observes a half-applied change. Mutations
of users, roles, assignments, permissions, or catalogues advance the policy
version by exactly one; no-op mutations and row data changes leave it alone.
"""

from __future__ import annotations

import os
import threading
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from typing import Any

from . import policy
from .catalog import UiCatalog
from .errors import (
    ConflictError,
    RowNotFound,
    StoreLocked,
    UnknownObject,
    ValidationError,
)
from .model import (
    EffectiveMatrix,
    Permission,
    SchemaModel,
    TableDef,
    UserRecord,
    check_value,
)

Row = Mapping[str, Any]


@dataclass(frozen=True)
class StoreState:
    """One immutable, fully-validated view of everything the store holds."""

    users: Mapping[str, UserRecord] = field(default_factory=dict)
    roles: frozenset[str] = frozenset()
    assignments: frozenset[tuple[str, str]] = frozenset()
    permissions: tuple[Permission, ...] = ()
    schema: SchemaModel = SchemaModel()
    rows: Mapping[str, tuple[Row, ...]] = field(default_factory=dict)
    catalog: UiCatalog = UiCatalog()
    version: int = 1

    def validate(self) -> None:
        """Referential integrity across every record kind."""
        for user, role in self.assignments:
            if user not in self.users:
                raise ValidationError("assignment", f"unknown user {user!r}")
            if role not in self.roles:
                raise ValidationError("assignment", f"unknown role {role!r}")
        for perm in self.permissions:
            if perm.role not in self.roles:
                raise ValidationError("permission", f"unknown role {perm.role!r}")
            self.schema.validate_scope(perm.scope)
        for table_name, table_rows in self.rows.items():
            tdef = self.schema.table(table_name)
            if tdef is None:
                raise ValidationError("rows", f"unknown table {table_name!r}")
            seen_keys: set[tuple[Any, ...]] = set()
            for row in table_rows:
                if set(row) != set(tdef.field_names()):
                    raise ValidationError("rows", f"{table_name}: row fields do not match schema")
                for f in tdef.fields:
                    check_value(
                        row[f.name],
                        f.data_type,
                        nullable=f.nullable,
                        context=f"{table_name}.{f.name}",
                    )
                key = pk_of(tdef, row)
                if key in seen_keys:
                    raise ValidationError("rows", f"{table_name}: duplicate primary key {key}")
                seen_keys.add(key)
        self.catalog.validate(self.schema)


def canonical_permissions(perms: Iterable[Permission]) -> tuple[Permission, ...]:
    """Deduplicated and canonically ordered; resolution is order-blind anyway."""
    unique = dict.fromkeys(perms)
    return tuple(
        sorted(
            unique,
            key=lambda p: (p.role, p.scope.table, p.scope.field or "", p.action.value, p.sign.value),
        )
    )


def pk_of(table: TableDef, row: Row) -> tuple[Any, ...]:
    return tuple(row[name] for name in table.primary_key)


def sorted_rows(table: TableDef, rows: list[Row]) -> tuple[Row, ...]:
    return tuple(sorted(rows, key=lambda r: pk_of(table, r)))


def complete_row(table: TableDef, values: Mapping[str, Any]) -> dict[str, Any]:
    """Fill a partial row with defaults and nulls; reject what cannot be filled."""
    row: dict[str, Any] = {}
    for f in table.fields:
        if f.name in values:
            row[f.name] = check_value(
                values[f.name], f.data_type, nullable=f.nullable, context=f"{table.name}.{f.name}"
            )
        elif f.has_default:
            row[f.name] = f.default
        elif f.nullable:
            row[f.name] = None
        else:
            raise ValidationError("rows", f"{table.name}.{f.name}: value required")
    return row


# =============================================================================
# Store-file locking
# =============================================================================


def lock_path(store_path: str) -> str:
    return store_path + ".lock"


def _holder_pid(path: str) -> int | None:
    try:
        with open(path, encoding="utf-8") as fh:
            return int(fh.read().strip())
    except (OSError, ValueError):
        return None


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


def acquire_lock(store_path: str) -> str:
    """Take the writer lock for a store file; stale locks of dead pids are reaped."""
    path = lock_path(store_path)
    for _ in range(2):
        try:
            fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            pid = _holder_pid(path)
            if pid is not None and _pid_alive(pid):
                raise StoreLocked(f"store {store_path!r} is held by running process {pid}") from None
            try:
                os.unlink(path)
            except FileNotFoundError:
                pass
            continue
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(str(os.getpid()))
        return path
    raise StoreLocked(f"store {store_path!r} lock could not be acquired")


def release_lock(store_path: str) -> None:
    try:
        os.unlink(lock_path(store_path))
    except FileNotFoundError:
        pass


def check_not_locked(store_path: str) -> None:
    """Refuse offline access while a live writer process holds the store."""
    pid = _holder_pid(lock_path(store_path))
    if pid is not None and _pid_alive(pid) and pid != os.getpid():
        raise StoreLocked(f"store {store_path!r} is held by running process {pid}")


# =============================================================================
# Store
# =============================================================================


class Store:
    """Owns the mutable reference to the current StoreState."""

    def __init__(self, state: StoreState, path: str | None = None) -> None:
        state.validate()
        self._state = state
        self._path = path
        self._write_lock = threading.RLock()

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_seed_text(cls, text: str, path: str | None = None) -> "Store":
        from .seed import parse_seed

        return cls(parse_seed(text), path=path)

    @classmethod
    def open(cls, path: str) -> "Store":
        from .seed import parse_seed

        with open(path, encoding="utf-8") as fh:
            return cls(parse_seed(fh.read()), path=path)

    # -- reads ---------------------------------------------------------------

    def snapshot(self) -> StoreState:
        return self._state

    @property
    def version(self) -> int:
        return self._state.version

    def effective_matrix(self, username: str) -> EffectiveMatrix:
        state = self.snapshot()
        return policy.effective_matrix(
            username,
            state.users,
            state.assignments,
            state.permissions,
            state.schema,
            state.version,
        )

    def accessible_tables(self, username: str) -> list[str]:
        state = self.snapshot()
        return policy.accessible_tables(self.effective_matrix(username), state.schema)

    def fetch_rows_raw(self, table: str, page: int = 0, page_size: int | None = None) -> list[Row]:
        """Full unfiltered rows in primary-key order. Internal callers only."""
        state = self.snapshot()
        if state.schema.table(table) is None:
            raise UnknownObject(f"unknown table {table!r}")
        rows = state.rows.get(table, ())
        if page_size is None:
            return list(rows)
        start = page * page_size
        return list(rows[start : start + page_size])

    # -- mutations -----------------------------------------------------------

    def _swap(self, new_state: StoreState, bump: bool) -> int:
        new_state = replace(
            new_state, version=new_state.version + 1 if bump else new_state.version
        )
        new_state.validate()
        self._state = new_state
        self._persist()
        return new_state.version

    def _check_expected(self, expected_version: int | None) -> None:
        if expected_version is not None and expected_version != self._state.version:
            raise ConflictError(
                f"expected version {expected_version}, store is at {self._state.version}"
            )

    def _persist(self) -> None:
        if self._path is None:
            return
        from .seed import dump_seed

        tmp = self._path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(dump_seed(self._state))
        os.replace(tmp, self._path)

    def save(self) -> None:
        """Write the current state to the backing file immediately."""
        with self._write_lock:
            self._persist()

    def add_permission(self, perm: Permission, expected_version: int | None = None) -> int:
        with self._write_lock:
            self._check_expected(expected_version)
            state = self._state
            if perm in state.permissions:
                return state.version
            return self._swap(
                replace(state, permissions=canonical_permissions((*state.permissions, perm))),
                bump=True,
            )

    def remove_permission(self, perm: Permission, expected_version: int | None = None) -> int:
        with self._write_lock:
            self._check_expected(expected_version)
            state = self._state
            if perm not in state.permissions:
                return state.version
            remaining = tuple(p for p in state.permissions if p != perm)
            return self._swap(replace(state, permissions=remaining), bump=True)

    def add_assignment(self, user: str, role: str, expected_version: int | None = None) -> int:
        with self._write_lock:
            self._check_expected(expected_version)
            state = self._state
            if (user, role) in state.assignments:
                return state.version
            return self._swap(
                replace(state, assignments=state.assignments | {(user, role)}), bump=True
            )

    def remove_assignment(self, user: str, role: str, expected_version: int | None = None) -> int:
        with self._write_lock:
            self._check_expected(expected_version)
            state = self._state
            if (user, role) not in state.assignments:
                return state.version
            return self._swap(
                replace(state, assignments=state.assignments - {(user, role)}), bump=True
            )

    def put_catalog(self, catalog: UiCatalog, expected_version: int | None = None) -> int:
        with self._write_lock:
            self._check_expected(expected_version)
            state = self._state
            if catalog == state.catalog:
                return state.version
            return self._swap(replace(state, catalog=catalog), bump=True)

    # Row mutations change data, not policy: the version stays put.

    def insert_row(self, table: str, values: Mapping[str, Any]) -> tuple[Any, ...]:
        with self._write_lock:
            state = self._state
            tdef = state.schema.table(table)
            if tdef is None:
                raise UnknownObject(f"unknown table {table!r}")
            row = complete_row(tdef, values)
            key = pk_of(tdef, row)
            existing = state.rows.get(table, ())
            if any(pk_of(tdef, r) == key for r in existing):
                raise ValidationError("rows", f"{table}: duplicate primary key {key}")
            new_rows = dict(state.rows)
            new_rows[table] = sorted_rows(tdef, [*existing, row])
            self._swap(replace(state, rows=new_rows), bump=False)
            return key

    def update_row(self, table: str, key: tuple[Any, ...], values: Mapping[str, Any]) -> int:
        with self._write_lock:
            state = self._state
            tdef = state.schema.table(table)
            if tdef is None:
                raise UnknownObject(f"unknown table {table!r}")
            existing = state.rows.get(table, ())
            hit = next((r for r in existing if pk_of(tdef, r) == key), None)
            if hit is None:
                raise RowNotFound(f"{table}: no row with key {key}")
            updated = dict(hit)
            for name, value in values.items():
                f = tdef.field(name)
                updated[name] = check_value(
                    value, f.data_type, nullable=f.nullable, context=f"{table}.{name}"
                )
            others = [r for r in existing if pk_of(tdef, r) != key]
            if pk_of(tdef, updated) != key and any(
                pk_of(tdef, r) == pk_of(tdef, updated) for r in others
            ):
                raise ValidationError("rows", f"{table}: duplicate primary key")
            new_rows = dict(state.rows)
            new_rows[table] = sorted_rows(tdef, [*others, updated])
            self._swap(replace(state, rows=new_rows), bump=False)
            return 1

    def delete_row(self, table: str, key: tuple[Any, ...]) -> int:
        with self._write_lock:
            state = self._state
            tdef = state.schema.table(table)
            if tdef is None:
                raise UnknownObject(f"unknown table {table!r}")
            existing = state.rows.get(table, ())
            remaining = [r for r in existing if pk_of(tdef, r) != key]
            if len(remaining) == len(existing):
                raise RowNotFound(f"{table}: no row with key {key}")
            new_rows = dict(state.rows)
            new_rows[table] = sorted_rows(tdef, remaining)
            self._swap(replace(state, rows=new_rows), bump=False)
            return 1
