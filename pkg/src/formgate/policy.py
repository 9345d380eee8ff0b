"""Role lookup, permission expansion, and deny-dominates conflict resolution.

Pure functions over plain collections: nothing here touches storage, so the
same code serves the service, the offline CLI, and the property tests.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .errors import UnknownObject, UnknownUser
from .model import (
    FIELD_ACTIONS,
    Action,
    EffectiveMatrix,
    Permission,
    SchemaModel,
    Sign,
    UserRecord,
)

# An expanded, field-level decision atom. Delete atoms carry field=None because
# Delete is row-granular (never field-scoped).
Atom = tuple[str, Sign, Action, str, str | None]


def resolve_signs(signs: Iterable[Sign]) -> Sign:
    """Collapse a multiset of signs into one decision.

    Deny if any Deny is present or the multiset is empty; Grant otherwise.
    Order-independent by construction.
    """
    found_grant = False
    for sign in signs:
        if sign is Sign.DENY:
            return Sign.DENY
        found_grant = True
    return Sign.GRANT if found_grant else Sign.DENY


def roles_of_user(
    username: str,
    users: Mapping[str, UserRecord],
    assignments: Iterable[tuple[str, str]],
) -> frozenset[str]:
    if username not in users:
        raise UnknownUser(f"unknown user {username!r}")
    return frozenset(role for user, role in assignments if user == username)


def expand_permission(perm: Permission, schema: SchemaModel) -> frozenset[Atom]:
    """Expand one stored permission into field-level atoms against the schema.

    Expansion happens at evaluation time, so fields added after the permission
    was written inherit its table-level sign. Delete stays a single table-level
    atom.
    """
    table = schema.table(perm.scope.table)
    if table is None:
        raise UnknownObject(f"unknown table {perm.scope.table!r}")
    if perm.action is Action.DELETE:
        return frozenset({(perm.role, perm.sign, perm.action, table.name, None)})
    if perm.scope.is_table:
        return frozenset(
            (perm.role, perm.sign, perm.action, table.name, f.name) for f in table.fields
        )
    if not table.has_field(perm.scope.field):
        raise UnknownObject(f"unknown field {perm.scope.table}.{perm.scope.field}")
    return frozenset({(perm.role, perm.sign, perm.action, table.name, perm.scope.field)})


def effective_matrix(
    username: str,
    users: Mapping[str, UserRecord],
    assignments: Iterable[tuple[str, str]],
    permissions: Iterable[Permission],
    schema: SchemaModel,
    policy_version: int = 0,
) -> EffectiveMatrix:
    """Resolve every (action, table, field) and per-table Delete for one user.

    Total: coordinates no permission mentions resolve to Deny. Deterministic in
    (policy set, schema, user) and invariant under permission order.
    """
    roles = roles_of_user(username, users, assignments)
    field_signs: dict[tuple[Action, str, str], list[Sign]] = {}
    delete_signs: dict[str, list[Sign]] = {}
    for perm in permissions:
        if perm.role not in roles:
            continue
        for _role, sign, action, table, fieldname in expand_permission(perm, schema):
            if fieldname is None:
                delete_signs.setdefault(table, []).append(sign)
            else:
                field_signs.setdefault((action, table, fieldname), []).append(sign)

    field_decisions: dict[tuple[Action, str, str], Sign] = {}
    for table in schema.tables:
        for f in table.fields:
            for action in FIELD_ACTIONS:
                key = (action, table.name, f.name)
                field_decisions[key] = resolve_signs(field_signs.get(key, ()))
    delete_decisions = {
        table.name: resolve_signs(delete_signs.get(table.name, ())) for table in schema.tables
    }
    return EffectiveMatrix(
        username=username,
        policy_version=policy_version,
        field_decisions=field_decisions,
        delete_decisions=delete_decisions,
    )


def accessible_tables(matrix: EffectiveMatrix, schema: SchemaModel) -> list[str]:
    """Tables the user may observe: >=1 field with Select Grant, sorted by name.

    Grants for other actions alone do not reveal a table's existence.
    """
    return sorted(
        table.name
        for table in schema.tables
        if any(matrix.granted(Action.SELECT, table.name, f.name) for f in table.fields)
    )


def explain_decision(
    username: str,
    action: Action,
    table: str,
    fieldname: str | None,
    users: Mapping[str, UserRecord],
    assignments: Iterable[tuple[str, str]],
    permissions: Iterable[Permission],
    schema: SchemaModel,
) -> list[str]:
    """Replay the resolution for one coordinate as printable trace lines.

    Each contributing permission produces one line; the last line carries the
    resolved sign and always agrees with effective_matrix.
    """
    tdef = schema.table(table)
    if tdef is None:
        raise UnknownObject(f"unknown table {table!r}")
    if action is Action.DELETE:
        if fieldname is not None:
            raise UnknownObject("Delete decisions are table-level; no field applies")
    else:
        if fieldname is None or not tdef.has_field(fieldname):
            raise UnknownObject(f"unknown field {table}.{fieldname}")
    roles = roles_of_user(username, users, assignments)

    contributing: list[tuple[Permission, Sign]] = []
    for perm in permissions:
        if perm.role not in roles:
            continue
        for _role, sign, p_action, p_table, p_field in expand_permission(perm, schema):
            if p_action is action and p_table == table and p_field == fieldname:
                contributing.append((perm, sign))

    lines: list[str] = []
    for perm, sign in sorted(
        contributing, key=lambda item: (item[0].role, str(item[0].scope), item[0].sign.value)
    ):
        kind = "table" if perm.scope.is_table else "field"
        lines.append(f"{perm.role} {sign.value} {action.value} {perm.scope} ({kind} scope)")
    if not contributing:
        lines.append("no permissions; default deny")
    lines.append(f"result {resolve_signs(sign for _perm, sign in contributing).value}")
    return lines
