"""HTTP surface for the store: login, per-user CRUD, descriptors, and admin.

Every handler works from a single store snapshot taken at request start, so
one response never mixes two policy versions. Writes go back through the
store's single-writer lock; the permission check rides the request snapshot.

Error bodies are canonical JSON with closed vocabularies. Responses that
could confirm the existence of something the caller may not see all share
one body per status: probing a hidden table returns the same bytes as
probing a missing one, and naming a hidden field in a write returns the
same bytes as naming a field that was never in the schema.
"""

from __future__ import annotations

import datetime
import secrets
import time
from typing import Any, Callable, Iterable, Mapping

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError

from . import policy
from .catalog import Control, FormSet, GridColumn, GridSet, RefLookup, UiCatalog
from .descriptors import (
    build_form_descriptor,
    build_grid_descriptor,
    canonical_json,
    serialize_descriptor,
)
from .errors import (
    AuthFailed,
    ConflictError,
    FormgateError,
    MissingRequired,
    PermissionDenied,
    PolicySchemaConflict,
    RowNotFound,
    UnknownField,
    UnknownObject,
    UnknownUser,
    ValidationError,
    ZeroRoles,
)
from .gate import (
    RowPatch,
    check_and_delete,
    check_and_insert,
    check_and_update,
    fetch_rows,
    table_addressable,
)
from .model import (
    FIELD_ACTIONS,
    Action,
    DataType,
    EffectiveMatrix,
    Permission,
    Scope,
    Sign,
)
from .passwords import hash_password, verify_password
from .store import Store, StoreState

ADMIN_ROLE = "__admin__"

# Verified against when the username does not exist, so both failure modes
# cost one PBKDF2 evaluation and return identical bytes.
_DUMMY_DIGEST = hash_password("not-a-real-password")


class _ApiError(Exception):
    """Transport-level rejection carrying its exact wire body."""

    def __init__(self, status: int, body: dict[str, Any]):
        super().__init__(body.get("error", "error"))
        self.status = status
        self.body = body


def _respond(body: Mapping[str, Any], status: int = 200) -> Response:
    return Response(
        content=canonical_json(body), status_code=status, media_type="application/json"
    )


def _error_payload(exc: FormgateError) -> tuple[int, dict[str, Any]]:
    """Map a domain error to (status, body). Field names appear only where
    the caller already proved they may see the field."""
    if isinstance(exc, AuthFailed):
        return 401, {"error": "auth_failed"}
    if isinstance(exc, ZeroRoles):
        return 403, {"error": "zero_roles"}
    if isinstance(exc, PermissionDenied):
        body: dict[str, Any] = {"error": "permission_denied"}
        if exc.field is not None:
            body["field"] = exc.field
        return 403, body
    if isinstance(exc, UnknownField):
        # deliberately no field echo: the name may be one the caller probed
        return 400, {"error": "unknown_field"}
    if isinstance(exc, MissingRequired):
        return 400, {"error": "missing_required", "field": exc.field}
    if isinstance(exc, UnknownUser):
        return 404, {"error": "unknown_user"}
    if isinstance(exc, RowNotFound):
        return 404, {"error": "row_not_found"}
    if isinstance(exc, UnknownObject):
        # covers NoAccessibleFields: hidden and missing tables share bytes
        return 404, {"error": "unknown_object"}
    if isinstance(exc, PolicySchemaConflict):
        return 409, {"error": "policy_schema_conflict"}
    if isinstance(exc, ConflictError):
        return 409, {"error": "conflict"}
    if isinstance(exc, ValidationError):
        return 400, {"error": "validation", "reason": exc.reason}
    return 400, {"error": "bad_request"}


def _require_str(data: Mapping[str, Any], key: str) -> str:
    value = data.get(key)
    if not isinstance(value, str):
        raise _ApiError(400, {"error": "bad_request"})
    return value


def _optional_version(data: Mapping[str, Any]) -> int | None:
    value = data.get("expectedVersion")
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise _ApiError(400, {"error": "bad_request"})
    return value


async def _body(request: Request) -> dict[str, Any]:
    try:
        data = await request.json()
    except Exception:
        raise _ApiError(400, {"error": "bad_request"}) from None
    if not isinstance(data, dict):
        raise _ApiError(400, {"error": "bad_request"})
    return data


def _parse_key(state: StoreState, table: str, raw: str) -> tuple[Any, ...]:
    """Decode a path key: one comma-joined literal per primary key field.

    Any literal that cannot be a value of the key's type addresses no row,
    so malformed keys report not-found rather than a distinct parse error.
    """
    tdef = state.schema.table(table)
    if tdef is None:
        raise UnknownObject(f"unknown table {table!r}")
    parts = raw.split(",")
    if len(parts) != len(tdef.primary_key):
        raise RowNotFound(raw)
    values: list[Any] = []
    for part, name in zip(parts, tdef.primary_key):
        data_type = tdef.field(name).data_type
        try:
            if data_type is DataType.INTEGER:
                values.append(int(part))
            elif data_type is DataType.DECIMAL:
                values.append(float(part))
            elif data_type is DataType.BOOLEAN:
                if part not in ("true", "false"):
                    raise ValueError(part)
                values.append(part == "true")
            elif data_type is DataType.DATE:
                datetime.date.fromisoformat(part)
                values.append(part)
            else:
                values.append(part)
        except ValueError:
            raise RowNotFound(raw) from None
    return tuple(values)


def _parse_permission(data: Mapping[str, Any]) -> Permission:
    field = data.get("field")
    if field is not None and not isinstance(field, str):
        raise _ApiError(400, {"error": "bad_request"})
    return Permission(
        role=_require_str(data, "role"),
        sign=Sign.from_symbol(_require_str(data, "sign")),
        action=Action.parse(_require_str(data, "action")),
        scope=Scope(_require_str(data, "table"), field),
    )


def _permission_json(perm: Permission) -> dict[str, Any]:
    return {
        "role": perm.role,
        "sign": perm.sign.symbol,
        "action": perm.action.value,
        "table": perm.scope.table,
        "field": perm.scope.field,
    }


def _catalog_json(catalog: UiCatalog) -> dict[str, Any]:
    c = catalog.canonical()
    return {
        "formSets": [
            {
                "formId": fs.form_id,
                "table": fs.table_name,
                "title": fs.title,
                "layoutColumns": fs.layout_columns,
            }
            for fs in c.form_sets
        ],
        "controls": [
            {
                "formId": ct.form_id,
                "field": ct.field_name,
                "controlType": ct.control_type_id,
                "label": ct.label,
                "row": ct.row,
                "col": ct.col,
                "tabOrder": ct.tab_order,
                "visible": ct.visible,
            }
            for ct in c.controls
        ],
        "gridSets": [
            {"gridId": gs.grid_id, "table": gs.table_name, "pageSize": gs.page_size}
            for gs in c.grid_sets
        ],
        "gridColumns": [
            {
                "gridId": gc.grid_id,
                "field": gc.field_name,
                "header": gc.header,
                "width": gc.width,
                "ordinal": gc.ordinal,
            }
            for gc in c.grid_columns
        ],
        "refs": [
            {
                "table": r.table_name,
                "field": r.field_name,
                "referencedTable": r.referenced_table,
                "referencedKeyField": r.referenced_key_field,
                "displayField": r.display_field,
            }
            for r in c.refs
        ],
    }


def _require_int(data: Mapping[str, Any], key: str) -> int:
    value = data.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise _ApiError(400, {"error": "bad_request"})
    return value


def _require_bool(data: Mapping[str, Any], key: str, default: bool | None = None) -> bool:
    value = data.get(key, default)
    if not isinstance(value, bool):
        raise _ApiError(400, {"error": "bad_request"})
    return value


def _parse_catalog(data: Mapping[str, Any]) -> UiCatalog:
    def items(key: str) -> Iterable[Mapping[str, Any]]:
        value = data.get(key, [])
        if not isinstance(value, list) or not all(isinstance(d, dict) for d in value):
            raise _ApiError(400, {"error": "bad_request"})
        return value

    return UiCatalog(
        form_sets=tuple(
            FormSet(
                form_id=_require_str(d, "formId"),
                table_name=_require_str(d, "table"),
                title=_require_str(d, "title"),
                layout_columns=_require_int(d, "layoutColumns"),
            )
            for d in items("formSets")
        ),
        controls=tuple(
            Control(
                form_id=_require_str(d, "formId"),
                field_name=_require_str(d, "field"),
                control_type_id=_require_str(d, "controlType"),
                label=_require_str(d, "label"),
                row=_require_int(d, "row"),
                col=_require_int(d, "col"),
                tab_order=_require_int(d, "tabOrder"),
                visible=_require_bool(d, "visible", True),
            )
            for d in items("controls")
        ),
        grid_sets=tuple(
            GridSet(
                grid_id=_require_str(d, "gridId"),
                table_name=_require_str(d, "table"),
                page_size=_require_int(d, "pageSize"),
            )
            for d in items("gridSets")
        ),
        grid_columns=tuple(
            GridColumn(
                grid_id=_require_str(d, "gridId"),
                field_name=_require_str(d, "field"),
                header=_require_str(d, "header"),
                width=_require_int(d, "width"),
                ordinal=_require_int(d, "ordinal"),
            )
            for d in items("gridColumns")
        ),
        refs=tuple(
            RefLookup(
                table_name=_require_str(d, "table"),
                field_name=_require_str(d, "field"),
                referenced_table=_require_str(d, "referencedTable"),
                referenced_key_field=_require_str(d, "referencedKeyField"),
                display_field=_require_str(d, "displayField"),
            )
            for d in items("refs")
        ),
    )


def create_app(
    store: Store,
    session_ttl_minutes: int = 60,
    clock: Callable[[], float] | None = None,
) -> FastAPI:
    """Build the service around one store. Sessions live in process memory."""
    now = clock if clock is not None else time.time
    ttl_seconds = session_ttl_minutes * 60
    sessions: dict[str, tuple[str, float]] = {}
    app = FastAPI(openapi_url=None, docs_url=None, redoc_url=None)

    @app.exception_handler(_ApiError)
    def _on_api_error(request: Request, exc: _ApiError) -> Response:
        return _respond(exc.body, exc.status)

    @app.exception_handler(FormgateError)
    def _on_domain_error(request: Request, exc: FormgateError) -> Response:
        status, body = _error_payload(exc)
        return _respond(body, status)

    @app.exception_handler(RequestValidationError)
    def _on_request_shape_error(request: Request, exc: RequestValidationError) -> Response:
        return _respond({"error": "bad_request"}, 400)

    def _session_user(request: Request) -> str:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise _ApiError(401, {"error": "unauthorized"})
        token = header[len("Bearer ") :].strip()
        session = sessions.get(token)
        if session is None or session[1] <= now():
            sessions.pop(token, None)
            raise _ApiError(401, {"error": "unauthorized"})
        return session[0]

    def _matrix(state: StoreState, username: str) -> EffectiveMatrix:
        return policy.effective_matrix(
            username,
            state.users,
            state.assignments,
            state.permissions,
            state.schema,
            policy_version=state.version,
        )

    def _context(request: Request) -> tuple[StoreState, EffectiveMatrix]:
        username = _session_user(request)
        state = store.snapshot()
        try:
            return state, _matrix(state, username)
        except UnknownUser:
            # the session outlived its user record
            raise _ApiError(401, {"error": "unauthorized"}) from None

    def _admin_state(request: Request) -> StoreState:
        username = _session_user(request)
        state = store.snapshot()
        try:
            roles = policy.roles_of_user(username, state.users, state.assignments)
        except UnknownUser:
            raise _ApiError(401, {"error": "unauthorized"}) from None
        if ADMIN_ROLE not in roles:
            raise _ApiError(403, {"error": "forbidden"})
        return state

    def _gate_table(matrix: EffectiveMatrix, state: StoreState, table: str) -> None:
        if not table_addressable(matrix, state.schema, table):
            raise UnknownObject(f"unknown table {table!r}")

    def _descriptor_response(
        matrix: EffectiveMatrix, state: StoreState, table: str, kind: str
    ) -> Response:
        _gate_table(matrix, state, table)
        build = build_grid_descriptor if kind == "grid" else build_form_descriptor
        desc = build(matrix, table, state.schema, state.catalog)
        return Response(content=serialize_descriptor(desc), media_type="application/json")

    # -- sessions -------------------------------------------------------------

    @app.post("/login")
    async def login(request: Request) -> Response:
        data = await _body(request)
        username = _require_str(data, "username")
        password = _require_str(data, "password")
        state = store.snapshot()
        user = state.users.get(username)
        digest = user.password_digest if user is not None else _DUMMY_DIGEST
        if not verify_password(password, digest) or user is None:
            raise AuthFailed(username)
        if not policy.roles_of_user(username, state.users, state.assignments):
            raise ZeroRoles(username)
        token = secrets.token_hex(16)
        sessions[token] = (username, now() + ttl_seconds)
        return _respond({"token": token})

    # -- per-user data surface ------------------------------------------------

    @app.get("/tables")
    def list_tables(request: Request) -> Response:
        state, matrix = _context(request)
        tables = policy.accessible_tables(matrix, state.schema)
        return _respond({"policyVersion": state.version, "tables": tables})

    @app.get("/tables/{table}/grid")
    def grid_descriptor(table: str, request: Request) -> Response:
        state, matrix = _context(request)
        return _descriptor_response(matrix, state, table, "grid")

    @app.get("/tables/{table}/form")
    def form_descriptor(table: str, request: Request) -> Response:
        state, matrix = _context(request)
        return _descriptor_response(matrix, state, table, "form")

    @app.get("/tables/{table}/rows")
    def list_rows(table: str, request: Request, page: int = 0) -> Response:
        state, matrix = _context(request)
        _gate_table(matrix, state, table)
        if page < 0:
            raise _ApiError(400, {"error": "bad_request"})
        rows = fetch_rows(
            matrix, table, state, page=page, page_size=state.catalog.page_size_for(table)
        )
        return _respond({"table": table, "policyVersion": state.version, "rows": rows})

    @app.post("/tables/{table}/rows")
    async def insert_row(table: str, request: Request) -> Response:
        state, matrix = _context(request)
        data = await _body(request)
        _gate_table(matrix, state, table)
        key = check_and_insert(matrix, table, data, store)
        return _respond({"key": list(key)}, 201)

    @app.patch("/tables/{table}/rows/{key}")
    async def update_row(table: str, key: str, request: Request) -> Response:
        state, matrix = _context(request)
        data = await _body(request)
        _gate_table(matrix, state, table)
        patch = RowPatch(table, _parse_key(state, table, key), data)
        return _respond({"updated": check_and_update(matrix, patch, store)})

    @app.delete("/tables/{table}/rows/{key}")
    def delete_row(table: str, key: str, request: Request) -> Response:
        state, matrix = _context(request)
        _gate_table(matrix, state, table)
        return _respond({"deleted": check_and_delete(matrix, table, _parse_key(state, table, key), store)})

    # -- administration -------------------------------------------------------

    @app.get("/admin/permissions")
    def list_permissions(request: Request) -> Response:
        state = _admin_state(request)
        perms = [_permission_json(p) for p in state.permissions]
        return _respond({"policyVersion": state.version, "permissions": perms})

    @app.post("/admin/permissions")
    async def grant_permission(request: Request) -> Response:
        _admin_state(request)
        data = await _body(request)
        version = store.add_permission(_parse_permission(data), _optional_version(data))
        return _respond({"policyVersion": version})

    @app.delete("/admin/permissions")
    async def revoke_permission(request: Request) -> Response:
        _admin_state(request)
        data = await _body(request)
        version = store.remove_permission(_parse_permission(data), _optional_version(data))
        return _respond({"policyVersion": version})

    @app.get("/admin/assignments")
    def list_assignments(request: Request) -> Response:
        state = _admin_state(request)
        pairs = [{"user": u, "role": r} for u, r in sorted(state.assignments)]
        return _respond({"policyVersion": state.version, "assignments": pairs})

    @app.post("/admin/assignments")
    async def add_assignment(request: Request) -> Response:
        _admin_state(request)
        data = await _body(request)
        version = store.add_assignment(
            _require_str(data, "user"), _require_str(data, "role"), _optional_version(data)
        )
        return _respond({"policyVersion": version})

    @app.delete("/admin/assignments")
    async def remove_assignment(request: Request) -> Response:
        _admin_state(request)
        data = await _body(request)
        version = store.remove_assignment(
            _require_str(data, "user"), _require_str(data, "role"), _optional_version(data)
        )
        return _respond({"policyVersion": version})

    @app.get("/admin/catalog")
    def get_catalog(request: Request) -> Response:
        state = _admin_state(request)
        return _respond({"policyVersion": state.version, "catalog": _catalog_json(state.catalog)})

    @app.put("/admin/catalog")
    async def put_catalog(request: Request) -> Response:
        _admin_state(request)
        data = await _body(request)
        catalog_data = data.get("catalog")
        if not isinstance(catalog_data, dict):
            raise _ApiError(400, {"error": "bad_request"})
        version = store.put_catalog(_parse_catalog(catalog_data), _optional_version(data))
        return _respond({"policyVersion": version})

    @app.get("/admin/effective/{username}")
    def effective(username: str, request: Request) -> Response:
        state = _admin_state(request)
        matrix = _matrix(state, username)
        rows: list[dict[str, Any]] = []
        for tdef in state.schema.tables:
            rows.append(
                {
                    "table": tdef.name,
                    "field": None,
                    "action": Action.DELETE.value,
                    "decision": matrix.delete_decision(tdef.name).value,
                }
            )
            for f in tdef.fields:
                for action in FIELD_ACTIONS:
                    rows.append(
                        {
                            "table": tdef.name,
                            "field": f.name,
                            "action": action.value,
                            "decision": matrix.decision(action, tdef.name, f.name).value,
                        }
                    )
        return _respond({"user": username, "policyVersion": state.version, "rows": rows})

    @app.get("/admin/preview/{username}/tables/{table}/grid")
    def preview_grid(username: str, table: str, request: Request) -> Response:
        state = _admin_state(request)
        return _descriptor_response(_matrix(state, username), state, table, "grid")

    @app.get("/admin/preview/{username}/tables/{table}/form")
    def preview_form(username: str, table: str, request: Request) -> Response:
        state = _admin_state(request)
        return _descriptor_response(_matrix(state, username), state, table, "form")

    return app
