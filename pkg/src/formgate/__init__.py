"""Field-level access control with deny-overrides resolution.

The package keeps one store of users, roles, permissions, schema, rows, and
UI catalogue records. A per-user effective matrix drives three surfaces: a
CRUD gate that rewrites operations so denied fields stay invisible, interface
descriptors serialized as canonical JSON, and an HTTP service plus CLI on top.
"""

from __future__ import annotations

from .errors import (
    AuthFailed,
    ConflictError,
    FormgateError,
    MissingRequired,
    NoAccessibleFields,
    ParseError,
    PermissionDenied,
    PolicySchemaConflict,
    RowNotFound,
    StoreLocked,
    UnknownField,
    UnknownObject,
    UnknownUser,
    ValidationError,
    ZeroRoles,
)
from .model import (
    Action,
    DataType,
    EffectiveMatrix,
    FieldDef,
    Permission,
    SchemaModel,
    Scope,
    Sign,
    TableDef,
    UserRecord,
)
from .policy import (
    accessible_tables,
    effective_matrix,
    explain_decision,
    resolve_signs,
    roles_of_user,
)
from .catalog import UiCatalog
from .descriptors import (
    FormDescriptor,
    GridDescriptor,
    build_form_descriptor,
    build_grid_descriptor,
    parse_descriptor,
    serialize_descriptor,
)
from .gate import (
    Projection,
    RowPatch,
    check_and_delete,
    check_and_insert,
    check_and_update,
    fetch_rows,
    rewrite_select,
    table_addressable,
)
from .seed import dump_seed, parse_seed
from .service import create_app
from .store import Store, StoreState

__all__ = [
    "Action",
    "AuthFailed",
    "ConflictError",
    "DataType",
    "EffectiveMatrix",
    "FieldDef",
    "FormDescriptor",
    "FormgateError",
    "GridDescriptor",
    "MissingRequired",
    "NoAccessibleFields",
    "ParseError",
    "Permission",
    "PermissionDenied",
    "PolicySchemaConflict",
    "Projection",
    "RowNotFound",
    "RowPatch",
    "SchemaModel",
    "Scope",
    "Sign",
    "Store",
    "StoreLocked",
    "StoreState",
    "TableDef",
    "UiCatalog",
    "UnknownField",
    "UnknownObject",
    "UnknownUser",
    "UserRecord",
    "ValidationError",
    "ZeroRoles",
    "accessible_tables",
    "build_form_descriptor",
    "build_grid_descriptor",
    "check_and_delete",
    "check_and_insert",
    "check_and_update",
    "create_app",
    "dump_seed",
    "effective_matrix",
    "explain_decision",
    "fetch_rows",
    "parse_descriptor",
    "parse_seed",
    "resolve_signs",
    "rewrite_select",
    "roles_of_user",
    "serialize_descriptor",
    "table_addressable",
]
