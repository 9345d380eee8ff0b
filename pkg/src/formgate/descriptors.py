"""Descriptor construction: effective matrix + catalogue in, interface spec out.

Grids carry the Select/Update/Delete surface, forms the Insert surface. Every
field set is filtered through the matrix before anything is serialized, and a
field the user may not Select never appears in either document, whatever other
rights exist on it. Serialization is canonical: fixed key order, fixed
separators, one trailing newline, so equal descriptors are equal bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .catalog import ControlKind, UiCatalog, control_for_field
from .errors import NoAccessibleFields, PolicySchemaConflict, UnknownObject
from .model import Action, EffectiveMatrix, FieldDef, SchemaModel

_FALLBACK_KIND = {
    "integer": ControlKind.NUMBERBOX,
    "decimal": ControlKind.NUMBERBOX,
    "text": ControlKind.TEXTBOX,
    "boolean": ControlKind.CHECKBOX,
    "date": ControlKind.DATEPICKER,
}


@dataclass(frozen=True)
class ColumnSpec:
    field: str
    header: str
    width: int
    ordinal: int
    editable: bool
    control_kind: str


@dataclass(frozen=True)
class GridDescriptor:
    table: str
    title: str
    page_size: int
    policy_version: int
    can_delete: bool
    columns: tuple[ColumnSpec, ...]


@dataclass(frozen=True)
class LookupSpec:
    table: str
    key_field: str
    display_field: str


@dataclass(frozen=True)
class ControlSpec:
    field: str
    label: str
    control_kind: str
    row: int
    col: int
    tab_order: int
    required: bool
    lookup: LookupSpec | None = None


@dataclass(frozen=True)
class FormDescriptor:
    table: str
    title: str
    policy_version: int
    controls: tuple[ControlSpec, ...]


def canonical_json(obj: Any) -> str:
    """Deterministic rendering of already-ordered content, one trailing newline."""
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True) + "\n"


def _required(f: FieldDef) -> bool:
    return not f.nullable and not f.has_default


def _lookup_spec(
    matrix: EffectiveMatrix, table: str, f: FieldDef, catalog: UiCatalog
) -> LookupSpec | None:
    """Reference projection, only when the user may Select both ends of it."""
    ref = catalog.ref(table, f.name)
    if ref is None:
        return None
    if not matrix.granted(Action.SELECT, ref.referenced_table, ref.referenced_key_field):
        return None
    if not matrix.granted(Action.SELECT, ref.referenced_table, ref.display_field):
        return None
    return LookupSpec(ref.referenced_table, ref.referenced_key_field, ref.display_field)


def build_grid_descriptor(
    matrix: EffectiveMatrix, table: str, schema: SchemaModel, catalog: UiCatalog
) -> GridDescriptor:
    """One column per Select-granted field; editable tracks Update grants."""
    tdef = schema.table(table)
    if tdef is None:
        raise UnknownObject(f"unknown table {table!r}")
    granted = [f for f in tdef.fields if matrix.granted(Action.SELECT, table, f.name)]
    if not granted:
        raise NoAccessibleFields(f"no selectable fields on {table!r}")

    specs = []
    for f in granted:
        gc = catalog.grid_column(table, f.name)
        kind = control_for_field(f, table, catalog).control_type_id
        if kind == ControlKind.LOOKUP and _lookup_spec(matrix, table, f, catalog) is None:
            kind = _FALLBACK_KIND[f.data_type.value]
        specs.append(
            ColumnSpec(
                field=f.name,
                header=gc.header if gc is not None else f.name,
                width=gc.width if gc is not None else 120,
                ordinal=gc.ordinal if gc is not None else f.ordinal,
                editable=matrix.granted(Action.UPDATE, table, f.name),
                control_kind=kind,
            )
        )
    specs.sort(key=lambda c: (c.ordinal, tdef.field(c.field).ordinal))
    return GridDescriptor(
        table=table,
        title=catalog.title_for(table),
        page_size=catalog.page_size_for(table),
        policy_version=matrix.policy_version,
        can_delete=matrix.can_delete(table),
        columns=tuple(specs),
    )


def build_form_descriptor(
    matrix: EffectiveMatrix, table: str, schema: SchemaModel, catalog: UiCatalog
) -> FormDescriptor:
    """One control per field the user may both Insert and Select.

    A field the user cannot Select never renders, even when writable: the gate
    still accepts direct writes to it, but no control may disclose it. Any
    non-nullable defaultless field missing from the final control set makes a
    legal row unreachable from this form, which is a conflict worth refusing
    loudly rather than rendering a form that can never submit.
    """
    tdef = schema.table(table)
    if tdef is None:
        raise UnknownObject(f"unknown table {table!r}")
    renderable = [
        f
        for f in tdef.fields
        if matrix.granted(Action.INSERT, table, f.name)
        and matrix.granted(Action.SELECT, table, f.name)
    ]
    if not renderable:
        raise NoAccessibleFields(f"no insertable fields on {table!r}")
    visible = [f for f in renderable if control_for_field(f, table, catalog).visible]
    shown = {f.name for f in visible}
    for f in tdef.fields:
        if _required(f) and f.name not in shown:
            raise PolicySchemaConflict()
    if not visible:
        raise NoAccessibleFields(f"no insertable fields on {table!r}")

    specs = []
    for f in visible:
        ctrl = control_for_field(f, table, catalog)
        lookup = _lookup_spec(matrix, table, f, catalog)
        kind = ctrl.control_type_id
        if kind == ControlKind.LOOKUP and lookup is None:
            kind = _FALLBACK_KIND[f.data_type.value]
        specs.append(
            ControlSpec(
                field=f.name,
                label=ctrl.label,
                control_kind=kind,
                row=ctrl.row,
                col=ctrl.col,
                tab_order=ctrl.tab_order,
                required=_required(f),
                lookup=lookup,
            )
        )
    specs.sort(key=lambda c: (c.row, c.col, c.tab_order, tdef.field(c.field).ordinal))
    return FormDescriptor(
        table=table,
        title=catalog.title_for(table),
        policy_version=matrix.policy_version,
        controls=tuple(specs),
    )


# =============================================================================
# Canonical wire format
# =============================================================================


def serialize_descriptor(descriptor: GridDescriptor | FormDescriptor) -> str:
    if isinstance(descriptor, GridDescriptor):
        return canonical_json(
            {
                "kind": "grid",
                "table": descriptor.table,
                "title": descriptor.title,
                "policyVersion": descriptor.policy_version,
                "canDelete": descriptor.can_delete,
                "pageSize": descriptor.page_size,
                "columns": [
                    {
                        "field": c.field,
                        "header": c.header,
                        "width": c.width,
                        "ordinal": c.ordinal,
                        "editable": c.editable,
                        "controlKind": c.control_kind,
                    }
                    for c in descriptor.columns
                ],
            }
        )
    controls = []
    for c in descriptor.controls:
        entry: dict[str, Any] = {
            "field": c.field,
            "label": c.label,
            "controlKind": c.control_kind,
            "row": c.row,
            "col": c.col,
            "tabOrder": c.tab_order,
            "required": c.required,
        }
        if c.lookup is not None:
            entry["lookup"] = {
                "table": c.lookup.table,
                "keyField": c.lookup.key_field,
                "displayField": c.lookup.display_field,
            }
        controls.append(entry)
    return canonical_json(
        {
            "kind": "form",
            "table": descriptor.table,
            "title": descriptor.title,
            "policyVersion": descriptor.policy_version,
            "controls": controls,
        }
    )


def parse_descriptor(text: str) -> GridDescriptor | FormDescriptor:
    doc = json.loads(text)
    if doc.get("kind") == "grid":
        return GridDescriptor(
            table=doc["table"],
            title=doc["title"],
            page_size=doc["pageSize"],
            policy_version=doc["policyVersion"],
            can_delete=doc["canDelete"],
            columns=tuple(
                ColumnSpec(
                    field=c["field"],
                    header=c["header"],
                    width=c["width"],
                    ordinal=c["ordinal"],
                    editable=c["editable"],
                    control_kind=c["controlKind"],
                )
                for c in doc["columns"]
            ),
        )
    if doc.get("kind") == "form":
        return FormDescriptor(
            table=doc["table"],
            title=doc["title"],
            policy_version=doc["policyVersion"],
            controls=tuple(
                ControlSpec(
                    field=c["field"],
                    label=c["label"],
                    control_kind=c["controlKind"],
                    row=c["row"],
                    col=c["col"],
                    tab_order=c["tabOrder"],
                    required=c["required"],
                    lookup=(
                        LookupSpec(
                            table=c["lookup"]["table"],
                            key_field=c["lookup"]["keyField"],
                            display_field=c["lookup"]["displayField"],
                        )
                        if "lookup" in c
                        else None
                    ),
                )
                for c in doc["controls"]
            ),
        )
    raise ValueError(f"not a descriptor document: kind={doc.get('kind')!r}")
