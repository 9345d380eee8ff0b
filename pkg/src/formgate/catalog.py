"""Interface catalogues: stored metadata that shapes generated grids and forms.

The catalogue never grants access; it only styles what the policy already
permits. Every schema renders without any catalogue entries at all, because
control_for_field synthesizes a sensible default per data type.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .model import DataType, FieldDef, SchemaModel


class ControlKind:
    TEXTBOX = "textbox"
    NUMBERBOX = "numberbox"
    CHECKBOX = "checkbox"
    DATEPICKER = "datepicker"
    LOOKUP = "lookup"


@dataclass(frozen=True)
class ControlType:
    id: str
    kind: str
    compatible_types: frozenset[DataType]

    def __post_init__(self) -> None:
        if not self.compatible_types:
            raise ValidationError("control_type", f"{self.kind}: compatible_types must be non-empty")


#: Fixed registry of control types, keyed by id. Ids double as the kind name.
CONTROL_TYPES: dict[str, ControlType] = {
    ct.id: ct
    for ct in (
        ControlType(ControlKind.TEXTBOX, ControlKind.TEXTBOX, frozenset({DataType.TEXT})),
        ControlType(
            ControlKind.NUMBERBOX, ControlKind.NUMBERBOX, frozenset({DataType.INTEGER, DataType.DECIMAL})
        ),
        ControlType(ControlKind.CHECKBOX, ControlKind.CHECKBOX, frozenset({DataType.BOOLEAN})),
        ControlType(ControlKind.DATEPICKER, ControlKind.DATEPICKER, frozenset({DataType.DATE})),
        ControlType(ControlKind.LOOKUP, ControlKind.LOOKUP, frozenset({DataType.INTEGER, DataType.TEXT})),
    )
}

_KIND_BY_TYPE = {
    DataType.TEXT: ControlKind.TEXTBOX,
    DataType.INTEGER: ControlKind.NUMBERBOX,
    DataType.DECIMAL: ControlKind.NUMBERBOX,
    DataType.BOOLEAN: ControlKind.CHECKBOX,
    DataType.DATE: ControlKind.DATEPICKER,
}

DEFAULT_COLUMN_WIDTH = 120
DEFAULT_PAGE_SIZE = 20


@dataclass(frozen=True)
class FormSet:
    form_id: str
    table_name: str
    title: str
    layout_columns: int = 1

    def __post_init__(self) -> None:
        if self.layout_columns < 1:
            raise ValidationError("formset", "layout_columns must be positive")


@dataclass(frozen=True)
class Control:
    form_id: str
    field_name: str
    control_type_id: str
    label: str
    row: int = 0
    col: int = 0
    tab_order: int = 0
    visible: bool = True


@dataclass(frozen=True)
class GridSet:
    grid_id: str
    table_name: str
    page_size: int = DEFAULT_PAGE_SIZE

    def __post_init__(self) -> None:
        if self.page_size < 1:
            raise ValidationError("gridset", "page_size must be positive")


@dataclass(frozen=True)
class GridColumn:
    grid_id: str
    field_name: str
    header: str
    width: int = DEFAULT_COLUMN_WIDTH
    ordinal: int = 0

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValidationError("grid_column", "width must be positive")


@dataclass(frozen=True)
class RefLookup:
    """Declares that table.field stores keys of referenced_table, displayed via display_field."""

    table_name: str
    field_name: str
    referenced_table: str
    referenced_key_field: str
    display_field: str


@dataclass(frozen=True)
class UiCatalog:
    """All stored catalogue records. Form/grid ids are keyed 1:1 by table name."""

    form_sets: tuple[FormSet, ...] = ()
    controls: tuple[Control, ...] = ()
    grid_sets: tuple[GridSet, ...] = ()
    grid_columns: tuple[GridColumn, ...] = ()
    refs: tuple[RefLookup, ...] = ()

    def form_set(self, table: str) -> FormSet | None:
        for fs in self.form_sets:
            if fs.table_name == table:
                return fs
        return None

    def grid_set(self, table: str) -> GridSet | None:
        for gs in self.grid_sets:
            if gs.table_name == table:
                return gs
        return None

    def control(self, table: str, field: str) -> Control | None:
        for c in self.controls:
            if c.form_id == table and c.field_name == field:
                return c
        return None

    def grid_column(self, table: str, field: str) -> GridColumn | None:
        for gc in self.grid_columns:
            if gc.grid_id == table and gc.field_name == field:
                return gc
        return None

    def ref(self, table: str, field: str) -> RefLookup | None:
        for r in self.refs:
            if r.table_name == table and r.field_name == field:
                return r
        return None

    def canonical(self) -> "UiCatalog":
        """Records sorted into the export order, so equal content compares equal."""
        return UiCatalog(
            form_sets=tuple(sorted(self.form_sets, key=lambda x: x.table_name)),
            controls=tuple(sorted(self.controls, key=lambda x: (x.form_id, x.field_name))),
            grid_sets=tuple(sorted(self.grid_sets, key=lambda x: x.table_name)),
            grid_columns=tuple(
                sorted(self.grid_columns, key=lambda x: (x.grid_id, x.field_name))
            ),
            refs=tuple(sorted(self.refs, key=lambda x: (x.table_name, x.field_name))),
        )

    def title_for(self, table: str) -> str:
        fs = self.form_set(table)
        return fs.title if fs is not None else table

    def page_size_for(self, table: str) -> int:
        gs = self.grid_set(table)
        return gs.page_size if gs is not None else DEFAULT_PAGE_SIZE

    def validate(self, schema: SchemaModel) -> None:
        """Referential and compatibility checks against the schema."""
        seen_forms: set[str] = set()
        for fs in self.form_sets:
            if schema.table(fs.table_name) is None:
                raise ValidationError("formset", f"unknown table {fs.table_name!r}")
            if fs.table_name in seen_forms:
                raise ValidationError("formset", f"duplicate form set for table {fs.table_name!r}")
            seen_forms.add(fs.table_name)

        seen_grids: set[str] = set()
        for gs in self.grid_sets:
            if schema.table(gs.table_name) is None:
                raise ValidationError("gridset", f"unknown table {gs.table_name!r}")
            if gs.table_name in seen_grids:
                raise ValidationError("gridset", f"duplicate grid set for table {gs.table_name!r}")
            seen_grids.add(gs.table_name)

        seen_controls: set[tuple[str, str]] = set()
        for c in self.controls:
            table = schema.table(c.form_id)
            if table is None or not table.has_field(c.field_name):
                raise ValidationError("control", f"unknown field {c.form_id}.{c.field_name}")
            key = (c.form_id, c.field_name)
            if key in seen_controls:
                raise ValidationError("control", f"duplicate control for {c.form_id}.{c.field_name}")
            seen_controls.add(key)
            ct = CONTROL_TYPES.get(c.control_type_id)
            if ct is None:
                raise ValidationError("control", f"unknown control type {c.control_type_id!r}")
            if table.field(c.field_name).data_type not in ct.compatible_types:
                raise ValidationError(
                    "control",
                    f"{c.form_id}.{c.field_name}: control kind {ct.kind!r} is incompatible "
                    f"with type {table.field(c.field_name).data_type.value}",
                )

        seen_columns: set[tuple[str, str]] = set()
        for gc in self.grid_columns:
            table = schema.table(gc.grid_id)
            if table is None or not table.has_field(gc.field_name):
                raise ValidationError("grid_column", f"unknown field {gc.grid_id}.{gc.field_name}")
            key = (gc.grid_id, gc.field_name)
            if key in seen_columns:
                raise ValidationError(
                    "grid_column", f"duplicate column for {gc.grid_id}.{gc.field_name}"
                )
            seen_columns.add(key)

        for r in self.refs:
            table = schema.table(r.table_name)
            if table is None or not table.has_field(r.field_name):
                raise ValidationError("ref", f"unknown field {r.table_name}.{r.field_name}")
            target = schema.table(r.referenced_table)
            if target is None:
                raise ValidationError("ref", f"unknown referenced table {r.referenced_table!r}")
            if not target.has_field(r.referenced_key_field) or not target.has_field(r.display_field):
                raise ValidationError(
                    "ref", f"unknown referenced field on {r.referenced_table!r}"
                )
            if target.primary_key != (r.referenced_key_field,):
                raise ValidationError(
                    "ref",
                    f"{r.referenced_table}.{r.referenced_key_field} is not that table's primary key",
                )


def default_control_kind(field: FieldDef, table: str, catalog: UiCatalog) -> str:
    if catalog.ref(table, field.name) is not None:
        return ControlKind.LOOKUP
    return _KIND_BY_TYPE[field.data_type]


def control_for_field(field: FieldDef, table: str, catalog: UiCatalog) -> Control:
    """The stored control for a field, or a synthesized default.

    Defaults: kind chosen by data type (lookup when a reference is declared),
    label = field name, stacked vertically by ordinal, always visible.
    """
    stored = catalog.control(table, field.name)
    if stored is not None:
        return stored
    kind = default_control_kind(field, table, catalog)
    return Control(
        form_id=table,
        field_name=field.name,
        control_type_id=kind,
        label=field.name,
        row=field.ordinal,
        col=0,
        tab_order=field.ordinal,
        visible=True,
    )
