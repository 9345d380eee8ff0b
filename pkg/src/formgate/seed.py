"""Seed document parsing and canonical export.

Line-oriented UTF-8 text. Sections open with a bracketed header; `#` starts a
comment; blank lines are ignored. One record per line:

    [meta]         version=<n>                      (optional; defaults to 1)
    [users]        <username> <password-or-digest>
    [roles]        <rolename>
    [assignments]  <username> -> <rolename>
    [permissions]  <rolename>, <+|->, <Action>, <table>.<field|*>
    [schema]       table <name> (<field>:<type>[:null][:default=<v>][:pk], ...)
    [rows]         <table>: <v1>, <v2>, ...         (positional, ordinal order)
    [catalog]      formset <table> title=<text> cols=<n>
                   gridset <table> pagesize=<n>
                   ref <table>.<field> -> <table>.<key> display=<field>
                   form <table>.<field> type=<kind> label=<text> pos=<r>,<c> [tab=<n>] [visible=<bool>]
                   grid <table>.<field> header=<text> width=<n> ord=<n>

Plaintext passwords are digested on ingest; a value already in digest form is
kept verbatim so an exported store re-loads identically. dump_seed emits
sections and records in one canonical order, making export/reload a fixpoint.
"""

from __future__ import annotations

import re
from typing import Any

from .catalog import (
    CONTROL_TYPES,
    Control,
    FormSet,
    GridColumn,
    GridSet,
    RefLookup,
    UiCatalog,
)
from .errors import ParseError
from .model import (
    Action,
    DataType,
    FieldDef,
    Permission,
    SchemaModel,
    Scope,
    Sign,
    TableDef,
    UserRecord,
)
from .passwords import hash_password, is_digest
from .store import StoreState, canonical_permissions, pk_of, sorted_rows

SECTIONS = ("meta", "users", "roles", "assignments", "permissions", "schema", "rows", "catalog")

_KV_SPLIT = re.compile(r" (?=[a-z]+=)")


def parse_value(raw: str, data_type: DataType, where: tuple[int, str]) -> Any:
    """One seed token to a typed value; `null` is the null literal."""
    line_no, line = where
    if raw == "null":
        return None
    try:
        if data_type is DataType.INTEGER:
            return int(raw)
        if data_type is DataType.DECIMAL:
            return float(raw)
        if data_type is DataType.BOOLEAN:
            if raw not in ("true", "false"):
                raise ValueError(raw)
            return raw == "true"
    except ValueError:
        raise ParseError(line_no, f"bad {data_type.value} literal {raw!r}: {line}") from None
    return raw


def format_value(value: Any, data_type: DataType) -> str:
    if value is None:
        return "null"
    if data_type is DataType.BOOLEAN:
        return "true" if value else "false"
    return str(value)


def _parse_kv(rest: str, line_no: int, line: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for chunk in _KV_SPLIT.split(rest):
        if "=" not in chunk:
            raise ParseError(line_no, f"expected key=value, got {chunk!r}: {line}")
        key, value = chunk.split("=", 1)
        pairs[key] = value
    return pairs


def _require(pairs: dict[str, str], keys: set[str], line_no: int, line: str) -> None:
    missing = keys - set(pairs)
    if missing:
        raise ParseError(line_no, f"missing {sorted(missing)}: {line}")
    unknown = set(pairs) - keys - {"tab", "visible"}
    if unknown:
        raise ParseError(line_no, f"unknown keys {sorted(unknown)}: {line}")


def _int(pairs: dict[str, str], key: str, line_no: int, line: str) -> int:
    try:
        return int(pairs[key])
    except ValueError:
        raise ParseError(line_no, f"{key} must be an integer: {line}") from None


def _split_field_ref(token: str, line_no: int, line: str) -> tuple[str, str]:
    if "." not in token:
        raise ParseError(line_no, f"expected <table>.<field>, got {token!r}: {line}")
    table, fieldname = token.split(".", 1)
    return table, fieldname


# =============================================================================
# Parsing
# =============================================================================


def _parse_schema_line(body: str, line_no: int, line: str) -> TableDef:
    m = re.fullmatch(r"table\s+(\S+)\s*\((.*)\)", body)
    if m is None:
        raise ParseError(line_no, f"bad table declaration: {line}")
    name, fields_src = m.group(1), m.group(2)
    fields: list[FieldDef] = []
    pk: list[str] = []
    for ordinal, spec in enumerate(s.strip() for s in fields_src.split(",")):
        parts = spec.split(":")
        if len(parts) < 2:
            raise ParseError(line_no, f"field needs <name>:<type>: {line}")
        fname, type_token, *flags = parts
        try:
            dtype = DataType.parse(type_token)
        except ValueError:
            raise ParseError(line_no, f"unknown data type {type_token!r}: {line}") from None
        nullable = False
        has_default = False
        default: Any = None
        for flag in flags:
            if flag == "null":
                nullable = True
            elif flag == "pk":
                pk.append(fname)
            elif flag.startswith("default="):
                has_default = True
                default = parse_value(flag[len("default=") :], dtype, (line_no, line))
            else:
                raise ParseError(line_no, f"unknown field flag {flag!r}: {line}")
        fields.append(
            FieldDef(fname, dtype, nullable=nullable, has_default=has_default, default=default, ordinal=ordinal)
        )
    return TableDef(name, tuple(fields), tuple(pk))


def _parse_catalog_line(body: str, line_no: int, line: str, cat: dict[str, list]) -> None:
    kind, _, rest = body.partition(" ")
    rest = rest.strip()
    if kind == "formset":
        target, _, kv = rest.partition(" ")
        pairs = _parse_kv(kv, line_no, line)
        _require(pairs, {"title", "cols"}, line_no, line)
        cat["form_sets"].append(
            FormSet(target, target, pairs["title"], _int(pairs, "cols", line_no, line))
        )
    elif kind == "gridset":
        target, _, kv = rest.partition(" ")
        pairs = _parse_kv(kv, line_no, line)
        _require(pairs, {"pagesize"}, line_no, line)
        cat["grid_sets"].append(GridSet(target, target, _int(pairs, "pagesize", line_no, line)))
    elif kind == "ref":
        m = re.fullmatch(r"(\S+)\s*->\s*(\S+)\s+display=(\S+)", rest)
        if m is None:
            raise ParseError(line_no, f"bad ref declaration: {line}")
        table, fieldname = _split_field_ref(m.group(1), line_no, line)
        rtable, rkey = _split_field_ref(m.group(2), line_no, line)
        cat["refs"].append(RefLookup(table, fieldname, rtable, rkey, m.group(3)))
    elif kind == "form":
        target, _, kv = rest.partition(" ")
        table, fieldname = _split_field_ref(target, line_no, line)
        pairs = _parse_kv(kv, line_no, line)
        _require(pairs, {"type", "label", "pos"}, line_no, line)
        if pairs["type"] not in CONTROL_TYPES:
            raise ParseError(line_no, f"unknown control type {pairs['type']!r}: {line}")
        m = re.fullmatch(r"(\d+),(\d+)", pairs["pos"])
        if m is None:
            raise ParseError(line_no, f"pos must be <row>,<col>: {line}")
        row, col = int(m.group(1)), int(m.group(2))
        tab = int(pairs["tab"]) if "tab" in pairs else row
        visible = pairs.get("visible", "true") == "true"
        cat["controls"].append(
            Control(table, fieldname, pairs["type"], pairs["label"], row, col, tab, visible)
        )
    elif kind == "grid":
        target, _, kv = rest.partition(" ")
        table, fieldname = _split_field_ref(target, line_no, line)
        pairs = _parse_kv(kv, line_no, line)
        _require(pairs, {"header", "width", "ord"}, line_no, line)
        cat["grid_columns"].append(
            GridColumn(
                table,
                fieldname,
                pairs["header"],
                _int(pairs, "width", line_no, line),
                _int(pairs, "ord", line_no, line),
            )
        )
    else:
        raise ParseError(line_no, f"unknown catalog record {kind!r}: {line}")


def parse_seed(text: str) -> StoreState:
    """Full document to a validated StoreState; nothing survives a failure."""
    section: str | None = None
    users: dict[str, UserRecord] = {}
    roles: set[str] = set()
    assignments: set[tuple[str, str]] = set()
    permissions: list[Permission] = []
    tables: list[TableDef] = []
    raw_rows: list[tuple[int, str, str]] = []
    cat: dict[str, list] = {
        "form_sets": [],
        "controls": [],
        "grid_sets": [],
        "grid_columns": [],
        "refs": [],
    }
    version = 1

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in SECTIONS:
                raise ParseError(line_no, f"unknown section {section!r}")
            continue
        if section is None:
            raise ParseError(line_no, f"record before any section header: {line}")

        if section == "meta":
            pairs = _parse_kv(line, line_no, line)
            if set(pairs) != {"version"}:
                raise ParseError(line_no, f"meta supports only version=<n>: {line}")
            version = _int(pairs, "version", line_no, line)
        elif section == "users":
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(line_no, f"expected <username> <password>: {line}")
            username, secret = parts
            digest = secret if is_digest(secret) else hash_password(secret)
            users[username] = UserRecord(username, digest)
        elif section == "roles":
            if len(line.split()) != 1:
                raise ParseError(line_no, f"expected one role name: {line}")
            roles.add(line)
        elif section == "assignments":
            m = re.fullmatch(r"(\S+)\s*->\s*(\S+)", line)
            if m is None:
                raise ParseError(line_no, f"expected <username> -> <rolename>: {line}")
            assignments.add((m.group(1), m.group(2)))
        elif section == "permissions":
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise ParseError(line_no, f"expected 4 comma-separated parts: {line}")
            role, sign_sym, action_token, scope_token = parts
            try:
                sign = Sign.from_symbol(sign_sym)
                action = Action.parse(action_token)
            except ValueError as exc:
                raise ParseError(line_no, f"{exc}: {line}") from None
            table, fieldname = _split_field_ref(scope_token, line_no, line)
            scope = Scope(table, None if fieldname == "*" else fieldname)
            permissions.append(Permission(role, sign, action, scope))
        elif section == "schema":
            tables.append(_parse_schema_line(line, line_no, line))
        elif section == "rows":
            table, sep, values = line.partition(":")
            if not sep:
                raise ParseError(line_no, f"expected <table>: <values>: {line}")
            raw_rows.append((line_no, table.strip(), values.strip()))
        elif section == "catalog":
            _parse_catalog_line(line, line_no, line, cat)

    if not tables:
        raise ParseError(0, "missing required [schema] section")
    schema = SchemaModel(tuple(sorted(tables, key=lambda t: t.name)))

    rows: dict[str, list[dict[str, Any]]] = {}
    for line_no, table_name, values_src in raw_rows:
        tdef = schema.table(table_name)
        if tdef is None:
            raise ParseError(line_no, f"row for unknown table {table_name!r}")
        values = [v.strip() for v in values_src.split(",")]
        if len(values) != len(tdef.fields):
            raise ParseError(
                line_no,
                f"{table_name} needs {len(tdef.fields)} values, got {len(values)}",
            )
        row = {
            f.name: parse_value(raw_value, f.data_type, (line_no, values_src))
            for f, raw_value in zip(tdef.fields, values)
        }
        rows.setdefault(table_name, []).append(row)

    state = StoreState(
        users=users,
        roles=frozenset(roles),
        assignments=frozenset(assignments),
        permissions=canonical_permissions(permissions),
        schema=schema,
        rows={
            name: sorted_rows(schema.table(name), table_rows)
            for name, table_rows in rows.items()
        },
        catalog=UiCatalog(
            form_sets=tuple(cat["form_sets"]),
            controls=tuple(cat["controls"]),
            grid_sets=tuple(cat["grid_sets"]),
            grid_columns=tuple(cat["grid_columns"]),
            refs=tuple(cat["refs"]),
        ).canonical(),
        version=version,
    )
    state.validate()
    return state


# =============================================================================
# Canonical export
# =============================================================================


def _field_decl(f: FieldDef, pk: tuple[str, ...]) -> str:
    decl = f"{f.name}:{f.data_type.value}"
    if f.nullable:
        decl += ":null"
    if f.has_default:
        decl += f":default={format_value(f.default, f.data_type)}"
    if f.name in pk:
        decl += ":pk"
    return decl


def dump_seed(state: StoreState) -> str:
    """Canonical text form: fixed section order, records sorted, loads back equal."""
    out: list[str] = []

    out.append("[meta]")
    out.append(f"version={state.version}")

    out.append("")
    out.append("[users]")
    for name in sorted(state.users):
        out.append(f"{name} {state.users[name].password_digest}")

    out.append("")
    out.append("[roles]")
    out.extend(sorted(state.roles))

    out.append("")
    out.append("[assignments]")
    for user, role in sorted(state.assignments):
        out.append(f"{user} -> {role}")

    out.append("")
    out.append("[permissions]")
    perm_lines = [
        f"{p.role}, {p.sign.symbol}, {p.action.value}, {p.scope}" for p in state.permissions
    ]
    out.extend(sorted(perm_lines))

    out.append("")
    out.append("[schema]")
    for table in sorted(state.schema.tables, key=lambda t: t.name):
        decls = ", ".join(_field_decl(f, table.primary_key) for f in table.fields)
        out.append(f"table {table.name} ({decls})")

    out.append("")
    out.append("[rows]")
    for table in sorted(state.schema.tables, key=lambda t: t.name):
        for row in sorted(state.rows.get(table.name, ()), key=lambda r: pk_of(table, r)):
            values = ", ".join(format_value(row[f.name], f.data_type) for f in table.fields)
            out.append(f"{table.name}: {values}")

    out.append("")
    out.append("[catalog]")
    for fs in sorted(state.catalog.form_sets, key=lambda x: x.table_name):
        out.append(f"formset {fs.table_name} title={fs.title} cols={fs.layout_columns}")
    for gs in sorted(state.catalog.grid_sets, key=lambda x: x.table_name):
        out.append(f"gridset {gs.table_name} pagesize={gs.page_size}")
    for r in sorted(state.catalog.refs, key=lambda x: (x.table_name, x.field_name)):
        out.append(
            f"ref {r.table_name}.{r.field_name} -> {r.referenced_table}.{r.referenced_key_field} "
            f"display={r.display_field}"
        )
    for c in sorted(state.catalog.controls, key=lambda x: (x.form_id, x.field_name)):
        out.append(
            f"form {c.form_id}.{c.field_name} type={c.control_type_id} label={c.label} "
            f"pos={c.row},{c.col} tab={c.tab_order} visible={'true' if c.visible else 'false'}"
        )
    for gc in sorted(state.catalog.grid_columns, key=lambda x: (x.grid_id, x.field_name)):
        out.append(
            f"grid {gc.grid_id}.{gc.field_name} header={gc.header} width={gc.width} ord={gc.ordinal}"
        )

    return "\n".join(out) + "\n"
