"""
Conflict-resolution engine tests.

Tests prove:
- resolve_signs: deny dominates, default deny on empty, order independence
- roles_of_user returns exact assignment sets and rejects unknown users
- expand_permission: late table expansion, field scope, Delete stays row-level
- effective_matrix reproduces the published two-role worked example
- exhaustive and sampled equivalence against an independent brute-force oracle
- permutation invariance, duplicate idempotence, grant/deny monotonicity
- accessible_tables orders by name and only Select grants reveal a table
- explain_decision traces agree with the matrix at every coordinate
"""

from __future__ import annotations

import itertools
import random

import pytest

from formgate.errors import UnknownObject, UnknownUser, ValidationError
from formgate.model import (
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
from formgate.policy import (
    accessible_tables,
    effective_matrix,
    expand_permission,
    explain_decision,
    resolve_signs,
    roles_of_user,
)

from oracle import oracle_field_decision

G = Sign.GRANT
D = Sign.DENY


# =============================================================================
# Fixture data: the published two-role conflict table, transcribed cell by cell
# =============================================================================

# (table, field, R1 cell, R2 cell, expected result); None = unspecified
TWO_ROLE_CELLS = [
    ("Customers", "CustomerID", "+", "+", "grant"),
    ("Customers", "CustomerName", None, "+", "grant"),
    ("Customers", "Address", None, None, "deny"),
    ("Employees", "EmployeeID", "-", "+", "deny"),
    ("Employees", "EmployeeName", "+", None, "grant"),
    ("Employees", "Phone", None, "-", "deny"),
    ("Orders", "EID", "-", "-", "deny"),
    ("Orders", "CID", "-", "-", "deny"),
    ("Orders", "OrderDate", "+", "+", "grant"),
    ("Orders", "Payment", "+", "+", "grant"),
]


def _table(name: str, specs: list[tuple[str, DataType]], pk: tuple[str, ...]) -> TableDef:
    fields = tuple(
        FieldDef(fname, dtype, nullable=fname not in pk, ordinal=i)
        for i, (fname, dtype) in enumerate(specs)
    )
    return TableDef(name, fields, pk)


@pytest.fixture
def two_role_schema() -> SchemaModel:
    return SchemaModel(
        (
            _table(
                "Customers",
                [
                    ("CustomerID", DataType.INTEGER),
                    ("CustomerName", DataType.TEXT),
                    ("Address", DataType.TEXT),
                ],
                ("CustomerID",),
            ),
            _table(
                "Employees",
                [
                    ("EmployeeID", DataType.INTEGER),
                    ("EmployeeName", DataType.TEXT),
                    ("Phone", DataType.TEXT),
                ],
                ("EmployeeID",),
            ),
            _table(
                "Orders",
                [
                    ("EID", DataType.INTEGER),
                    ("CID", DataType.INTEGER),
                    ("OrderDate", DataType.DATE),
                    ("Payment", DataType.DECIMAL),
                ],
                ("EID", "CID"),
            ),
        )
    )


@pytest.fixture
def two_role_permissions() -> list[Permission]:
    perms = []
    for table, field, r1, r2, _expected in TWO_ROLE_CELLS:
        for role, cell in (("Role1", r1), ("Role2", r2)):
            if cell is not None:
                perms.append(
                    Permission(role, Sign.from_symbol(cell), Action.SELECT, Scope(table, field))
                )
    return perms


USERS = {"pat": UserRecord("pat", "pbkdf2$1$00$00")}
ASSIGNMENTS = [("pat", "Role1"), ("pat", "Role2")]


def pat_matrix(perms, schema) -> EffectiveMatrix:
    return effective_matrix("pat", USERS, ASSIGNMENTS, perms, schema)


# =============================================================================
# resolve_signs
# =============================================================================


def test_resolve_empty_is_deny():
    assert resolve_signs([]) is D


def test_resolve_deny_beats_grant():
    assert resolve_signs([D, G]) is D
    assert resolve_signs([G, D]) is D


def test_resolve_all_grants():
    assert resolve_signs([G, G]) is G
    assert resolve_signs([G]) is G


def test_resolve_deny_dominance_property():
    rng = random.Random(4101)
    for _ in range(500):
        multiset = [rng.choice([G, D]) for _ in range(rng.randint(0, 8))]
        result = resolve_signs(multiset)
        if D in multiset:
            assert result is D
        elif G in multiset:
            assert result is G
        else:
            assert result is D
        # permutation must not matter
        rng.shuffle(multiset)
        assert resolve_signs(multiset) is result


# =============================================================================
# roles_of_user
# =============================================================================


def test_roles_of_user_multiple():
    assert roles_of_user("pat", USERS, ASSIGNMENTS) == {"Role1", "Role2"}


def test_roles_of_user_single():
    users = {"sam": UserRecord("sam", "x")}
    assert roles_of_user("sam", users, [("sam", "Clerk")]) == {"Clerk"}


def test_roles_of_user_unknown():
    with pytest.raises(UnknownUser):
        roles_of_user("ghost", USERS, ASSIGNMENTS)


def test_roles_of_user_zero_roles_is_representable():
    users = {"drew": UserRecord("drew", "x")}
    assert roles_of_user("drew", users, []) == frozenset()


# =============================================================================
# expand_permission
# =============================================================================


def test_expand_table_scope_covers_every_field(two_role_schema):
    perm = Permission("Advisor", G, Action.SELECT, Scope("Orders"))
    atoms = expand_permission(perm, two_role_schema)
    assert atoms == {
        ("Advisor", G, Action.SELECT, "Orders", "EID"),
        ("Advisor", G, Action.SELECT, "Orders", "CID"),
        ("Advisor", G, Action.SELECT, "Orders", "OrderDate"),
        ("Advisor", G, Action.SELECT, "Orders", "Payment"),
    }


def test_expand_field_scope_is_single(two_role_schema):
    perm = Permission("Staff", G, Action.SELECT, Scope("Customers", "Address"))
    assert expand_permission(perm, two_role_schema) == {
        ("Staff", G, Action.SELECT, "Customers", "Address")
    }


def test_expand_delete_stays_table_level(two_role_schema):
    perm = Permission("Advisor", G, Action.DELETE, Scope("Orders"))
    assert expand_permission(perm, two_role_schema) == {
        ("Advisor", G, Action.DELETE, "Orders", None)
    }


def test_expand_unknown_table_rejected(two_role_schema):
    perm = Permission("Staff", G, Action.SELECT, Scope("Nope"))
    with pytest.raises(UnknownObject):
        expand_permission(perm, two_role_schema)


def test_expand_unknown_field_rejected(two_role_schema):
    perm = Permission("Staff", G, Action.SELECT, Scope("Customers", "Nope"))
    with pytest.raises(UnknownObject):
        expand_permission(perm, two_role_schema)


def test_expand_sees_fields_added_after_policy_creation():
    # late expansion: the same stored permission covers a grown table
    perm = Permission("Staff", G, Action.SELECT, Scope("T"))
    small = SchemaModel((_table("T", [("a", DataType.INTEGER)], ("a",)),))
    grown = SchemaModel(
        (_table("T", [("a", DataType.INTEGER), ("b", DataType.TEXT)], ("a",)),)
    )
    assert len(expand_permission(perm, small)) == 1
    assert len(expand_permission(perm, grown)) == 2


def test_field_scoped_delete_rejected_at_construction():
    with pytest.raises(ValidationError):
        Permission("Staff", D, Action.DELETE, Scope("Orders", "Payment"))


# =============================================================================
# effective_matrix: published worked example
# =============================================================================


def test_two_role_fixture_has_fifteen_explicit_cells(two_role_permissions):
    explicit = [c for _t, _f, r1, r2, _e in TWO_ROLE_CELLS for c in (r1, r2) if c is not None]
    assert len(explicit) == 15
    assert len(two_role_permissions) == 15


def test_two_role_select_results(two_role_permissions, two_role_schema):
    matrix = pat_matrix(two_role_permissions, two_role_schema)
    for table, field, _r1, _r2, expected in TWO_ROLE_CELLS:
        assert matrix.decision(Action.SELECT, table, field).value == expected, (table, field)


def test_matrix_is_total(two_role_permissions, two_role_schema):
    matrix = pat_matrix(two_role_permissions, two_role_schema)
    for table in two_role_schema.tables:
        for f in table.fields:
            for action in (Action.SELECT, Action.INSERT, Action.UPDATE):
                assert matrix.decision(action, table.name, f.name) in (G, D)
        assert matrix.delete_decision(table.name) in (G, D)


def test_unmentioned_actions_default_to_deny(two_role_permissions, two_role_schema):
    # the fixture only grants Select; Insert/Update/Delete must all be deny
    matrix = pat_matrix(two_role_permissions, two_role_schema)
    for table in two_role_schema.tables:
        for f in table.fields:
            assert matrix.decision(Action.INSERT, table.name, f.name) is D
            assert matrix.decision(Action.UPDATE, table.name, f.name) is D
        assert not matrix.can_delete(table.name)


def test_zero_permission_user_is_all_deny(two_role_schema):
    users = {"bob": UserRecord("bob", "x")}
    matrix = effective_matrix("bob", users, [("bob", "Clerk")], [], two_role_schema)
    assert all(sign is D for sign in matrix.field_decisions.values())
    assert all(sign is D for sign in matrix.delete_decisions.values())


def test_matrix_unknown_user(two_role_schema):
    with pytest.raises(UnknownUser):
        effective_matrix("ghost", USERS, ASSIGNMENTS, [], two_role_schema)


# =============================================================================
# Oracle equivalence
# =============================================================================

ORACLE_SCHEMA = SchemaModel(
    (_table("T", [("a", DataType.INTEGER), ("b", DataType.TEXT), ("c", DataType.TEXT)], ("a",)),)
)


def _perms_from_cells(cells: dict[tuple[str, str, str], str], action: Action) -> list[Permission]:
    return [
        Permission(role, Sign.from_symbol(sym), action, Scope(table, field))
        for (role, table, field), sym in cells.items()
    ]


@pytest.mark.parametrize("action", [Action.SELECT, Action.INSERT, Action.UPDATE])
def test_oracle_equivalence_exhaustive(action):
    roles = ["R1", "R2"]
    fields = ["a", "b", "c"]
    users = {"u": UserRecord("u", "x")}
    assignments = [("u", role) for role in roles]
    coords = [(role, "T", field) for role in roles for field in fields]
    for states in itertools.product(["+", "-", None], repeat=len(coords)):
        cells = {coord: sym for coord, sym in zip(coords, states) if sym is not None}
        matrix = effective_matrix(
            "u", users, assignments, _perms_from_cells(cells, action), ORACLE_SCHEMA
        )
        for field in fields:
            expected = oracle_field_decision(cells, roles, "T", field)
            assert matrix.decision(action, "T", field).value == expected, (states, field)


def test_oracle_equivalence_sampled_three_roles():
    rng = random.Random(729)
    schema = SchemaModel(
        (
            _table(
                "T",
                [
                    ("a", DataType.INTEGER),
                    ("b", DataType.TEXT),
                    ("c", DataType.TEXT),
                    ("d", DataType.TEXT),
                ],
                ("a",),
            ),
        )
    )
    roles = ["R1", "R2", "R3"]
    fields = ["a", "b", "c", "d"]
    users = {"u": UserRecord("u", "x")}
    assignments = [("u", role) for role in roles]
    for _ in range(1000):
        action = rng.choice([Action.SELECT, Action.INSERT, Action.UPDATE])
        cells = {}
        for role in roles:
            for field in fields:
                sym = rng.choice(["+", "-", None])
                if sym is not None:
                    cells[(role, "T", field)] = sym
        matrix = effective_matrix(
            "u", users, assignments, _perms_from_cells(cells, action), schema
        )
        for field in fields:
            expected = oracle_field_decision(cells, roles, "T", field)
            assert matrix.decision(action, "T", field).value == expected


# =============================================================================
# Structural invariants
# =============================================================================


def test_order_independence(two_role_permissions, two_role_schema):
    baseline = pat_matrix(two_role_permissions, two_role_schema)
    rng = random.Random(200)
    perms = list(two_role_permissions)
    for _ in range(200):
        rng.shuffle(perms)
        assert pat_matrix(perms, two_role_schema) == baseline


def test_duplicate_permission_is_idempotent(two_role_permissions, two_role_schema):
    baseline = pat_matrix(two_role_permissions, two_role_schema)
    for perm in two_role_permissions:
        assert pat_matrix(two_role_permissions + [perm], two_role_schema) == baseline


def test_grant_and_deny_monotonicity(two_role_schema):
    rng = random.Random(77)
    tables = {t.name: t.field_names() for t in two_role_schema.tables}
    coords = [(t, f) for t, fields in tables.items() for f in fields]
    for _ in range(200):
        base = [
            Permission(
                rng.choice(["Role1", "Role2"]),
                rng.choice([G, D]),
                Action.SELECT,
                Scope(*rng.choice(coords)),
            )
            for _ in range(rng.randint(0, 12))
        ]
        before = pat_matrix(base, two_role_schema)
        table, field = rng.choice(coords)
        role = rng.choice(["Role1", "Role2"])
        with_grant = pat_matrix(
            base + [Permission(role, G, Action.SELECT, Scope(table, field))], two_role_schema
        )
        with_deny = pat_matrix(
            base + [Permission(role, D, Action.SELECT, Scope(table, field))], two_role_schema
        )
        for key, sign in before.field_decisions.items():
            if sign is G:
                assert with_grant.field_decisions[key] is G
            if sign is D:
                assert with_deny.field_decisions[key] is D


# =============================================================================
# accessible_tables
# =============================================================================


def test_accessible_tables_two_role_fixture(two_role_permissions, two_role_schema):
    matrix = pat_matrix(two_role_permissions, two_role_schema)
    assert accessible_tables(matrix, two_role_schema) == ["Customers", "Employees", "Orders"]


def test_accessible_tables_zero_permissions(two_role_schema):
    matrix = pat_matrix([], two_role_schema)
    assert accessible_tables(matrix, two_role_schema) == []


def test_accessible_tables_needs_a_select_grant(two_role_schema):
    # Insert/Update/Delete grants alone never reveal a table
    perms = [
        Permission("Role1", G, Action.INSERT, Scope("Customers")),
        Permission("Role1", G, Action.UPDATE, Scope("Employees", "Phone")),
        Permission("Role1", G, Action.DELETE, Scope("Orders")),
    ]
    matrix = pat_matrix(perms, two_role_schema)
    assert accessible_tables(matrix, two_role_schema) == []


def test_accessible_tables_sorted_lexicographically(two_role_schema):
    perms = [
        Permission("Role1", G, Action.SELECT, Scope("Orders", "Payment")),
        Permission("Role1", G, Action.SELECT, Scope("Customers", "Address")),
    ]
    matrix = pat_matrix(perms, two_role_schema)
    assert accessible_tables(matrix, two_role_schema) == ["Customers", "Orders"]


# =============================================================================
# explain_decision
# =============================================================================


def explain_pat(perms, schema, action, table, field):
    return explain_decision("pat", action, table, field, USERS, ASSIGNMENTS, perms, schema)


def test_explain_lists_both_contributions(two_role_permissions, two_role_schema):
    lines = explain_pat(
        two_role_permissions, two_role_schema, Action.SELECT, "Employees", "EmployeeID"
    )
    assert lines == [
        "Role1 deny Select Employees.EmployeeID (field scope)",
        "Role2 grant Select Employees.EmployeeID (field scope)",
        "result deny",
    ]


def test_explain_default_deny(two_role_permissions, two_role_schema):
    lines = explain_pat(
        two_role_permissions, two_role_schema, Action.SELECT, "Customers", "Address"
    )
    assert lines == ["no permissions; default deny", "result deny"]


def test_explain_table_scope_contribution(two_role_schema):
    perms = [
        Permission("Role1", G, Action.SELECT, Scope("Customers")),
        Permission("Role2", D, Action.SELECT, Scope("Customers", "CustomerID")),
    ]
    lines = explain_pat(perms, two_role_schema, Action.SELECT, "Customers", "CustomerID")
    assert lines == [
        "Role1 grant Select Customers.* (table scope)",
        "Role2 deny Select Customers.CustomerID (field scope)",
        "result deny",
    ]


def test_explain_delete_takes_no_field(two_role_schema):
    perms = [Permission("Role1", G, Action.DELETE, Scope("Orders"))]
    lines = explain_pat(perms, two_role_schema, Action.DELETE, "Orders", None)
    assert lines == ["Role1 grant Delete Orders.* (table scope)", "result grant"]
    with pytest.raises(UnknownObject):
        explain_pat(perms, two_role_schema, Action.DELETE, "Orders", "Payment")


def test_explain_unknown_objects(two_role_permissions, two_role_schema):
    with pytest.raises(UnknownObject):
        explain_pat(two_role_permissions, two_role_schema, Action.SELECT, "Nope", "x")
    with pytest.raises(UnknownObject):
        explain_pat(two_role_permissions, two_role_schema, Action.SELECT, "Customers", "Nope")


def test_explain_result_matches_matrix_everywhere(two_role_permissions, two_role_schema):
    matrix = pat_matrix(two_role_permissions, two_role_schema)
    for table in two_role_schema.tables:
        for f in table.fields:
            for action in (Action.SELECT, Action.INSERT, Action.UPDATE):
                lines = explain_pat(
                    two_role_permissions, two_role_schema, action, table.name, f.name
                )
                assert lines[-1] == f"result {matrix.decision(action, table.name, f.name).value}"
        lines = explain_pat(two_role_permissions, two_role_schema, Action.DELETE, table.name, None)
        assert lines[-1] == f"result {matrix.delete_decision(table.name).value}"
