"""
Top-level acceptance gate.

Each test exercises one headline guarantee end to end and prints a single
[PASS]/[FAIL] line naming it. Run with -s to see the lines on success.
"""

from __future__ import annotations

import itertools
import json
import random
import time
from dataclasses import replace

from fastapi.testclient import TestClient

from formgate import policy
from formgate.descriptors import build_form_descriptor, build_grid_descriptor, serialize_descriptor
from formgate.errors import PolicySchemaConflict, UnknownObject
from formgate.model import (
    FIELD_ACTIONS,
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
from formgate.passwords import hash_password
from formgate.seed import dump_seed, parse_seed
from formgate.service import create_app
from formgate.store import Store

from genstore import random_state
from oracle import oracle_field_decision


def _report(name):
    """Print one [PASS]/[FAIL] line per criterion, then re-raise on failure."""

    class _Reporter:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            print(("[FAIL] " if exc_type else "[PASS] ") + name)
            return False

    return _Reporter()


# =============================================================================
# Two-role sign conflict fixture
# =============================================================================


def test_two_role_conflict_fixture(conflicts_store):
    expected = {
        ("Customers", "CustomerID"): "grant",
        ("Customers", "CustomerName"): "grant",
        ("Customers", "Address"): "deny",
        ("Employees", "EmployeeID"): "deny",
        ("Employees", "EmployeeName"): "grant",
        ("Employees", "Phone"): "deny",
        ("Orders", "EID"): "deny",
        ("Orders", "CID"): "deny",
        ("Orders", "OrderDate"): "grant",
        ("Orders", "Payment"): "grant",
    }
    with _report("two-role conflict fixture resolves all 10 Select cells exactly"):
        started = time.perf_counter()
        matrix = conflicts_store.effective_matrix("pat")
        for (table, field), decision in expected.items():
            got = matrix.decision(Action.SELECT, table, field).value
            assert got == decision, (table, field, got)
        assert time.perf_counter() - started < 1.0


# =============================================================================
# Partial-visibility walkthrough fixture
# =============================================================================


def test_partial_visibility_fixture(crm_store):
    with _report("two-role user sees exactly {City, CompanyName} on Customers"):
        matrix = crm_store.effective_matrix("alice")
        state = crm_store.snapshot()
        assert "Customers" in policy.accessible_tables(matrix, state.schema)
        grid = build_grid_descriptor(matrix, "Customers", state.schema, state.catalog)
        assert {c.field for c in grid.columns} == {"City", "CompanyName"}
        others = {
            f.name
            for f in state.schema.table("Customers").fields
            if f.name not in ("City", "CompanyName")
        }
        assert others
        for name in others:
            assert matrix.decision(Action.SELECT, "Customers", name) is Sign.DENY


# =============================================================================
# Brute-force oracle equivalence
# =============================================================================


def _cells_schema(fields):
    defs = [FieldDef(fields[0], DataType.INTEGER, ordinal=0)]
    defs += [FieldDef(name, DataType.TEXT, nullable=True, ordinal=i)
             for i, name in enumerate(fields[1:], start=1)]
    return SchemaModel((TableDef("t", tuple(defs), (fields[0],)),))


def _matrix_for_cells(cells, roles, schema, action):
    permissions = [
        Permission(role, Sign.GRANT if sign == "+" else Sign.DENY, action, Scope(table, field))
        for (role, table, field), sign in cells.items()
    ]
    users = {"u": UserRecord("u", "pbkdf2$1$aa$bb")}
    assignments = [("u", role) for role in roles]
    return policy.effective_matrix("u", users, assignments, permissions, schema)


def test_oracle_equivalence():
    with _report("matrix equals brute-force oracle on 729x3 exhaustive and 10000 sampled"):
        started = time.perf_counter()

        roles = ["r1", "r2"]
        fields = ["fa", "fb", "fc"]
        schema = _cells_schema(fields)
        coords = [(role, "t", field) for role in roles for field in fields]
        for action in FIELD_ACTIONS:
            for signs in itertools.product(("absent", "+", "-"), repeat=len(coords)):
                cells = {
                    coord: sign
                    for coord, sign in zip(coords, signs)
                    if sign != "absent"
                }
                matrix = _matrix_for_cells(cells, roles, schema, action)
                for field in fields:
                    assert matrix.decision(action, "t", field).value == oracle_field_decision(
                        cells, roles, "t", field
                    )

        rng = random.Random(90210)
        roles = ["r1", "r2", "r3"]
        fields = ["fa", "fb", "fc", "fd"]
        schema = _cells_schema(fields)
        coords = [(role, "t", field) for role in roles for field in fields]
        for _ in range(10_000):
            cells = {}
            for coord in coords:
                sign = rng.choice(("absent", "+", "-"))
                if sign != "absent":
                    cells[coord] = sign
            action = rng.choice(FIELD_ACTIONS)
            matrix = _matrix_for_cells(cells, roles, schema, action)
            for field in fields:
                assert matrix.decision(action, "t", field).value == oracle_field_decision(
                    cells, roles, "t", field
                )

        assert time.perf_counter() - started < 10.0


# =============================================================================
# Existence hiding
# =============================================================================


def test_existence_hiding():
    with _report("100 random policies leak no denied field name and blur missing fields"):
        rng = random.Random(60601)
        descriptor_scans = 0
        write_probe_pairs = 0
        for _ in range(100):
            base = random_state(rng)
            usernames = sorted(base.users)
            users = {
                name: UserRecord(name, hash_password("pw-" + name, iterations=1))
                for name in usernames
            }
            anchor_role = sorted(base.roles)[0]
            assignments = frozenset(base.assignments) | {
                (name, anchor_role) for name in usernames
            }
            state = replace(base, users=users, assignments=assignments)
            store = Store(state)
            client = TestClient(create_app(store))

            for username in usernames:
                resp = client.post(
                    "/login", json={"username": username, "password": "pw-" + username}
                )
                assert resp.status_code == 200
                headers = {"Authorization": "Bearer " + resp.json()["token"]}
                matrix = store.effective_matrix(username)

                for table in state.schema.tables:
                    denied = [
                        f.name
                        for f in table.fields
                        if not matrix.granted(Action.SELECT, table.name, f.name)
                    ]

                    for kind in ("grid", "form"):
                        resp = client.get(f"/tables/{table.name}/{kind}", headers=headers)
                        if resp.status_code == 200:
                            for name in denied:
                                assert name not in resp.text
                            descriptor_scans += 1

                    resp = client.get(f"/tables/{table.name}/rows", headers=headers)
                    if resp.status_code == 200:
                        for name in denied:
                            assert name not in resp.text

                    # a write naming a hidden write-denied field and one naming
                    # a field that never existed must return byte-identical
                    # bodies; insert-granted hidden fields are blind-writable
                    # by design and are exempt
                    unwritable = [
                        name
                        for name in denied
                        if not matrix.granted(Action.INSERT, table.name, name)
                    ]
                    if unwritable:
                        hidden = client.post(
                            f"/tables/{table.name}/rows",
                            headers=headers,
                            json={unwritable[0]: 1},
                        )
                        ghost = client.post(
                            f"/tables/{table.name}/rows",
                            headers=headers,
                            json={"zzzzzzz": 1},
                        )
                        assert hidden.status_code == ghost.status_code
                        assert hidden.content == ghost.content
                        if hidden.status_code == 400:
                            assert hidden.content == b'{"error":"unknown_field"}\n'
                            write_probe_pairs += 1

        assert descriptor_scans > 80
        assert write_probe_pairs > 100


# =============================================================================
# Order independence and idempotence
# =============================================================================


def test_order_and_duplication_invariance(crm_store):
    with _report("200 permission permutations and duplications leave output bytes unchanged"):
        state = crm_store.snapshot()
        usernames = ("alice", "bob", "root")

        def outputs(perms):
            result = {}
            for username in usernames:
                matrix = policy.effective_matrix(
                    username, state.users, state.assignments, perms,
                    state.schema, state.version,
                )
                result[username, "matrix"] = matrix
                for table in state.schema.tables:
                    for kind, build in (
                        ("grid", build_grid_descriptor),
                        ("form", build_form_descriptor),
                    ):
                        try:
                            desc = build(matrix, table.name, state.schema, state.catalog)
                        except (UnknownObject, PolicySchemaConflict) as exc:
                            result[username, table.name, kind] = type(exc).__name__
                        else:
                            result[username, table.name, kind] = serialize_descriptor(desc)
            return result

        baseline = outputs(state.permissions)
        rng = random.Random(20_200)
        for _ in range(200):
            variant = list(state.permissions)
            rng.shuffle(variant)
            for perm in rng.sample(variant, rng.randint(0, 3)):
                variant.insert(rng.randrange(len(variant) + 1), perm)
            assert outputs(variant) == baseline


# =============================================================================
# Freshness through the admin surface
# =============================================================================

_FLIP_SEED = """
[users]
adm admpw
u upw
[roles]
R
__admin__
[assignments]
adm -> __admin__
u -> R
[permissions]
R, +, Select, T.*
[schema]
table T (k:integer:pk, f1:text:null, f2:integer:null, f3:boolean:null, f4:date:null, f5:decimal:null)
"""


def test_policy_flip_freshness():
    with _report("50 admin permission flips each change the grid and raise policyVersion"):
        store = Store.from_seed_text(_FLIP_SEED)
        client = TestClient(create_app(store))

        def login(username, password):
            resp = client.post("/login", json={"username": username, "password": password})
            assert resp.status_code == 200
            return {"Authorization": "Bearer " + resp.json()["token"]}

        admin = login("adm", "admpw")
        user = login("u", "upw")

        def grid():
            resp = client.get("/tables/T/grid", headers=user)
            assert resp.status_code == 200
            data = json.loads(resp.content)
            return {c["field"] for c in data["columns"]}, data["policyVersion"]

        rng = random.Random(505)
        denied: set[str] = set()
        for _ in range(50):
            field = rng.choice(("f1", "f2", "f3", "f4", "f5"))
            perm = {"role": "R", "sign": "-", "action": "Select", "table": "T", "field": field}
            _, version_before = grid()
            if field in denied:
                resp = client.request("DELETE", "/admin/permissions", headers=admin, json=perm)
                denied.discard(field)
            else:
                resp = client.post("/admin/permissions", headers=admin, json=perm)
                denied.add(field)
            assert resp.status_code == 200
            fields, version_after = grid()
            assert version_after > version_before
            assert fields == {"k", "f1", "f2", "f3", "f4", "f5"} - denied


# =============================================================================
# Seed round-trip
# =============================================================================


def test_seed_round_trip_random_states():
    with _report("20 random stores round-trip through the seed format unchanged"):
        rng = random.Random(808_808)
        for _ in range(20):
            state = random_state(rng)
            text = dump_seed(state)
            reloaded = parse_seed(text)
            assert reloaded == state
            assert dump_seed(reloaded) == text
