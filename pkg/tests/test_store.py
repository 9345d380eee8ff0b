"""
Store behavior tests.

Tests prove:
- snapshots are immutable and unaffected by later mutations
- policy mutations bump the version by exactly one; no-ops leave it unchanged
- optimistic version checks raise ConflictError on mismatch
- failed mutations leave the prior state fully intact (atomicity)
- row operations complete defaults, enforce keys and types, and never touch
  the policy version
- mutations persist through the store file and reopen identically
- the writer lock file blocks a second opener while the holder lives
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from formgate.errors import (
    ConflictError,
    RowNotFound,
    StoreLocked,
    UnknownObject,
    ValidationError,
)
from formgate.model import Action, Permission, Scope, Sign
from formgate.store import Store, acquire_lock, check_not_locked, lock_path, release_lock

SEEDS = Path(__file__).resolve().parent.parent / "seeds"


@pytest.fixture
def store() -> Store:
    return Store.from_seed_text((SEEDS / "crm.seed").read_text())


@pytest.fixture
def disk_store(tmp_path) -> Store:
    path = str(tmp_path / "crm.store")
    store = Store.from_seed_text((SEEDS / "crm.seed").read_text(), path=path)
    store._persist()
    return store


NEW_PERM = Permission("Clerk", Sign.GRANT, Action.SELECT, Scope("Customers", "City"))


# =============================================================================
# Versioning
# =============================================================================


def test_add_permission_bumps_version(store):
    v0 = store.version
    assert store.add_permission(NEW_PERM) == v0 + 1


def test_duplicate_add_is_noop(store):
    store.add_permission(NEW_PERM)
    v1 = store.version
    assert store.add_permission(NEW_PERM) == v1
    assert store.version == v1


def test_remove_absent_is_noop(store):
    v0 = store.version
    assert store.remove_permission(NEW_PERM) == v0


def test_remove_present_bumps(store):
    store.add_permission(NEW_PERM)
    v1 = store.version
    assert store.remove_permission(NEW_PERM) == v1 + 1
    assert NEW_PERM not in store.snapshot().permissions


def test_version_counts_every_effective_mutation(store):
    v0 = store.version
    store.add_permission(NEW_PERM)
    store.add_assignment("bob", "Staff")
    store.remove_assignment("bob", "Staff")
    store.remove_permission(NEW_PERM)
    assert store.version == v0 + 4


def test_conflict_on_stale_expected_version(store):
    v0 = store.version
    store.add_permission(NEW_PERM, expected_version=v0)
    with pytest.raises(ConflictError):
        store.remove_permission(NEW_PERM, expected_version=v0)


def test_matrix_stamped_with_version(store):
    assert store.effective_matrix("alice").policy_version == store.version
    store.add_permission(NEW_PERM)
    assert store.effective_matrix("alice").policy_version == store.version


def test_mutation_flips_decision(store):
    assert store.effective_matrix("alice").granted(Action.SELECT, "Customers", "City")
    store.add_permission(Permission("Staff", Sign.DENY, Action.SELECT, Scope("Customers", "City")))
    assert not store.effective_matrix("alice").granted(Action.SELECT, "Customers", "City")


# =============================================================================
# Snapshot isolation and atomicity
# =============================================================================


def test_snapshot_unaffected_by_later_mutation(store):
    before = store.snapshot()
    store.add_permission(NEW_PERM)
    assert NEW_PERM not in before.permissions
    assert NEW_PERM in store.snapshot().permissions


def test_failed_mutation_leaves_state(store):
    before = store.snapshot()
    with pytest.raises(ValidationError):
        store.add_assignment("ghost", "Staff")
    with pytest.raises(ValidationError):
        store.add_permission(Permission("Nope", Sign.GRANT, Action.SELECT, Scope("Customers")))
    assert store.snapshot() == before


# =============================================================================
# Row operations
# =============================================================================


def test_insert_completes_defaults_and_nulls(store):
    key = store.insert_row("Orders", {"OrderID": 4, "OrderDate": "2024-08-01"})
    assert key == (4,)
    row = next(r for r in store.fetch_rows_raw("Orders") if r["OrderID"] == 4)
    assert row["Fulfilled"] is False
    assert row["CID"] is None
    assert row["Payment"] is None


def test_insert_missing_required_rejected(store):
    with pytest.raises(ValidationError):
        store.insert_row("Orders", {"OrderID": 5})


def test_insert_duplicate_key_rejected(store):
    with pytest.raises(ValidationError):
        store.insert_row("Orders", {"OrderID": 1, "OrderDate": "2024-08-01"})


def test_insert_type_checked(store):
    with pytest.raises(ValidationError):
        store.insert_row("Orders", {"OrderID": 6, "OrderDate": "not-a-date"})


def test_update_row(store):
    assert store.update_row("Orders", (2,), {"Payment": 99.5}) == 1
    row = next(r for r in store.fetch_rows_raw("Orders") if r["OrderID"] == 2)
    assert row["Payment"] == 99.5


def test_update_missing_row(store):
    with pytest.raises(RowNotFound):
        store.update_row("Orders", (404,), {"Payment": 1.0})


def test_delete_row(store):
    assert store.delete_row("Orders", (3,)) == 1
    assert all(r["OrderID"] != 3 for r in store.fetch_rows_raw("Orders"))
    with pytest.raises(RowNotFound):
        store.delete_row("Orders", (3,))


def test_row_mutations_do_not_bump_version(store):
    v0 = store.version
    store.insert_row("Orders", {"OrderID": 8, "OrderDate": "2024-08-02"})
    store.update_row("Orders", (8,), {"Payment": 3.0})
    store.delete_row("Orders", (8,))
    assert store.version == v0


def test_fetch_rows_raw_pagination(store):
    assert [r["OrderID"] for r in store.fetch_rows_raw("Orders")] == [1, 2, 3]
    assert [r["OrderID"] for r in store.fetch_rows_raw("Orders", page=0, page_size=2)] == [1, 2]
    assert [r["OrderID"] for r in store.fetch_rows_raw("Orders", page=1, page_size=2)] == [3]
    assert store.fetch_rows_raw("Orders", page=9, page_size=2) == []
    with pytest.raises(UnknownObject):
        store.fetch_rows_raw("Nope")


# =============================================================================
# Persistence and locking
# =============================================================================


def test_mutations_persist_and_reopen(disk_store):
    disk_store.add_permission(NEW_PERM)
    disk_store.insert_row("Orders", {"OrderID": 9, "OrderDate": "2024-08-03"})
    reopened = Store.open(disk_store._path)
    assert reopened.snapshot() == disk_store.snapshot()
    assert reopened.version == disk_store.version


def test_lock_blocks_while_holder_alive(tmp_path):
    path = str(tmp_path / "x.store")
    Path(path).write_text("[schema]\ntable T (a:integer:pk)\n")
    # simulate another live process holding the lock; pid 1 always exists
    Path(lock_path(path)).write_text("1")
    with pytest.raises(StoreLocked):
        check_not_locked(path)
    with pytest.raises(StoreLocked):
        acquire_lock(path)


def test_stale_lock_reaped(tmp_path):
    path = str(tmp_path / "x.store")
    Path(path).write_text("[schema]\ntable T (a:integer:pk)\n")
    Path(lock_path(path)).write_text("999999999")
    check_not_locked(path)
    assert acquire_lock(path) == lock_path(path)
    assert Path(lock_path(path)).read_text() == str(os.getpid())
    release_lock(path)
    assert not Path(lock_path(path)).exists()


def test_own_pid_does_not_block_check(tmp_path):
    path = str(tmp_path / "x.store")
    Path(path).write_text("[schema]\ntable T (a:integer:pk)\n")
    acquire_lock(path)
    check_not_locked(path)
    release_lock(path)
