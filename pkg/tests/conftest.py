from __future__ import annotations

from pathlib import Path

import pytest

from formgate.store import Store

SEEDS = Path(__file__).resolve().parent.parent / "seeds"


def read_seed(name: str) -> str:
    return (SEEDS / name).read_text()


@pytest.fixture
def crm_store() -> Store:
    return Store.from_seed_text(read_seed("crm.seed"))


@pytest.fixture
def conflicts_store() -> Store:
    return Store.from_seed_text(read_seed("conflicts.seed"))
