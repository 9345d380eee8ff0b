#!/usr/bin/env python3
"""Record wire-level fixtures for the console test suite.

Drives the real HTTP service over a seeded store and writes every
request/response pair, in order, to tests/fixtures.json. The TypeScript
tests replay these cassettes through a fake fetch, so they exercise the
client against genuine service bytes without needing a live server.

Run from the repository root:

    python3 frontend/tools/capture-fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fastapi.testclient import TestClient

from formgate import Store, create_app, parse_seed

ROOT = Path(__file__).resolve().parent.parent
SEED = ROOT.parent / "seeds" / "crm.seed"
OUT = ROOT / "tests" / "fixtures.json"


class Recorder:
    def __init__(self) -> None:
        state = parse_seed(SEED.read_text(encoding="utf-8"))
        self.client = TestClient(create_app(Store(state)))
        self.entries: list[dict[str, Any]] = []

    def call(
        self,
        method: str,
        url: str,
        token: str | None = None,
        body: Any = None,
    ) -> Any:
        headers = {}
        if token is not None:
            headers["Authorization"] = f"Bearer {token}"
        kwargs: dict[str, Any] = {"headers": headers}
        if body is not None:
            kwargs["json"] = body
        resp = self.client.request(method, url, **kwargs)
        self.entries.append(
            {
                "method": method,
                "url": url,
                "authorization": headers.get("Authorization"),
                "requestBody": body,
                "status": resp.status_code,
                "responseText": resp.text,
            }
        )
        return json.loads(resp.text) if resp.text else None

    def login(self, username: str, password: str) -> str:
        data = self.call("POST", "/login", body={"username": username, "password": password})
        return data["token"]


def enduser_cassette() -> list[dict[str, Any]]:
    """Alice's data surface: descriptors, rows, and the full edit lifecycle."""
    rec = Recorder()
    token = rec.login("alice", "wonderl4nd")
    rec.call("GET", "/tables", token)
    rec.call("GET", "/tables/Customers/grid", token)
    # alice holds no Insert grant on Customers, so the form does not exist for her
    rec.call("GET", "/tables/Customers/form", token)
    rec.call("GET", "/tables/Customers/rows?page=0", token)
    # Orders: Payment is her only editable column and rows may be deleted
    rec.call("GET", "/tables/Orders/grid", token)
    rec.call("GET", "/tables/Orders/rows?page=0", token)
    rec.call("PATCH", "/tables/Orders/rows/1", token, body={"Payment": 21.5})
    rec.call("GET", "/tables/Orders/rows?page=0", token)
    rec.call("DELETE", "/tables/Orders/rows/3", token)
    rec.call("GET", "/tables/Orders/rows?page=0", token)
    rec.call("GET", "/tables/Orders/form", token)
    rec.call(
        "POST",
        "/tables/Orders/rows",
        token,
        body={"OrderID": 9, "OrderDate": "2024-08-20", "Payment": 3.5},
    )
    rec.call("GET", "/tables/Orders/rows?page=0", token)
    return rec.entries


def lookup_cassette() -> list[dict[str, Any]]:
    """root's Orders form carries the CID lookup; options come from the rows endpoint."""
    rec = Recorder()
    token = rec.login("root", "letmein")
    rec.call("GET", "/tables/Orders/form", token)
    rec.call("GET", "/tables/Customers/rows?page=0", token)
    rec.call("GET", "/tables/Customers/rows?page=1", token)
    return rec.entries


def admin_cassette() -> list[dict[str, Any]]:
    """Permission toggle with live preview: deny wins, no-op repeat, invalid shape, revert."""
    rec = Recorder()
    token = rec.login("root", "letmein")
    deny_city = {
        "role": "Staff",
        "sign": "-",
        "action": "Select",
        "table": "Customers",
        "field": "City",
    }
    rec.call("GET", "/admin/preview/alice/tables/Customers/grid", token)
    rec.call("POST", "/admin/permissions", token, body=deny_city)
    rec.call("GET", "/admin/preview/alice/tables/Customers/grid", token)
    # repeating the same mutation is a no-op: version and preview stay put
    rec.call("POST", "/admin/permissions", token, body=deny_city)
    rec.call("GET", "/admin/preview/alice/tables/Customers/grid", token)
    # Delete is table-scoped only; a field-scoped Delete is rejected outright
    rec.call(
        "POST",
        "/admin/permissions",
        token,
        body={"role": "Staff", "sign": "-", "action": "Delete", "table": "Customers", "field": "City"},
    )
    rec.call("DELETE", "/admin/permissions", token, body=deny_city)
    rec.call("GET", "/admin/preview/alice/tables/Customers/grid", token)
    return rec.entries


def main() -> None:
    fixtures = {
        "note": "Recorded request/response pairs from the HTTP service over seeds/crm.seed. "
        "Regenerate with: python3 frontend/tools/capture-fixtures.py",
        "cassettes": {
            "enduser": enduser_cassette(),
            "lookup": lookup_cassette(),
            "admin": admin_cassette(),
        },
    }
    OUT.write_text(json.dumps(fixtures, indent=2) + "\n", encoding="utf-8")
    counts = {name: len(c) for name, c in fixtures["cassettes"].items()}
    print(f"wrote {OUT} ({counts})")


if __name__ == "__main__":
    main()
