"""Command line entry points.

Commands that rewrite the store file (`seed`) refuse to run while a live
`serve` process holds the store lock. Read-only commands work against the
same file at any time: the service replaces it atomically, so a reader
always sees one complete version.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .descriptors import build_form_descriptor, build_grid_descriptor, serialize_descriptor
from .errors import FormgateError, UnknownObject
from .gate import table_addressable
from .model import FIELD_ACTIONS, Action
from .policy import explain_decision
from .seed import parse_seed
from .store import Store, acquire_lock, check_not_locked, release_lock

DEFAULT_ADDR = "127.0.0.1:8000"


def _store_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--store",
        default=os.environ.get("FORMGATE_STORE"),
        help="store file path (or FORMGATE_STORE)",
    )


def _require_store(parser: argparse.ArgumentParser, args: argparse.Namespace) -> str:
    if not args.store:
        parser.error("--store is required (or set FORMGATE_STORE)")
    return args.store


def _split_addr(parser: argparse.ArgumentParser, addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        parser.error(f"bad --addr {addr!r}, expected host:port")
    return host, int(port)


def _cmd_seed(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    path = _require_store(parser, args)
    with open(args.file, encoding="utf-8") as fh:
        state = parse_seed(fh.read())
    check_not_locked(path)
    store = Store(state, path=path)
    store.save()
    print(f"wrote {path} at version {store.version}")
    return 0


def _cmd_serve(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    path = _require_store(parser, args)
    addr = args.addr or os.environ.get("FORMGATE_ADDR") or DEFAULT_ADDR
    host, port = _split_addr(parser, addr)
    store = Store.open(path)
    acquire_lock(path)
    try:
        uvicorn.run(create_app(store), host=host, port=port, log_level="info")
    finally:
        release_lock(path)
    return 0


def _cmd_matrix(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    store = Store.open(_require_store(parser, args))
    matrix = store.effective_matrix(args.user)
    for tdef in store.snapshot().schema.tables:
        print(f"{tdef.name} * Delete {matrix.delete_decision(tdef.name).value}")
        for f in tdef.fields:
            for action in FIELD_ACTIONS:
                decision = matrix.decision(action, tdef.name, f.name)
                print(f"{tdef.name} {f.name} {action.value} {decision.value}")
    return 0


def _cmd_explain(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    action = Action.parse(args.action)
    if action is Action.DELETE and args.field is not None:
        parser.error("Delete is table-scoped; drop --field")
    if action is not Action.DELETE and args.field is None:
        parser.error(f"--field is required for {action.value}")
    store = Store.open(_require_store(parser, args))
    state = store.snapshot()
    lines = explain_decision(
        args.user,
        action,
        args.table,
        args.field,
        state.users,
        state.assignments,
        state.permissions,
        state.schema,
    )
    for line in lines:
        print(line)
    return 0


def _cmd_export(parser: argparse.ArgumentParser, args: argparse.Namespace) -> int:
    store = Store.open(_require_store(parser, args))
    state = store.snapshot()
    matrix = store.effective_matrix(args.user)
    if not table_addressable(matrix, state.schema, args.table):
        raise UnknownObject(f"unknown table {args.table!r}")
    build = build_grid_descriptor if args.kind == "grid" else build_form_descriptor
    descriptor = build(matrix, args.table, state.schema, state.catalog)
    sys.stdout.write(serialize_descriptor(descriptor))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formgate")
    sub = parser.add_subparsers(dest="command", required=True)

    seed = sub.add_parser("seed", help="parse a seed document and write the store file")
    seed.add_argument("--file", required=True, help="seed document to load")
    _store_argument(seed)
    seed.set_defaults(handler=_cmd_seed)

    serve = sub.add_parser("serve", help="run the HTTP service on the store")
    _store_argument(serve)
    serve.add_argument("--addr", default=None, help="host:port (or FORMGATE_ADDR)")
    serve.set_defaults(handler=_cmd_serve)

    matrix = sub.add_parser("matrix", help="print one user's effective decisions")
    _store_argument(matrix)
    matrix.add_argument("--user", required=True)
    matrix.set_defaults(handler=_cmd_matrix)

    explain = sub.add_parser("explain", help="trace how one decision was resolved")
    _store_argument(explain)
    explain.add_argument("--user", required=True)
    explain.add_argument("--table", required=True)
    explain.add_argument("--field", default=None)
    explain.add_argument("--action", required=True, choices=[a.value for a in Action])
    explain.set_defaults(handler=_cmd_explain)

    export = sub.add_parser("export-descriptor", help="print a descriptor as wire JSON")
    _store_argument(export)
    export.add_argument("--user", required=True)
    export.add_argument("--table", required=True)
    export.add_argument("--kind", required=True, choices=("grid", "form"))
    export.set_defaults(handler=_cmd_export)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(parser, args)
    except (FormgateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
