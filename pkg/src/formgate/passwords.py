"""Salted one-way password digests (PBKDF2-HMAC-SHA256)."""

from __future__ import annotations

import hashlib
import hmac
import os
import re

ITERATIONS = 50_000
_SALT_BYTES = 16
_DIGEST_RE = re.compile(r"^pbkdf2\$(\d+)\$([0-9a-f]+)\$([0-9a-f]+)$")


def hash_password(password: str, *, iterations: int = ITERATIONS) -> str:
    salt = os.urandom(_SALT_BYTES)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), salt, iterations)
    return f"pbkdf2${iterations}${salt.hex()}${digest.hex()}"


def is_digest(token: str) -> bool:
    return _DIGEST_RE.match(token) is not None


def verify_password(password: str, stored: str) -> bool:
    m = _DIGEST_RE.match(stored)
    if m is None:
        return False
    iterations, salt_hex, digest_hex = int(m.group(1)), m.group(2), m.group(3)
    candidate = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"), bytes.fromhex(salt_hex), iterations)
    return hmac.compare_digest(candidate.hex(), digest_hex)
