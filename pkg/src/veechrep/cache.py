"""Content-addressed on-disk cache for expensive artifacts.

Keys digest the artifact kind, level, all numerical settings, and the
library version, so stale entries from older defaults are never served.
Writes are atomic (temp file + rename); payloads are stored as the exact
bytes that were produced, so cache hits are byte-identical replays.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import __version__


def cache_dir():
    env = os.environ.get("VEECHREP_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "veechrep"


def cache_key(kind, level, settings):
    payload = {
        "kind": kind,
        "level": level,
        "settings": settings,
        "version": __version__,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _path_for(key):
    return cache_dir() / f"{key}.json"


def load(key):
    path = _path_for(key)
    try:
        return path.read_bytes()
    except FileNotFoundError:
        return None


def store(key, data: bytes):
    d = cache_dir()
    d.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, _path_for(key))
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def entries():
    d = cache_dir()
    if not d.is_dir():
        return []
    return sorted(p.name for p in d.glob("*.json"))


def clear():
    n = 0
    for name in entries():
        (cache_dir() / name).unlink()
        n += 1
    return n
