"""Content-addressed JSON cache on disk."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path
from typing import Any


def request_hash(request: Any) -> str:
    blob = json.dumps(request, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class DiskCache:
    """One JSON file per request hash. Reads are lock-free; writes are serialized
    and land atomically via rename."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, request: Any) -> Any | None:
        path = self._path(request_hash(request))
        try:
            with open(path, encoding="utf-8") as fh:
                value = json.load(fh)["value"]
        except (FileNotFoundError, json.JSONDecodeError, KeyError):
            self.misses += 1
            return None
        self.hits += 1
        return value

    def put(self, request: Any, value: Any) -> None:
        path = self._path(request_hash(request))
        payload = json.dumps({"request": request, "value": value}, ensure_ascii=False)
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)

    def __len__(self) -> int:
        return sum(1 for _ in self.root.glob("*.json"))
