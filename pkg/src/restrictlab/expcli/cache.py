"""Content-addressed result cache.

Entries are JSON files named by the config hash.  Writes go to a temporary
file in the same directory and are renamed into place, so a reader never sees
a half-written entry.  Anything unreadable is treated as a miss.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
import warnings
from pathlib import Path
from typing import Optional

log = logging.getLogger(__name__)

DEFAULT_CACHE_DIR = Path(os.environ.get("RESTRICTLAB_CACHE",
                                        Path.home() / ".cache" / "restrictlab"))


class ResultCache:
    def __init__(self, root: Optional[str | Path] = None):
        self.root = Path(root) if root is not None else DEFAULT_CACHE_DIR

    def path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> Optional[dict]:
        p = self.path(key)
        try:
            if not p.exists():
                return None
            data = json.loads(p.read_text())
        except PermissionError as exc:
            warnings.warn(f"cache unreadable ({exc}); recomputing", RuntimeWarning,
                          stacklevel=2)
            return None
        except (OSError, ValueError, UnicodeDecodeError):
            log.info("ignoring corrupt cache entry %s", p)
            return None
        if not isinstance(data, dict) or data.get("config_hash") != key:
            log.info("ignoring mismatched cache entry %s", p)
            return None
        return data

    def put(self, key: str, record: dict) -> bool:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{key}.", suffix=".tmp")
            try:
                with os.fdopen(fd, "w") as fh:
                    json.dump(record, fh, sort_keys=True)
                os.replace(tmp, self.path(key))
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        except OSError as exc:
            warnings.warn(f"cache not writable ({exc}); result not stored", RuntimeWarning,
                          stacklevel=2)
            return False
        return True
