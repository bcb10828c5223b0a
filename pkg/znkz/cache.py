"""
Deterministic cache for per-loop period moments

Keys are sha256 digests of the inputs joined with '|'. The in-process table is
always on and keeps the MEMORY_CACHE_LIMIT most recently used vectors; the JSON
files under CACHE_DIR are written only when enabled.
"""

import hashlib
import json
import os
import shutil
import threading
from collections import OrderedDict
from typing import Any, List, Optional

from mpmath import mp

from . import config

_memory: "OrderedDict[str, List[Any]]" = OrderedDict()
_lock = threading.Lock()
_disk_enabled = config.USE_DISK_CACHE


def enable_disk_cache(enabled: bool = True) -> None:
    global _disk_enabled
    _disk_enabled = enabled


def get_cache_key(*parts: Any) -> str:
    """Generate deterministic cache key based on inputs"""
    combined = "|".join(str(p) for p in parts)
    return hashlib.sha256(combined.encode()).hexdigest()


def _encode(values: List[Any]) -> List[List[str]]:
    return [[mp.nstr(v.real, mp.dps + 5), mp.nstr(v.imag, mp.dps + 5)] for v in values]


def _decode(data: List[List[str]]) -> List[Any]:
    return [mp.mpc(mp.mpf(re), mp.mpf(im)) for re, im in data]


def _remember(cache_key: str, values: List[Any]) -> None:
    """Insert under _lock, dropping the least recently used entries beyond the limit"""
    _memory[cache_key] = values
    _memory.move_to_end(cache_key)
    while len(_memory) > max(config.MEMORY_CACHE_LIMIT, 0):
        _memory.popitem(last=False)


def get_cached_moments(cache_key: str) -> Optional[List[Any]]:
    """Get cached moment vector if it exists"""
    with _lock:
        if cache_key in _memory:
            _memory.move_to_end(cache_key)
            return _memory[cache_key]
    if not _disk_enabled:
        return None
    cache_file = os.path.join(config.CACHE_DIR, f"{cache_key}.json")
    if os.path.exists(cache_file):
        with open(cache_file, 'r') as f:
            values = _decode(json.load(f)['moments'])
        with _lock:
            _remember(cache_key, values)
        return values
    return None


def save_moments(cache_key: str, values: List[Any]) -> None:
    """Save moment vector to cache"""
    with _lock:
        _remember(cache_key, list(values))
    if not _disk_enabled:
        return
    os.makedirs(config.CACHE_DIR, exist_ok=True)
    cache_file = os.path.join(config.CACHE_DIR, f"{cache_key}.json")
    with open(cache_file, 'w') as f:
        json.dump({'moments': _encode(values)}, f)


def cache_size() -> int:
    with _lock:
        return len(_memory)


def clear_cache(disk: bool = False) -> None:
    with _lock:
        _memory.clear()
    if disk and os.path.exists(config.CACHE_DIR):
        shutil.rmtree(config.CACHE_DIR)
