"""On-disk cache of assembled kernel tables.

Files are ``kernel-<hash>.npz`` where the hash covers every input that
changes the table.  Each file stores a sha256 of its arrays; a mismatch
(or an unreadable file) triggers a rebuild.
"""
import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from .collision import CollisionKernelTable, CrossSection, assemble_kernel_table
from .velocity import VelocityGrid

log = logging.getLogger(__name__)

CACHE_FORMAT = 2
_ARRAYS = ("nu", "kmat", "kop")


def cache_dir(override=None):
    path = Path(override or os.environ.get("KF_CACHE_DIR") or Path.home() / ".cache" / "kinetic-fredholm")
    path.mkdir(parents=True, exist_ok=True)
    return path


def kernel_key(cs, grid, options=None):
    payload = {"format": CACHE_FORMAT, "b0": float(cs.b0), "gamma": float(cs.gamma),
               "grid": grid.params(), "options": options or {}}
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:20], payload


def _checksum(arrays):
    h = hashlib.sha256()
    for name in _ARRAYS:
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_table(path, table, key, payload):
    arrays = {k: getattr(table, k) for k in _ARRAYS}
    meta = json.dumps({"key": key, "payload": payload, "metadata": table.metadata}, default=str)
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, checksum=np.array(_checksum(arrays)), meta=np.array(meta), **arrays)
    os.replace(tmp, path)


def load_table(path, key, cs, grid):
    """Return the cached table, or None (with a warning) if it is stale or damaged."""
    try:
        with np.load(path, allow_pickle=False) as data:
            arrays = {k: data[k] for k in _ARRAYS}
            stored_sum = str(data["checksum"])
            meta = json.loads(str(data["meta"]))
    except Exception as exc:  # unreadable or truncated file
        log.warning("kernel cache %s unreadable (%s); rebuilding", path, exc)
        return None
    if meta.get("key") != key:
        log.warning("kernel cache %s has hash %s, expected %s; rebuilding", path, meta.get("key"), key)
        return None
    if _checksum(arrays) != stored_sum:
        log.warning("kernel cache %s failed its checksum; rebuilding", path)
        return None
    md = meta["metadata"]
    md["loaded_from_cache"] = str(path)
    return CollisionKernelTable(grid, cs, arrays["nu"], arrays["kmat"], arrays["kop"], md)


def cache_kernel(cs, grid, directory=None, certify=True, **options):
    """Assemble (or load) the kernel table for (cs, grid).

    Returns (table, info) where info records the cache path and whether the
    table was loaded or rebuilt.
    """
    key, payload = kernel_key(cs, grid, options)
    path = cache_dir(directory) / f"kernel-{key}.npz"
    if path.exists():
        table = load_table(path, key, cs, grid)
        if table is not None:
            return table, {"path": str(path), "hit": True, "key": key}
    table = assemble_kernel_table(cs, grid, certify=certify, **options)
    save_table(path, table, key, payload)
    return table, {"path": str(path), "hit": False, "key": key}


def table_from_config(cfg, directory=None, certify=True):
    cs = CrossSection(**cfg["cross_section"])
    grid = VelocityGrid(**cfg["velocity"])
    return cache_kernel(cs, grid, directory, certify=certify, **cfg.get("kernel", {}))
