"""On-disk matrix cache with a digest manifest.

Matrix files are text: a header "v1 rows=R cols=C ring=<id>" followed by R
lines of C decimal entries separated by single spaces.  Ramified entries
use the comma form "c0,c1,...".  Every file is listed in manifest.json
with its SHA-256 digest, and any mismatch is fatal.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time

import numpy as np

FORMAT = "v1"


class CacheError(RuntimeError):
    pass


def _atomic_write(path: str, data: bytes):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def format_matrix(A, ring_id: str) -> bytes:
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[None, :]
    rows, cols = A.shape[0], A.shape[1]
    out = [f"{FORMAT} rows={rows} cols={cols} ring={ring_id}"]
    for row in A:
        if A.ndim == 3:
            out.append(" ".join(",".join(str(int(c)) for c in x) for x in row))
        else:
            out.append(" ".join(str(int(x)) for x in row))
    return ("\n".join(out) + "\n").encode("utf-8")


def parse_matrix(data: bytes):
    """(array, ring id); int64 when every entry fits, else Python ints."""
    lines = data.decode("utf-8").splitlines()
    if not lines:
        raise CacheError("empty matrix file")
    head = lines[0].split()
    if head[0] != FORMAT:
        raise CacheError(f"unsupported matrix format {head[0]}")
    kv = dict(h.split("=", 1) for h in head[1:])
    rows, cols, ring = int(kv["rows"]), int(kv["cols"]), kv["ring"]
    body = lines[1:1 + rows]
    if len(body) != rows:
        raise CacheError("truncated matrix file")
    entries = [ln.split(" ") if cols else [] for ln in body]
    if any(len(r) != cols for r in entries):
        raise CacheError("ragged matrix file")
    if rows and cols and "," in entries[0][0]:
        vals = [[[int(c) for c in x.split(",")] for x in r] for r in entries]
    else:
        vals = [[int(x) for x in r] for r in entries]
    big = any(abs(v) >= 1 << 62 for v in _flat(vals))
    arr = np.array(vals, dtype=object if big else np.int64)
    if rows == 0:
        arr = np.zeros((0, cols), dtype=np.int64)
    return arr, ring


def _flat(x):
    for v in x:
        if isinstance(v, list):
            yield from _flat(v)
        else:
            yield v


class CacheStore:
    """Directory of matrix files plus manifest.json."""

    def __init__(self, root: str):
        self.root = root
        self.path = os.path.join(root, "manifest.json")
        self.manifest = {"format": FORMAT, "entries": {}}
        if os.path.exists(self.path):
            with open(self.path, encoding="utf-8") as fh:
                m = json.load(fh)
            if m.get("format") != FORMAT:
                raise CacheError(f"cache format {m.get('format')} incompatible with {FORMAT}")
            self.manifest = m

    def _save(self):
        _atomic_write(self.path, json.dumps(self.manifest, indent=1, sort_keys=True).encode("utf-8"))

    def has(self, name: str) -> bool:
        return name in self.manifest["entries"]

    def params(self, name: str) -> dict:
        return self.manifest["entries"][name]["params"]

    def put_matrix(self, name: str, A, ring_id: str, kind: str, params: dict):
        data = format_matrix(A, ring_id)
        rel = name + ".mat"
        _atomic_write(os.path.join(self.root, rel), data)
        self.manifest["entries"][name] = {"path": rel, "kind": kind, "params": params, "digest": digest(data),
                                          "created": time.strftime("%Y-%m-%dT%H:%M:%S")}
        self._save()

    def _read(self, name: str) -> bytes:
        ent = self.manifest["entries"].get(name)
        if ent is None:
            raise CacheError(f"no cache entry {name}")
        full = os.path.join(self.root, ent["path"])
        try:
            with open(full, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise CacheError(f"cache file for {name} unreadable: {exc}") from None
        if digest(data) != ent["digest"]:
            raise CacheError(f"digest mismatch for {name} ({ent['path']})")
        return data

    def get_matrix(self, name: str):
        return parse_matrix(self._read(name))

    def verify(self) -> list:
        """Names of all entries; raises on the first digest mismatch."""
        names = sorted(self.manifest["entries"])
        for name in names:
            self._read(name)
        return names
