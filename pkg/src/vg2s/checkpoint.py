"""Named-parameter collections and the binary checkpoint format.

Layout: 8-byte magic "VG2SCKPT", 8-byte little-endian manifest length, the
UTF-8 JSON manifest [{name, shape, byte_offset}], then one little-endian
float64 blob holding all parameters back to back.  Round-trips bit-exactly.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .autodiff import Parameter

MAGIC = b"VG2SCKPT"


class ParamStore:
    """Ordered mapping of dotted names (e.g. "encoder.embed.w") to Parameters."""

    def __init__(self):
        self._params: dict[str, Parameter] = {}

    def add(self, name: str, data) -> Parameter:
        if name in self._params:
            raise KeyError(f"duplicate parameter name {name!r}")
        p = Parameter(np.asarray(data, dtype=np.float64))
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def values(self) -> list[Parameter]:
        return list(self._params.values())

    def section(self, prefix: str) -> list[Parameter]:
        return [p for name, p in self._params.items() if name.startswith(prefix)]

    def section_bytes(self, prefix: str) -> bytes:
        """Concatenated little-endian bytes of a section, for freeze checks."""
        chunks = [
            np.ascontiguousarray(p.data, dtype="<f8").tobytes()
            for name, p in self._params.items()
            if name.startswith(prefix)
        ]
        return b"".join(chunks)

    def update(self, other: "ParamStore", prefix: str = "") -> None:
        """Copy values in from another store for all names under `prefix`."""
        for name, p in other._params.items():
            if name.startswith(prefix):
                if name not in self._params:
                    raise KeyError(f"unknown parameter {name!r}")
                if self._params[name].data.shape != p.data.shape:
                    raise ValueError(f"shape mismatch for {name!r}")
                self._params[name].data[...] = p.data


def save_checkpoint(store: ParamStore, path) -> None:
    manifest = []
    blob = bytearray()
    for name in store.names():
        data = np.ascontiguousarray(store[name].data, dtype="<f8")
        manifest.append({
            "name": name,
            "shape": list(data.shape),
            "byte_offset": len(blob),
        })
        blob.extend(data.tobytes())
    header = json.dumps(manifest, separators=(",", ":"), sort_keys=False).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(bytes(blob))


def load_checkpoint(path) -> ParamStore:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    manifest = json.loads(raw[16:16 + hlen].decode())
    blob = raw[16 + hlen:]
    store = ParamStore()
    for entry in manifest:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        off = entry["byte_offset"]
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape)
        store.add(entry["name"], arr.astype(np.float64))
    return store
