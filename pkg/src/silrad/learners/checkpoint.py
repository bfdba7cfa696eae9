"""Model checkpoints: versioned binary snapshot with a JSON config header.

A checkpoint restored mid-stream continues with predictions identical to
the uninterrupted model (RNG state and detector windows are part of the
snapshot).
"""

from __future__ import annotations

import json
import pickle
import struct

from ..errors import SilradError

_MAGIC = b"SLCK"
_VERSION = 1


def save_checkpoint(model, path) -> None:
    header = {
        "version": _VERSION,
        "class": type(model).__name__,
        "module": type(model).__module__,
    }
    header_bytes = json.dumps(header).encode("utf-8")
    payload = pickle.dumps(model, protocol=pickle.HIGHEST_PROTOCOL)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HI", _VERSION, len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise SilradError(f"not a checkpoint file: bad magic {magic!r}")
        version, header_len = struct.unpack("<HI", fh.read(6))
        if version != _VERSION:
            raise SilradError(f"unsupported checkpoint version {version}")
        json.loads(fh.read(header_len))  # header is advisory; payload is authoritative
        return pickle.load(fh)
