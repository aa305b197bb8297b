"""Versioned binary container used for checkpoints and corpora.

Layout::

    ADVAUG-<KIND> v<version>\\n
    <one-line JSON header, sorted keys>\\n
    <payload: raw little-endian arrays, concatenated in name order>

The header lists each array's name, dtype, shape, byte offset and length,
a free-form ``meta`` object, and the SHA-256 of the payload. Output is a
pure function of the inputs (no timestamps), and files are written to a
temporary name and renamed, so a failed write never leaves a partial file.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

_DTYPES = {"f8": np.dtype("<f8"), "i8": np.dtype("<i8")}


class FormatError(ValueError):
    """File is not a valid container of the expected kind."""


def _dtype_tag(a: np.ndarray) -> str:
    if a.dtype == np.float64:
        return "f8"
    if np.issubdtype(a.dtype, np.integer):
        return "i8"
    raise TypeError(f"unsupported dtype {a.dtype}")


def encode(kind: str, version: int, meta: dict, arrays: dict[str, np.ndarray]) -> bytes:
    entries, chunks, offset = [], [], 0
    for name, a in sorted(arrays.items()):
        tag = _dtype_tag(np.asarray(a))
        raw = np.ascontiguousarray(a, dtype=_DTYPES[tag]).tobytes()
        entries.append({"name": name, "dtype": tag, "shape": list(np.shape(a)), "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {"arrays": entries, "meta": meta, "sha256": hashlib.sha256(payload).hexdigest()}
    head = json.dumps(header, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return f"ADVAUG-{kind} v{version}\n".encode() + head.encode() + b"\n" + payload


def decode(data: bytes, kind: str, version: int) -> tuple[dict, dict[str, np.ndarray]]:
    first, sep, rest = data.partition(b"\n")
    if not sep or first.decode(errors="replace") != f"ADVAUG-{kind} v{version}":
        raise FormatError(f"expected an ADVAUG-{kind} v{version} file")
    head, sep, payload = rest.partition(b"\n")
    if not sep:
        raise FormatError("truncated header")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt header: {exc}") from None
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise FormatError("payload checksum mismatch")
    arrays = {}
    for e in header["arrays"]:
        dt = _DTYPES.get(e["dtype"])
        if dt is None:
            raise FormatError(f"unknown dtype tag {e['dtype']!r}")
        raw = payload[e["offset"] : e["offset"] + e["nbytes"]]
        count = int(np.prod(e["shape"], dtype=np.int64))
        if len(raw) != e["nbytes"] or e["nbytes"] != count * dt.itemsize:
            raise FormatError(f"array {e['name']!r} has the wrong size")
        arrays[e["name"]] = np.frombuffer(raw, dtype=dt).reshape(e["shape"]).astype(dt.newbyteorder("="))
    return header["meta"], arrays


def write_atomic(path, data: bytes) -> Path:
    """Write bytes via a temp file in the target directory; the directory must exist."""
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def save(path, kind: str, version: int, meta: dict, arrays: dict[str, np.ndarray]) -> Path:
    return write_atomic(path, encode(kind, version, meta, arrays))


def load(path, kind: str, version: int) -> tuple[dict, dict[str, np.ndarray]]:
    return decode(Path(path).read_bytes(), kind, version)
