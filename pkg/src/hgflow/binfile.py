"""Versioned binary container: JSON header + little-endian float64 payload.

Layout: 4-byte magic, uint32 header length, UTF-8 JSON header, raw
payload. The header carries dtype, shape, a payload SHA-256, and a
caller-supplied ``meta`` dict. Writes are atomic (temp file + rename).
"""

import hashlib
import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"HGFB"
CONTAINER_VERSION = 1


class BlobError(Exception):
    """Malformed, truncated, or corrupted container file."""


def write_array(path, array, kind, meta):
    array = np.ascontiguousarray(array, dtype="<f8")
    payload = array.tobytes()
    header = {
        "container_version": CONTAINER_VERSION,
        "kind": kind,
        "dtype": "<f8",
        "shape": list(array.shape),
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
        "meta": meta,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_array(path, kind=None):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise BlobError(f"{path}: bad magic {magic!r}")
        raw_len = fh.read(4)
        if len(raw_len) != 4:
            raise BlobError(f"{path}: truncated header length")
        (blob_len,) = struct.unpack("<I", raw_len)
        blob = fh.read(blob_len)
        if len(blob) != blob_len:
            raise BlobError(f"{path}: truncated header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BlobError(f"{path}: unreadable header: {exc}") from exc
        if header.get("container_version") != CONTAINER_VERSION:
            raise BlobError(f"{path}: unsupported container version")
        if kind is not None and header.get("kind") != kind:
            raise BlobError(
                f"{path}: expected kind {kind!r}, found {header.get('kind')!r}"
            )
        shape = tuple(header["shape"])
        expected = int(np.prod(shape)) * 8 if shape else 8
        payload = fh.read(expected + 1)
        if len(payload) < expected:
            raise BlobError(f"{path}: truncated payload")
        if len(payload) > expected:
            raise BlobError(f"{path}: trailing bytes after payload")
        payload = payload[:expected]
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise BlobError(f"{path}: payload checksum mismatch")
    array = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    return array, header["meta"]
