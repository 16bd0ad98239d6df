"""
Binary tensor container.

Layout (little-endian): magic "DRVT", version u32, dtype code u32, rank u32,
rank × u64 extents, row-major payload. The indexed variant used for
checkpoints appends a UTF-8 JSON index, its byte length as u64, and the
footer magic "DRVI".
"""

from __future__ import annotations

import json
import logging
import os
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

MAGIC = b"DRVT"
INDEX_MAGIC = b"DRVI"
VERSION = 1
MAX_RANK = 8

DTYPE_CODES: Dict[int, np.dtype] = {
    0: np.dtype("<f4"),
    1: np.dtype("<f8"),
    2: np.dtype("u1"),
}
_CODE_FOR_KIND = {"float32": 0, "float64": 1, "uint8": 2}

_PREFIX = struct.Struct("<4sIII")
_TRAILER = struct.Struct("<Q4s")

PathLike = Union[str, Path]


class TensorFormatError(ValueError):
    """A container file is malformed, truncated or of an unknown kind."""


def header_size(rank: int) -> int:
    return _PREFIX.size + 8 * rank


def _storage_code(data: np.ndarray, dtype: str | None) -> int:
    if dtype is None:
        dtype = "uint8" if data.dtype == np.uint8 else "float32"
    if dtype not in _CODE_FOR_KIND:
        raise TensorFormatError(f"unsupported storage dtype {dtype!r}")
    return _CODE_FOR_KIND[dtype]


def encode_tensor(data: np.ndarray, dtype: str | None = None) -> bytes:
    data = np.asarray(data)
    if data.ndim > MAX_RANK:
        raise TensorFormatError(f"rank {data.ndim} exceeds the maximum of {MAX_RANK}")
    code = _storage_code(data, dtype)
    if code == 2 and (data.min(initial=0) < 0 or data.max(initial=0) > 255):
        raise TensorFormatError("uint8 storage needs values in 0..255")
    header = _PREFIX.pack(MAGIC, VERSION, code, data.ndim)
    header += struct.pack(f"<{data.ndim}Q", *data.shape)
    payload = np.ascontiguousarray(data, dtype=DTYPE_CODES[code]).tobytes()
    return header + payload


def decode_header(buf: bytes) -> Tuple[np.dtype, Tuple[int, ...], int]:
    """Return (storage dtype, shape, payload offset)."""
    if len(buf) < _PREFIX.size:
        raise TensorFormatError(f"truncated header: {len(buf)} bytes")
    magic, version, code, rank = _PREFIX.unpack_from(buf, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise TensorFormatError(f"unsupported container version {version}")
    if code not in DTYPE_CODES:
        raise TensorFormatError(f"unknown dtype code {code}")
    if rank > MAX_RANK:
        raise TensorFormatError(f"rank {rank} exceeds the maximum of {MAX_RANK}")
    offset = header_size(rank)
    if len(buf) < offset:
        raise TensorFormatError("truncated extents")
    shape = struct.unpack_from(f"<{rank}Q", buf, _PREFIX.size)
    return DTYPE_CODES[code], tuple(int(s) for s in shape), offset


def decode_tensor(buf: bytes, exact: bool = True) -> Tuple[np.ndarray, int]:
    """Decode one tensor; returns the array and the offset just past its payload."""
    dtype, shape, offset = decode_header(buf)
    nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    end = offset + nbytes
    if len(buf) < end:
        raise TensorFormatError(f"truncated payload: expected {nbytes} bytes, found {len(buf) - offset}")
    if exact and len(buf) != end:
        raise TensorFormatError(f"{len(buf) - end} unexpected trailing bytes")
    data = np.frombuffer(buf, dtype=dtype, count=nbytes // dtype.itemsize, offset=offset)
    return data.reshape(shape).copy(), end


def _write_atomic(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_tensor(path: PathLike, data: np.ndarray, dtype: str | None = None) -> None:
    """Write `data` as float32 (default), float64 or uint8 (default for uint8 arrays)."""
    _write_atomic(Path(path), encode_tensor(data, dtype))


def read_tensor(path: PathLike) -> np.ndarray:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise TensorFormatError(f"cannot read {path}: {e}") from e
    try:
        data, _ = decode_tensor(buf)
    except TensorFormatError as e:
        raise TensorFormatError(f"{path}: {e}") from e
    return data


def write_indexed(path: PathLike, flat: np.ndarray, index: Dict[str, Any]) -> None:
    """Rank-1 float32 payload followed by a JSON index trailer."""
    body = encode_tensor(np.asarray(flat).reshape(-1), "float32")
    trailer = json.dumps(index, sort_keys=True).encode("utf-8")
    _write_atomic(Path(path), body + trailer + _TRAILER.pack(len(trailer), INDEX_MAGIC))


def read_indexed(path: PathLike) -> Tuple[np.ndarray, Dict[str, Any]]:
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise TensorFormatError(f"cannot read {path}: {e}") from e
    if len(buf) < _TRAILER.size:
        raise TensorFormatError(f"{path}: file too short for an indexed container")
    length, footer = _TRAILER.unpack_from(buf, len(buf) - _TRAILER.size)
    if footer != INDEX_MAGIC:
        raise TensorFormatError(f"{path}: missing index footer")
    index_start = len(buf) - _TRAILER.size - length
    if index_start < 0:
        raise TensorFormatError(f"{path}: index length {length} exceeds file size")
    try:
        flat, _ = decode_tensor(buf[:index_start])
    except TensorFormatError as e:
        raise TensorFormatError(f"{path}: {e}") from e
    if flat.ndim != 1:
        raise TensorFormatError(f"{path}: indexed payload must be rank 1, got rank {flat.ndim}")
    try:
        index = json.loads(buf[index_start:index_start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TensorFormatError(f"{path}: unreadable index: {e}") from e
    return flat, index
