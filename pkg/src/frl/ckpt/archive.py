"""Reader and writer for safetensors-layout weight archives.

Layout: 8-byte little-endian header length N, N bytes of JSON mapping each
tensor name to ``{"dtype", "shape", "data_offsets": [begin, end]}`` (offsets
relative to the end of the header), then the raw little-endian bytes.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

_DTYPES = {
    "F16": np.dtype("<f2"),
    "F32": np.dtype("<f4"),
    "F64": np.dtype("<f8"),
    "BF16": np.dtype("<u2"),
}
_NAMES = {np.dtype("float16"): "F16", np.dtype("float32"): "F32", np.dtype("float64"): "F64"}
MAX_HEADER = 100 * 1024 * 1024


class ArchiveError(ValueError):
    pass


@dataclass(frozen=True)
class TensorEntry:
    name: str
    dtype: str
    shape: tuple
    values: np.ndarray


@dataclass(frozen=True)
class TensorArchive:
    entries: dict
    metadata: dict

    def names(self):
        return sorted(self.entries)

    def __contains__(self, name):
        return name in self.entries

    def get(self, name):
        if name not in self.entries:
            raise KeyError(f"missing tensor {name!r}")
        return self.entries[name].values


def _decode(raw, dtype, shape):
    if dtype == "BF16":
        bits = np.frombuffer(raw, dtype="<u2").astype(np.uint32) << 16
        arr = bits.view(np.float32)
    else:
        arr = np.frombuffer(raw, dtype=_DTYPES[dtype])
    return arr.astype(np.float64).reshape(shape)


def parse_tensor_archive(blob):
    blob = bytes(blob)
    if len(blob) < 8:
        raise ArchiveError("truncated archive: missing header length")
    (n,) = struct.unpack("<Q", blob[:8])
    if n > len(blob) - 8:
        raise ArchiveError("truncated archive")
    if n > MAX_HEADER:
        raise ArchiveError(f"malformed header: length {n} exceeds limit")
    try:
        header = json.loads(blob[8 : 8 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"malformed header: {exc}") from exc
    if not isinstance(header, dict):
        raise ArchiveError("malformed header: top level is not an object")
    data = blob[8 + n :]
    metadata = header.pop("__metadata__", {}) or {}
    entries = {}
    for name, info in header.items():
        if not isinstance(info, dict) or not {"dtype", "shape", "data_offsets"} <= set(info):
            raise ArchiveError(f"malformed header: entry {name!r} lacks dtype/shape/data_offsets")
        dtype = info["dtype"]
        if dtype not in _DTYPES:
            raise ArchiveError(f"unknown dtype {dtype!r} for tensor {name!r}")
        shape = info["shape"]
        offsets = info["data_offsets"]
        if (
            not isinstance(shape, list)
            or not all(isinstance(d, int) and d >= 0 for d in shape)
            or not isinstance(offsets, list)
            or len(offsets) != 2
            or not all(isinstance(o, int) for o in offsets)
        ):
            raise ArchiveError(f"malformed header: bad shape or offsets for {name!r}")
        begin, end = offsets
        expected = int(np.prod(shape, dtype=np.int64)) * _DTYPES[dtype].itemsize
        if not 0 <= begin <= end or end - begin != expected:
            raise ArchiveError(f"malformed header: {name!r} extent {offsets} does not match shape {shape} {dtype}")
        if end > len(data):
            raise ArchiveError(f"truncated archive: {name!r} ends at byte {end}, data has {len(data)}")
        entries[name] = TensorEntry(name, dtype, tuple(shape), _decode(data[begin:end], dtype, shape))
    return TensorArchive(entries=entries, metadata=dict(metadata))


def load_tensor_archive(path):
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ArchiveError(f"cannot read archive {path}: {exc}") from exc
    return parse_tensor_archive(blob)


def _encode(arr, dtype):
    if dtype == "BF16":
        bits = np.ascontiguousarray(arr, dtype=np.float32).view(np.uint32)
        # round to nearest even
        bits = ((bits + 0x7FFF + ((bits >> 16) & 1)) >> 16).astype("<u2")
        return bits.tobytes()
    return np.ascontiguousarray(arr, dtype=_DTYPES[dtype]).tobytes()


def serialize_tensor_archive(tensors, metadata=None):
    """``tensors`` maps name -> array or (array, dtype name). Entries are laid out in name order."""
    header = {}
    chunks = []
    offset = 0
    for name in sorted(tensors):
        item = tensors[name]
        if isinstance(item, tuple):
            arr, dtype = item
            arr = np.asarray(arr)
        else:
            arr = np.asarray(item)
            dtype = _NAMES.get(arr.dtype, "F64")
        if dtype not in _DTYPES:
            raise ArchiveError(f"unknown dtype {dtype!r} for tensor {name!r}")
        raw = _encode(arr, dtype)
        header[name] = {"dtype": dtype, "shape": list(arr.shape), "data_offsets": [offset, offset + len(raw)]}
        chunks.append(raw)
        offset += len(raw)
    if metadata:
        header["__metadata__"] = {str(k): str(v) for k, v in metadata.items()}
    text = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    text += b" " * (-len(text) % 8)
    return struct.pack("<Q", len(text)) + text + b"".join(chunks)


def save_tensor_archive(path, tensors, metadata=None):
    blob = serialize_tensor_archive(tensors, metadata)
    with open(path, "wb") as fh:
        fh.write(blob)
    return path
