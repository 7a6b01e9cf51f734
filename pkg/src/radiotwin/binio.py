"""Self-describing binary container used for channel dumps and checkpoints.

Layout: 4-byte magic, uint32 little-endian header length, UTF-8 JSON header,
then raw array payloads in header order. Arrays are stored C-contiguous,
little-endian, with shape and dtype recorded in the header, so files are
readable without this package.
"""

import json
import struct

import numpy as np

CHANNEL_MAGIC = b"RTCH"
GRF_MAGIC = b"RTGF"
BUFFER_MAGIC = b"RTRB"

_SUPPORTED_DTYPES = {"float32", "float64", "complex64", "complex128", "int64"}


def write_blob(path, magic: bytes, header: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write header metadata plus named arrays to ``path``."""
    descriptors = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        dtype = arr.dtype.newbyteorder("<")
        if dtype.name not in _SUPPORTED_DTYPES:
            raise ValueError(f"unsupported array dtype {arr.dtype} for {name!r}")
        descriptors.append({"name": name, "shape": list(arr.shape), "dtype": dtype.name})
        payloads.append(arr.astype(dtype, copy=False).tobytes())
    full_header = dict(header)
    full_header["arrays"] = descriptors
    encoded = json.dumps(full_header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", len(encoded)))
        fh.write(encoded)
        for chunk in payloads:
            fh.write(chunk)


def read_blob(path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    """Read a blob written by :func:`write_blob`, verifying the magic bytes."""
    with open(path, "rb") as fh:
        got = fh.read(4)
        if got != magic:
            raise ValueError(f"bad magic in {path}: expected {magic!r}, got {got!r}")
        (header_len,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for desc in header["arrays"]:
            dtype = np.dtype(desc["dtype"]).newbyteorder("<")
            count = int(np.prod(desc["shape"])) if desc["shape"] else 1
            buf = fh.read(dtype.itemsize * count)
            arr = np.frombuffer(buf, dtype=dtype, count=count).reshape(desc["shape"])
            arrays[desc["name"]] = arr.astype(np.dtype(desc["dtype"]))
    return header, arrays
