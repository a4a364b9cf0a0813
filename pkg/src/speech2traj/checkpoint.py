"""Binary checkpoint format, bit-exact on round trip.

Layout (all integers unsigned 32-bit little-endian):

    magic "S2T1" | version | header_len | header JSON (UTF-8)
    | tensor_count | tensors... | crc32 of everything above

Each tensor record: name_len, name (UTF-8), rank, dims..., dtype code
(0 = float32), raw little-endian payload. The header JSON carries the
network spec and training metadata with sorted keys, so identical
contents serialize to identical bytes.
"""

from __future__ import annotations

import json
import struct
import zlib

import numpy as np

from .errors import (
    BadMagic,
    ChecksumMismatch,
    IOFailure,
    TensorShapeMismatch,
    VersionMismatch,
)
from .model import Network, NetworkSpec, build_network

MAGIC = b"S2T1"
FORMAT_VERSION = 1
DTYPE_F32 = 0


def _encode(network: Network, metadata: dict) -> bytes:
    header = json.dumps(
        {"spec": network.spec.to_dict(), "metadata": metadata},
        sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += struct.pack("<I", FORMAT_VERSION)
    body += struct.pack("<I", len(header))
    body += header
    tensors = network.state_tensors()
    body += struct.pack("<I", len(tensors))
    for name, tensor in tensors.items():
        raw = np.ascontiguousarray(tensor, dtype="<f4")
        encoded_name = name.encode("utf-8")
        body += struct.pack("<I", len(encoded_name))
        body += encoded_name
        body += struct.pack("<I", raw.ndim)
        body += struct.pack(f"<{raw.ndim}I", *raw.shape)
        body += struct.pack("<I", DTYPE_F32)
        body += raw.tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)))
    return bytes(body)


def save_checkpoint(network: Network, metadata: dict, path) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(_encode(network, metadata))
    except OSError as exc:
        raise IOFailure(f"cannot write checkpoint {path}: {exc}") from exc


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ChecksumMismatch("checkpoint truncated")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def load_checkpoint(path, expect_spec: NetworkSpec | None = None):
    """Returns (network, metadata). When expect_spec is given, the stored
    tensors must fit a network built from it."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read checkpoint {path}: {exc}") from exc

    if len(data) < 12:
        raise BadMagic(f"file too short ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}")
    version = struct.unpack_from("<I", data, 4)[0]
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"checkpoint version {version}, supported {FORMAT_VERSION}")
    stored_crc = struct.unpack_from("<I", data, len(data) - 4)[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise ChecksumMismatch("checkpoint CRC-32 mismatch")

    r = _Reader(data[:-4])
    r.take(12)  # magic, version, header_len re-read below
    header_len = struct.unpack_from("<I", data, 8)[0]
    header = json.loads(r.take(header_len).decode("utf-8"))
    file_spec = NetworkSpec(**header["spec"])
    spec = expect_spec if expect_spec is not None else file_spec
    network = build_network(spec, rng_seed=0)
    targets = network.state_tensors()

    count = r.u32()
    seen = set()
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        dtype_code = r.u32()
        if dtype_code != DTYPE_F32:
            raise TensorShapeMismatch(f"{name}: unsupported dtype code {dtype_code}")
        payload = r.take(4 * int(np.prod(dims, dtype=np.int64)))
        if name not in targets:
            raise TensorShapeMismatch(f"unexpected tensor {name!r}")
        target = targets[name]
        if tuple(dims) != target.shape:
            raise TensorShapeMismatch(
                f"{name}: stored shape {tuple(dims)} vs expected {target.shape}")
        target[...] = np.frombuffer(payload, dtype="<f4").reshape(dims)
        seen.add(name)
    missing = set(targets) - seen
    if missing:
        raise TensorShapeMismatch(f"missing tensors: {sorted(missing)}")
    return network, header["metadata"]
