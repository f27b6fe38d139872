"""Binary checkpoint files.

Layout: magic b"PPCK", version u16 LE, then repeated records of
{name length u16, name bytes, rank u8, dims u32 each, payload f32 LE}.
Everything - parameters, batchnorm running statistics, the model config
vector and (mid-training) Adam state - is stored as named float records.
Reserved names start with "__".
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"PPCK"
VERSION = 1

CONFIG_RECORD = "__config__"
ADAM_T_RECORD = "__adam__/t"
ADAM_HYPER_RECORD = "__adam__/hyper"
ADAM_M_PREFIX = "__adam__/m/"
ADAM_V_PREFIX = "__adam__/v/"


class CheckpointError(ValueError):
    pass


def write_records(path, records):
    """records: iterable of (name, ndarray); arrays stored as float32."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<H", VERSION))
        for name, arr in records:
            arr = np.ascontiguousarray(arr, dtype="<f4")
            nb = name.encode("utf-8")
            if len(nb) > 0xFFFF:
                raise CheckpointError(f"record name too long: {name!r}")
            if arr.ndim > 0xFF:
                raise CheckpointError(f"record rank too large: {name!r}")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<I", d))
            f.write(arr.tobytes())


def read_records(path):
    """Returns an ordered dict name -> float32 ndarray."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise CheckpointError("bad magic; not a checkpoint file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    pos = 6
    out = {}
    while pos < len(data):
        (nlen,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + nlen].decode("utf-8")
        pos += nlen
        (rank,) = struct.unpack_from("<B", data, pos)
        pos += 1
        dims = struct.unpack_from(f"<{rank}I", data, pos) if rank else ()
        pos += 4 * rank
        count = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos).reshape(dims)
        pos += 4 * count
        if name in out:
            raise CheckpointError(f"duplicate record {name!r}")
        out[name] = arr.copy()
    return out


def save_checkpoint(path, store, config_vec=None, adam=None):
    records = []
    if config_vec is not None:
        records.append((CONFIG_RECORD, np.asarray(config_vec, dtype=np.float32)))
    for name, arr in store.state_arrays().items():
        records.append((name, arr))
    if adam is not None:
        records.append((ADAM_T_RECORD, np.array([adam.t], dtype=np.float32)))
        records.append((ADAM_HYPER_RECORD, np.array(
            [adam.lr, adam.beta1, adam.beta2, adam.eps, adam.weight_decay],
            dtype=np.float32)))
        for name, arr in adam.m.items():
            records.append((ADAM_M_PREFIX + name, arr))
        for name, arr in adam.v.items():
            records.append((ADAM_V_PREFIX + name, arr))
    write_records(path, records)


def load_into_store(records, store, dtype=np.float32):
    """Copy plain (non-reserved) records into an existing ParameterStore."""
    for name, t in store.params.items():
        if name not in records:
            raise CheckpointError(f"checkpoint missing parameter {name!r}")
        if records[name].shape != t.data.shape:
            raise CheckpointError(f"shape mismatch for {name!r}")
        t.data = records[name].astype(dtype)
    for name, buf in store.buffers.items():
        if name not in records:
            raise CheckpointError(f"checkpoint missing buffer {name!r}")
        buf[...] = records[name].astype(buf.dtype)
