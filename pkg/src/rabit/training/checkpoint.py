"""
Binary checkpoint format, little-endian throughout:

    b"RABITCKP" | u32 version | u32 header length | header (sorted-key JSON)
    u32 entry count, then per entry:
    u16 name length | name (utf-8) | u8 dtype code | u8 ndim | u32 dims... | raw values
"""
import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Dict, Mapping, Optional, Union

import numpy as np

from rabit.errors import CheckpointError

MAGIC = b"RABITCKP"
FORMAT_VERSION = 1

DTYPE_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
CODE_DTYPES = {code: dtype for dtype, code in DTYPE_CODES.items()}


@dataclass
class Checkpoint:
    epoch: int
    step: int
    config_hash: str
    model_config: Dict[str, Any]
    tensors: Dict[str, np.ndarray] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)

    def model_state(self) -> Dict[str, np.ndarray]:
        return {name: value for name, value in self.tensors.items() if not name.startswith("optim.")}

    def optimizer_state(self) -> Dict[str, np.ndarray]:
        return {name: value for name, value in self.tensors.items() if name.startswith("optim.")}


def _write_entry(stream: BinaryIO, name: str, value: np.ndarray) -> None:
    value = np.asarray(value)
    dtype = value.dtype.newbyteorder("<")
    if dtype not in DTYPE_CODES:
        msg = "Cannot store '%s' with dtype %s (float32/float64 only)."
        raise CheckpointError(msg % (name, value.dtype))

    encoded = name.encode("utf-8")
    stream.write(struct.pack("<H", len(encoded)))
    stream.write(encoded)
    stream.write(struct.pack("<BB", DTYPE_CODES[dtype], value.ndim))
    stream.write(struct.pack("<%dI" % value.ndim, *value.shape))
    stream.write(np.ascontiguousarray(value, dtype=dtype).tobytes())


def save_checkpoint(path: Union[str, Path], checkpoint: Checkpoint) -> Path:
    path = Path(path)
    header = {
        "epoch": checkpoint.epoch,
        "step": checkpoint.step,
        "config_hash": checkpoint.config_hash,
        "model_config": checkpoint.model_config,
        "extra": checkpoint.extra,
    }
    encoded_header = json.dumps(header, sort_keys=True).encode("utf-8")

    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as stream:
        stream.write(MAGIC)
        stream.write(struct.pack("<II", FORMAT_VERSION, len(encoded_header)))
        stream.write(encoded_header)
        stream.write(struct.pack("<I", len(checkpoint.tensors)))
        for name, value in checkpoint.tensors.items():
            _write_entry(stream, name, value)
    os.replace(tmp, path)
    return path


def _read(stream: BinaryIO, size: int, path: Path) -> bytes:
    chunk = stream.read(size)
    if len(chunk) != size:
        msg = "Checkpoint '%s' is truncated."
        raise CheckpointError(msg % path)
    return chunk


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        msg = "Checkpoint '%s' does not exist."
        raise CheckpointError(msg % path)

    with open(path, "rb") as stream:
        if _read(stream, len(MAGIC), path) != MAGIC:
            msg = "'%s' is not a rabit checkpoint."
            raise CheckpointError(msg % path)

        version, header_length = struct.unpack("<II", _read(stream, 8, path))
        if version != FORMAT_VERSION:
            msg = "Unsupported checkpoint version %d in '%s'."
            raise CheckpointError(msg % (version, path))

        try:
            header = json.loads(_read(stream, header_length, path).decode("utf-8"))
        except ValueError as exc:
            msg = "Checkpoint header of '%s' is not valid JSON."
            raise CheckpointError(msg % path) from exc

        (count,) = struct.unpack("<I", _read(stream, 4, path))
        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_length,) = struct.unpack("<H", _read(stream, 2, path))
            name = _read(stream, name_length, path).decode("utf-8")
            code, ndim = struct.unpack("<BB", _read(stream, 2, path))
            if code not in CODE_DTYPES:
                msg = "Unknown dtype code %d for '%s' in '%s'."
                raise CheckpointError(msg % (code, name, path))
            shape = struct.unpack("<%dI" % ndim, _read(stream, 4 * ndim, path))
            dtype = CODE_DTYPES[code]
            raw = _read(stream, int(np.prod(shape, dtype=np.int64)) * dtype.itemsize, path)
            tensors[name] = np.frombuffer(raw, dtype=dtype).reshape(shape).astype(dtype.newbyteorder("="))

    return Checkpoint(
        epoch=header["epoch"],
        step=header["step"],
        config_hash=header["config_hash"],
        model_config=header["model_config"],
        tensors=tensors,
        extra=header.get("extra", {}),
    )


def state_to_checkpoint(
    epoch: int,
    step: int,
    config_hash: str,
    model_config: Mapping[str, Any],
    model_state: Mapping[str, np.ndarray],
    optimizer_state: Mapping[str, np.ndarray],
    extra: Optional[Mapping[str, Any]] = None,
) -> Checkpoint:
    tensors = dict(model_state)
    tensors.update(optimizer_state)
    return Checkpoint(
        epoch=epoch,
        step=step,
        config_hash=config_hash,
        model_config=json.loads(json.dumps(dict(model_config))),
        tensors=tensors,
        extra=dict(extra or {}),
    )
