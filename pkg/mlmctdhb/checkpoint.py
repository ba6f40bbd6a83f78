"""The "MLB1" binary checkpoint container.

Layout (little endian):

    magic      4 bytes  b"MLB1"
    version    u32
    count      u32      number of entries
    entries:
        name_len u16, name (UTF-8)
        dtype    u8     0 = float64, 1 = complex128, 2 = JSON text (UTF-8 bytes)
        rank     u8
        shape    rank x u64
        data     IEEE-754 values in C order, or the JSON bytes

A checkpoint holds "A", "C/<σ>", "Phi/<σ>", "t" and the mixture echo
"spec"; extra named arrays (integrator state) may follow.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .errors import ConfigError
from .models import MixtureSpec
from .state import MLState

MAGIC = b"MLB1"
VERSION = 1

DTYPE_F64 = 0
DTYPE_C128 = 1
DTYPE_JSON = 2
_NUMPY_DTYPES = {DTYPE_F64: np.dtype("<f8"), DTYPE_C128: np.dtype("<c16")}

Entry = Union[np.ndarray, dict]


@dataclass
class Checkpoint:
    """A decoded checkpoint: state, mixture echo and any extra arrays."""

    state: MLState
    spec: MixtureSpec
    extras: Dict[str, np.ndarray] = field(default_factory=dict)


def encode_entries(entries: List[Tuple[str, Entry]]) -> bytes:
    """Serialize named arrays and JSON blocks into the container format."""
    out = [MAGIC, struct.pack("<II", VERSION, len(entries))]
    for name, value in entries:
        raw_name = name.encode("utf-8")
        out.append(struct.pack("<H", len(raw_name)) + raw_name)
        if isinstance(value, dict):
            data = json.dumps(value, sort_keys=True).encode("utf-8")
            out.append(struct.pack("<BBQ", DTYPE_JSON, 1, len(data)))
            out.append(data)
            continue
        array = np.asarray(value)
        code = DTYPE_C128 if np.iscomplexobj(array) else DTYPE_F64
        # keeps 0-d scalars 0-d
        array = np.require(
            np.asarray(array, dtype=_NUMPY_DTYPES[code]), requirements="C"
        )
        out.append(struct.pack("<BB", code, array.ndim))
        out.append(struct.pack(f"<{array.ndim}Q", *array.shape))
        out.append(array.tobytes(order="C"))
    return b"".join(out)


def decode_entries(payload: bytes) -> Dict[str, Entry]:
    """Parse a container into a name -> array/JSON mapping.

    Raises:
        ConfigError: If the payload is not a valid MLB1 container
    """
    view = memoryview(payload)
    if bytes(view[:4]) != MAGIC:
        raise ConfigError("not an MLB1 checkpoint (bad magic)")
    try:
        version, count = struct.unpack_from("<II", view, 4)
        if version != VERSION:
            raise ConfigError(f"unsupported checkpoint version {version}")
        offset = 12
        entries: Dict[str, Entry] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", view, offset)
            offset += 2
            name = bytes(view[offset : offset + name_len]).decode("utf-8")
            offset += name_len
            code, rank = struct.unpack_from("<BB", view, offset)
            offset += 2
            shape = struct.unpack_from(f"<{rank}Q", view, offset)
            offset += 8 * rank
            if code == DTYPE_JSON:
                size = int(shape[0])
                entries[name] = json.loads(bytes(view[offset : offset + size]))
                offset += size
                continue
            if code not in _NUMPY_DTYPES:
                raise ConfigError(f"unknown element type {code} in entry {name!r}")
            dtype = _NUMPY_DTYPES[code]
            size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
            if offset + size > len(view):
                raise ConfigError(f"checkpoint truncated in entry {name!r}")
            entries[name] = np.frombuffer(
                view[offset : offset + size], dtype=dtype
            ).reshape(shape).copy()
            offset += size
    except struct.error as exc:
        raise ConfigError(f"checkpoint truncated: {exc}") from exc
    return entries


def encode_checkpoint(
    state: MLState,
    spec: MixtureSpec,
    extras: Optional[Dict[str, np.ndarray]] = None,
) -> bytes:
    entries: List[Tuple[str, Entry]] = [("A", state.a)]
    entries += [(f"C/{i}", c) for i, c in enumerate(state.coeffs)]
    entries += [(f"Phi/{i}", p) for i, p in enumerate(state.spfs)]
    entries.append(("t", np.array(state.time, dtype=float)))
    entries.append(("spec", spec.to_dict()))
    for name, value in (extras or {}).items():
        entries.append((name, value))
    return encode_entries(entries)


def decode_checkpoint(payload: bytes) -> Checkpoint:
    """Rebuild the state and mixture echo of a checkpoint.

    Raises:
        ConfigError: If required entries are missing or malformed
    """
    entries = decode_entries(payload)
    try:
        spec = MixtureSpec.from_dict(entries["spec"])  # type: ignore[arg-type]
        S = spec.S
        a = np.asarray(entries["A"], dtype=complex)
        coeffs = tuple(np.asarray(entries[f"C/{i}"], dtype=complex) for i in range(S))
        spfs = tuple(np.asarray(entries[f"Phi/{i}"], dtype=complex) for i in range(S))
        t = float(np.asarray(entries["t"]).item())
    except KeyError as exc:
        raise ConfigError(f"checkpoint is missing entry {exc}") from exc
    known = {"A", "t", "spec"}
    known |= {f"C/{i}" for i in range(S)} | {f"Phi/{i}" for i in range(S)}
    extras = {
        k: v for k, v in entries.items() if k not in known and isinstance(v, np.ndarray)
    }
    state = MLState(a=a, coeffs=coeffs, spfs=spfs, time=t)
    return Checkpoint(state=state, spec=spec, extras=extras)


def write_checkpoint(
    path: Path,
    state: MLState,
    spec: MixtureSpec,
    extras: Optional[Dict[str, np.ndarray]] = None,
) -> None:
    """Write a checkpoint atomically (temporary file then rename)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(state, spec, extras))
    tmp.replace(path)


def read_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint file.

    Raises:
        ConfigError: If the file is missing or not a valid checkpoint
    """
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
