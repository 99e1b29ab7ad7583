"""Flat binary checkpoint container with a plain-text sidecar manifest.

Container layout, all integers little-endian:

    magic      8 bytes   b"FARMCKPT"
    version    u32
    n_entries  u32
    per entry:
        path_len   u32, then path as utf-8
        dtype      u8 (0 = float32, 1 = float64)
        ndim       u32, then ndim x u64 dimension sizes
        nbytes     u64, then the raw little-endian data, row-major

The manifest `<file>.manifest.txt` starts with a header holding the container's sha256, followed by one
tab-separated line per entry: path, dtype, shape, sha256 of the entry's raw bytes.
"""

import hashlib
import logging
import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from farmrl.tensor.errors import CheckpointError
from farmrl.tensor.tensor import Tensor

logger = logging.getLogger(__name__)

MAGIC = b"FARMCKPT"
VERSION = 1
_DTYPE_CODES: dict[str, int] = {"float32": 0, "float64": 1}
_CODE_DTYPES: dict[int, str] = {v: k for k, v in _DTYPE_CODES.items()}


class ManifestEntry(BaseModel):
    path: str
    dtype: str
    shape: tuple[int, ...]
    sha256: str


class CheckpointManifest(BaseModel):
    container_sha256: str
    entries: list[ManifestEntry]


def manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".manifest.txt")


def _raw_bytes(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype=values.dtype.newbyteorder("<")).tobytes()


def save_checkpoint(path: Path, params: Mapping[str, Tensor | np.ndarray]) -> Path:
    """Writes the parameters to a checkpoint container and its manifest.

    Parameters
    ----------
    path : Path
        Destination of the container. The manifest is written next to it.
    params : Mapping[str, Tensor | np.ndarray]
        Parameter paths (eg: "farm/module3/lstm/W_ih") to values, written in iteration order.

    Returns
    -------
    Path
        The container path.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    entries: list[ManifestEntry] = []
    for name, value in params.items():
        values = value.data if isinstance(value, Tensor) else np.asarray(value)
        dtype_name = values.dtype.name
        if dtype_name not in _DTYPE_CODES:
            raise CheckpointError(f"Cannot checkpoint {name}: unsupported dtype {dtype_name}.")
        encoded_name = name.encode("utf-8")
        raw = _raw_bytes(values)
        chunks.append(struct.pack("<I", len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack("<BI", _DTYPE_CODES[dtype_name], values.ndim))
        chunks.append(struct.pack(f"<{values.ndim}Q", *values.shape))
        chunks.append(struct.pack("<Q", len(raw)))
        chunks.append(raw)
        entries.append(
            ManifestEntry(
                path=name,
                dtype=dtype_name,
                shape=tuple(values.shape),
                sha256=hashlib.sha256(raw).hexdigest(),
            )
        )
    container = b"".join(chunks)
    path.write_bytes(container)
    _write_manifest(
        manifest_path(path),
        CheckpointManifest(container_sha256=hashlib.sha256(container).hexdigest(), entries=entries),
    )
    logger.info(f"Wrote checkpoint {path} with {len(entries)} entries.")
    return path


def _write_manifest(path: Path, manifest: CheckpointManifest) -> None:
    lines = [
        f"# farm checkpoint manifest v{VERSION}",
        f"# container sha256 {manifest.container_sha256}",
    ]
    for entry in manifest.entries:
        shape = "x".join(str(d) for d in entry.shape) or "scalar"
        lines.append(f"{entry.path}\t{entry.dtype}\t{shape}\t{entry.sha256}")
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path: Path) -> CheckpointManifest:
    """Parses the sidecar manifest of a checkpoint container."""
    sidecar = manifest_path(path)
    if not sidecar.exists():
        raise CheckpointError(f"Missing manifest {sidecar} for checkpoint {path}.")
    container_sha = None
    entries: list[ManifestEntry] = []
    for line_number, line in enumerate(sidecar.read_text().splitlines(), start=1):
        if line.startswith("# container sha256 "):
            container_sha = line.rsplit(" ", 1)[-1]
            continue
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise CheckpointError(f"{sidecar}:{line_number}: expected 4 tab-separated fields, got {len(fields)}.")
        name, dtype_name, shape_text, digest = fields
        shape = () if shape_text == "scalar" else tuple(int(d) for d in shape_text.split("x"))
        entries.append(ManifestEntry(path=name, dtype=dtype_name, shape=shape, sha256=digest))
    if container_sha is None:
        raise CheckpointError(f"{sidecar} has no container checksum header.")
    return CheckpointManifest(container_sha256=container_sha, entries=entries)


class _Reader:
    def __init__(self, data: bytes, source: Path) -> None:
        self.data = data
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise CheckpointError(f"Checkpoint {self.source} is truncated at byte {self.offset}.")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: Path, verify: bool = True) -> dict[str, np.ndarray]:
    """Reads a checkpoint container into an ordered mapping of parameter path to array.

    Parameters
    ----------
    path : Path
        The container path.
    verify : bool
        When True, the container and every entry are checked against the manifest checksums.

    Returns
    -------
    dict[str, np.ndarray]
        Parameter arrays, in the order they were written.
    """
    if not path.exists():
        raise CheckpointError(f"Checkpoint {path} does not exist.")
    container = path.read_bytes()
    manifest = read_manifest(path) if verify else None
    if manifest is not None and hashlib.sha256(container).hexdigest() != manifest.container_sha256:
        raise CheckpointError(f"Checkpoint {path} does not match the checksum in its manifest.")

    reader = _Reader(container, path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path} is not a farm checkpoint (bad magic).")
    version, n_entries = reader.unpack("<II")
    if version != VERSION:
        raise CheckpointError(f"Unsupported checkpoint version {version} in {path}; expected {VERSION}.")
    params: dict[str, np.ndarray] = {}
    for _ in range(n_entries):
        (name_length,) = reader.unpack("<I")
        name = reader.take(name_length).decode("utf-8")
        dtype_code, ndim = reader.unpack("<BI")
        if dtype_code not in _CODE_DTYPES:
            raise CheckpointError(f"Entry {name} in {path} has unknown dtype code {dtype_code}.")
        shape = reader.unpack(f"<{ndim}Q") if ndim else ()
        (nbytes,) = reader.unpack("<Q")
        dtype = np.dtype(_CODE_DTYPES[dtype_code]).newbyteorder("<")
        expected = int(np.prod(shape)) * dtype.itemsize if shape else dtype.itemsize
        if nbytes != expected:
            raise CheckpointError(f"Entry {name} in {path} declares {nbytes} bytes but shape {shape} needs {expected}.")
        raw = reader.take(nbytes)
        params[name] = np.frombuffer(raw, dtype=dtype).astype(dtype.newbyteorder("=")).reshape(shape)

    if manifest is not None:
        _verify_entries(path, manifest, container, params)
    return params


def _verify_entries(
    path: Path, manifest: CheckpointManifest, container: bytes, params: dict[str, np.ndarray]
) -> None:
    listed = [entry.path for entry in manifest.entries]
    if listed != list(params):
        raise CheckpointError(f"Manifest of {path} lists {listed} but the container holds {list(params)}.")
    for entry in manifest.entries:
        values = params[entry.path]
        if tuple(values.shape) != entry.shape or values.dtype.name != entry.dtype:
            raise CheckpointError(
                f"Entry {entry.path} in {path} is {values.dtype.name}{values.shape} but the manifest says {entry.dtype}{entry.shape}."
            )
        if hashlib.sha256(_raw_bytes(values)).hexdigest() != entry.sha256:
            raise CheckpointError(f"Entry {entry.path} in {path} fails its manifest checksum.")


def verify_checkpoint(path: Path) -> CheckpointManifest:
    """Raises CheckpointError unless the container and its manifest agree. Returns the manifest."""
    load_checkpoint(path, verify=True)
    return read_manifest(path)
