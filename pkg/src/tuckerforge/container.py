"""Binary weight container with an exact, documented byte layout.

Layout (all integers little-endian):

.. code-block:: text

    magic   4 bytes  "TKWT"
    version u32      currently 1
    mlen    u32      manifest byte length
    manifest         mlen bytes of UTF-8 text (JSON by convention)
    count   u32      number of tensors
    per tensor:
        nlen    u16          name byte length
        name    nlen bytes   UTF-8
        dtype   u8           0 = f32, 1 = f64
        ndim    u8
        dims    ndim x u32
        payload prod(dims) * itemsize bytes, row-major

Payloads round-trip bit-exactly. Tensors tagged ``f32`` are narrowed on
write; when that loses information the writer records the tensor names
under the ``"narrowed_tensors"`` manifest key (the manifest must then be a
JSON object or empty).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .tucker import TuckerFactors

__all__ = [
    "MAGIC",
    "VERSION",
    "ContainerError",
    "TensorEntry",
    "Container",
    "write_container",
    "read_container",
    "factor_entries",
    "assemble_factors",
]

MAGIC = b"TKWT"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_TAGS = {"f32": 0, "f64": 1}


class ContainerError(Exception):
    """Raised for malformed container files; messages are diagnostic-stable."""


@dataclass(frozen=True)
class TensorEntry:
    """One named tensor; values live in float64, ``dtype`` is the disk tag."""

    name: str
    data: np.ndarray
    dtype: str = "f64"

    def __post_init__(self):
        if self.dtype not in _DTYPE_TAGS:
            raise ValueError(f"dtype tag must be f32 or f64, got {self.dtype!r}")
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if len(self.name.encode("utf-8")) > 0xFFFF:
            raise ValueError("tensor name exceeds 65535 bytes")
        object.__setattr__(self, "data", data)


@dataclass
class Container:
    """Ordered named tensors plus a manifest text block."""

    entries: list[TensorEntry] = field(default_factory=list)
    manifest: str = ""
    version: int = VERSION

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("tensor names must be unique")

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def get(self, name: str) -> TensorEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def manifest_obj(self) -> dict:
        if not self.manifest:
            return {}
        return json.loads(self.manifest)


def _narrowed_names(c: Container) -> list[str]:
    out = []
    for e in c.entries:
        if e.dtype == "f32":
            narrowed = e.data.astype("<f4").astype(np.float64)
            if not np.array_equal(narrowed, e.data):
                out.append(e.name)
    return out


def write_container(path, c: Container) -> None:
    """Serialize ``c`` to ``path`` in the layout documented above."""
    if c.version != VERSION:
        raise ValueError(f"can only write version {VERSION}, got {c.version}")
    manifest = c.manifest
    lossy = _narrowed_names(c)
    if lossy:
        try:
            doc = json.loads(manifest) if manifest else {}
        except json.JSONDecodeError:
            raise ValueError(
                "lossy f32 narrowing requires a JSON-object manifest to flag it"
            ) from None
        if not isinstance(doc, dict):
            raise ValueError("lossy f32 narrowing requires a JSON-object manifest to flag it")
        doc["narrowed_tensors"] = lossy
        manifest = json.dumps(doc)

    mbytes = manifest.encode("utf-8")
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    blob += struct.pack("<I", len(mbytes))
    blob += mbytes
    blob += struct.pack("<I", len(c.entries))
    for e in c.entries:
        nbytes = e.name.encode("utf-8")
        blob += struct.pack("<H", len(nbytes))
        blob += nbytes
        tag = _DTYPE_TAGS[e.dtype]
        blob += struct.pack("<BB", tag, e.data.ndim)
        blob += struct.pack(f"<{e.data.ndim}I", *e.data.shape)
        blob += e.data.astype(_DTYPES[tag]).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(blob)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise ContainerError(f"truncated container: unexpected end of file in {what}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def read_container(path) -> Container:
    """Parse a container file; every malformation has a distinct diagnostic."""
    with open(path, "rb") as fh:
        buf = fh.read()
    r = _Reader(buf)
    if r.take(4, "magic") != MAGIC:
        raise ContainerError("bad magic: not a TKWT container")
    version = r.u32("version")
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    mlen = r.u32("manifest length")
    try:
        manifest = r.take(mlen, "manifest").decode("utf-8")
    except UnicodeDecodeError:
        raise ContainerError("manifest is not valid UTF-8") from None
    count = r.u32("tensor count")
    entries = []
    seen = set()
    for t in range(count):
        nlen = r.u16(f"tensor {t} name length")
        try:
            name = r.take(nlen, f"tensor {t} name").decode("utf-8")
        except UnicodeDecodeError:
            raise ContainerError(f"tensor {t} name is not valid UTF-8") from None
        if name in seen:
            raise ContainerError(f"duplicate tensor name {name!r}")
        seen.add(name)
        tag = r.u8(f"tensor {name!r} dtype")
        if tag not in _DTYPES:
            raise ContainerError(f"unknown dtype code {tag} for tensor {name!r}")
        ndim = r.u8(f"tensor {name!r} ndim")
        dims = struct.unpack(f"<{ndim}I", r.take(4 * ndim, f"tensor {name!r} dims"))
        if any(d < 1 for d in dims):
            raise ContainerError(f"tensor {name!r} declares a zero extent")
        n_elems = 1
        for d in dims:
            n_elems *= d
        dt = _DTYPES[tag]
        need = n_elems * dt.itemsize
        if r.pos + need > len(buf):
            raise ContainerError(
                f"payload length mismatch for tensor {name!r}: "
                f"need {need} bytes, have {len(buf) - r.pos}"
            )
        payload = r.take(need, f"tensor {name!r} payload")
        data = np.frombuffer(payload, dtype=dt).reshape(dims).astype(np.float64)
        entries.append(TensorEntry(name=name, data=data, dtype="f32" if tag == 0 else "f64"))
    if r.pos != len(buf):
        raise ContainerError(f"trailing garbage: {len(buf) - r.pos} bytes after last tensor")
    return Container(entries=entries, manifest=manifest, version=version)


def factor_entries(layer: str, f: TuckerFactors, dtype: str = "f64") -> list[TensorEntry]:
    """The three tensors a decomposed layer stores: u_in, core, u_out."""
    return [
        TensorEntry(name=f"{layer}.u_in", data=f.u_in, dtype=dtype),
        TensorEntry(name=f"{layer}.core", data=f.core, dtype=dtype),
        TensorEntry(name=f"{layer}.u_out", data=f.u_out, dtype=dtype),
    ]


def assemble_factors(c: Container, layer: str, kind: str = "conv3d") -> TuckerFactors:
    """Rebuild TuckerFactors from a container, validating rank consistency."""
    try:
        u_in = c.get(f"{layer}.u_in").data
        core = c.get(f"{layer}.core").data
        u_out = c.get(f"{layer}.u_out").data
    except KeyError as e:
        raise ContainerError(f"missing factor tensor {e.args[0]!r}") from None
    if core.ndim != 5:
        raise ContainerError(f"core of layer {layer!r} must have 5 axes, got {core.ndim}")
    t_o, t_i = core.shape[:2]
    if u_out.ndim != 2 or u_out.shape[1] != t_o:
        raise ContainerError(
            f"u_out of layer {layer!r} has shape {u_out.shape}, expected (*, {t_o})"
        )
    if u_in.ndim != 2 or u_in.shape[1] != t_i:
        raise ContainerError(
            f"u_in of layer {layer!r} has shape {u_in.shape}, expected (*, {t_i})"
        )
    return TuckerFactors(core=core, u_out=u_out, u_in=u_in, kind=kind)
