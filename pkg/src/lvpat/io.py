"""Bit-exact binary persistence and figure/report export.

Container layout (all integers little-endian):
    magic "PATB" | version u32 = 1 | section count u32
    per section: name (16 bytes, zero-padded ASCII) | kind u32 | rank u32 |
                 dims u32 * rank | byte length u64 | payload
Kind 0 payloads are row-major IEEE-754 float64 tensors, kind 1 payloads are
UTF-8 metadata strings.  Output bytes are a pure function of the input
sections, so identical runs produce identical files.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ContainerFormatError, ParameterError
from .forward import Part, WaveData
from .metrics import ErrorReport
from .phantoms import ImageField

MAGIC = b"PATB"
VERSION = 1
KIND_TENSOR = 0
KIND_TEXT = 1

_U32_MAX = 2 ** 32 - 1


def write_container(sections) -> bytes:
    """Serialize (name, value) pairs; value is an ndarray or a str."""
    chunks = [MAGIC, struct.pack("<II", VERSION, len(sections))]
    for name, value in sections:
        raw_name = name.encode("ascii")
        if len(raw_name) > 16:
            raise ParameterError(f"section name {name!r} longer than 16 bytes")
        header = raw_name.ljust(16, b"\0")
        if isinstance(value, str):
            payload = value.encode("utf-8")
            chunks.append(header + struct.pack("<II", KIND_TEXT, 0)
                          + struct.pack("<Q", len(payload)))
            chunks.append(payload)
        else:
            arr = np.ascontiguousarray(value, dtype="<f8")
            if any(d > _U32_MAX for d in arr.shape):
                raise ParameterError("tensor dimension exceeds u32 range")
            payload = arr.tobytes()
            chunks.append(header + struct.pack("<II", KIND_TENSOR, arr.ndim)
                          + struct.pack(f"<{arr.ndim}I", *arr.shape)
                          + struct.pack("<Q", len(payload)))
            chunks.append(payload)
    return b"".join(chunks)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ContainerFormatError("container truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out


def read_container(data: bytes):
    """Parse container bytes back into a list of (name, value) pairs."""
    rd = _Reader(data)
    if rd.take(4) != MAGIC:
        raise ContainerFormatError("bad magic")
    version, count = struct.unpack("<II", rd.take(8))
    if version != VERSION:
        raise ContainerFormatError(f"unsupported container version {version}")
    sections = []
    for _ in range(count):
        name = rd.take(16).rstrip(b"\0").decode("ascii")
        kind, rank = struct.unpack("<II", rd.take(8))
        dims = struct.unpack(f"<{rank}I", rd.take(4 * rank)) if rank else ()
        (length,) = struct.unpack("<Q", rd.take(8))
        payload = rd.take(length)
        if kind == KIND_TEXT:
            if rank != 0:
                raise ContainerFormatError("metadata section with nonzero rank")
            sections.append((name, payload.decode("utf-8")))
        elif kind == KIND_TENSOR:
            expected = 8 * int(np.prod(dims, dtype=np.int64)) if rank else 8
            if rank == 0:
                raise ContainerFormatError("tensor section with rank 0")
            if length != expected:
                raise ContainerFormatError(
                    f"section {name!r}: payload length {length} != dims {dims}")
            arr = np.frombuffer(payload, dtype="<f8").reshape(dims).copy()
            sections.append((name, arr))
        else:
            raise ContainerFormatError(f"unknown section kind {kind}")
    if rd.pos != len(data):
        raise ContainerFormatError("trailing bytes after last section")
    return sections


def write_wave_data(w: WaveData, path) -> None:
    meta = json.dumps({"part": w.part.value, "dt": w.dt, "n_time": w.n_time,
                       "fingerprint": w.fingerprint}, sort_keys=True)
    sections = [("meta", meta), ("node_idx", w.node_idx.astype(float)),
                ("samples", w.samples)]
    with open(path, "wb") as fh:
        fh.write(write_container(sections))


def read_wave_data(path) -> WaveData:
    with open(path, "rb") as fh:
        sections = dict(read_container(fh.read()))
    meta = json.loads(sections["meta"])
    return WaveData(part=Part(meta["part"]),
                    node_idx=sections["node_idx"].astype(int),
                    dt=float(meta["dt"]), n_time=int(meta["n_time"]),
                    samples=sections["samples"],
                    fingerprint=meta["fingerprint"])


def write_image_field(f: ImageField, path) -> None:
    meta = json.dumps({"origin": list(f.origin), "h": f.h}, sort_keys=True)
    sections = [("meta", meta), ("values", f.values),
                ("mask", f.domain_mask.astype(float))]
    with open(path, "wb") as fh:
        fh.write(write_container(sections))


def read_image_field(path) -> ImageField:
    with open(path, "rb") as fh:
        sections = dict(read_container(fh.read()))
    meta = json.loads(sections["meta"])
    return ImageField(origin=tuple(meta["origin"]), h=float(meta["h"]),
                      values=sections["values"],
                      domain_mask=sections["mask"] > 0.5)


def export_pgm(field: ImageField, lo: float, hi: float, path) -> None:
    """16-bit binary PGM with [lo, hi] mapped affinely to [0, 65535].

    Values are clamped; masked-out cells render mid-gray.  Rows run top to
    bottom in decreasing y, columns in increasing x.
    """
    if hi <= lo:
        raise ParameterError("need hi > lo for gray scaling")
    scaled = (field.values - lo) / (hi - lo) * 65535.0
    pix = np.clip(np.rint(scaled), 0, 65535).astype(">u2")
    pix = np.where(field.domain_mask, pix, np.uint16(32768))
    img = pix.T[::-1, :].astype(">u2")  # rows top-to-bottom = y descending
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header + img.tobytes())


def export_csv(report: ErrorReport, path) -> None:
    """Write "variant,n,E2,E_n" rows: zero extension first, then learned
    variants by ascending n, the full-view reference last."""
    variant_n = report.metadata.get("variant_n", {})
    rows = []
    for variant, e2 in report.e2_per_variant.items():
        n = variant_n.get(variant)
        rows.append((variant, n, e2))
    rows.sort(key=lambda r: (r[1] is None, r[1] if r[1] is not None else 0, r[0]))
    lines = ["variant,n,E2,E_n"]
    for variant, n, e2 in rows:
        e_n = report.e_n_factors.get(n)
        n_txt = "" if n is None else str(n)
        e_n_txt = "" if e_n is None else repr(float(e_n))
        lines.append(f"{variant},{n_txt},{repr(float(e2))},{e_n_txt}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
