"""Binary snapshot files for horizontal velocity fields.

Layout (little-endian):
    magic   4 bytes  b"PE3D"
    version u32      (currently 1)
    n1, n2, nz  u32 each
    L1, L2, h, t  f64 each
    ncomp   u32      (always 2: u1 then u2)
    payload ncomp blocks of (n1+1)(n2+1)(nz+1) f64 each

The in-memory arrays are indexed (x, y, z); on the wire each component is
stored z-major -> y -> x row-major (index = (iz*(n2+1) + iy)*(n1+1) + ix),
i.e. transposed to (z, y, x) and flattened in C order.
read_snapshot(write_snapshot(v)) round-trips bitwise exactly.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import InputError
from .fields import HorizontalField
from .grid import GridSpec

MAGIC = b"PE3D"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIddddI")


def _to_wire(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a.transpose(2, 1, 0), dtype="<f8").tobytes()


def _from_wire(buf: bytes, shape: tuple[int, int, int]) -> np.ndarray:
    nx, ny, nz = shape
    a = np.frombuffer(buf, dtype="<f8").reshape(nz, ny, nx)
    return np.ascontiguousarray(a.transpose(2, 1, 0))


def write_snapshot(path, v: HorizontalField, t: float) -> None:
    g = v.grid
    header = _HEADER.pack(MAGIC, VERSION, g.n1, g.n2, g.nz,
                          g.L1, g.L2, g.h, t, 2)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_to_wire(v.u1))
        fh.write(_to_wire(v.u2))


def read_snapshot(path) -> tuple[HorizontalField, float]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise InputError(f"snapshot {path}: truncated header "
                         f"({len(raw)} < {_HEADER.size} bytes)")
    magic, version, n1, n2, nz, L1, L2, h, t, ncomp = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InputError(f"snapshot {path}: bad magic {magic!r}")
    if version != VERSION:
        raise InputError(f"snapshot {path}: unsupported version {version}")
    if ncomp != 2:
        raise InputError(f"snapshot {path}: expected 2 components, got {ncomp}")
    grid = GridSpec(L1=L1, L2=L2, h=h, n1=n1, n2=n2, nz=nz)
    npts = (n1 + 1) * (n2 + 1) * (nz + 1)
    block = 8 * npts
    expected = _HEADER.size + 2 * block
    if len(raw) != expected:
        raise InputError(f"snapshot {path}: payload size {len(raw) - _HEADER.size} "
                         f"bytes, expected {2 * block}")
    off = _HEADER.size
    u1 = _from_wire(raw[off:off + block], grid.shape)
    u2 = _from_wire(raw[off + block:off + 2 * block], grid.shape)
    return HorizontalField.from_components(u1, u2, grid), t
