"""状態のバイナリスナップショット。

形式（リトルエンディアン）:
  magic "VWS1" | version u32 | nx u32 | nz u32 | t, eps, mu, Lx f64
  | ζ[nx] | ψ[nx] | ω₁[nx·nz] | ω₂[nx·nz] | ω₃[nx·nz]   （f64, 行優先）
"""
from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from app.errors import SnapshotFormatError
from app.services.dynamics import State

logger = logging.getLogger(__name__)

MAGIC = b"VWS1"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdddd")
_F64 = np.dtype("<f8")


@dataclass(frozen=True)
class Snapshot:
    state: State
    eps: float
    mu: float
    Lx: float

    @property
    def nx(self) -> int:
        return int(self.state.zeta.shape[0])

    @property
    def nz(self) -> int:
        return int(self.state.omega.shape[2])


def expected_size(nx: int, nz: int) -> int:
    return _HEADER.size + _F64.itemsize * (2 * nx + 3 * nx * nz)


def encode(snap: Snapshot) -> bytes:
    s = snap.state
    nx, nz = snap.nx, snap.nz
    if s.psi.shape != (nx,) or s.omega.shape != (3, nx, nz):
        raise SnapshotFormatError(f"配列の形状が一致しません: zeta={s.zeta.shape} psi={s.psi.shape} omega={s.omega.shape}")
    header = _HEADER.pack(MAGIC, VERSION, nx, nz, float(s.t), float(snap.eps), float(snap.mu), float(snap.Lx))
    body = b"".join(
        np.ascontiguousarray(a, dtype=_F64).tobytes(order="C")
        for a in (s.zeta, s.psi, s.omega[0], s.omega[1], s.omega[2])
    )
    return header + body


def decode(data: bytes) -> Snapshot:
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"ヘッダが短すぎます: {len(data)} bytes")
    magic, version, nx, nz, t, eps, mu, Lx = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotFormatError(f"magic が不正です: {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"未対応のバージョンです: {version}")
    if len(data) != expected_size(nx, nz):
        raise SnapshotFormatError(f"長さが不正です: {len(data)} != {expected_size(nx, nz)}")

    arrays = []
    offset = _HEADER.size
    for count in (nx, nx, nx * nz, nx * nz, nx * nz):
        arrays.append(np.frombuffer(data, dtype=_F64, count=count, offset=offset).astype(np.float64))
        offset += count * _F64.itemsize
    zeta, psi, w1, w2, w3 = arrays
    omega = np.stack([w.reshape(nx, nz) for w in (w1, w2, w3)])
    return Snapshot(state=State(t=t, zeta=zeta, psi=psi, omega=omega), eps=eps, mu=mu, Lx=Lx)


def write_snapshot(path: Union[str, os.PathLike], snap: Snapshot) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode(snap))
    tmp.replace(path)
    logger.debug("snapshot written: %s t=%.6f", path, snap.state.t)
    return path


def read_snapshot(path: Union[str, os.PathLike]) -> Snapshot:
    return decode(Path(path).read_bytes())


__all__ = ["MAGIC", "VERSION", "Snapshot", "expected_size", "encode", "decode", "write_snapshot", "read_snapshot"]
