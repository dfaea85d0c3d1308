"""Binary checkpoints, JSON summaries, gnuplot data files and run manifests.

Checkpoint layout (all little-endian)::

    offset  size  field
    0       4     magic b"ASCL"
    4       4     u32 format version
    8       4     u32 d
    12      4     u32 n
    16      8     f64 t
    24      8     f64 kappa
    32      4     u32 law family tag (0 MG, 1 IPMB, 2 SIPM, 3 zero symbol)
    36      4     u32 law flags (bit 0: MG evaluated on the k3 = 0 plane)
    40      8     f64 nu
    48      8     f64 beta
    56      ...   n**d complex coefficients, row-major FFT order, (re, im) f64 pairs

The forcing is not stored; it is rebuilt from the run's config file.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .laws import SymbolLaw
from .spectral import Lattice, SpectralField

__all__ = [
    "CHECKPOINT_VERSION",
    "CheckpointHeader",
    "write_checkpoint",
    "read_checkpoint",
    "write_json",
    "write_dat",
    "write_manifest",
]

MAGIC = b"ASCL"
CHECKPOINT_VERSION = 1
MANIFEST_VERSION = 1
_HEADER = struct.Struct("<4sIIIddIIdd")

_TAGS = {"MG": 0, "IPMB": 1, "SIPM": 2, "zero": 3}
_FAMILIES = {v: k for k, v in _TAGS.items()}


@dataclass(frozen=True)
class CheckpointHeader:
    version: int
    d: int
    n: int
    t: float
    kappa: float
    family: str
    nu: float
    beta: float
    k3_plane: str


def _law_tag(law: SymbolLaw) -> tuple[int, int]:
    if law.family == "Table":
        if law.name != "zero":
            raise ValueError("only the zero-symbol table law can be checkpointed")
        return _TAGS["zero"], 0
    return _TAGS[law.family], int(law.k3_plane == "formula")


def write_checkpoint(path, state) -> None:
    """Write ``state`` (a SimulationState) in the ASCL format."""
    lat = state.lattice
    tag, flags = _law_tag(state.law)
    head = _HEADER.pack(MAGIC, CHECKPOINT_VERSION, lat.d, lat.n, float(state.t),
                        float(state.kappa), tag, flags, float(state.law.nu),
                        float(state.law.beta))
    body = np.ascontiguousarray(state.theta.coeffs, dtype="<c16").tobytes()
    Path(path).write_bytes(head + body)


def read_checkpoint(path) -> tuple[CheckpointHeader, SpectralField, SymbolLaw]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated checkpoint header")
    magic, ver, d, n, t, kappa, tag, flags, nu, beta = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not an ASCL checkpoint")
    if ver != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {ver}")
    if tag not in _FAMILIES:
        raise ValueError(f"{path}: unknown law tag {tag}")
    lat = Lattice(d, n)
    expected = _HEADER.size + 16 * lat.size
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    coeffs = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(lat.shape)
    family = _FAMILIES[tag]
    plane = "formula" if flags & 1 else "zero"
    if family == "MG":
        law = SymbolLaw.mg(nu, k3_plane=plane)
    elif family == "IPMB":
        law = SymbolLaw.ipmb(nu)
    elif family == "SIPM":
        law = SymbolLaw.sipm(beta)
    else:
        law = SymbolLaw.zero(d)
    header = CheckpointHeader(ver, d, n, t, kappa, family, nu, beta, plane)
    return header, SpectralField(lat, coeffs), law


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def write_dat(path, x, y, header: str = "") -> None:
    """Two-column whitespace data file for gnuplot."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a):.17g} {float(b):.17g}\n")


def write_manifest(out_dir, command: str, status: str, exit_code: int, files, extra=None) -> None:
    from . import __version__

    out = Path(out_dir)
    data = {
        "command": command,
        "status": status,
        "exit_code": exit_code,
        "package_version": __version__,
        "manifest_version": MANIFEST_VERSION,
        "checkpoint_version": CHECKPOINT_VERSION,
        "files": sorted(os.path.relpath(f, out) for f in files),
    }
    if extra:
        data.update(extra)
    write_json(out / "manifest.json", data)
