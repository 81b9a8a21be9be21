"""Binary tensor container for uniform MPS plus a text metadata sidecar.

Container layout (all little-endian):
    bytes 0..4    magic b"UMPS1"
    bytes 5..16   shape header: three uint32 (D, d, D)
    bytes 17..    row-major (C order) complex128 entries of the site tensor

The sidecar is a plain-text file of "key = value" lines next to the binary
(same path with ".meta" appended) holding the model name, its parameters,
the bond dimension, the gauge tag, the energy density, and the Schmidt
spectrum when the state is in mixed canonical form.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

from .mps import UniformMps

MAGIC = b"UMPS1"
HEADER = struct.Struct("<5s3I")


def sidecar_path(path: str) -> str:
    return str(path) + ".meta"


def _atomic_write(path: str, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (tuple, list, np.ndarray)):
        return ", ".join(_format_value(v) for v in np.asarray(value).tolist())
    raise TypeError(f"unsupported sidecar value type {type(value)!r}")


def _parse_value(text: str):
    text = text.strip()
    if text in ("true", "false"):
        return text == "true"
    if "," in text:
        return tuple(_parse_value(p) for p in text.split(","))
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def save_mps(path: str, mps: UniformMps, model: str | None = None,
             params=None, energy: float | None = None, **extra) -> None:
    """Write the site tensor and a metadata sidecar atomically.

    Extra keyword fields go into the sidecar verbatim (scalars, strings or
    flat numeric sequences).
    """
    A = np.ascontiguousarray(mps.A, dtype=np.complex128)
    D, d, D2 = A.shape
    blob = HEADER.pack(MAGIC, D, d, D2) + A.astype("<c16").tobytes(order="C")
    _atomic_write(str(path), blob)

    meta: dict = {"D": D, "d": d, "gauge": mps.gauge}
    if model is not None:
        meta["model"] = model
    if params is not None:
        meta["params"] = tuple(np.atleast_1d(params).tolist())
    if energy is not None:
        meta["energy"] = float(energy)
    if mps.injective is not None:
        meta["injective"] = bool(mps.injective)
    if mps.schmidt is not None:
        meta["schmidt"] = mps.schmidt
    meta.update(extra)
    lines = [f"{key} = {_format_value(value)}" for key, value in meta.items()]
    _atomic_write(sidecar_path(path), ("\n".join(lines) + "\n").encode())


def load_mps(path: str):
    """Read a saved state; returns (UniformMps, metadata dict).

    The sidecar is optional: without it the state comes back with gauge
    "none" and empty metadata.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < HEADER.size:
        raise ValueError(f"{path}: truncated container")
    magic, D, d, D2 = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    count = D * d * D2
    payload = blob[HEADER.size:]
    if len(payload) != count * 16:
        raise ValueError(
            f"{path}: payload holds {len(payload)} bytes, expected {count * 16}"
        )
    A = np.frombuffer(payload, dtype="<c16").reshape(D, d, D2)

    meta: dict = {}
    side = sidecar_path(path)
    if os.path.exists(side):
        with open(side, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or "=" not in line:
                    continue
                key, _, value = line.partition("=")
                meta[key.strip()] = _parse_value(value)
    gauge = str(meta.get("gauge", "none"))
    schmidt = meta.get("schmidt")
    if schmidt is not None:
        schmidt = np.atleast_1d(np.asarray(schmidt, dtype=float))
    injective = meta.get("injective")
    state = UniformMps(A.copy(), gauge=gauge, schmidt=schmidt,
                       injective=injective)
    return state, meta
