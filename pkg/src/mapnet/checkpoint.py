"""checkpoint"""

from __future__ import annotations
from pathlib import Path
from typing import Any
import hashlib
import json
import logging
import struct

import numpy as np

from mapnet.errors import CheckpointError, ShapeMismatchError
from mapnet.policy import ArchitectureDescriptor, PolicyParameters


logger = logging.getLogger(__name__)

MAGIC = b"MAPNETPC"
FORMAT_VERSION = 1
_LENGTH = struct.Struct("<I")
_WEIGHT_DTYPE = np.dtype("<f8")


def encode_checkpoint(params: PolicyParameters, regime: str, key: str) -> bytes:
    """
    Policy checkpoint layout: 8 magic bytes, the header length as a little endian uint32, a UTF-8 JSON header
    (format version, architecture, training step, version, regime, registry key, weight count) and the weights as
    little endian float64.
    """

    header = {
        "format_version": FORMAT_VERSION,
        "architecture": params.architecture.to_dict(),
        "step": params.step,
        "version": params.version,
        "regime": regime,
        "key": key,
        "weights": int(params.weights.size),
    }
    raw_header = json.dumps(header, sort_keys=True).encode()
    return MAGIC + _LENGTH.pack(len(raw_header)) + raw_header + params.weights.astype(_WEIGHT_DTYPE).tobytes()


def decode_checkpoint(data: bytes) -> tuple[PolicyParameters, dict[str, Any]]:
    """
    Parse a policy checkpoint.

    Returns
    -------
    `tuple[PolicyParameters, dict[str, Any]]`
        Weights and the full header

    Raises
    ------
    `CheckpointError`
        Bad magic, truncated file, unknown format version or inconsistent weight count
    """

    prefix = len(MAGIC) + _LENGTH.size
    if len(data) < prefix or data[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a policy checkpoint")

    (length,) = _LENGTH.unpack(data[len(MAGIC) : prefix])
    if len(data) < prefix + length:
        raise CheckpointError("truncated checkpoint header")

    try:
        header = json.loads(data[prefix : prefix + length].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint header: {e}") from e

    if header.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {header.get('format_version')}")

    body = data[prefix + length :]
    count = int(header.get("weights", -1))
    if len(body) != count * _WEIGHT_DTYPE.itemsize:
        raise CheckpointError(f"expected {count} weights, found {len(body) // _WEIGHT_DTYPE.itemsize}")

    try:
        architecture = ArchitectureDescriptor.from_dict(header.get("architecture", {}))
    except ShapeMismatchError as e:
        raise CheckpointError(str(e)) from e

    params = PolicyParameters(
        weights=np.frombuffer(body, dtype=_WEIGHT_DTYPE).astype(np.float64),
        architecture=architecture,
        version=int(header["version"]),
        step=int(header["step"]),
    )
    return params, header


def save_checkpoint(path: str | Path, params: PolicyParameters, regime: str, key: str) -> str:
    """
    Write a checkpoint file.

    Returns
    -------
    `str`
        SHA-256 of the written bytes
    """

    data = encode_checkpoint(params, regime, key)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)
    logger.debug("wrote checkpoint %s", path)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path: str | Path, sha256: str | None = None) -> tuple[PolicyParameters, dict[str, Any]]:
    """Read a checkpoint file, optionally verifying its SHA-256"""

    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if sha256 is not None and hashlib.sha256(data).hexdigest() != sha256:
        raise CheckpointError(f"checkpoint {path} does not match its recorded hash")

    return decode_checkpoint(data)
