"""Policy checkpoints.

A checkpoint is an uncompressed ``.npz`` archive: one float64 array per
parameter plus ``__meta__``, a JSON string holding the format tag, version,
layer shapes and the board size the policy was trained on.
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .network import PARAM_NAMES, PolicyParams

FORMAT = "hillsnake-policy"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(params: PolicyParams, path: str | Path, meta: Optional[dict] = None) -> None:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "shapes": {k: list(params.arrays[k].shape) for k in PARAM_NAMES},
        **(meta or {}),
    }
    buf = io.BytesIO()
    np.savez(buf, __meta__=np.array(json.dumps(header, sort_keys=True)),
             **{k: params.arrays[k] for k in PARAM_NAMES})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> tuple[PolicyParams, dict]:
    try:
        with np.load(Path(path), allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != FORMAT:
                raise CheckpointError(f"{path}: not a {FORMAT} checkpoint")
            if meta.get("version") != VERSION:
                raise CheckpointError(f"{path}: unsupported version {meta.get('version')}")
            arrays = {k: np.array(data[k], dtype=np.float64) for k in PARAM_NAMES}
    except CheckpointError:
        raise
    except (OSError, KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: cannot load checkpoint ({exc})") from None
    for k, shape in meta["shapes"].items():
        if list(arrays[k].shape) != shape:
            raise CheckpointError(f"{path}: {k} has shape {arrays[k].shape}, header says {shape}")
    return PolicyParams(arrays), meta
