"""JSON device formats.

Matrices are row-major nested lists with complex entries encoded as
``[re, im]`` pairs.  Device objects:

* POVM:       ``{"dim": d, "effects": [matrix, ...]}``
* channel:    ``{"din": d, "dout": d', "choi": matrix}``
* instrument: ``{"din": d, "dout": d', "blocks": [matrix, ...]}``

A device *pair* is ``{"first": <device>, "second": <device>}``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .devices import ChannelChoi, Instrument, Povm


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"malformed matrix payload with shape {arr.shape}")
    return (arr[..., 0] + 1j * arr[..., 1]).astype(np.complex128)


def device_to_json(dev) -> dict:
    if isinstance(dev, Povm):
        return {"dim": dev.dim, "effects": [matrix_to_json(e) for e in dev.effects]}
    if isinstance(dev, ChannelChoi):
        return {"din": dev.din, "dout": dev.dout, "choi": matrix_to_json(dev.choi)}
    if isinstance(dev, Instrument):
        return {
            "din": dev.din,
            "dout": dev.dout,
            "blocks": [matrix_to_json(b) for b in dev.blocks],
        }
    raise TypeError(f"not a serializable device: {type(dev).__name__}")


def device_from_json(obj: dict):
    if not isinstance(obj, dict):
        raise ValueError("device payload must be a JSON object")
    if "effects" in obj:
        return Povm(int(obj["dim"]), tuple(matrix_from_json(e) for e in obj["effects"]))
    if "choi" in obj:
        return ChannelChoi(int(obj["din"]), int(obj["dout"]), matrix_from_json(obj["choi"]))
    if "blocks" in obj:
        return Instrument(
            int(obj["din"]), int(obj["dout"]), tuple(matrix_from_json(b) for b in obj["blocks"])
        )
    raise ValueError("device payload lacks 'effects', 'choi', or 'blocks'")


def pair_to_json(pair) -> dict:
    first, second = pair
    return {"first": device_to_json(first), "second": device_to_json(second)}


def pair_from_json(obj: dict):
    return device_from_json(obj["first"]), device_from_json(obj["second"])


def save_device(dev, path) -> None:
    Path(path).write_text(json.dumps(device_to_json(dev)))


def load_device(path):
    return device_from_json(json.loads(Path(path).read_text()))


def save_pair(pair, path) -> None:
    Path(path).write_text(json.dumps(pair_to_json(pair)))


def load_pair(path):
    return pair_from_json(json.loads(Path(path).read_text()))
