"""Simulated autonomous construction and recovery of a laser resonator."""

import json

from ._core import (
    CavforgeError,
    State,
    build,
    default_layout_json,
    fit_beam_path,
    log_transform,
    newton_correction,
    trial_batch,
)

__all__ = [
    "CavforgeError",
    "State",
    "build",
    "default_layout",
    "default_layout_json",
    "fit_beam_path",
    "log_transform",
    "newton_correction",
    "trial_batch",
]


def default_layout():
    return json.loads(default_layout_json())
