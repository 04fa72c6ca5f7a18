"""Named covariance presets."""

from __future__ import annotations

import re

import numpy as np

from .errors import ProblemSpecError
from .linalg import GaussianJoint, Tolerances

__all__ = ["setup1", "setup2", "intro", "preset", "PRESET_NAMES"]

PRESET_NAMES = ("setup1", "setup2:d=<k>", "intro")

_S1_MARGINAL = np.array(
    [
        [1.0, 0.5, 0.0, 0.0],
        [0.5, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
)


def setup1(tol: Tolerances | None = None) -> GaussianJoint:
    """4+4 pair: three coordinates shared exactly, the fourth correlated at 0.3."""
    cross = _S1_MARGINAL.copy()
    cross[3, 3] = 0.3
    return GaussianJoint.from_blocks(_S1_MARGINAL, _S1_MARGINAL, cross, tol)


def setup2(d: int, tol: Tolerances | None = None) -> GaussianJoint:
    """7+7 pair with identity marginals and diagonal cross-covariance holding
    ``d`` ones followed by ``7 - d`` entries of 0.5."""
    if not 0 <= d <= 7:
        raise ValueError(f"d must lie in 0..7, got {d}")
    cross = np.diag([1.0] * d + [0.5] * (7 - d))
    return GaussianJoint.from_blocks(np.eye(7), np.eye(7), cross, tol)


def intro(tol: Tolerances | None = None) -> GaussianJoint:
    """``X = [X_1, V]``, ``Y = [Y_1, V]`` with independent unit-variance components."""
    return GaussianJoint.from_blocks(np.eye(2), np.eye(2), np.diag([0.0, 1.0]), tol)


def preset(name: str, tol: Tolerances | None = None) -> GaussianJoint:
    name = name.strip().lower()
    if name == "setup1":
        return setup1(tol)
    if name == "intro":
        return intro(tol)
    m = re.fullmatch(r"setup2:d=(\d+)", name)
    if m:
        d = int(m.group(1))
        if d > 7:
            raise ProblemSpecError("preset", f"setup2 needs d in 0..7, got {d}")
        return setup2(d, tol)
    raise ProblemSpecError("preset", f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")
