"""Problem files and result records.

A problem file is YAML or JSON::

    schema_version: 1
    block_dims: [2, 2]
    sigma:
      - [1, 0, 0, 0]
      - [0, 1, 0, 1]
      - [0, 0, 1, 0]
      - [0, 1, 0, 1]
    tolerances: {rank_tol: 1.0e-10}

or names a preset (``preset: setup2:d=5``) instead of ``block_dims``/``sigma``.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np
import yaml

from . import __version__
from .errors import InputError, ProblemSpecError
from .linalg import GaussianJoint, Tolerances, validate_covariance
from .presets import preset

__all__ = [
    "SCHEMA_VERSION",
    "TOLERANCE_ENV",
    "ProblemSpec",
    "ResultRecord",
    "load_problem",
    "parse_problem",
    "tolerances_from_env",
    "encode",
]

SCHEMA_VERSION = 1
TOLERANCE_ENV = "CIDIM_TOLERANCES"
INF_TOKEN = "inf"


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    joint: GaussianJoint
    tolerances: Tolerances
    preset: Optional[str] = None
    source: Optional[str] = None

    def canonical_inputs(self) -> dict[str, Any]:
        return {
            "block_dims": list(self.joint.block_dims),
            "sigma": self.joint.sigma.tolist(),
        }


def _parse_tolerances(raw: Any, base: Tolerances, where: str) -> Tolerances:
    if raw is None:
        return base
    if not isinstance(raw, Mapping):
        raise ProblemSpecError(where, "must be a mapping of tolerance names to numbers")
    try:
        return base.with_overrides(**{str(k): float(v) for k, v in raw.items()})
    except (TypeError, ValueError) as exc:
        raise ProblemSpecError(where, str(exc)) from None


def tolerances_from_env(base: Tolerances | None = None) -> Tolerances:
    """Defaults overridden by ``CIDIM_TOLERANCES="rank_tol=1e-9,one_tol=1e-7"``."""
    base = base or Tolerances()
    raw = os.environ.get(TOLERANCE_ENV, "").strip()
    if not raw:
        return base
    return parse_tolerance_string(raw, base, TOLERANCE_ENV)


def parse_tolerance_string(raw: str, base: Tolerances, where: str = "--tol") -> Tolerances:
    pairs: dict[str, float] = {}
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ProblemSpecError(where, f"expected name=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            pairs[k.strip()] = float(v)
        except ValueError:
            raise ProblemSpecError(where, f"{k.strip()}: {v!r} is not a number") from None
    return _parse_tolerances(pairs, base, where)


def _matrix(raw: Any) -> np.ndarray:
    if not isinstance(raw, list) or not raw:
        raise ProblemSpecError("sigma", "must be a non-empty list of rows")
    width = None
    rows = []
    for i, row in enumerate(raw):
        if not isinstance(row, list):
            raise ProblemSpecError(f"sigma[{i}]", "row must be a list of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ProblemSpecError(f"sigma[{i}]", f"row has {len(row)} entries, expected {width}")
        vals = []
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ProblemSpecError(f"sigma[{i}][{j}]", f"{v!r} is not a number")
            vals.append(float(v))
        rows.append(vals)
    if len(rows) != width:
        raise ProblemSpecError("sigma", f"matrix must be square, got {len(rows)}x{width}")
    return np.array(rows)


def parse_problem(doc: Any, base_tol: Tolerances | None = None, source: Optional[str] = None) -> ProblemSpec:
    base_tol = base_tol or Tolerances()
    if not isinstance(doc, Mapping):
        raise ProblemSpecError("<root>", "problem file must be a mapping")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ProblemSpecError("schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    known = {"schema_version", "block_dims", "sigma", "tolerances", "preset"}
    extra = sorted(set(map(str, doc)) - known)
    if extra:
        raise ProblemSpecError(extra[0], "unknown field")
    tol = _parse_tolerances(doc.get("tolerances"), base_tol, "tolerances")
    name = doc.get("preset")
    if name is not None:
        if "sigma" in doc or "block_dims" in doc:
            raise ProblemSpecError("preset", "cannot be combined with sigma/block_dims")
        return ProblemSpec(preset(str(name), tol), tol, str(name), source)
    if "sigma" not in doc:
        raise ProblemSpecError("sigma", "missing (or give a preset)")
    if "block_dims" not in doc:
        raise ProblemSpecError("block_dims", "missing")
    dims = doc["block_dims"]
    if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) and d > 0 for d in dims):
        raise ProblemSpecError("block_dims", "must be a list of positive integers")
    sig = _matrix(doc["sigma"])
    try:
        joint = validate_covariance(sig, dims, tol)
    except InputError as exc:
        raise ProblemSpecError("sigma", str(exc)) from None
    return ProblemSpec(joint, tol, None, source)


def load_problem(path: str, base_tol: Tolerances | None = None) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ProblemSpecError("--input", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "<file>"
        raise ProblemSpecError(where, f"parse error: {getattr(exc, 'problem', exc)}") from None
    return parse_problem(doc, base_tol, path)


def encode(value: Any) -> Any:
    """JSON-ready form: numpy to lists, non-finite floats to tokens."""
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, Mapping):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isinf(v):
            return INF_TOKEN if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return value


def digest(obj: Any) -> str:
    blob = json.dumps(encode(obj), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class ResultRecord:
    command: str
    inputs: Mapping[str, Any]
    outputs: Mapping[str, Any]
    tolerances: Tolerances
    seed: Optional[int] = None
    tool_version: str = __version__
    schema_version: int = SCHEMA_VERSION
    extra: Mapping[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "tool_version": self.tool_version,
            "inputs_digest": digest(self.inputs),
            "tolerances": self.tolerances.as_dict(),
            "seed": self.seed,
            "outputs": encode(self.outputs),
            **({"parameters": encode(self.extra)} if self.extra else {}),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @staticmethod
    def decode_value(v: Any) -> Any:
        if v == INF_TOKEN:
            return math.inf
        if v == "-inf":
            return -math.inf
        if v == "nan":
            return math.nan
        return v
