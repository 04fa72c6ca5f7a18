"""Wyner common information of Gaussian pairs and nearly singular sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .cid import cid_pair
from .errors import ConsistencyError, DimensionMismatch, InfeasibleEpsilon
from .linalg import (
    CanonicalSpectrum,
    GaussianJoint,
    Tolerances,
    _tol,
    canonical_spectrum,
    validate_covariance,
)

__all__ = [
    "WynerValue",
    "SequenceMember",
    "wyner_bits",
    "wyner_gaussian",
    "singularity_report",
    "make_sequence_member",
    "seq_ratio",
]

LN2 = math.log(2.0)


def wyner_bits(rho: Sequence[float]) -> float:
    """``1/2 sum log2((1 + r) / (1 - r))`` for values in ``[0, 1)``.

    Evaluated as ``sum atanh(r) / ln 2`` for accuracy near 0 and near 1.
    """
    r = np.asarray(rho, dtype=float)
    if r.size == 0:
        return 0.0
    if np.any(r >= 1.0):
        return math.inf
    return float(math.fsum(np.arctanh(np.clip(r, 0.0, None)))) / LN2


@dataclass(frozen=True, eq=False)
class WynerValue:
    """``bits`` is ``None`` when the information is infinite."""

    bits: Optional[float]
    infinite: bool
    unit_count: int
    spectrum: CanonicalSpectrum

    def as_float(self) -> float:
        return math.inf if self.infinite else float(self.bits)


def wyner_gaussian(joint: GaussianJoint, tol: Tolerances | None = None) -> WynerValue:
    spec = canonical_spectrum(joint, tol)
    k = spec.unit_count
    if k:
        return WynerValue(None, True, k, spec)
    return WynerValue(wyner_bits(spec.sigma_vals), False, 0, spec)


def singularity_report(joint: GaussianJoint, tol: Tolerances | None = None) -> tuple[bool, int]:
    """``(jointly_singular, k)`` with ``k`` the number of unit canonical correlations.

    Raises
    ------
    ConsistencyError
        ``k`` differs from the rank-based dimension, meaning ``one_tol`` and
        ``rank_tol`` classify the joint differently.
    """
    tol = _tol(tol)
    k = canonical_spectrum(joint, tol).unit_count
    d = cid_pair(joint, tol)
    if k != d:
        raise ConsistencyError(
            f"{k} unit canonical correlations but rank-based dimension is {d}; "
            "adjust one_tol / rank_tol"
        )
    return k >= 1, k


@dataclass(frozen=True, eq=False)
class SequenceMember:
    epsilon: float
    sign_pattern: np.ndarray
    rho: np.ndarray
    perturbed_joint: GaussianJoint
    target_spectrum: CanonicalSpectrum


Pattern = Union[str, Sequence[int]]


def _signs(sigma: np.ndarray, eps: float, pattern: Pattern) -> np.ndarray:
    down_ok = sigma - eps >= 0.0
    up_ok = sigma + eps <= 1.0
    bad = ~(down_ok | up_ok)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InfeasibleEpsilon(
            f"epsilon={eps:g} cannot move sigma[{i}]={sigma[i]:.6g} by exactly epsilon inside [0, 1]"
        )
    if isinstance(pattern, str):
        if pattern == "min":
            return np.where(down_ok, -1, 1)
        if pattern == "max":
            return np.where(up_ok, 1, -1)
        raise ValueError(f"unknown pattern {pattern!r}; use 'min', 'max' or explicit signs")
    s = np.asarray(pattern, dtype=int)
    if s.shape != sigma.shape or not np.all(np.isin(s, (-1, 1))):
        raise ValueError(f"explicit sign pattern must be {sigma.size} entries of +1/-1")
    # clamp infeasible choices to the other direction
    return np.where(s > 0, np.where(up_ok, 1, -1), np.where(down_ok, -1, 1))


def make_sequence_member(
    joint: GaussianJoint,
    epsilon: float,
    pattern: Pattern = "min",
    tol: Tolerances | None = None,
) -> SequenceMember:
    """Joint with the same marginals whose canonical correlations sit at
    distance exactly ``epsilon`` from the target's.

    ``'min'`` moves every value down where possible, ``'max'`` moves it up
    where possible; explicit ``+1/-1`` signs are honoured unless they leave
    ``[0, 1]``.
    """
    tol = _tol(tol)
    if joint.n != 2:
        raise DimensionMismatch(f"expected exactly 2 blocks, got {joint.n}")
    if not (0.0 < epsilon < 1.0):
        raise InfeasibleEpsilon(f"epsilon must lie in (0, 1), got {epsilon!r}")
    if epsilon <= tol.one_tol:
        raise InfeasibleEpsilon(
            f"epsilon={epsilon:g} is not above one_tol={tol.one_tol:g}; perturbed unit "
            "correlations would still be classified as 1"
        )
    spec = canonical_spectrum(joint, tol)
    s = _signs(spec.sigma_vals, epsilon, pattern)
    rho = spec.sigma_vals + s * epsilon
    sxy = spec.cross_covariance(rho)
    sig = np.block([[joint.sigma_x, sxy], [sxy.T, joint.sigma_y]])
    pj = validate_covariance(sig, joint.block_dims, tol)
    return SequenceMember(float(epsilon), s, rho, pj, spec)


def seq_ratio(
    joint: GaussianJoint,
    epsilon: float,
    pattern: Pattern = "min",
    tol: Tolerances | None = None,
) -> float:
    """Wyner information of the sequence member over ``1/2 log2(1/epsilon)``."""
    m = make_sequence_member(joint, epsilon, pattern, tol)
    w = wyner_gaussian(m.perturbed_joint, tol)
    if w.infinite:
        raise InfeasibleEpsilon(f"perturbed joint at epsilon={epsilon:g} is still jointly singular")
    return w.bits / (0.5 * math.log2(1.0 / epsilon))
