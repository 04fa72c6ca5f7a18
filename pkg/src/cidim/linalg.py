"""Tolerance-aware dense linear algebra over covariance matrices.

Every rank decision in the package goes through :func:`numeric_rank` and the
basis helpers below, which threshold singular values relative to the largest
one. Decompositions use SVD or symmetric eigendecomposition only, because the
inputs of interest are singular by design.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, NotPSD, NotSymmetric, SpectrumOutOfRange

__all__ = [
    "Tolerances",
    "GaussianJoint",
    "CanonicalSpectrum",
    "validate_covariance",
    "numeric_rank",
    "null_space_basis",
    "row_space_basis",
    "pinv_sqrt",
    "psd_sqrt",
    "psd_pinv",
    "conditional_cov",
    "conditional_cov_linear",
    "canonical_spectrum",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by all computations.

    Attributes
    ----------
    rank_tol : float
        Relative singular-value threshold for numeric rank.
    one_tol : float
        Canonical correlations within this distance of 1 count as exactly 1.
    as_tol : float
        Residual threshold for sampled almost-sure linear relations.
    solver_tol : float
        Convergence tolerance of the reduced approximation solver.
    """

    rank_tol: float = 1e-10
    one_tol: float = 1e-8
    as_tol: float = 1e-6
    solver_tol: float = 1e-10

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not (0.0 < float(v) < 1.0):
                raise ValueError(f"tolerance {f.name} must lie in (0, 1), got {v!r}")
            object.__setattr__(self, f.name, float(v))

    def with_overrides(self, **overrides: float) -> "Tolerances":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ValueError(f"unknown tolerance name(s): {sorted(unknown)}")
        return replace(self, **overrides)

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOL = Tolerances()


def _tol(tol: Tolerances | None) -> Tolerances:
    return DEFAULT_TOL if tol is None else tol


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GaussianJoint:
    """Zero-mean jointly Gaussian vector ``[X_1, ..., X_n]`` given by its covariance.

    Use :func:`validate_covariance` to construct instances; the constructor
    itself does not check symmetry or semidefiniteness.
    """

    block_dims: tuple[int, ...]
    sigma: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        object.__setattr__(self, "sigma", _readonly(self.sigma))

    @classmethod
    def from_blocks(
        cls,
        sigma_x: np.ndarray,
        sigma_y: np.ndarray,
        sigma_xy: np.ndarray,
        tol: Tolerances | None = None,
    ) -> "GaussianJoint":
        """Assemble and validate ``[[S_X, S_XY], [S_XY^T, S_Y]]``."""
        sx = np.atleast_2d(np.asarray(sigma_x, dtype=float))
        sy = np.atleast_2d(np.asarray(sigma_y, dtype=float))
        sxy = np.atleast_2d(np.asarray(sigma_xy, dtype=float))
        if sxy.shape != (sx.shape[0], sy.shape[0]):
            raise DimensionMismatch(
                f"cross-covariance has shape {sxy.shape}, expected {(sx.shape[0], sy.shape[0])}"
            )
        full = np.block([[sx, sxy], [sxy.T, sy]])
        return validate_covariance(full, [sx.shape[0], sy.shape[0]], tol)

    @property
    def n(self) -> int:
        return len(self.block_dims)

    @property
    def dim(self) -> int:
        return int(sum(self.block_dims))

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.block_dims)]))

    def block_slice(self, i: int) -> slice:
        o = self.offsets
        return slice(o[i], o[i + 1])

    def indices(self, blocks: Iterable[int]) -> np.ndarray:
        o = self.offsets
        idx = [np.arange(o[b], o[b + 1]) for b in blocks]
        return np.concatenate(idx).astype(int) if idx else np.zeros(0, dtype=int)

    def sub(self, rows: Iterable[int], cols: Iterable[int] | None = None) -> np.ndarray:
        """Covariance between the block sets ``rows`` and ``cols``."""
        r = self.indices(rows)
        c = r if cols is None else self.indices(cols)
        return self.sigma[np.ix_(r, c)]

    def marginal(self, i: int) -> np.ndarray:
        return self.sub([i])

    def without(self, i: int) -> np.ndarray:
        """Covariance of ``X_{-i}``: the joint with block ``i`` deleted."""
        return self.sub([j for j in range(self.n) if j != i])

    def select(self, blocks: Sequence[int]) -> "GaussianJoint":
        """Joint of a sub-collection of blocks, in the given order."""
        return GaussianJoint(tuple(self.block_dims[b] for b in blocks), self.sub(blocks))

    # two-block conveniences
    @property
    def sigma_x(self) -> np.ndarray:
        return self.sub([0])

    @property
    def sigma_y(self) -> np.ndarray:
        return self.sub([1])

    @property
    def sigma_xy(self) -> np.ndarray:
        return self.sub([0], [1])


def validate_covariance(
    sigma: np.ndarray, block_dims: Sequence[int], tol: Tolerances | None = None
) -> GaussianJoint:
    """Check and wrap a joint covariance matrix.

    The matrix is symmetrized by averaging with its transpose before the
    semidefiniteness test.

    Raises
    ------
    DimensionMismatch
        Non-square matrix, or ``block_dims`` inconsistent with its size.
    NotSymmetric
        ``max |S - S^T|`` exceeds ``rank_tol`` times the largest entry.
    NotPSD
        Smallest eigenvalue below ``-rank_tol`` times the largest.
    """
    tol = _tol(tol)
    s = np.asarray(sigma, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"covariance must be a square matrix, got shape {s.shape}")
    dims = [int(d) for d in block_dims]
    if not dims or any(d <= 0 for d in dims):
        raise DimensionMismatch(f"block dimensions must be positive integers, got {list(block_dims)}")
    if sum(dims) != s.shape[0]:
        raise DimensionMismatch(
            f"block dimensions {dims} sum to {sum(dims)} but the matrix is {s.shape[0]}x{s.shape[0]}"
        )
    if not np.all(np.isfinite(s)):
        raise DimensionMismatch("covariance contains non-finite entries")
    scale = float(np.max(np.abs(s))) if s.size else 0.0
    dev = float(np.max(np.abs(s - s.T))) if s.size else 0.0
    if dev > tol.rank_tol * max(scale, np.finfo(float).tiny):
        raise NotSymmetric(dev, tol.rank_tol * scale)
    s = 0.5 * (s + s.T)
    ev = np.linalg.eigvalsh(s)
    lmax = max(float(ev[-1]), 0.0)
    if ev[0] < -tol.rank_tol * lmax or (lmax == 0.0 and ev[0] < 0.0):
        raise NotPSD(float(ev[0]), tol.rank_tol * lmax)
    return GaussianJoint(tuple(dims), s)


def _svd_rank(s: np.ndarray, tol: Tolerances) -> int:
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rank_tol * s[0]))


def numeric_rank(m: np.ndarray, tol: Tolerances | None = None) -> int:
    """Number of singular values above ``rank_tol`` times the largest."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0
    return _svd_rank(np.linalg.svd(m, compute_uv=False), _tol(tol))


def null_space_basis(m: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Orthonormal rows ``B`` spanning the left null space, ``B @ m ~ 0``.

    Returns an array of shape ``(rows(m) - rank(m), rows(m))``.
    """
    tol = _tol(tol)
    m = np.atleast_2d(np.asarray(m, dtype=float))
    r = m.shape[0]
    if m.size == 0:
        return np.eye(r)
    u, s, _ = np.linalg.svd(m, full_matrices=True)
    k = _svd_rank(s, tol)
    return np.ascontiguousarray(u[:, k:].T)


def row_space_basis(m: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Orthonormal rows spanning the row space; ``rank(m)`` rows."""
    tol = _tol(tol)
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return np.zeros((0, m.shape[1]))
    _, s, vt = np.linalg.svd(m, full_matrices=False)
    k = _svd_rank(s, tol)
    return np.ascontiguousarray(vt[:k])


def _psd_eig(psd: np.ndarray, tol: Tolerances) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigenpairs of a PSD matrix, with a mask of the eigenvalues kept as nonzero."""
    a = np.atleast_2d(np.asarray(psd, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        return np.zeros(0), np.zeros((0, 0)), np.zeros(0, dtype=bool)
    a = 0.5 * (a + a.T)
    lam, q = np.linalg.eigh(a)
    lmax = max(float(lam[-1]), 0.0)
    if lam[0] < -tol.rank_tol * lmax or (lmax == 0.0 and lam[0] < 0.0):
        raise NotPSD(float(lam[0]), tol.rank_tol * lmax)
    keep = lam > tol.rank_tol * lmax if lmax > 0 else np.zeros_like(lam, dtype=bool)
    return lam, q, keep


def pinv_sqrt(psd: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    """Pseudo-inverse square root ``S`` with ``S psd S`` the range projector."""
    lam, q, keep = _psd_eig(psd, _tol(tol))
    d = np.zeros_like(lam)
    d[keep] = 1.0 / np.sqrt(lam[keep])
    return (q * d) @ q.T


def psd_sqrt(psd: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    lam, q, keep = _psd_eig(psd, _tol(tol))
    d = np.where(keep, np.sqrt(np.clip(lam, 0.0, None)), 0.0)
    return (q * d) @ q.T


def psd_pinv(psd: np.ndarray, tol: Tolerances | None = None) -> np.ndarray:
    lam, q, keep = _psd_eig(psd, _tol(tol))
    d = np.zeros_like(lam)
    d[keep] = 1.0 / lam[keep]
    return (q * d) @ q.T


def _schur(a: np.ndarray, b: np.ndarray, c: np.ndarray, tol: Tolerances) -> np.ndarray:
    """``a - b c^+ b^T``, symmetrized, with eigenvalues that are negligible
    relative to ``a`` set to zero."""
    if a.shape[0] == 0:
        return a.copy()
    s = a if c.shape[0] == 0 else a - b @ psd_pinv(c, tol) @ b.T
    s = 0.5 * (s + s.T)
    lam, q = np.linalg.eigh(s)
    scale = max(float(np.linalg.eigvalsh(0.5 * (a + a.T))[-1]), 0.0)
    lam = np.where(lam > tol.rank_tol * scale, lam, 0.0)
    out = (q * lam) @ q.T
    return 0.5 * (out + out.T)


def conditional_cov(
    joint: GaussianJoint,
    target_blocks: Iterable[int],
    given_blocks: Iterable[int],
    tol: Tolerances | None = None,
) -> np.ndarray:
    """Covariance of ``X_I`` conditioned on ``X_J`` (a Schur complement).

    Raises
    ------
    DimensionMismatch
        Overlapping or out-of-range block indices.
    """
    tol = _tol(tol)
    target = list(target_blocks)
    given = list(given_blocks)
    for b in target + given:
        if not 0 <= b < joint.n:
            raise DimensionMismatch(f"block index {b} out of range for {joint.n} blocks")
    if set(target) & set(given):
        raise DimensionMismatch(f"target blocks {target} and given blocks {given} overlap")
    return _schur(joint.sub(target), joint.sub(target, given), joint.sub(given), tol)


def conditional_cov_linear(
    sigma: np.ndarray,
    target_map: np.ndarray,
    given_map: np.ndarray,
    tol: Tolerances | None = None,
) -> np.ndarray:
    """Covariance of ``A X`` conditioned on ``B X`` where ``X ~ N(0, sigma)``."""
    tol = _tol(tol)
    s = np.asarray(sigma, dtype=float)
    a_map = np.atleast_2d(np.asarray(target_map, dtype=float)).reshape(-1, s.shape[0])
    b_map = np.atleast_2d(np.asarray(given_map, dtype=float)).reshape(-1, s.shape[0])
    return _schur(a_map @ s @ a_map.T, a_map @ s @ b_map.T, b_map @ s @ b_map.T, tol)


@dataclass(frozen=True, eq=False)
class CanonicalSpectrum:
    """Canonical correlations of a two-block joint.

    ``left_factor`` and ``right_factor`` hold the singular vectors in the
    original coordinates of ``X`` and ``Y``; their columns are orthonormal and
    lie in the ranges of the marginal covariances.
    """

    sigma_vals: np.ndarray
    left_factor: np.ndarray
    right_factor: np.ndarray
    r_x: int
    r_y: int
    raw_sigma_vals: np.ndarray
    sqrt_x: np.ndarray = field(repr=False)
    sqrt_y: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for name in ("sigma_vals", "left_factor", "right_factor", "raw_sigma_vals", "sqrt_x", "sqrt_y"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))

    @property
    def size(self) -> int:
        return int(self.sigma_vals.shape[0])

    def unit_mask(self) -> np.ndarray:
        return self.sigma_vals == 1.0

    @property
    def unit_count(self) -> int:
        return int(np.count_nonzero(self.unit_mask()))

    def cross_covariance(self, rho: Sequence[float]) -> np.ndarray:
        """``S_X^{1/2} U diag(rho) V^T S_Y^{1/2}`` with this spectrum's factors."""
        rho = np.asarray(rho, dtype=float)
        if rho.shape != self.sigma_vals.shape:
            raise DimensionMismatch(
                f"expected {self.size} singular values, got shape {rho.shape}"
            )
        return (self.sqrt_x @ self.left_factor * rho) @ (self.sqrt_y @ self.right_factor).T


def _range_whitener(psd: np.ndarray, tol: Tolerances) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam, q, keep = _psd_eig(psd, tol)
    qr = q[:, keep]
    lr = lam[keep]
    return qr, qr / np.sqrt(lr), (q * np.where(keep, np.sqrt(np.clip(lam, 0, None)), 0.0)) @ q.T


def canonical_spectrum(joint: GaussianJoint, tol: Tolerances | None = None) -> CanonicalSpectrum:
    """SVD of the normalized cross-covariance ``S_X^{-1/2} S_XY S_Y^{-1/2}``.

    Computed in the reduced coordinates of the marginal ranges, so the number
    of singular values is ``min(r_x, r_y)``. Values within ``one_tol`` of 0 or 1
    are snapped to the boundary.

    Raises
    ------
    SpectrumOutOfRange
        A singular value exceeds ``1 + one_tol``.
    """
    tol = _tol(tol)
    if joint.n != 2:
        raise DimensionMismatch(f"canonical spectrum needs exactly 2 blocks, got {joint.n}")
    qx, wx, sqx = _range_whitener(joint.sigma_x, tol)
    qy, wy, sqy = _range_whitener(joint.sigma_y, tol)
    rx, ry = qx.shape[1], qy.shape[1]
    k = min(rx, ry)
    if k == 0:
        raw = np.zeros(0)
        u = np.zeros((joint.block_dims[0], 0))
        v = np.zeros((joint.block_dims[1], 0))
    else:
        m = wx.T @ joint.sigma_xy @ wy
        ur, raw, vrt = np.linalg.svd(m, full_matrices=False)
        u = qx @ ur
        v = qy @ vrt.T
    if raw.size and raw[0] > 1.0 + tol.one_tol:
        raise SpectrumOutOfRange(float(raw[0]), tol.one_tol)
    vals = raw.copy()
    vals[vals >= 1.0 - tol.one_tol] = 1.0
    vals[vals <= tol.one_tol] = 0.0
    return CanonicalSpectrum(vals, u, v, rx, ry, raw, sqx, sqy)
