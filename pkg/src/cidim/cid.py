"""Common information dimension of jointly Gaussian vectors.

Dimensions (CID, RCID, GKCID) are closed-form rank expressions of the joint
covariance. The ``construct_*`` functions additionally return the linear maps
that define a minimum-dimension shared variable ``W``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import block_diag

from .errors import DimensionMismatch, InternalInconsistency
from .linalg import (
    GaussianJoint,
    Tolerances,
    _tol,
    conditional_cov,
    conditional_cov_linear,
    null_space_basis,
    numeric_rank,
    row_space_basis,
)

__all__ = [
    "AlgorithmOneTrace",
    "CommonVariableSpec",
    "GKStructure",
    "cid_pair",
    "cid_multi",
    "rcid",
    "gkcid",
    "gk_structure",
    "construct_w_pair",
    "construct_w_multi",
    "construct_gk_w",
]


@dataclass(frozen=True, eq=False)
class AlgorithmOneTrace:
    """Intermediate quantities of the sequential construction.

    Per-step entries are lists indexed by block. ``u_maps``, ``y_maps``,
    ``z_maps``, ``t_maps`` act on the stacked vector ``X``; ``a_bases`` act on
    ``X_i`` and ``b_bases`` on ``[X_{i+1}, ..., X_n]``.
    """

    a_bases: list[np.ndarray]
    b_bases: list[np.ndarray]
    u_maps: list[np.ndarray]
    y_maps: list[np.ndarray]
    null_bases: list[np.ndarray]
    n_parts: list[np.ndarray]
    z_maps: list[np.ndarray]
    z_dims: list[int]
    c_bases: list[np.ndarray]
    t_maps: list[np.ndarray]
    sigma_z: np.ndarray
    sigma_t_given_z: np.ndarray

    @property
    def w_map(self) -> np.ndarray:
        return np.vstack(self.z_maps)

    @property
    def t_map(self) -> np.ndarray:
        return np.vstack(self.t_maps)


@dataclass(frozen=True, eq=False)
class CommonVariableSpec:
    """Linear description of a shared variable ``W``.

    ``w_matrix`` maps the stacked vector ``[X_1, ..., X_n]`` to ``W``.
    ``per_source_maps[i]`` (pair and GK modes) maps ``X_i`` alone to the same
    ``W`` almost surely. ``reductions[i]`` is the row-space basis ``F_i`` of
    ``Sigma_{X_i}`` and ``reduced_maps[i]`` the corresponding map in reduced
    coordinates, so ``per_source_maps[i] = reduced_maps[i] @ reductions[i]``
    up to the sign convention of the mode.
    """

    mode: str
    block_dims: tuple[int, ...]
    dimension: int
    w_matrix: np.ndarray
    per_source_maps: Optional[tuple[np.ndarray, ...]] = None
    reductions: Optional[tuple[np.ndarray, ...]] = None
    reduced_maps: Optional[tuple[np.ndarray, ...]] = None
    complements: Optional[tuple[np.ndarray, ...]] = None
    trace: Optional[AlgorithmOneTrace] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.w_matrix.shape[0] != self.dimension:
            raise InternalInconsistency(
                f"W map has {self.w_matrix.shape[0]} rows but dimension is {self.dimension}"
            )


@dataclass(frozen=True, eq=False)
class GKStructure:
    """Matrix whose left null space describes the common linear functions.

    ``sigma_tilde`` has one row block per source (in reduced coordinates
    ``X'_i = F_i X_i``) and one column block per consecutive pair
    ``(i, i+1)``; the column block holds the joint covariance of
    ``[X'_i, X'_{i+1}]`` in row blocks ``i`` and ``i+1`` and zeros elsewhere.
    A row vector ``[N_1 ... N_n]`` annihilates it exactly when
    ``N_i X'_i + N_{i+1} X'_{i+1} = 0`` almost surely for every pair.
    """

    f_bases: list[np.ndarray]
    sigma_tilde: np.ndarray
    null_basis: np.ndarray
    reduced_dims: list[int]
    rank: int

    @property
    def rows(self) -> int:
        return int(self.sigma_tilde.shape[0])

    @property
    def dimension(self) -> int:
        return self.rows - self.rank

    def partition(self) -> list[np.ndarray]:
        o = np.concatenate([[0], np.cumsum(self.reduced_dims)]).astype(int)
        return [self.null_basis[:, o[i]:o[i + 1]] for i in range(len(self.reduced_dims))]


def _need_two(joint: GaussianJoint) -> None:
    if joint.n != 2:
        raise DimensionMismatch(f"expected exactly 2 blocks, got {joint.n}")


def _need_multi(joint: GaussianJoint) -> None:
    if joint.n < 2:
        raise DimensionMismatch(f"expected at least 2 blocks, got {joint.n}")


def _nonneg(value: int, what: str) -> int:
    if value < 0:
        raise InternalInconsistency(f"{what} evaluated to {value} < 0; rank tolerance is inconsistent")
    return value


def cid_pair(joint: GaussianJoint, tol: Tolerances | None = None) -> int:
    """``rank(S_X) + rank(S_Y) - rank(S)`` for a two-block joint."""
    _need_two(joint)
    tol = _tol(tol)
    d = (
        numeric_rank(joint.sigma_x, tol)
        + numeric_rank(joint.sigma_y, tol)
        - numeric_rank(joint.sigma, tol)
    )
    return _nonneg(d, "CID")


def cid_multi(joint: GaussianJoint, tol: Tolerances | None = None) -> int:
    """``sum_i rank(S_{-i}) - (n - 1) rank(S)``."""
    _need_multi(joint)
    tol = _tol(tol)
    total = sum(numeric_rank(joint.without(i), tol) for i in range(joint.n))
    return _nonneg(total - (joint.n - 1) * numeric_rank(joint.sigma, tol), "CID")


def rcid(joint: GaussianJoint, tol: Tolerances | None = None) -> int:
    """Renyi-dimension variant; coincides with :func:`cid_multi` for Gaussians."""
    return cid_multi(joint, tol)


def _reductions(joint: GaussianJoint, tol: Tolerances) -> list[np.ndarray]:
    return [row_space_basis(joint.marginal(i), tol) for i in range(joint.n)]


def gk_structure(joint: GaussianJoint, tol: Tolerances | None = None) -> GKStructure:
    _need_multi(joint)
    tol = _tol(tol)
    f = _reductions(joint, tol)
    red = block_diag(*f) if joint.dim else np.zeros((0, 0))
    s_red = red @ joint.sigma @ red.T
    dims = [b.shape[0] for b in f]
    o = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    rows = int(o[-1])
    cols = []
    for i in range(joint.n - 1):
        idx = np.arange(o[i], o[i + 2])
        c = np.zeros((rows, idx.size))
        c[idx, :] = s_red[np.ix_(idx, idx)]
        cols.append(c)
    tilde = np.hstack(cols) if cols else np.zeros((rows, 0))
    rank = numeric_rank(tilde, tol)
    null = null_space_basis(tilde, tol)
    return GKStructure(f, tilde, null, dims, rank)


def gkcid(joint: GaussianJoint, tol: Tolerances | None = None) -> int:
    """Number of rows minus the rank of the chained matrix of :class:`GKStructure`."""
    return _nonneg(gk_structure(joint, tol).dimension, "GKCID")


def construct_gk_w(joint: GaussianJoint, tol: Tolerances | None = None) -> CommonVariableSpec:
    """Shared variable extractable from every source individually.

    ``per_source_maps[i] = (-1)^i N_i F_i`` with 0-based ``i``.
    """
    tol = _tol(tol)
    gk = gk_structure(joint, tol)
    parts = gk.partition()
    maps = tuple(((-1) ** i) * parts[i] @ gk.f_bases[i] for i in range(joint.n))
    w = np.zeros((gk.dimension, joint.dim))
    w[:, joint.block_slice(0)] = maps[0]
    return CommonVariableSpec(
        mode="gk",
        block_dims=joint.block_dims,
        dimension=gk.dimension,
        w_matrix=w,
        per_source_maps=maps,
        reductions=tuple(gk.f_bases),
        reduced_maps=tuple(((-1) ** i) * parts[i] for i in range(joint.n)),
    )


def construct_w_pair(joint: GaussianJoint, tol: Tolerances | None = None) -> CommonVariableSpec:
    """Shared variable ``W = N_X X`` for a pair.

    Each marginal is first reduced to non-singular coordinates
    ``X' = F_X X``. With ``N = [a | b]`` a left null basis of the reduced joint
    covariance, ``N_X = a`` and ``N_Y = -b`` so that ``N_X X' = N_Y Y'``
    almost surely. ``complements`` holds bases of the orthogonal complements
    of ``N_X`` and ``N_Y`` (mapped back to original coordinates).
    """
    _need_two(joint)
    tol = _tol(tol)
    fx, fy = _reductions(joint, tol)
    red = block_diag(fx, fy)
    n = null_space_basis(red @ joint.sigma @ red.T, tol)
    rx = fx.shape[0]
    nx, ny = n[:, :rx], -n[:, rx:]
    d = cid_pair(joint, tol)
    if n.shape[0] != d:
        raise InternalInconsistency(
            f"null space has {n.shape[0]} rows but CID is {d}; rank tolerance is inconsistent"
        )
    cx = null_space_basis(nx.T, tol) if nx.size else np.eye(rx)
    cy = null_space_basis(ny.T, tol) if ny.size else np.eye(fy.shape[0])
    mx, my = nx @ fx, ny @ fy
    w = np.hstack([mx, np.zeros((d, joint.block_dims[1]))])
    return CommonVariableSpec(
        mode="pair",
        block_dims=joint.block_dims,
        dimension=d,
        w_matrix=w,
        per_source_maps=(mx, my),
        reductions=(fx, fy),
        reduced_maps=(nx, ny),
        complements=(cx @ fx, cy @ fy),
    )


def _embed(block: np.ndarray, joint: GaussianJoint, blocks: list[int]) -> np.ndarray:
    """Lift a map on ``X_blocks`` to a map on the stacked vector."""
    out = np.zeros((block.shape[0], joint.dim))
    out[:, joint.indices(blocks)] = block
    return out


def construct_w_multi(joint: GaussianJoint, tol: Tolerances | None = None) -> CommonVariableSpec:
    """Sequential construction of ``W = [Z_1, ..., Z_n]``.

    At step ``i`` the parts of ``X_i`` and of the later blocks that are
    determined by earlier blocks are removed (``A_i``, ``B_i``), and
    ``Z_i = N_i U_i`` collects what ``X_i`` shares with the later blocks,
    read from the left null space of the covariance of ``[U_i, Y_i]``
    conditioned on ``X_1, ..., X_{i-1}``.

    Raises
    ------
    InternalInconsistency
        The total dimension of ``Z`` disagrees with :func:`cid_multi`.
    """
    _need_multi(joint)
    tol = _tol(tol)
    n = joint.n
    a_b, b_b, u_m, y_m, nt, n_p, z_m, z_d = ([] for _ in range(8))
    for i in range(n):
        prev = list(range(i))
        rest = list(range(i + 1, n))
        a = row_space_basis(conditional_cov(joint, [i], prev, tol), tol)
        b = (
            row_space_basis(conditional_cov(joint, rest, prev, tol), tol)
            if rest
            else np.zeros((0, 0))
        )
        u = _embed(a, joint, [i])
        y = _embed(b, joint, rest) if rest else np.zeros((0, joint.dim))
        uy = np.vstack([u, y])
        given = _embed(np.eye(joint.indices(prev).size), joint, prev)
        s_uy = conditional_cov_linear(joint.sigma, uy, given, tol)
        null = null_space_basis(s_uy, tol) if uy.shape[0] else np.zeros((0, 0))
        ni = null[:, : a.shape[0]] if null.size else np.zeros((null.shape[0], a.shape[0]))
        a_b.append(a)
        b_b.append(b)
        u_m.append(u)
        y_m.append(y)
        nt.append(null)
        n_p.append(ni)
        z_m.append(ni @ u)
        z_d.append(int(ni.shape[0]))
    w = np.vstack(z_m)
    d = cid_multi(joint, tol)
    if sum(z_d) != d:
        raise InternalInconsistency(
            f"constructed W has dimension {sum(z_d)} but CID is {d}; rank tolerance is inconsistent"
        )
    c_b, t_m = [], []
    for i in range(n):
        sel = _embed(np.eye(joint.block_dims[i]), joint, [i])
        c = row_space_basis(conditional_cov_linear(joint.sigma, sel, w, tol), tol)
        c_b.append(c)
        t_m.append(c @ sel)
    t = np.vstack(t_m)
    trace = AlgorithmOneTrace(
        a_bases=a_b,
        b_bases=b_b,
        u_maps=u_m,
        y_maps=y_m,
        null_bases=nt,
        n_parts=n_p,
        z_maps=z_m,
        z_dims=z_d,
        c_bases=c_b,
        t_maps=t_m,
        sigma_z=w @ joint.sigma @ w.T,
        sigma_t_given_z=conditional_cov_linear(joint.sigma, t, w, tol),
    )
    return CommonVariableSpec(
        mode="multi", block_dims=joint.block_dims, dimension=d, w_matrix=w, trace=trace
    )
