"""Sampling harness, structural checks and planted instances with known CID."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cid import AlgorithmOneTrace, CommonVariableSpec
from .errors import DimensionMismatch, InfeasibleDims
from .linalg import (
    GaussianJoint,
    Tolerances,
    _tol,
    conditional_cov_linear,
    numeric_rank,
    psd_pinv,
    validate_covariance,
)

__all__ = [
    "SampleBatch",
    "StructuredInstance",
    "Alg1Report",
    "sample_joint",
    "check_as_relation",
    "check_lemma_cond",
    "check_alg1_lemmas",
    "linear_predictor",
    "make_structured_instance",
    "make_subset_instance",
    "spawn_seeds",
]


@dataclass(frozen=True, eq=False)
class SampleBatch:
    samples: np.ndarray
    seed: Optional[int]
    count: int
    block_dims: tuple[int, ...]

    def block(self, i: int) -> np.ndarray:
        o = np.concatenate([[0], np.cumsum(self.block_dims)]).astype(int)
        return self.samples[:, o[i]:o[i + 1]]


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Child seeds derived from ``seed``; independent of how they are consumed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def sample_joint(
    joint: GaussianJoint, count: int, seed: Optional[int] = None, tol: Tolerances | None = None
) -> SampleBatch:
    """Draw ``count`` samples using an eigendecomposition factor of ``Sigma``.

    Eigenvalues at or below ``rank_tol`` times the largest are dropped, so
    samples lie exactly in the numerical range and almost-sure relations hold
    to rounding error.
    """
    tol = _tol(tol)
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    lam, q = np.linalg.eigh(joint.sigma)
    lmax = max(float(lam[-1]), 0.0) if lam.size else 0.0
    keep = lam > tol.rank_tol * lmax if lmax > 0 else np.zeros_like(lam, dtype=bool)
    factor = q * np.where(keep, np.sqrt(np.clip(lam, 0.0, None)), 0.0)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, joint.dim))
    return SampleBatch(z @ factor.T, seed, count, joint.block_dims)


def check_as_relation(
    batch: SampleBatch, left_map: np.ndarray, right_map: np.ndarray, tol: Tolerances | None = None
) -> float:
    """Largest residual of ``left_map x - right_map x`` over the batch,
    relative to the typical size of the two sides.

    Both maps act on the stacked sample vector.
    """
    tol = _tol(tol)
    left_map = np.atleast_2d(left_map)
    right_map = np.atleast_2d(right_map)
    if left_map.shape != right_map.shape or left_map.shape[1] != batch.samples.shape[1]:
        raise DimensionMismatch("relation maps must share a shape matching the stacked samples")
    if left_map.shape[0] == 0:
        return 0.0
    lv = batch.samples @ left_map.T
    rv = batch.samples @ right_map.T
    scale = max(float(np.max(np.abs(lv))), float(np.max(np.abs(rv))), np.finfo(float).tiny)
    return float(np.max(np.abs(lv - rv))) / scale


def linear_predictor(
    joint: GaussianJoint, target_map: np.ndarray, given_blocks: Sequence[int], tol: Tolerances | None = None
) -> np.ndarray:
    """Map on the stacked vector giving ``E[target_map X | X_given]``.

    When ``target_map X`` is a linear function of the given blocks almost
    surely, the two maps agree on every sample.
    """
    tol = _tol(tol)
    target_map = np.atleast_2d(target_map)
    idx = joint.indices(list(given_blocks))
    out = np.zeros_like(target_map, dtype=float)
    if idx.size:
        s = joint.sigma
        out[:, idx] = target_map @ s[:, idx] @ psd_pinv(s[np.ix_(idx, idx)], tol)
    return out


def _full_rank(m: np.ndarray, tol: Tolerances) -> bool:
    return numeric_rank(m, tol) == m.shape[0]


def check_lemma_cond(joint: GaussianJoint, spec: CommonVariableSpec, tol: Tolerances | None = None) -> bool:
    """Conditioned on ``W``, the complementary parts ``[N'_X X; N'_Y Y]`` have a
    non-singular covariance."""
    tol = _tol(tol)
    if spec.complements is None:
        raise DimensionMismatch("spec carries no complement bases")
    cx, cy = spec.complements
    dx, dy = joint.block_dims
    target = np.vstack([
        np.hstack([cx, np.zeros((cx.shape[0], dy))]),
        np.hstack([np.zeros((cy.shape[0], dx)), cy]),
    ])
    if target.shape[0] == 0:
        return True
    cond = conditional_cov_linear(joint.sigma, target, spec.w_matrix, tol)
    return _full_rank(cond, tol)


@dataclass(frozen=True)
class Alg1Report:
    z_full_rank: bool
    t_given_z_full_rank: bool
    z_determined_by_rest: bool
    z_rest_residuals: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.z_full_rank and self.t_given_z_full_rank and self.z_determined_by_rest


def check_alg1_lemmas(
    trace: AlgorithmOneTrace, joint: GaussianJoint, tol: Tolerances | None = None
) -> Alg1Report:
    """(i) ``Sigma_Z`` full rank, (ii) ``Sigma_{T|Z}`` full rank, (iii) each ``Z_i``
    has vanishing conditional variance given ``X_{-i}``."""
    tol = _tol(tol)
    w = trace.w_map
    z_ok = w.shape[0] == 0 or _full_rank(trace.sigma_z, tol)
    t_ok = trace.sigma_t_given_z.shape[0] == 0 or _full_rank(trace.sigma_t_given_z, tol)
    res = []
    for i, z in enumerate(trace.z_maps):
        if z.shape[0] == 0:
            res.append(0.0)
            continue
        rest = joint.indices([j for j in range(joint.n) if j != i])
        given = np.eye(joint.dim)[rest]
        cv = conditional_cov_linear(joint.sigma, z, given, tol)
        var = float(np.max(np.diag(z @ joint.sigma @ z.T)))
        res.append(float(np.max(np.abs(cv))) / var if var > 0 else 0.0)
    return Alg1Report(bool(z_ok), bool(t_ok), all(r < tol.as_tol for r in res), tuple(res))


@dataclass(frozen=True, eq=False)
class StructuredInstance:
    """Planted model ``X_i = G_i [S; E_i]`` with shared ``S``.

    ``G_i`` has full column rank, so ``S`` is recoverable from every block,
    and the private parts ``E_i`` are mutually independent; the CID equals
    ``shared_dim``. The marginal of ``X_i`` is singular whenever
    ``shared_dim + private_dims[i] < d_i``.
    """

    joint: GaussianJoint
    true_cid: int
    mixing: tuple[np.ndarray, ...]
    shared_dim: int
    private_dims: tuple[int, ...]
    seed: int
    construction: dict = field(default_factory=dict)


def _full_col_rank(rng: np.random.Generator, rows: int, cols: int, tol: Tolerances) -> np.ndarray:
    for _ in range(100):
        g = rng.standard_normal((rows, cols))
        if numeric_rank(g, tol) == cols:
            return g
    raise InfeasibleDims(f"could not draw a full-column-rank {rows}x{cols} matrix")


def make_structured_instance(
    n: int,
    dims: Sequence[int],
    shared_dim: int,
    seed: int,
    private_dims: Optional[Sequence[int]] = None,
    tol: Tolerances | None = None,
) -> StructuredInstance:
    """Random instance whose CID is ``shared_dim`` by construction.

    ``private_dims[i]`` defaults to a random value in ``[0, d_i - shared_dim]``,
    which makes some marginals singular.

    Raises
    ------
    InfeasibleDims
        Inconsistent ``dims`` / ``shared_dim`` / ``private_dims``.
    """
    tol = _tol(tol)
    dims = [int(d) for d in dims]
    if n < 2 or len(dims) != n:
        raise InfeasibleDims(f"need n >= 2 block dimensions, got n={n}, dims={dims}")
    if shared_dim < 0 or shared_dim > min(dims):
        raise InfeasibleDims(f"shared_dim={shared_dim} must lie in [0, min(dims)={min(dims)}]")
    rng = np.random.default_rng(seed)
    if private_dims is None:
        private_dims = [int(rng.integers(0, d - shared_dim + 1)) for d in dims]
    private_dims = [int(p) for p in private_dims]
    if len(private_dims) != n or any(p < 0 or shared_dim + p > d for p, d in zip(private_dims, dims)):
        raise InfeasibleDims(f"private dims {private_dims} do not fit in {dims} with shared {shared_dim}")
    for _ in range(50):
        mixing = [_full_col_rank(rng, d, shared_dim + p, tol) for d, p in zip(dims, private_dims)]
        total = shared_dim + sum(private_dims)
        # latent L = [S, E_1, ..., E_n] ~ N(0, I); X_i = G_i [S; E_i]
        lift = np.zeros((sum(dims), total))
        r, c = 0, shared_dim
        for g, d, p in zip(mixing, dims, private_dims):
            lift[r:r + d, :shared_dim] = g[:, :shared_dim]
            lift[r:r + d, c:c + p] = g[:, shared_dim:]
            r += d
            c += p
        sigma = lift @ lift.T
        joint = validate_covariance(sigma, dims, tol)
        ranks_ok = numeric_rank(sigma, tol) == total and all(
            numeric_rank(joint.marginal(i), tol) == shared_dim + private_dims[i] for i in range(n)
        )
        if ranks_ok:
            return StructuredInstance(
                joint=joint,
                true_cid=shared_dim,
                mixing=tuple(mixing),
                shared_dim=shared_dim,
                private_dims=tuple(private_dims),
                seed=int(seed),
                construction={"lift": lift},
            )
    raise InfeasibleDims("could not draw a generic instance with the requested ranks")


def make_subset_instance(
    dims: Sequence[int], groups: Sequence[tuple[Sequence[int], int]], seed: int, tol: Tolerances | None = None
) -> GaussianJoint:
    """Latent sources shared by arbitrary subsets of blocks.

    ``groups`` lists ``(blocks, dimension)``: a latent source of that
    dimension observed (through a random mixing) by each listed block. Each
    block's mixing is full column rank when ``sum of its latent dimensions``
    does not exceed its size.
    """
    tol = _tol(tol)
    rng = np.random.default_rng(seed)
    n = len(dims)
    total = sum(d for _, d in groups)
    lift = np.zeros((sum(dims), total))
    offs = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    per_block: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    c = 0
    for blocks, d in groups:
        for b in blocks:
            per_block[b].append((c, d))
        c += d
    for b in range(n):
        cols = [i for c0, d in per_block[b] for i in range(c0, c0 + d)]
        if not cols:
            continue
        g = rng.standard_normal((dims[b], len(cols)))
        lift[offs[b]:offs[b + 1], cols] = g
    return validate_covariance(lift @ lift.T, dims, tol)
