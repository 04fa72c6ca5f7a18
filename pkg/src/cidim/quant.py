"""Common information of uniformly quantized Gaussian pairs.

``<X>_m = floor(m X) / m`` coordinatewise. Exact cell probabilities are
summed over a grid truncated at ``truncation`` standard deviations; for 2-d
blocks whose grid exceeds ``max_cells`` nodes the high-resolution expansion
``H = d log2 m + h(X + U)`` is used instead, with ``U`` uniform on a cell and
``h(X + U)`` approximated by the Gaussian of covariance ``S + I / (12 m^2)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import ndtr

from .bvn import bvnu
from .errors import (
    BlockTooLarge,
    DegenerateVarianceWarning,
    DimensionMismatch,
    NotPairDecomposable,
    SingularBlock,
)
from .linalg import GaussianJoint, Tolerances, _tol
from .wyner import wyner_bits

__all__ = [
    "QuantGrid",
    "PairDecomposition",
    "EqualGroup",
    "CorrelatedPair",
    "QuantReport",
    "quantize",
    "entropy_quantized_1d",
    "entropy_quantized_2d",
    "entropy_highres",
    "decompose_pairs",
    "quant_bounds",
]

LOG2_2PIE = math.log2(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class QuantGrid:
    """Truncation and size limits for exact cell summation."""

    truncation: float = 8.0
    max_cells: int = 2**25

    def __post_init__(self) -> None:
        if not self.truncation > 0:
            raise ValueError("truncation must be positive")
        if self.max_cells < 1:
            raise ValueError("max_cells must be positive")


DEFAULT_GRID = QuantGrid()


def quantize(x: np.ndarray, m: float) -> np.ndarray:
    return np.floor(m * np.asarray(x, dtype=float)) / m


def _entropy_bits(p: np.ndarray) -> float:
    p = p[p > 0]
    return -math.fsum(p * np.log2(p))


def _edges(std: float, m: float, trunc: float) -> np.ndarray:
    """Standardized cell boundaries ``j / (m std)`` covering ``+-trunc`` std."""
    lo = math.floor(-trunc * std * m)
    hi = math.ceil(trunc * std * m)
    return np.arange(lo, hi + 1, dtype=float) / (m * std)


def _cells_1d(z: np.ndarray) -> np.ndarray:
    # upper tail differences taken from the survival side to keep precision
    left, right = z[:-1], z[1:]
    neg = right <= 0
    return np.where(neg, ndtr(right) - ndtr(left), ndtr(-left) - ndtr(-right))


@lru_cache(maxsize=4096)
def _h1(variance: float, m: float, trunc: float) -> tuple[float, float]:
    z = _edges(math.sqrt(variance), m, trunc)
    p = _cells_1d(z)
    captured = math.fsum(p)
    return _entropy_bits(p / captured), captured


def entropy_quantized_1d(variance: float, m: float, grid: QuantGrid = DEFAULT_GRID, tol: Tolerances | None = None) -> float:
    """Entropy in bits of ``<X>_m`` for ``X ~ N(0, variance)``."""
    tol = _tol(tol)
    if not m > 0:
        raise ValueError(f"m must be positive, got {m!r}")
    if variance < 0:
        raise DimensionMismatch(f"variance must be non-negative, got {variance!r}")
    if variance <= tol.rank_tol:
        warnings.warn(
            f"variance {variance:.3e} treated as zero; quantized entropy set to 0",
            DegenerateVarianceWarning,
            stacklevel=2,
        )
        return 0.0
    return _h1(float(variance), float(m), float(grid.truncation))[0]


def _quadrant_cells(zx: np.ndarray, zy: np.ndarray, rho: float, chunk: int = 1 << 21) -> np.ndarray:
    """Cell probabilities for the grid ``zx x zy`` lying in one closed quadrant.

    ``zx``, ``zy`` are boundaries in increasing order that do not straddle 0.
    Each quadrant is reflected so that its far corner sits in the upper
    orthant, making all corner probabilities small in the tails.
    """
    sx = 1.0 if zx[0] >= 0 else -1.0
    sy = 1.0 if zy[0] >= 0 else -1.0
    ux = sx * zx
    uy = sy * zy
    r = sx * sy * rho
    rows = max(1, chunk // max(uy.size, 1))
    g = np.empty((ux.size, uy.size))
    for i in range(0, ux.size, rows):
        hh, kk = np.meshgrid(ux[i:i + rows], uy, indexing="ij")
        g[i:i + rows] = bvnu(hh, kk, r)
    cells = g[:-1, :-1] - g[1:, :-1] - g[:-1, 1:] + g[1:, 1:]
    # orientation sign cancels: reflected differences are all +-cells
    return np.abs(cells)


def _cells_2d(zx: np.ndarray, zy: np.ndarray, rho: float) -> np.ndarray:
    parts = []
    for xs in (zx[zx <= 0], zx[zx >= 0]):
        if xs.size < 2:
            continue
        for ys in (zy[zy <= 0], zy[zy >= 0]):
            if ys.size < 2:
                continue
            parts.append(_quadrant_cells(xs, ys, rho).ravel())
    return np.concatenate(parts)


@lru_cache(maxsize=512)
def _h2(a: float, b: float, c: float, m: float, trunc: float) -> tuple[float, float]:
    sx, sy = math.sqrt(a), math.sqrt(b)
    rho = c / (sx * sy)
    p = _cells_2d(_edges(sx, m, trunc), _edges(sy, m, trunc), rho)
    captured = math.fsum(p)
    return _entropy_bits(p / captured), captured


def entropy_highres(cov: np.ndarray, m: float) -> float:
    """``d log2 m + 1/2 log2((2 pi e)^d det(S + I / (12 m^2)))``."""
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    sign, logdet = np.linalg.slogdet(cov + np.eye(d) / (12.0 * m * m))
    if sign <= 0:
        raise SingularBlock("covariance is singular")
    return d * math.log2(m) + 0.5 * (d * LOG2_2PIE + logdet / math.log(2.0))


def grid_nodes_2d(cov2: np.ndarray, m: float, grid: QuantGrid = DEFAULT_GRID) -> int:
    cov2 = np.asarray(cov2, dtype=float)
    nx = _edges(math.sqrt(cov2[0, 0]), m, grid.truncation).size
    ny = _edges(math.sqrt(cov2[1, 1]), m, grid.truncation).size
    return nx * ny


def entropy_quantized_2d(
    cov2: np.ndarray, m: float, grid: QuantGrid = DEFAULT_GRID, tol: Tolerances | None = None
) -> float:
    """Entropy in bits of ``<(X_1, X_2)>_m`` for a non-degenerate 2x2 covariance.

    Raises
    ------
    SingularBlock
        ``|rho|`` within ``one_tol`` of 1 or a vanishing variance.
    """
    tol = _tol(tol)
    cov2 = np.asarray(cov2, dtype=float)
    if cov2.shape != (2, 2):
        raise DimensionMismatch(f"expected a 2x2 covariance, got shape {cov2.shape}")
    if not m > 0:
        raise ValueError(f"m must be positive, got {m!r}")
    a, b = float(cov2[0, 0]), float(cov2[1, 1])
    c = 0.5 * float(cov2[0, 1] + cov2[1, 0])
    if a <= tol.rank_tol or b <= tol.rank_tol:
        raise SingularBlock("2x2 block has a vanishing variance; reduce it to 1-d first")
    rho = c / math.sqrt(a * b)
    if abs(rho) >= 1.0 - tol.one_tol:
        raise SingularBlock(f"2x2 block is perfectly correlated (rho={rho:.12g}); reduce it to 1-d first")
    if grid_nodes_2d(cov2, m, grid) > grid.max_cells:
        return entropy_highres(np.array([[a, c], [c, b]]), m)
    return _h2(a, b, c, float(m), float(grid.truncation))[0]


@dataclass(frozen=True, eq=False)
class EqualGroup:
    """Coordinates with ``X_g = S Y_g`` almost surely, ``S`` a signed permutation."""

    x_coords: tuple[int, ...]
    y_coords: tuple[int, ...]
    signs: tuple[int, ...]
    cov: np.ndarray


@dataclass(frozen=True)
class CorrelatedPair:
    x_coord: int
    y_coord: int
    var_x: float
    var_y: float
    rho: float


@dataclass(frozen=True, eq=False)
class PairDecomposition:
    """Split of a pair into mutually independent parts.

    ``equal_groups`` are connected components of the covariance graph whose
    ``X`` and ``Y`` coordinates coincide up to sign; ``correlated_pairs`` are
    scalar pairs with ``|rho| < 1``; ``one_sided`` lists coordinates that are
    independent of the other side (they contribute nothing to either bound).
    """

    equal_groups: list[EqualGroup]
    correlated_pairs: list[CorrelatedPair]
    one_sided: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)

    def covered(self) -> tuple[set[int], set[int]]:
        xs, ys = set(), set()
        for g in self.equal_groups:
            xs.update(g.x_coords)
            ys.update(g.y_coords)
        for p in self.correlated_pairs:
            xs.add(p.x_coord)
            ys.add(p.y_coord)
        for side, coords in self.one_sided:
            (xs if side == "x" else ys).update(coords)
        return xs, ys


def _match_rows(sig: np.ndarray, xi: list[int], yi: list[int], thr: float) -> Optional[tuple[list[int], list[int]]]:
    """Bijection ``x -> y`` with ``Sigma[x, :] = +-Sigma[y, :]``, if one exists."""
    used: set[int] = set()
    order, signs = [], []
    for x in xi:
        found = None
        for y in yi:
            if y in used:
                continue
            for s in (1, -1):
                if np.max(np.abs(sig[x] - s * sig[y])) <= thr:
                    found = (y, s)
                    break
            if found:
                break
        if found is None:
            return None
        used.add(found[0])
        order.append(found[0])
        signs.append(found[1])
    return order, signs


def decompose_pairs(joint: GaussianJoint, tol: Tolerances | None = None) -> PairDecomposition:
    """Detect a.s.-equal coordinate groups and independent scalar pairs.

    Equality ``X_a = +-Y_b`` is certified by equal rows of the joint
    covariance. Independence across parts is the absence of covariance-graph
    edges above ``rank_tol`` times the largest variance.

    Raises
    ------
    NotPairDecomposable
        Some component is neither an equal group nor a scalar pair.
    """
    tol = _tol(tol)
    if joint.n != 2:
        raise DimensionMismatch(f"expected exactly 2 blocks, got {joint.n}")
    sig = joint.sigma
    dx = joint.block_dims[0]
    scale = float(np.max(np.diag(sig))) if sig.size else 0.0
    thr = tol.rank_tol * max(scale, np.finfo(float).tiny)
    adj = (np.abs(sig) > thr).astype(int)
    np.fill_diagonal(adj, 0)
    ncomp, labels = connected_components(csr_matrix(adj), directed=False)
    comps = [np.flatnonzero(labels == c) for c in range(ncomp)]
    comps.sort(key=lambda c: int(c[0]))
    groups: list[EqualGroup] = []
    pairs: list[CorrelatedPair] = []
    lone_x: list[int] = []
    lone_y: list[int] = []
    one_sided: list[tuple[str, tuple[int, ...]]] = []
    for comp in comps:
        xi = [int(i) for i in comp if i < dx]
        yi = [int(i) for i in comp if i >= dx]
        if not yi or not xi:
            side, coords = ("x", xi) if xi else ("y", [i - dx for i in yi])
            if len(coords) == 1:
                (lone_x if side == "x" else lone_y).append(coords[0])
            else:
                one_sided.append((side, tuple(coords)))
            continue
        if len(xi) == len(yi):
            match = _match_rows(sig, xi, yi, 32.0 * thr)
            if match is not None:
                order, signs = match
                groups.append(
                    EqualGroup(
                        tuple(xi),
                        tuple(y - dx for y in order),
                        tuple(signs),
                        sig[np.ix_(xi, xi)].copy(),
                    )
                )
                continue
        if len(xi) == 1 and len(yi) == 1:
            a, b, c = sig[xi[0], xi[0]], sig[yi[0], yi[0]], sig[xi[0], yi[0]]
            rho = float(c / math.sqrt(a * b))
            if abs(rho) >= 1.0 - tol.one_tol:
                groups.append(EqualGroup((xi[0],), (yi[0] - dx,), (1 if rho > 0 else -1,), np.array([[a]])))
            else:
                pairs.append(CorrelatedPair(xi[0], yi[0] - dx, float(a), float(b), rho))
            continue
        raise NotPairDecomposable(
            f"coordinates X{xi} / Y{[y - dx for y in yi]} form a dependent component that is "
            "neither an a.s.-equal group nor a scalar pair"
        )
    for x, y in zip(lone_x, lone_y):
        pairs.append(CorrelatedPair(x, y, float(sig[x, x]), float(sig[dx + y, dx + y]), 0.0))
    if len(lone_x) > len(lone_y):
        one_sided.extend(("x", (x,)) for x in lone_x[len(lone_y):])
    elif len(lone_y) > len(lone_x):
        one_sided.extend(("y", (y,)) for y in lone_y[len(lone_x):])
    pairs.sort(key=lambda p: p.x_coord)
    return PairDecomposition(groups, pairs, one_sided)


@dataclass(frozen=True, eq=False)
class QuantReport:
    m: float
    lower_bits: float
    upper_bits: float
    ratio_lower: Optional[float]
    ratio_upper: Optional[float]
    decomposition: PairDecomposition
    methods: tuple[str, ...] = ()


def _group_entropy(cov: np.ndarray, m: float, grid: QuantGrid, tol: Tolerances) -> tuple[float, str]:
    d = cov.shape[0]
    if d == 1:
        return entropy_quantized_1d(float(cov[0, 0]), m, grid, tol), "exact"
    if d == 2:
        method = "exact" if grid_nodes_2d(cov, m, grid) <= grid.max_cells else "highres"
        return entropy_quantized_2d(cov, m, grid, tol), method
    raise BlockTooLarge(f"equal group of dimension {d} exceeds the supported maximum of 2")


def _pair_mi(p: CorrelatedPair, m: float, grid: QuantGrid, tol: Tolerances) -> tuple[float, str]:
    if p.rho == 0.0:
        return 0.0, "exact"
    hx = entropy_quantized_1d(p.var_x, m, grid, tol)
    hy = entropy_quantized_1d(p.var_y, m, grid, tol)
    c = p.rho * math.sqrt(p.var_x * p.var_y)
    cov = np.array([[p.var_x, c], [c, p.var_y]])
    method = "exact" if grid_nodes_2d(cov, m, grid) <= grid.max_cells else "highres"
    hxy = entropy_quantized_2d(cov, m, grid, tol)
    return max(hx + hy - hxy, 0.0), method


def quant_bounds(
    joint: GaussianJoint, m: float, grid: QuantGrid = DEFAULT_GRID, tol: Tolerances | None = None
) -> QuantReport:
    """Lower bound ``I(<X>_m; <Y>_m)`` and upper bound
    ``sum_groups H(<X_g>_m) + sum_pairs C(X_i, Y_i)``.

    Ratios divide by ``log2 m`` and are ``None`` for ``m <= 1``.
    """
    tol = _tol(tol)
    if not m > 0:
        raise ValueError(f"m must be positive, got {m!r}")
    dec = decompose_pairs(joint, tol)
    shared = []
    methods = []
    for g in dec.equal_groups:
        h, how = _group_entropy(g.cov, m, grid, tol)
        shared.append(h)
        methods.append(how)
    mi, ci = [], []
    for p in dec.correlated_pairs:
        v, how = _pair_mi(p, m, grid, tol)
        mi.append(v)
        methods.append(how)
        ci.append(wyner_bits([abs(p.rho)]))
    lower = math.fsum(shared) + math.fsum(mi)
    upper = math.fsum(shared) + math.fsum(ci)
    lg = math.log2(m)
    rl = lower / lg if m > 1 else None
    ru = upper / lg if m > 1 else None
    return QuantReport(float(m), lower, upper, rl, ru, dec, tuple(methods))
