"""Approximate common information under a Frobenius-norm budget.

The problem is solved over the restricted family that keeps the target's
marginals and canonical directions and moves only the canonical
correlations. In that family it reduces to

    minimize   f(rho) = 1/2 sum log2((1 + rho_i) / (1 - rho_i))
    subject to ||rho - sigma||_2 <= b,  0 <= rho_i <= 1 - one_tol,

which is convex on [0, 1). Every solution carries a closed-form lower bound
and an explicit achievable point as certificates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, InfeasibleBudget, InternalInconsistency, NonConvergenceWarning
from .linalg import CanonicalSpectrum, GaussianJoint, Tolerances, _tol, canonical_spectrum, validate_covariance
from .wyner import LN2, wyner_bits

__all__ = [
    "ApproxSolution",
    "achievable_rho",
    "lower_bound_closed_form",
    "project_ball_box",
    "solve_reduced",
    "approx_ci",
    "approx_ratio",
]

SpectrumLike = Union[CanonicalSpectrum, Sequence[float], np.ndarray]

MAX_ITER = 20000
SHRINK = 0.9
MAX_SHRINK = 60


@dataclass(frozen=True, eq=False)
class ApproxSolution:
    epsilon: float
    sv_budget: float
    sigma_vals: np.ndarray
    rho_star: np.ndarray
    ci_bits: float
    lower_bound_bits: float
    achievable_bits: float
    ratio: Optional[float]
    converged: bool
    iterations: int
    frobenius_distance: Optional[float] = None


def _sigma(spectrum: SpectrumLike) -> np.ndarray:
    if isinstance(spectrum, CanonicalSpectrum):
        return np.array(spectrum.sigma_vals, dtype=float)
    s = np.asarray(spectrum, dtype=float).ravel()
    if np.any(s < 0) or np.any(s > 1):
        raise DimensionMismatch("singular values must lie in [0, 1]")
    return s


def _ratio(bits: float, eps: float) -> Optional[float]:
    if eps >= 1.0:
        return None
    return bits / (0.5 * math.log2(1.0 / eps))


def achievable_rho(spectrum: SpectrumLike, budget: float, tol: Tolerances | None = None) -> np.ndarray:
    """Spend the whole budget evenly on the unit correlations: ``1 - b / sqrt(k)``."""
    s = _sigma(spectrum)
    unit = s == 1.0
    k = int(unit.sum())
    out = s.copy()
    if k:
        out[unit] = 1.0 - budget / math.sqrt(k)
    return out


def lower_bound_closed_form(spectrum: SpectrumLike, budget: float, tol: Tolerances | None = None) -> float:
    """``(k/2) log2(sqrt(k) / b)``, the optimum of the problem relaxed to the
    unit coordinates with ``1 + rho`` dropped; floored at 0."""
    s = _sigma(spectrum)
    k = int((s == 1.0).sum())
    if k == 0:
        return 0.0
    return max(0.0, 0.5 * k * math.log2(math.sqrt(k) / budget))


def project_ball_box(
    x: np.ndarray,
    center: np.ndarray,
    radius: float,
    upper: float,
    lower: float = 0.0,
    iters: int = 200,
) -> np.ndarray:
    """Euclidean projection onto ``{z : ||z - center|| <= radius, lower <= z <= upper}``.

    The minimizer has the form ``clip((1 - t) x + t center)`` for the
    smallest ``t`` in ``[0, 1]`` meeting the ball constraint; ``t`` is found by
    bisection.

    Raises
    ------
    InfeasibleBudget
        The intersection is empty.
    """
    def z(t: float) -> np.ndarray:
        return np.clip((1.0 - t) * x + t * center, lower, upper)

    z0 = z(0.0)
    if np.linalg.norm(z0 - center) <= radius:
        return z0
    if np.linalg.norm(z(1.0) - center) > radius:
        raise InfeasibleBudget(
            f"budget {radius:.3e} cannot reach the box [{lower}, {upper}] from the target"
        )
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(z(mid) - center) > radius:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-17:
            break
    return z(hi)


# The solver works on gaps delta = 1 - rho: near rho = 1 the gap carries
# all the information and would lose its relative precision if formed as
# 1 - rho from a stored rho.

def _bits_gap(delta: np.ndarray) -> float:
    rho = 1.0 - delta
    small = rho < 0.5
    terms = np.where(
        small,
        np.arctanh(np.where(small, rho, 0.0)),
        0.5 * (np.log(2.0 - delta) - np.log(np.where(small, 1.0, delta))),
    )
    return float(math.fsum(terms)) / LN2


def _grad_gap(delta: np.ndarray) -> np.ndarray:
    return -1.0 / (LN2 * delta * (2.0 - delta))


def solve_reduced(
    spectrum: SpectrumLike,
    budget: float,
    tol: Tolerances | None = None,
    max_iter: int = MAX_ITER,
) -> ApproxSolution:
    """Projected gradient with backtracking, started at :func:`achievable_rho`.

    Stops when an accepted step decreases the objective by less than
    ``solver_tol``. On hitting ``max_iter`` the best iterate is returned with
    ``converged=False`` and a :class:`NonConvergenceWarning`.
    """
    tol = _tol(tol)
    if not budget > 0:
        raise InfeasibleBudget(f"budget must be positive, got {budget!r}")
    s = _sigma(spectrum)
    c = 1.0 - s
    unit = s == 1.0
    k = int(unit.sum())
    lower_cert = lower_bound_closed_form(s, budget)
    g0 = c.copy()
    if k:
        g0[unit] = budget / math.sqrt(k)
    g0 = np.clip(g0, tol.one_tol, 1.0)
    ach_bits = _bits_gap(g0)

    def done(gap: np.ndarray, bits: float, ok: bool, it: int) -> ApproxSolution:
        if np.any(gap < c - 1e-15):
            raise InternalInconsistency("optimizer moved a correlation above its target value")
        gap = np.maximum(gap, c)
        if not (lower_cert <= bits + tol.solver_tol and bits <= ach_bits + tol.solver_tol):
            raise InternalInconsistency(
                f"certificate violated: lower {lower_cert:.12g}, value {bits:.12g}, "
                f"achievable {ach_bits:.12g}"
            )
        return ApproxSolution(
            epsilon=float(budget),
            sv_budget=float(budget),
            sigma_vals=s,
            rho_star=1.0 - gap,
            ci_bits=bits,
            lower_bound_bits=lower_cert,
            achievable_bits=ach_bits,
            ratio=_ratio(bits, budget),
            converged=ok,
            iterations=it,
        )

    if s.size == 0 or not np.any(s > 0) or np.linalg.norm(s) <= budget:
        return done(np.ones_like(s), 0.0, True, 0)
    if k and budget < math.sqrt(k) * tol.one_tol:
        raise InfeasibleBudget(
            f"budget {budget:.3e} is below sqrt(k) * one_tol; no feasible point keeps rho < 1 - one_tol"
        )

    x = project_ball_box(g0, c, budget, 1.0, tol.one_tol)
    f = _bits_gap(x)
    if f > ach_bits:
        x, f = g0, ach_bits
    g = _grad_gap(x)
    curv = 2.0 * (1.0 - x) / (LN2 * (x * (2.0 - x)) ** 2)
    step = 1.0 / max(float(np.max(curv)), 1.0)
    for it in range(1, max_iter + 1):
        t = step
        while True:
            xn = project_ball_box(x - t * g, c, budget, 1.0, tol.one_tol)
            d = xn - x
            fn = _bits_gap(xn)
            if fn <= f + float(g @ d) + float(d @ d) / (2.0 * t) or t < 1e-300:
                break
            t *= 0.5
        decrease = f - fn
        if decrease < tol.solver_tol:
            if decrease > 0:
                x, f = xn, fn
            return done(x, f, True, it)
        gn = _grad_gap(xn)
        sy = float(d @ (gn - g))
        step = float(d @ d) / sy if sy > 0 else 2.0 * t
        x, f, g = xn, fn, gn
    warnings.warn(
        f"reduced solver hit the iteration cap ({max_iter}); returning best iterate",
        NonConvergenceWarning,
        stacklevel=2,
    )
    return done(x, f, False, max_iter)


def _sv_budget(joint: GaussianJoint, epsilon: float) -> float:
    # ||S_X^{1/2} U D V^T S_Y^{1/2}||_F <= ||S_X^{1/2}||_2 ||D||_F ||S_Y^{1/2}||_2,
    # and the cross block appears twice in the joint.
    lx = max(float(np.linalg.eigvalsh(joint.sigma_x)[-1]), 0.0)
    ly = max(float(np.linalg.eigvalsh(joint.sigma_y)[-1]), 0.0)
    scale = math.sqrt(2.0) * math.sqrt(lx) * math.sqrt(ly)
    return epsilon / scale if scale > 0 else math.inf


def approx_ci(joint: GaussianJoint, epsilon: float, tol: Tolerances | None = None) -> ApproxSolution:
    """Smallest Wyner information within Frobenius distance ``epsilon`` of the
    target, over joints sharing its marginals and canonical directions.

    The singular-value budget is derived from ``epsilon`` by an operator-norm
    bound and then verified against the reconstructed covariance, shrinking
    by a factor 0.9 if the direct check fails.
    """
    tol = _tol(tol)
    if joint.n != 2:
        raise DimensionMismatch(f"expected exactly 2 blocks, got {joint.n}")
    if not epsilon > 0:
        raise InfeasibleBudget(f"epsilon must be positive, got {epsilon!r}")
    spec = canonical_spectrum(joint, tol)
    b = _sv_budget(joint, epsilon)
    if not math.isfinite(b):
        b = max(1.0, float(np.linalg.norm(spec.sigma_vals)))
    for _ in range(MAX_SHRINK):
        sol = solve_reduced(spec, b, tol)
        sxy = spec.cross_covariance(sol.rho_star)
        hat = np.block([[joint.sigma_x, sxy], [sxy.T, joint.sigma_y]])
        dist = float(np.linalg.norm(joint.sigma - hat))
        if dist <= epsilon:
            validate_covariance(hat, joint.block_dims, tol)
            return ApproxSolution(
                epsilon=float(epsilon),
                sv_budget=b,
                sigma_vals=sol.sigma_vals,
                rho_star=sol.rho_star,
                ci_bits=sol.ci_bits,
                lower_bound_bits=sol.lower_bound_bits,
                achievable_bits=sol.achievable_bits,
                ratio=_ratio(sol.ci_bits, epsilon),
                converged=sol.converged,
                iterations=sol.iterations,
                frobenius_distance=dist,
            )
        b *= SHRINK
    raise InfeasibleBudget(f"could not meet the Frobenius budget {epsilon:g} after {MAX_SHRINK} shrinks")


def approx_ratio(joint: GaussianJoint, epsilon: float, tol: Tolerances | None = None) -> Optional[float]:
    return approx_ci(joint, epsilon, tol).ratio
