"""Datasets behind the numerical evaluation figures, as plain tables."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .approx import approx_ci
from .errors import UnknownFigure
from .linalg import GaussianJoint, Tolerances
from .presets import setup1, setup2
from .quant import DEFAULT_GRID, QuantGrid, quant_bounds
from .wyner import seq_ratio

__all__ = ["Table", "FIGURES", "reproduce", "FIG2A_EPS", "FIG2B_M", "FIG3A_EPS", "FIG3B_M"]

FIG2A_EPS = tuple(float(10.0 ** (-k / 2)) for k in range(2, 15))
FIG2B_M = tuple(2**k for k in range(1, 13))
FIG3A_EPS = (2.0**-5, 2.0**-20)
FIG3B_M = (2, 4, 16, 256)
FIG3_D = tuple(range(1, 8))


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    description: str = ""

    def as_records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def fig2a(joint: Optional[GaussianJoint] = None, eps_grid: Sequence[float] = FIG2A_EPS,
          tol: Tolerances | None = None) -> Table:
    j = joint if joint is not None else setup1(tol)
    rows = []
    for e in eps_grid:
        sol = approx_ci(j, e, tol)
        rows.append((
            float(e),
            sol.ratio,
            seq_ratio(j, e, "min", tol),
            seq_ratio(j, e, "max", tol),
            sol.ci_bits,
            sol.lower_bound_bits,
            sol.achievable_bits,
        ))
    return Table(
        "fig2a",
        ("epsilon", "approx_ratio", "seq_min_ratio", "seq_max_ratio",
         "approx_bits", "approx_lower_bits", "approx_achievable_bits"),
        tuple(rows),
        "normalized approximate CI and perturbed-sequence CI versus epsilon",
    )


def fig2b(joint: Optional[GaussianJoint] = None, m_grid: Sequence[float] = FIG2B_M,
          grid: QuantGrid = DEFAULT_GRID, tol: Tolerances | None = None) -> Table:
    j = joint if joint is not None else setup1(tol)
    rows = []
    for m in m_grid:
        r = quant_bounds(j, m, grid, tol)
        rows.append((float(m), r.lower_bits, r.upper_bits, r.ratio_lower, r.ratio_upper))
    return Table(
        "fig2b",
        ("m", "lower_bits", "upper_bits", "ratio_lower", "ratio_upper"),
        tuple(rows),
        "quantized CI bounds normalized by log2 m versus m",
    )


def fig3a(eps_grid: Sequence[float] = FIG3A_EPS, tol: Tolerances | None = None) -> Table:
    rows = []
    for d in FIG3_D:
        j = setup2(d, tol)
        rows.append((d, *(approx_ci(j, e, tol).ci_bits for e in eps_grid)))
    return Table(
        "fig3a",
        ("d", *(f"ci_bits_eps_{e:.10g}" for e in eps_grid)),
        tuple(rows),
        "approximate CI versus d(X,Y) for fixed epsilon",
    )


def fig3b(m_grid: Sequence[float] = FIG3B_M, grid: QuantGrid = DEFAULT_GRID,
          tol: Tolerances | None = None) -> Table:
    rows = []
    for d in FIG3_D:
        j = setup2(d, tol)
        for m in m_grid:
            r = quant_bounds(j, m, grid, tol)
            rows.append((d, float(m), r.lower_bits, r.upper_bits))
    return Table(
        "fig3b",
        ("d", "m", "lower_bits", "upper_bits"),
        tuple(rows),
        "quantized CI bounds versus d(X,Y) for fixed m",
    )


FIGURES: dict[str, Callable[..., Table]] = {
    "fig2a": fig2a,
    "fig2b": fig2b,
    "fig3a": fig3a,
    "fig3b": fig3b,
}


def reproduce(name: str, joint: Optional[GaussianJoint] = None, tol: Tolerances | None = None) -> Table:
    try:
        fn = FIGURES[name]
    except KeyError:
        raise UnknownFigure(f"unknown figure {name!r}; expected one of {', '.join(FIGURES)}") from None
    if name in ("fig2a", "fig2b"):
        return fn(joint, tol=tol)
    return fn(tol=tol)
