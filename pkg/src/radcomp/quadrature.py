"""Weighted exponential-kernel integrals evaluated by composite trapezoid.

The exponential weight ``exp(-k * (B(t) - B(xi)))`` is only ever formed
from differences of the cumulative drift, one panel at a time, so large
values of ``k * B`` cannot overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .model import DriftB, RadialGrid, Trace, _frozen


@dataclass(frozen=True)
class KernelAccumulator:
    """Inner integrals ``I_j`` on a grid, tagged with the source they came from."""

    grid: RadialGrid
    values: np.ndarray
    source: str = "g"


def _as_array(g, grid: RadialGrid) -> np.ndarray:
    values = g.values if isinstance(g, Trace) else np.asarray(g, dtype=float)
    if values.shape != grid.nodes.shape:
        raise InvalidInputError(
            f"source has {values.size} samples but the grid has {len(grid)} nodes")
    return values


def weighted_cumulative(nodes, B, k, integrand):
    """Cumulative ``int_{x_0}^{x_j} exp(-k (B_j - B(xi))) integrand(xi) dxi``.

    Trapezoid panels are combined by the recurrence
    ``I_{j+1} = e_j * I_j + h_j/2 * (e_j * y_j + y_{j+1})`` with
    ``e_j = exp(-k (B_{j+1} - B_j))``.
    """
    nodes = np.asarray(nodes, dtype=float)
    y = np.asarray(integrand, dtype=float)
    h = np.diff(nodes)
    decay = np.exp(-k * np.diff(np.asarray(B, dtype=float)))
    out = np.zeros(nodes.size)
    if np.all(decay == 1.0):
        out[1:] = np.cumsum(0.5 * h * (y[:-1] + y[1:]))
        return out
    half = 0.5 * h
    acc = 0.0
    with np.errstate(invalid="ignore"):
        for j in range(h.size):
            e = decay[j]
            acc = e * (acc + half[j] * y[j]) + half[j] * y[j + 1]
            out[j + 1] = acc
    return out


def inner_integral(g, params, grid: RadialGrid, source: str = "g") -> KernelAccumulator:
    """``I_j = int_{R0}^{r_j} xi^{1+a} exp(-k int_xi^{r_j} b) g(xi) dxi``.

    Parameters
    ----------
    g : Trace or array_like
        Non-negative source samples on ``grid`` (``inf`` is allowed and
        propagates).
    """
    values = _as_array(g, grid)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise InvalidInputError("source samples must be non-negative")
    weight = np.power(grid.nodes, 1.0 + params.a)
    with np.errstate(invalid="ignore"):
        integrand = np.where(weight == 0.0, 0.0, weight * values)
    I = weighted_cumulative(grid.nodes, grid.B, params.k, integrand)
    return KernelAccumulator(grid=grid, values=_frozen(I), source=source)


def _radical(x, params):
    if params.p == 2:
        return x
    return np.power(x, params.flux_exponent)


def kernel_values(I, nodes, alpha, params) -> np.ndarray:
    weight = np.power(nodes, 1.0 + params.a)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        radicand = np.where(weight > 0, alpha * np.asarray(I) / np.where(weight > 0, weight, 1.0), 0.0)
    return _radical(radicand, params)


def kernel(I: KernelAccumulator, alpha: float, params) -> Trace:
    """``K_j = (alpha I_j / r_j^{1+a})^{1/(p-1)}``, with ``K = 0`` at ``r = 0``."""
    if not alpha > 0:
        raise InvalidInputError(f"alpha > 0 required (got {alpha})")
    return Trace.of(I.grid, kernel_values(I.values, I.grid.nodes, alpha, params), "kernel")


def cumulative_trapezoid(nodes, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.size)
    out[1:] = np.cumsum(0.5 * np.diff(nodes) * (y[:-1] + y[1:]))
    return out


def bound_from_source(g, grid: RadialGrid, params, alpha: float):
    """Inner integral, kernel and ``int_{R0}^r K`` for the source samples ``g``."""
    acc = inner_integral(g, params, grid)
    K = kernel_values(acc.values, grid.nodes, alpha, params)
    with np.errstate(invalid="ignore", over="ignore"):
        bound = cumulative_trapezoid(grid.nodes, K)
    return acc.values, K, bound


def lower_bound_integral(M: Trace, f, params, consts) -> Trace:
    """Right-hand side of the sphere-maximum lower bound, as a trace in ``r``.

    Uses ``g(xi) = f(xi, beta M(xi))`` and integrates the kernel by the
    cumulative trapezoid rule; the result starts at 0 and is non-decreasing.
    """
    if not M.values[0] > 0:
        raise InvalidInputError("M must be positive at R0")
    if np.any(np.diff(M.values) < 0):
        raise InvalidInputError("M must be non-decreasing")
    g = f(M.grid.nodes, consts.beta * M.values)
    _, _, bound = bound_from_source(g, M.grid, params, consts.alpha)
    return Trace.of(M.grid, bound, "bound")


def subgrid(grid: RadialGrid, lo: float, hi: float, drift: Optional[DriftB] = None,
            min_nodes: int = 3) -> RadialGrid:
    """Grid on ``[lo, hi]`` made of the endpoints plus the parent nodes between them."""
    if not lo < hi:
        raise InvalidInputError(f"empty interval [{lo}, {hi}]")
    span = hi - lo
    inner = grid.nodes[(grid.nodes > lo + 1e-12 * span) & (grid.nodes < hi - 1e-12 * span)]
    nodes = np.concatenate(([lo], inner, [hi]))
    if nodes.size < min_nodes:
        nodes = np.linspace(lo, hi, min_nodes)
    return RadialGrid.build(nodes, drift)


def window_integral(grid: RadialGrid, lo: float, hi: float, g_func, params,
                    drift: Optional[DriftB] = None, weight_power: float = 0.0,
                    decay_to: Optional[float] = None) -> float:
    """``int_lo^hi xi^w exp(-k int_xi^X b) g(xi) dxi`` with ``X = decay_to or hi``.

    ``g_func`` maps an array of radii to source samples.  For ``X > hi`` the
    extra factor ``exp(-k int_hi^X b)`` is applied after the recurrence.
    """
    local = subgrid(grid, lo, hi, drift)
    x = local.nodes
    y = np.asarray(g_func(x), dtype=float)
    if np.any(y < 0):
        raise InvalidInputError("source samples must be non-negative")
    if weight_power:
        y = np.power(x, weight_power) * y
    value = weighted_cumulative(x, local.B, params.k, y)[-1]
    if decay_to is not None and decay_to > hi:
        tail = subgrid(grid, hi, decay_to, drift)
        value *= np.exp(-params.k * tail.B[-1])
    return float(value)
