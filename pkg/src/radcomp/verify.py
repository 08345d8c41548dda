"""Checks that a computed comparison function solves its Cauchy problem.

Two independent routes are provided: residuals of the discrete solution
(flux form for any ``p``, pointwise second-order form for ``p = 2``) and a
fixed-step RK4 integration of the first-order system for ``(m, w)`` with
flux ``w = r^{1+a} |m'|^{p-2} m'``.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import InvalidInputError
from .model import RadialGrid, Trace
from .quadrature import inner_integral


def _signed_power(x, e):
    return np.sign(x) * np.power(np.abs(x), e)


def flux_residual(m: Trace, f, params, consts) -> Trace:
    """Normalized flux defect ``r^{1+a} phi(m') - alpha I`` of a solution trace.

    ``m'`` is taken by second-order finite differences (centered inside,
    one-sided at the ends) and ``I`` is the inner integral of
    ``f(xi, beta m(xi))``.  The defect is divided by ``max(1, alpha I_N)``.
    """
    grid = m.grid
    if len(grid) < 3:
        raise InvalidInputError("flux residual needs at least 3 nodes")
    r = grid.nodes
    dm = np.gradient(m.values, r, edge_order=2)
    I = inner_integral(f(r, consts.beta * m.values), params, grid).values
    D = np.power(r, 1.0 + params.a) * _signed_power(dm, params.p - 1.0) - consts.alpha * I
    return Trace.of(grid, D / max(1.0, consts.alpha * I[-1]), "residual")


def pointwise_residual_2_5(m: Trace, f, b, params, consts) -> Trace:
    """Residual of ``m'' + ((1+a)/r + k b) m' - alpha f(r, beta m)`` for ``p = 2``.

    Evaluated by centered differences at interior nodes; the two end
    values are set to 0.
    """
    if params.p != 2:
        raise InvalidInputError(f"the pointwise form needs p = 2 (got p = {params.p})")
    grid = m.grid
    r, v = grid.nodes, m.values
    if r.size < 3:
        raise InvalidInputError("pointwise residual needs at least 3 nodes")
    hl = r[1:-1] - r[:-2]
    hr = r[2:] - r[1:-1]
    d1 = (hl ** 2 * v[2:] + (hr ** 2 - hl ** 2) * v[1:-1] - hr ** 2 * v[:-2]) / (hl * hr * (hl + hr))
    d2 = 2.0 * (hl * v[2:] - (hl + hr) * v[1:-1] + hr * v[:-2]) / (hl * hr * (hl + hr))
    ri = r[1:-1]
    res = np.zeros_like(v)
    res[1:-1] = (d2 + ((1.0 + params.a) / ri + params.k * b(ri)) * d1
                 - consts.alpha * f(ri, consts.beta * v[1:-1]))
    return Trace.of(grid, res, "residual")


def series_start(f, params, consts, M0: float, r: float, R0: float = 0.0):
    """Leading-order ``(m, w)`` a distance ``r - R0`` past the start.

    ``m ~ M0 + c^{1/(p-1)} (p-1)/p s^{p/(p-1)}`` with
    ``c = alpha f(R0, beta M0)/(2 + a)``, valid for ``R0 = 0``.
    """
    s = r - R0
    c = consts.alpha * float(f(R0, consts.beta * M0)) / (2.0 + params.a)
    e = params.flux_exponent
    m = M0 + c ** e * (params.p - 1.0) / params.p * s ** (params.p * e)
    w = c * s ** (2.0 + params.a)
    return m, w


def independent_integrate(f, b, params, consts, M0: float, grid: RadialGrid,
                          substeps: int = 1) -> Trace:
    """Integrate the Cauchy problem with fixed-step RK4 and sample it on ``grid``.

    The state is ``(m, w)`` with ``m' = (w / r^{1+a})^{1/(p-1)}`` and
    ``w' = r^{1+a} alpha f(r, beta m) - k b(r) w``.  At ``R0 = 0`` the first
    cell is bridged with :func:`series_start`.
    """
    if not M0 > 0:
        raise InvalidInputError(f"M0 > 0 required (got {M0})")
    r = grid.nodes
    a1 = 1.0 + params.a
    e = params.flux_exponent
    alpha, beta, k = consts.alpha, consts.beta, params.k

    def rhs(x, m, w):
        if w < 0:
            raise InvalidInputError(
                f"negative flux at r = {x:.6g}; f or b violates its sign constraint")
        weight = x ** a1
        dm = (w / weight) ** e if weight > 0 else 0.0
        dw = weight * alpha * float(f(x, beta * m)) - k * float(b(x)) * w
        return dm, dw

    out = np.empty(r.size)
    out[0] = M0
    m, w = float(M0), 0.0
    start = 0
    if r[0] == 0.0:
        m, w = series_start(f, params, consts, M0, r[1])
        out[1] = m
        start = 1
    for j in range(start, r.size - 1):
        h = (r[j + 1] - r[j]) / substeps
        x = r[j]
        for _ in range(substeps):
            k1 = rhs(x, m, w)
            k2 = rhs(x + h / 2, m + h / 2 * k1[0], max(w + h / 2 * k1[1], 0.0))
            k3 = rhs(x + h / 2, m + h / 2 * k2[0], max(w + h / 2 * k2[1], 0.0))
            k4 = rhs(x + h, m + h * k3[0], max(w + h * k3[1], 0.0))
            m += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            w += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            x += h
            if w < 0:
                raise InvalidInputError(
                    f"negative flux at r = {x:.6g}; f or b violates its sign constraint")
        out[j + 1] = m
    return Trace.of(grid, out, "m")


def observed_orders(errors, spacings=None) -> np.ndarray:
    """``log2`` ratios of successive errors (or ``log(e1/e2)/log(h1/h2)``)."""
    errors = np.asarray(errors, dtype=float)
    if spacings is None:
        return np.log2(errors[:-1] / errors[1:])
    spacings = np.asarray(spacings, dtype=float)
    return np.log(errors[:-1] / errors[1:]) / np.log(spacings[:-1] / spacings[1:])
