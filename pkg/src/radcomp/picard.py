"""Successive approximation of the comparison function ``m``.

Starting from ``m_0 = M0`` each step evaluates

    m_i(r) = M0 + int_{R0}^r (alpha / t^{1+a} int_{R0}^t xi^{1+a}
             exp(-k int_xi^t b) f(xi, beta m_{i-1}(xi)) dxi)^{1/(p-1)} dt

on the grid.  Because ``f`` is non-decreasing in ``t`` the iterates grow
monotonically in ``i``.  The equation is of Volterra type, so once a node
exceeds ``blowup_cap`` every node beyond it is dropped from the active
prefix and iteration continues on the nodes in front of it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidInputError
from .model import RadialGrid, Trace
from .quadrature import bound_from_source

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PicardResult:
    """Outcome of :func:`solve_comparison_function`.

    ``blowup`` is ``(index, radius)`` where ``index`` is the first node that
    exceeded the cap and ``radius`` the midpoint between it and the last
    finite node.  ``monotone_violations`` counts node updates with
    ``m_i < m_{i-1}``; the theory says it is always 0.
    """

    m: Trace
    kernel: Trace
    iterations: int
    converged: bool
    final_delta: float
    blowup: Optional[Tuple[int, float]] = None
    monotone_violations: int = 0
    history: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def active(self) -> int:
        """Number of leading nodes on which ``m`` is finite."""
        return len(self.m) if self.blowup is None else self.blowup[0]


def _check_start(values: np.ndarray):
    if not values[0] > 0:
        raise InvalidInputError("the iterate must be positive at R0")
    finite = values[np.isfinite(values)]
    if np.any(np.diff(finite) < 0):
        raise InvalidInputError("the iterate must be non-decreasing in r")


def _step(values, M0, f, params, consts, grid):
    g = f(grid.nodes, consts.beta * values)
    _, K, bound = bound_from_source(g, grid, params, consts.alpha)
    return M0 + bound, K


def picard_step(m_prev: Trace, f, params, consts) -> Trace:
    """One successive-approximation step applied to ``m_prev``."""
    values = m_prev.values
    _check_start(values)
    with np.errstate(over="ignore", invalid="ignore"):
        new, _ = _step(values, float(values[0]), f, params, consts, m_prev.grid)
    return Trace.of(m_prev.grid, new, "m")


def solve_comparison_function(f, params, consts, M0: float, grid: Optional[RadialGrid] = None,
                              tol: float = 1e-10, max_iter: int = 200,
                              record_history: bool = False) -> PicardResult:
    """Iterate :func:`picard_step` from the constant ``M0``.

    Stops when ``sup |m_i - m_{i-1}| <= tol * (1 + sup m_i)`` on the active
    prefix, or after ``max_iter`` steps (``converged=False``).  Nodes whose
    value exceeds ``params.blowup_cap`` are reported as blow-up and set to
    ``inf``.
    """
    if not M0 > 0:
        raise InvalidInputError(f"M0 > 0 required (got {M0})")
    if not tol > 0:
        raise InvalidInputError(f"tol > 0 required (got {tol})")
    if max_iter < 1:
        raise InvalidInputError(f"max_iter >= 1 required (got {max_iter})")
    if grid is None:
        raise InvalidInputError("a radial grid is required")

    cap = params.blowup_cap
    n = len(grid)
    active = n
    m = np.full(n, float(M0))
    K = np.zeros(n)
    history = [m.copy()] if record_history else []
    violations = 0
    converged = False
    delta = np.inf
    it = 0

    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, max_iter + 1):
            sub = grid if active == n else _prefix(grid, active)
            new, K_new = _step(m[:active], M0, f, params, consts, sub)
            bad = np.flatnonzero(~np.isfinite(new) | (new > cap))
            if bad.size:
                active = int(bad[0])
                log.debug("iteration %d: node %d exceeded the cap", it, active)
                if active < 3:
                    raise InvalidInputError(
                        "comparison function exceeded blowup_cap within the first grid cells")
            violations += int(np.count_nonzero(new[:active] < m[:active]))
            delta = float(np.max(np.abs(new[:active] - m[:active])))
            scale = float(np.max(new[:active]))
            m[:active] = new[:active]
            m[active:] = np.inf
            K = np.full(n, np.inf)
            K[:active] = K_new[:active]
            if record_history:
                history.append(m.copy())
            if delta <= tol * (1.0 + scale) and not bad.size:
                converged = True
                break

    blowup = None
    if active < n:
        nodes = grid.nodes
        blowup = (active, float(0.5 * (nodes[active - 1] + nodes[active])))
    log.info("picard: %d iterations, converged=%s, delta=%.3g, blowup=%s",
             it, converged, delta, blowup)
    return PicardResult(
        m=Trace.of(grid, m, "m"),
        kernel=Trace.of(grid, K, "kernel"),
        iterations=it,
        converged=converged,
        final_delta=delta,
        blowup=blowup,
        monotone_violations=violations,
        history=history,
    )


def _prefix(grid: RadialGrid, count: int) -> RadialGrid:
    return RadialGrid(nodes=grid.nodes[:count], b=grid.b[:count], B=grid.B[:count])
