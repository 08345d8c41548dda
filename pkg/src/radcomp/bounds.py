"""Right-hand sides of the local growth estimates and empirical gamma calibration.

Each estimate bounds ``M(r1) - M(r0)`` from below on a window
``R0 < r0 < r1 < Rmax`` by an expression linear in one constant.  The
constant is unknown in closed form, so :func:`calibrate_gamma` reports the
largest value consistent with a set of sampled windows.

Kinds and the constant each one scales:

=====  ========  ===========================================================
kind   constant  window conditions
=====  ========  ===========================================================
L3.1   gamma_1   ``sigma^2 r0 >= r1``, ``sqrt(beta) M(r1) <= M(r0)``
C3.1   gamma_2   ``sigma r0 >= r1``, ``r1/sigma <= rho0 < rho1 <= r1``,
                 ``rho1 - rho0 <= r1 - r0``, ``sqrt(beta) M(r1) <= M(r0)``
C3.2   gamma_3   as C3.1 but ``rho1 < r0`` and ``r0 - rho1 <= r1 - r0``
L3.2   gamma_4   ``sqrt(beta) M(r1) <= M(r0)``
L3.3   gamma_12  L3.2 plus ``sqrt(sigma) r0 <= r1``
L3.4   (1)       ``M(r0) <= sqrt(beta) M(r1) <= M(r0+0)``,
                 ``sqrt(sigma) r0 <= r1``, ``M(r0) >= bound(r0)``
L3.5   (1)       ``M(r0) <= sqrt(beta) M(r1) <= M(r0+0)``,
                 ``r1 <= sqrt(sigma) r0``, ``M >= bound`` on ``(R0, r0)``
=====  ========  ===========================================================

L3.4 and L3.5 carry no gamma; their calibrated value is the slack factor
by which the explicit right-hand side could be multiplied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import CalibrationUndefined, InvalidInputError, PreconditionError
from .model import DriftB, Trace
from .quadrature import bound_from_source, lower_bound_integral, subgrid, window_integral

log = logging.getLogger(__name__)

KINDS = ("L3.1", "C3.1", "C3.2", "L3.2", "L3.3", "L3.4", "L3.5")
GAMMA_INDEX = {"L3.1": 1, "C3.1": 2, "C3.2": 3, "L3.2": 4, "L3.3": 12, "L3.4": None, "L3.5": None}

_EPS = 1e-12


@dataclass(frozen=True)
class WindowSpec:
    """Radii of one growth-estimate window.  ``r1`` plays the role of ``r`` for L3.5."""

    kind: str
    r0: float
    r1: float
    rho0: Optional[float] = None
    rho1: Optional[float] = None
    s: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown estimate kind {self.kind!r}")
        if self.kind in ("C3.1", "C3.2") and (self.rho0 is None or self.rho1 is None):
            raise InvalidInputError(f"{self.kind} needs rho0 and rho1")


def _require(cond: bool, kind: str, text: str):
    if not cond:
        raise PreconditionError(f"{kind}: condition {text} violated")


def _le(x, y):
    return x <= y + _EPS * max(1.0, abs(y))


def _probe(w: WindowSpec, params) -> float:
    if w.s is not None:
        return w.s
    return min(w.r1, params.sigma * w.r0)


def _source(M: Trace, f, consts):
    def g(x):
        return f(x, consts.beta * M.at(x))
    return g


def check_window(w: WindowSpec, M: Trace, f, params, consts, bound: Optional[Trace] = None) -> None:
    """Raise :class:`PreconditionError` unless ``w`` satisfies its estimate's conditions.

    ``bound`` may carry a precomputed ``lower_bound_integral(M, f, ...)``.
    """
    k, sigma = w.kind, params.sigma
    R0, Rmax = M.grid.R0, M.grid.Rmax
    r0, r1 = w.r0, w.r1
    root_beta = consts.beta ** 0.5
    _require(R0 < r0 < r1 <= Rmax, k, "R0 < r0 < r1 < R1")
    M0, M1 = float(M.at(r0)), float(M.at(r1))
    if k in ("L3.1", "C3.1", "C3.2", "L3.2", "L3.3"):
        _require(_le(root_beta * M1, M0), k, "beta^(1/2) M(r1) <= M(r0)")
    if k == "L3.1":
        _require(_le(r1, sigma ** 2 * r0), k, "sigma^2 r0 >= r1")
        s = _probe(w, params)
        lo, hi = max(r1 / sigma, R0), min(sigma * r0, Rmax)
        _require(_le(lo, s) and _le(s, hi), k, "s in [r1/sigma, sigma r0]")
    if k in ("C3.1", "C3.2"):
        rho0, rho1 = w.rho0, w.rho1
        _require(_le(r1, sigma * r0), k, "sigma r0 >= r1")
        _require(R0 < rho0 < rho1 < Rmax, k, "R0 < rho0 < rho1 < R1")
        _require(_le(r1 / sigma, rho0), k, "r1/sigma <= rho0")
        if k == "C3.1":
            _require(_le(rho1, r1), k, "rho1 <= r1")
            _require(_le(rho1 - rho0, r1 - r0), k, "rho1 - rho0 <= r1 - r0")
        else:
            _require(rho1 < r0, k, "rho1 < r0")
            _require(_le(r0 - rho1, r1 - r0), k, "r0 - rho1 <= r1 - r0")
    if k == "L3.3":
        _require(_le(sigma ** 0.5 * r0, r1), k, "sigma^(1/2) r0 <= r1")
    if k in ("L3.4", "L3.5"):
        right = float(M.right_limit(r0))
        _require(_le(M0, root_beta * M1) and _le(root_beta * M1, right), k,
                 "M(r0) <= beta^(1/2) M(r1) <= M(r0 + 0)")
        if bound is None:
            bound = lower_bound_integral(M, f, params, consts)
        if k == "L3.4":
            _require(_le(sigma ** 0.5 * r0, r1), k, "sigma^(1/2) r0 <= r1")
            _require(_le(float(np.interp(r0, bound.r, bound.values)), M0), k,
                     "M(r0) >= bound(r0)")
        else:
            _require(_le(r1, sigma ** 0.5 * r0), k, "r <= sigma^(1/2) r0")
            inside = (M.r > R0) & (M.r < r0)
            _require(bool(np.all(bound.values[inside] <= M.values[inside] * (1 + _EPS))), k,
                     "M(zeta) >= bound(zeta) on (R0, r0)")


def drift_infimum(w: WindowSpec, b: DriftB, grid, sigma: float) -> float:
    """Infimum of ``b`` over the interval the estimate of kind ``w.kind`` uses."""
    if w.kind == "L3.1":
        lo, hi = max(w.r1 / sigma, grid.R0), min(sigma * w.r0, grid.Rmax)
    elif w.kind == "C3.1":
        lo, hi = w.rho0, w.rho1
    elif w.kind == "C3.2":
        lo, hi = w.rho0, w.r0
    else:
        lo, hi = w.r0, w.r1
    pts = np.concatenate(([lo, hi], grid.nodes[(grid.nodes > lo) & (grid.nodes < hi)]))
    return float(np.min(b(pts)))


def growth_bound_rhs(w: WindowSpec, M: Trace, f, b: DriftB, params, consts,
                     gamma: Optional[float] = None, check: bool = True) -> float:
    """Numeric right-hand side of the estimate selected by ``w.kind``.

    ``gamma`` overrides the constant taken from ``consts`` (L3.4 and L3.5
    use a plain factor, 1 by default).
    """
    if check:
        check_window(w, M, f, params, consts)
    idx = GAMMA_INDEX[w.kind]
    if gamma is None:
        gamma = consts.gamma[idx] if idx is not None else 1.0
    p, e, sigma = params.p, params.flux_exponent, params.sigma
    grid = M.grid
    g = _source(M, f, consts)
    r0, r1 = w.r0, w.r1
    kind = w.kind

    if kind == "L3.1":
        lam = drift_infimum(w, b, grid, sigma)
        width = r1 - r0
        first = width ** (p * e)
        second = width / lam ** e if lam > 0 else np.inf
        s = _probe(w, params)
        fs = float(f(s, consts.beta * float(M.at(r1))))
        return float(gamma * min(first, second) * fs ** e)

    if kind == "C3.1":
        J = window_integral(grid, w.rho0, w.rho1, g, params, b)
        return float(gamma * (r1 - r0) * J ** e)

    if kind == "C3.2":
        J = window_integral(grid, w.rho0, w.rho1, g, params, b, decay_to=r0)
        return float(gamma * (r1 - r0) * ((r0 - w.rho1) / (w.rho1 - w.rho0) * J) ** e)

    if kind == "L3.2":
        local = subgrid(grid, r0, r1, b)
        _, _, outer = bound_from_source(g(local.nodes), local, params, 1.0)
        return float(gamma * outer[-1])

    if kind == "L3.3":
        J = window_integral(grid, r0, r1, g, params, b, weight_power=1.0 + params.a)
        return float(gamma * r1 ** (-params.decay_exponent) * J ** e)

    J = window_integral(grid, grid.R0, r0, g, params, b, weight_power=1.0 + params.a)
    tail = (consts.alpha * J) ** e
    d = params.decay_exponent
    if kind == "L3.4":
        lead = 2.0 ** (-p * e) * (1.0 - sigma ** -0.5) * consts.beta ** -0.5 * r0 ** (-d)
        return float(gamma * lead * tail)
    lead = 2.0 ** (p * e) * (p - 1.0) / (params.a - p + 2.0) * (r0 ** (-d) - r1 ** (-d))
    return float(gamma * lead * tail)


def check_growth(w: WindowSpec, M: Trace, rhs: float) -> float:
    """``(M(r1) - M(r0)) - rhs``; non-negative when the estimate holds."""
    return float(M.at(w.r1) - M.at(w.r0)) - rhs


def sample_windows(kind: str, M: Trace, f, params, consts, rng: np.random.Generator,
                   count: int, min_width: float = 0.02, max_attempts: int = 500) -> List[WindowSpec]:
    """Draw admissible windows of one kind by rejection sampling.

    Radii are drawn in continuous coordinates so that refining the grid
    leaves the sample essentially unchanged; L3.4 and L3.5 snap ``r0`` to
    the node where the sandwich condition on ``M`` holds.
    """
    if kind not in KINDS:
        raise InvalidInputError(f"unknown estimate kind {kind!r}")
    R0, Rmax = M.grid.R0, M.grid.Rmax
    span = Rmax - R0
    wmin = min_width * span
    sigma = params.sigma
    bound = lower_bound_integral(M, f, params, consts) if kind in ("L3.4", "L3.5") else None
    out: List[WindowSpec] = []
    attempts = 0
    while len(out) < count and attempts < max_attempts * max(count, 1):
        attempts += 1
        try:
            w = _draw(kind, M, params, consts, rng, R0, Rmax, wmin, sigma)
            if w is None:
                continue
            check_window(w, M, f, params, consts, bound)
        except PreconditionError:
            continue
        out.append(w)
    if len(out) < count:
        log.warning("only %d of %d %s windows found", len(out), count, kind)
    return out


def _draw(kind, M, params, consts, rng, R0, Rmax, wmin, sigma):
    u = rng.uniform
    if kind in ("L3.4", "L3.5"):
        r1 = u(R0 + wmin, Rmax)
        level = consts.beta ** 0.5 * float(M.at(r1))
        j = int(np.searchsorted(M.values, level, side="right")) - 1
        if j < 1 or j >= len(M) - 1:
            return None
        return WindowSpec(kind, float(M.r[j]), r1)
    r0 = u(R0 + wmin, Rmax - wmin)
    top = {"L3.1": sigma ** 2 * r0, "C3.1": sigma * r0, "C3.2": sigma * r0}.get(kind, Rmax)
    lo1 = r0 + wmin
    if kind == "L3.3":
        lo1 = max(lo1, sigma ** 0.5 * r0)
    hi1 = min(top, Rmax)
    if lo1 >= hi1:
        return None
    r1 = u(lo1, hi1)
    if kind == "C3.1":
        rho1 = u(max(r1 / sigma, R0) + 0.5 * wmin, r1)
        lo0 = max(r1 / sigma, rho1 - (r1 - r0), R0)
        if lo0 >= rho1:
            return None
        return WindowSpec(kind, r0, r1, rho0=u(lo0, rho1), rho1=rho1)
    if kind == "C3.2":
        lo = max(r1 / sigma, 2 * r0 - r1, R0)
        if lo >= r0:
            return None
        rho1 = u(lo, r0)
        lo0 = max(r1 / sigma, R0)
        if lo0 >= rho1:
            return None
        return WindowSpec(kind, r0, r1, rho0=u(lo0, rho1), rho1=rho1)
    return WindowSpec(kind, r0, r1)


@dataclass(frozen=True)
class WindowRecord:
    kind: str
    r0: float
    r1: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs


def evaluate_windows(windows: Sequence[WindowSpec], M: Trace, f, b, params, consts,
                     gamma: Optional[float] = None) -> List[WindowRecord]:
    rows = []
    for w in windows:
        rhs = growth_bound_rhs(w, M, f, b, params, consts, gamma=gamma, check=False)
        lhs = float(M.at(w.r1) - M.at(w.r0))
        rows.append(WindowRecord(w.kind, w.r0, w.r1, lhs, rhs))
    return rows


def gamma_from_ratios(lhs: Sequence[float], rhs: Sequence[float]) -> float:
    """Largest gamma with ``lhs >= gamma * rhs`` for every pair with ``rhs > 0``."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    keep = rhs > 0
    if not np.any(keep):
        raise CalibrationUndefined("every sampled right-hand side is zero")
    return float(np.min(lhs[keep] / rhs[keep]))


def calibrate_gamma(kind: str, scenarios: Sequence, params, consts, n_samples: int = 200,
                    seed: int = 0, windows: Optional[Sequence[Sequence[WindowSpec]]] = None) -> float:
    """Empirical constant for ``kind`` over a list of scenarios.

    Each scenario needs ``M``, ``f`` and ``b`` attributes (see
    :class:`radcomp.oracle.Scenario`).  Windows are sampled round-robin
    over the scenarios unless given explicitly, one list per scenario.
    """
    if not scenarios:
        raise InvalidInputError("calibration needs at least one scenario")
    if windows is None:
        windows = sample_suite_windows(kind, scenarios, params, consts, n_samples, seed)
    lhs, rhs = [], []
    for sc, ws in zip(scenarios, windows):
        for rec in evaluate_windows(ws, sc.M, sc.f, sc.b, params, consts, gamma=1.0):
            lhs.append(rec.lhs)
            rhs.append(rec.rhs)
    return gamma_from_ratios(lhs, rhs)


def sample_suite_windows(kind, scenarios, params, consts, n_samples: int, seed: int):
    """``n_samples`` windows spread round-robin over ``scenarios``."""
    rng = np.random.default_rng(seed)
    per = [n_samples // len(scenarios) + (1 if i < n_samples % len(scenarios) else 0)
           for i in range(len(scenarios))]
    return [sample_windows(kind, sc.M, sc.f, params, consts, rng, cnt)
            for sc, cnt in zip(scenarios, per)]
