"""Problem data: parameters, source and drift functions, grids and traces.

Everything here is immutable after construction.  Arrays held by the
dataclasses are flagged read-only so that traces can be shared freely
between concurrent evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, WindowError

TRACE_LABELS = ("u", "M", "m", "kernel", "residual", "bound", "divergence")


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemParams:
    """Scalar data of the radial problem on the window ``[R0, Rmax]``.

    ``Rmax`` is a finite truncation of the outer radius; every guarantee
    computed by the package holds on ``[R0, Rmax]`` only.
    """

    p: float
    a: float
    k: float
    sigma: float
    n: int
    C1: float = 1.0
    C2: float = 1.0
    R0: float = 0.0
    Rmax: float = 1.0
    blowup_cap: float = 1e12

    def __post_init__(self):
        checks = [
            (self.p > 1, f"p > 1 required (got p = {self.p})"),
            (self.a > self.p - 2, f"a > p - 2 required (got a = {self.a}, p = {self.p})"),
            (self.k > 0, f"k > 0 required (got k = {self.k})"),
            (self.sigma > 1, f"sigma > 1 required (got sigma = {self.sigma})"),
            (int(self.n) == self.n and self.n >= 2, f"integer n >= 2 required (got n = {self.n})"),
            (self.C1 > 0, f"C1 > 0 required (got C1 = {self.C1})"),
            (self.C2 >= self.C1, f"C2 >= C1 required (got C1 = {self.C1}, C2 = {self.C2})"),
            (0 <= self.R0 < self.Rmax, f"0 <= R0 < Rmax required (got R0 = {self.R0}, Rmax = {self.Rmax})"),
            (np.isfinite(self.Rmax), "Rmax must be finite"),
            (self.blowup_cap > 0, f"blowup_cap > 0 required (got {self.blowup_cap})"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidInputError(message)

    @property
    def flux_exponent(self) -> float:
        """Exponent ``1/(p-1)`` applied to every kernel radicand."""
        return 1.0 / (self.p - 1.0)

    @property
    def decay_exponent(self) -> float:
        """``(a - p + 2)/(p - 1)``, positive by the parameter invariants."""
        return (self.a - self.p + 2.0) / (self.p - 1.0)

    def as_dict(self) -> dict:
        return {
            "p": self.p, "a": self.a, "k": self.k, "sigma": self.sigma,
            "n": self.n, "C1": self.C1, "C2": self.C2, "R0": self.R0,
            "Rmax": self.Rmax, "blowup_cap": self.blowup_cap,
        }


@dataclass(frozen=True)
class NonlinearityF:
    """Source term ``f(r, t)`` evaluated with numpy broadcasting.

    ``kind`` is ``"closed-form"`` or ``"tabulated"``.  Tabulated sources are
    linear in ``r`` between table radii and left-continuous step functions
    in ``t``: on ``(t[i-1], t[i]]`` the value of column ``i`` applies.
    """

    func: Callable
    kind: str = "closed-form"
    t_independent: bool = False
    description: str = ""

    def __call__(self, r, t) -> np.ndarray:
        r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
        out = np.asarray(self.func(r, t), dtype=float)
        return np.broadcast_to(out, r.shape).astype(float, copy=False)

    @classmethod
    def closed_form(cls, func, t_independent=False, description=""):
        return cls(func=func, kind="closed-form", t_independent=t_independent,
                   description=description)

    @classmethod
    def constant(cls, c: float):
        c = float(c)
        return cls(func=lambda r, t: np.full(np.shape(r), c), t_independent=True,
                   description=f"constant {c!r}")

    @classmethod
    def power(cls, c: float, q: float):
        """``f(r, t) = c * t**q``."""
        c, q = float(c), float(q)
        if q == 0:
            return cls.constant(c)
        return cls(func=lambda r, t: c * np.power(t, q), description=f"power {c!r}*t^{q!r}")

    @classmethod
    def radial_table(cls, r_nodes, values, description="radial table"):
        """t-independent source given by samples in ``r`` (linear interpolation)."""
        r_nodes = _frozen(r_nodes)
        values = _frozen(values)
        if r_nodes.shape != values.shape or r_nodes.size < 2:
            raise InvalidInputError("radial table needs matching arrays with at least 2 entries")
        return cls(func=lambda r, t: np.interp(r, r_nodes, values), kind="tabulated",
                   t_independent=True, description=description)

    @classmethod
    def tabulated(cls, r_nodes, t_levels, values, description="table"):
        """Source sampled on ``r_nodes x t_levels`` (``values[i, j] = f(r_i, t_j)``)."""
        r_nodes = _frozen(r_nodes)
        t_levels = _frozen(t_levels)
        values = _frozen(values)
        if values.shape != (r_nodes.size, t_levels.size):
            raise InvalidInputError(
                f"table shape {values.shape} does not match ({r_nodes.size}, {t_levels.size})")
        if np.any(np.diff(r_nodes) <= 0) or np.any(np.diff(t_levels) <= 0):
            raise InvalidInputError("table radii and levels must be strictly increasing")

        def func(r, t):
            col = np.clip(np.searchsorted(t_levels, t, side="left"), 0, t_levels.size - 1)
            if r_nodes.size == 1:
                return values[0, col]
            pos = np.clip(np.searchsorted(r_nodes, r, side="right") - 1, 0, r_nodes.size - 2)
            w = np.clip((r - r_nodes[pos]) / (r_nodes[pos + 1] - r_nodes[pos]), 0.0, 1.0)
            return (1.0 - w) * values[pos, col] + w * values[pos + 1, col]

        return cls(func=func, kind="tabulated", description=description)


@dataclass(frozen=True)
class DriftB:
    """Drift coefficient ``b(r) >= 0`` plus an optional uniform floor ``delta``."""

    func: Callable
    delta: float = 0.0
    description: str = ""

    def __post_init__(self):
        if self.delta < 0:
            raise InvalidInputError(f"delta >= 0 required (got {self.delta})")

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.broadcast_to(np.asarray(self.func(r), dtype=float), r.shape)
        return out + self.delta

    @classmethod
    def zero(cls):
        return cls.constant(0.0)

    @classmethod
    def constant(cls, c: float, delta: float = 0.0):
        c = float(c)
        return cls(func=lambda r: np.full(np.shape(r), c), delta=delta, description=f"constant {c!r}")

    @classmethod
    def power(cls, c: float, q: float, delta: float = 0.0):
        c, q = float(c), float(q)
        return cls(func=lambda r: c * np.power(r, q), delta=delta, description=f"power {c!r}*r^{q!r}")

    @classmethod
    def tabulated(cls, r_nodes, values, delta: float = 0.0, description="table"):
        r_nodes = _frozen(r_nodes)
        values = _frozen(values)
        return cls(func=lambda r: np.interp(r, r_nodes, values), delta=delta, description=description)

    def with_floor(self, delta: float) -> "DriftB":
        return DriftB(func=self.func, delta=delta, description=self.description)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing nodes with drift samples and cumulative drift ``B``.

    ``B[j]`` is the trapezoid approximation of the integral of ``b`` from the
    first node to ``nodes[j]``, so ``B[0] == 0``.
    """

    nodes: np.ndarray
    b: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        nodes, b, B = self.nodes, self.b, self.B
        if nodes.ndim != 1 or nodes.size < 3:
            raise InvalidInputError("a radial grid needs at least 3 nodes")
        if not np.all(np.diff(nodes) > 0):
            raise InvalidInputError("grid nodes must be strictly increasing")
        if b.shape != nodes.shape or B.shape != nodes.shape:
            raise InvalidInputError("drift samples must match the node count")
        if np.any(b < 0) or not np.all(np.isfinite(b)):
            raise InvalidInputError("drift b must be finite and non-negative on the grid")
        if B[0] != 0.0 or np.any(np.diff(B) < 0):
            raise InvalidInputError("cumulative drift must start at 0 and be non-decreasing")

    @classmethod
    def build(cls, nodes, drift: Optional[DriftB] = None) -> "RadialGrid":
        nodes = np.asarray(nodes, dtype=float)
        drift = drift if drift is not None else DriftB.zero()
        b = drift(nodes)
        B = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(nodes) * (b[1:] + b[:-1]))))
        return cls(nodes=_frozen(nodes), b=_frozen(b), B=_frozen(B))

    @classmethod
    def uniform(cls, R0: float, Rmax: float, n_nodes: int, drift: Optional[DriftB] = None):
        return cls.build(np.linspace(R0, Rmax, int(n_nodes)), drift)

    @classmethod
    def for_params(cls, params: ProblemParams, n_nodes: int, drift: Optional[DriftB] = None):
        return cls.uniform(params.R0, params.Rmax, n_nodes, drift)

    def __len__(self):
        return self.nodes.size

    @property
    def R0(self) -> float:
        return float(self.nodes[0])

    @property
    def Rmax(self) -> float:
        return float(self.nodes[-1])

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Indices of nodes in the closed interval ``[lo, hi]``."""
        eps = 1e-12 * max(1.0, abs(hi))
        i0 = np.searchsorted(self.nodes, lo - eps, side="left")
        i1 = np.searchsorted(self.nodes, hi + eps, side="right")
        return np.arange(i0, i1)


@dataclass(frozen=True)
class Trace:
    """Per-node samples of a radial quantity."""

    grid: RadialGrid
    values: np.ndarray
    label: str

    def __post_init__(self):
        if self.label not in TRACE_LABELS:
            raise InvalidInputError(f"unknown trace label {self.label!r}")
        if self.values.shape != self.grid.nodes.shape:
            raise InvalidInputError(
                f"trace length {self.values.size} does not match grid length {len(self.grid)}")
        v = self.values
        if self.label == "M" and np.any(np.diff(v) < 0):
            raise InvalidInputError("an M-trace must be non-decreasing")
        if self.label == "m" and not v[0] > 0:
            raise InvalidInputError("an m-trace must start at a positive value")

    @classmethod
    def of(cls, grid: RadialGrid, values, label: str) -> "Trace":
        return cls(grid=grid, values=_frozen(values), label=label)

    def __len__(self):
        return self.values.size

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def at(self, r):
        """Value at the last node not exceeding ``r`` (step interpolation)."""
        idx = np.searchsorted(self.grid.nodes, np.asarray(r, dtype=float) + 1e-14, side="right") - 1
        idx = np.clip(idx, 0, len(self) - 1)
        return self.values[idx]

    def right_limit(self, r):
        """Value at the first node strictly after the last node not exceeding ``r``."""
        idx = np.searchsorted(self.grid.nodes, np.asarray(r, dtype=float) + 1e-14, side="right")
        idx = np.clip(idx, 0, len(self) - 1)
        return self.values[idx]


@dataclass(frozen=True)
class NonlinearityReport:
    """Outcome of :func:`validate_nonlinearity`.

    ``violation`` is ``(r, t1, t2)`` with ``t1 > t2`` and ``f(r, t1) < f(r, t2)``
    for a monotonicity failure, or ``(r, t, t)`` for a negative value.
    """

    ok: bool
    reason: str = ""
    violation: Optional[tuple] = None


def validate_nonlinearity(f: NonlinearityF, grid: RadialGrid, levels: Sequence[float]):
    """Sample ``f`` on grid nodes times ``levels`` and check sign and monotonicity."""
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        raise InvalidInputError("level list is empty")
    if np.any(levels <= 0):
        raise InvalidInputError("levels must be positive")
    if np.any(np.diff(levels) <= 0):
        raise InvalidInputError("levels must be strictly increasing")
    r = grid.nodes
    vals = f(r[:, None], levels[None, :])
    for i in range(r.size):
        row = vals[i]
        bad = np.flatnonzero(~(row >= 0) | ~np.isfinite(row))
        if bad.size:
            t = float(levels[bad[0]])
            return NonlinearityReport(False, "negative", (float(r[i]), t, t))
        drop = np.flatnonzero(row[1:] < row[:-1])
        if drop.size:
            j = drop[0]
            return NonlinearityReport(False, "decreasing",
                                      (float(r[i]), float(levels[j + 1]), float(levels[j])))
    return NonlinearityReport(True)


def monotone_envelope(sphere_sup: Trace) -> Trace:
    """Running maximum of per-sphere suprema, i.e. the sampled ``M(r; u)``."""
    return Trace.of(sphere_sup.grid, np.maximum.accumulate(sphere_sup.values), "M")


def _window_indices(grid: RadialGrid, sigma: float, r: float) -> np.ndarray:
    lo = max(r / sigma, grid.R0)
    hi = min(sigma * r, grid.Rmax)
    idx = grid.window(lo, hi) if lo <= hi else np.arange(0)
    if idx.size == 0:
        raise WindowError(f"shell window [{r / sigma:g}, {sigma * r:g}] contains no grid node")
    return idx


def shell_envelope(coeff_c, coeff_bsum, params: ProblemParams, grid: RadialGrid):
    """Turn operator coefficients into an admissible ``(f, b)`` pair.

    ``f(r, t)`` is the minimum of ``coeff_c(x, t)`` and ``b(r)`` the maximum of
    ``coeff_bsum(x)`` over grid nodes ``x`` in ``[r/sigma, sigma*r]``
    clipped to the grid.

    Parameters
    ----------
    coeff_c : callable
        ``coeff_c(r, t)``, vectorized, non-negative and non-decreasing in t.
    coeff_bsum : callable or array_like
        Sum of the absolute drift coefficients, as a function of ``r`` or as
        samples on the grid nodes.
    """
    sigma = params.sigma
    nodes = grid.nodes
    if callable(coeff_bsum):
        bsum = np.broadcast_to(np.asarray(coeff_bsum(nodes), dtype=float), nodes.shape)
    else:
        bsum = np.asarray(coeff_bsum, dtype=float)
        if bsum.shape != nodes.shape:
            raise InvalidInputError("coeff_bsum samples must match the grid")
    bsum = _frozen(bsum)

    def f_func(r, t):
        out = np.empty(r.shape)
        flat_r, flat_t, flat_out = r.ravel(), t.ravel(), out.reshape(-1)
        for rv in np.unique(flat_r):
            sel = flat_r == rv
            idx = _window_indices(grid, sigma, float(rv))
            samples = np.asarray(coeff_c(nodes[idx][:, None], flat_t[sel][None, :]), dtype=float)
            samples = np.broadcast_to(samples, (idx.size, int(sel.sum())))
            flat_out[sel] = samples.min(axis=0)
        return out

    def b_func(r):
        r = np.asarray(r, dtype=float)
        out = np.empty(r.shape)
        flat_r, flat_out = r.ravel(), out.reshape(-1)
        for i, rv in enumerate(flat_r):
            flat_out[i] = bsum[_window_indices(grid, sigma, float(rv))].max()
        return out

    f = NonlinearityF(func=f_func, kind="closed-form", description="shell minimum")
    b = DriftB(func=b_func, description="shell maximum")
    return f, b
