"""Manufactured radial solutions and the end-to-end comparison check.

A radial profile ``u`` with ``A(x, xi) = |xi|^{p-2} xi`` is an equality
solution of the elliptic inequality when ``F(x, u, Du)`` is set to the
radial p-Laplacian ``G`` of ``u``.  The shell minimum of ``G`` then gives
a t-independent admissible source ``f``.  With a drift ``b`` the term
``b(|x|) |u'|^{p-1}`` is added to ``F``, which leaves ``f`` unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ComparisonFailure, InvalidInputError, NotAdmissibleError
from .model import DriftB, NonlinearityF, RadialGrid, Trace
from .picard import PicardResult, solve_comparison_function
from .quadrature import lower_bound_integral

PROFILES = ("quadratic", "power:<q>", "exp")


def profile_values(name: str, r) -> np.ndarray:
    """Sample a named radial profile.

    ``quadratic`` is ``1 + r^2``, ``power:q`` is ``1 + r^q`` (``q > 1``) and
    ``exp`` is ``exp(r^2)``.
    """
    r = np.asarray(r, dtype=float)
    if name == "quadratic":
        return 1.0 + r ** 2
    if name == "exp":
        return np.exp(r ** 2)
    if name.startswith("power:"):
        try:
            q = float(name.split(":", 1)[1])
        except ValueError:
            raise InvalidInputError(f"bad power profile {name!r}") from None
        if not q > 1:
            raise InvalidInputError(f"power profile needs q > 1 (got {q})")
        return 1.0 + r ** q
    raise InvalidInputError(f"unknown profile {name!r}; expected one of {', '.join(PROFILES)}")


def _phi(s, p):
    return np.sign(s) * np.abs(s) ** (p - 1.0)


def radial_divergence(u_profile: Trace, params) -> Trace:
    """Radial p-Laplacian ``r^{1-n} (r^{n-1} |u'|^{p-2} u')'`` of sampled ``u``.

    Conservative finite-volume form: fluxes at cell midpoints from
    difference quotients, divided by the exact shell volume of each cell.
    Exact for ``u = c r^2`` when ``p = 2``.
    """
    r, u = u_profile.grid.nodes, u_profile.values
    if r.size < 4:
        raise InvalidInputError("radial divergence needs at least 4 nodes")
    n, p = params.n, params.p
    mid = 0.5 * (r[1:] + r[:-1])
    slope = np.diff(u) / np.diff(r)
    # end slopes by linear extrapolation of the midpoint slopes
    du0 = slope[0] - (slope[1] - slope[0]) * (mid[0] - r[0]) / (mid[1] - mid[0])
    duN = slope[-1] + (slope[-1] - slope[-2]) * (r[-1] - mid[-1]) / (mid[-1] - mid[-2])
    flux = np.concatenate((
        [r[0] ** (n - 1) * _phi(du0, p) if r[0] > 0 else 0.0],
        mid ** (n - 1) * _phi(slope, p),
        [r[-1] ** (n - 1) * _phi(duN, p)],
    ))
    faces = np.concatenate(([r[0]], mid, [r[-1]]))
    G = n * np.diff(flux) / np.diff(faces ** n)
    return Trace.of(u_profile.grid, G, "divergence")


def shell_minimum(values, grid: RadialGrid, sigma: float) -> np.ndarray:
    """Minimum of ``values`` over the nodes in ``[r/sigma, sigma r]`` for every node."""
    r = grid.nodes
    lo = np.searchsorted(r, np.maximum(r / sigma, r[0]) * (1 - 1e-13), side="left")
    hi = np.searchsorted(r, np.minimum(r * sigma, r[-1]) * (1 + 1e-13), side="right")
    out = np.empty(r.size)
    for j in range(r.size):
        out[j] = values[lo[j]:max(hi[j], j + 1)].min()
    return out


def admissible_pair_from_profile(u_profile: Trace, params, drift: Optional[DriftB] = None):
    """Build ``(f, b, M)`` for which ``u_profile`` solves the inequality.

    ``f`` is the shell minimum of the radial p-Laplacian ``G`` (independent
    of ``t``), ``b`` is ``drift`` or zero and ``M`` equals ``u`` because an
    increasing radial function attains its sphere maximum everywhere.
    """
    u = u_profile.values
    if np.any(np.diff(u) < 0):
        raise NotAdmissibleError("profile must be non-decreasing in r")
    G = radial_divergence(u_profile, params).values
    scale = max(1.0, float(np.max(np.abs(G))))
    if np.any(G < -1e-10 * scale):
        j = int(np.argmax(G < -1e-10 * scale))
        raise NotAdmissibleError(
            f"radial p-Laplacian is negative at r = {u_profile.r[j]:.6g}; use a more convex profile")
    G = np.maximum(G, 0.0)
    fvals = shell_minimum(G, u_profile.grid, params.sigma)
    f = NonlinearityF.radial_table(u_profile.r, fvals, description="shell minimum of G")
    b = drift if drift is not None else DriftB.zero()
    M = Trace.of(u_profile.grid, u, "M")
    return f, b, M


@dataclass(frozen=True)
class Scenario:
    """A manufactured radial solution with its admissible data."""

    name: str
    params: object
    grid: RadialGrid
    u: Trace
    M: Trace
    f: NonlinearityF
    b: DriftB


def manufacture(profile: str, params, n_nodes: int, drift: Optional[DriftB] = None,
                scale: float = 1.0) -> Scenario:
    """Sample ``scale * profile`` on a uniform grid and derive ``(f, b, M)``."""
    grid = RadialGrid.for_params(params, n_nodes, drift)
    u = Trace.of(grid, scale * profile_values(profile, grid.nodes), "u")
    f, b, M = admissible_pair_from_profile(u, params, drift)
    name = profile if drift is None else f"{profile}+drift"
    return Scenario(name=name, params=params, grid=grid, u=u, M=M, f=f, b=b)


@dataclass(frozen=True)
class ComparisonReport:
    """Margins of both comparison checks at every node."""

    result: PicardResult
    bound: Trace
    margin_m: np.ndarray
    margin_bound: np.ndarray
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.margin_m >= -self.tol) and np.all(self.margin_bound >= -self.tol))

    @property
    def worst_m(self):
        """``(margin, node index, radius)`` of the smallest ``M - m``."""
        j = int(np.argmin(self.margin_m))
        return float(self.margin_m[j]), j, float(self.bound.r[j])

    @property
    def worst_bound(self):
        j = int(np.argmin(self.margin_bound))
        return float(self.margin_bound[j]), j, float(self.bound.r[j])


def verify_comparison(M: Trace, f, b, params, consts, tol: float = 1e-9,
                      picard_tol: float = 1e-10, max_iter: int = 200) -> ComparisonReport:
    """Check ``M >= m`` and ``M - M(R0) >= bound(M)`` at every node.

    Raises
    ------
    ComparisonFailure
        If ``m`` blows up before ``Rmax`` while ``M`` is finite.
    """
    grid = M.grid
    if np.any(np.diff(M.values) < 0):
        raise InvalidInputError("M must be non-decreasing")
    M0 = float(M.values[0])
    if not M0 > 0:
        raise InvalidInputError("M(R0 + 0) > 0 required")
    if b is not None and not np.allclose(b(grid.nodes), grid.b, rtol=1e-12, atol=0):
        raise InvalidInputError("drift b does not match the drift stored on the grid")
    result = solve_comparison_function(f, params, consts, M0, grid, tol=picard_tol,
                                       max_iter=max_iter)
    if result.blowup is not None and np.all(np.isfinite(M.values)):
        raise ComparisonFailure(
            f"m exceeded blowup_cap near r = {result.blowup[1]:.6g} while M stays finite; "
            f"alpha = {consts.alpha:.6g} is too large")
    bound = lower_bound_integral(M, f, params, consts)
    return ComparisonReport(
        result=result,
        bound=bound,
        margin_m=M.values - result.m.values,
        margin_bound=(M.values - M0) - bound.values,
        tol=tol,
    )


@dataclass(frozen=True)
class AlphaSearch:
    alpha_star: float
    bisection_steps: int
    report: ComparisonReport


def _passes(M, f, b, params, consts, tol):
    try:
        report = verify_comparison(M, f, b, params, consts, tol)
    except ComparisonFailure:
        return False, None
    return report.passed, report


def find_alpha_star(M: Trace, f, b, params, consts, tol: float = 1e-9,
                    max_steps: int = 40, rel_width: float = 1e-6) -> AlphaSearch:
    """Largest ``alpha`` for which :func:`verify_comparison` passes, by bisection.

    The bracket is found by doubling or halving from ``consts.alpha``; then
    at most ``max_steps`` bisection steps shrink it to ``rel_width``.
    """
    alpha = consts.alpha
    ok, report = _passes(M, f, b, params, consts, tol)
    for _ in range(200):
        if ok:
            break
        alpha *= 0.5
        ok, report = _passes(M, f, b, params, consts.replace(alpha=alpha), tol)
    else:
        raise ComparisonFailure("no alpha > 0 passes the comparison check")
    lo, lo_report = alpha, report
    hi = None
    for _ in range(200):
        cand = lo * 2.0
        ok, report = _passes(M, f, b, params, consts.replace(alpha=cand), tol)
        if not ok:
            hi = cand
            break
        lo, lo_report = cand, report
    if hi is None:
        return AlphaSearch(lo, 0, lo_report)
    steps = 0
    while steps < max_steps and hi - lo > rel_width * lo:
        mid = 0.5 * (lo + hi)
        ok, report = _passes(M, f, b, params, consts.replace(alpha=mid), tol)
        steps += 1
        if ok:
            lo, lo_report = mid, report
        else:
            hi = mid
    return AlphaSearch(lo, steps, lo_report)
