"""The exponents ``alpha`` and ``beta`` and the calibratable gamma constants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import InvalidInputError

GAMMA_INDICES = tuple(range(1, 13))


def _default_gammas() -> dict:
    return {i: 1.0 for i in GAMMA_INDICES}


def compute_beta(p: float, a: float, sigma: float) -> float:
    """Return ``beta`` in ``(0, 1)`` for the given ``p``, ``a`` and ``sigma``."""
    if not p > 1:
        raise InvalidInputError(f"p > 1 required (got p = {p})")
    if not a > p - 2:
        raise InvalidInputError(f"a > p - 2 required (got a = {a}, p = {p})")
    if not sigma > 1:
        raise InvalidInputError(f"sigma > 1 required (got sigma = {sigma})")
    q = p / (p - 1)
    root = sigma ** 0.5
    first = 1.0 / (4.0 ** (q + 2) * root)
    second = (1.0 - 1.0 / root) * (a - p + 2) / (8.0 ** (q + 1) * (p - 1))
    return min(first, second) ** 2


def compute_alpha(p: float, a: float, sigma: float, beta: float,
                  gammas: Optional[Mapping[int, float]] = None) -> float:
    """Return ``alpha`` from ``beta`` and the constants gamma_2, 3, 4 and 12."""
    if not 0 < beta < 1:
        raise InvalidInputError(f"0 < beta < 1 required (got beta = {beta})")
    g = _default_gammas()
    if gammas is not None:
        g.update(gammas)
    for i in (2, 3, 4, 12):
        if g.get(i) is None or not g[i] > 0:
            raise InvalidInputError(f"gamma_{i} must be positive (got {g.get(i)})")
    q = p / (p - 1)
    root = sigma ** 0.5
    branches = (
        g[2] * beta ** 0.5,
        g[2] / (4.0 ** (q + 1) * root),
        g[3] / 4.0 ** q,
        g[12] * (a - p + 2) / (4.0 ** q * (p - 1)),
        g[4] / 2.0 ** q,
    )
    return min(branches) ** (p - 1)


@dataclass(frozen=True)
class ComparisonConstants:
    """Gamma constants together with the derived ``alpha`` and ``beta``."""

    gamma: Mapping[int, float] = field(default_factory=_default_gammas)
    beta: float = 0.5
    alpha: float = 1.0

    def __post_init__(self):
        for i, v in self.gamma.items():
            if i not in GAMMA_INDICES:
                raise InvalidInputError(f"gamma index must be in 1..12 (got {i})")
            if not v > 0:
                raise InvalidInputError(f"gamma_{i} must be positive (got {v})")
        if not 0 < self.beta < 1:
            raise InvalidInputError(f"0 < beta < 1 required (got beta = {self.beta})")
        if not self.alpha > 0:
            raise InvalidInputError(f"alpha > 0 required (got alpha = {self.alpha})")

    @classmethod
    def from_params(cls, params, gammas: Optional[Mapping[int, float]] = None,
                    alpha: Optional[float] = None, beta: Optional[float] = None):
        """Build constants for ``params``; explicit ``alpha``/``beta`` bypass the formulas."""
        g = _default_gammas()
        if gammas:
            g.update({int(i): float(v) for i, v in gammas.items()})
        if beta is None:
            beta = compute_beta(params.p, params.a, params.sigma)
        if alpha is None:
            alpha = compute_alpha(params.p, params.a, params.sigma, beta, g)
        return cls(gamma=g, beta=float(beta), alpha=float(alpha))

    def replace(self, **changes) -> "ComparisonConstants":
        data = {"gamma": dict(self.gamma), "beta": self.beta, "alpha": self.alpha}
        data.update(changes)
        return ComparisonConstants(**data)
