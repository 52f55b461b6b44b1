"""Factorisation of a smooth weight into a decay factor and a bounded factor.

For a C^{k,alpha} weight ``a`` put ``kappa = k + alpha`` and

    sigma(x) = sum_{i=0}^{k} ||D^i a(x)|| ** (kappa / (kappa - i)),
    omega(x) = a(x) / sigma(x)   (or 1 where sigma vanishes).

Then ``a = sigma * omega``.  The factor ``sigma`` decays at rate ``kappa``
near its zeros, and ``omega`` takes values in ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContainmentError
from .geometry import Domain
from .weights import Weight, derivative_norm, with_smoothness

__all__ = ["DecompositionField", "sigma_at", "omega_at", "decompose_on_grid", "SIGMA_FLOOR"]

# sigma below this is treated as an exact zero
SIGMA_FLOOR = 1e-300


def sigma_at(w: Weight, x) -> np.ndarray:
    """Decay factor ``sigma`` at one point or a batch of points.

    Examples
    --------
    >>> from lavgap.weights import catalog_get
    >>> float(sigma_at(catalog_get("power2n(1)").weight, 0.5))
    1.25
    """
    kappa = w.k + w.alpha
    total = None
    for i in range(w.k + 1):
        term = derivative_norm(w, x, i) ** (kappa / (kappa - i))
        total = term if total is None else total + term
    return total


def omega_at(w: Weight, x) -> np.ndarray:
    """Bounded factor ``omega = a / sigma``, set to 1 where ``sigma`` vanishes."""
    a = np.abs(np.asarray(w.value(x), dtype=float))
    s = sigma_at(w, x)
    zero = s < SIGMA_FLOOR
    out = np.where(zero, 1.0, a / np.where(zero, 1.0, s))
    return out


def _sigma_omega(w: Weight, pts):
    a = np.abs(np.asarray(w.value(pts), dtype=float))
    s = sigma_at(w, pts)
    zero = s < SIGMA_FLOOR
    om = np.where(zero, 1.0, a / np.where(zero, 1.0, s))
    return a, s, om


@dataclass
class DecompositionField:
    """Tabulated ``a``, ``sigma`` and ``omega`` on a grid."""

    weight: Weight
    k: int
    alpha: float
    grid: np.ndarray
    a: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray

    def check(self, rtol: float = 1e-12) -> None:
        """Assert the structural invariants of the factorisation."""
        pos = self.sigma >= SIGMA_FLOOR
        if np.any(self.sigma < self.a):
            raise AssertionError("sigma < a at some grid point")
        if np.any((self.omega < 0) | (self.omega > 1)):
            raise AssertionError("omega leaves [0, 1]")
        prod = self.sigma[pos] * self.omega[pos]
        err = np.abs(prod - self.a[pos])
        if np.any(err > rtol * np.maximum(np.abs(self.a[pos]), 1e-300) + 1e-300):
            raise AssertionError("sigma * omega differs from a")
        if np.any(self.omega[~pos] != 1.0):
            raise AssertionError("omega must be 1 where sigma vanishes")

    def rows(self):
        """Rows ``(x[, y], a, sigma, omega)`` for CSV output."""
        for p, a, s, o in zip(self.grid, self.a, self.sigma, self.omega):
            yield (*[float(c) for c in p], float(a), float(s), float(o))


def decompose_on_grid(w: Weight, region: Domain, resolution: int,
                      k: int | None = None, alpha: float | None = None) -> DecompositionField:
    """Tabulate the factorisation on a uniform grid over ``region``.

    ``k`` and ``alpha`` may lower the smoothness tag used for the
    construction; the weight must still provide derivatives up to ``k``.

    Raises
    ------
    ContainmentError
        If ``region`` is not compactly contained in the weight's domain.
    """
    if w.domain is not None and not w.domain.compactly_contains(region):
        raise ContainmentError(f"{region.describe()} is not compactly inside the domain of {w.name}")
    if k is not None or alpha is not None:
        w = with_smoothness(w, w.k if k is None else k, w.alpha if alpha is None else alpha)
    grid = region.uniform_grid(resolution)
    pts = grid[:, 0] if w.N == 1 else grid
    a, s, om = _sigma_omega(w, pts)
    field = DecompositionField(w, w.k, w.alpha, grid, a, s, om)
    field.check()
    return field
