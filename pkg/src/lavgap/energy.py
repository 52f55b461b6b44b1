"""Double phase energy, its Luxembourg norm, and the truncate-then-mollify pipeline.

The energy of a scalar field ``u`` on a domain is

    F[u] = int |grad u|^p + a(x) |grad u|^q dx,    1 <= p <= q.

Two discretisations are offered.  ``central`` takes central-difference
gradients at lattice points and integrates with Simpson's rule (1D) or the
trapezoidal rule (2D).  ``p1`` treats the lattice values as a continuous
piecewise linear function (on intervals, or on the two triangles of every
lattice square) and integrates the weight over each cell with Gauss points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.integrate import simpson, trapezoid

from .errors import ConfigError, GateRefused, ParameterError
from .geometry import Domain, StarShape, call_field
from .mollifier import MollifierConfig, ScalarField, mollify_field
from .weights import Weight

__all__ = [
    "EnergySpec",
    "ApproximationTrace",
    "energy",
    "energy_terms",
    "integrand_field",
    "modular",
    "luxembourg_norm",
    "truncate",
    "approximate",
    "equiintegrability_index",
    "top_fraction_share",
    "p1_cell_weight_integrals",
    "lattice_triangles",
    "mode_gate",
    "EQUI_FRACTIONS",
]

EQUI_FRACTIONS = (1e-1, 1e-2, 1e-3)
TRUNCATION_PERCENTILE = 99.9


@dataclass(frozen=True)
class EnergySpec:
    """Exponents, weight, domain and quadrature level of a double phase energy.

    ``level`` is the number of Gauss points per axis used to integrate the
    weight over a cell in ``p1`` mode.
    """

    p: float
    q: float
    weight: Weight
    domain: Domain
    level: int = 4

    def __post_init__(self):
        if not 1.0 <= self.p <= self.q < math.inf:
            raise ParameterError(f"need 1 <= p <= q < inf, got p={self.p}, q={self.q}")
        if self.level < 1:
            raise ParameterError("quadrature level must be >= 1")
        if self.weight.N != self.domain.N:
            raise ParameterError("weight and domain dimensions differ")


def _weight_values(spec: EnergySpec, pts: np.ndarray) -> np.ndarray:
    return np.asarray(call_field(spec.weight.value, pts), dtype=float)


def _grad_norm_central(u: ScalarField) -> np.ndarray:
    grads = u.gradient()
    return np.sqrt(sum(g.values**2 for g in grads))


def _inside_mask(u: ScalarField, spec: EnergySpec) -> np.ndarray:
    if spec.domain.kind != "ball" or u.N == 1:
        return np.ones(u.values.shape, dtype=bool)
    return spec.domain.contains(u.points, closed=True).reshape(u.values.shape)


def integrand_field(u: ScalarField, spec: EnergySpec, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """``(|grad u / scale|^p, a |grad u / scale|^q)`` at the lattice points (central differences)."""
    g = _grad_norm_central(u) / scale
    a = _weight_values(spec, u.points).reshape(u.values.shape)
    mask = _inside_mask(u, spec)
    return np.where(mask, g**spec.p, 0.0), np.where(mask, a * g**spec.q, 0.0)


def _integrate_lattice(u: ScalarField, vals: np.ndarray) -> float:
    if u.N == 1:
        return float(simpson(vals, x=u.axes[0]))
    v = vals
    for ax in reversed(u.axes):
        v = trapezoid(v, ax, axis=-1)
    return float(v)


@lru_cache(maxsize=8)
def _gauss01(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0


def lattice_triangles(shape: tuple[int, int]) -> np.ndarray:
    """Vertex index triples of the two triangles in every lattice square.

    Vertices are numbered ``i * ny + j``.  Squares are split along the
    diagonal from ``(i, j)`` to ``(i+1, j+1)``; all lower-right triangles
    come first.
    """
    nx, ny = shape
    I, J = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    v00 = (I * ny + J).ravel()
    v10 = ((I + 1) * ny + J).ravel()
    v01 = (I * ny + J + 1).ravel()
    v11 = ((I + 1) * ny + J + 1).ravel()
    return np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])


def p1_cell_weight_integrals(weight: Weight, axes: Sequence[np.ndarray], level: int = 4) -> np.ndarray:
    """``int_cell a`` for every P1 cell of the lattice spanned by ``axes``.

    In 1D the cells are the lattice intervals.  In 2D they are the triangles
    listed by :func:`lattice_triangles`, integrated with a
    collapsed tensor Gauss rule of ``level**2`` points.
    """
    x, w = _gauss01(level)
    if len(axes) == 1:
        t = np.asarray(axes[0], dtype=float)
        a, h = t[:-1], np.diff(t)
        nodes = a[:, None] + h[:, None] * x[None, :]
        vals = np.asarray(weight.value(nodes.ravel()), dtype=float).reshape(nodes.shape)
        return (vals @ w) * h
    ax0, ax1 = (np.asarray(a, dtype=float) for a in axes)
    X, Y = np.meshgrid(ax0, ax1, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tri = lattice_triangles(X.shape)
    P0, P1, P2 = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    # collapsed map (s, t) -> P0 + s (P1 - P0) + s t (P2 - P1), Jacobian 2|T| s
    S, T = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    s, t, ww = S.ravel(), T.ravel(), W.ravel()
    e1, e2 = P1 - P0, P2 - P1
    area2 = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    qp = P0[:, None, :] + s[None, :, None] * e1[:, None, :] + (s * t)[None, :, None] * e2[:, None, :]
    vals = np.asarray(weight.value(qp.reshape(-1, 2)), dtype=float).reshape(len(tri), len(s))
    return (vals @ (ww * s)) * area2


def _p1_gradients(u: ScalarField) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell gradient norms and cell measures of the P1 interpolant."""
    if u.N == 1:
        h = np.diff(u.axes[0])
        return np.abs(np.diff(u.values)) / h, h
    X, Y = np.meshgrid(*u.axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    vals = u.values.ravel()
    tri = lattice_triangles(u.values.shape)
    P0, P1, P2 = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    d1, d2 = P1 - P0, P2 - P0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    f1 = vals[tri[:, 1]] - vals[tri[:, 0]]
    f2 = vals[tri[:, 2]] - vals[tri[:, 0]]
    gx = (f1 * d2[:, 1] - f2 * d1[:, 1]) / det
    gy = (f2 * d1[:, 0] - f1 * d2[:, 0]) / det
    return np.hypot(gx, gy), np.abs(det) / 2.0


def energy_terms(u: ScalarField, spec: EnergySpec, mode: str = "central", scale: float = 1.0) -> tuple[float, float]:
    """``(int |grad u|^p, int a |grad u|^q)`` with ``grad u`` divided by ``scale``."""
    if mode == "central":
        pt, qt = integrand_field(u, spec, scale)
        return _integrate_lattice(u, pt), _integrate_lattice(u, qt)
    if mode == "p1":
        if u.N == 2 and spec.domain.kind == "ball":
            raise ParameterError("p1 mode needs a box domain in 2D")
        g, meas = _p1_gradients(u)
        g = g / scale
        aint = p1_cell_weight_integrals(spec.weight, u.axes, spec.level)
        return float(np.sum(meas * g**spec.p)), float(np.sum(aint * g**spec.q))
    raise ParameterError(f"unknown energy mode {mode!r}")


def energy(u: ScalarField, spec: EnergySpec, mode: str = "central") -> float:
    """``F[u]`` by lattice quadrature.

    Examples
    --------
    >>> from lavgap.geometry import Domain
    >>> from lavgap.weights import constant_weight
    >>> I = Domain.interval(0, 1)
    >>> u = ScalarField.from_function(I, 101, lambda t: t, False)
    >>> round(energy(u, EnergySpec(2, 3, constant_weight(1.0), I)), 10)
    2.0
    """
    pt, qt = energy_terms(u, spec, mode)
    return pt + qt


def modular(u: ScalarField, spec: EnergySpec, s: float, mode: str = "central") -> float:
    """Energy of ``u / s``."""
    pt, qt = energy_terms(u, spec, mode, scale=s)
    return pt + qt


def luxembourg_norm(u: ScalarField, spec: EnergySpec, tol: float = 1e-10, mode: str = "central") -> float:
    """``inf{s > 0 : modular(u / s) <= 1}`` by bracketing and bisection."""
    if modular(u, spec, 1.0, mode) == 0.0:
        return 0.0
    lo = hi = 1.0
    if modular(u, spec, 1.0, mode) > 1.0:
        while modular(u, spec, hi, mode) > 1.0:
            lo, hi = hi, hi * 2.0
    else:
        while modular(u, spec, lo, mode) <= 1.0:
            hi, lo = lo, lo / 2.0
    # modular(lo) > 1 >= modular(hi)
    while (hi - lo) > tol * hi:
        mid = 0.5 * (lo + hi)
        if modular(u, spec, mid, mode) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def truncate(u: ScalarField, M: float) -> ScalarField:
    """Values clamped to ``[-M, M]``."""
    if not M > 0:
        raise ParameterError("truncation level must be positive")
    return u.with_values(np.clip(u.values, -M, M))


def top_fraction_share(values: np.ndarray, fraction: float) -> float:
    """Share of the total mass carried by the largest ``fraction`` of cells."""
    v = np.sort(np.abs(np.ravel(values)))[::-1]
    total = float(np.sum(v))
    if total == 0.0:
        return 0.0
    k = max(1, int(round(fraction * len(v))))
    return float(np.sum(v[:k]) / total)


def equiintegrability_index(fields: Sequence, fraction: float) -> float:
    """Largest top-``fraction`` mass share over a family of integrand fields.

    Examples
    --------
    >>> equiintegrability_index([np.ones(1000), np.ones(1000)], 0.01)
    0.01
    """
    if len(fields) < 2:
        raise ParameterError("need at least two fields")
    vals = [f.values if isinstance(f, ScalarField) else np.asarray(f) for f in fields]
    return max(top_fraction_share(v, fraction) for v in vals)


def mode_gate(spec: EnergySpec, mode: str, gamma: float | None = None) -> tuple[bool, str]:
    """Exponent condition of the approximation result for ``mode`` ``i`` or ``ii``."""
    kappa = spec.weight.k + spec.weight.alpha
    N = spec.domain.N
    if mode == "i":
        bound = spec.p + kappa * max(1.0, spec.p / N)
        ok = spec.q <= bound + 1e-12
        return ok, f"q <= p + kappa*max(1, p/N): {spec.q:g} <= {spec.p:g} + {kappa:g}*{max(1.0, spec.p / N):g} = {bound:g} is {ok}"
    if mode == "ii":
        if gamma is None or not 0.0 < gamma < 1.0:
            return False, f"0 < gamma < 1 is False for gamma={gamma}"
        bound = spec.p + kappa / (1.0 - gamma)
        ok = spec.q <= bound + 1e-12
        return ok, f"q <= p + kappa/(1-gamma): {spec.q:g} <= {spec.p:g} + {kappa:g}/{1 - gamma:g} = {bound:g} is {ok}"
    raise ParameterError(f"unknown mode {mode!r}")


@dataclass
class ApproximationTrace:
    """Diagnostics of the truncate-then-mollify sequence for one field."""

    deltas: list[float]
    energies: list[float]
    p_terms: list[float]
    q_terms: list[float]
    w11_errors: list[float]
    equi_index: list[float]
    mode: str
    gamma: float | None
    reference_energy: float
    truncation_level: float
    tau: float
    theta: float | None
    gate: str
    equi_by_fraction: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.deltas[:-1], self.deltas[1:])):
            raise ConfigError("delta schedule must be strictly decreasing")
        if not all(np.isfinite(self.energies)):
            raise ConfigError("non-finite energy in the trace")

    def relative_error(self) -> float:
        ref = self.reference_energy
        return abs(self.energies[-1] - ref) / abs(ref) if ref else abs(self.energies[-1])

    def rows(self):
        for row in zip(self.deltas, self.energies, self.p_terms, self.q_terms, self.w11_errors, self.equi_index):
            yield tuple(float(v) for v in row)


def _w11_error(a: ScalarField, b: ScalarField) -> float:
    diff = a.with_values(a.values - b.values)
    g = _grad_norm_central(diff)
    v = np.abs(diff.values) + g
    return _integrate_lattice(a, v)


def approximate(u: ScalarField, spec: EnergySpec, star: StarShape, schedule: Sequence[float],
                mode: str = "i", gamma: float | None = None, offset: ScalarField | None = None,
                energy_mode: str = "central") -> ApproximationTrace:
    """Truncate, mollify with squeezing, and record energies along a ``delta`` schedule.

    Parameters
    ----------
    u : ScalarField
        Field on ``spec.domain``.  Without ``offset`` it must vanish outside
        the domain.
    schedule : sequence of float
        Strictly decreasing ``delta`` values, each below ``star.R / 4``.
    mode : {"i", "ii"}
        Which exponent condition licenses the run; ``ii`` needs ``gamma``.
    offset : ScalarField, optional
        Extension of the boundary datum.  The pipeline then acts on
        ``u - offset`` and adds ``offset`` back.

    Raises
    ------
    GateRefused
        If the exponent condition of ``mode`` fails.
    """
    ok, text = mode_gate(spec, mode, gamma)
    if not ok:
        raise GateRefused(text)
    schedule = [float(d) for d in schedule]
    if len(schedule) == 0 or any(b >= a for a, b in zip(schedule[:-1], schedule[1:])):
        raise ConfigError("delta schedule must be nonempty and strictly decreasing")
    base = u if offset is None else u.with_values(u.values - offset.values)
    level = float(np.percentile(np.abs(base.values), TRUNCATION_PERCENTILE))
    cut = truncate(base, level) if level > 0 else base
    ref = energy(u, spec, energy_mode)
    out = dict(deltas=[], energies=[], p_terms=[], q_terms=[], w11_errors=[], equi_index=[])
    integrands = []
    for d in schedule:
        cfg = MollifierConfig(star, d)
        ud = mollify_field(cfg, cut)
        if offset is not None:
            ud = ud.with_values(ud.values + offset.values)
        pt, qt = energy_terms(ud, spec, energy_mode)
        pf, qf = integrand_field(ud, spec)
        integrands.append(pf + qf)
        out["deltas"].append(d)
        out["energies"].append(pt + qt)
        out["p_terms"].append(pt)
        out["q_terms"].append(qt)
        out["w11_errors"].append(_w11_error(ud, u))
        out["equi_index"].append(top_fraction_share(pf + qf, EQUI_FRACTIONS[-1]))
    by_fraction = {}
    if len(integrands) >= 2:
        by_fraction = {fr: equiintegrability_index(integrands, fr) for fr in EQUI_FRACTIONS}
    tau = (2.0 + spec.domain.diameter) / star.R
    theta = (spec.q - spec.p) * (1.0 - gamma) if mode == "ii" else None
    return ApproximationTrace(mode=mode, gamma=gamma, reference_energy=ref, truncation_level=level,
                              tau=tau, theta=theta, gate=text, equi_by_fraction=by_fraction, **out)
