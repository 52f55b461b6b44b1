"""Convolution with squeezing toward a star centre, and a discrete maximal operator.

For a domain star-shaped with respect to ``B(x0, R)`` and ``0 < delta < R/4``
put ``kappa = 1 - delta/R`` and

    S u(x) = int rho_delta(z) u(x0 + (x - z - x0) / kappa) dz,

where ``rho_delta`` is the standard bump rescaled to ``B(0, delta)``.  The
argument of ``u`` is pulled toward ``x0`` before averaging, so ``S u`` is
supported inside the domain whenever ``u`` vanishes outside it, and

    grad S u = (1 / kappa) S(grad u).

Fields live on uniform lattices and are interpolated (piecewise linearly)
between lattice points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.interpolate import RegularGridInterpolator

from .errors import ConfigError, ParameterError
from .geometry import Domain, StarShape, as_points

__all__ = [
    "MollifierConfig",
    "ScalarField",
    "kernel_eval",
    "kernel_constants",
    "mollify",
    "mollify_gradient",
    "mollify_field",
    "check_linf_bound",
    "check_holder_bound",
    "lattice_holder_seminorm",
    "maximal_function",
    "maximal_function_lattice",
    "weighted_maximal_probe",
]

KERNELS = ("bump",)
# Gauss cells across [-delta, delta] per axis; 4 nodes each gives 32 nodes per delta
KERNEL_CELLS = 16
KERNEL_GAUSS = 4
# evaluation points per chunk times kernel nodes stays below this
CHUNK_BUDGET = 4_000_000
# offsets of dyadic balls relative to their radius, per axis
MAXIMAL_OFFSETS = 17
MAXIMAL_CELLS = 32


def _bump_profile(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s < 1.0
    out[m] = np.exp(-1.0 / (1.0 - s[m] ** 2))
    return out


def _bump_profile_slope(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s < 1.0
    sm = s[m]
    out[m] = np.exp(-1.0 / (1.0 - sm**2)) * (-2.0 * sm / (1.0 - sm**2) ** 2)
    return out


@lru_cache(maxsize=4)
def kernel_constants(N: int, kernel: str = "bump") -> tuple[float, float]:
    """``(normaliser, ||grad rho||_{L^1})`` for the unit-scale kernel in dimension ``N``.

    ``rho(x) = normaliser * exp(-1 / (1 - |x|^2))`` on the unit ball.  Both
    numbers come from adaptive quadrature of the radial profile.
    """
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}")
    opts = dict(epsabs=1e-14, epsrel=1e-13, limit=200)
    if N == 1:
        mass = 2.0 * quad(lambda s: float(_bump_profile(s)), 0.0, 1.0, **opts)[0]
        grad = 2.0 * quad(lambda s: abs(float(_bump_profile_slope(s))), 0.0, 1.0, **opts)[0]
    elif N == 2:
        mass = 2.0 * math.pi * quad(lambda s: s * float(_bump_profile(s)), 0.0, 1.0, **opts)[0]
        grad = 2.0 * math.pi * quad(lambda s: s * abs(float(_bump_profile_slope(s))), 0.0, 1.0, **opts)[0]
    else:
        raise ConfigError("kernels are implemented for N = 1, 2")
    return 1.0 / mass, grad / mass


@dataclass(frozen=True)
class MollifierConfig:
    """Squeezing mollifier on a star-shaped domain.

    Raises
    ------
    ConfigError
        Unless ``0 < delta < R / 4`` and the kernel tag is known.
    """

    star: StarShape
    delta: float
    kernel: str = "bump"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if not 0 < self.delta < self.star.R / 4.0:
            raise ConfigError(f"delta={self.delta} must lie in (0, R/4) with R={self.star.R}")

    @property
    def N(self) -> int:
        return self.star.domain.N

    @property
    def kappa(self) -> float:
        return 1.0 - self.delta / self.star.R

    @property
    def x0(self) -> np.ndarray:
        return np.asarray(self.star.x0, dtype=float)

    @property
    def grad_l1(self) -> float:
        """``||grad rho||_{L^1}`` of the unit-scale kernel."""
        return kernel_constants(self.N, self.kernel)[1]

    def with_delta(self, delta: float) -> "MollifierConfig":
        return MollifierConfig(self.star, delta, self.kernel)


def kernel_eval(cfg: MollifierConfig, x) -> np.ndarray:
    """``rho_delta(x) = delta^{-N} rho(x / delta)``.

    Examples
    --------
    >>> from lavgap.geometry import Domain, StarShape
    >>> cfg = MollifierConfig(StarShape(Domain.interval(-1, 1), (0.0,), 0.9), 0.1)
    >>> float(kernel_eval(cfg, 0.1))
    0.0
    """
    pts = as_points(x, cfg.N)
    s = np.linalg.norm(pts, axis=1) / cfg.delta
    c = kernel_constants(cfg.N, cfg.kernel)[0]
    out = c * _bump_profile(s) / cfg.delta**cfg.N
    return out if np.ndim(x) > (0 if cfg.N == 1 else 1) else out[0]


@lru_cache(maxsize=16)
def _unit_kernel_rule(N: int, kernel: str):
    """Composite Gauss nodes on the unit ball with kernel-times-weight factors summing to 1."""
    g, gw = np.polynomial.legendre.leggauss(KERNEL_GAUSS)
    edges = np.linspace(-1.0, 1.0, KERNEL_CELLS + 1)
    a, h = edges[:-1], np.diff(edges)
    nodes = (a[:, None] + h[:, None] * (g[None, :] + 1.0) / 2.0).ravel()
    weights = (h[:, None] * gw[None, :] / 2.0).ravel()
    if N == 1:
        z = nodes.reshape(-1, 1)
        w = weights
    else:
        X, Y = np.meshgrid(nodes, nodes, indexing="ij")
        z = np.column_stack([X.ravel(), Y.ravel()])
        w = np.outer(weights, weights).ravel()
    rho = kernel_constants(N, kernel)[0] * _bump_profile(np.linalg.norm(z, axis=1))
    keep = rho > 0
    z, w = z[keep], (w * rho)[keep]
    # normalising the discrete weights makes S reproduce constants exactly
    return z, w / np.sum(w)


@dataclass
class ScalarField:
    """Values on a uniform lattice over ``domain``.

    ``axes`` holds one coordinate array per dimension and ``values`` has
    shape ``tuple(len(a) for a in axes)``.  With ``vanishes_outside`` the
    interpolant is zero outside ``domain``.
    """

    axes: tuple
    values: np.ndarray
    domain: Domain
    vanishes_outside: bool = True
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ParameterError("values do not match the lattice shape")
        if not np.all(np.isfinite(self.values)):
            raise ParameterError("field values must be finite")
        for a in self.axes:
            if len(a) < 2 or np.any(np.diff(a) <= 0):
                raise ParameterError("lattice axes must be increasing with positive spacing")

    @classmethod
    def from_function(cls, domain: Domain, resolution: int, f: Callable,
                      vanishes_outside: bool = True) -> "ScalarField":
        """Sample ``f`` on the uniform lattice of ``domain``'s bounding box."""
        bb = domain.bounding_box()
        axes = tuple(np.linspace(lo, hi, resolution) for lo, hi in bb)
        sf = cls(axes, np.zeros(tuple(len(a) for a in axes)), domain, vanishes_outside)
        vals = np.asarray(f(sf.points if domain.N > 1 else sf.points[:, 0]), dtype=float)
        vals = vals.reshape(sf.values.shape)
        if vanishes_outside and domain.N > 1:
            vals = np.where(domain.contains(sf.points, closed=True).reshape(vals.shape), vals, 0.0)
        return cls(axes, vals, domain, vanishes_outside)

    @property
    def N(self) -> int:
        return len(self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float((a[-1] - a[0]) / (len(a) - 1)) for a in self.axes)

    @property
    def points(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.column_stack([g.ravel() for g in grids])

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.axes, values, self.domain, self.vanishes_outside)

    def __call__(self, x) -> np.ndarray:
        """Piecewise linear interpolation at points ``x``."""
        pts = as_points(x, self.N)
        if self.N == 1:
            fill = 0.0 if self.vanishes_outside else None
            left = fill if fill is not None else self.values[0]
            right = fill if fill is not None else self.values[-1]
            out = np.interp(pts[:, 0], self.axes[0], self.values, left=left, right=right)
        else:
            if self._interp is None:
                self._interp = RegularGridInterpolator(
                    self.axes, self.values, method="linear", bounds_error=False,
                    fill_value=0.0 if self.vanishes_outside else None)
            out = self._interp(pts)
        if self.vanishes_outside:
            out = np.where(self.domain.contains(pts, closed=True), out, 0.0)
        return out

    def gradient(self) -> list["ScalarField"]:
        """Central-difference partial derivatives as fields on the same lattice."""
        # scalar steps on uniform axes keep constant fields exactly flat
        steps = [h if np.allclose(np.diff(a), h, rtol=1e-9, atol=0) else a
                 for a, h in zip(self.axes, self.spacing)]
        grads = np.gradient(self.values, *steps, edge_order=2)
        if self.N == 1:
            grads = [grads]
        return [ScalarField(self.axes, g, self.domain, self.vanishes_outside) for g in grads]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def l1_norm(self) -> float:
        """Trapezoidal ``int |u|`` over the lattice box."""
        v = np.abs(self.values)
        for ax in reversed(self.axes):
            v = trapezoid(v, ax, axis=-1)
        return float(v)


def _evaluate_points(x, N: int) -> np.ndarray:
    return as_points(x, N)


def mollify(cfg: MollifierConfig, u: ScalarField, x) -> np.ndarray:
    """``S u`` at one point or a batch of points.

    The integral over ``B(0, delta)`` uses 32 Gauss nodes per ``delta``
    along each axis; the discrete kernel weights are normalised to sum to 1.
    """
    if u.N != cfg.N:
        raise ParameterError("field and mollifier dimensions differ")
    pts = _evaluate_points(x, cfg.N)
    z, w = _unit_kernel_rule(cfg.N, cfg.kernel)
    z = cfg.delta * z
    x0, kappa = cfg.x0, cfg.kappa
    out = np.empty(len(pts))
    chunk = max(1, CHUNK_BUDGET // len(w))
    for i in range(0, len(pts), chunk):
        p = pts[i:i + chunk]
        y = x0 + (p[:, None, :] - z[None, :, :] - x0) / kappa
        vals = u(y.reshape(-1, cfg.N)).reshape(len(p), len(w))
        out[i:i + chunk] = vals @ w
    scalar = np.ndim(x) == 0 if cfg.N == 1 else np.ndim(x) == 1
    return out[0] if scalar else out


def mollify_gradient(cfg: MollifierConfig, u: ScalarField, x, grad: Sequence[ScalarField] | None = None):
    """``grad S u(x) = (1/kappa) S(grad u)(x)``, with ``grad u`` by central differences.

    Returns an array of shape ``(n, N)`` (or ``(N,)`` for a single point).
    """
    if grad is None:
        grad = u.gradient()
    pts = _evaluate_points(x, cfg.N)
    comps = [np.atleast_1d(mollify(cfg, g, pts)) for g in grad]
    out = np.column_stack(comps) / cfg.kappa
    scalar = np.ndim(x) == 0 if cfg.N == 1 else np.ndim(x) == 1
    return out[0] if scalar else out


def mollify_field(cfg: MollifierConfig, u: ScalarField) -> ScalarField:
    """``S u`` tabulated on the lattice of ``u``."""
    vals = mollify(cfg, u, u.points)
    return u.with_values(np.asarray(vals).reshape(u.values.shape))


def _lattice_gradient_sup(cfg: MollifierConfig, u: ScalarField) -> float:
    g = mollify_gradient(cfg, u, u.points)
    return float(np.max(np.linalg.norm(np.atleast_2d(g), axis=1)))


def check_linf_bound(cfg: MollifierConfig, u: ScalarField) -> tuple[float, float, bool]:
    """Compare ``max |grad S u|`` on the lattice with ``delta^{-1} ||u||_inf ||grad rho||_1``."""
    lhs = _lattice_gradient_sup(cfg, u)
    rhs = u.sup_norm() * cfg.grad_l1 / cfg.delta
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-6))


def lattice_holder_seminorm(u: ScalarField, gamma: float, pairs: int = 200_000, seed: int = 0,
                            exhaustive_limit: int = 4000) -> float:
    """``max |u(x) - u(y)| / |x - y|^gamma`` over lattice pairs.

    All pairs are used when the lattice has at most ``exhaustive_limit``
    points; otherwise every pair at axis offsets up to 64 plus ``pairs``
    random pairs.
    """
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    pts = u.points
    vals = u.values.ravel()
    n = len(vals)
    best = 0.0
    if n <= exhaustive_limit:
        for i in range(0, n, 512):
            d = np.linalg.norm(pts[i:i + 512, None, :] - pts[None, :, :], axis=2)
            dv = np.abs(vals[i:i + 512, None] - vals[None, :])
            m = d > 0
            best = max(best, float(np.max(np.where(m, dv / np.where(m, d, 1.0) ** gamma, 0.0))))
        return best
    shape = u.values.shape
    for axis in range(u.N):
        h = u.spacing[axis]
        for off in range(1, min(65, shape[axis])):
            a = np.take(u.values, range(off, shape[axis]), axis=axis)
            b = np.take(u.values, range(0, shape[axis] - off), axis=axis)
            best = max(best, float(np.max(np.abs(a - b))) / (off * h) ** gamma)
    rng = np.random.default_rng(seed)
    i, j = rng.integers(n, size=pairs), rng.integers(n, size=pairs)
    d = np.linalg.norm(pts[i] - pts[j], axis=1)
    m = d > 0
    if np.any(m):
        best = max(best, float(np.max(np.abs(vals[i] - vals[j])[m] / d[m] ** gamma)))
    return best


def check_holder_bound(cfg: MollifierConfig, u: ScalarField, gamma: float,
                       seminorm: float | None = None) -> tuple[float, float, bool]:
    """Compare ``max |grad S u|`` with ``delta^{gamma-1} kappa^{-gamma} [u]_gamma ||grad rho||_1``.

    ``[u]_gamma`` is estimated from lattice pairs unless given.
    """
    if not 0 < gamma <= 1:
        raise ParameterError("gamma must lie in (0, 1]")
    if seminorm is None:
        seminorm = lattice_holder_seminorm(u, gamma)
    lhs = _lattice_gradient_sup(cfg, u)
    rhs = cfg.delta ** (gamma - 1.0) * cfg.kappa ** (-gamma) * seminorm * cfg.grad_l1
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-6))


@lru_cache(maxsize=4)
def _unit_ball_rule(N: int):
    g, gw = np.polynomial.legendre.leggauss(4)
    edges = np.linspace(-1.0, 1.0, MAXIMAL_CELLS + 1)
    a, h = edges[:-1], np.diff(edges)
    nodes = (a[:, None] + h[:, None] * (g[None, :] + 1.0) / 2.0).ravel()
    weights = (h[:, None] * gw[None, :] / 2.0).ravel()
    if N == 1:
        return nodes.reshape(-1, 1), weights / weights.sum()
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    z = np.column_stack([X.ravel(), Y.ravel()])
    w = np.outer(weights, weights).ravel()
    keep = np.linalg.norm(z, axis=1) < 1.0
    return z[keep], w[keep] / w[keep].sum()


def _dyadic_balls(x: np.ndarray, U: Domain, ball_count: int):
    """Centres and radii of admissible dyadic balls (``x`` in B, ``3B`` inside ``U``)."""
    N = len(x)
    s = np.linspace(-1.0, 1.0, MAXIMAL_OFFSETS + 2)[1:-1]
    if N == 1:
        offs = s.reshape(-1, 1)
    else:
        X, Y = np.meshgrid(s, s, indexing="ij")
        offs = np.column_stack([X.ravel(), Y.ravel()])
        offs = offs[np.linalg.norm(offs, axis=1) < 1.0]
    centres, radii = [], []
    for j in range(ball_count):
        r = 2.0**-j
        c = x + r * offs
        ok = U.distance_to_complement(c) >= 3.0 * r
        centres.append(c[ok])
        radii.append(np.full(int(ok.sum()), r))
    return np.vstack(centres), np.concatenate(radii)


def maximal_function(f: ScalarField, x, ball_count: int = 20, U: Domain | None = None) -> float:
    """Lower estimate of ``M_U f(x) = sup avg_B |f|`` over balls with ``x`` in ``B`` and ``3B`` in ``U``.

    The balls have radii ``2^-j`` for ``j < ball_count`` and centres at 17
    offsets per axis within one radius of ``x``.  If none is admissible the
    value is ``|f(x)|``, the limit over shrinking balls.

    Examples
    --------
    >>> from lavgap.geometry import Domain
    >>> U = Domain.interval(-1, 1)
    >>> f = ScalarField.from_function(U, 2001, lambda t: (abs(t) < 0.1) * 1.0, False)
    >>> maximal_function(f, 0.0) >= 0.3
    True
    """
    U = f.domain if U is None else U
    xp = as_points(x, f.N)[0]
    if not U.contains(xp.reshape(1, -1))[0]:
        raise ParameterError("x must lie in U")
    centres, radii = _dyadic_balls(xp, U, ball_count)
    if len(radii) == 0:
        return float(abs(f(xp.reshape(1, -1))[0]))
    z, w = _unit_ball_rule(f.N)
    best = 0.0
    chunk = max(1, CHUNK_BUDGET // len(w))
    for i in range(0, len(radii), chunk):
        c, r = centres[i:i + chunk], radii[i:i + chunk]
        y = c[:, None, :] + r[:, None, None] * z[None, :, :]
        vals = np.abs(f(y.reshape(-1, f.N))).reshape(len(c), len(w))
        best = max(best, float(np.max(vals @ w)))
    return best


def maximal_function_lattice(f: ScalarField, ball_count: int = 20, U: Domain | None = None) -> ScalarField:
    """``maximal_function`` at every lattice point inside ``U`` (zero elsewhere)."""
    U = f.domain if U is None else U
    pts = f.points
    inside = U.contains(pts)
    vals = np.zeros(len(pts))
    for i in np.flatnonzero(inside):
        vals[i] = maximal_function(f, pts[i], ball_count, U)
    return f.with_values(vals.reshape(f.values.shape))


def weighted_maximal_probe(weight: Callable, r: float, U: Domain, trials: int = 10, seed: int = 0,
                           resolution: int = 401, knots: int = 12, ball_count: int = 20):
    """Ratios ``||M_U f||_{L^r(w)} / ||f||_{L^r(w)}`` for random piecewise linear ``f``.

    Each ``f`` interpolates ``knots`` uniform values in ``[-1, 1]`` on a
    uniform partition of ``U`` (1D only).  Returns ``(max_ratio, ratios)``.
    """
    if U.N != 1:
        raise ParameterError("the probe is implemented on intervals")
    if not r > 1:
        raise ParameterError("r must exceed 1")
    rng = np.random.default_rng(seed)
    lo, hi = U.bounding_box()[0]
    t = np.linspace(lo, hi, resolution)
    wt = np.asarray(weight(t), dtype=float)
    ratios = []
    for _ in range(trials):
        kx = np.linspace(lo, hi, knots)
        ky = rng.uniform(-1.0, 1.0, size=knots)
        f = ScalarField((t,), np.interp(t, kx, ky), U, vanishes_outside=False)
        Mf = maximal_function_lattice(f, ball_count, U)
        num = trapezoid(np.abs(Mf.values) ** r * wt, t) ** (1.0 / r)
        den = trapezoid(np.abs(f.values) ** r * wt, t) ** (1.0 / r)
        ratios.append(float(num / den))
    return max(ratios), ratios
