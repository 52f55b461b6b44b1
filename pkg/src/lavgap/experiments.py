"""Discrete minimisation of double phase energies and the gap/absence experiments.

The discrete problem uses continuous piecewise linear (P1) elements on the
lattice of a box: segments in 1D, and each lattice square split into two
triangles in 2D.  Its energy is, cell by cell,

    |T| |G_T|^p + (int_T a) |G_T|^q,

which is exactly ``energy(..., mode="p1")`` of the energy module.  It is
minimised over the interior nodal values by a damped Newton method with
Armijo backtracking, so every accepted iterate lowers the energy.

The gap experiment uses a cone weight ``a(x) = dist(x, C)^kappa`` on the
square ``(-1, 1)^2``, where ``C`` is the double cone of half-angle ``theta``
around the vertical axis.  The competitor ``u_0`` is 0-homogeneous: ``+1`` on
the right sector, ``-1`` on the left sector, and an angular transition
inside the cone, where the weight vanishes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from .energy import EnergySpec, approximate, energy, lattice_triangles, mode_gate, p1_cell_weight_integrals
from .errors import ConfigError, DivergenceError, GateRefused, ParameterError
from .geometry import Domain, StarShape
from .mollifier import ScalarField
from .weights import Weight, catalog_get, with_smoothness

__all__ = [
    "MinimizationResult",
    "GapReport",
    "ConeConfig",
    "minimize_discrete",
    "mesh_axes",
    "cone_weight",
    "cone_competitor",
    "competitor_energy",
    "angular_oracle",
    "gap_experiment",
    "absence_experiment",
    "VERDICTS",
]

VERDICTS = ("gap-consistent", "absence-consistent", "inconclusive")
TOLERANCE = 1e-8
MAX_ITER = 100_000
ARMIJO = 1e-4
BACKTRACKS = 60
# curvature floor for the Hessian of |G|^p when p < 2
GRAD_FLOOR = 1e-10
STALL = 4 * np.finfo(float).eps
STALL_COUNT = 3
LEVENBERG_TRIES = 8
STABILITY = 0.02
MARGIN = 0.05


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class MinimizationResult:
    """Outcome of one discrete minimisation.

    Attributes
    ----------
    level : int
        Mesh level; the lattice has ``2**level + 1`` points per axis.
    minimizer : ScalarField
        Nodal values of the discrete minimiser.
    energy : float
        Discrete energy of ``minimizer``.
    iterations : int
    residual : float
        Largest absolute partial derivative of the discrete energy with
        respect to a free nodal value.
    tolerance : float
    converged : bool
        ``residual <= tolerance``.
    history : list of float
        Energy after every accepted iteration (first entry: initial guess).
    """

    level: int
    minimizer: ScalarField
    energy: float
    iterations: int
    residual: float
    tolerance: float
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.energy >= 0:
            raise ConfigError("discrete energy must be nonnegative")


@dataclass(frozen=True)
class GapReport:
    """Competitor energy against discrete minima over a sequence of mesh levels.

    ``margin`` is ``min(minima) / competitor_energy - 1``.
    """

    competitor_energy: float
    levels: list
    minima: list
    verdict: str
    margin: float
    residuals: list
    oracle_energy: float | None = None
    trace_error: float | None = None
    gate: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ParameterError(f"unknown verdict {self.verdict!r}")

    def rows(self):
        """``(level, minimum, residual)`` per mesh level."""
        for row in zip(self.levels, self.minima, self.residuals):
            yield (int(row[0]), float(row[1]), float(row[2]))


# ---------------------------------------------------------------------------
# discrete problem


def mesh_axes(domain: Domain, level: int, grading: int = 0, center=None) -> list[np.ndarray]:
    """Lattice axes of an interval or box, refined ``level`` times by bisection.

    With ``grading = 0`` the base lattice is ``{lo, hi}`` per axis, so level
    ``L`` is the uniform lattice with ``2**L + 1`` points.  With
    ``grading = J > 0`` the base lattice adds the points
    ``c + (hi - c) 2^-j`` and ``c - (c - lo) 2^-j`` (``j = 0..J``) and ``c``
    itself, geometrically graded toward ``center`` (default: the box
    centre).  Bisection keeps the P1 spaces of successive levels nested.
    """
    if domain.kind == "ball":
        raise ParameterError("the discrete minimiser needs an interval or box domain")
    if level < 0 or grading < 0:
        raise ParameterError("mesh level and grading must be >= 0")
    bb = domain.bounding_box()
    c = bb.mean(axis=1) if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    axes = []
    for (lo, hi), ci in zip(bb, c):
        if grading == 0:
            base = np.array([lo, hi])
        else:
            if not lo < ci < hi:
                raise ParameterError("grading center must lie inside the box")
            j = 2.0 ** -np.arange(grading + 1)
            base = np.unique(np.concatenate([ci - (ci - lo) * j, [ci], ci + (hi - ci) * j]))
        ax = base
        for _ in range(level):
            out = np.empty(2 * len(ax) - 1)
            out[0::2] = ax
            out[1::2] = 0.5 * (ax[:-1] + ax[1:])
            ax = out
        axes.append(ax)
    return axes


class _CellProblem:
    """Sum over cells of ``cp |G|^p + cq |G|^q`` with ``G = D_T u``."""

    def __init__(self, nodes: np.ndarray, cp: np.ndarray, cq: np.ndarray, D: np.ndarray,
                 p: float, q: float, free: np.ndarray):
        self.nodes = nodes  # (cells, m) vertex indices
        self.cp, self.cq = cp, cq
        self.D = D  # (cells, N, m) gradient operators
        self.p, self.q = p, q
        self.free = free
        self.n = int(free.size)

    def grads(self, u: np.ndarray) -> np.ndarray:
        return np.einsum("cij,cj->ci", self.D, u[self.nodes])

    def energy(self, u: np.ndarray) -> float:
        g = np.linalg.norm(self.grads(u), axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            return float(np.sum(self.cp * g**self.p + self.cq * g**self.q))

    def _slopes(self, g: np.ndarray) -> np.ndarray:
        # d/dG of cp|G|^p + cq|G|^q equals s * G
        gs = np.where(g > 0, g, 1.0)
        s = self.cp * self.p * gs ** (self.p - 2) + self.cq * self.q * gs ** (self.q - 2)
        if self.p < 2:
            s = np.where(g > 0, s, 0.0)
        return s

    def gradient(self, u: np.ndarray) -> np.ndarray:
        G = self.grads(u)
        g = np.linalg.norm(G, axis=1)
        sG = self._slopes(g)[:, None] * G
        loc = np.einsum("ci,cij->cj", sG, self.D)
        return np.bincount(self.nodes.ravel(), weights=loc.ravel(), minlength=self.n)

    def hessian(self, u: np.ndarray) -> sp.csr_matrix:
        G = self.grads(u)
        g = np.maximum(np.linalg.norm(G, axis=1), GRAD_FLOOR)
        p, q = self.p, self.q
        s = self.cp * p * g ** (p - 2) + self.cq * q * g ** (q - 2)
        t = self.cp * p * (p - 2) * g ** (p - 4) + self.cq * q * (q - 2) * g ** (q - 4)
        N = G.shape[1]
        H = s[:, None, None] * np.eye(N)[None] + t[:, None, None] * np.einsum("ci,cj->cij", G, G)
        K = np.einsum("cki,ckl,clj->cij", self.D, H, self.D)
        m = self.nodes.shape[1]
        rows = np.repeat(self.nodes, m, axis=1).ravel()
        cols = np.tile(self.nodes, (1, m)).ravel()
        return sp.csr_matrix((K.ravel(), (rows, cols)), shape=(self.n, self.n))


def _p1_problem(spec: EnergySpec, axes: Sequence[np.ndarray], free: np.ndarray) -> _CellProblem:
    aint = p1_cell_weight_integrals(spec.weight, axes, spec.level)
    if len(axes) == 1:
        t = axes[0]
        h = np.diff(t)
        nodes = np.column_stack([np.arange(len(t) - 1), np.arange(1, len(t))])
        D = np.stack([-1.0 / h, 1.0 / h], axis=1)[:, None, :]
        return _CellProblem(nodes, h, aint, D, spec.p, spec.q, free)
    X, Y = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    tri = lattice_triangles(X.shape)
    P = pts[tri]  # (cells, 3, 2)
    d1, d2 = P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    # gradients of the barycentric coordinates
    g1 = np.column_stack([d2[:, 1], -d2[:, 0]]) / det[:, None]
    g2 = np.column_stack([-d1[:, 1], d1[:, 0]]) / det[:, None]
    g0 = -(g1 + g2)
    D = np.stack([g0, g1, g2], axis=2)  # (cells, 2, 3)
    return _CellProblem(tri, np.abs(det) / 2.0, aint, D, spec.p, spec.q, free)


def _boundary_mask(shape: tuple) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    if len(shape) == 1:
        mask[[0, -1]] = True
    else:
        mask[[0, -1], :] = True
        mask[:, [0, -1]] = True
    return mask


def _newton_step(H: sp.csr_matrix, grad: np.ndarray) -> np.ndarray:
    # Newton direction; a Levenberg shift handles singular curvature (p = 1)
    shift = 0.0
    scale = max(float(np.abs(H.diagonal()).mean()), 1e-300)
    I = sp.identity(H.shape[0], format="csc")
    for _ in range(LEVENBERG_TRIES):
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore", MatrixRankWarning)
            try:
                step = spsolve((H + shift * I).tocsc(), -grad, permc_spec="MMD_AT_PLUS_A")
            except RuntimeError:
                step = None
        if step is not None and np.all(np.isfinite(step)) and float(step @ grad) < 0:
            return step
        shift = max(shift * 100.0, 1e-10 * scale)
    return -grad / scale


def _newton(prob: _CellProblem, u: np.ndarray, tol: float, max_iter: int):
    free = prob.free
    E = prob.energy(u)
    if not np.isfinite(E):
        raise ConfigError("the initial field has non-finite discrete energy")
    history = [E]
    it = stalls = 0
    res = float(np.max(np.abs(prob.gradient(u)[free]), initial=0.0))
    while res > tol and it < max_iter:
        grad = prob.gradient(u)[free]
        H = prob.hessian(u)[free][:, free]
        step = _newton_step(H, grad)
        slope = float(step @ grad)
        lam = 1.0
        for _ in range(BACKTRACKS):
            trial = u.copy()
            trial[free] += lam * step
            Et = prob.energy(trial)
            if np.isfinite(Et) and Et <= E + ARMIJO * lam * slope:
                break
            lam /= 2.0
        else:
            if not np.isfinite(Et):
                raise DivergenceError("non-finite energy after exhausting backtracking")
            break  # no further decrease is representable
        if Et >= E and lam < 1e-12:
            break
        # roundoff floor: the energy no longer moves at machine precision
        stalls = stalls + 1 if E - Et <= STALL * abs(E) else 0
        u, E = trial, Et
        history.append(E)
        it += 1
        res = float(np.max(np.abs(prob.gradient(u)[free]), initial=0.0))
        if stalls >= STALL_COUNT:
            break
    return u, E, it, res, history


def _lattice_field(spec: EnergySpec, axes, f) -> ScalarField:
    shape = tuple(len(a) for a in axes)
    sf = ScalarField(axes, np.zeros(shape), spec.domain, vanishes_outside=False)
    pts = sf.points if len(axes) > 1 else sf.points[:, 0]
    return sf.with_values(np.asarray(f(pts), dtype=float).reshape(shape))


def minimize_discrete(spec: EnergySpec, level: int, u0: Callable, tol: float = TOLERANCE,
                      max_iter: int = MAX_ITER, initial: Callable | None = None,
                      grading: int = 0) -> MinimizationResult:
    """Minimise the P1 discrete energy with boundary nodes pinned to ``u0``.

    Parameters
    ----------
    spec : EnergySpec
        Exponents, weight and an interval or box domain.
    level, grading : int
        Lattice from :func:`mesh_axes`; ``grading = 0`` gives ``2**level + 1``
        uniform points per axis.
    u0 : callable
        Boundary datum, evaluated at all lattice points (package field
        convention).  Its interpolant is the initial guess unless
        ``initial`` (a callable or a coarser ``ScalarField``) is given.
    tol : float
        Stop once every partial derivative with respect to a free node is at
        most ``tol`` in absolute value.

    Raises
    ------
    ConfigError
        If the interpolant of ``u0`` has non-finite discrete energy.
    DivergenceError
        If backtracking cannot recover a finite energy.

    Examples
    --------
    >>> from lavgap.weights import constant_weight
    >>> spec = EnergySpec(2, 2, constant_weight(0.0), Domain.interval(0, 1))
    >>> res = minimize_discrete(spec, 4, lambda t: t ** 2)
    >>> round(res.energy, 10)
    1.0
    """
    axes = mesh_axes(spec.domain, level, grading)
    shape = tuple(len(a) for a in axes)
    datum = _lattice_field(spec, axes, u0)
    bmask = _boundary_mask(shape).ravel()
    if not np.isfinite(energy(datum, spec, mode="p1")):
        raise ConfigError("the boundary datum has no finite-energy extension at this level")
    u = datum.values.ravel().copy() if initial is None else _lattice_field(spec, axes, initial).values.ravel()
    u[bmask] = datum.values.ravel()[bmask]
    prob = _p1_problem(spec, axes, ~bmask)
    u, E, it, res, history = _newton(prob, u, tol, max_iter)
    minimizer = datum.with_values(u.reshape(shape))
    return MinimizationResult(level, minimizer, E, it, res, tol, res <= tol, history)


# ---------------------------------------------------------------------------
# cone configuration


def _cone_angles(pts: np.ndarray):
    """Signed angle from the vertical axis, in ``[-pi/2, pi/2]``."""
    return np.arctan2(pts[:, 0], np.abs(pts[:, 1]))


def cone_weight(theta: float, kappa: float, scale: float = 1.0) -> Weight:
    """``scale * dist(x, C)^kappa`` for the double cone ``{|x_1| <= tan(theta) |x_2|}``.

    The distance is Lipschitz, so the weight is tagged ``C^{0, kappa}`` and
    ``kappa`` must lie in ``(0, 1]``.
    """
    if not 0 < theta < math.pi / 4:
        raise ConfigError("cone half-angle must lie in (0, pi/4)")
    if not 0 < kappa <= 1:
        raise ConfigError("cone weight exponent must lie in (0, 1]")
    if not scale > 0:
        raise ConfigError("cone weight scale must be positive")

    def value(x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.hypot(pts[:, 0], pts[:, 1])
        ang = np.abs(_cone_angles(pts)) - theta
        d = np.where(ang > 0, r * np.sin(np.clip(ang, 0, None)), 0.0)
        return scale * d**kappa

    def deriv(x, l, v):
        raise ParameterError("cone weights carry no derivative oracle")

    return Weight(f"cone({theta:g},{kappa:g},{scale:g})", 2, 0, kappa, value, deriv, None)


def cone_competitor(theta: float) -> Callable:
    """The 0-homogeneous competitor ``u_0 = clip(x_1 / (tan(theta) |x_2|), -1, 1)``.

    It equals the sign of ``x_1`` outside the cone and is linear in
    ``x_1 / |x_2|`` inside, so its trace on the square is piecewise linear
    with kinks at ``x_1 = +-tan(theta)``.
    """
    t = math.tan(theta)

    def u0(x):
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = pts[:, 0] / (t * np.abs(pts[:, 1]))
        tau = np.where(np.isnan(tau), 0.0, tau)
        return np.clip(tau, -1.0, 1.0)

    return u0


@dataclass(frozen=True)
class ConeConfig:
    """A cone-weight configuration on the square ``(-1, 1)^2``.

    Attributes
    ----------
    theta : float
        Cone half-angle in ``(0, pi/4)``.  The edges ``x_1 = +-tan(theta)``
        on the top and bottom sides must be lattice nodes at every level,
        so that the boundary trace of ``u_0`` is matched exactly and the
        discrete spaces are nested.
    kappa : float
        Weight exponent in ``(0, 1]``; the weight is ``C^{0, kappa}``.
    p, q : float
        Exponents with ``1 < p < 2`` and ``p <= q``.
    scale : float
        Weight amplitude ``lambda``.
    levels : tuple of int
        Mesh levels of the discrete minimisations; each level is warm
        started from the minimiser of the previous one.
    grading : int
        Depth of the base lattice graded toward the cone vertex (see
        :func:`mesh_axes`); ``0`` gives uniform lattices.
    single_phase : bool
        Replace the weight by zero and ``q`` by ``p``.
    margin, stability : float
        Verdict thresholds.
    """

    theta: float = math.atan(0.5)
    kappa: float = 0.5
    p: float = 1.5
    q: float = 8.0
    scale: float = 100.0
    levels: tuple = (3, 4, 5, 6)
    grading: int = 6
    single_phase: bool = False
    margin: float = MARGIN
    stability: float = STABILITY
    tol: float = TOLERANCE

    def __post_init__(self):
        if not 1 < self.p < 2 or not self.q >= self.p:
            raise ConfigError("need 1 < p < 2 and q >= p")
        if len(self.levels) < 2 or list(self.levels) != sorted(set(self.levels)):
            raise ConfigError("need at least two increasing mesh levels")
        cone_weight(self.theta, self.kappa, self.scale)
        ax = mesh_axes(self.domain, min(self.levels), self.grading)[0]
        if np.min(np.abs(ax - math.tan(self.theta))) > 1e-12:
            raise ConfigError("the cone edges must pass through lattice nodes on the square boundary")

    @property
    def domain(self) -> Domain:
        return Domain.box((-1.0, 1.0), (-1.0, 1.0))

    @property
    def spec(self) -> EnergySpec:
        if self.single_phase:
            w = Weight("zero", 2, 0, self.kappa, lambda x: np.zeros(len(np.atleast_2d(x))),
                       cone_weight(self.theta, self.kappa, self.scale).derivative, 0.0)
            return EnergySpec(self.p, self.p, w, self.domain)
        return EnergySpec(self.p, self.q, cone_weight(self.theta, self.kappa, self.scale), self.domain)


def _square_extent(s: np.ndarray) -> np.ndarray:
    return 1.0 / np.maximum(np.abs(np.sin(s)), np.abs(np.cos(s)))


def competitor_energy(cfg: ConeConfig, level: int = 10, points: int = 24) -> float:
    """``F[u_0]`` by quadrature graded toward the origin.

    The square is cut into the dyadic frames ``2^-j-1 < |x|_inf < 2^-j``,
    ``j < level``.  In each frame the upper and lower trapezoids are mapped
    to ``(y, x / y)`` coordinates, in which the cone edges are straight
    lines used as breakpoints, and integrated with ``points``-point Gauss
    rules using the exact gradient of ``u_0``.  The left and right
    trapezoids are handled alike.  The central square left over has energy
    ``F[u_0] 2^(-level (2-p))`` by 0-homogeneity; that tail is added in
    closed form.

    Raises
    ------
    ConfigError
        If the energy is not finite.
    """
    spec = cfg.spec
    t = math.tan(cfg.theta)
    xg, wg = np.polynomial.legendre.leggauss(points)

    def integrand(pts):
        y = np.abs(pts[:, 1])
        tau = pts[:, 0] / y
        g = np.where(np.abs(tau) < t, np.sqrt(1.0 + tau**2) / (t * y), 0.0)
        a = np.asarray(spec.weight.value(pts), dtype=float)
        return g**spec.p + a * g**spec.q

    def gauss(a, b):
        return (a + b) / 2 + (b - a) / 2 * xg, wg * (b - a) / 2

    def trapezoid(lo, hi, vertical, sign):
        # points (tau * y, y) with y = sign * rho, rho in (lo, hi), |tau| <= 1
        tot = 0.0
        rho, wr = gauss(lo, hi)
        for ta, tb in ((-1.0, -t), (-t, t), (t, 1.0)):
            tau, wt = gauss(ta, tb)
            R, T = np.meshgrid(rho, tau, indexing="ij")
            W = np.outer(wr, wt) * R  # Jacobian of (rho, tau) -> (tau rho, rho)
            main, other = sign * R, T * R
            pts = np.column_stack([other.ravel(), main.ravel()] if vertical else [main.ravel(), other.ravel()])
            tot += float(np.sum(W.ravel() * integrand(pts)))
        return tot

    frames = 0.0
    for j in range(level):
        hi, lo = 2.0**-j, 2.0 ** -(j + 1)
        frames += sum(trapezoid(lo, hi, vert, sgn) for vert in (True, False) for sgn in (-1.0, 1.0))
    energy_ = frames / (1.0 - 2.0 ** (-level * (2.0 - cfg.p)))
    if not np.isfinite(energy_):
        raise ConfigError("competitor energy is not finite")
    return float(energy_)


def angular_oracle(cfg: ConeConfig, cells: int = 20000) -> float:
    """Minimal energy over 0-homogeneous fields ``u = F(s)`` on the square.

    ``s`` is the signed angle from the vertical axis; the upper and lower
    halves of the square share the profile.  For such fields

        F[u] = 2 int w_p(s) |F'|^p ds + 2 int w_q(s) d(s)^kappa |F'|^q ds,

    with ``w_p = R(s)^(2-p)/(2-p)``, ``w_q = R(s)^(2+kappa-q)/(2+kappa-q)``,
    ``R(s)`` the radial extent of the square and ``d(s)`` the angular
    distance factor to the cone.  When ``q >= 2 + kappa`` the q-term is
    infinite unless ``F' = 0`` off the cone, so the profile is pinned to
    ``-1`` and ``+1`` there.  The discretised problem on ``cells`` angular
    cells separates in the cell slopes under the single constraint that
    they integrate to 2; it is solved through its Lagrange multiplier
    (closed form when only the p-term is active, bisection otherwise).
    """
    p, q, kappa, theta = cfg.p, cfg.q, cfg.kappa, cfg.theta
    if cfg.single_phase:
        q = p
    pinned = (not cfg.single_phase) and q >= 2.0 + kappa
    lo, hi = (-theta, theta) if pinned else (-math.pi / 2, math.pi / 2)
    s = np.linspace(lo, hi, cells + 1)
    mid, h = 0.5 * (s[:-1] + s[1:]), np.diff(s)
    wp = 2.0 * _square_extent(mid) ** (2.0 - p) / (2.0 - p)
    if pinned or cfg.single_phase:
        # minimise sum wp h |d|^p subject to sum h d = 2: d ~ wp^(-1/(p-1))
        d = wp ** (-1.0 / (p - 1.0))
        d *= 2.0 / float(np.sum(h * d))
        return float(np.sum(wp * h * d**p))
    dist = np.sin(np.clip(np.abs(mid) - theta, 0.0, None)) ** kappa
    wq = 2.0 * cfg.scale * _square_extent(mid) ** (2.0 + kappa - q) / (2.0 + kappa - q) * dist
    # slopes share one multiplier: wp p d^(p-1) + wq q d^(q-1) = mu, with sum h d = 2
    def slopes(mu):
        lo_d, hi_d = np.zeros_like(wp), np.full_like(wp, (mu / (wp * p)) ** (1.0 / (p - 1.0)))
        for _ in range(64):
            mid_d = 0.5 * (lo_d + hi_d)
            big = wp * p * mid_d ** (p - 1) + wq * q * mid_d ** (q - 1) > mu
            hi_d = np.where(big, mid_d, hi_d)
            lo_d = np.where(big, lo_d, mid_d)
        return 0.5 * (lo_d + hi_d)

    lo_mu, hi_mu = 1e-300, 1.0
    while float(np.sum(h * slopes(hi_mu))) < 2.0:
        lo_mu, hi_mu = hi_mu, hi_mu * 4.0
    for _ in range(200):
        mu = math.sqrt(lo_mu * hi_mu) if lo_mu > 0 else hi_mu / 2.0
        if float(np.sum(h * slopes(mu))) < 2.0:
            lo_mu = mu
        else:
            hi_mu = mu
        if hi_mu - lo_mu <= 1e-15 * hi_mu:
            break
    d = slopes(hi_mu)
    d *= 2.0 / float(np.sum(h * d))
    return float(np.sum(h * (wp * d**p + wq * d**q)))


def _verdict_gap(competitor: float, minima: Sequence[float], margin: float, stability: float):
    lowest = min(minima)
    m = lowest / competitor - 1.0
    change = abs(minima[-1] - minima[-2]) / abs(minima[-2])
    stable = change < stability
    if stable and m >= margin:
        return "gap-consistent", m
    if stable and m <= stability:
        return "absence-consistent", m
    return "inconclusive", m


def gap_experiment(cfg: ConeConfig, quadrature_level: int = 10, oracle_cells: int = 20000) -> GapReport:
    """Compare ``F[u_0]`` with discrete minima for the boundary trace of ``u_0``.

    Verdicts: ``gap-consistent`` when every discrete minimum exceeds
    ``F[u_0] (1 + margin)`` and the last two minima differ by less than
    ``stability`` (relative); ``absence-consistent`` when the minima are
    stable and the lowest is at most ``F[u_0] (1 + stability)``;
    otherwise ``inconclusive``.
    """
    spec = cfg.spec
    comp = competitor_energy(cfg, quadrature_level)
    oracle = angular_oracle(cfg, oracle_cells)
    u0 = cone_competitor(cfg.theta)
    minima, residuals = [], []
    start = None
    for L in cfg.levels:
        res = minimize_discrete(spec, L, u0, tol=cfg.tol, initial=start, grading=cfg.grading)
        start = res.minimizer
        minima.append(res.energy)
        residuals.append(res.residual)
    verdict, m = _verdict_gap(comp, minima, cfg.margin, cfg.stability)
    _, gate = mode_gate(spec, "i")
    return GapReport(comp, list(cfg.levels), minima, verdict, m, residuals, oracle, None, gate)


# ---------------------------------------------------------------------------
# absence experiment


def absence_experiment(weight_name: str, k: int | None, alpha: float | None, p: float, q: float,
                       levels: Sequence[int], star: StarShape, schedule: Sequence[float] | None = None,
                       stability: float = STABILITY, tol: float = TOLERANCE) -> GapReport:
    """Discrete minima of a 1D energy and the mollified energies of the finest minimiser.

    The boundary datum is the affine function from ``0`` at the left end of
    ``star.domain`` to ``1`` at the right end.  The verdict is
    ``absence-consistent`` when the last two minima differ by less than
    ``stability`` (relative) and the last mollified energy of the finest
    minimiser is within ``stability`` of its discrete energy.

    Raises
    ------
    GateRefused
        If the exponent condition of the approximation result fails.
    """
    w = catalog_get(weight_name).weight
    if k is not None or alpha is not None:
        w = with_smoothness(w, w.k if k is None else k, w.alpha if alpha is None else alpha)
    dom = star.domain
    if dom.N != 1:
        raise ParameterError("the absence experiment runs on intervals")
    spec = EnergySpec(p, q, w, dom)
    ok, gate = mode_gate(spec, "i")
    if not ok:
        raise GateRefused(gate)
    lo, hi = dom.bounding_box()[0]

    def datum(t):
        return (np.asarray(t, dtype=float) - lo) / (hi - lo)

    levels = sorted(levels)
    if len(levels) < 2:
        raise ConfigError("need at least two mesh levels")
    minima, residuals, finest = [], [], None
    for L in levels:
        start = None if finest is None else finest.minimizer
        res = minimize_discrete(spec, L, datum, tol=tol, initial=start)
        minima.append(res.energy)
        residuals.append(res.residual)
        finest = res
    u = finest.minimizer
    offset = u.with_values(datum(u.axes[0]))
    if schedule is None:
        h = float(u.spacing[0])
        top = star.R / 8.0
        schedule = [d for d in top * 0.5 ** np.arange(20) if d >= 4.0 * h] or [top]
    trace = approximate(u, spec, star, schedule, mode="i", offset=offset, energy_mode="p1")
    err = abs(trace.energies[-1] - finest.energy) / finest.energy
    change = abs(minima[-1] - minima[-2]) / abs(minima[-2])
    verdict = "absence-consistent" if change < stability and err < stability else "inconclusive"
    comp = energy(offset, spec, mode="p1")
    return GapReport(float(comp), list(levels), minima, verdict, min(minima) / comp - 1.0,
                     residuals, None, float(err), gate)
