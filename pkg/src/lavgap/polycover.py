"""Polynomial lower bounds away from small exceptional intervals.

For a polynomial ``P(t) = sum lambda_i t^i`` with ``lambda_k > 0`` that is
nonnegative on ``[0, T]``, :func:`interval_cover` builds finitely many
disjoint intervals ``[s_i, tau_i]`` with ``tau_i <= c * s_i`` outside of
which

    sum_{i<k} lambda_i t^i + eps * lambda_k t^k >= (eps / 2^k) * lambda_k t^k.

The construction splits the lower-order part into its positive and negative
coefficients, cuts out a window around the crossover point of the positive
part with the leading term, and recurses on a lower-degree head.

The module also counts local minima of sampled functions and measures
negative-power averages of weights on balls whose directional derivative
of some order is pinned between two constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import HypothesisError, OrderError, ParameterError
from .geometry import Ball, call_field, graded_quadrature, graded_quadrature_multi
from .weights import Weight

__all__ = [
    "Polynomial",
    "IntervalCover",
    "DerivativeWindow",
    "interval_cover",
    "verify_cover",
    "cover_ratio_constant",
    "count_sign_changes_minima",
    "negative_power_average_bound",
    "polynomial_weight",
]

# samples used to validate nonnegativity of the input polynomial
NONNEG_SAMPLES = 10_000
# sampled points used to validate a derivative window
WINDOW_SAMPLES = 1_000
ROOT_TOL = 1e-12
COVER_SLACK = 1e-12


@dataclass(frozen=True)
class Polynomial:
    """``P(t) = sum_i coefficients[i] * t**i`` with a positive leading coefficient.

    Raises
    ------
    HypothesisError
        If the leading coefficient is not positive.
    """

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) == 0:
            raise HypothesisError("a polynomial needs at least one coefficient")
        if not coeffs[-1] > 0:
            raise HypothesisError(f"leading coefficient must be positive, got {coeffs[-1]}")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c in reversed(self.coefficients):
            out = out * t + c
        return out

    def positive_part(self) -> np.ndarray:
        """Coefficients ``max(lambda_i, 0)`` for ``i < k`` (the polynomial P_1)."""
        return np.maximum(np.array(self.coefficients[:-1]), 0.0)

    def negative_part(self) -> np.ndarray:
        """Coefficients ``max(-lambda_i, 0)`` for ``i < k`` (the polynomial P_2)."""
        return np.maximum(-np.array(self.coefficients[:-1]), 0.0)

    def derivative(self, order: int = 1) -> np.ndarray:
        """Coefficients of the ``order``-th derivative (possibly empty)."""
        c = np.array(self.coefficients)
        for _ in range(order):
            c = c[1:] * np.arange(1, len(c))
        return c


def _evaluate(coeffs, t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for c in reversed(list(coeffs)):
        out = out * t + c
    return out


@dataclass
class IntervalCover:
    """Exceptional intervals returned by :func:`interval_cover`.

    ``ratio_bound`` is the constant produced by the construction,
    ``measured_ratio`` the largest ``tau_i / s_i`` actually attained.
    """

    intervals: list[tuple[float, float]]
    ratio_bound: float
    eps: float
    T: float
    measured_ratio: float = 0.0

    def __post_init__(self):
        self.intervals = sorted((float(s), float(t)) for s, t in self.intervals)
        ratios = [t / s for s, t in self.intervals if s > 0]
        self.measured_ratio = max(ratios) if ratios else 0.0

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=bool)
        for s, tau in self.intervals:
            out |= (t >= s) & (t <= tau)
        return out

    def is_disjoint(self) -> bool:
        return all(a[1] < b[0] for a, b in zip(self.intervals[:-1], self.intervals[1:]))

    def rows(self):
        for s, t in self.intervals:
            yield s, t, (t / s if s > 0 else math.inf)


def cover_ratio_constant(k: int, eps: float) -> float:
    """``c_{k,eps}`` of the construction: ``c_0 = c_1 = 1`` and
    ``c_k = max_{i<k} c_i * eps**-2 * 2**(k+3)``."""
    c = [1.0, 1.0]
    for j in range(2, k + 1):
        c.append(max(c[:j]) * eps**-2 * 2.0 ** (j + 3))
    return c[k] if k >= 0 else 1.0


def _crossover_root(p1: np.ndarray, lead: float, k: int, T: float) -> float:
    """``min(t0, T)`` for the unique positive root ``t0`` of ``P_1(t) - lead * t^k``.

    Found by doubling then bisection.  Only the clipped value is needed, so
    a root beyond ``T`` is never located (it may overflow for tiny ``lead``).
    """

    def g(t):
        return float(_evaluate(p1, t)) - lead * t**k

    if g(T) > 0:
        return T
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    lo = hi / 2.0
    while g(lo) <= 0 and lo > 1e-300:
        hi, lo = lo, lo / 2.0
    # g(lo) > 0 >= g(hi)
    while hi - lo > ROOT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cover(coeffs: np.ndarray, T: float, eps: float) -> list[list[float]]:
    k = len(coeffs) - 1
    if k <= 1:
        return []
    p1 = np.maximum(coeffs[:-1], 0.0)
    if not np.any(p1 > 0) or not np.any(coeffs[:-1] < 0):
        # P_1 = 0 forces P = lambda_k t^k; P_2 = 0 makes the bound hold outright
        return []
    lead = float(coeffs[-1])
    t1 = _crossover_root(p1, lead, k, T)
    lo = eps * t1 / 2.0 ** (k + 1)
    hi = min(4.0 * t1 / eps, T)
    ell = int(np.max(np.flatnonzero(p1 > 0)))
    inner = _cover(coeffs[: ell + 1].copy(), lo, eps)
    for iv in inner:
        if iv[1] == lo:
            # the window touches an interval of the head: extend that one
            iv[1] = hi
            return inner
    if lo <= hi:
        inner.append([lo, hi])
    return inner


def interval_cover(P: Polynomial | Sequence[float], T: float, eps: float) -> IntervalCover:
    """Exceptional intervals for ``P`` on ``[0, T]``.

    Parameters
    ----------
    P : Polynomial or coefficient sequence
        ``lambda_0, ..., lambda_k`` with ``lambda_k > 0``.
    T : float
        Right end of the interval, positive.
    eps : float
        Fraction in ``(0, 1]``.

    Returns
    -------
    IntervalCover
        Intervals as produced by the recursion, not minimal ones.

    Raises
    ------
    HypothesisError
        If ``lambda_k <= 0`` or ``P`` is negative at one of 10**4 sample
        points of ``[0, T]``.

    Examples
    --------
    >>> [(round(s, 9), t) for s, t in interval_cover([1.0, -2.0, 1.0], 2.0, 1.0).intervals]
    [(0.125, 2.0)]
    """
    if not isinstance(P, Polynomial):
        P = Polynomial(tuple(P))
    if not T > 0:
        raise ParameterError("T must be positive")
    if not 0 < eps <= 1:
        raise ParameterError("eps must lie in (0, 1]")
    ts = np.linspace(0.0, T, NONNEG_SAMPLES)
    vals = P(ts)
    scale = np.abs(np.array(P.coefficients))[None, :] * ts[:, None] ** np.arange(P.degree + 1)[None, :]
    tol = 1e-12 * np.sum(scale, axis=1)
    bad = np.flatnonzero(vals < -tol)
    if len(bad):
        raise HypothesisError(f"P is negative at t={ts[bad[0]]:.6g} (value {vals[bad[0]]:.3g})")
    ivs = _cover(np.array(P.coefficients), float(T), float(eps))
    return IntervalCover([tuple(iv) for iv in ivs], cover_ratio_constant(P.degree, eps), float(eps), float(T))


def verify_cover(P: Polynomial | Sequence[float], T: float, eps: float, cover: IntervalCover | Sequence,
                 samples: int = 10_000) -> tuple[bool, float | None]:
    """Check the lower bound at ``samples`` equally spaced points outside the cover.

    Returns ``(True, None)`` or ``(False, t)`` with the first failing ``t``.
    """
    if samples < 1000:
        raise ParameterError("verify_cover needs at least 1000 samples")
    if not isinstance(P, Polynomial):
        P = Polynomial(tuple(P))
    if not isinstance(cover, IntervalCover):
        cover = IntervalCover(list(cover), math.nan, eps, T)
    c = np.array(P.coefficients)
    k = P.degree
    t = np.linspace(0.0, T, samples)
    outside = ~cover.contains(t)
    lhs = _evaluate(c[:-1], t) + eps * c[-1] * t**k if k > 0 else eps * c[-1] * np.ones_like(t)
    rhs = eps / 2.0**k * c[-1] * t**k
    fail = np.flatnonzero(outside & (lhs < rhs - COVER_SLACK))
    if len(fail):
        return False, float(t[fail[0]])
    return True, None


def count_sign_changes_minima(g: Callable, interval: Sequence[float], samples: int = 10_000) -> int:
    """Number of strict local minima of ``g`` sampled on a uniform grid.

    Only interior samples count; a run of equal values counts once when both
    neighbours of the run are larger.

    Examples
    --------
    >>> count_sign_changes_minima(lambda t: (t**2 - 1)**2, (-2, 2), 1001)
    2
    """
    if samples < 1000:
        raise ParameterError("count_sign_changes_minima needs at least 1000 samples")
    lo, hi = interval
    v = np.asarray(g(np.linspace(lo, hi, samples)), dtype=float)
    # collapse plateaus, then look for interior strict minima
    keep = np.concatenate([[True], np.diff(v) != 0])
    u = v[keep]
    if len(u) < 3:
        return 0
    mid = u[1:-1]
    return int(np.sum((mid < u[:-2]) & (mid < u[2:])))


@dataclass(frozen=True)
class DerivativeWindow:
    """Ball on which ``eps * K <= D^order a [v^order] <= K`` over ``sqrt(N) * ball``."""

    ball: Ball
    order: int
    direction: tuple[float, ...]
    K: float
    eps: float
    beta: float

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if len(v) != self.ball.N:
            raise ParameterError("direction has the wrong dimension")
        n = float(np.linalg.norm(v))
        if abs(n - 1.0) > 1e-12:
            raise ParameterError("direction must be a unit vector")
        if self.order < 0:
            raise ParameterError("order must be >= 0")
        if not self.K > 0:
            raise ParameterError("K must be positive")
        if not 0 < self.eps <= 1:
            raise ParameterError("eps must lie in (0, 1]")
        if not self.beta > self.order:
            raise ParameterError("beta must exceed the order")
        object.__setattr__(self, "direction", tuple(float(x) for x in v))


def _window_points(win: DerivativeWindow, n: int, seed: int) -> np.ndarray:
    B = win.ball
    N = B.N
    R = math.sqrt(N) * B.radius
    c = np.asarray(B.center, dtype=float)
    if N == 1:
        # deterministic: endpoints plus an even grid
        return np.linspace(c[0] - R, c[0] + R, n).reshape(-1, 1)
    rng = np.random.default_rng(seed)
    pts = np.empty((0, N))
    while len(pts) < n:
        u = rng.uniform(-1.0, 1.0, size=(2 * n, N))
        pts = np.vstack([pts, u[np.linalg.norm(u, axis=1) <= 1.0]])
    return c + R * pts[:n]


def negative_power_average_bound(w: Weight, win: DerivativeWindow, level: int = 8,
                                 seed: int = 0) -> tuple[float, float]:
    """``((avg_B a^{-1/beta})^beta, K^{-1} r^{-order})`` for a validated window.

    The first value is measured with graded quadrature toward the minima of
    ``a`` in the ball; the second is the shape of the bound, so that
    ``measured / shape`` should stay bounded as the radius varies.

    Raises
    ------
    HypothesisError
        If the window inequality fails at one of 1000 sample points of
        ``sqrt(N) * ball``.
    """
    from .classifiers import _ball_argmin

    if win.order > w.k:
        raise OrderError(f"window order {win.order} exceeds smoothness k={w.k} of {w.name}")
    pts = _window_points(win, WINDOW_SAMPLES, seed)
    x = pts[:, 0] if w.N == 1 else pts
    d = w.d(x, win.order, np.array(win.direction))
    tol = 1e-12 * win.K
    bad = np.flatnonzero((d < win.eps * win.K - tol) | (d > win.K + tol))
    if len(bad):
        raise HypothesisError(
            f"window fails at {pts[bad[0]].tolist()}: D^{win.order}a = {d[bad[0]]:.6g} "
            f"not in [{win.eps * win.K:.6g}, {win.K:.6g}]")
    B = win.ball
    anchors, span, _ = _ball_argmin(w.value, B, None)
    if B.N == 1:
        rule = graded_quadrature_multi(span[0], span[1], anchors, level)
        weights, nodes = rule.weights, rule.nodes
    else:
        rule = graded_quadrature(B, anchors, level)
        weights = rule.effective_weights
        keep = weights > 0
        weights, nodes = weights[keep], rule.nodes[keep]
    vals = call_field(w.value, nodes)
    with np.errstate(divide="ignore"):
        g = np.where(vals > 0, vals, 0.0) ** (-1.0 / win.beta)
    avg = float(np.sum(weights * g) / np.sum(weights))
    measured = avg**win.beta
    shape = 1.0 / (win.K * B.radius**win.order)
    return measured, shape


def polynomial_weight(coeffs: Sequence[float], name: str | None = None) -> Weight:
    """One-dimensional weight ``sum_i coeffs[i] t^i`` with all derivatives available.

    The smoothness tag is ``k = degree``, ``alpha = 1`` (the top derivative
    is constant).
    """
    c = np.array([float(x) for x in coeffs])
    if len(c) == 0:
        raise ParameterError("need at least one coefficient")
    deg = len(c) - 1
    derivs = [c]
    for _ in range(deg + 1):
        prev = derivs[-1]
        derivs.append(prev[1:] * np.arange(1, len(prev)) if len(prev) > 1 else np.zeros(1))

    def value(x):
        return _evaluate(c, x)

    def derivative(x, l, v):
        s = float(np.atleast_1d(v)[0])
        return _evaluate(derivs[l], x) * s**l

    label = name or "poly(" + ",".join(f"{x:g}" for x in c) + ")"
    return Weight(label, 1, max(deg, 0), 1.0, value, derivative, 0.0 if deg >= 0 else None)
