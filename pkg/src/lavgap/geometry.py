"""Domains, balls, star-shape data, ball sampling and quadrature rules.

Everything here works in dimension one or two.  Points are numpy arrays of
shape ``(N,)``; batches of points have shape ``(n, N)``.  Scalar field
oracles used throughout the package follow one calling convention: in one
dimension they receive a flat array of abscissae, in two dimensions an
``(n, 2)`` array of points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ContainmentError, ParameterError

__all__ = [
    "Domain",
    "Ball",
    "StarShape",
    "QuadratureRule",
    "graded_quadrature_multi",
    "sample_balls",
    "graded_quadrature",
    "as_points",
    "call_field",
]

# Radii of sampled balls cover this many decades below the outer diameter.
BALL_DECADES = 5.0
# Geometric layers added per quadrature level when grading toward a point.
LAYERS_PER_LEVEL_1D = 40
LAYERS_PER_LEVEL_2D = 4
GAUSS_POINTS = 4


def as_points(x, N: int) -> np.ndarray:
    """Return ``x`` as an ``(n, N)`` float array."""
    arr = np.asarray(x, dtype=float)
    if N == 1:
        return arr.reshape(-1, 1)
    return arr.reshape(-1, N)


def call_field(f: Callable, pts: np.ndarray) -> np.ndarray:
    """Evaluate a field oracle on an ``(n, N)`` batch using the package convention."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 2 and pts.shape[1] == 1:
        return np.asarray(f(pts[:, 0]), dtype=float)
    return np.asarray(f(pts), dtype=float)


@dataclass(frozen=True)
class Domain:
    """An open interval, box or ball in dimension one or two.

    Use the constructors :meth:`interval`, :meth:`box` and :meth:`ball`.
    For intervals and boxes ``bounds`` holds one ``(lo, hi)`` pair per axis;
    for balls it holds ``(center, radius)``.
    """

    N: int
    kind: str
    bounds: tuple

    def __post_init__(self):
        if self.N not in (1, 2):
            raise ParameterError("only dimensions 1 and 2 are supported")
        if self.kind in ("interval", "box"):
            if len(self.bounds) != self.N:
                raise ParameterError("one (lo, hi) pair per axis is required")
            for lo, hi in self.bounds:
                if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                    raise ParameterError(f"empty or unbounded axis ({lo}, {hi})")
        elif self.kind == "ball":
            center, radius = self.bounds
            if len(center) != self.N or not radius > 0 or not np.isfinite(radius):
                raise ParameterError("ball domain needs an N-point center and a positive radius")
        else:
            raise ParameterError(f"unknown domain kind {self.kind!r}")

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Domain":
        return cls(1, "interval", ((float(lo), float(hi)),))

    @classmethod
    def box(cls, *axes: Sequence[float]) -> "Domain":
        axes = tuple((float(a), float(b)) for a, b in axes)
        if len(axes) == 1:
            return cls(1, "interval", axes)
        return cls(len(axes), "box", axes)

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Domain":
        center = tuple(float(c) for c in np.atleast_1d(center))
        return cls(len(center), "ball", (center, float(radius)))

    # -- basic geometry ---------------------------------------------------
    def bounding_box(self) -> np.ndarray:
        """``(N, 2)`` array of per-axis ``[lo, hi]``."""
        if self.kind == "ball":
            c, r = self.bounds
            return np.array([[ci - r, ci + r] for ci in c])
        return np.array(self.bounds, dtype=float)

    @property
    def diameter(self) -> float:
        if self.kind == "ball":
            return 2.0 * self.bounds[1]
        widths = np.diff(self.bounding_box(), axis=1).ravel()
        return float(np.sqrt(np.sum(widths**2)))

    @property
    def measure(self) -> float:
        if self.kind == "ball":
            r = self.bounds[1]
            return 2.0 * r if self.N == 1 else np.pi * r * r
        return float(np.prod(np.diff(self.bounding_box(), axis=1)))

    @property
    def center(self) -> np.ndarray:
        if self.kind == "ball":
            return np.array(self.bounds[0])
        return self.bounding_box().mean(axis=1)

    def contains(self, pts, closed: bool = False) -> np.ndarray:
        """Membership test for an ``(n, N)`` batch (open set unless ``closed``)."""
        pts = as_points(pts, self.N)
        if self.kind == "ball":
            c, r = self.bounds
            d = np.linalg.norm(pts - np.asarray(c), axis=1)
            return d <= r if closed else d < r
        bb = self.bounding_box()
        if closed:
            return np.all((pts >= bb[:, 0]) & (pts <= bb[:, 1]), axis=1)
        return np.all((pts > bb[:, 0]) & (pts < bb[:, 1]), axis=1)

    def distance_to_complement(self, pts) -> np.ndarray:
        """Distance from interior points to the boundary (0 outside)."""
        pts = as_points(pts, self.N)
        if self.kind == "ball":
            c, r = self.bounds
            return np.maximum(r - np.linalg.norm(pts - np.asarray(c), axis=1), 0.0)
        bb = self.bounding_box()
        d = np.minimum(pts - bb[:, 0], bb[:, 1] - pts)
        return np.maximum(d.min(axis=1), 0.0)

    def distance_to_set(self, pts) -> np.ndarray:
        """Euclidean distance from points to the closed domain (0 inside)."""
        pts = as_points(pts, self.N)
        if self.kind == "ball":
            c, r = self.bounds
            return np.maximum(np.linalg.norm(pts - np.asarray(c), axis=1) - r, 0.0)
        bb = self.bounding_box()
        gap = np.maximum(np.maximum(bb[:, 0] - pts, pts - bb[:, 1]), 0.0)
        return np.linalg.norm(gap, axis=1)

    def compactly_contains(self, other: "Domain") -> bool:
        """True when the closure of ``other`` lies in the interior of ``self``."""
        if other.N != self.N:
            return False
        if other.kind == "ball":
            c, r = other.bounds
            return bool(self.distance_to_complement(np.asarray(c))[0] > r)
        corners = np.array(np.meshgrid(*other.bounding_box())).reshape(self.N, -1).T
        if self.kind == "ball":
            return bool(np.all(self.contains(corners)))
        bb, ob = self.bounding_box(), other.bounding_box()
        return bool(np.all(bb[:, 0] < ob[:, 0]) and np.all(ob[:, 1] < bb[:, 1]))

    def uniform_grid(self, resolution: int) -> np.ndarray:
        """Uniform closed-box lattice with ``resolution`` points per axis, clipped to the domain."""
        bb = self.bounding_box()
        axes = [np.linspace(lo, hi, resolution) for lo, hi in bb]
        if self.N == 1:
            return axes[0].reshape(-1, 1)
        X, Y = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        if self.kind == "ball":
            pts = pts[self.contains(pts, closed=True)]
        return pts

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` points drawn uniformly from the domain."""
        bb = self.bounding_box()
        if self.kind != "ball":
            return rng.uniform(bb[:, 0], bb[:, 1], size=(n, self.N))
        out = np.empty((0, self.N))
        while len(out) < n:
            cand = rng.uniform(bb[:, 0], bb[:, 1], size=(2 * n, self.N))
            out = np.vstack([out, cand[self.contains(cand)]])
        return out[:n]

    def describe(self) -> str:
        if self.kind == "ball":
            c, r = self.bounds
            return f"ball(center={list(c)}, radius={r})"
        return " x ".join(f"({lo}, {hi})" for lo, hi in self.bounds)


@dataclass(frozen=True)
class Ball:
    """Open ball with a center point and positive radius."""

    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError("ball radius must be positive")

    @property
    def N(self) -> int:
        return len(self.center)

    def as_domain(self) -> Domain:
        if self.N == 1:
            c = self.center[0]
            return Domain.interval(c - self.radius, c + self.radius)
        return Domain.ball(self.center, self.radius)

    def contains(self, pts, closed: bool = False) -> np.ndarray:
        pts = as_points(pts, self.N)
        d = np.linalg.norm(pts - np.asarray(self.center), axis=1)
        return d <= self.radius if closed else d < self.radius

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class StarShape:
    """A domain that is star-shaped with respect to ``ball(x0, R)``.

    The supported domain kinds are convex, so star-shapedness reduces to the
    containment of that ball.
    """

    domain: Domain
    x0: tuple
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ParameterError("inner radius R must be positive")
        if len(self.x0) != self.domain.N:
            raise ParameterError("center dimension does not match the domain")
        slack = self.domain.distance_to_complement(np.asarray(self.x0, dtype=float))[0]
        if slack < self.R:
            raise ContainmentError(
                f"ball(x0={list(self.x0)}, R={self.R}) is not contained in {self.domain.describe()}"
            )


@dataclass
class QuadratureRule:
    """Composite rule on an interval or on the box circumscribing a 2D ball.

    ``mask`` is ``None`` for interval rules.  For 2D ball rules it selects
    the nodes inside the ball; ``weights`` themselves always sum to the
    measure of the reference cell (interval or circumscribed box).
    """

    nodes: np.ndarray
    weights: np.ndarray
    level: int
    reference_measure: float
    mask: np.ndarray | None = None
    singular_point: np.ndarray | None = field(default=None)

    @property
    def effective_weights(self) -> np.ndarray:
        if self.mask is None:
            return self.weights
        return np.where(self.mask, self.weights, 0.0)

    @property
    def region_measure(self) -> float:
        return float(np.sum(self.effective_weights))

    def integrate(self, f: Callable) -> float:
        vals = call_field(f, self.nodes)
        w = self.effective_weights
        keep = w > 0
        return float(np.sum(w[keep] * vals[keep]))

    def average(self, f: Callable) -> float:
        return self.integrate(f) / self.region_measure


@lru_cache(maxsize=8)
def _gauss(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0


def _composite_gauss(edges: np.ndarray, m: int = GAUSS_POINTS):
    """Nodes and weights of an m-point Gauss rule on each cell ``[edges[i], edges[i+1]]``."""
    x, w = _gauss(m)
    a, b = edges[:-1], edges[1:]
    h = b - a
    nodes = (a[:, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return nodes, weights


def _graded_edges(length: float, hmax: float, layers: int, floor_width: float) -> np.ndarray:
    """Cell edges on ``[0, length]`` refined geometrically toward 0.

    Layer ``j`` is ``[length 2^{-j-1}, length 2^{-j}]``; the innermost cell
    reaches 0.  Layers stop once they would fall below ``floor_width``, so
    the nodes stay distinguishable in floating point around the singular
    point.  Cells wider than ``hmax`` are split uniformly.
    """
    if floor_width > 0:
        layers = int(min(layers, max(0, np.floor(np.log2(length / floor_width)))))
    geo = length * np.exp2(-np.arange(layers + 1, dtype=float))
    edges = np.concatenate([[0.0], geo[::-1]])
    a, b = edges[:-1], edges[1:]
    n = np.maximum(1, np.ceil((b - a) / hmax - 1e-12)).astype(int)
    cell = np.repeat(np.arange(len(a)), n)
    k = np.arange(int(n.sum())) - np.repeat(np.cumsum(n) - n, n) + 1
    pts = a[cell] + k * ((b - a) / n)[cell]
    last = k == n[cell]
    pts[last] = b[cell[last]]
    return np.concatenate([edges[:1], pts])


def _graded_1d(lo: float, hi: float, s: float, level: int, layers_per_level: int, hmax: float):
    """1D graded composite Gauss rule on ``[lo, hi]`` toward ``s``."""
    nodes, weights = [], []
    floor = 64.0 * np.spacing(abs(s)) if s != 0 else 0.0
    floor = max(floor, 1e-300)
    for side, length in ((-1.0, s - lo), (1.0, hi - s)):
        if length <= 0:
            continue
        edges = _graded_edges(length, hmax, layers_per_level * level, floor)
        offs, w = _composite_gauss(edges)
        nodes.append(s + side * offs)
        weights.append(w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    order = np.argsort(nodes, kind="stable")
    return nodes[order], weights[order]


def graded_quadrature_multi(lo: float, hi: float, anchors, level: int) -> QuadratureRule:
    """1D graded rule toward several points at once.

    ``[lo, hi]`` is split at the midpoints between consecutive anchors and
    each piece is graded toward its own anchor.  The cell cap is that of
    the whole interval, so a single anchor reproduces ``graded_quadrature``.
    """
    if level < 1:
        raise ParameterError("quadrature level must be >= 1")
    anchors = np.unique(np.clip(np.asarray(anchors, dtype=float).ravel(), lo, hi))
    if len(anchors) == 0:
        raise ParameterError("at least one anchor is required")
    cuts = np.concatenate([[lo], (anchors[:-1] + anchors[1:]) / 2.0, [hi]])
    hmax = (hi - lo) * 2.0 ** -(level + 1)
    nodes, weights = [], []
    for a, b, s in zip(cuts[:-1], cuts[1:], anchors):
        n, w = _graded_1d(a, b, s, level, LAYERS_PER_LEVEL_1D, hmax)
        nodes.append(n)
        weights.append(w)
    nodes = np.concatenate(nodes)
    return QuadratureRule(nodes.reshape(-1, 1), np.concatenate(weights), level, hi - lo, None,
                          anchors[:1] if len(anchors) == 1 else None)


def _midpoint_1d(lo: float, hi: float, cells: int):
    h = (hi - lo) / cells
    nodes = lo + h * (np.arange(cells) + 0.5)
    return nodes, np.full(cells, h)


def graded_quadrature(ball: Ball | Domain, singular_point=None, level: int = 4) -> QuadratureRule:
    """Composite quadrature on a ball, optionally graded toward a point.

    Parameters
    ----------
    ball : Ball or Domain
        Integration region.  A one-dimensional ball is an interval; an
        interval ``Domain`` is accepted as well.
    singular_point : point or None
        Where the integrand may blow up.  Must lie in the closed ball.
    level : int
        Refinement level, at least 1.

    Returns
    -------
    QuadratureRule
        Without a singular point: composite midpoint rule with
        ``2**(level+4)`` cells (1D) or ``2**(level+2)`` cells per axis (2D).
        With one: 4-point Gauss cells on geometric layers toward the point,
        ``40*level`` layers per side in 1D and ``4*level`` per axis in 2D.

    Examples
    --------
    >>> rule = graded_quadrature(Ball((0.5,), 0.5), singular_point=(0.0,), level=8)
    >>> abs(rule.integrate(lambda t: t ** -0.5) - 2.0) < 1e-3
    True
    """
    if level < 1:
        raise ParameterError("quadrature level must be >= 1")
    if isinstance(ball, Domain):
        if ball.kind == "ball":
            ball = Ball(ball.bounds[0], ball.bounds[1])
        elif ball.N == 1:
            lo, hi = ball.bounds[0]
            ball = Ball(((lo + hi) / 2.0,), (hi - lo) / 2.0)
        else:
            raise ParameterError("2D quadrature is defined on balls only")
    c = np.asarray(ball.center, dtype=float)
    r = ball.radius
    sp = None
    if singular_point is not None:
        sp = np.atleast_1d(np.asarray(singular_point, dtype=float))
        if not ball.contains(sp, closed=True)[0] and np.linalg.norm(sp - c) > r * (1 + 1e-12):
            raise ParameterError("singular point lies outside the ball")
    if ball.N == 1:
        lo, hi = c[0] - r, c[0] + r
        if sp is None:
            nodes, weights = _midpoint_1d(lo, hi, 2 ** (level + 4))
        else:
            s = float(np.clip(sp[0], lo, hi))
            hmax = (hi - lo) * 2.0 ** -(level + 1)
            nodes, weights = _graded_1d(lo, hi, s, level, LAYERS_PER_LEVEL_1D, hmax)
        return QuadratureRule(nodes.reshape(-1, 1), weights, level, hi - lo, None, sp)
    axes = []
    for i in range(2):
        lo, hi = c[i] - r, c[i] + r
        if sp is None:
            axes.append(_midpoint_1d(lo, hi, 2 ** (level + 2)))
        else:
            s = float(np.clip(sp[i], lo, hi))
            hmax = (hi - lo) * 2.0 ** -(level + 1)
            axes.append(_graded_1d(lo, hi, s, level, LAYERS_PER_LEVEL_2D, hmax))
    (xn, xw), (yn, yw) = axes
    X, Y = np.meshgrid(xn, yn, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    weights = np.outer(xw, yw).ravel()
    mask = np.linalg.norm(nodes - c, axis=1) < r
    return QuadratureRule(nodes, weights, level, (2 * r) ** 2, mask, sp)


def sample_balls(outer: Domain, inner: Domain, count: int, mode: str = "contained-in-outer",
                 seed: int = 0, decades: float = BALL_DECADES, anchors=None) -> list[Ball]:
    """Draw balls with log-uniform diameters for probing sup-over-balls quantities.

    Ball diameters are log-uniform between ``outer.diameter * 10**-decades``
    and ``outer.diameter``.  In ``contained-in-outer`` mode every ball lies
    inside ``outer``; in ``intersecting-inner`` mode the balls only have to
    meet ``inner``.  When ``anchors`` (an ``(m, N)`` array) is given, every
    second ball is centred uniformly within one radius of a randomly chosen
    anchor, so that small balls around special points are actually drawn.

    Raises
    ------
    ContainmentError
        If ``inner`` is not compactly contained in ``outer``.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    if mode not in ("contained-in-outer", "intersecting-inner"):
        raise ParameterError(f"unknown sampling mode {mode!r}")
    if not outer.compactly_contains(inner):
        raise ContainmentError(f"{inner.describe()} is not compactly contained in {outer.describe()}")
    rng = np.random.default_rng(seed)
    N = outer.N
    D = outer.diameter
    log_lo, log_hi = np.log(D * 10.0**-decades), np.log(D)
    ibb = inner.bounding_box()
    obb = outer.bounding_box()
    if anchors is not None:
        anchors = np.asarray(anchors, dtype=float).reshape(-1, N)
        if len(anchors) == 0:
            anchors = None
    n_anchored = count // 2 if anchors is not None else 0

    def accept(cen, rad):
        if mode == "contained-in-outer":
            if outer.kind == "ball":
                return outer.distance_to_complement(cen) >= rad
            return np.all((cen - rad[:, None] >= obb[:, 0]) & (cen + rad[:, None] <= obb[:, 1]), axis=1)
        return inner.distance_to_set(cen) < rad

    def draw(n, anchored):
        centers = np.empty((0, N))
        radii = np.empty(0)
        while len(radii) < n:
            batch = 2 * (n - len(radii)) + 8
            rad = np.exp(rng.uniform(log_lo, log_hi, size=batch)) / 2.0
            if anchored:
                u = rng.uniform(-1.0, 1.0, size=(batch, N))
                inside = np.linalg.norm(u, axis=1) <= 1.0
                pick = anchors[rng.integers(len(anchors), size=batch)]
                cen = pick + rad[:, None] * u
                ok = inside & accept(cen, rad)
            elif mode == "contained-in-outer":
                lo = obb[:, 0][None, :] + rad[:, None]
                hi = obb[:, 1][None, :] - rad[:, None]
                u = rng.uniform(size=(batch, N))
                cen = lo + u * (hi - lo)
                ok = np.all(lo < hi, axis=1) & accept(cen, rad)
            else:
                lo = ibb[:, 0][None, :] - rad[:, None]
                hi = ibb[:, 1][None, :] + rad[:, None]
                u = rng.uniform(size=(batch, N))
                cen = lo + u * (hi - lo)
                ok = accept(cen, rad)
            centers = np.vstack([centers, cen[ok]])
            radii = np.concatenate([radii, rad[ok]])
        return centers[:n], radii[:n]

    cu, ru = draw(count - n_anchored, False)
    if n_anchored:
        ca, ra = draw(n_anchored, True)
        cu, ru = np.vstack([cu, ca]), np.concatenate([ru, ra])
    return [Ball(tuple(float(v) for v in cu[i]), float(ru[i])) for i in range(count)]
