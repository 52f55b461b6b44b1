"""Multi-scale estimators for the decay class Z^kappa and Muckenhoupt classes A_r.

Membership in either class is a supremum over infinitely many pairs or
balls, so only graded evidence is available.  Each estimator produces a
sequence of running suprema over growing samples, one per refinement level,
and turns its tail into a verdict:

* ``diverging`` when the last level is infinite or at least ``growth``
  times the previous one;
* ``bounded`` when the last two levels agree within ``stable``;
* ``inconclusive`` otherwise.

Z-class pairs are drawn partly uniformly and partly around refined local
minima of the field, at scales that shrink by ``depth_per_level`` decades
per level, because the defining inequality can only fail near zeros.
A-class averages use graded quadrature anchored at the in-ball minimiser.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .decomposition import decompose_on_grid, omega_at, sigma_at, DecompositionField
from .errors import ParameterError
from .geometry import (Ball, Domain, as_points, call_field, graded_quadrature, graded_quadrature_multi,
                       sample_balls)
from .weights import Weight

__all__ = [
    "ConditionReport",
    "WeightClassification",
    "verdict_from_estimates",
    "z_constant",
    "muckenhoupt_constant",
    "global_muckenhoupt_constant",
    "muckenhoupt_ball_value",
    "classify_weight",
    "exponent_gate",
    "local_minima",
]

STABLE = 0.25
GROWTH = 10.0
CLAMP = 1e-300
OVERFLOW = 1e280
CLAMPED_SHARE = 1e-3
SCAN_POINTS = 513
Z_SCAN_1D = 4097
Z_SCAN_2D = 129
MAX_ANCHORS = 64
MAX_BALL_ANCHORS = 4096
SCAN_PER_MINIMUM = 16
SCAN_MAX = 2**16 + 1
PLATEAU_RTOL = 1e-12
# compass refinement of the best sampled balls of each level
REFINE_TOP = 4
REFINE_STEP = 0.25
REFINE_MIN_STEP = 1.0 / 64.0


@dataclass
class ConditionReport:
    """Estimate sequence and verdict for one class-membership question."""

    condition: str
    parameter: float
    inner: Domain
    outer: Domain | None
    estimates: list[tuple[int, float]]
    verdict: str
    witness: object
    stable: float = STABLE
    growth: float = GROWTH

    def rows(self):
        """CSV rows ``(level, estimate, witness, verdict)``."""
        for level, est in self.estimates:
            yield (level, est, _witness_str(self.witness), self.verdict)


def _witness_str(w) -> str:
    if isinstance(w, Ball):
        return f"ball(center={[float(c) for c in w.center]};radius={float(w.radius)!r})"
    if w is None:
        return ""
    x, y = w
    return f"x={[float(v) for v in np.atleast_1d(x)]};y={[float(v) for v in np.atleast_1d(y)]}"


def verdict_from_estimates(values, stable: float = STABLE, growth: float = GROWTH) -> str:
    """Apply the tail rule to a nondecreasing estimate sequence."""
    if len(values) < 2:
        return "inconclusive"
    prev, last = float(values[-2]), float(values[-1])
    if np.isinf(last):
        return "diverging"
    if prev <= 0.0:
        return "bounded" if last <= 0.0 else "diverging"
    if last >= growth * prev:
        return "diverging"
    if abs(last - prev) <= stable * prev:
        return "bounded"
    return "inconclusive"


# ---------------------------------------------------------------------------
# locating minima


def _zoom_1d(f: Callable, lo: float, hi: float, points: int = 33, max_iter: int = 4000) -> float:
    """Shrink a bracket around a minimiser by repeated dense scans."""
    best = 0.5 * (lo + hi)
    for _ in range(max_iter):
        xs = np.linspace(lo, hi, points)
        vals = np.asarray(f(xs), dtype=float)
        i = int(np.argmin(vals))
        best = float(xs[i])
        nlo, nhi = float(xs[max(i - 1, 0)]), float(xs[min(i + 1, points - 1)])
        if (nlo == lo and nhi == hi) or nhi - nlo <= 1e-300:
            break
        lo, hi = nlo, nhi
    return best


def _zoom_1d_many(f: Callable, lo: np.ndarray, hi: np.ndarray, points: int = 33,
                  max_iter: int = 4000) -> np.ndarray:
    """``_zoom_1d`` applied to many brackets at once."""
    lo, hi = np.array(lo, dtype=float), np.array(hi, dtype=float)
    best = 0.5 * (lo + hi)
    active = np.ones(len(lo), dtype=bool)
    u = np.linspace(0.0, 1.0, points)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if len(idx) == 0:
            break
        a, b = lo[idx], hi[idx]
        xs = a[:, None] + (b - a)[:, None] * u[None, :]
        xs[:, -1] = b
        vals = np.asarray(f(xs.ravel()), dtype=float).reshape(xs.shape)
        i = np.argmin(vals, axis=1)
        rows = np.arange(len(idx))
        best[idx] = xs[rows, i]
        nlo = xs[rows, np.maximum(i - 1, 0)]
        nhi = xs[rows, np.minimum(i + 1, points - 1)]
        done = ((nlo == a) & (nhi == b)) | (nhi - nlo <= 1e-300)
        lo[idx], hi[idx] = nlo, nhi
        active[idx[done]] = False
    return best


def _zoom_2d(f: Callable, center: np.ndarray, half: float, points: int = 9, max_iter: int = 400) -> np.ndarray:
    c = np.asarray(center, dtype=float)
    for _ in range(max_iter):
        ax = np.linspace(-half, half, points)
        X, Y = np.meshgrid(c[0] + ax, c[1] + ax, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        vals = np.asarray(f(pts), dtype=float)
        nc = pts[int(np.argmin(vals))]
        nhalf = 2.0 * half / (points - 1)
        if nhalf <= 1e-300 or (np.all(nc == c) and nhalf == half):
            break
        c, half = nc, nhalf
    return c


def _scan_minima_1d(f: Callable, lo: float, hi: float, points: int, max_anchors: int,
                    resolve: bool = False) -> tuple[np.ndarray, bool]:
    """Refined local minimisers of ``f`` from a uniform scan of ``[lo, hi]``, best first.

    With ``resolve`` the scan is refined fourfold while two local minima
    lie fewer than ``SCAN_PER_MINIMUM`` points apart, up to ``SCAN_MAX``
    points, so that oscillating functions have each dip located.  The
    flag is false when minima are still that crowded at ``SCAN_MAX`` points
    (or when more than ``max_anchors`` minima were found).
    """
    while True:
        xs = np.linspace(lo, hi, points)
        v = np.asarray(f(xs), dtype=float)
        # values within rounding of each other count as a plateau
        fin = np.abs(v[np.isfinite(v)])
        tol = PLATEAU_RTOL * (float(fin.max()) if fin.size else 0.0)
        left = np.concatenate([[np.inf], v[:-1]])
        right = np.concatenate([v[1:], [np.inf]])
        idx = np.flatnonzero((v <= left + tol) & (v <= right + tol))
        # collapse plateau runs
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1) if len(idx) else []
        picks = np.array([int(run[len(run) // 2]) for run in runs], dtype=int)
        crowded = len(picks) > 1 and int(np.min(np.diff(picks))) < SCAN_PER_MINIMUM
        if not resolve or not crowded or points >= SCAN_MAX:
            break
        points = 4 * (points - 1) + 1
    resolved = not crowded and len(picks) <= max_anchors
    picks = picks[np.argsort(v[picks], kind="stable")][:max_anchors]
    step = xs[1] - xs[0]
    exact = v[picks] == 0.0
    out = xs[picks].copy()
    if np.any(~exact):
        p = picks[~exact]
        out[~exact] = _zoom_1d_many(f, np.maximum(lo, xs[p] - step), np.minimum(hi, xs[p] + step))
    return out, resolved


def local_minima(f: Callable, region: Domain, max_anchors: int = MAX_ANCHORS) -> np.ndarray:
    """Refined local minimisers of ``f`` on a dense scan of ``region``.

    Plateaus count once (their midpoint).  At most ``max_anchors`` points
    with the smallest values are returned, as an ``(m, N)`` array.
    """
    if region.N == 1:
        lo, hi = region.bounding_box()[0]
        return _scan_minima_1d(f, lo, hi, Z_SCAN_1D, max_anchors)[0].reshape(-1, 1)
    bb = region.bounding_box()
    ax = [np.linspace(bb[i, 0], bb[i, 1], Z_SCAN_2D) for i in range(2)]
    X, Y = np.meshgrid(*ax, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    v = np.asarray(f(pts), dtype=float).reshape(X.shape)
    pad = np.pad(v, 1, constant_values=np.inf)
    cand = np.ones_like(v, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            cand &= v <= pad[1 + di: 1 + di + v.shape[0], 1 + dj: 1 + dj + v.shape[1]]
    ii, jj = np.nonzero(cand)
    order = np.argsort(v[ii, jj], kind="stable")[:max_anchors]
    step = ax[0][1] - ax[0][0]
    out = []
    for o in order:
        c = np.array([ax[0][ii[o]], ax[1][jj[o]]])
        out.append(_zoom_2d(f, c, step) if v[ii[o], jj[o]] > 0 else c)
    out = np.array(out).reshape(-1, 2)
    return out[region.contains(out, closed=True)]


# ---------------------------------------------------------------------------
# Z class


def _z_ratio(fx, fy, dist, kappa):
    den = fy + dist**kappa
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(fx > 0, fx / den, 0.0)
    return np.where(np.isnan(r), 0.0, r)


def z_constant(f: Callable, kappa: float, region: Domain, levels: int = 3, seed: int = 0,
               depth_per_level: float = 3.0, stable: float = STABLE, growth: float = GROWTH,
               anchors: np.ndarray | None = None) -> ConditionReport:
    """Estimate ``sup f(x) / (f(y) + |x - y|^kappa)`` over pairs in ``region``.

    Level ``L`` draws ``10**(2+L)`` pairs: half uniformly over the region,
    half at log-uniform distances below ``diam * 10**(-depth_per_level*L)``...
    ``diam`` around refined local minima of ``f``.  Estimates are running
    maxima, so they never decrease.

    Raises
    ------
    ParameterError
        If ``kappa <= 0``.
    """
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    N = region.N
    rng = np.random.default_rng(seed)
    if anchors is None:
        anchors = local_minima(f, region)
    anchors = as_points(anchors, N) if len(anchors) else np.empty((0, N))
    scale = region.diameter / 2.0
    best, witness = 0.0, None
    estimates = []
    for L in range(1, levels + 1):
        n = 10 ** (2 + L)
        n_anch = n // 2 if len(anchors) else 0
        n_unif = n - n_anch
        x = region.sample_uniform(rng, n_unif)
        y = region.sample_uniform(rng, n_unif)
        if n_anch:
            depth = depth_per_level * L
            pick = anchors[rng.integers(0, len(anchors), size=n_anch)]
            dx = _random_directions(rng, n_anch, N) * (scale * 10.0 ** -rng.uniform(0, depth, size=n_anch))[:, None]
            dy = _random_directions(rng, n_anch, N) * (scale * 10.0 ** -rng.uniform(0, depth, size=n_anch))[:, None]
            at_anchor = rng.uniform(size=n_anch) < 0.5
            dy[at_anchor] = 0.0
            xa, ya = pick + dx, pick + dy
            keep = region.contains(xa, closed=True) & region.contains(ya, closed=True)
            x = np.vstack([x, xa[keep]])
            y = np.vstack([y, ya[keep]])
        fx = call_field(f, x)
        fy = call_field(f, y)
        dist = np.linalg.norm(x - y, axis=1)
        ratio = _z_ratio(fx, fy, dist, kappa)
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best = float(ratio[i])
            witness = (x[i].copy(), y[i].copy())
        estimates.append((L, best))
    verdict = verdict_from_estimates([e for _, e in estimates], stable, growth)
    return ConditionReport("Z", float(kappa), region, None, estimates, verdict, witness, stable, growth)


def _random_directions(rng, n, N):
    if N == 1:
        return np.where(rng.uniform(size=(n, 1)) < 0.5, -1.0, 1.0)
    theta = rng.uniform(0, 2 * np.pi, size=n)
    return np.column_stack([np.cos(theta), np.sin(theta)])


# ---------------------------------------------------------------------------
# A class


def _ball_argmin(f: Callable, ball: Ball, region: Domain | None):
    """Scan ``SCAN_POINTS`` points of the (clipped) ball and refine its minimisers.

    In 1D every local minimum is returned (best first, at most
    ``MAX_BALL_ANCHORS``), with the scan refined until oscillations are
    resolved; in 2D only the global minimiser.
    """
    if ball.N == 1:
        c, r = ball.center[0], ball.radius
        lo, hi = c - r, c + r
        if region is not None:
            rlo, rhi = region.bounding_box()[0]
            lo, hi = max(lo, rlo), min(hi, rhi)
        found, resolved = _scan_minima_1d(f, lo, hi, SCAN_POINTS, MAX_BALL_ANCHORS, resolve=True)
        return found, (lo, hi), resolved
    side = int(np.ceil(np.sqrt(SCAN_POINTS)))
    ax = np.linspace(-ball.radius, ball.radius, side)
    X, Y = np.meshgrid(ball.center[0] + ax, ball.center[1] + ax, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = ball.contains(pts, closed=True)
    if region is not None:
        inside &= region.contains(pts, closed=True)
    pts = pts[inside]
    v = np.asarray(f(pts), dtype=float)
    i = int(np.argmin(v))
    c = pts[i] if v[i] == 0.0 else _zoom_2d(f, pts[i], ax[1] - ax[0])
    if not ball.contains(c, closed=True)[0]:
        c = pts[i]
    return c, None, True


def muckenhoupt_ball_value(f: Callable, r: float, ball: Ball, level: int,
                           region: Domain | None = None, anchor=None) -> float:
    """``(avg_B f) * (avg_B f^{-1/(r-1)})^{r-1}`` on one ball (or on ``B ∩ region``).

    ``f`` is clamped below at ``1e-300``.  The value is ``+inf`` when the
    quadrature sum of ``f^{-1/(r-1)}`` or the product exceeds ``1e280``, or
    when nodes whose value was clamped carry more than a 1e-3 share of that
    sum, since the integral is then not resolved in double precision.
    """
    return _ball_value(f, r, ball, level, region, anchor)[0]


def _ball_value(f: Callable, r: float, ball: Ball, level: int, region: Domain | None = None, anchor=None):
    # value and whether the scan resolved every local minimum of f on the ball
    if not r > 1:
        raise ParameterError("Muckenhoupt index r must exceed 1")
    found, span, resolved = _ball_argmin(f, ball, region)
    if anchor is None:
        anchor = found
    if ball.N == 1:
        lo, hi = span
        if not hi > lo:
            raise ParameterError("ball does not meet the region")
        # grading toward every scanned minimum keeps oscillating weights resolved
        rule = graded_quadrature_multi(lo, hi, anchor, level)
        w = rule.weights
        nodes = rule.nodes
    else:
        rule = graded_quadrature(ball, anchor, level)
        w = rule.effective_weights.copy()
        if region is not None:
            w = np.where(region.contains(rule.nodes), w, 0.0)
        keep = w > 0
        w, nodes = w[keep], rule.nodes[keep]
        if len(w) == 0:
            raise ParameterError("ball does not meet the region")
    fv = call_field(f, nodes)
    clamped = fv < CLAMP
    fc = np.where(clamped, CLAMP, fv)
    with np.errstate(over="ignore"):
        g = fc ** (-1.0 / (r - 1.0))
    meas = float(np.sum(w))
    i_f = float(np.sum(w * fv))
    wg = w * g
    i_g = float(np.sum(wg))
    if not np.isfinite(i_g) or i_g > OVERFLOW:
        return np.inf, resolved
    if np.any(clamped) and float(np.sum(wg[clamped])) > CLAMPED_SHARE * i_g:
        return np.inf, resolved
    val = (i_f / meas) * (i_g / meas) ** (r - 1.0)
    if not np.isfinite(val) or val > OVERFLOW:
        return np.inf, resolved
    return float(val), resolved


def _balls_for_level(level: int, base: int) -> int:
    return base * 4 ** (level - 1)


def _ball_admissible(b: Ball, inner: Domain, outer: Domain, mode: str) -> bool:
    c = np.asarray(b.center)
    if mode == "contained-in-outer":
        if outer.kind == "ball":
            return bool(outer.distance_to_complement(c)[0] >= b.radius)
        bb = outer.bounding_box()
        return bool(np.all(c - b.radius >= bb[:, 0]) and np.all(c + b.radius <= bb[:, 1]))
    return bool(inner.distance_to_set(c)[0] < b.radius)


def _refine_ball(value: Callable, b: Ball, v: float, inner: Domain, outer: Domain, mode: str):
    """Compass search over centre and log-radius, started from a sampled ball.

    Only moves to balls whose minima were resolved by the scan are taken.
    """
    N = len(b.center)
    step = REFINE_STEP
    while step >= REFINE_MIN_STEP and np.isfinite(v):
        moved = False
        c = np.asarray(b.center)
        moves = [Ball(tuple(c + sgn * step * b.radius * e), b.radius) for e in np.eye(N) for sgn in (-1, 1)]
        moves += [Ball(b.center, b.radius * np.exp(sgn * step)) for sgn in (-1, 1)]
        for m in moves:
            if not _ball_admissible(m, inner, outer, mode):
                continue
            mv, ok = value(m)
            if ok and mv > v:
                b, v, moved = m, mv, True
                break
        if not moved:
            step /= 2.0
    return b, v


def _muck_run(f, r, inner, outer, levels, seed, mode, region, stable, growth, base, condition):
    if not r > 1:
        raise ParameterError("Muckenhoupt index r must exceed 1")
    # half of each level's balls sit around minima of f, where the sup is approached
    anchors = local_minima(f, inner)
    best, witness = 0.0, None
    estimates = []
    for L in range(1, levels + 1):
        balls = sample_balls(outer, inner, _balls_for_level(L, base), mode=mode, seed=seed * 1000 + L,
                             anchors=anchors)
        def value(b, L=L):
            return _ball_value(f, r, b, 4 + L, region=region)

        evals = [value(b) for b in balls]
        vals = [v for v, _ in evals]
        # unresolved balls carry sampling noise that a local search would exploit
        cand = [i for i, (v, ok) in enumerate(evals) if ok and np.isfinite(v)]
        top = sorted(cand, key=lambda i: vals[i], reverse=True)[:REFINE_TOP]
        for i in top:
            b, v = _refine_ball(value, balls[i], vals[i], inner, outer, mode)
            vals.append(v)
            balls.append(b)
        for b, v in zip(balls, vals):
            if witness is None or v > best:
                best, witness = v, b
        estimates.append((L, best))
        if np.isinf(best):
            # further levels cannot lower a running supremum of +inf
            for L2 in range(L + 1, levels + 1):
                estimates.append((L2, best))
            break
    verdict = verdict_from_estimates([e for _, e in estimates], stable, growth)
    return ConditionReport(condition, float(r), inner, outer, estimates, verdict, witness, stable, growth)


def muckenhoupt_constant(f: Callable, r: float, inner: Domain, outer: Domain, levels: int = 3,
                         seed: int = 0, stable: float = STABLE, growth: float = GROWTH,
                         base_balls: int = 32) -> ConditionReport:
    """Estimate the A_r constant of ``f`` over balls contained in ``outer``.

    Level ``L`` samples ``32 * 4**(L-1)`` balls in ``outer`` and evaluates
    each with graded quadrature at level ``4 + L``.

    Raises
    ------
    ParameterError
        If ``r <= 1``.
    ContainmentError
        If ``inner`` is not compactly contained in ``outer``.
    """
    return _muck_run(f, r, inner, outer, levels, seed, "contained-in-outer", None, stable, growth,
                     base_balls, "A")


def global_muckenhoupt_constant(f: Callable, r: float, region: Domain, levels: int = 3, seed: int = 0,
                                stable: float = STABLE, growth: float = GROWTH,
                                base_balls: int = 32) -> ConditionReport:
    """A_r estimate with balls anywhere in R^N and averages over ``B ∩ region``.

    Balls are sampled to meet ``region``; their diameters range over five
    decades below the diameter of a box three times the size of ``region``.
    """
    bb = region.bounding_box()
    mid, half = bb.mean(axis=1), (bb[:, 1] - bb[:, 0]) / 2.0
    sampler = Domain.box(*[(m - 3 * h, m + 3 * h) for m, h in zip(mid, half)])
    return _muck_run(f, r, region, sampler, levels, seed, "intersecting-inner", region, stable, growth,
                     base_balls, "A_global")


# ---------------------------------------------------------------------------
# composite classification


def exponent_gate(p: float, q: float, smoothness: float, N: int) -> tuple[bool, str]:
    """Check ``q <= p + smoothness * max(1, p/N)`` and describe it."""
    bound = p + smoothness * max(1.0, p / N)
    ok = q <= bound + 1e-12
    return ok, f"q={q:g} <= p + (k+alpha)*max(1,p/N) = {p:g} + {smoothness:g}*{max(1.0, p / N):g} = {bound:g}: {ok}"


@dataclass
class WeightClassification:
    weight: str
    p: float
    q: float
    gate: bool
    gate_text: str
    decomposition: DecompositionField
    sigma_report: ConditionReport
    omega_report: ConditionReport

    def rows(self):
        yield ("gate", "", "", self.gate_text, "holds" if self.gate else "fails")
        for name, rep in (("sigma", self.sigma_report), ("omega", self.omega_report)):
            for level, est in rep.estimates:
                yield (f"{name}:{rep.condition}", rep.parameter, level, est, rep.verdict)


def classify_weight(w: Weight, p: float, q: float, inner: Domain, outer: Domain, levels: int = 3,
                    seed: int = 0, resolution: int = 1001) -> WeightClassification:
    """Gate check plus class verdicts for the two factors of ``w``.

    ``sigma`` is tested for Z^{k+alpha}; ``omega`` for A_r with
    ``r = max(q, k + alpha + 1)``.
    """
    if not 1 <= p <= q:
        raise ParameterError("need 1 <= p <= q")
    kappa = w.k + w.alpha
    ok, text = exponent_gate(p, q, kappa, w.N)
    field_ = decompose_on_grid(w, inner, resolution)

    def sig(x):
        return sigma_at(w, x)

    def om(x):
        return omega_at(w, x)

    zrep = z_constant(sig, kappa, inner, levels, seed)
    arep = muckenhoupt_constant(om, max(q, kappa + 1.0), inner, outer, levels, seed)
    return WeightClassification(w.name, p, q, ok, text, field_, zrep, arep)
