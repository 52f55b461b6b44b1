"""Weights of class C^{k,alpha} with derivative oracles, and the example catalog.

A weight carries a value oracle ``a(x)`` and a directional derivative oracle
``d(x, l, v) = D^l a(x)[v, ..., v]`` for orders ``l <= k``.  Catalog entries
use hand-written closed forms for every derivative.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import CatalogError, OrderError, ParameterError
from .geometry import Domain, as_points

__all__ = [
    "Weight",
    "Claim",
    "CatalogEntry",
    "derivative_norm",
    "catalog_get",
    "catalog_names",
    "holder_seminorm_estimate",
    "scaled_weight",
    "with_smoothness",
]

DIRECTION_START = 64
DIRECTION_TOL = 1e-3
DIRECTION_MAX = 1 << 14


@dataclass(frozen=True)
class Weight:
    """A nonnegative C^{k,alpha} weight.

    Attributes
    ----------
    name : str
    N : int
        Space dimension.
    k, alpha :
        Smoothness tag: the k-th derivative is alpha-Hölder.
    value : callable
        ``value(x)`` returns ``a(x)`` following the package field convention.
    derivative : callable
        ``derivative(x, l, v)`` returns ``D^l a(x)[v^l]`` for a unit vector ``v``.
    holder_constant : float or None
        ``[D^k a]_{C^{0,alpha}}`` when known in closed form, else ``None``.
    domain : Domain or None
        Domain of definition; ``None`` means all of R^N.
    """

    name: str
    N: int
    k: int
    alpha: float
    value: Callable
    derivative: Callable
    holder_constant: float | None = None
    domain: Domain | None = None

    def __post_init__(self):
        if self.k < 0:
            raise ParameterError("smoothness order k must be >= 0")
        if not 0 < self.alpha <= 1:
            raise ParameterError("Hölder exponent alpha must lie in (0, 1]")

    @property
    def smoothness(self) -> float:
        return self.k + self.alpha

    def __call__(self, x):
        return self.value(x)

    def d(self, x, order: int, v=None):
        """Directional derivative ``D^order a(x)[v^order]`` (``v`` defaults to e_1)."""
        if order > self.k:
            raise OrderError(f"order {order} exceeds smoothness k={self.k} of {self.name}")
        if order == 0:
            return np.asarray(self.value(x), dtype=float)
        if v is None:
            v = np.eye(self.N)[0]
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return np.asarray(self.derivative(x, order, v), dtype=float)


@dataclass(frozen=True)
class Claim:
    condition: str  # "Z" or "A"
    parameter: float
    verdict: str  # "bounded" or "diverging"
    provenance: str  # "known" (published example) or "derived" (closed form here)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    weight: Weight
    claims: tuple[Claim, ...] = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# derivative norms


def _hessian_2d(w: Weight, x) -> np.ndarray:
    """Symmetric 2x2 Hessians from three directional second derivatives."""
    e1, e2 = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    diag = np.array([1.0, 1.0]) / math.sqrt(2.0)
    h11 = w.d(x, 2, e1)
    h22 = w.d(x, 2, e2)
    hdd = w.d(x, 2, diag)
    h12 = hdd - 0.5 * (h11 + h22)
    H = np.empty(np.shape(h11) + (2, 2))
    H[..., 0, 0], H[..., 1, 1] = h11, h22
    H[..., 0, 1] = H[..., 1, 0] = h12
    return H


def derivative_norm(w: Weight, x, order: int) -> np.ndarray:
    """Operator norm ``sup_{|v|=1} |D^order a(x)[v^order]|``.

    Exact in one dimension and for second derivatives in two dimensions
    (largest absolute Hessian eigenvalue); otherwise the supremum is taken
    over equally spaced directions, doubling their number until the running
    maximum moves by less than 0.1 percent.

    Examples
    --------
    >>> w = catalog_get("power2n(1)").weight
    >>> float(derivative_norm(w, 3.0, 1))
    6.0
    """
    if order < 0:
        raise OrderError("derivative order must be >= 0")
    if order > w.k:
        raise OrderError(f"order {order} exceeds smoothness k={w.k} of {w.name}")
    if order == 0:
        return np.abs(np.asarray(w.value(x), dtype=float))
    if w.N == 1:
        return np.abs(w.d(x, order, np.array([1.0])))
    if order == 2:
        eig = np.linalg.eigvalsh(_hessian_2d(w, x))
        return np.max(np.abs(eig), axis=-1)
    n = DIRECTION_START
    best = None
    while n <= DIRECTION_MAX:
        theta = np.pi * np.arange(n) / n
        vals = [np.abs(w.d(x, order, np.array([np.cos(t), np.sin(t)]))) for t in theta]
        cur = np.max(np.stack(vals), axis=0)
        if best is not None:
            change = np.abs(cur - best) / np.maximum(np.abs(cur), 1e-300)
            if np.all(change < DIRECTION_TOL):
                return cur
        best = cur
        n *= 2
    return best


# ---------------------------------------------------------------------------
# helpers for building weights


def scaled_weight(w: Weight, factor: float) -> Weight:
    """The weight ``factor * a`` with the oracles wrapped accordingly."""
    if factor < 0:
        raise ParameterError("scale factor must be nonnegative")
    hc = None if w.holder_constant is None else factor * w.holder_constant
    return replace(
        w,
        name=f"{factor}*{w.name}",
        value=lambda x: factor * np.asarray(w.value(x), dtype=float),
        derivative=lambda x, l, v: factor * np.asarray(w.derivative(x, l, v), dtype=float),
        holder_constant=hc,
    )


def with_smoothness(w: Weight, k: int, alpha: float) -> Weight:
    """Same weight, relabelled with a different smoothness tag.

    The derivative oracle must support every order up to the new ``k``.
    """
    return replace(w, k=k, alpha=alpha, holder_constant=None if (k, alpha) != (w.k, w.alpha) else w.holder_constant)


def _radial_1d(value, derivs, name, k, alpha, holder=None) -> Weight:
    """Wrap 1D closed forms; ``derivs[l](t)`` is the l-th derivative."""

    def deriv(x, l, v):
        t = np.asarray(x, dtype=float)
        s = float(np.atleast_1d(v)[0])
        return derivs[l](t) * s**l

    return Weight(name, 1, k, alpha, value, deriv, holder)


def _power(n2: int, k: int, alpha: float, name: str) -> Weight:
    def value(x):
        return np.asarray(x, dtype=float) ** n2

    def make(l):
        if l > n2:
            return lambda t: np.zeros_like(np.asarray(t, dtype=float))
        c = math.factorial(n2) / math.factorial(n2 - l)
        return lambda t: c * np.asarray(t, dtype=float) ** (n2 - l)

    derivs = [make(l) for l in range(k + 1)]
    holder = None
    if k == n2 - 1 and alpha == 1.0:
        holder = float(math.factorial(n2))
    return _radial_1d(value, derivs, name, k, alpha, holder)


def _gauss_flat(k: int = 2, alpha: float = 1.0) -> Weight:
    # e^{-1/t^2} and its derivatives, exactly 0 at t = 0; below |t| = 0.03
    # every expression is far under the smallest double anyway.
    cut = 0.03

    def guard(expr):
        def f(t):
            t = np.asarray(t, dtype=float)
            out = np.zeros_like(t)
            m = np.abs(t) >= cut
            tm = t[m]
            out[m] = expr(tm) * np.exp(-1.0 / tm**2)
            return out

        return f

    derivs = [
        guard(lambda t: np.ones_like(t)),
        guard(lambda t: 2.0 / t**3),
        guard(lambda t: 4.0 / t**6 - 6.0 / t**4),
        guard(lambda t: 8.0 / t**9 - 36.0 / t**7 + 24.0 / t**5),
    ]
    return _radial_1d(derivs[0], derivs[: k + 1], "gauss_flat", k, alpha)


def _sin_factor(t):
    t = np.asarray(t, dtype=float)
    # where 1/t overflows every term has a t^2 factor that underflows to 0
    nz = np.abs(t) > 1.0 / np.finfo(float).max
    s = np.zeros_like(t)
    c = np.zeros_like(t)
    inv = 1.0 / t[nz]
    s[nz] = np.sin(inv)
    c[nz] = np.cos(inv)
    return t, s, c


def _sin6() -> Weight:
    def a0(t):
        t, s, _ = _sin_factor(t)
        return t**6 * s**2

    def a1(t):
        t, s, c = _sin_factor(t)
        return 6 * t**5 * s**2 - 2 * t**4 * s * c

    def a2(t):
        t, s, c = _sin_factor(t)
        return 30 * t**4 * s**2 - 20 * t**3 * s * c - 2 * t**2 * (s**2 - c**2)

    return _radial_1d(a0, [a0, a1, a2], "sin6", 2, 1.0)


def _sin6_omega_part() -> Weight:
    def a0(t):
        t, s, _ = _sin_factor(t)
        return t**2 * s**2

    return _radial_1d(a0, [a0], "sin6_omega_part", 0, 1.0)


def _abs_power(beta: float) -> Weight:
    if not beta > 0:
        raise CatalogError("abs_power needs beta > 0")
    k = int(math.ceil(beta)) - 1
    alpha = beta - k

    def make(l):
        c = 1.0
        for j in range(l):
            c *= beta - j

        def f(t):
            t = np.asarray(t, dtype=float)
            return c * np.abs(t) ** (beta - l) * np.sign(t) ** l

        return f

    derivs = [make(l) for l in range(k + 1)]
    holder = float(math.gamma(beta + 1)) if alpha == 1.0 else None
    return _radial_1d(derivs[0], derivs, f"abs_power({beta:g})", k, alpha, holder)


def _constant(c: float, k: int = 0, alpha: float = 1.0) -> Weight:
    if c < 0:
        raise CatalogError("constant weight must be nonnegative")

    def value(x):
        return np.full(np.shape(np.asarray(x, dtype=float)), float(c))

    def deriv(x, l, v):
        return np.zeros(np.shape(np.asarray(x, dtype=float)))

    return Weight(f"constant({c:g})", 1, k, alpha, value, deriv, 0.0)


def _holder_dist(alpha: float) -> Weight:
    # distance to the flat contact set [-1/4, 1/4], raised to alpha
    if not 0 < alpha <= 1:
        raise CatalogError("holder_dist needs alpha in (0, 1]")

    def value(x):
        t = np.asarray(x, dtype=float)
        return np.maximum(np.abs(t) - 0.25, 0.0) ** alpha

    return _radial_1d(value, [value], f"holder_dist({alpha:g})", 0, alpha, 1.0)


_NAME_RE = re.compile(r"^\s*([a-z0-9_]+)\s*(?:[(:]\s*([^)]*?)\s*\)?)?\s*$")


def catalog_names() -> list[str]:
    """Default names of the eight catalog entries."""
    return [
        "power2n(1)",
        "gauss_flat",
        "sin6",
        "sin6_sigma_part",
        "sin6_omega_part",
        "abs_power(1.5)",
        "constant(1)",
        "holder_dist(0.5)",
    ]


def _parse(name: str):
    m = _NAME_RE.match(name)
    if not m:
        raise CatalogError(f"malformed catalog name {name!r}")
    base, arg = m.group(1), m.group(2)
    try:
        val = float(arg) if arg not in (None, "") else None
    except ValueError as exc:
        raise CatalogError(f"bad parameter in {name!r}") from exc
    return base, val


def catalog_get(name: str) -> CatalogEntry:
    """Look up an example weight by name.

    Accepted names are ``power2n(n)``, ``gauss_flat``, ``sin6``,
    ``sin6_sigma_part``, ``sin6_omega_part``, ``abs_power(beta)``,
    ``constant(c)`` and ``holder_dist(alpha)``.  A colon may replace the
    parentheses, as in ``power2n:1``.

    Raises
    ------
    CatalogError
        For unknown names or invalid parameters.
    """
    base, val = _parse(name)
    if base == "power2n":
        n = 1 if val is None else val
        if n != int(n) or n < 1:
            raise CatalogError("power2n needs a positive integer n")
        n = int(n)
        w = _power(2 * n, 2 * n - 1, 1.0, f"power2n({n})")
        claims = (
            Claim("Z", 2 * n, "bounded", "derived"),
            Claim("Z", 2 * n + 0.5, "diverging", "derived"),
            Claim("A", 2 * n + 1.5, "bounded", "derived"),
            Claim("A", 2 * n + 0.9, "diverging", "derived"),
        )
        return CatalogEntry(w.name, w, claims)
    if base == "gauss_flat":
        w = _gauss_flat()
        claims = tuple(Claim("Z", k, "bounded", "known") for k in (1, 3, 6)) + tuple(
            Claim("A", r, "diverging", "known") for r in (2, 4, 8)
        )
        return CatalogEntry(w.name, w, claims)
    if base == "sin6":
        w = _sin6()
        return CatalogEntry(w.name, w, (Claim("Z", 3, "diverging", "known"), Claim("A", 4, "diverging", "known")))
    if base == "sin6_sigma_part":
        w = replace(_power(4, 2, 1.0, "sin6_sigma_part"), holder_constant=None)
        return CatalogEntry(w.name, w, (Claim("Z", 3, "bounded", "known"),))
    if base == "sin6_omega_part":
        w = _sin6_omega_part()
        return CatalogEntry(w.name, w, (Claim("A", 4, "bounded", "known"),))
    if base == "abs_power":
        beta = 1.5 if val is None else val
        w = _abs_power(beta)
        return CatalogEntry(w.name, w, (Claim("Z", beta, "bounded", "derived"), Claim("A", beta + 1.5, "bounded", "derived")))
    if base == "constant":
        c = 1.0 if val is None else val
        w = _constant(c)
        return CatalogEntry(w.name, w, (Claim("Z", 1, "bounded", "derived"), Claim("A", 2, "bounded", "derived")))
    if base == "holder_dist":
        alpha = 0.5 if val is None else val
        w = _holder_dist(alpha)
        return CatalogEntry(w.name, w, (Claim("Z", alpha, "bounded", "derived"), Claim("A", 2, "diverging", "derived")))
    raise CatalogError(f"unknown catalog weight {name!r}")


def constant_weight(c: float, k: int = 0, alpha: float = 1.0) -> Weight:
    """Constant weight with an arbitrary smoothness tag (all derivatives vanish)."""
    return _constant(c, k, alpha)


# ---------------------------------------------------------------------------
# Hölder seminorm


def _top_derivative_difference(w: Weight, x, y) -> np.ndarray:
    k = w.k
    if w.N == 1:
        return np.abs(w.d(x, k, np.array([1.0])) - w.d(y, k, np.array([1.0])))
    if k == 0:
        return np.abs(np.asarray(w.value(x)) - np.asarray(w.value(y)))
    if k == 2:
        diff = _hessian_2d(w, x) - _hessian_2d(w, y)
        return np.max(np.abs(np.linalg.eigvalsh(diff)), axis=-1)
    n = DIRECTION_START
    best = None
    while n <= DIRECTION_MAX:
        theta = np.pi * np.arange(n) / n
        vals = []
        for t in theta:
            v = np.array([np.cos(t), np.sin(t)])
            vals.append(np.abs(w.d(x, k, v) - w.d(y, k, v)))
        cur = np.max(np.stack(vals), axis=0)
        if best is not None and np.all(np.abs(cur - best) <= DIRECTION_TOL * np.maximum(cur, 1e-300)):
            return cur
        best = cur
        n *= 2
    return best


def holder_seminorm_estimate(w: Weight, region: Domain, pairs: int, seed: int = 0,
                             chunk: int = 100_000) -> float:
    """Monte-Carlo lower estimate of ``[D^k a]_{C^{0,alpha}}`` over ``region``.

    Pairs are drawn from a single stream, so a larger ``pairs`` extends the
    sample of a smaller one and the estimate never decreases.
    """
    if pairs < 1:
        raise ParameterError("pairs must be >= 1")
    rng = np.random.default_rng(seed)
    bb = region.bounding_box()
    best = 0.0
    done = 0
    while done < pairs:
        m = min(chunk, pairs - done)
        u = rng.uniform(size=(m, 2 * region.N))
        x = bb[:, 0] + u[:, : region.N] * (bb[:, 1] - bb[:, 0])
        y = bb[:, 0] + u[:, region.N:] * (bb[:, 1] - bb[:, 0])
        if region.kind == "ball":
            keep = region.contains(x) & region.contains(y)
            x, y = x[keep], y[keep]
        done += m
        dist = np.linalg.norm(x - y, axis=1)
        ok = dist > 0
        if not np.any(ok):
            continue
        xs, ys = (x[ok, 0], y[ok, 0]) if region.N == 1 else (x[ok], y[ok])
        num = _top_derivative_difference(w, xs, ys)
        best = max(best, float(np.max(num / dist[ok] ** w.alpha)))
    return best


def finite_difference(w: Weight, x, order: int, v=None, step: float = 1e-4) -> np.ndarray:
    """Central difference of the order-1 oracle (or of ``a`` itself) along ``v``.

    Used as the independent check of the closed-form derivative oracles:
    ``D^order a[v^order]`` is approximated by differencing
    ``D^{order-1} a[v^{order-1}]``.
    """
    if v is None:
        v = np.eye(w.N)[0]
    v = np.asarray(v, dtype=float)
    pts = as_points(x, w.N)
    shift = step * v
    if w.N == 1:
        xp, xm = pts[:, 0] + shift[0], pts[:, 0] - shift[0]
    else:
        xp, xm = pts + shift, pts - shift
    return (w.d(xp, order - 1, v) - w.d(xm, order - 1, v)) / (2.0 * step)
