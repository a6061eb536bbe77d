"""Model instance and the characteristic polynomial of the Coulomb band.

The band strengths ``k`` and couplings ``g`` enter every closed-form result
only through the N real roots of

    g(y) = prod_j (y + k_j/2) - sum_j w_j prod_{m != j} (y + k_m/2),
    w_j = g_j**2 / (2 beta).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._dopri import njit
from .errors import ConfigError, RootIsolationFailure

ROOT_TOL = 1e-12
DUPLICATE_RTOL = 1e-12
BISECT_WIDTH = 1e-10
MAX_NEWTON = 5
COMPANION_IMAG_TOL = 1e-8
EPS = np.finfo(float).eps


def _frozen(values):
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Slope ``beta`` of level 0, Coulomb strengths ``k`` and couplings ``g``.

    Levels are reordered so that ``k`` is ascending; ``g`` follows its level.
    ``order`` maps the stored position back to the caller's original index.
    """

    beta: float
    k: np.ndarray
    g: np.ndarray
    order: tuple = field(default=(), compare=False)

    def __init__(self, beta, k, g):
        k = np.atleast_1d(np.asarray(k, dtype=float))
        g = np.atleast_1d(np.asarray(g, dtype=float))
        if k.ndim != 1 or g.ndim != 1 or k.size != g.size:
            raise ConfigError("k and g must be 1-d sequences of equal length")
        if k.size < 1:
            raise ConfigError("n_levels must be >= 1")
        beta = float(beta)
        if not math.isfinite(beta) or beta <= 0.0:
            raise ConfigError(f"beta must be positive and finite, got {beta!r}")
        if not (np.all(np.isfinite(k)) and np.all(np.isfinite(g))):
            raise ConfigError("k and g must be finite")
        order = np.argsort(k, kind="stable")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "k", _frozen(k[order]))
        object.__setattr__(self, "g", _frozen(g[order]))
        object.__setattr__(self, "order", tuple(int(i) for i in order))

    @property
    def n_levels(self):
        return int(self.k.size)

    @property
    def weights(self):
        """w_j = g_j**2 / (2 beta)."""
        return self.g**2 / (2.0 * self.beta)

    @property
    def decoupled(self):
        """Mask of levels with zero coupling."""
        return self.g == 0.0

    @property
    def degenerate(self):
        """True when two coupled levels share the same k (to relative 1e-12)."""
        return len(_clusters(self.k, ~self.decoupled)) < int(np.count_nonzero(~self.decoupled))

    def __repr__(self):
        return f"ModelParams(beta={self.beta!r}, k={self.k.tolist()!r}, g={self.g.tolist()!r})"


@dataclass(frozen=True)
class CharacteristicRoots:
    """Ascending real roots ``l`` of g(y) with xi_j = 1/2 + i l_j and h_j = 1/2 - i k_j/2."""

    l: np.ndarray
    xi: np.ndarray
    h: np.ndarray
    method: str = "bracket"

    @classmethod
    def from_roots(cls, roots, params, method="bracket"):
        l = np.sort(np.asarray(roots, dtype=float))
        l.flags.writeable = False
        xi = 0.5 + 1j * l
        xi.flags.writeable = False
        h = 0.5 - 0.5j * params.k
        h.flags.writeable = False
        return cls(l=l, xi=xi, h=h, method=method)


def _same(a, b):
    return abs(a - b) <= DUPLICATE_RTOL * max(1.0, abs(a), abs(b))


def _clusters(k, mask):
    """Group indices of ``mask``-selected levels whose k coincide."""
    groups = []
    for idx in np.flatnonzero(mask):
        if groups and _same(k[groups[-1][0]], k[idx]):
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    return groups


def _poly_from_roots(shifts):
    """Monic coefficients (highest first) of prod (y + s)."""
    coeffs = np.array([1.0])
    for s in shifts:
        coeffs = np.convolve(coeffs, [1.0, s])
    return coeffs


def build_char_poly(params):
    """Monic coefficients of g(y), highest power first, length N + 1."""
    half_k = params.k / 2.0
    w = params.weights
    coeffs = _poly_from_roots(half_k)
    for j in range(params.n_levels):
        rest = _poly_from_roots(np.delete(half_k, j))
        coeffs[1:] -= w[j] * rest
    return coeffs


def char_poly_value(params, y):
    """Evaluate g(y) in product-minus-sum form; ``y`` may be an array."""
    return _g_factored(np.asarray(y, dtype=float), params.k / 2.0, params.weights)[0]


def _g_factored(y, half_k, w):
    """Return g(y), the sum of absolute terms, and the full product prod(y + k/2)."""
    d = np.add.outer(np.atleast_1d(y), half_k)
    # leave-one-out products from prefix and suffix cumulative products
    pre = np.ones_like(d)
    suf = np.ones_like(d)
    np.cumprod(d[:, :-1], axis=1, out=pre[:, 1:])
    np.cumprod(d[:, :0:-1], axis=1, out=suf[:, -2::-1])
    loo = pre * suf
    full = loo[:, 0] * d[:, 0]
    value = full - loo @ w
    scale = np.abs(full) + np.abs(loo) @ np.abs(w)
    return value, scale, full


def _g_dual(y, half_k, w):
    """g(y) and g'(y) by forward-mode differentiation of the factored form."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    full, dfull = np.ones_like(y), np.zeros_like(y)
    tail, dtail = np.zeros_like(y), np.zeros_like(y)
    for hk, wj in zip(half_k, w):
        d = y + hk
        # tail accumulates sum_j w_j prod_{m<=current, m!=j} d_m
        tail, dtail = tail * d + wj * full, dtail * d + tail + wj * dfull
        full, dfull = full * d, dfull * d + full
    return full - tail, dfull - dtail


def root_residual(params, y):
    """Backward-error residual |g(y)| / (sum |terms| + |y g'(y)|) at each ``y``."""
    half_k, w = params.k / 2.0, params.weights
    value, scale, _ = _g_factored(np.asarray(y, dtype=float), half_k, w)
    _, deriv = _g_dual(y, half_k, w)
    denom = scale + np.abs(np.asarray(y) * deriv)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(value == 0.0, 0.0, np.abs(value) / denom)


def _reduced_model(params):
    """Split the roots into exactly-known ones and a reduced coupled problem.

    Decoupled levels contribute y = -k_j/2. A cluster of m coupled levels
    sharing k contributes (y + k/2)**(m-1) and one effective level with
    weight equal to the cluster's summed weight.
    """
    known = [-kj / 2.0 for kj in params.k[params.decoupled]]
    half_k, weights = [], []
    w = params.weights
    for group in _clusters(params.k, ~params.decoupled):
        kc = float(np.mean(params.k[group]))
        known.extend([-kc / 2.0] * (len(group) - 1))
        half_k.append(kc / 2.0)
        weights.append(float(np.sum(w[group])))
    return known, np.array(half_k), np.array(weights)


def _brackets(half_k, w):
    """One sign-change interval per root of the reduced (distinct, coupled) problem.

    Poles sit at -k_j/2. No root lies below -k_N/2; one lies between each
    adjacent pair of poles and the largest in (-k_1/2, -k_1/2 + sum(w)].
    """
    poles = np.sort(-half_k)
    top = poles[-1] + float(np.sum(w))
    # the bound is attained for N=1; nudge it so roundoff cannot flip the sign
    top += 1e-9 * max(1.0, abs(top))
    return poles, np.append(poles[1:], top)


@njit(cache=True)
def _bisect_secular(lo, hi, tol, half_k, w):
    """Midpoints of brackets bisected on the sign of 1 - sum w / (y + k/2)."""
    out = np.empty_like(lo)
    for i in range(lo.size):
        a, b = lo[i], hi[i]
        while b - a > tol[i]:
            mid = 0.5 * (a + b)
            if mid <= a or mid >= b:
                break
            total = 0.0
            for j in range(half_k.size):
                total += w[j] / (mid + half_k[j])
            if total > 1.0:
                a = mid
            else:
                b = mid
        out[i] = 0.5 * (a + b)
    return out


def _polish(lo, hi, half_k, w):
    """Vectorised bisection over all brackets followed by guarded Newton steps.

    Inside a bracket the product prod(y + k_m/2) has fixed sign, so the sign
    of g follows the secular function F(y) = 1 - sum w_j / (y + k_j/2), which
    is increasing between consecutive poles and shares the roots of g.
    """
    f_lo = _g_factored(lo, half_k, w)[0]
    f_hi = _g_factored(hi, half_k, w)[0]
    if np.any(np.sign(f_lo) * np.sign(f_hi) > 0):
        raise RootIsolationFailure("sign alternation broken by cancellation")
    tol = BISECT_WIDTH * np.maximum(1.0, np.maximum(np.abs(lo), np.abs(hi)))
    mid = _bisect_secular(lo, hi, tol, half_k, w)
    return _newton(mid, lo, hi, half_k, w)


def _newton(y, lo, hi, half_k, w):
    """Newton polish of each root written as y = p + delta, p its nearest pole.

    With F_i(y) = 1 - sum_{j != i} w_j / (y + k_j/2), a root satisfies
    h(delta) = delta * F_i(p + delta) - w_i = 0. Near the pole h is smooth and
    free of cancellation, so roots that hug a pole (tiny weights) keep full
    relative accuracy in delta. Steps stay inside the bracket and are kept
    only when they lower |h|.
    """
    poles = -half_k
    nearest = np.argmin(np.abs(np.subtract.outer(y, poles)), axis=1)
    p = poles[nearest]
    wi = w[nearest]
    other = np.ones((y.size, poles.size), dtype=bool)
    other[np.arange(y.size), nearest] = False
    offsets = np.subtract.outer(p, poles)
    d_lo, d_hi = lo - p, hi - p

    def secular(delta):
        # bisection midpoints may sit on or next to another pole
        with np.errstate(all="ignore"):
            inv = np.where(other, 1.0 / (delta[:, None] + offsets), 0.0)
            f = 1.0 - inv @ w
            h = delta * f - wi
            dh = f + delta * ((inv * inv) @ w)
            scale = np.abs(delta) * (1.0 + np.abs(inv) @ w) + wi
        return h, dh, scale

    delta = y - p
    h, dh, scale = secular(delta)
    for _ in range(MAX_NEWTON):
        done = np.abs(h) <= 4.0 * EPS * scale
        if np.all(done):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = delta - h / dh
        ok = ~done & np.isfinite(trial) & (trial >= d_lo) & (trial <= d_hi)
        trial = np.where(ok, trial, delta)
        ht, dht, st = secular(trial)
        better = ok & (np.abs(ht) < np.abs(h))
        if not np.any(better):
            break
        delta = np.where(better, trial, delta)
        h, dh, scale = (np.where(better, ht, h), np.where(better, dht, dh),
                        np.where(better, st, scale))
    return p + delta


def _companion_roots(params):
    known, half_k, w = _reduced_model(params)
    if not half_k.size:
        return np.sort(np.array(known, dtype=float))
    coeffs = _poly_from_roots(half_k)
    for j in range(half_k.size):
        coeffs[1:] -= w[j] * _poly_from_roots(np.delete(half_k, j))
    roots = np.roots(coeffs)
    if np.any(np.abs(roots.imag) > COMPANION_IMAG_TOL * np.maximum(1.0, np.abs(roots))):
        raise RootIsolationFailure(
            f"companion matrix produced complex roots: {roots!r}")
    y = np.sort(roots.real)
    # eigenvalues of clustered roots lose digits; polish on the factored form
    for _ in range(MAX_NEWTON):
        fy, dfy = _g_dual(y, half_k, w)
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = np.where(dfy != 0.0, y - fy / dfy, y)
        better = np.abs(_g_dual(trial, half_k, w)[0]) < np.abs(fy)
        y = np.where(better, trial, y)
    return np.sort(np.concatenate([known, y]))


def companion_roots(params):
    """Roots of g(y) from companion-matrix eigenvalues, Newton-polished.

    Deflated roots (decoupled levels, degenerate clusters) are taken exactly;
    only the reduced polynomial goes through the eigenvalue solve.
    """
    return _companion_roots(params)


def find_roots(params):
    """The N real roots of g(y), ascending, as a :class:`CharacteristicRoots`."""
    known, half_k, w = _reduced_model(params)
    if not half_k.size:
        return CharacteristicRoots.from_roots(known, params)
    lo, hi = _brackets(half_k, w)
    try:
        found = _polish(lo, hi, half_k, w)
    except RootIsolationFailure:
        found = None
    if found is not None:
        roots = np.concatenate([known, found])
        if np.all(root_residual(params, roots) <= ROOT_TOL):
            return CharacteristicRoots.from_roots(roots, params)
    return CharacteristicRoots.from_roots(_companion_roots(params), params, "companion")
