"""Closed-form transition probabilities for a linear level crossing a Coulomb band.

Every result depends on the model only through the real roots l_j of the
characteristic polynomial, xi_j = 1/2 + i l_j and h_j = 1/2 - i k_j/2.
Times ``t`` here are the t = tau**2 / 2 of the propagator.

Products of exponentials and Gamma functions are accumulated as logarithms
so that e^{pi k} factors do not overflow for large k.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (DegeneracyError, DegenerateRootError, ProbabilityRangeError,
                     SingularMatrixError)
from .model import DUPLICATE_RTOL, find_roots
from .special import log_gamma

PROB_SLACK = 1e-10
ROOT_SEPARATION = 1e-8
ZETA_COND_LIMIT = 1e12
LOG_TWO_PI = math.log(2.0 * math.pi)


def _log1pexp(x):
    """log(1 + e^x) without overflow."""
    return np.logaddexp(0.0, x)


def _log_expm1_ratio(y):
    """log((e^{2 pi y} - 1) / y), finite through y = 0."""
    if abs(y) < 1e-9:
        return LOG_TWO_PI + math.pi * y
    if y > 0:
        return 2.0 * math.pi * y + math.log(-math.expm1(-2.0 * math.pi * y)) - math.log(y)
    return math.log(-math.expm1(2.0 * math.pi * y)) - math.log(-y)


def _log_x_over_sinh(x):
    """log(pi x / sinh(pi x)) = log |Gamma(1 + i x)|^2."""
    ax = math.pi * abs(x)
    if ax < 1e-8:
        return 0.0
    return math.log(2.0 * ax) - ax - math.log(-math.expm1(-2.0 * ax))


def _probability(raw, name):
    if not (-PROB_SLACK <= raw <= 1.0 + PROB_SLACK) or math.isnan(raw):
        raise ProbabilityRangeError(f"{name} = {raw!r} lies outside [0, 1]")
    return min(1.0, max(0.0, raw))


def _roots(params, roots):
    return find_roots(params) if roots is None else roots


def _distinct_k(params):
    k = params.k
    for a, b in zip(k[:-1], k[1:]):
        if abs(b - a) <= DUPLICATE_RTOL * max(1.0, abs(a), abs(b)):
            raise DegeneracyError(f"duplicate Coulomb strengths k = {a!r}")


# --- survival probability -------------------------------------------------

def survival_probability(params, roots=None):
    """P00 = prod_j (e^{-2 pi l_j} + 1) / (e^{pi k_j} + 1)."""
    l = _roots(params, roots).l
    log_p = np.sum(_log1pexp(-2.0 * np.pi * l) - _log1pexp(np.pi * params.k))
    return _probability(float(np.exp(log_p)), "P00")


def p00_degenerate(params):
    """Survival probability for a degenerate band, all k_j equal to k."""
    k = params.k
    if not np.all(np.abs(k - k[0]) <= DUPLICATE_RTOL * max(1.0, abs(k[0]))):
        raise DegeneracyError("p00_degenerate needs all k_j equal")
    kc = float(np.mean(k))
    total = float(np.sum(params.g ** 2)) / params.beta
    log_p = _log1pexp(math.pi * (kc - total)) - _log1pexp(math.pi * kc)
    return _probability(math.exp(log_p), "P00")


def degenerate_lower_bound(k):
    """1 / (e^{pi k} + 1), approached as the total coupling grows."""
    return math.exp(-_log1pexp(math.pi * k))


def degenerate_bound_margin(params):
    """log(P00 / lower bound) = log(1 + e^{pi (k - sum g^2/beta)}) for a degenerate band.

    Stays positive and representable after the two probabilities themselves
    have become equal in double precision.
    """
    p00_degenerate(params)
    kc = float(np.mean(params.k))
    total = float(np.sum(params.g ** 2)) / params.beta
    return float(_log1pexp(math.pi * (kc - total)))


class CrossingApproximation(NamedTuple):
    value: float
    separation_ratio: float


def p00_independent_crossings(params):
    """Product of two-level survival probabilities, one per band level.

    Valid when |k_i - k_j| >> g_s^2 / beta. ``separation_ratio`` is
    min |k_i - k_j| * beta / max g_s^2 (inf for N = 1 or zero coupling).
    """
    k, g2 = params.k, params.g ** 2
    log_p = np.sum(_log1pexp(np.pi * (k - g2 / params.beta)) - _log1pexp(np.pi * k))
    gmax2 = float(np.max(g2))
    if params.n_levels < 2 or gmax2 == 0.0:
        ratio = math.inf
    else:
        ratio = float(np.min(np.diff(k))) * params.beta / gmax2
    return CrossingApproximation(_probability(float(np.exp(log_p)), "P00"), ratio)


# --- three-level (N = 2) closed forms ---------------------------------------

def _require_n2(params):
    if params.n_levels != 2:
        raise ValueError(f"N = 2 formula applied to N = {params.n_levels}")


def n2_roots(params):
    """Explicit roots (l1, l2) of the quadratic characteristic polynomial, l1 >= l2."""
    _require_n2(params)
    beta = params.beta
    k1, k2 = params.k
    g1s, g2s = params.g ** 2
    k_plus, k_minus = k1 + k2, k1 - k2
    g_plus, g_minus = g1s + g2s, g1s - g2s
    # g+^2 + beta k- (beta k- - 2 g-) rewritten as a sum of squares
    disc = (beta * k_minus - g_minus) ** 2 + 4.0 * g1s * g2s
    assert disc >= 0.0
    root = math.sqrt(disc)
    b = g_plus - beta * k_plus
    # pick the branch without cancellation, the other from the product of roots
    big = (b + math.copysign(root, b)) / (4.0 * beta) if b != 0.0 else root / (4.0 * beta)
    product = k1 * k2 / 4.0 - (g1s * k2 + g2s * k1) / (4.0 * beta)
    small = product / big if big != 0.0 else (b - root) / (4.0 * beta)
    return (big, small) if big >= small else (small, big)


class ThreeLevel(NamedTuple):
    p00: float
    p10: float
    p20: float


def n2_probabilities(params, roots=None):
    """(P00, P10, P20): probabilities to end in level 0 from level 0, 1 and 2."""
    _require_n2(params)
    _distinct_k(params)
    if roots is None:
        l1, l2 = n2_roots(params)
    else:
        l2, l1 = roots.l
    beta = params.beta
    k1, k2 = params.k
    g1s, g2s = params.g ** 2
    log_decay = -math.pi * (g1s + g2s) / beta

    p00 = math.exp(sum(_log1pexp(-2.0 * math.pi * l) for l in (l1, l2))
                   - _log1pexp(math.pi * k1) - _log1pexp(math.pi * k2))

    def from_band(gs, ka, kb):
        # (gs / 2 beta) (kb - ka)/2 / prod_s (ka/2 + l_s)
        #   * prod_s (e^{pi(ka + 2 l_s)} - 1) / ((e^{-pi ka} - e^{-pi kb})(e^{pi ka} + 1))
        # regrouped into positive factors
        if gs == 0.0:
            return 0.0
        gap = kb - ka
        log_gap = math.log(abs(gap)) - (-math.pi * min(ka, kb)
                                        + math.log(-math.expm1(-math.pi * abs(gap))))
        log_val = (math.log(gs / (2.0 * beta)) - math.log(2.0) + log_gap
                   + sum(_log_expm1_ratio(ka / 2.0 + l) for l in (l1, l2))
                   + log_decay - _log1pexp(math.pi * ka))
        return math.exp(log_val)

    return ThreeLevel(_probability(p00, "P00"),
                      _probability(from_band(g1s, k1, k2), "P10"),
                      _probability(from_band(g2s, k2, k1), "P20"))


# --- band-initialised evolution ---------------------------------------------

@dataclass(frozen=True)
class BandCoefficients:
    """Weights c_{r,q} of the solutions that start with unit population in level q.

    ``gamma_matrix[m-1, r-1]`` holds gamma_{m,r}; column r of ``zeta`` is
    V^{-1} gamma_{., r} with V the Vandermonde matrix of k_j - i.
    """

    q: int
    c: np.ndarray
    gamma_matrix: np.ndarray
    zeta: np.ndarray
    residual: float = field(default=0.0, compare=False)


def _log_gamma_prefactor(params, roots, r):
    """log of Gamma(h_r)^{-1} prod_s Gamma(1+h_r-xi_s)/Gamma(1+h_r-h_s) (beta i)^{h_r}."""
    h, xi = roots.h, roots.xi
    hr = h[r]
    total = -log_gamma(hr)
    for s in range(params.n_levels):
        total += log_gamma(1.0 + hr - xi[s])
        if s != r:
            total -= log_gamma(1.0 + hr - h[s])
    # small-t scale of the Meijer solution with argument beta i t
    total += hr * (math.log(params.beta) + 0.5j * math.pi)
    return total


def gamma_coefficients(params, roots=None, method="closed"):
    """Matrix gamma_{m,r} = 2^{m-1/2} i^m (h_r - 1)^{m-1} times the prefactor above.

    ``method="stirling"`` builds (h_r - 1)^{m-1} h_r as the Stirling-number
    sum over falling factorials instead of the closed power.
    """
    from .special import falling_factorial, stirling2

    roots = _roots(params, roots)
    n = params.n_levels
    out = np.empty((n, n), dtype=complex)
    for r in range(n):
        pref = cmath.exp(_log_gamma_prefactor(params, roots, r))
        hr = complex(roots.h[r])
        for m in range(1, n + 1):
            if method == "closed":
                power = (hr - 1.0) ** (m - 1)
            elif method == "stirling":
                # (t d/dt)^{m-1} d/dt t^h = sum_j S(m-1, j) (h)_{j+1} t^{h-1}
                power = sum(stirling2(m - 1, j) * falling_factorial(hr, j + 1)
                            for j in range(m)) / hr
            else:
                raise ValueError(f"unknown method {method!r}")
            out[m - 1, r] = 2.0 ** (m - 0.5) * 1j ** m * power * pref
    return out


def vandermonde(params):
    """V[m-1, j] = (k_j - i)^{m-1}."""
    nodes = params.k - 1j
    return np.vander(nodes, params.n_levels, increasing=True).T


def band_coefficients(params, roots=None, q=1):
    """Coefficients c_{r,q} (r = 1..N) for unit initial population in band level q."""
    _distinct_k(params)
    n = params.n_levels
    if not 1 <= q <= n:
        raise ValueError(f"q={q} outside 1..{n}")
    roots = _roots(params, roots)
    gam = gamma_coefficients(params, roots)
    zeta = np.linalg.solve(vandermonde(params), gam)
    scaled = zeta / np.linalg.norm(zeta, axis=0)
    cond = np.linalg.cond(scaled)
    if not np.isfinite(cond) or cond > ZETA_COND_LIMIT:
        raise SingularMatrixError(f"zeta matrix condition number {cond:.3e}")
    rhs = np.zeros(n, dtype=complex)
    rhs[q - 1] = params.g[q - 1]
    c = np.linalg.solve(zeta, rhs)
    residual = float(np.max(np.abs(zeta @ c - rhs)) / max(abs(rhs[q - 1]), 1e-300))
    c.flags.writeable = False
    return BandCoefficients(q=q, c=c, gamma_matrix=gam, zeta=zeta, residual=residual)


def _log_pq0_prefactor(params):
    return -math.pi * float(np.sum(params.g ** 2)) / (2.0 * params.beta)


def pq0_asymptote(coeffs, params, t):
    """Instantaneous |b0(t)|^2 ~ e^{-pi sum g^2/2beta} |sum_r c_r t^{i k_r/2} e^{pi k_r/2}|^2."""
    if t <= 0:
        raise ValueError("t must be positive")
    if not np.any(coeffs.c):
        return 0.0
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(coeffs.c)) + 0.5 * np.pi * params.k
    shift = float(np.max(logs))
    phases = np.angle(coeffs.c) + 0.5 * params.k * math.log(t)
    total = np.sum(np.exp(logs - shift + 1j * phases))
    return math.exp(2.0 * shift + _log_pq0_prefactor(params)) * abs(total) ** 2


def pq0_time_average(coeffs, params):
    """Mean of :func:`pq0_asymptote` over log t: cross terms between distinct k drop out."""
    if not np.any(coeffs.c):
        return 0.0
    with np.errstate(divide="ignore"):
        logs = 2.0 * np.log(np.abs(coeffs.c)) + np.pi * params.k
    shift = float(np.max(logs))
    raw = math.exp(shift + _log_pq0_prefactor(params)) * float(np.sum(np.exp(logs - shift)))
    return _probability(raw, f"P{coeffs.q}0")


def pq0_direct(params, roots=None, q=1):
    """P_q0 from the single solution that excites only level q.

    |Gamma|^2 of the imaginary-argument factors reduces to elementary
    functions:

        (g_q^2/2beta) e^{-pi sum g^2/2beta} e^{pi k_q/2} (pi / cosh(pi k_q/2))
        * prod_{s != q} |Gamma(1 + i(k_s-k_q)/2)|^2 / prod_s |Gamma(1 - i(k_q/2 + l_s))|^2
    """
    _distinct_k(params)
    roots = _roots(params, roots)
    i = q - 1
    kq, gq = params.k[i], params.g[i]
    if gq == 0.0:
        return 0.0
    log_val = (math.log(gq * gq / (2.0 * params.beta)) + _log_pq0_prefactor(params)
               + 0.5 * math.pi * kq + math.log(2.0 * math.pi) - math.pi * abs(kq) / 2.0
               - _log1pexp(-math.pi * abs(kq)))
    for s in range(params.n_levels):
        if s != i:
            log_val += _log_x_over_sinh((params.k[s] - kq) / 2.0)
        log_val -= _log_x_over_sinh(kq / 2.0 + roots.l[s])
    return _probability(math.exp(log_val), f"P{q}0")


# --- band populations after level-0 start -----------------------------------

def _p0j_terms(params, roots, j):
    """Prefactor log and the N complex summands of the P0j asymptote (t-independent parts)."""
    n = params.n_levels
    l, xi, h = roots.l, roots.xi, roots.h
    for s in range(n):
        for r in range(s + 1, n):
            if abs(xi[s] - xi[r]) < ROOT_SEPARATION:
                raise DegenerateRootError(
                    f"roots l_{s + 1} and l_{r + 1} coincide; the asymptote has a pole")
    jj = j - 1
    log_q = sum(log_gamma(0.5 + 0.5j * kk) - log_gamma(1.0 - x)
                for kk, x in zip(params.k, xi))
    log_pref = 2.0 * (log_q.real + math.log(abs(params.g[jj]))) - math.log(2.0 * params.beta)
    terms = []
    for s in range(n):
        # 1 / Gamma(0) = 0 when a root sits exactly on -k_r/2
        if any(r != jj and xi[s] - h[r] == 0 for r in range(n)):
            continue
        log_term = (-0.5 * math.pi * l[s] + log_gamma(1.0 - xi[s])
                    - log_gamma(1.0 + xi[s] - h[jj]))
        for r in range(n):
            if r != s:
                log_term += log_gamma(xi[s] - xi[r])
            if r != jj:
                log_term -= log_gamma(xi[s] - h[r])
        terms.append((l[s], log_term))
    return log_pref, terms


def p0j_asymptote(params, roots=None, j=1, t=1.0):
    """Large-t population |a_j(t)|^2 of band level j after starting in level 0.

    The sum over roots carries phases (beta t)^{i l_s}, so the value keeps
    oscillating in log t instead of converging.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if params.g[j - 1] == 0.0:
        return 0.0
    roots = _roots(params, roots)
    log_pref, terms = _p0j_terms(params, roots, j)
    if not terms:
        return 0.0
    log_bt = math.log(params.beta * t)
    logs = [lt + 1j * ls * log_bt for ls, lt in terms]
    shift = max(z.real for z in logs)
    total = sum(cmath.exp(z - shift) for z in logs)
    return math.exp(log_pref + 2.0 * shift) * abs(total) ** 2


def p0j_log_average(params, roots=None, j=1):
    """Mean of :func:`p0j_asymptote` over log t (distinct roots: no cross terms)."""
    if params.g[j - 1] == 0.0:
        return 0.0
    roots = _roots(params, roots)
    log_pref, terms = _p0j_terms(params, roots, j)
    return float(sum(math.exp(log_pref + 2.0 * lt.real) for _, lt in terms))


# --- report ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProbabilityReport:
    """Analytic probabilities for one instance.

    ``p0j[j-1](t)`` evaluates the band-level asymptote at time t;
    ``pq0_avg[q-1]`` is the long-time P_q0 (None when k has duplicates).
    """

    p00: float
    p0j: tuple
    pq0_avg: tuple | None
    provenance: dict


def report(params, roots=None):
    roots = _roots(params, roots)
    p00 = survival_probability(params, roots)
    evaluators = tuple(
        (lambda t, j=j: p0j_asymptote(params, roots, j, t))
        for j in range(1, params.n_levels + 1))
    provenance = {"p00": "survival_probability", "p0j": "p0j_asymptote"}
    try:
        _distinct_k(params)
    except DegeneracyError:
        pq0 = None
        provenance["pq0_avg"] = "unavailable: duplicate k"
    else:
        pq0 = tuple(pq0_time_average(band_coefficients(params, roots, q), params)
                    for q in range(1, params.n_levels + 1))
        provenance["pq0_avg"] = "pq0_time_average(band_coefficients)"
    return ProbabilityReport(p00=p00, p0j=evaluators, pq0_avg=pq0, provenance=provenance)
